#include "degnse/hormander.hpp"

#include "degnse/nonlinearity.hpp"
#include "degnse/variational.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <stdexcept>

namespace degnse {

bool certificate_valid(const PairCertificate& c, int N0, int N) {
  if (c.l.is_zero() || c.m.is_zero() || c.k.is_zero()) return false;
  const ModeIndex rhs = c.sign > 0 ? c.l + c.m : c.l - c.m;
  if (!(rhs == c.k)) return false;
  if (c.k.sup_norm() > N0) return false;
  for (const auto& v : {c.l, c.m})
    if (v.sup_norm() <= N0 || v.sup_norm() > N) return false;
  if (c.l.norm2() == c.m.norm2()) return false;
  const long cx = static_cast<long>(c.l.k2) * c.m.k3 - static_cast<long>(c.l.k3) * c.m.k2;
  const long cy = static_cast<long>(c.l.k3) * c.m.k1 - static_cast<long>(c.l.k1) * c.m.k3;
  const long cz = static_cast<long>(c.l.k1) * c.m.k2 - static_cast<long>(c.l.k2) * c.m.k1;
  return cx != 0 || cy != 0 || cz != 0;
}

DecompositionResult decomposition_search(int N0, int N_limit) {
  if (N0 < 1) throw std::invalid_argument("decomposition_search: N0 must be >= 1");
  if (N_limit <= 0) N_limit = N0 + 6;
  const auto lows = enumerate_modes(N0);
  for (int N = N0 + 1; N <= N_limit; ++N) {
    const auto shell = enumerate_modes(N0, Window::High, N);
    DecompositionResult res{N0, N, {}};
    bool all = true;
    for (const auto& k : lows) {
      bool found = false;
      PairCertificate best;
      long best_cost = 0;
      for (const auto& l : shell)
        for (int sign : {+1, -1}) {
          PairCertificate c{k, l, sign > 0 ? k - l : l - k, sign};
          if (!certificate_valid(c, N0, N)) continue;
          long cost = c.l.norm2() + c.m.norm2();
          if (!found || cost < best_cost) {
            best = c;
            best_cost = cost;
            found = true;
          }
        }
      if (!found) {
        all = false;
        break;
      }
      res.certificates.push_back(best);
    }
    if (all) return res;
  }
  throw std::runtime_error("decomposition_search: no certificate set up to N_limit");
}

SpectralField drift_field_X01(const SpectralField& y, const ModelSpec& spec) {
  const double r = sobolev_norm(y, spec.noise.w_alpha());
  SpectralField out = apply_stokes(y);
  const double c = chi(r / (3.0 * spec.cutoff.rho));
  if (c != 0.0) {
    SpectralField b = mollify_high(convective_term(y), spec.N, spec.cutoff.delta);
    b *= c;
    out += b;
  }
  return out;
}

SpectralField drift_field_X02(const SpectralField& y, const ModelSpec& spec) {
  SpectralField out = SpectralField::zero_like(y);
  const double a = spec.noise.w_alpha();
  const double r = sobolev_norm(y, a);
  if (r == 0.0) return out;
  const double rho = spec.cutoff.rho;
  const double f = chi_prime(r / rho) * (1.0 - chi(r / rho)) / (2.0 * rho);
  if (f == 0.0) return out;
  const auto& t = y.trunc();
  for (int j = 0; j < t.size(); ++j) {
    if (t.sup_norm(j) > spec.noise.N0) continue;
    const double wk = std::pow(t.norm2(j), a);
    out.coeffs()[2 * j] = f * wk * y.coeffs()[2 * j] / r;
    out.coeffs()[2 * j + 1] = f * wk * y.coeffs()[2 * j + 1] / r;
  }
  return out;
}

SpectralField drift_field_X0(const SpectralField& y, const ModelSpec& spec) {
  return drift_field_X01(y, spec) + drift_field_X02(y, spec);
}

double generator_amplitude(const SpectralField& y, int component, const ModelSpec& spec) {
  const ModeIndex& k = y.trunc().mode(component / 2);
  if (k.sup_norm() > spec.noise.N0) return spec.noise.q(k);
  const double r = sobolev_norm(y, spec.noise.w_alpha());
  return (1.0 - chi(r / spec.cutoff.rho)) * spec.noise.q_bar(k);
}

namespace {

SpectralField low_part(const SpectralField& f, int N) { return project_window(f, N, Window::Low); }

SpectralField directional(const FieldMap& F, const SpectralField& y, const SpectralField& v, double eps) {
  const double nv = v.coeffs().norm();
  if (nv == 0.0) return SpectralField::zero_like(y);
  const double h = eps / nv;
  auto central = [&](double s) {
    SpectralField d = F(y + s * v) - F(y + (-s) * v);
    d *= 1.0 / (2.0 * s);
    return d;
  };
  SpectralField d1 = central(h), d2 = central(0.5 * h);
  SpectralField out = 4.0 * d2 - d1;
  out *= 1.0 / 3.0;
  return out;
}

SpectralField unit(const SpectralField& like, int comp) {
  SpectralField e = SpectralField::zero_like(like);
  e.coeffs()[comp] = 1.0;
  return e;
}

}  // namespace

SpectralField bracket_L(const FieldMap& X, const FieldMap& K, const SpectralField& y, int N, double eps) {
  SpectralField Xy = X(y);
  SpectralField Ky = low_part(K(y), N);
  SpectralField a = directional(K, y, Xy, eps);
  SpectralField b = directional([&](const SpectralField& z) { return low_part(X(z), N); }, y, Ky, eps);
  return low_part(a - b, N);
}

std::vector<int> generator_components(const ModelSpec& spec) {
  return window_components(*Truncation::get(spec.N_max), spec.N);
}

std::vector<std::pair<int, int>> certificate_pairs(const DecompositionResult& d, const ModelSpec& spec) {
  const auto t = Truncation::get(spec.N_max);
  const auto gens = generator_components(spec);
  std::vector<int> pos(t->dim(), -1);
  for (size_t i = 0; i < gens.size(); ++i) pos[gens[i]] = static_cast<int>(i);
  std::vector<std::pair<int, int>> out;
  for (const auto& c : d.certificates) {
    // e_l and e_{-l} carry the two parities; both are needed to reach e_k and e_{-k}.
    for (const ModeIndex& l : {c.l, -c.l})
      for (const ModeIndex& m : {c.m, -c.m}) {
        int jl = t->index(l), jm = t->index(m);
        if (jl < 0 || jm < 0 || pos[2 * jl] < 0 || pos[2 * jm] < 0)
          throw std::invalid_argument("certificate_pairs: certificate modes outside the bracket level N");
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            out.emplace_back(pos[2 * jl + i], pos[2 * jm + j]);
            out.emplace_back(pos[2 * jm + j], pos[2 * jl + i]);
          }
      }
  }
  return out;
}

namespace {

// Everything at a fixed y needed by the analytic bracket formulas.
struct Engine {
  const ModelSpec& spec;
  SystemOptions opts;
  std::shared_ptr<const Truncation> t;
  std::vector<int> gens;
  std::vector<int> pos;
  int M = 0;
  Eigen::VectorXd w;  // W weights, full
  SpectralField y;
  double r = 0, rho = 0;
  Eigen::VectorXd n;  // W-gradient of |y|_W, full
  double c3 = 0, c3p = 0, c3pp = 0, gp = 0, gpp = 0;
  bool shell = false;  // X02 may be nonzero near y
  Eigen::VectorXd X0, By;
  double sigma = 0;
  std::vector<double> amp, beta, dbeta;
  std::vector<Eigen::VectorXd> Bsym;  // low part of B(e_j,y) + B(y,e_j)
  std::vector<Eigen::VectorXd> DX0;   // full
  std::vector<Eigen::VectorXd> K1;    // low

  Engine(const SpectralField& yy, const ModelSpec& s, const SystemOptions& o)
      : spec(s), opts(o), t(yy.trunc_ptr()), gens(generator_components(s)), y(yy) {
    M = static_cast<int>(gens.size());
    pos.assign(t->dim(), -1);
    for (int i = 0; i < M; ++i) pos[gens[i]] = i;
    const double a = spec.noise.w_alpha();
    w = sobolev_weights(*t, a);
    rho = spec.cutoff.rho;
    r = sobolev_norm(y, a);
    n = r > 0 ? Eigen::VectorXd(w.cwiseProduct(y.coeffs()) / r) : Eigen::VectorXd::Zero(t->dim());
    c3 = chi(r / (3 * rho));
    c3p = chi_prime(r / (3 * rho));
    c3pp = chi_second(r / (3 * rho));
    gp = -chi_prime(r / rho);
    gpp = -chi_second(r / rho);
    shell = opts.with_X02 && r > 0.5 * rho && r < 2.5 * rho;

    X0 = Eigen::VectorXd::Zero(t->dim());
    By = Eigen::VectorXd::Zero(t->dim());
    if (opts.with_X01) {
      X0 += drift_field_X01(y, spec).coeffs();
      if (c3 != 0 || c3p != 0) By = mollify_high(convective_term(y), spec.N, spec.cutoff.delta).coeffs();
    }
    if (opts.with_X02) X0 += drift_field_X02(y, spec).coeffs();
    sigma = r > 0 ? w.cwiseProduct(y.coeffs()).dot(X0) / r : 0.0;

    amp.resize(M);
    beta.resize(M);
    dbeta.resize(M);
    for (int i = 0; i < M; ++i) {
      const ModeIndex& k = t->mode(gens[i] / 2);
      if (k.sup_norm() <= spec.noise.N0) {
        const double qb = spec.noise.q_bar(k);
        amp[i] = (1.0 - chi(r / rho)) * qb;
        beta[i] = qb * gp / rho;
        dbeta[i] = qb * gpp / (rho * rho);
      } else {
        amp[i] = spec.noise.q(k);
        beta[i] = dbeta[i] = 0.0;
      }
    }

    Bsym.resize(M);
    DX0.resize(M);
    K1.resize(M);
    for (int i = 0; i < M; ++i) {
      const int c = gens[i];
      Eigen::VectorXd d = Eigen::VectorXd::Zero(t->dim());
      Bsym[i] = Eigen::VectorXd::Zero(M);
      if (opts.with_X01) {
        d[c] += t->norm2(c / 2);
        if (c3 != 0 || c3p != 0) {
          SpectralField e = unit(y, c);
          SpectralField bs = bilinear_term(e, y) + bilinear_term(y, e);
          Bsym[i] = low(bs.coeffs());
          d += c3 * mollify_high(bs, spec.N, spec.cutoff.delta).coeffs() + (c3p / (3 * rho)) * n[c] * By;
        }
      }
      if (shell) d += dX02(c);
      DX0[i] = d;
      Eigen::VectorXd k1 = -amp[i] * low(d);
      k1[i] += beta[i] * sigma;
      K1[i] = k1;
    }
  }

  Eigen::VectorXd low(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(M);
    for (int i = 0; i < M; ++i) out[i] = full[gens[i]];
    return out;
  }

  double w_inner_low(const Eigen::VectorXd& lowv, const Eigen::VectorXd& full) const {
    double s = 0;
    for (int i = 0; i < M; ++i) s += w[gens[i]] * lowv[i] * full[gens[i]];
    return s;
  }

  Eigen::VectorXd X02_at(const Eigen::VectorXd& c) const {
    return drift_field_X02(SpectralField(t, c), spec).coeffs();
  }

  double fd_step() const { return opts.fd_eps * std::max(r, 1e-300); }

  Eigen::VectorXd dX02(int c) const {
    const double h = fd_step();
    auto central = [&](double s) {
      Eigen::VectorXd p = y.coeffs(), m = y.coeffs();
      p[c] += s;
      m[c] -= s;
      return Eigen::VectorXd((X02_at(p) - X02_at(m)) / (2 * s));
    };
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }

  Eigen::VectorXd d2X02_low(int c1, int c2) const {
    const double h = fd_step();
    auto mixed = [&](double s) {
      auto at = [&](double a, double b) {
        Eigen::VectorXd z = y.coeffs();
        z[c1] += a;
        z[c2] += b;
        return X02_at(z);
      };
      return Eigen::VectorXd((at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4 * s * s));
    };
    return low((4.0 * mixed(0.5 * h) - mixed(h)) / 3.0);
  }

  // pi_N [B(e_a, e_b) + B(e_b, e_a)] on low coordinates, from the pair table
  Eigen::VectorXd sym_pair(int a, int b) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(M);
    const int ja = gens[a] / 2, jb = gens[b] / 2;
    const Vec3 ua = gens[a] % 2 ? t->x2(ja) : t->x1(ja);
    const Vec3 ub = gens[b] % 2 ? t->x2(jb) : t->x1(jb);
    const double kappa = raw_to_normalized();
    for (const auto& pi : {pair_interaction(t->mode(ja), ua, t->mode(jb), ub),
                           pair_interaction(t->mode(jb), ub, t->mode(ja), ua)})
      for (const auto& e : pi.emissions) {
        if (e.target.sup_norm() > spec.N) continue;
        const int j = t->index(e.target);
        out[pos[2 * j]] += kappa * t->x1(j).dot(e.coeff);
        out[pos[2 * j + 1]] += kappa * t->x2(j).dot(e.coeff);
      }
    return out;
  }

  // [K0_l, K1_m]_L at y
  Eigen::VectorXd K2(int l, int m) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(M);
    const int cl = gens[l], cm = gens[m];
    if (amp[l] != 0.0) {
      const double nl = n[cl], nm = n[cm];
      const double Dbeta = dbeta[m] * nl, Dq = beta[m] * nl;
      double Dsigma = 0;
      if (r > 0) Dsigma = (w[cl] * X0[cl] + w.cwiseProduct(y.coeffs()).dot(DX0[l])) / r - sigma * nl / r;
      Eigen::VectorXd D2 = Eigen::VectorXd::Zero(M);
      if (opts.with_X01) {
        if (c3 != 0) D2 += c3 * sym_pair(m, l);
        if (c3p != 0) D2 += (c3p / (3 * rho)) * (nm * Bsym[l] + nl * Bsym[m]);
        double s = c3pp / (9 * rho * rho) * nm * nl;
        if (r > 0 && c3p != 0) s += c3p / (3 * rho) * ((cl == cm ? w[cl] : 0.0) - nm * nl) / r;
        if (s != 0) D2 += s * low(By);
      }
      if (shell) D2 += d2X02_low(cm, cl);
      Eigen::VectorXd dk = -Dq * low(DX0[m]) - amp[m] * D2;
      dk[m] += Dbeta * sigma + beta[m] * Dsigma;
      out += amp[l] * dk;
    }
    if (beta[l] != 0.0 && r > 0) out[l] -= beta[l] * w_inner_low(K1[m], y.coeffs()) / r;
    return out;
  }
};

}  // namespace

std::vector<BracketVector> hormander_system(const SpectralField& y, const ModelSpec& spec, const SystemOptions& opts) {
  if (y.N_max() != spec.N_max) throw std::invalid_argument("hormander_system: truncation mismatch");
  Engine e(y, spec, opts);
  std::vector<BracketVector> out;
  for (int i = 0; i < e.M; ++i) {
    BracketVector b{Eigen::VectorXd::Zero(e.M), 0, i, -1};
    b.v[i] = e.amp[i];
    out.push_back(std::move(b));
  }
  if (opts.K1)
    for (int i = 0; i < e.M; ++i) out.push_back({e.K1[i], 1, i, -1});
  if (opts.K2) {
    if (opts.pairs.empty()) {
      for (int l = 0; l < e.M; ++l)
        for (int m = 0; m < e.M; ++m) out.push_back({e.K2(l, m), 2, l, m});
    } else {
      for (auto [l, m] : opts.pairs) out.push_back({e.K2(l, m), 2, l, m});
    }
  }
  return out;
}

std::vector<BracketVector> hormander_system_fd(const SpectralField& y, const ModelSpec& spec,
                                               const std::vector<std::pair<int, int>>& pairs, double eps) {
  const auto gens = generator_components(spec);
  const int M = static_cast<int>(gens.size());
  auto lowvec = [&](const SpectralField& f) {
    Eigen::VectorXd v(M);
    for (int i = 0; i < M; ++i) v[i] = f.coeffs()[gens[i]];
    return v;
  };
  FieldMap X0 = [&](const SpectralField& z) { return drift_field_X0(z, spec); };
  auto K0 = [&](int i) -> FieldMap {
    return [&, i](const SpectralField& z) {
      SpectralField e = SpectralField::zero_like(z);
      e.coeffs()[gens[i]] = generator_amplitude(z, gens[i], spec);
      return e;
    };
  };
  auto K1 = [&](int i) -> FieldMap {
    return [&, i](const SpectralField& z) { return bracket_L(X0, K0(i), z, spec.N, eps); };
  };
  std::vector<BracketVector> out;
  for (int i = 0; i < M; ++i) out.push_back({lowvec(K0(i)(y)), 0, i, -1});
  for (auto [l, m] : pairs) out.push_back({lowvec(bracket_L(K0(l), K1(m), y, spec.N, eps)), 2, l, m});
  return out;
}

SpanReport span_rank(const std::vector<BracketVector>& vs, const ModelSpec& spec, double rel_tol) {
  if (vs.empty()) throw std::invalid_argument("span_rank: empty vector list");
  const auto t = Truncation::get(spec.N_max);
  const auto gens = generator_components(spec);
  const int M = static_cast<int>(gens.size());
  const Eigen::VectorXd w = sobolev_weights(*t, spec.noise.w_alpha());
  Eigen::VectorXd sw(M);
  for (int i = 0; i < M; ++i) sw[i] = std::sqrt(w[gens[i]]);
  std::vector<int> keep;
  for (size_t i = 0; i < vs.size(); ++i)
    if (!vs[i].v.isZero(0.0)) keep.push_back(static_cast<int>(i));
  SpanReport rep;
  rep.M = M;
  if (keep.empty()) return rep;
  Eigen::MatrixXd A(keep.size(), M);
  for (size_t i = 0; i < keep.size(); ++i) A.row(i) = vs[keep[i]].v.cwiseProduct(sw).transpose();
  Eigen::VectorXd s;
  if (A.rows() > A.cols()) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    Eigen::MatrixXd R = qr.matrixQR().topRows(M).triangularView<Eigen::Upper>();
    s = Eigen::JacobiSVD<Eigen::MatrixXd>(R).singularValues();
  } else {
    s = Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues();
  }
  rep.sigma_max = s[0];
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * rep.sigma_max) {
      rep.rank = i + 1;
      rep.sigma_min = s[i];
    }
  return rep;
}

Region region_classify(double w_norm, double rho, double R) {
  if (!(rho > 0.0) || R < 0.0) throw std::invalid_argument("region_classify: need rho > 0, R >= 0");
  if (R > 0.25 * rho) throw std::invalid_argument("region_classify: R must not exceed rho/4");
  if (w_norm >= R + 2.0 * rho) return Region::Case1;
  if (w_norm <= rho - R) return Region::Case2;
  return Region::Case3;
}

std::vector<SpectralField> ball_mesh(const SpectralField& x, double R, int points, std::uint64_t seed, double alpha) {
  std::vector<SpectralField> out{x};
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  const int d = x.trunc().dim();
  while (static_cast<int>(out.size()) < points) {
    SpectralField h = SpectralField::zero_like(x);
    for (int i = 0; i < d; ++i) h.coeffs()[i] = nd(gen);
    h *= R * std::pow(ud(gen), 1.0 / d) / sobolev_norm(h, alpha);
    out.push_back(x + h);
  }
  return out;
}

Case3Report case3_perturbation_bound(const ModelSpec& spec, const std::vector<double>& rhos, double ratio,
                                     const std::vector<std::pair<int, int>>& pairs, int samples, std::uint64_t seed) {
  Case3Report rep;
  const double a = spec.noise.w_alpha();
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  std::vector<SpectralField> dirs;
  for (int s = 0; s < samples; ++s) {
    SpectralField u(spec.N_max);
    for (int i = 0; i < u.trunc().dim(); ++i) u.coeffs()[i] = nd(gen);
    u *= 1.0 / sobolev_norm(u, a);
    dirs.push_back(u);
  }
  const auto t = Truncation::get(spec.N_max);
  const Eigen::VectorXd w = sobolev_weights(*t, a);
  const auto gens = generator_components(spec);
  SystemOptions o;
  o.K1 = false;
  o.with_X01 = false;
  o.pairs = pairs;
  for (double rho : rhos) {
    ModelSpec s = spec;
    s.cutoff.rho = rho;
    double mag = 0;
    for (const auto& d : dirs) {
      for (const auto& b : hormander_system(ratio * rho * d, s, o)) {
        if (b.generation != 2) continue;
        double q = 0;
        for (size_t i = 0; i < gens.size(); ++i) q += w[gens[i]] * b.v[i] * b.v[i];
        mag = std::max(mag, std::sqrt(q));
      }
    }
    rep.rho.push_back(rho);
    rep.magnitude.push_back(mag);
  }
  const size_t n = rep.rho.size();
  if (n >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) mx += std::log(rep.rho[i]), my += std::log(rep.magnitude[i]);
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < n; ++i) {
      double dx = std::log(rep.rho[i]) - mx;
      sxy += dx * (std::log(rep.magnitude[i]) - my);
      sxx += dx * dx;
    }
    rep.exponent = sxy / sxx;
    rep.constant = std::exp(my - rep.exponent * mx);
  }
  return rep;
}

}  // namespace degnse
