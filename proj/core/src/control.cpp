#include "degnse/control.hpp"

#include "degnse/nonlinearity.hpp"
#include "degnse/simulator.hpp"
#include "degnse/variational.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace degnse {

namespace {

bool independent(const ModeIndex& a, const ModeIndex& b) {
  const long cx = static_cast<long>(a.k2) * b.k3 - static_cast<long>(a.k3) * b.k2;
  const long cy = static_cast<long>(a.k3) * b.k1 - static_cast<long>(a.k1) * b.k3;
  const long cz = static_cast<long>(a.k1) * b.k2 - static_cast<long>(a.k2) * b.k1;
  return cx != 0 || cy != 0 || cz != 0;
}

std::string mode_str(const ModeIndex& k) {
  std::ostringstream os;
  os << '(' << k.k1 << ',' << k.k2 << ',' << k.k3 << ')';
  return os.str();
}

}  // namespace

bool auxiliary_pair_valid(const AuxiliaryPair& p, int N0, int N_max) {
  if (p.k.is_zero() || p.k.sup_norm() > N0) return false;
  const bool kp = is_positive(p.k);
  if (kp) {
    if (p.sign != +1 || !(p.l + p.m == p.k) || !is_positive(p.l) || !is_positive(-p.m)) return false;
  } else {
    if (p.sign != -1 || !(p.l - p.m == p.k) || !is_positive(p.l) || !is_positive(p.m)) return false;
  }
  for (const auto& c : {p.l, p.m})
    if (c.sup_norm() <= 2 * N0 || c.sup_norm() > N_max) return false;
  return p.l.norm2() != p.m.norm2() && independent(p.l, p.m);
}

bool carriers_compatible(const AuxiliaryPair& a, const AuxiliaryPair& b, int N0) {
  for (const auto& x : {a.l, a.m})
    for (const auto& y : {b.l, b.m})
      if ((x - y).sup_norm() <= N0 || (x + y).sup_norm() <= N0) return false;
  return true;
}

double pair_constant(const ModeIndex& l, const ModeIndex& m) {
  const double cross2 = static_cast<double>(l.norm2()) * m.norm2() - static_cast<double>(l.dot(m)) * l.dot(m);
  if (cross2 <= 0.0) throw std::invalid_argument("pair_constant: parallel modes");
  return (l.norm2() - m.norm2()) / std::sqrt(cross2);
}

CarrierInfeasible::CarrierInfeasible(int n, int s)
    : std::runtime_error("no auxiliary carrier set at N_max=" + std::to_string(n) +
                         (s > 0 ? "; smallest feasible N_max=" + std::to_string(s) : "; none found in probe range")),
      N_max(n),
      smallest_feasible(s) {}

namespace {

struct CandidateTable {
  std::vector<ModeIndex> lows;
  std::vector<AuxiliaryPair> cand;
  std::vector<int> begin;  // per low mode, plus sentinel
  int words = 0;
  std::vector<std::uint64_t> conflict;  // row per candidate

  bool conflicts(int a, int b) const { return (conflict[static_cast<size_t>(a) * words + b / 64] >> (b % 64)) & 1u; }
};

CandidateTable build_candidates(int N0, int N_max) {
  CandidateTable T;
  T.lows = enumerate_modes(N0);
  const auto highs = N_max > 2 * N0 ? enumerate_modes(2 * N0, Window::High, N_max) : std::vector<ModeIndex>{};
  std::vector<int> owner;
  for (size_t i = 0; i < T.lows.size(); ++i) {
    const ModeIndex k = T.lows[i];
    T.begin.push_back(static_cast<int>(T.cand.size()));
    for (const auto& l : highs) {
      AuxiliaryPair p{k, l, is_positive(k) ? k - l : l - k, is_positive(k) ? +1 : -1};
      if (!auxiliary_pair_valid(p, N0, N_max)) continue;
      T.cand.push_back(p);
      owner.push_back(static_cast<int>(i));
    }
  }
  T.begin.push_back(static_cast<int>(T.cand.size()));
  const int n = static_cast<int>(T.cand.size());
  T.words = (n + 63) / 64;
  T.conflict.assign(static_cast<size_t>(n) * T.words, 0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (owner[a] != owner[b] && !carriers_compatible(T.cand[a], T.cand[b], N0))
        T.conflict[static_cast<size_t>(a) * T.words + b / 64] |= std::uint64_t{1} << (b % 64);
  return T;
}

// Forward-checking DFS with minimum-remaining-values ordering. Returns 1 found, 0 exhausted, -1 budget.
int exhaustive(const CandidateTable& T, long budget, long& nodes, std::vector<int>& chosen) {
  const int K = static_cast<int>(T.lows.size());
  chosen.assign(K, -1);
  auto count = [&](const std::vector<std::uint64_t>& d, int k) {
    int s = 0;
    for (int c = T.begin[k]; c < T.begin[k + 1]; ++c) s += (d[c / 64] >> (c % 64)) & 1u;
    return s;
  };
  std::function<int(const std::vector<std::uint64_t>&)> dfs = [&](const std::vector<std::uint64_t>& d) -> int {
    if (++nodes > budget) return -1;
    int best = -1, bs = std::numeric_limits<int>::max();
    for (int k = 0; k < K; ++k)
      if (chosen[k] < 0) {
        int s = count(d, k);
        if (s < bs) bs = s, best = k;
      }
    if (best < 0) return 1;
    if (bs == 0) return 0;
    std::vector<std::uint64_t> nd(T.words);
    for (int c = T.begin[best]; c < T.begin[best + 1]; ++c) {
      if (!((d[c / 64] >> (c % 64)) & 1u)) continue;
      const std::uint64_t* row = &T.conflict[static_cast<size_t>(c) * T.words];
      for (int w = 0; w < T.words; ++w) nd[w] = d[w] & ~row[w];
      chosen[best] = c;
      bool alive = true;
      for (int k = 0; k < K && alive; ++k)
        if (chosen[k] < 0 && count(nd, k) == 0) alive = false;
      if (alive) {
        int r = dfs(nd);
        if (r != 0) return r;
      }
      chosen[best] = -1;
    }
    return 0;
  };
  std::vector<std::uint64_t> all(T.words, 0);
  for (size_t c = 0; c < T.cand.size(); ++c) all[c / 64] |= std::uint64_t{1} << (c % 64);
  return dfs(all);
}

// Breakout local search: min-conflict repair with growing weights on stuck conflicts.
bool breakout(const CandidateTable& T, long moves, std::uint64_t seed, long& used, std::vector<int>& as) {
  const int K = static_cast<int>(T.lows.size());
  std::mt19937_64 gen(seed);
  as.resize(K);
  for (int k = 0; k < K; ++k) {
    const int span = T.begin[k + 1] - T.begin[k];
    as[k] = T.begin[k] + static_cast<int>(gen() % span);
  }
  std::vector<double> wt(static_cast<size_t>(K) * K, 1.0);
  std::vector<long> tabu(T.cand.size(), -1);
  auto wconf = [&](int k, int c) {
    double s = 0;
    for (int j = 0; j < K; ++j)
      if (j != k && T.conflicts(c, as[j])) s += wt[k * K + j];
    return s;
  };
  std::vector<int> bad;
  for (used = 0; used < moves; ++used) {
    bad.clear();
    for (int k = 0; k < K; ++k)
      for (int j = 0; j < K; ++j)
        if (j != k && T.conflicts(as[k], as[j])) {
          bad.push_back(k);
          break;
        }
    if (bad.empty()) return true;
    const int k = bad[gen() % bad.size()];
    const double cur = wconf(k, as[k]);
    int best = -1, ties = 0;
    double bs = std::numeric_limits<double>::infinity();
    for (int c = T.begin[k]; c < T.begin[k + 1]; ++c) {
      if (c == as[k] || tabu[c] > used) continue;
      const double s = wconf(k, c);
      if (s < bs) {
        bs = s, best = c, ties = 1;
      } else if (s == bs && gen() % (++ties) == 0) {
        best = c;
      }
    }
    if (best < 0) continue;
    if (bs >= cur)
      for (int j = 0; j < K; ++j)
        if (j != k && T.conflicts(as[k], as[j])) wt[k * K + j] += 1.0, wt[j * K + k] += 1.0;
    tabu[as[k]] = used + 10;
    as[k] = best;
  }
  return false;
}

}  // namespace

CarrierSearch search_carriers(int N0, int N_max, const CarrierSearchOptions& opts) {
  if (N0 < 1) throw std::invalid_argument("search_carriers: N0 must be >= 1");
  CarrierSearch out;
  out.set.N0 = N0;
  out.set.N_max = N_max;
  const CandidateTable T = build_candidates(N0, N_max);
  for (size_t k = 0; k < T.lows.size(); ++k)
    if (T.begin[k] == T.begin[k + 1]) {
      out.status = CarrierStatus::Infeasible;
      return out;
    }
  std::vector<int> chosen;
  long nodes = 0;
  const int r = exhaustive(T, opts.exhaustive_nodes, nodes, chosen);
  if (r == 0) {
    out.status = CarrierStatus::Infeasible;
    out.set.effort = nodes;
    return out;
  }
  if (r < 0) {
    long total = 0;
    bool ok = false;
    for (int i = 0; i < opts.restarts && !ok; ++i) {
      long used = 0;
      ok = breakout(T, opts.repair_moves, opts.seed + 7919u * i, used, chosen);
      total += used;
    }
    out.set.effort = nodes + total;
    if (!ok) return out;
    out.set.method = "local-search";
  } else {
    out.set.method = "exhaustive";
    out.set.effort = nodes;
  }
  for (int c : chosen) out.set.pairs.push_back(T.cand[c]);
  out.status = CarrierStatus::Found;
  return out;
}

AuxiliaryModeSet select_auxiliary_pairs(int N0, int N_max, const CarrierSearchOptions& opts) {
  auto s = search_carriers(N0, N_max, opts);
  if (s.status == CarrierStatus::Found) return s.set;
  int smallest = -1;
  for (int n = N_max + 1; n <= N_max + opts.probe_limit && smallest < 0; ++n)
    if (search_carriers(N0, n, opts).status == CarrierStatus::Found) smallest = n;
  throw CarrierInfeasible(N_max, smallest);
}

InteractionAudit audit_interactions(const AuxiliaryModeSet& set) {
  InteractionAudit a;
  const int N0 = set.N0;
  struct Carrier {
    ModeIndex mode;
    int pair;
  };
  std::vector<Carrier> carriers;
  for (size_t i = 0; i < set.pairs.size(); ++i) {
    carriers.push_back({set.pairs[i].l, static_cast<int>(i)});
    carriers.push_back({set.pairs[i].m, static_cast<int>(i)});
  }
  auto examine = [&](const ModeIndex& p, const ModeIndex& q, int intended_pair) {
    const PerpBasis bp = perp_basis(p), bq = perp_basis(q);
    for (const Vec3& up : {bp.x1, bp.x2})
      for (const Vec3& uq : {bq.x1, bq.x2}) {
        ++a.checked;
        for (const auto& e : pair_interaction(p, up, q, uq).emissions) {
          if (e.target.sup_norm() > N0) continue;
          const double mag = e.coeff.norm();
          if (mag == 0.0) continue;
          if (intended_pair >= 0 && e.target == set.pairs[intended_pair].k) {
            ++a.intended;
          } else {
            ++a.forbidden;
            a.max_forbidden = std::max(a.max_forbidden, mag);
          }
        }
      }
  };
  for (const auto& c1 : carriers)
    for (const auto& c2 : carriers) {
      const bool partners = c1.pair == c2.pair && !(c1.mode == c2.mode);
      examine(c1.mode, c2.mode, partners ? c1.pair : -1);
    }
  for (const auto& j : enumerate_modes(N0))
    for (const auto& c : carriers) {
      examine(j, c.mode, -1);
      examine(c.mode, j, -1);
    }
  return a;
}

// ---------------------------------------------------------------------------------------------

void ControlSolution::Nodes::eval(double t, Eigen::VectorXd& x, Eigen::VectorXd& dx) const {
  const int n = static_cast<int>(u.size()) - 1;
  const double h = (t1 - t0) / n;
  int i = static_cast<int>(std::floor((t - t0) / h));
  i = std::clamp(i, 0, n - 1);
  const double th = (t - t0) / h - i;
  const double th2 = th * th, th3 = th2 * th;
  x = (2 * th3 - 3 * th2 + 1) * u[i] + (th3 - 2 * th2 + th) * h * du[i] + (-2 * th3 + 3 * th2) * u[i + 1] +
      (th3 - th2) * h * du[i + 1];
  dx = ((6 * th2 - 6 * th) / h) * u[i] + (3 * th2 - 4 * th + 1) * du[i] + ((-6 * th2 + 6 * th) / h) * u[i + 1] +
       (3 * th2 - 2 * th) * du[i + 1];
}

namespace {

// Low block dynamics du^L = -Au^L - B_L(u^L + u^H(t), .) with u^H(t) = sum_i c_i(t) h_i, using
// precomputed bilinear pieces so each evaluation touches only the low block.
class LowSystem {
 public:
  LowSystem(std::shared_ptr<const Truncation> t, const std::vector<int>& lowc, std::vector<Eigen::VectorXd> hs)
      : t_(std::move(t)), lowc_(lowc), hs_(std::move(hs)) {
    const int L = static_cast<int>(lowc_.size());
    A_.resize(L);
    for (int i = 0; i < L; ++i) A_[i] = t_->norm2(lowc_[i] / 2);
    for (const auto& h : hs_) {
      Eigen::MatrixXd C(L, L);
      SpectralField hf(t_, h);
      for (int j = 0; j < L; ++j) {
        SpectralField e(t_, Eigen::VectorXd::Zero(t_->dim()));
        e.coeffs()[lowc_[j]] = 1.0;
        C.col(j) = low(bilinear_term(e, hf) + bilinear_term(hf, e));
      }
      C_.push_back(C);
    }
    const int n = static_cast<int>(hs_.size());
    b_.assign(n, std::vector<Eigen::VectorXd>(n));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        SpectralField a(t_, hs_[i]), b(t_, hs_[j]);
        b_[i][j] = i == j ? low(bilinear_term(a, a)) : low(bilinear_term(a, b) + bilinear_term(b, a));
      }
  }

  Eigen::VectorXd low(const SpectralField& f) const {
    Eigen::VectorXd v(lowc_.size());
    for (size_t i = 0; i < lowc_.size(); ++i) v[i] = f.coeffs()[lowc_[i]];
    return v;
  }

  Eigen::VectorXd full(const Eigen::VectorXd& v) const {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(t_->dim());
    for (size_t i = 0; i < lowc_.size(); ++i) f[lowc_[i]] = v[i];
    return f;
  }

  Eigen::VectorXd BL(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    SpectralField fa(t_, full(a)), fb(t_, full(b));
    return low(bilinear_term(fa, fb));
  }

  Eigen::VectorXd rhs(const std::vector<double>& c, const Eigen::VectorXd& u) const {
    Eigen::VectorXd r = -A_.cwiseProduct(u) - BL(u, u);
    for (size_t i = 0; i < c.size(); ++i) {
      r -= c[i] * (C_[i] * u);
      for (size_t j = i; j < c.size(); ++j) r -= c[i] * c[j] * b_[i][j];
    }
    return r;
  }

  const Eigen::VectorXd& A() const { return A_; }

 private:
  std::shared_ptr<const Truncation> t_;
  std::vector<int> lowc_;
  std::vector<Eigen::VectorXd> hs_;
  Eigen::VectorXd A_;
  std::vector<Eigen::MatrixXd> C_;
  std::vector<std::vector<Eigen::VectorXd>> b_;
};

using Coeffs = std::function<std::vector<double>(double)>;

std::vector<Eigen::VectorXd> rk4_low(const LowSystem& sys, const Coeffs& c, const Eigen::VectorXd& u0, double t0,
                                     double t1, int steps) {
  const double h = (t1 - t0) / steps;
  std::vector<Eigen::VectorXd> out{u0};
  Eigen::VectorXd u = u0;
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    Eigen::VectorXd k1 = sys.rhs(c(t), u);
    Eigen::VectorXd k2 = sys.rhs(c(t + 0.5 * h), u + 0.5 * h * k1);
    Eigen::VectorXd k3 = sys.rhs(c(t + 0.5 * h), u + 0.5 * h * k2);
    Eigen::VectorXd k4 = sys.rhs(c(t + h), u + h * k3);
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!u.allFinite()) throw NumericalFailure("control/low-system", t + h);
    out.push_back(u);
  }
  return out;
}

double w_norm(const Eigen::VectorXd& c, const Eigen::VectorXd& w) { return std::sqrt(c.cwiseProduct(c).dot(w)); }

}  // namespace

int ControlSolution::phase_of(double t) const {
  if (t < T1_) return 1;
  if (t < T2_) return 2;
  if (t < T3_) return 3;
  return 4;
}

void ControlSolution::phase3(double t, Eigen::VectorXd& u, Eigen::VectorXd& du) const {
  const auto tr = Truncation::get(spec_.N_max);
  const double s = t - T2_, D = T3_ - T2_;
  Eigen::VectorXd p = Eigen::VectorXd::Zero(lowc_.size()), dp = p;
  double sp = 1.0;
  for (int i = 0; i < 4; ++i) {
    p += sp * P_[i];
    if (i < 3) dp += (i + 1) * sp * P_[i + 1];
    sp *= s;
  }
  u = Eigen::VectorXd::Zero(tr->dim());
  du = u;
  for (size_t i = 0; i < lowc_.size(); ++i) u[lowc_[i]] = p[i], du[lowc_[i]] = dp[i];
  for (const auto& c : car_) {
    if (c.lambda == 0.0) continue;
    // G(s)/s and its derivative from the coefficient list (g_0 = g_1 = 0 by construction)
    Eigen::Vector2d Gs = Eigen::Vector2d::Zero(), dGs = Eigen::Vector2d::Zero();
    for (size_t n = 2; n < g_.size(); ++n) {
      const Eigen::Vector2d gk = g_[n].segment<2>(c.ik);
      Gs += std::pow(s, static_cast<double>(n - 1)) * gk;
      dGs += (n - 1.0) * std::pow(s, static_cast<double>(n - 2)) * gk;
    }
    const Eigen::Vector2d X = c.lambda * (s / D) * c.Xhat, dX = (c.lambda / D) * c.Xhat;
    const Eigen::Vector2d Y = (D / c.lambda) * (c.Linv * (-Gs)), dY = (D / c.lambda) * (c.Linv * (-dGs));
    u.segment<2>(2 * c.jl) += X;
    du.segment<2>(2 * c.jl) += dX;
    u.segment<2>(2 * c.jm) += Y;
    du.segment<2>(2 * c.jm) += dY;
  }
}

void ControlSolution::state(double t, SpectralField& u, SpectralField& du, int phase) const {
  const auto tr = Truncation::get(spec_.N_max);
  if (phase == 0) phase = phase_of(t);
  Eigen::VectorXd a, b;
  switch (phase) {
    case 1:
      p1_.eval(t, a, b);
      break;
    case 2: {
      Eigen::VectorXd l, dl;
      p2_.eval(t, l, dl);
      const double D = T2_ - T1_, s = std::clamp((t - T1_) / D, 0.0, 1.0);
      a = (1.0 - smoothstep7(s)) * h2_;
      b = (-smoothstep7_prime(s) / D) * h2_;
      for (size_t i = 0; i < lowc_.size(); ++i) a[lowc_[i]] += l[i], b[lowc_[i]] += dl[i];
      break;
    }
    case 3:
      phase3(t, a, b);
      break;
    default: {
      Eigen::VectorXd l, dl;
      p4_.eval(t, l, dl);
      const double D = T_ - T3_, th = std::clamp((t - T3_) / D, 0.0, 1.0);
      a = (1.0 - th) * a4_ + th * zH_;
      b = (zH_ - a4_) / D;
      for (size_t i = 0; i < lowc_.size(); ++i) a[lowc_[i]] += l[i], b[lowc_[i]] += dl[i];
    }
  }
  u = SpectralField(tr, a);
  du = SpectralField(tr, b);
}

SpectralField ControlSolution::state(double t) const {
  SpectralField u, du;
  state(t, u, du);
  return u;
}

SpectralField ControlSolution::control(double t, int phase) const {
  if (phase == 0) phase = phase_of(t);
  SpectralField u, du;
  state(t, u, du, phase);
  if (phase == 1) return SpectralField::zero_like(u);
  const int N0 = spec_.noise.N0;
  SpectralField f = du + apply_stokes(u) + convective_term(u);
  return apply_Q_inverse_high(project_window(f, N0, Window::High), spec_.noise);
}

PhaseDefects ControlSolution::residual(double t, int phase) const {
  if (phase == 0) phase = phase_of(t);
  SpectralField u, du;
  state(t, u, du, phase);
  const int N0 = spec_.noise.N0;
  SpectralField r = du + apply_stokes(u) + convective_term(u);
  SpectralField w = control(t, phase);
  PhaseDefects d;
  d.high = (project_window(r, N0, Window::High) - apply_Q(w, spec_.noise)).coeffs().norm();
  d.low = project_window(r, N0, Window::Low).coeffs().norm();
  return d;
}

namespace {

// Unit X in the frame {k^, g1, g2}: x0 = x2 = 1 and X.l = 0, as coefficients on e_l.
Eigen::Vector2d carrier_direction(const Truncation& t, int jl, const ModeIndex& k, const ModeIndex& l,
                                  const ModeIndex& m) {
  const Vec3 kh = k.vec().normalized();
  const Vec3 g2 = l.vec().cross(m.vec()).normalized();
  const Vec3 g1 = g2.cross(kh);
  const double x1 = -kh.dot(l.vec()) / g1.dot(l.vec());
  const Vec3 X = kh + x1 * g1 + g2;
  Eigen::Vector2d c(t.x1(jl).dot(X), t.x2(jl).dot(X));
  return c.normalized();
}

// Low-k coefficients of B(U e_l, V e_m) + B(V e_m, U e_l).
Eigen::Vector2d pair_forcing(int N_max, const ModeIndex& k, const ModeIndex& l, const Eigen::Vector2d& U,
                             const ModeIndex& m, const Eigen::Vector2d& V) {
  SpectralField a = single_mode(N_max, l, U[0], U[1]);
  SpectralField b = single_mode(N_max, m, V[0], V[1]);
  return (bilinear_term(a, b) + bilinear_term(b, a)).coeff(k);
}

}  // namespace

ControlSolution plan_control(const SpectralField& x_in, const SpectralField& y_in, double T, double eps,
                             const ModelSpec& spec, const AuxiliaryModeSet& carriers, const ControlOptions& opts) {
  if (!(T > 0.0) || !(eps > 0.0)) throw std::invalid_argument("plan_control: need T > 0 and eps > 0");
  const int N0 = spec.noise.N0;
  if (carriers.N0 != N0 || static_cast<int>(carriers.pairs.size()) != static_cast<int>(enumerate_modes(N0).size()))
    throw std::invalid_argument("plan_control: carrier set does not match N0");
  for (const auto& p : carriers.pairs)
    if (!auxiliary_pair_valid(p, N0, spec.N_max))
      throw std::invalid_argument("plan_control: carrier pair for k=" + mode_str(p.k) + " outside the truncation");
  if (x_in.N_max() > spec.N_max || y_in.N_max() > spec.N_max)
    throw std::invalid_argument("plan_control: endpoints exceed the planning truncation");

  ControlSolution sol;
  sol.spec_ = spec;
  sol.carriers_ = carriers;
  sol.x_ = x_in.embed(spec.N_max);
  sol.y_ = y_in.embed(spec.N_max);
  sol.T_ = T;
  sol.eps_ = eps;
  const auto tr = Truncation::get(spec.N_max);
  const double alpha = spec.noise.w_alpha();
  const Eigen::VectorXd W = sobolev_weights(*tr, alpha);
  sol.lowc_ = window_components(*tr, N0);
  const auto& lowc = sol.lowc_;
  const int L = static_cast<int>(lowc.size());
  auto low_of = [&](const Eigen::VectorXd& f) {
    Eigen::VectorXd v(L);
    for (int i = 0; i < L; ++i) v[i] = f[lowc[i]];
    return v;
  };
  auto high_of = [&](Eigen::VectorXd f) {
    for (int i = 0; i < L; ++i) f[lowc[i]] = 0.0;
    return f;
  };
  Eigen::VectorXd WL(L);
  for (int i = 0; i < L; ++i) WL[i] = W[lowc[i]];
  double rho0 = 0.0;

  // Phase 1: free evolution.
  sol.c_bilinear_ = fit_bilinear_constant(spec.N_max, spec.noise.alpha0, opts.fit_samples, opts.seed).constant;
  const double c = sol.c_bilinear_ * sol.c_bilinear_;
  const double xw = sobolev_norm(sol.x_, alpha);
  const double t0 = xw > 0.0 ? 1.0 / (2.0 * c * xw * xw) : std::numeric_limits<double>::infinity();
  double T1 = std::min(0.25 * T, t0);
  bool ok = false;
  for (int attempt = 1; attempt <= opts.phase1_attempts && !ok; ++attempt) {
    sol.phase1_attempts_ = attempt;
    std::vector<Eigen::VectorXd> us;
    bool bounded = true;
    try {
      integrate_forced(sol.x_, 0.0, T1, opts.phase1_steps, {}, [&](double, const SpectralField& u) {
        us.push_back(u.coeffs());
        if (w_norm(u.coeffs(), W) > std::sqrt(2.0) * xw * (1.0 + 1e-12) + 1e-300) bounded = false;
      });
    } catch (const NumericalFailure&) {
      bounded = false;
    }
    if (!bounded) {
      T1 *= 0.5;
      continue;
    }
    sol.p1_.t0 = 0.0;
    sol.p1_.t1 = T1;
    sol.p1_.u = us;
    for (const auto& u : us) {
      SpectralField f(tr, u);
      sol.p1_.du.push_back(-(apply_stokes(f) + convective_term(f)).coeffs());
      rho0 = std::max(rho0, w_norm(u, W));
    }
    ok = true;
  }
  if (!ok) throw NumericalFailure("control/phase1", T1);
  sol.T1_ = T1;

  // Phase 2: high modes follow psi(t) u^H(T1) down to zero.
  const double T2 = std::min(0.5 * T, xw > 0.0 ? T1 + 1.0 / (4.0 * c * xw * xw) : 0.5 * T);
  sol.T2_ = T2;
  sol.h2_ = high_of(sol.p1_.u.back());
  {
    LowSystem sys(tr, lowc, {sol.h2_});
    auto psi = [&](double t) { return std::vector<double>{1.0 - smoothstep7(std::clamp((t - T1) / (T2 - T1), 0.0, 1.0))}; };
    const Eigen::VectorXd u0 = low_of(sol.p1_.u.back());
    auto fine = rk4_low(sys, psi, u0, T1, T2, opts.low_steps);
    auto coarse = rk4_low(sys, psi, u0, T1, T2, opts.low_steps / 2);
    PhaseDefects d;
    for (size_t i = 0; i < coarse.size(); ++i) d.integration = std::max(d.integration, w_norm(coarse[i] - fine[2 * i], WL));
    sol.p2_.t0 = T1;
    sol.p2_.t1 = T2;
    sol.p2_.u = fine;
    for (size_t i = 0; i < fine.size(); ++i)
      sol.p2_.du.push_back(sys.rhs(psi(T1 + (T2 - T1) * i / opts.low_steps), fine[i]));
    sol.defects_ = {PhaseDefects{}, d};
  }

  // Carrier geometry is independent of the phase-3 window.
  std::vector<int> lowpos(tr->dim(), -1);
  for (int i = 0; i < L; ++i) lowpos[lowc[i]] = i;
  std::vector<ControlSolution::Carrier> car;
  for (const auto& p : carriers.pairs) {
    ControlSolution::Carrier cr;
    cr.jl = tr->index(p.l);
    cr.jm = tr->index(p.m);
    cr.jk = tr->index(p.k);
    cr.ik = lowpos[2 * cr.jk];
    cr.Xhat = carrier_direction(*tr, cr.jl, p.k, p.l, p.m);
    Eigen::Matrix2d Lm;
    Lm.col(0) = pair_forcing(spec.N_max, p.k, p.l, cr.Xhat, p.m, Eigen::Vector2d(1, 0));
    Lm.col(1) = pair_forcing(spec.N_max, p.k, p.l, cr.Xhat, p.m, Eigen::Vector2d(0, 1));
    if (!(std::abs(Lm.determinant()) > 1e-12 * Lm.squaredNorm()))
      throw NumericalFailure("control/phase3: singular carrier system at k=" + mode_str(p.k), T2);
    cr.Linv = Lm.inverse();
    car.push_back(cr);
  }

  const LowSystem base(tr, lowc, {});
  const Eigen::VectorXd zL = low_of(sol.y_.coeffs());
  sol.zH_ = high_of(sol.y_.coeffs());
  const Eigen::VectorXd& A = base.A();
  const Eigen::VectorXd P0 = sol.p2_.u.back();
  const Eigen::VectorXd v0 = -A.cwiseProduct(P0) - base.BL(P0, P0);
  const Eigen::VectorXd acc = -A.cwiseProduct(v0) - base.BL(v0, P0) - base.BL(P0, v0);

  double T3 = T - 0.25 * (T - T2);
  for (int attempt = 0; attempt <= opts.phase4_halvings; ++attempt) {
    sol.T3_ = T3;
    const double D = T3 - T2;
    // Phase 3: cubic bridge for u^L with free value, velocity and acceleration at T2.
    sol.P_ = {P0, v0, 0.5 * acc, (zL - P0 - v0 * D - 0.5 * acc * D * D) / (D * D * D)};
    sol.g_.assign(7, Eigen::VectorXd::Zero(L));
    for (int n = 0; n <= 6; ++n) {
      if (n <= 2) sol.g_[n] += (n + 1.0) * sol.P_[n + 1];
      if (n <= 3) sol.g_[n] += A.cwiseProduct(sol.P_[n]);
      for (int i = 0; i <= 3; ++i)
        if (n - i >= 0 && n - i <= 3) sol.g_[n] += base.BL(sol.P_[i], sol.P_[n - i]);
    }
    sol.g_[0].setZero();
    sol.g_[1].setZero();
    sol.car_ = car;
    const int probe = 4 * opts.defect_nodes;
    for (auto& cr : sol.car_) {
      double mx = 0.0;
      for (int i = 0; i <= probe; ++i) {
        const double s = D * i / probe;
        Eigen::Vector2d G2 = Eigen::Vector2d::Zero();
        for (int n = 2; n <= 6; ++n) G2 += std::pow(s, n - 2.0) * sol.g_[n].segment<2>(cr.ik);
        mx = std::max(mx, (D * D * (cr.Linv * G2)).norm());
      }
      cr.lambda = std::sqrt(mx);
    }
    // Phase 4: u^H linear to z^H, u^L free.
    SpectralField u3, du3;
    sol.state(T3, u3, du3, 3);
    sol.a4_ = high_of(u3.coeffs());
    LowSystem sys(tr, lowc, {sol.a4_, sol.zH_});
    auto lin = [&](double t) {
      const double th = std::clamp((t - T3) / (T - T3), 0.0, 1.0);
      return std::vector<double>{1.0 - th, th};
    };
    auto fine = rk4_low(sys, lin, zL, T3, T, opts.low_steps);
    const double miss = w_norm(fine.back() - zL, WL);
    sol.replan_.push_back(miss);
    sol.p4_ = {};
    sol.p4_.t0 = T3;
    sol.p4_.t1 = T;
    sol.p4_.u = fine;
    for (size_t i = 0; i < fine.size(); ++i) sol.p4_.du.push_back(sys.rhs(lin(T3 + (T - T3) * i / opts.low_steps), fine[i]));
    if (miss <= 0.5 * eps) {
      auto coarse = rk4_low(sys, lin, zL, T3, T, opts.low_steps / 2);
      PhaseDefects d4;
      for (size_t i = 0; i < coarse.size(); ++i) d4.integration = std::max(d4.integration, w_norm(coarse[i] - fine[2 * i], WL));
      sol.defects_.resize(4);
      sol.defects_[2] = PhaseDefects{};
      sol.defects_[3] = d4;
      sol.miss_ = miss;
      ok = true;
      break;
    }
    ok = false;
    T3 = T - 0.5 * (T - T3);
  }
  if (!ok) throw NumericalFailure("control/phase4: target miss above eps/2 after replanning", sol.T3_);

  // Defects and the planned sup-norm at quadrature nodes.
  const double bounds[5] = {0.0, sol.T1_, sol.T2_, sol.T3_, T};
  for (int ph = 1; ph <= 4; ++ph) {
    auto& d = sol.defects_[ph - 1];
    // Phases 1, 2 and 4 are stored at integrator nodes; sampling on those nodes keeps the
    // Hermite interpolation error out of the report.
    const ControlSolution::Nodes* stored = ph == 1 ? &sol.p1_ : ph == 2 ? &sol.p2_ : ph == 4 ? &sol.p4_ : nullptr;
    const int n = stored ? static_cast<int>(stored->u.size()) - 1 : opts.defect_nodes;
    for (int i = 0; i <= opts.defect_nodes; ++i) {
      const int idx = static_cast<int>(std::lround(static_cast<double>(i) * n / opts.defect_nodes));
      const double t = bounds[ph - 1] + (bounds[ph] - bounds[ph - 1]) * idx / n;
      PhaseDefects r = sol.residual(t, ph);
      d.high = std::max(d.high, r.high);
      d.low = std::max(d.low, r.low);
      SpectralField u, du;
      sol.state(t, u, du, ph);
      rho0 = std::max(rho0, sobolev_norm(u, alpha));
    }
  }
  for (const auto& u : sol.p2_.u) rho0 = std::max(rho0, w_norm(u, WL));
  sol.rho0_ = rho0;
  return sol;
}

ControlSolution plan_control(const SpectralField& x, const SpectralField& y, double T, double eps, const ModelSpec& spec,
                             const ControlOptions& opts) {
  return plan_control(x, y, T, eps, spec, select_auxiliary_pairs(spec.noise.N0, spec.N_max), opts);
}

ControlReplay verify_control(const ControlSolution& plan, int N_verify, int steps_per_phase) {
  if (N_verify < plan.spec().N_max) throw std::invalid_argument("verify_control: N_verify below the planning truncation");
  if (steps_per_phase < 1) throw std::invalid_argument("verify_control: steps_per_phase must be >= 1");
  ControlReplay rep;
  rep.N_verify = N_verify;
  rep.rho0 = plan.rho0();
  rep.defects = plan.defects();
  const double alpha = plan.spec().noise.w_alpha();
  SpectralField u = plan.x().embed(N_verify);
  rep.sup_norm = sobolev_norm(u, alpha);
  const double bounds[5] = {0.0, plan.T1(), plan.T2(), plan.T3(), plan.T()};
  for (int ph = 1; ph <= 4; ++ph) {
    if (!(bounds[ph] > bounds[ph - 1])) continue;
    Forcing f;
    if (ph > 1)
      f = [&plan, ph, N_verify](double t) {
        return apply_Q(plan.control(t, ph), plan.spec().noise).embed(N_verify);
      };
    u = integrate_forced(u, bounds[ph - 1], bounds[ph], steps_per_phase, f, [&](double, const SpectralField& v) {
      rep.sup_norm = std::max(rep.sup_norm, sobolev_norm(v, alpha));
    });
  }
  rep.miss = sobolev_norm(u - plan.y().embed(N_verify), alpha);
  return rep;
}

}  // namespace degnse
