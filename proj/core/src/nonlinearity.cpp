#include "degnse/nonlinearity.hpp"

#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fftw3.h>

namespace degnse {

namespace {

using cplx = std::complex<double>;

// e_k = Re(gamma_k e^{ik.x}) with gamma = 1 on the positive class and -i on the negative class.
cplx gamma_of(bool positive) { return positive ? cplx(1.0, 0.0) : cplx(0.0, -1.0); }

// Re(c e^{it.x}) lands on a single basis function because c is real or imaginary.
struct Phase {
  bool imag;
  double val;
};

// e_l * d/dx(e_m) = 1/2 Re(g_l i g_m e^{i(l+m)x}) + 1/2 Re(g_l conj(i g_m) e^{i(l-m)x})
struct PhaseTable {
  Phase plus[2][2];
  Phase minus[2][2];
  PhaseTable() {
    const cplx I(0.0, 1.0);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        cplx gl = gamma_of(a == 0), gm = gamma_of(b == 0);
        cplx cp = 0.5 * gl * I * gm;
        cplx cm = 0.5 * gl * std::conj(I * gm);
        plus[a][b] = to_phase(cp);
        minus[a][b] = to_phase(cm);
      }
  }
  static Phase to_phase(cplx c) {
    if (std::abs(c.imag()) > 0.0) return {true, c.imag()};
    return {false, c.real()};
  }
};

const PhaseTable& phases() {
  static const PhaseTable t;
  return t;
}

int cls_of(bool positive) { return positive ? 0 : 1; }

// Lookup cube for targets l +- m with |l|,|m|_inf <= N_in.
struct Kernel {
  int N_in = 0, N_out = 0, W = 0, center = 0;
  std::vector<int> off;  // per input mode
  std::vector<int> pos, neg;
  std::vector<char> tpos;

  Kernel(int nin, int nout) : N_in(nin), N_out(nout) {
    W = 4 * N_in + 1;
    const int h = 2 * N_in;
    center = (h * W + h) * W + h;
    auto tin = Truncation::get(N_in);
    auto tout = Truncation::get(N_out);
    off.resize(tin->size());
    for (int j = 0; j < tin->size(); ++j) {
      const auto& k = tin->mode(j);
      off[j] = (k.k1 * W + k.k2) * W + k.k3;
    }
    const size_t n = static_cast<size_t>(W) * W * W;
    pos.assign(n, -1);
    neg.assign(n, -1);
    tpos.assign(n, 0);
    for (int a = -h; a <= h; ++a)
      for (int b = -h; b <= h; ++b)
        for (int c = -h; c <= h; ++c) {
          ModeIndex t{a, b, c};
          if (t.is_zero() || t.sup_norm() > N_out) continue;
          size_t idx = static_cast<size_t>(center + (a * W + b) * W + c);
          bool p = is_positive(t);
          pos[idx] = tout->index(p ? t : -t);
          neg[idx] = tout->index(p ? -t : t);
          tpos[idx] = p ? 1 : 0;
        }
  }
};

const Kernel& kernel(int nin, int nout) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<Kernel>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nin, nout}];
  if (!slot) slot = std::make_unique<Kernel>(nin, nout);
  return *slot;
}

struct Src {
  double k[3];
  double v[3];
  int off;
  int cls;
};

std::vector<Src> gather(const SpectralField& u, const Kernel& K) {
  const auto& t = u.trunc();
  const auto& c = u.coeffs();
  std::vector<Src> out;
  out.reserve(t.size());
  for (int j = 0; j < t.size(); ++j) {
    if (c[2 * j] == 0.0 && c[2 * j + 1] == 0.0) continue;
    Vec3 r = u.r3(j);
    const Vec3& kv = t.kvec(j);
    out.push_back({{kv[0], kv[1], kv[2]}, {r[0], r[1], r[2]}, K.off[j], cls_of(t.positive(j))});
  }
  return out;
}

int resolve_out(int N_out, const SpectralField& u) {
  if (N_out <= 0) return u.N_max();
  if (N_out > u.N_max()) throw std::invalid_argument("bilinear_term: N_out exceeds input truncation");
  return N_out;
}

}  // namespace

double raw_to_normalized() {
  static const double v = 1.0 / std::sqrt(4.0 * std::numbers::pi * std::numbers::pi * std::numbers::pi);
  return v;
}

PairInteraction pair_interaction(const ModeIndex& l, const Vec3& u_l, const ModeIndex& m, const Vec3& u_m) {
  if (l.is_zero() || m.is_zero()) throw std::invalid_argument("pair_interaction: zero mode");
  PairInteraction out{l, m, {}};
  const double s = u_l.dot(m.vec());
  const auto& tab = phases();
  const int cl = cls_of(is_positive(l)), cm = cls_of(is_positive(m));
  auto emit = [&](const ModeIndex& t, const Phase& ph) {
    if (t.is_zero()) return;
    const bool tp = is_positive(t);
    ModeIndex target;
    double f;
    if (!ph.imag) {
      target = tp ? t : -t;
      f = ph.val;
    } else {
      target = tp ? -t : t;
      f = tp ? ph.val : -ph.val;
    }
    out.emissions.push_back({target, leray_project(target, f * s * u_m)});
  };
  emit(l + m, tab.plus[cl][cm]);
  emit(l - m, tab.minus[cl][cm]);
  return out;
}

namespace {

// Dealiased pseudospectral B(u,v) = P div(u (x) v) on an M^3 grid with M > 2 N_in + N_out.
// Used once the pair count makes the direct kernel the slower path.
constexpr double kFftPairThreshold = 1.0e6;  // full supports at N <= 4 stay on the pair kernel

int fft_size(int need) {
  for (int m = need;; ++m) {
    int r = m;
    for (int p : {2, 3, 5})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

struct FftPlan {
  int M = 0, H = 0;
  size_t nreal = 0, ncplx = 0;
  fftw_plan fwd = nullptr, bwd = nullptr;
};

const FftPlan& fft_plan(int M) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<FftPlan>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[M];
  if (!slot) {
    auto p = std::make_unique<FftPlan>();
    p->M = M;
    p->H = M / 2 + 1;
    p->nreal = static_cast<size_t>(M) * M * M;
    p->ncplx = static_cast<size_t>(M) * M * p->H;
    std::vector<double> r(p->nreal);
    std::vector<fftw_complex> c(p->ncplx);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p->fwd = fftw_plan_dft_r2c_3d(M, M, M, r.data(), c.data(), flags);
    p->bwd = fftw_plan_dft_c2r_3d(M, M, M, c.data(), r.data(), flags);
    slot = std::move(p);
  }
  return *slot;
}

size_t half_index(const FftPlan& P, int a, int b, int c) {
  const int M = P.M;
  return (static_cast<size_t>((a + M) % M) * M + static_cast<size_t>((b + M) % M)) * P.H + c;
}

// Grid values of the three components of u.
void to_grid(const SpectralField& u, const FftPlan& P, std::vector<double>* out) {
  const auto& t = u.trunc();
  const double kappa = raw_to_normalized();
  std::vector<cplx> F(P.ncplx);
  for (int i = 0; i < 3; ++i) {
    std::fill(F.begin(), F.end(), cplx(0.0));
    for (int j = 0; j < t.size(); ++j) {
      const double a = u.coeffs()[2 * j], b = u.coeffs()[2 * j + 1];
      if (a == 0.0 && b == 0.0) continue;
      const double U = kappa * (a * t.x1(j)[i] + b * t.x2(j)[i]);
      const cplx g = 0.5 * U * gamma_of(t.positive(j));
      const auto& k = t.mode(j);
      if (k.k3 >= 0) F[half_index(P, k.k1, k.k2, k.k3)] += g;
      if (k.k3 <= 0) F[half_index(P, -k.k1, -k.k2, -k.k3)] += std::conj(g);
    }
    out[i].resize(P.nreal);
    fftw_execute_dft_c2r(P.bwd, reinterpret_cast<fftw_complex*>(F.data()), out[i].data());
  }
}

SpectralField bilinear_fft(const SpectralField& u, const SpectralField& v, int N_out) {
  const int M = fft_size(2 * u.N_max() + N_out + 1);
  const FftPlan& P = fft_plan(M);
  std::vector<double> ug[3], vg[3];
  to_grid(u, P, ug);
  const bool same = &u == &v;
  if (!same) to_grid(v, P, vg);
  const std::vector<double>* V = same ? ug : vg;

  // Fhat_i(k) = i k_j FFT(u_j v_i)(k) / M^3
  std::vector<cplx> Fo[3];
  for (int i = 0; i < 3; ++i) Fo[i].assign(P.ncplx, cplx(0.0));
  std::vector<double> prod(P.nreal);
  std::vector<cplx> S(P.ncplx);
  auto kcomp = [&](size_t idx, int d) {
    const int c = static_cast<int>(idx % P.H);
    const size_t ab = idx / P.H;
    const int b = static_cast<int>(ab % M), a = static_cast<int>(ab / M);
    const int w = d == 0 ? a : (d == 1 ? b : c);
    return d == 2 ? w : (w > M / 2 ? w - M : w);
  };
  const double scale = 1.0 / static_cast<double>(P.nreal);
  for (int jj = 0; jj < 3; ++jj)
    for (int i = 0; i < 3; ++i) {
      if (same && i < jj) continue;  // u_j u_i symmetric
      for (size_t p = 0; p < P.nreal; ++p) prod[p] = ug[jj][p] * V[i][p];
      fftw_execute_dft_r2c(P.fwd, prod.data(), reinterpret_cast<fftw_complex*>(S.data()));
      for (size_t q = 0; q < P.ncplx; ++q) {
        if (S[q] == 0.0) continue;
        Fo[i][q] += cplx(0.0, kcomp(q, jj) * scale) * S[q];
        if (same && i != jj) Fo[jj][q] += cplx(0.0, kcomp(q, i) * scale) * S[q];
      }
    }

  SpectralField out(N_out);
  const auto tout = Truncation::get(N_out);
  const double nu = 1.0 / raw_to_normalized();
  for (int j = 0; j < tout->size(); ++j) {
    const auto& k = tout->mode(j);
    const bool pos = tout->positive(j);
    const ModeIndex tp = pos ? k : -k;
    Vec3 raw;
    for (int i = 0; i < 3; ++i) {
      const cplx F = tp.k3 >= 0 ? Fo[i][half_index(P, tp.k1, tp.k2, tp.k3)]
                                : std::conj(Fo[i][half_index(P, -tp.k1, -tp.k2, -tp.k3)]);
      raw[i] = 2.0 * (pos ? F.real() : F.imag());
    }
    out.coeffs()[2 * j] = nu * tout->x1(j).dot(raw);
    out.coeffs()[2 * j + 1] = nu * tout->x2(j).dot(raw);
  }
  return out;
}

SpectralField bilinear_direct(const SpectralField& u, const SpectralField& v, int N_out);

size_t support(const SpectralField& u) {
  size_t n = 0;
  const auto& c = u.coeffs();
  for (Eigen::Index j = 0; j + 1 < c.size(); j += 2)
    if (c[j] != 0.0 || c[j + 1] != 0.0) ++n;
  return n;
}

}  // namespace

SpectralField bilinear_term(const SpectralField& u, const SpectralField& v, int N_out) {
  if (u.trunc_ptr() != v.trunc_ptr()) throw std::invalid_argument("bilinear_term: truncation mismatch");
  N_out = resolve_out(N_out, u);
  if (static_cast<double>(support(u)) * static_cast<double>(support(v)) > kFftPairThreshold)
    return bilinear_fft(u, v, N_out);
  return bilinear_direct(u, v, N_out);
}

namespace {

SpectralField bilinear_direct(const SpectralField& u, const SpectralField& v, int N_out) {
  const Kernel& K = kernel(u.N_max(), N_out);
  const auto tout = Truncation::get(N_out);
  const auto U = gather(u, K);
  const auto V = gather(v, K);
  const auto& tab = phases();
  std::vector<double> acc(3 * static_cast<size_t>(tout->size()), 0.0);
  for (const auto& a : U) {
    const int base = K.center + a.off;
    for (const auto& b : V) {
      const double s = a.v[0] * b.k[0] + a.v[1] * b.k[1] + a.v[2] * b.k[2];
      if (s == 0.0) continue;
      {
        const size_t idx = static_cast<size_t>(base + b.off);
        if (K.pos[idx] >= 0) {
          const Phase& ph = tab.plus[a.cls][b.cls];
          int o;
          double f;
          if (!ph.imag) {
            o = K.pos[idx];
            f = ph.val;
          } else {
            o = K.neg[idx];
            f = K.tpos[idx] ? ph.val : -ph.val;
          }
          double* r = &acc[3 * static_cast<size_t>(o)];
          f *= s;
          r[0] += f * b.v[0];
          r[1] += f * b.v[1];
          r[2] += f * b.v[2];
        }
      }
      {
        const size_t idx = static_cast<size_t>(base - b.off);
        if (K.pos[idx] >= 0) {
          const Phase& ph = tab.minus[a.cls][b.cls];
          int o;
          double f;
          if (!ph.imag) {
            o = K.pos[idx];
            f = ph.val;
          } else {
            o = K.neg[idx];
            f = K.tpos[idx] ? ph.val : -ph.val;
          }
          double* r = &acc[3 * static_cast<size_t>(o)];
          f *= s;
          r[0] += f * b.v[0];
          r[1] += f * b.v[1];
          r[2] += f * b.v[2];
        }
      }
    }
  }
  SpectralField out(N_out);
  const double kappa = raw_to_normalized();
  auto& c = out.coeffs();
  for (int j = 0; j < tout->size(); ++j) {
    Vec3 r(acc[3 * j], acc[3 * j + 1], acc[3 * j + 2]);
    c[2 * j] = kappa * tout->x1(j).dot(r);
    c[2 * j + 1] = kappa * tout->x2(j).dot(r);
  }
  return out;
}

}  // namespace

SpectralField convective_term(const SpectralField& u, int N_out) { return bilinear_term(u, u, N_out); }

Eigen::MatrixXd convective_jacobian(const SpectralField& u, int N_out) {
  N_out = resolve_out(N_out, u);
  const Kernel& K = kernel(u.N_max(), N_out);
  const auto& tin = u.trunc();
  const auto tout = Truncation::get(N_out);
  const auto& tab = phases();
  const double kappa = raw_to_normalized();
  const int P = tin.size();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(tout->dim(), tin.dim());

  std::vector<Vec3> r(P);
  std::vector<Eigen::Matrix<double, 3, 2>> X(P);
  for (int j = 0; j < P; ++j) {
    r[j] = u.r3(j);
    X[j].col(0) = tin.x1(j);
    X[j].col(1) = tin.x2(j);
  }
  std::vector<Eigen::Matrix<double, 2, 3>> Xo(tout->size());
  for (int j = 0; j < tout->size(); ++j) {
    Xo[j].row(0) = tout->x1(j).transpose();
    Xo[j].row(1) = tout->x2(j).transpose();
  }

  for (int l = 0; l < P; ++l) {
    const int cl = cls_of(tin.positive(l));
    const int base = K.center + K.off[l];
    for (int m = 0; m < P; ++m) {
      const Vec3& km = tin.kvec(m);
      const double s = r[l].dot(km);
      const bool bm_zero = r[m].isZero(0.0);
      if (s == 0.0 && bm_zero) continue;
      const int cm = cls_of(tin.positive(m));
      for (int sgn = 0; sgn < 2; ++sgn) {
        const size_t idx = static_cast<size_t>(sgn == 0 ? base + K.off[m] : base - K.off[m]);
        if (K.pos[idx] < 0) continue;
        const Phase& ph = sgn == 0 ? tab.plus[cl][cm] : tab.minus[cl][cm];
        int o;
        double f;
        if (!ph.imag) {
          o = K.pos[idx];
          f = ph.val;
        } else {
          o = K.neg[idx];
          f = K.tpos[idx] ? ph.val : -ph.val;
        }
        f *= kappa;
        // d/dc_l: f (X_o^T b_m)(m^T X_l);  d/dc_m: f s X_o^T X_m
        if (!bm_zero) {
          Eigen::Vector2d xb = Xo[o] * r[m];
          Eigen::RowVector2d mx = km.transpose() * X[l];
          J.block<2, 2>(2 * o, 2 * l) += f * xb * mx;
        }
        if (s != 0.0) J.block<2, 2>(2 * o, 2 * m) += (f * s) * (Xo[o] * X[m]);
      }
    }
  }
  return J;
}

namespace {

// Separable direct trig summation on a G^3 grid: f(x) = sum_k F[k] e^{i k.x}.
struct GridTransform {
  int n, G;  // n = 2 N + 1 frequencies per axis
  std::vector<cplx> phase;  // phase[kk * G + x] = exp(i (kk - N) 2 pi x / G)

  GridTransform(int N, int grid) : n(2 * N + 1), G(grid), phase(static_cast<size_t>(n) * grid) {
    for (int a = 0; a < n; ++a)
      for (int x = 0; x < G; ++x) {
        double th = 2.0 * std::numbers::pi * (a - N) * x / G;
        phase[static_cast<size_t>(a) * G + x] = cplx(std::cos(th), std::sin(th));
      }
  }

  // F indexed [a][b][c] with n^3 entries, output f[x][y][z] real part with G^3 entries.
  std::vector<double> synth(const std::vector<cplx>& F) const {
    std::vector<cplx> t1(static_cast<size_t>(n) * n * G, 0.0), t2(static_cast<size_t>(n) * G * G, 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          cplx v = F[(static_cast<size_t>(a) * n + b) * n + c];
          if (v == 0.0) continue;
          for (int z = 0; z < G; ++z) t1[(static_cast<size_t>(a) * n + b) * G + z] += v * phase[c * G + z];
        }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int z = 0; z < G; ++z) {
          cplx v = t1[(static_cast<size_t>(a) * n + b) * G + z];
          for (int y = 0; y < G; ++y) t2[(static_cast<size_t>(a) * G + y) * G + z] += v * phase[b * G + y];
        }
    std::vector<double> f(static_cast<size_t>(G) * G * G, 0.0);
    for (int a = 0; a < n; ++a)
      for (int y = 0; y < G; ++y)
        for (int z = 0; z < G; ++z) {
          cplx v = t2[(static_cast<size_t>(a) * G + y) * G + z];
          for (int x = 0; x < G; ++x) f[(static_cast<size_t>(x) * G + y) * G + z] += (v * phase[a * G + x]).real();
        }
    return f;
  }

  // F[k] = G^{-3} sum_x f(x) e^{-i k.x}
  std::vector<cplx> analyze(const std::vector<double>& f) const {
    std::vector<cplx> t1(static_cast<size_t>(n) * G * G, 0.0), t2(static_cast<size_t>(n) * n * G, 0.0);
    for (int x = 0; x < G; ++x)
      for (int a = 0; a < n; ++a) {
        cplx ph = std::conj(phase[a * G + x]);
        for (int y = 0; y < G; ++y)
          for (int z = 0; z < G; ++z)
            t1[(static_cast<size_t>(a) * G + y) * G + z] += ph * f[(static_cast<size_t>(x) * G + y) * G + z];
      }
    for (int a = 0; a < n; ++a)
      for (int y = 0; y < G; ++y)
        for (int b = 0; b < n; ++b) {
          cplx ph = std::conj(phase[b * G + y]);
          for (int z = 0; z < G; ++z)
            t2[(static_cast<size_t>(a) * n + b) * G + z] += ph * t1[(static_cast<size_t>(a) * G + y) * G + z];
        }
    std::vector<cplx> F(static_cast<size_t>(n) * n * n, 0.0);
    const double norm = 1.0 / (static_cast<double>(G) * G * G);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) {
          cplx s = 0.0;
          for (int z = 0; z < G; ++z) s += std::conj(phase[c * G + z]) * t2[(static_cast<size_t>(a) * n + b) * G + z];
          F[(static_cast<size_t>(a) * n + b) * n + c] = s * norm;
        }
    return F;
  }
};

}  // namespace

SpectralField pseudospectral_oracle(const SpectralField& u, int G, int N_out) {
  const int N = u.N_max();
  N_out = resolve_out(N_out, u);
  if (G < 4 * N + 1) throw std::invalid_argument("pseudospectral_oracle: grid_per_axis must be >= 4 N_max + 1");
  const int n = 2 * N + 1;
  const auto& t = u.trunc();
  const double inv_nu = raw_to_normalized();
  auto cell = [&](const ModeIndex& k) {
    return (static_cast<size_t>(k.k1 + N) * n + (k.k2 + N)) * n + (k.k3 + N);
  };
  // Fourier coefficients of u_i and d_d u_i.
  std::vector<std::vector<cplx>> Fu(3, std::vector<cplx>(static_cast<size_t>(n) * n * n, 0.0));
  for (int j = 0; j < t.size(); ++j) {
    const auto& k = t.mode(j);
    const Vec3 U = u.r3(j) * inv_nu;
    const cplx g = gamma_of(t.positive(j));
    for (int i = 0; i < 3; ++i) {
      Fu[i][cell(k)] += 0.5 * g * U[i];
      Fu[i][cell(-k)] += 0.5 * std::conj(g) * U[i];
    }
  }
  GridTransform gt(N, G);
  std::vector<std::vector<double>> uval(3), du(9);
  for (int i = 0; i < 3; ++i) {
    uval[i] = gt.synth(Fu[i]);
    for (int d = 0; d < 3; ++d) {
      std::vector<cplx> D(Fu[i].size());
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c) {
            const int kk[3] = {a - N, b - N, c - N};
            size_t id = (static_cast<size_t>(a) * n + b) * n + c;
            D[id] = cplx(0.0, kk[d]) * Fu[i][id];
          }
      du[3 * i + d] = gt.synth(D);
    }
  }
  const size_t npts = static_cast<size_t>(G) * G * G;
  SpectralField out(N_out);
  const auto tout = Truncation::get(N_out);
  std::vector<std::vector<cplx>> Ff(3);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> f(npts);
    for (size_t p = 0; p < npts; ++p) f[p] = uval[0][p] * du[3 * i][p] + uval[1][p] * du[3 * i + 1][p] + uval[2][p] * du[3 * i + 2][p];
    Ff[i] = gt.analyze(f);
  }
  const double nu = 1.0 / inv_nu;
  for (int j = 0; j < tout->size(); ++j) {
    const auto& k = tout->mode(j);
    // f = sum_t 2 Re(F_t) e_t + 2 Im(F_t) e_{-t} over positive t.
    const ModeIndex tp = tout->positive(j) ? k : -k;
    Vec3 re, im;
    for (int i = 0; i < 3; ++i) {
      cplx F = Ff[i][cell(tp)];
      re[i] = 2.0 * F.real();
      im[i] = 2.0 * F.imag();
    }
    const Vec3 raw = tout->positive(j) ? re : im;
    out.coeffs()[2 * j] = nu * tout->x1(j).dot(raw);
    out.coeffs()[2 * j + 1] = nu * tout->x2(j).dot(raw);
  }
  return out;
}

NormMonitor fit_bilinear_constant(int N_max, double beta, int samples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  NormMonitor mon{beta, 0.0, samples};
  for (int s = 0; s < samples; ++s) {
    SpectralField u = random_field(N_max, gen, 2.0);
    SpectralField v = random_field(N_max, gen, 2.0);
    double lhs = sobolev_norm(bilinear_term(u, v), 2.0 * beta - 0.5);
    double rhs = sobolev_norm(u, 2.0 * beta + 0.5) * sobolev_norm(v, 2.0 * beta + 0.5);
    if (rhs > 0.0) mon.constant = std::max(mon.constant, lhs / rhs);
  }
  return mon;
}

}  // namespace degnse
