#include "degnse/simulator.hpp"

#include "degnse/nonlinearity.hpp"
#include "degnse/parallel.hpp"

#include <cmath>
#include <random>

namespace degnse {

NumericalFailure::NumericalFailure(const std::string& stage, double time)
    : std::runtime_error(stage + ": non-finite state at t=" + std::to_string(time)), stage_(stage), time_(time) {}

namespace {

struct Weights {
  Eigen::VectorXd E, phi;  // e^{-|k|^2 dt} and (1 - E)/|k|^2
};

Weights stokes_weights(const Truncation& t, double dt) {
  Weights w{Eigen::VectorXd(t.dim()), Eigen::VectorXd(t.dim())};
  for (int j = 0; j < t.size(); ++j) {
    double a = t.norm2(j);
    w.E[2 * j] = w.E[2 * j + 1] = std::exp(-a * dt);
    w.phi[2 * j] = w.phi[2 * j + 1] = -std::expm1(-a * dt) / a;
  }
  return w;
}

SpectralField step_with(const SpectralField& u, const Weights& w, const Eigen::VectorXd& dW, const ModelSpec& spec) {
  SpectralField out = u;
  SpectralField F = nonlinear_drift(u, spec);
  Eigen::VectorXd amp = spec.use_cutoff ? state_covariance(u, spec) : q_diag(u.trunc(), spec.noise);
  out.coeffs() = w.E.cwiseProduct(u.coeffs() + amp.cwiseProduct(dW)) + w.phi.cwiseProduct(F.coeffs());
  return out;
}

}  // namespace

SpectralField step(const SpectralField& u, double dt, const Eigen::VectorXd& dW, const ModelSpec& spec) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  return step_with(u, stokes_weights(u.trunc(), dt), dW, spec);
}

Eigen::VectorXd Trajectory::increment(int n) const { return path().increment(*Truncation::get(spec.N_max), n, noise_stride); }

Trajectory simulate(const SpectralField& x, double T, double dt, std::uint64_t seed, const ModelSpec& spec,
                    const SimulateOptions& opts) {
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("simulate: T and dt must be positive");
  if (x.N_max() != spec.N_max) throw std::invalid_argument("simulate: field truncation differs from spec");
  Trajectory tr;
  tr.spec = spec;
  tr.seed = seed;
  tr.dt = dt;
  tr.noise_stride = opts.noise_stride;
  tr.record_stride = opts.record_stride;
  const int n = static_cast<int>(std::llround(T / dt));
  const NoisePath path = tr.path();
  const Weights w = stokes_weights(x.trunc(), dt);
  const double wa = spec.noise.w_alpha();

  SpectralField u = x;
  auto record = [&](int i) {
    tr.w_norm.push_back(sobolev_norm(u, wa));
    tr.h_norm.push_back(sobolev_norm(u, 0.0));
    if (tr.tau == kNever && tr.w_norm.back() >= spec.cutoff.rho) tr.tau = i * dt;
    if (i % opts.record_stride == 0) {
      tr.t.push_back(i * dt);
      tr.u.push_back(u);
    }
  };
  record(0);
  for (int i = 0; i < n; ++i) {
    if (opts.stop_at_exit && tr.tau != kNever) break;
    u = step_with(u, w, path.increment(x.trunc(), i, opts.noise_stride), spec);
    if (!u.coeffs().allFinite()) throw NumericalFailure("simulate", (i + 1) * dt);
    record(i + 1);
  }
  return tr;
}

CoupledReport coupled_weak_strong(const SpectralField& x, double T, double dt, std::uint64_t seed, ModelSpec spec) {
  const double wa = spec.noise.w_alpha();
  if (sobolev_norm(x, wa) >= spec.cutoff.rho) throw std::invalid_argument("coupled_weak_strong: need |x|_W < rho");
  spec.cutoff.delta = 0.0;
  ModelSpec plain = spec;
  spec.use_cutoff = true;
  plain.use_cutoff = false;
  const int n = static_cast<int>(std::llround(T / dt));
  const NoisePath path(seed, dt);
  const Weights w = stokes_weights(x.trunc(), dt);
  CoupledReport rep;
  rep.steps = n;
  SpectralField a = x, b = x;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd dW = path.increment(x.trunc(), i);
    a = step_with(a, w, dW, spec);
    b = step_with(b, w, dW, plain);
    if (!a.coeffs().allFinite() || !b.coeffs().allFinite()) throw NumericalFailure("coupled", (i + 1) * dt);
    double d = (a.coeffs() - b.coeffs()).lpNorm<Eigen::Infinity>();
    if (rep.tau == kNever) {
      rep.sup_before = std::max(rep.sup_before, d);
      if (sobolev_norm(a, wa) >= spec.cutoff.rho) rep.tau = (i + 1) * dt;
    } else {
      rep.sup_after = std::max(rep.sup_after, d);
    }
  }
  return rep;
}

TailEstimate wilson_interval(int hits, int n) {
  TailEstimate e;
  e.hits = hits;
  e.replicas = n;
  if (n == 0) return e;
  const double z = 1.959963984540054;
  double p = static_cast<double>(hits) / n;
  double den = 1.0 + z * z / n;
  double c = (p + z * z / (2.0 * n)) / den;
  double h = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / den;
  e.p = p;
  e.lo = std::max(0.0, c - h);
  e.hi = std::min(1.0, c + h);
  return e;
}

TailEstimate stopping_time_tail(const SpectralField& x, double h_radius, double eps, int replicas, std::uint64_t seed,
                                const ModelSpec& spec, int workers) {
  const double wa = spec.noise.w_alpha();
  if (sobolev_norm(x, wa) >= spec.cutoff.rho) throw std::invalid_argument("stopping_time_tail: need |x|_W < rho");
  std::vector<char> hit(replicas, 0);
  const double dt = eps / 100.0;
  const int dim = x.trunc().dim();
  parallel_for(replicas, workers, [&](int r) {
    std::mt19937_64 gen(split_seed(seed, 0x7461696c, r));
    SpectralField h = SpectralField::zero_like(x);
    std::normal_distribution<double> nd;
    for (int i = 0; i < dim; ++i) h.coeffs()[i] = nd(gen);
    double hn = sobolev_norm(h, wa);
    double rad = h_radius * std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(gen), 1.0 / dim);
    if (hn > 0) h *= rad / hn;
    SimulateOptions o;
    o.stop_at_exit = true;
    o.record_stride = 1 << 30;
    auto tr = simulate(x + h, eps, dt, split_seed(seed, 0x70617468, r), spec, o);
    hit[r] = tr.tau >= eps;
  });
  int hits = 0;
  for (char c : hit) hits += c;
  return wilson_interval(hits, replicas);
}

SpectralField integrate_forced(const SpectralField& x, double t0, double t1, int steps, const Forcing& f,
                               const Observer& observer) {
  if (steps < 1) throw std::invalid_argument("integrate_forced: steps must be >= 1");
  const double h = (t1 - t0) / steps;
  const auto& tr = x.trunc();
  const Eigen::VectorXd Eh = stokes_weights(tr, h).E, E2 = stokes_weights(tr, 0.5 * h).E;
  auto Nl = [&](double t, const Eigen::VectorXd& c) {
    SpectralField v(x.trunc_ptr(), c);
    SpectralField r = f ? f(t) : SpectralField::zero_like(x);
    r -= convective_term(v);
    return Eigen::VectorXd(r.coeffs());
  };
  Eigen::VectorXd u = x.coeffs();
  if (observer) observer(t0, x);
  for (int i = 0; i < steps; ++i) {
    const double t = t0 + i * h;
    Eigen::VectorXd k1 = Nl(t, u);
    Eigen::VectorXd eu = E2.cwiseProduct(u);
    Eigen::VectorXd k2 = Nl(t + 0.5 * h, eu + 0.5 * h * E2.cwiseProduct(k1));
    Eigen::VectorXd k3 = Nl(t + 0.5 * h, eu + 0.5 * h * k2);
    Eigen::VectorXd k4 = Nl(t + h, Eh.cwiseProduct(u) + h * E2.cwiseProduct(k3));
    u = Eh.cwiseProduct(u) + (h / 6.0) * (Eh.cwiseProduct(k1) + 2.0 * E2.cwiseProduct(k2 + k3) + k4);
    if (!u.allFinite()) throw NumericalFailure("integrate_forced", t + h);
    if (observer) observer(t + h, SpectralField(x.trunc_ptr(), u));
  }
  return SpectralField(x.trunc_ptr(), u);
}

}  // namespace degnse
