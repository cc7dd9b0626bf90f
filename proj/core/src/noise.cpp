#include "degnse/noise.hpp"

#include "degnse/nonlinearity.hpp"

#include <cmath>

namespace degnse {

namespace {

double s7(double s) { return s * s * s * s * (35.0 + s * (-84.0 + s * (70.0 - 20.0 * s))); }
double s7p(double s) { return 140.0 * s * s * s * (1.0 - s) * (1.0 - s) * (1.0 - s); }
double s7pp(double s) { return 420.0 * s * s * (1.0 - s) * (1.0 - s) * (1.0 - 2.0 * s); }

}  // namespace

double smoothstep7(double s) { return s <= 0.0 ? 0.0 : s >= 1.0 ? 1.0 : s7(s); }
double smoothstep7_prime(double s) { return s <= 0.0 || s >= 1.0 ? 0.0 : s7p(s); }

double chi(double r) { return 1.0 - smoothstep7(r - 1.0); }
double chi_prime(double r) { return -smoothstep7_prime(r - 1.0); }
double chi_second(double r) {
  double s = r - 1.0;
  return s <= 0.0 || s >= 1.0 ? 0.0 : -s7pp(s);
}

double NoiseSpec::q(const ModeIndex& k) const {
  if (k.sup_norm() <= N0) return 0.0;
  return q_scale * std::pow(static_cast<double>(k.norm2()), -0.5 * (2.0 * alpha0 + 1.5));
}

double NoiseSpec::q_bar(const ModeIndex& k) const { return k.sup_norm() <= N0 ? qbar : 0.0; }

void ModelSpec::validate() const {
  if (N_max < 1) throw std::invalid_argument("N_max must be >= 1");
  if (noise.N0 < 1) throw std::invalid_argument("N0 must be >= 1");
  if (!(noise.N0 < N && N <= N_max)) throw std::invalid_argument("need N0 < N <= N_max");
  if (!(noise.alpha0 > 0.5)) throw std::invalid_argument("alpha0 must exceed 1/2");
  if (!(cutoff.rho > 0.0)) throw std::invalid_argument("rho must be positive");
  if (cutoff.delta < 0.0) throw std::invalid_argument("delta must be nonnegative");
  if (noise.q_scale < 0.0 || noise.qbar <= 0.0) throw std::invalid_argument("noise amplitudes out of range");
}

Eigen::VectorXd q_diag(const Truncation& t, const NoiseSpec& spec) {
  Eigen::VectorXd q(t.dim());
  for (int j = 0; j < t.size(); ++j) q[2 * j] = q[2 * j + 1] = spec.q(t.mode(j));
  return q;
}

Eigen::VectorXd qbar_diag(const Truncation& t, const NoiseSpec& spec) {
  Eigen::VectorXd q(t.dim());
  for (int j = 0; j < t.size(); ++j) q[2 * j] = q[2 * j + 1] = spec.q_bar(t.mode(j));
  return q;
}

SpectralField apply_Q(const SpectralField& f, const NoiseSpec& spec) {
  SpectralField out = f;
  out.coeffs().array() *= q_diag(f.trunc(), spec).array();
  return out;
}

SpectralField apply_Q_inverse_high(const SpectralField& f, const NoiseSpec& spec) {
  const auto& t = f.trunc();
  SpectralField out = f;
  for (int j = 0; j < t.size(); ++j) {
    if (t.sup_norm(j) <= spec.N0) {
      if (f.coeffs()[2 * j] != 0.0 || f.coeffs()[2 * j + 1] != 0.0)
        throw std::domain_error("apply_Q_inverse_high: input has mass on an unforced low mode");
      continue;
    }
    double q = spec.q(t.mode(j));
    out.coeffs()[2 * j] /= q;
    out.coeffs()[2 * j + 1] /= q;
  }
  return out;
}

Eigen::VectorXd state_covariance_at(double w_norm, const Truncation& t, const ModelSpec& spec) {
  Eigen::VectorXd q = q_diag(t, spec.noise);
  double g = 1.0 - chi(w_norm / spec.cutoff.rho);
  if (g != 0.0) q += g * qbar_diag(t, spec.noise);
  return q;
}

Eigen::VectorXd state_covariance(const SpectralField& u, const ModelSpec& spec) {
  return state_covariance_at(sobolev_norm(u, spec.noise.w_alpha()), u.trunc(), spec);
}

SpectralField mollify_high(const SpectralField& f, int N, double delta) {
  if (delta == 0.0) return f;
  SpectralField out = f;
  const auto& t = f.trunc();
  for (int j = 0; j < t.size(); ++j) {
    if (t.sup_norm(j) <= N) continue;
    double e = std::exp(-t.norm2(j) * delta);
    out.coeffs()[2 * j] *= e;
    out.coeffs()[2 * j + 1] *= e;
  }
  return out;
}

SpectralField nonlinear_drift(const SpectralField& u, const ModelSpec& spec) {
  double c = 1.0;
  if (spec.use_cutoff) c = chi(sobolev_norm(u, spec.noise.w_alpha()) / (3.0 * spec.cutoff.rho));
  if (c == 0.0) return SpectralField::zero_like(u);
  SpectralField b = convective_term(u);
  if (spec.use_cutoff) b = mollify_high(b, spec.N, spec.cutoff.delta);
  b *= -c;
  return b;
}

SpectralField cutoff_drift(const SpectralField& u, const ModelSpec& spec) {
  return nonlinear_drift(u, spec) - apply_stokes(u);
}

}  // namespace degnse
