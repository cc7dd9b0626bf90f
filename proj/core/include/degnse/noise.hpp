#pragma once

#include "degnse/field.hpp"

#include <stdexcept>

namespace degnse {

// Degree-7 smoothstep profile: 1 on [0,1], 0 on [2,inf), C^3.
double chi(double r);
double chi_prime(double r);
double chi_second(double r);

// Same family on [0,1], rising from 0 to 1; used for time bridges.
double smoothstep7(double s);
double smoothstep7_prime(double s);

struct NoiseSpec {
  int N0 = 1;
  double alpha0 = 1.0;
  // q_k = q_scale * |k|^{-(2 alpha0 + 3/2)} on |k|_inf > N0, qbar_k = qbar on |k|_inf <= N0
  double q_scale = 1.0;
  double qbar = 1.0;

  double q(const ModeIndex& k) const;
  double q_bar(const ModeIndex& k) const;
  double w_alpha() const { return w_exponent(alpha0); }
};

struct CutoffSpec {
  double rho = 1.0;
  double delta = 0.0;  // high-mode mollifier exp(-|k|^2 delta) on |k|_inf > N
};

struct ModelSpec {
  int N_max = 2;
  int N = 1;  // low/high split level
  NoiseSpec noise;
  CutoffSpec cutoff;
  bool use_cutoff = true;  // false: plain truncated dynamics with covariance Q only

  void validate() const;
};

// Per-component amplitude vectors (length 2P) on truncation t.
Eigen::VectorXd q_diag(const Truncation& t, const NoiseSpec& spec);
Eigen::VectorXd qbar_diag(const Truncation& t, const NoiseSpec& spec);

SpectralField apply_Q(const SpectralField& f, const NoiseSpec& spec);
// Throws std::domain_error if f has mass on |k|_inf <= N0.
SpectralField apply_Q_inverse_high(const SpectralField& f, const NoiseSpec& spec);

// Amplitudes of Q(u) = Q + (1 - chi(|u|_W / rho)) Qbar.
Eigen::VectorXd state_covariance(const SpectralField& u, const ModelSpec& spec);
Eigen::VectorXd state_covariance_at(double w_norm, const Truncation& t, const ModelSpec& spec);

// e^{-A_H delta} applied to |k|_inf > N.
SpectralField mollify_high(const SpectralField& f, int N, double delta);

// Nonlinear part only: -mollify(B(u,u)) chi(|u|_W / 3 rho), or -B(u,u) without cutoff.
SpectralField nonlinear_drift(const SpectralField& u, const ModelSpec& spec);
// -A u + nonlinear_drift(u).
SpectralField cutoff_drift(const SpectralField& u, const ModelSpec& spec);

}  // namespace degnse
