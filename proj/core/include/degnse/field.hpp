#pragma once

#include "degnse/modes.hpp"

#include <Eigen/Core>

#include <memory>
#include <random>

namespace degnse {

// Divergence-free field stored as two coefficients per mode along (x_k^1, x_k^2).
// Coefficients refer to the L2-normalized basis, so |u|_H^2 is the Euclidean sum.
class SpectralField {
 public:
  SpectralField() = default;
  explicit SpectralField(int N_max);
  SpectralField(std::shared_ptr<const Truncation> t, Eigen::VectorXd c);

  static SpectralField zero_like(const SpectralField& u) { return SpectralField(u.trunc_); }

  int N_max() const { return trunc_->N(); }
  const Truncation& trunc() const { return *trunc_; }
  const std::shared_ptr<const Truncation>& trunc_ptr() const { return trunc_; }
  bool empty() const { return !trunc_; }

  Eigen::VectorXd& coeffs() { return c_; }
  const Eigen::VectorXd& coeffs() const { return c_; }

  Eigen::Vector2d coeff(const ModeIndex& k) const;
  void set_coeff(const ModeIndex& k, const Eigen::Vector2d& v);
  // Reconstructed R^3 coefficient; perpendicular to k by construction.
  Vec3 r3(int j) const { return c_[2 * j] * trunc_->x1(j) + c_[2 * j + 1] * trunc_->x2(j); }
  Vec3 r3(const ModeIndex& k) const;
  // Stores the Leray projection of v.
  void set_r3(const ModeIndex& k, const Vec3& v);

  // Zero-pad or truncate to |k|_inf <= N.
  SpectralField embed(int N) const;

  SpectralField& operator+=(const SpectralField& o);
  SpectralField& operator-=(const SpectralField& o);
  SpectralField& operator*=(double s);
  friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
  friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
  friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

 private:
  explicit SpectralField(std::shared_ptr<const Truncation> t);
  std::shared_ptr<const Truncation> trunc_;
  Eigen::VectorXd c_;
};

// Per-component weight |k|^{2 alpha} (length 2P).
Eigen::VectorXd sobolev_weights(const Truncation& t, double alpha);

double sobolev_norm(const SpectralField& u, double alpha);
double sobolev_inner(const SpectralField& u, const SpectralField& v, double alpha);

// W = V_{2a0+1/2}, W~ = V_{2a0+3/4}.
inline double w_exponent(double alpha0) { return 2.0 * alpha0 + 0.5; }
inline double wtilde_exponent(double alpha0) { return 2.0 * alpha0 + 0.75; }

SpectralField project_window(const SpectralField& u, int N, Window part);

// Stokes operator and its semigroup, diagonal |k|^2.
SpectralField apply_stokes(const SpectralField& u);
SpectralField stokes_semigroup(const SpectralField& u, double t);

// Single-mode field c1 x_k^1 + c2 x_k^2 on e_k.
SpectralField single_mode(int N_max, const ModeIndex& k, double c1, double c2 = 0.0);

// Independent Gaussian coefficients with standard deviation |k|^{-decay}.
SpectralField random_field(int N_max, std::mt19937_64& gen, double decay = 2.0);

}  // namespace degnse
