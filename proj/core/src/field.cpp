#include "degnse/field.hpp"

#include <cmath>
#include <stdexcept>

namespace degnse {

SpectralField::SpectralField(int N_max) : SpectralField(Truncation::get(N_max)) {}

SpectralField::SpectralField(std::shared_ptr<const Truncation> t)
    : trunc_(std::move(t)), c_(Eigen::VectorXd::Zero(trunc_->dim())) {}

SpectralField::SpectralField(std::shared_ptr<const Truncation> t, Eigen::VectorXd c)
    : trunc_(std::move(t)), c_(std::move(c)) {
  if (c_.size() != trunc_->dim()) throw std::invalid_argument("SpectralField: coefficient size mismatch");
}

Eigen::Vector2d SpectralField::coeff(const ModeIndex& k) const {
  int j = trunc_->index(k);
  if (j < 0) return Eigen::Vector2d::Zero();
  return {c_[2 * j], c_[2 * j + 1]};
}

void SpectralField::set_coeff(const ModeIndex& k, const Eigen::Vector2d& v) {
  int j = trunc_->index(k);
  if (j < 0) throw std::out_of_range("SpectralField: mode outside truncation");
  c_[2 * j] = v[0];
  c_[2 * j + 1] = v[1];
}

Vec3 SpectralField::r3(const ModeIndex& k) const {
  int j = trunc_->index(k);
  if (j < 0) return Vec3::Zero();
  return r3(j);
}

void SpectralField::set_r3(const ModeIndex& k, const Vec3& v) {
  int j = trunc_->index(k);
  if (j < 0) throw std::out_of_range("SpectralField: mode outside truncation");
  c_[2 * j] = trunc_->x1(j).dot(v);
  c_[2 * j + 1] = trunc_->x2(j).dot(v);
}

SpectralField SpectralField::embed(int N) const {
  if (N == N_max()) return *this;
  SpectralField out(N);
  const auto& to = out.trunc();
  for (int j = 0; j < trunc_->size(); ++j) {
    int i = to.index(trunc_->mode(j));
    if (i < 0) continue;
    out.c_[2 * i] = c_[2 * j];
    out.c_[2 * i + 1] = c_[2 * j + 1];
  }
  return out;
}

SpectralField& SpectralField::operator+=(const SpectralField& o) {
  if (o.trunc_ != trunc_) throw std::invalid_argument("SpectralField: truncation mismatch");
  c_ += o.c_;
  return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& o) {
  if (o.trunc_ != trunc_) throw std::invalid_argument("SpectralField: truncation mismatch");
  c_ -= o.c_;
  return *this;
}

SpectralField& SpectralField::operator*=(double s) {
  c_ *= s;
  return *this;
}

Eigen::VectorXd sobolev_weights(const Truncation& t, double alpha) {
  Eigen::VectorXd w(t.dim());
  for (int j = 0; j < t.size(); ++j) w[2 * j] = w[2 * j + 1] = std::pow(t.norm2(j), alpha);
  return w;
}

double sobolev_norm(const SpectralField& u, double alpha) { return std::sqrt(sobolev_inner(u, u, alpha)); }

double sobolev_inner(const SpectralField& u, const SpectralField& v, double alpha) {
  if (u.trunc_ptr() != v.trunc_ptr()) throw std::invalid_argument("sobolev_inner: truncation mismatch");
  const auto& t = u.trunc();
  const auto& a = u.coeffs();
  const auto& b = v.coeffs();
  double s = 0.0;
  for (int j = 0; j < t.size(); ++j) {
    double d = a[2 * j] * b[2 * j] + a[2 * j + 1] * b[2 * j + 1];
    if (d != 0.0) s += (alpha == 0.0 ? 1.0 : std::pow(t.norm2(j), alpha)) * d;
  }
  return s;
}

SpectralField project_window(const SpectralField& u, int N, Window part) {
  if (N > u.N_max() || N < 0) throw std::invalid_argument("project_window: N outside truncation");
  SpectralField out = u;
  const auto& t = u.trunc();
  for (int j = 0; j < t.size(); ++j) {
    bool low = t.sup_norm(j) <= N;
    if ((part == Window::Low) != low) out.coeffs()[2 * j] = out.coeffs()[2 * j + 1] = 0.0;
  }
  return out;
}

SpectralField apply_stokes(const SpectralField& u) {
  SpectralField out = u;
  const auto& t = u.trunc();
  for (int j = 0; j < t.size(); ++j) {
    out.coeffs()[2 * j] *= t.norm2(j);
    out.coeffs()[2 * j + 1] *= t.norm2(j);
  }
  return out;
}

SpectralField stokes_semigroup(const SpectralField& u, double time) {
  SpectralField out = u;
  const auto& t = u.trunc();
  for (int j = 0; j < t.size(); ++j) {
    double e = std::exp(-t.norm2(j) * time);
    out.coeffs()[2 * j] *= e;
    out.coeffs()[2 * j + 1] *= e;
  }
  return out;
}

SpectralField single_mode(int N_max, const ModeIndex& k, double c1, double c2) {
  SpectralField u(N_max);
  u.set_coeff(k, {c1, c2});
  return u;
}

SpectralField random_field(int N_max, std::mt19937_64& gen, double decay) {
  SpectralField u(N_max);
  std::normal_distribution<double> nd(0.0, 1.0);
  const auto& t = u.trunc();
  for (int j = 0; j < t.size(); ++j) {
    double s = std::pow(t.norm2(j), -0.5 * decay);
    u.coeffs()[2 * j] = s * nd(gen);
    u.coeffs()[2 * j + 1] = s * nd(gen);
  }
  return u;
}

}  // namespace degnse
