#include "degnse/modes.hpp"

#include <Eigen/Geometry>

#include <map>
#include <mutex>
#include <stdexcept>

namespace degnse {

SignClass sign_class(const ModeIndex& k) {
  if (k.is_zero()) throw std::invalid_argument("sign_class: zero mode");
  if (k.k1 > 0 || (k.k1 == 0 && k.k2 > 0) || (k.k1 == 0 && k.k2 == 0 && k.k3 > 0))
    return SignClass::Positive;
  return SignClass::Negative;
}

PerpBasis perp_basis(const ModeIndex& k) {
  if (k.is_zero()) throw std::invalid_argument("perp_basis: zero mode");
  const Vec3 kh = k.vec().normalized();
  Vec3 e = Vec3::UnitX();
  if (k.k2 == 0 && k.k3 == 0) e = Vec3::UnitY();
  Vec3 x1 = e - e.dot(kh) * kh;
  x1.normalize();
  return {x1, kh.cross(x1)};
}

Vec3 leray_project(const ModeIndex& k, const Vec3& eta) {
  if (k.is_zero()) throw std::invalid_argument("leray_project: zero mode");
  const Vec3 kv = k.vec();
  return eta - (kv.dot(eta) / kv.squaredNorm()) * kv;
}

std::vector<ModeIndex> enumerate_modes(int N, Window window, int N_max) {
  if (N < 1) throw std::invalid_argument("enumerate_modes: N must be >= 1");
  int lo = 0, hi = N;
  if (window == Window::High) {
    if (N_max < N) throw std::invalid_argument("enumerate_modes: N_max < N for High window");
    lo = N;
    hi = N_max;
  }
  std::vector<ModeIndex> out;
  for (int a = -hi; a <= hi; ++a)
    for (int b = -hi; b <= hi; ++b)
      for (int c = -hi; c <= hi; ++c) {
        ModeIndex k{a, b, c};
        int s = k.sup_norm();
        if (s > lo && s <= hi) out.push_back(k);
      }
  return out;
}

Truncation::Truncation(int N) : N_(N) {
  if (N < 1) throw std::invalid_argument("Truncation: N must be >= 1");
  modes_ = enumerate_modes(N);
  const int w = 2 * N + 1;
  lut_.assign(static_cast<size_t>(w) * w * w, -1);
  for (int j = 0; j < size(); ++j) {
    const auto& k = modes_[j];
    lut_[((k.k1 + N) * w + (k.k2 + N)) * w + (k.k3 + N)] = j;
  }
  neg_.resize(size());
  kvec_.resize(size());
  x1_.resize(size());
  x2_.resize(size());
  norm2_.resize(size());
  positive_.resize(size());
  for (int j = 0; j < size(); ++j) {
    const auto& k = modes_[j];
    neg_[j] = index(-k);
    kvec_[j] = k.vec();
    auto pb = perp_basis(k);
    x1_[j] = pb.x1;
    x2_[j] = pb.x2;
    norm2_[j] = k.norm2();
    positive_[j] = is_positive(k);
  }
}

int Truncation::index(const ModeIndex& k) const {
  if (k.is_zero() || k.sup_norm() > N_) return -1;
  const int w = 2 * N_ + 1;
  return lut_[((k.k1 + N_) * w + (k.k2 + N_)) * w + (k.k3 + N_)];
}

std::vector<int> Truncation::low_indices(int n) const {
  std::vector<int> out;
  for (int j = 0; j < size(); ++j)
    if (modes_[j].sup_norm() <= n) out.push_back(j);
  return out;
}

std::shared_ptr<const Truncation> Truncation::get(int N) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Truncation>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(N);
  if (it != cache.end()) return it->second;
  auto t = std::make_shared<const Truncation>(N);
  cache.emplace(N, t);
  return t;
}

}  // namespace degnse
