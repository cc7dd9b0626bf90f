#include "degnse/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace degnse {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t split_seed(std::uint64_t parent, std::uint64_t label, std::uint64_t index) {
  return mix64(mix64(mix64(parent) ^ label) ^ (index * 0x632be59bd9b4e019ULL));
}

namespace {

std::uint64_t mode_key(const ModeIndex& k) {
  auto enc = [](int v) { return static_cast<std::uint64_t>(v + 512) & 0x3ff; };
  return (enc(k.k1) << 20) | (enc(k.k2) << 10) | enc(k.k3);
}

double to_unit(std::uint64_t x) { return (static_cast<double>(x >> 11) + 0.5) * 0x1.0p-53; }

}  // namespace

double counter_normal(std::uint64_t seed, std::uint64_t step, std::uint64_t key, std::uint64_t comp) {
  std::uint64_t h = mix64(seed ^ mix64(step ^ mix64((key << 2) | comp)));
  double u1 = to_unit(h), u2 = to_unit(mix64(h));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

NoisePath::NoisePath(std::uint64_t seed, double dt_base) : seed_(seed), dt_base_(dt_base) {
  if (!(dt_base > 0.0)) throw std::invalid_argument("NoisePath: dt_base must be positive");
}

Eigen::VectorXd NoisePath::increment(const Truncation& t, std::int64_t step, int stride) const {
  if (stride < 1) throw std::invalid_argument("NoisePath: stride must be >= 1");
  Eigen::VectorXd dw = Eigen::VectorXd::Zero(t.dim());
  const double s = std::sqrt(dt_base_);
  for (int j = 0; j < t.size(); ++j) {
    const std::uint64_t key = mode_key(t.mode(j));
    for (int c = 0; c < 2; ++c) {
      double acc = 0.0;
      for (int f = 0; f < stride; ++f)
        acc += counter_normal(seed_, static_cast<std::uint64_t>(step * stride + f), key, c);
      dw[2 * j + c] = s * acc;
    }
  }
  return dw;
}

}  // namespace degnse
