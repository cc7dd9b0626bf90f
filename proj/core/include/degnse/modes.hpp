#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <vector>

namespace degnse {

using Vec3 = Eigen::Vector3d;

// Nonzero lattice point of Z^3.
struct ModeIndex {
  int k1 = 0, k2 = 0, k3 = 0;

  constexpr ModeIndex() = default;
  constexpr ModeIndex(int a, int b, int c) : k1(a), k2(b), k3(c) {}

  constexpr bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0; }
  constexpr int sup_norm() const {
    int a = k1 < 0 ? -k1 : k1, b = k2 < 0 ? -k2 : k2, c = k3 < 0 ? -k3 : k3;
    return a > b ? (a > c ? a : c) : (b > c ? b : c);
  }
  constexpr int norm2() const { return k1 * k1 + k2 * k2 + k3 * k3; }
  constexpr int dot(const ModeIndex& o) const { return k1 * o.k1 + k2 * o.k2 + k3 * o.k3; }
  Vec3 vec() const { return Vec3(k1, k2, k3); }

  constexpr ModeIndex operator-() const { return {-k1, -k2, -k3}; }
  constexpr ModeIndex operator+(const ModeIndex& o) const { return {k1 + o.k1, k2 + o.k2, k3 + o.k3}; }
  constexpr ModeIndex operator-(const ModeIndex& o) const { return {k1 - o.k1, k2 - o.k2, k3 - o.k3}; }
  constexpr bool operator==(const ModeIndex&) const = default;
  constexpr auto operator<=>(const ModeIndex&) const = default;
};

enum class SignClass { Positive, Negative };

// Positive iff k1>0, or k1=0 and k2>0, or k1=k2=0 and k3>0.
SignClass sign_class(const ModeIndex& k);
inline bool is_positive(const ModeIndex& k) { return sign_class(k) == SignClass::Positive; }

struct PerpBasis {
  Vec3 x1, x2;
};

// Gram-Schmidt of k against the first of e1, e2, e3 not parallel to k; x2 = khat x x1.
PerpBasis perp_basis(const ModeIndex& k);

Vec3 leray_project(const ModeIndex& k, const Vec3& eta);

enum class Window { Low, High };

// Low: 0 < |k|_inf <= N.  High: N < |k|_inf <= N_max.  Lexicographic order.
std::vector<ModeIndex> enumerate_modes(int N, Window window = Window::Low, int N_max = 0);

// Real dimension of span{e_k^i : 0 < |k|_inf <= N}.
constexpr int low_dimension(int N) { return 2 * (2 * N + 1) * (2 * N + 1) * (2 * N + 1) - 2; }

// Cached per-mode geometry for the window |k|_inf <= N. Immutable and shared.
class Truncation {
 public:
  static std::shared_ptr<const Truncation> get(int N);

  int N() const { return N_; }
  int size() const { return static_cast<int>(modes_.size()); }
  int dim() const { return 2 * size(); }

  const ModeIndex& mode(int j) const { return modes_[j]; }
  const std::vector<ModeIndex>& modes() const { return modes_; }
  // -1 when k is zero or outside the window.
  int index(const ModeIndex& k) const;
  int neg_index(int j) const { return neg_[j]; }

  const Vec3& kvec(int j) const { return kvec_[j]; }
  const Vec3& x1(int j) const { return x1_[j]; }
  const Vec3& x2(int j) const { return x2_[j]; }
  double norm2(int j) const { return norm2_[j]; }
  bool positive(int j) const { return positive_[j]; }
  int sup_norm(int j) const { return modes_[j].sup_norm(); }

  // Indices of modes with |k|_inf <= n.
  std::vector<int> low_indices(int n) const;

  explicit Truncation(int N);

 private:
  int N_;
  std::vector<ModeIndex> modes_;
  std::vector<int> lut_;
  std::vector<int> neg_;
  std::vector<Vec3> kvec_, x1_, x2_;
  std::vector<double> norm2_;
  std::vector<bool> positive_;
};

}  // namespace degnse
