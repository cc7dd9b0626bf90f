#pragma once

#include "degnse/noise.hpp"

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace degnse {

struct PairCertificate {
  ModeIndex k, l, m;
  int sign = +1;  // +1: k = l + m, -1: k = l - m
};

// Integer re-check of all conditions: k = l +/- m, l and m outside Z_L(N0) but inside Z_L(N),
// |l| != |m| (Euclidean) and l, m linearly independent.
bool certificate_valid(const PairCertificate& c, int N0, int N);

struct DecompositionResult {
  int N0 = 0;
  int N = 0;  // smallest level at which every k in Z_L(N0) is certified
  std::vector<PairCertificate> certificates;
};

// Tries N = N0+1, N0+2, ... up to N_limit; throws if none works.
DecompositionResult decomposition_search(int N0, int N_limit = 0);

// X^0 as displayed in the bracket construction, split into its smooth part X^{01}
// (A y + chi(|y|_W/3rho) e^{-delta A_H} B(y,y)) and the shell correction X^{02}.
SpectralField drift_field_X01(const SpectralField& y, const ModelSpec& spec);
SpectralField drift_field_X02(const SpectralField& y, const ModelSpec& spec);
SpectralField drift_field_X0(const SpectralField& y, const ModelSpec& spec);

// State-dependent noise amplitude q_k(y) on generator component j of y's truncation.
double generator_amplitude(const SpectralField& y, int component, const ModelSpec& spec);

using FieldMap = std::function<SpectralField(const SpectralField&)>;

// [X,K]_L(y) = DK(y) X(y) - D_L X^L(y) K(y), both derivatives by Richardson-extrapolated
// central differences with displacement eps. Output projected to |k|_inf <= N.
SpectralField bracket_L(const FieldMap& X, const FieldMap& K, const SpectralField& y, int N, double eps);

struct BracketVector {
  Eigen::VectorXd v;  // low coordinates, |k|_inf <= N, storage order
  int generation = 0;
  int a = -1, b = -1;  // generator components: K0 uses a; K1 uses a; K2 = [K0_a, K1_b]
};

struct SystemOptions {
  bool K1 = true;
  bool K2 = true;
  bool with_X01 = true;
  bool with_X02 = true;
  double fd_eps = 1e-4;  // relative step for the X^{02} derivatives
  // Restrict K2 to these (a, b) generator pairs; empty means all.
  std::vector<std::pair<int, int>> pairs;
};

// K0, K1, K2 at y with analytic brackets for X^{01} and the amplitude derivatives.
std::vector<BracketVector> hormander_system(const SpectralField& y, const ModelSpec& spec,
                                            const SystemOptions& opts = {});

// Same generations restricted to the given K2 pairs, every bracket by nested bracket_L.
std::vector<BracketVector> hormander_system_fd(const SpectralField& y, const ModelSpec& spec,
                                               const std::vector<std::pair<int, int>>& pairs, double eps);

// Low generator components (2 per mode of Z_L(N)) in storage order of the N_max truncation.
std::vector<int> generator_components(const ModelSpec& spec);

// (a, b) generator pairs built from certificates: both orders, all i, j.
std::vector<std::pair<int, int>> certificate_pairs(const DecompositionResult& d, const ModelSpec& spec);

struct SpanReport {
  int rank = 0;
  int M = 0;
  double sigma_min = 0.0;  // smallest retained singular value
  double sigma_max = 0.0;
  bool full() const { return rank == M; }
};

// SVD in W-orthonormal coordinates; rank counted against rel_tol * sigma_max.
SpanReport span_rank(const std::vector<BracketVector>& vs, const ModelSpec& spec, double rel_tol = 1e-10);

enum class Region { Case1 = 1, Case2 = 2, Case3 = 3 };
Region region_classify(double w_norm, double rho, double R);

// Points x + h with |h|_W <= R drawn from a fixed-seed mesh; first point is x itself.
std::vector<SpectralField> ball_mesh(const SpectralField& x, double R, int points, std::uint64_t seed, double alpha);

struct Case3Report {
  std::vector<double> rho, magnitude;  // max |[K0_l,[X02,K0_m]_L]_L|_W over pairs and samples
  double exponent = 0.0;               // least-squares slope of log magnitude vs log rho
  double constant = 0.0;               // exp(intercept)
};

// Samples y on the shell |y|_W = ratio * rho along fixed directions and fits the rho-scaling
// of the X^{02} double brackets over the given generator pairs.
Case3Report case3_perturbation_bound(const ModelSpec& spec, const std::vector<double>& rhos, double ratio,
                                     const std::vector<std::pair<int, int>>& pairs, int samples, std::uint64_t seed);

}  // namespace degnse
