#pragma once

#include "degnse/field.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace degnse {

// Coefficients of B in the raw trig basis {cos k.x, sin k.x} times this factor give the
// coefficients in the L2-normalized basis: 1/||e_k||_{L2} = 1/sqrt(4 pi^3).
double raw_to_normalized();

struct Emission {
  ModeIndex target;  // basis function e_target receiving the coefficient
  Vec3 coeff;        // raw convention, perpendicular to target
};

struct PairInteraction {
  ModeIndex l, m;
  std::vector<Emission> emissions;  // at most two: one from l+m, one from l-m
};

// Ordered pair (u_l e_l . grad)(u_m e_m), Leray-projected, raw trig convention.
PairInteraction pair_interaction(const ModeIndex& l, const Vec3& u_l, const ModeIndex& m, const Vec3& u_m);

// Galerkin-projected B(u,v) onto |k|_inf <= N_out (N_out <= 0 means u's truncation).
// Dense supports go through a dealiased FFT grid, sparse ones through the pair kernel.
SpectralField bilinear_term(const SpectralField& u, const SpectralField& v, int N_out = 0);
SpectralField convective_term(const SpectralField& u, int N_out = 0);

// Dense derivative of u -> B(u,u) at u, rows on |k|_inf <= N_out, columns on u's truncation.
Eigen::MatrixXd convective_jacobian(const SpectralField& u, int N_out = 0);

// Independent check: evaluates u and grad u on a G^3 grid by direct trig summation,
// forms (u.grad)u pointwise and projects back mode by mode. Requires G >= 4 N_max + 1.
SpectralField pseudospectral_oracle(const SpectralField& u, int grid_per_axis, int N_out = 0);

// Empirical constant C in |A^{b-1/4}B(u,v)| <= C |A^{b+1/4}u| |A^{b+1/4}v| over random samples.
struct NormMonitor {
  double beta = 0.0;
  double constant = 0.0;
  int samples = 0;
};
NormMonitor fit_bilinear_constant(int N_max, double beta, int samples, std::uint64_t seed);

}  // namespace degnse
