#pragma once

#include "degnse/simulator.hpp"

#include <Eigen/Core>

#include <vector>

namespace degnse {

// Component indices (2 per mode) of |k|_inf <= N inside truncation t, in storage order.
std::vector<int> window_components(const Truncation& t, int N);

// Derivative of the exponential-Euler step map u -> step(u, dt, dW) at u, with rows
// restricted to |k|_inf <= N_rows and columns to |k|_inf <= N_cols (0 means N_max).
Eigen::MatrixXd step_jacobian(const SpectralField& u, double dt, const Eigen::VectorXd& dW, const ModelSpec& spec,
                              int N_rows = 0, int N_cols = 0);

// Continuous-time derivative of the nonlinear drift, same row/column convention.
Eigen::MatrixXd drift_jacobian(const SpectralField& u, const ModelSpec& spec, int N_rows = 0, int N_cols = 0);

struct FlowOptions {
  int record_stride = 1;
};

// Low block (|k|_inf <= spec.N) of the linearized flow along a recorded trajectory.
// Jinv is propagated as Jinv S^{-1} step by step, so J Jinv = Id up to roundoff.
struct FlowMatrices {
  int N = 0;
  int M = 0;
  double dt = 0.0;
  int record_stride = 1;
  std::vector<double> t;
  std::vector<Eigen::MatrixXd> J, Jinv;
  std::vector<double> identity_residual;  // ||J Jinv - Id||_F after every step
};

FlowMatrices jacobian_flow(const Trajectory& traj, const FlowOptions& opts = {});

// Explicit Ito-Euler integration of the inverse-flow SDE with correction term
// trace_sign * sum_j (D_L Q_L e_j)^2. Returns Jinv at every step.
std::vector<Eigen::MatrixXd> inverse_flow_ito(const Trajectory& traj, double trace_sign = 1.0);

// Full (low + high) linearized flow applied to h, at every step.
std::vector<SpectralField> frechet_flow(const Trajectory& traj, const SpectralField& h);

// W-orthonormal representation D^{1/2} M D^{-1/2}, D = |k|^{4 alpha0 + 1}.
struct MalliavinMatrix {
  double t = 0.0;
  Eigen::MatrixXd definition;      // sum of G G^T dt
  Eigen::MatrixXd representation;  // mode-by-mode Parseval sum
  double relative_gap = 0.0;
  double symmetry_defect = 0.0;
  double lambda_min = 0.0, lambda_max = 0.0;
};

// Requires flows recorded at stride 1. n_steps = number of steps to include (-1: all).
MalliavinMatrix malliavin_matrix(const Trajectory& traj, const FlowMatrices& flows, int n_steps = -1);

struct DirectionReport {
  double high_residual = 0.0;   // max_t ||D_v Phi^H|| / ||D_v Phi^L||
  double jm_residual = 0.0;     // max_t ||D_v Phi^L - J M|| / ||J M||
  Eigen::MatrixXd DL_final;     // D_v Phi^L at the last step, M x M
};

// Builds v^L = (Jinv E Q_L)^* and the high component that cancels the high response,
// then integrates the full linearized Malliavin derivative. Needs spec.cutoff.delta > 0.
DirectionReport malliavin_direction(const Trajectory& traj, const FlowMatrices& flows, bool zero_low = false);

struct TailCurve {
  std::vector<double> lambda_min;  // per replica
  std::vector<double> eps, prob;   // P[lambda_min <= eps^q]
  double q = 1.0;
  double slope = 0.0;              // least-squares slope of log prob vs log eps over prob > 0
};

TailCurve lambda_min_tail(const SpectralField& x, double t, double dt, int replicas, std::uint64_t seed,
                          const ModelSpec& spec, const std::vector<double>& eps_grid, double q, int workers = 1);

}  // namespace degnse
