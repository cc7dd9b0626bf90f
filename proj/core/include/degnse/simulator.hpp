#pragma once

#include "degnse/noise.hpp"
#include "degnse/rng.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace degnse {

class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& stage, double time);
  const std::string& stage() const { return stage_; }
  double time() const { return time_; }

 private:
  std::string stage_;
  double time_;
};

inline constexpr double kNever = std::numeric_limits<double>::infinity();

// Exponential Euler: u+ = E u + phi1 dt F(u) + E Q(u) dW, with E = e^{-A dt}.
SpectralField step(const SpectralField& u, double dt, const Eigen::VectorXd& dW, const ModelSpec& spec);

struct SimulateOptions {
  int record_stride = 1;        // keep every n-th state
  int noise_stride = 1;         // fine noise steps per integrator step
  bool stop_at_exit = false;    // end the run at the first |u|_W >= rho
};

struct Trajectory {
  ModelSpec spec;
  std::uint64_t seed = 0;
  double dt = 0.0;
  int noise_stride = 1;
  int record_stride = 1;
  std::vector<double> t;
  std::vector<SpectralField> u;
  std::vector<double> w_norm, h_norm;  // every step, not only recorded ones
  double tau = kNever;

  NoisePath path() const { return NoisePath(seed, dt / noise_stride); }
  int steps() const { return static_cast<int>(w_norm.size()) - 1; }
  // Increment that drove step n -> n+1.
  Eigen::VectorXd increment(int n) const;
};

Trajectory simulate(const SpectralField& x, double T, double dt, std::uint64_t seed, const ModelSpec& spec,
                    const SimulateOptions& opts = {});

struct CoupledReport {
  double tau = kNever;
  double sup_before = 0.0;  // sup over grid times t <= tau of max coefficient distance
  double sup_after = 0.0;
  int steps = 0;
};

// Cutoff dynamics and plain truncated dynamics on the same noise path.
CoupledReport coupled_weak_strong(const SpectralField& x, double T, double dt, std::uint64_t seed, ModelSpec spec);

struct TailEstimate {
  double p = 0.0, lo = 0.0, hi = 0.0;  // Wilson 95% interval
  int hits = 0, replicas = 0;
};

// P[tau_rho >= eps] started from x + h, h uniform in the W-ball of radius h_radius; dt = eps/100.
TailEstimate stopping_time_tail(const SpectralField& x, double h_radius, double eps, int replicas, std::uint64_t seed,
                                const ModelSpec& spec, int workers = 1);

TailEstimate wilson_interval(int hits, int n);

// Deterministic forced dynamics du/dt = -Au - B(u,u) + f(t), integrating-factor RK4
// with `steps` equal steps on [t0,t1]. observer(t,u) is called at every node.
using Forcing = std::function<SpectralField(double)>;
using Observer = std::function<void(double, const SpectralField&)>;
SpectralField integrate_forced(const SpectralField& x, double t0, double t1, int steps, const Forcing& f,
                               const Observer& observer = {});

}  // namespace degnse
