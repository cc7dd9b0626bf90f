#pragma once

#include "degnse/noise.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace degnse {

// Carriers for one degenerate mode k. Positive k: k = l + m with l and -m positive.
// Negative k: k = l - m with l and m positive.
struct AuxiliaryPair {
  ModeIndex k, l, m;
  int sign = +1;
};

struct AuxiliaryModeSet {
  int N0 = 1;
  int N_max = 0;
  std::vector<AuxiliaryPair> pairs;  // one per k in Z_L(N0), enumeration order
  std::string method;                // "exhaustive" or "local-search"
  long effort = 0;                   // search nodes or repair moves
};

// Integer checks for a single pair: sign class, k = l +/- m, |l| != |m|, l and m independent,
// both carriers inside the truncation and with |.|_inf > 2 N0 so they cannot couple to low modes.
bool auxiliary_pair_valid(const AuxiliaryPair& p, int N0, int N_max);

// No sum or difference of carriers from two different pairs lands in |.|_inf <= N0 (zero included).
bool carriers_compatible(const AuxiliaryPair& a, const AuxiliaryPair& b, int N0);

// c = (|l|^2 - |m|^2) / |l x m|
double pair_constant(const ModeIndex& l, const ModeIndex& m);

class CarrierInfeasible : public std::runtime_error {
 public:
  CarrierInfeasible(int N_max, int smallest_feasible);
  int N_max;
  int smallest_feasible;  // -1 if none found within the probe range
};

struct CarrierSearchOptions {
  long exhaustive_nodes = 200000;
  long repair_moves = 2000000;
  int restarts = 8;
  std::uint64_t seed = 1;
  int probe_limit = 4;  // levels above N_max scanned when reporting infeasibility
};

enum class CarrierStatus { Found, Infeasible, Undecided };

struct CarrierSearch {
  CarrierStatus status = CarrierStatus::Undecided;
  AuxiliaryModeSet set;
};

// Forward-checking backtracking (decides infeasibility) followed by breakout local search.
CarrierSearch search_carriers(int N0, int N_max, const CarrierSearchOptions& opts = {});

// Throws CarrierInfeasible (with the smallest feasible level) when no set exists at N_max.
AuxiliaryModeSet select_auxiliary_pairs(int N0, int N_max, const CarrierSearchOptions& opts = {});

struct InteractionAudit {
  long checked = 0;       // ordered mode pairs examined
  long intended = 0;      // emissions on k from its own (l_k, m_k)
  long forbidden = 0;     // any other emission onto Z_L(N0)
  double max_forbidden = 0.0;
  bool clean() const { return forbidden == 0 && max_forbidden == 0.0; }
};

// Evaluates every carrier/carrier and carrier/low pair with the pair table.
InteractionAudit audit_interactions(const AuxiliaryModeSet& set);

struct ControlOptions {
  int phase1_steps = 400;
  int low_steps = 800;      // RK4 steps for the low system in phases 2 and 4
  int defect_nodes = 64;    // quadrature nodes per phase for the defect report
  int phase1_attempts = 8;
  int phase4_halvings = 12;
  int fit_samples = 200;    // samples for the bilinear constant behind t0
  std::uint64_t seed = 7;
};

struct PhaseDefects {
  double high = 0.0;  // |du^H + Au^H + B_H(u,u) - Qw| at nodes
  double low = 0.0;   // |du^L + Au^L + B_L(u,u)| at nodes
  double integration = 0.0;  // RK4 step-doubling gap of the low system (phases 2, 4)
};

class ControlSolution {
 public:
  double T1() const { return T1_; }
  double T2() const { return T2_; }
  double T3() const { return T3_; }
  double T() const { return T_; }
  double eps() const { return eps_; }
  double rho0() const { return rho0_; }
  double bilinear_constant() const { return c_bilinear_; }
  const SpectralField& x() const { return x_; }
  const SpectralField& y() const { return y_; }
  const ModelSpec& spec() const { return spec_; }
  const AuxiliaryModeSet& carriers() const { return carriers_; }
  const std::vector<PhaseDefects>& defects() const { return defects_; }  // phases 1..4
  // |u^L(T) - z^L|_W after each phase-4 attempt, in replanning order
  const std::vector<double>& replan_history() const { return replan_; }
  double planned_miss() const { return miss_; }
  int phase1_attempts() const { return phase1_attempts_; }

  // Phase 1..4 containing t; boundaries belong to the later phase.
  int phase_of(double t) const;
  // Planned state and its time derivative on the planning truncation. A phase may be forced to
  // take one-sided values at its endpoints.
  void state(double t, SpectralField& u, SpectralField& du, int phase = 0) const;
  SpectralField state(double t) const;
  // Control w(t); zero on phase 1 and on Z_L(N0).
  SpectralField control(double t, int phase = 0) const;
  // Defect of the controlled equation, high and low parts separately.
  PhaseDefects residual(double t, int phase = 0) const;

 private:
  friend ControlSolution plan_control(const SpectralField&, const SpectralField&, double, double, const ModelSpec&,
                                      const AuxiliaryModeSet&, const ControlOptions&);
  struct Nodes {
    double t0 = 0, t1 = 0;
    std::vector<Eigen::VectorXd> u, du;  // equispaced, inclusive
    void eval(double t, Eigen::VectorXd& u, Eigen::VectorXd& du) const;
  };
  struct Carrier {
    int jl = -1, jm = -1, jk = -1, ik = -1;  // ik: position of k in the low coordinates
    Eigen::Vector2d Xhat = Eigen::Vector2d::Zero();  // carrier direction at l, coefficient coordinates
    Eigen::Matrix2d Linv = Eigen::Matrix2d::Zero();
    double lambda = 0.0;
  };

  void phase3(double t, Eigen::VectorXd& u, Eigen::VectorXd& du) const;

  ModelSpec spec_;
  AuxiliaryModeSet carriers_;
  SpectralField x_, y_;
  double T1_ = 0, T2_ = 0, T3_ = 0, T_ = 0, eps_ = 0, rho0_ = 0, c_bilinear_ = 0, miss_ = 0;
  int phase1_attempts_ = 0;
  std::vector<int> lowc_;
  Nodes p1_, p2_, p4_;                            // p1 full state, p2/p4 low coordinates
  Eigen::VectorXd h2_;                            // u^H(T1)
  std::vector<Eigen::VectorXd> g_;                // phase-3 G coefficients in s, low coordinates
  std::vector<Eigen::VectorXd> P_;                // phase-3 cubic coefficients, low coordinates
  std::vector<Carrier> car_;
  Eigen::VectorXd a4_, zH_;                       // phase-4 endpoints of u^H
  std::vector<PhaseDefects> defects_;
  std::vector<double> replan_;
};

// Four-phase steering of x towards y in time T on the truncation spec.N_max, with Z_L(spec.noise.N0)
// as the unforced block. Throws NumericalFailure naming the phase on failure.
ControlSolution plan_control(const SpectralField& x, const SpectralField& y, double T, double eps, const ModelSpec& spec,
                             const AuxiliaryModeSet& carriers, const ControlOptions& opts = {});
ControlSolution plan_control(const SpectralField& x, const SpectralField& y, double T, double eps, const ModelSpec& spec,
                             const ControlOptions& opts = {});

struct ControlReplay {
  int N_verify = 0;
  double miss = 0.0;      // |u(T) - y|_W
  double sup_norm = 0.0;  // sup over steps of |u(t)|_W
  double rho0 = 0.0;      // planned sup
  std::vector<PhaseDefects> defects;
};

// Integrates du + Au + B(u,u) = Qw from x with the planned w at N_verify >= N_max.
ControlReplay verify_control(const ControlSolution& plan, int N_verify, int steps_per_phase);

}  // namespace degnse
