#pragma once

#include "degnse/noise.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace degnse::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimulateBlock {
  int replicas = 4;
  double x_norm = 0.5;
  int record_stride = 10;
  int noise_stride = 1;
  bool stop_at_exit = false;
};

struct CoupledBlock {
  int replicas = 20;
  double x_norm = 0.8;
};

struct MalliavinBlock {
  double t = 0.5;
  double dt = 5e-3;
  double x_norm = 1.5;
  int replicas = 8;
  std::vector<double> eps_grid{1e-2, 1e-4, 1e-6, 1e-8};
  double q = 1.0;
  double direction_delta = 0.05;  // mollifier used for the direction study; 0 skips it
};

struct HormanderBlock {
  int N_limit = 0;
  int points = 3;
  double ball_ratio = 0.1;  // R / rho
  std::vector<double> case3_rhos{4.0, 8.0, 16.0};
  double case3_ratio = 1.5;
  int case3_samples = 2;
};

struct ControlBlock {
  int carrier_N_max = 0;  // 0: the planning truncation
  int N_verify = 0;       // 0: planning truncation + 2
  double eps = 0.05;
  int pairs = 1;
  double x_norm = 1.0;
  double y_norm = 1.0;
  int steps_per_phase = 100;
  int w_samples = 16;  // control samples per phase in the binary dump
};

struct VerifyBlock {
  std::vector<int> criteria;  // empty: all
};

struct ExperimentConfig {
  ModelSpec model{.N_max = 2, .N = 2};
  double T = 1.0;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  int workers = 1;
  SimulateBlock simulate;
  CoupledBlock coupled;
  MalliavinBlock malliavin;
  HormanderBlock hormander;
  ControlBlock control;
  VerifyBlock verify;

  std::string canonical;  // sorted key=value lines, seed and workers excluded
  std::uint64_t hash = 0;
};

// Reads an INI file (sections map to key prefixes), applies section.key=value overrides and
// validates. An empty path means built-in defaults. Throws ConfigError.
ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

}  // namespace degnse::cli
