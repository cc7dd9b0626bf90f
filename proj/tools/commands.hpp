#pragma once

#include "artifacts.hpp"
#include "config.hpp"

namespace degnse::cli {

struct RunContext {
  ExperimentConfig cfg;
  std::uint64_t seed = 1;
  int workers = 1;
  ArtifactWriter out;
};

// Each returns the process exit status; NumericalFailure and CarrierInfeasible propagate.
int cmd_simulate(const RunContext& ctx);
int cmd_coupled(const RunContext& ctx);
int cmd_malliavin(const RunContext& ctx);
int cmd_hormander(const RunContext& ctx);
int cmd_control(const RunContext& ctx);
int cmd_verify_all(const RunContext& ctx);

}  // namespace degnse::cli
