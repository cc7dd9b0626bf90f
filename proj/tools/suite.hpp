#pragma once

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace degnse::cli {

struct CriterionResult {
  std::string id;     // "1".."11", plus "9*" for the substitute carrier level
  std::string title;
  bool pass = false;
  bool gating = true;  // false: reported but excluded from the exit status
  std::string measured;
  double seconds = 0.0;
  nlohmann::json detail;

  std::string line() const;
};

struct SuiteOptions {
  std::uint64_t seed = 2024;
  std::vector<int> criteria;  // empty: all
  int workers = 1;
};

// Runs the acceptance criteria in order; on_result fires as each one finishes.
std::vector<CriterionResult> run_suite(const SuiteOptions& opts,
                                       const std::function<void(const CriterionResult&)>& on_result = {});

bool suite_passed(const std::vector<CriterionResult>& results);

// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
struct KsResult {
  double D = 0.0;
  double p = 1.0;
};
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace degnse::cli
