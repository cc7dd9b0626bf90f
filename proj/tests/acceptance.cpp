// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any gating criterion fails.
// Usage: acceptance [criterion ...]   (no arguments runs all of 1..11)

#include "suite.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

int main(int argc, char** argv) {
  degnse::cli::SuiteOptions opts;
  for (int i = 1; i < argc; ++i) opts.criteria.push_back(std::atoi(argv[i]));
  int failed = 0;
  const auto results = degnse::cli::run_suite(opts, [&](const degnse::cli::CriterionResult& r) {
    std::printf("%s\n", r.line().c_str());
    std::fflush(stdout);
    failed += r.gating && !r.pass;
  });
  std::printf("%zu criteria, %d gating failures\n", results.size(), failed);
  return degnse::cli::suite_passed(results) ? EXIT_SUCCESS : EXIT_FAILURE;
}
