#include "commands.hpp"

#include "degnse/control.hpp"
#include "degnse/simulator.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>

using namespace degnse::cli;

namespace {

struct CommonArgs {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out = "out";
};

void add_common(CLI::App* sub, CommonArgs& a) {
  sub->add_option("--config", a.config, "INI experiment file");
  sub->add_option("--set", a.sets, "override, section.key=value")->allow_extra_args(false);
  sub->add_option("--seed", a.seed, "root seed (overrides run.seed)");
  sub->add_option("--workers", a.workers, "worker threads (overrides run.workers)")->check(CLI::PositiveNumber);
  sub->add_option("--out", a.out, "artifact directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"degnse: truncated stochastic Navier-Stokes experiments"};
  app.require_subcommand(1);
  CommonArgs args;
  using Cmd = int (*)(const RunContext&);
  const std::pair<const char*, Cmd> table[] = {
      {"simulate", cmd_simulate},   {"coupled", cmd_coupled}, {"malliavin", cmd_malliavin},
      {"hormander", cmd_hormander}, {"control", cmd_control}, {"verify-all", cmd_verify_all}};
  std::vector<std::pair<CLI::App*, Cmd>> subs;
  for (const auto& [name, fn] : table) {
    auto* s = app.add_subcommand(name);
    add_common(s, args);
    subs.emplace_back(s, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  for (const auto& [sub, fn] : subs) {
    if (!sub->parsed()) continue;
    const std::string name = sub->get_name();
    try {
      auto cfg = load_config(args.config, args.sets);
      const std::uint64_t seed = args.seed.value_or(cfg.seed);
      const int workers = args.workers.value_or(cfg.workers);
      RunContext ctx{cfg, seed, workers, ArtifactWriter(args.out, {name, hex64(cfg.hash), seed, git_describe()})};
      const int rc = fn(ctx);
      std::fprintf(stderr, "%s: wrote %zu artifacts to %s\n", name.c_str(), ctx.out.written().size(), args.out.c_str());
      return rc;
    } catch (const ConfigError& e) {
      std::fprintf(stderr, "%s: invalid config: %s\n", name.c_str(), e.what());
      return 2;
    } catch (const degnse::CarrierInfeasible& e) {
      std::fprintf(stderr, "%s: numerical failure in carrier search: %s\n", name.c_str(), e.what());
      return 3;
    } catch (const degnse::NumericalFailure& e) {
      std::fprintf(stderr, "%s: numerical failure in %s at t=%.6g: %s\n", name.c_str(), e.stage().c_str(), e.time(),
                   e.what());
      return 3;
    } catch (const std::invalid_argument& e) {
      // Parameter combinations the library rejects after config validation.
      std::fprintf(stderr, "%s: invalid config: %s\n", name.c_str(), e.what());
      return 2;
    }
  }
  return 2;
}
