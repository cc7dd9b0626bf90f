#include "artifacts.hpp"
#include "config.hpp"
#include "suite.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace degnse::cli;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("degnse_test_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, DefaultsAreValid) {
  auto c = load_config("", {});
  EXPECT_EQ(c.model.N_max, 2);
  EXPECT_LT(c.model.noise.N0, c.model.N);
  EXPECT_NE(c.hash, 0u);
  EXPECT_NE(c.canonical.find("model.rho=1\n"), std::string::npos);
}

TEST(Config, IniSectionsAndOverrides) {
  const auto dir = scratch("ini");
  std::ofstream(dir / "a.ini") << "; comment\n[model]\nN_max = 3\nrho = 2.5\n[malliavin]\neps_grid = 1e-2, 1e-3\n";
  auto c = load_config((dir / "a.ini").string(), {"model.rho=4"});
  EXPECT_EQ(c.model.N_max, 3);
  EXPECT_EQ(c.model.cutoff.rho, 4.0);
  ASSERT_EQ(c.malliavin.eps_grid.size(), 2u);
  EXPECT_EQ(c.malliavin.eps_grid[1], 1e-3);
}

TEST(Config, HashIgnoresSeedAndWorkersOnly) {
  const auto base = load_config("", {}).hash;
  EXPECT_EQ(load_config("", {"run.seed=99", "run.workers=4"}).hash, base);
  EXPECT_NE(load_config("", {"run.dt=2e-3"}).hash, base);
  EXPECT_NE(load_config("", {"control.eps=0.01"}).hash, base);
  // same value spelled differently hashes the same
  EXPECT_EQ(load_config("", {"run.dt=0.001"}).hash, load_config("", {"run.dt=1e-3"}).hash);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(load_config("", {"model.nope=1"}), ConfigError);
  EXPECT_THROW(load_config("", {"run.dt=fast"}), ConfigError);
  EXPECT_THROW(load_config("", {"run.dt"}), ConfigError);
  EXPECT_THROW(load_config("", {"model.N=1"}), ConfigError);      // N0 < N
  EXPECT_THROW(load_config("", {"model.N=3"}), ConfigError);      // N <= N_max
  EXPECT_THROW(load_config("", {"model.alpha0=0.5"}), ConfigError);
  EXPECT_THROW(load_config("", {"run.dt=0"}), ConfigError);
  EXPECT_THROW(load_config("", {"model.rho=-1"}), ConfigError);
  EXPECT_THROW(load_config("", {"verify.criteria=1,12"}), ConfigError);
  EXPECT_THROW(load_config("/definitely/not/here.ini", {}), ConfigError);
  const auto dir = scratch("bad");
  std::ofstream(dir / "loose.ini") << "N_max = 3\n";
  EXPECT_THROW(load_config((dir / "loose.ini").string(), {}), ConfigError);
}

TEST(Artifacts, EveryFormatCarriesProvenance) {
  const auto dir = scratch("art");
  ArtifactWriter w(dir, {"simulate", "00000000deadbeef", 42, "v1"});
  w.csv("a.csv", {"x", "y"}, {{1.0, 0.1}, {2.0, -3.5}});
  w.json("a.json", {{"value", 3}});
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6.25;
  w.f64("a.f64", m);
  EXPECT_EQ(w.written().size(), 3u);

  EXPECT_EQ(slurp(dir / "a.csv"),
            "# command=simulate config_hash=00000000deadbeef seed=42 git=v1\nx,y\n1,0.10000000000000001\n2,-3.5\n");
  auto j = nlohmann::json::parse(slurp(dir / "a.json"));
  EXPECT_EQ(j["value"], 3);
  EXPECT_EQ(j["provenance"]["seed"], 42);
  EXPECT_EQ(j["provenance"]["config_hash"], "00000000deadbeef");

  const auto bin = slurp(dir / "a.f64");
  const auto nl = bin.find('\n');
  EXPECT_EQ(bin.substr(0, nl), "DEGNSE-F64 command=simulate config_hash=00000000deadbeef seed=42 git=v1 rows=2 cols=3");
  ASSERT_EQ(bin.size() - nl - 1, 6 * sizeof(double));
  double v[6];
  std::memcpy(v, bin.data() + nl + 1, sizeof v);
  EXPECT_EQ(v[1], 2.0);  // row-major
  EXPECT_EQ(v[3], 4.0);
  EXPECT_EQ(v[5], 6.25);
}

// D and p from scipy.stats.ks_2samp (statistic) and kstwobign.sf at the Stephens-corrected lambda.
TEST(KolmogorovSmirnov, MatchesReferenceValues) {
  std::vector<double> a, b0, b1, b2;
  for (int i = 1; i <= 200; ++i) a.push_back(std::sin(i * 1.0));
  for (int j = 1; j <= 150; ++j) {
    b0.push_back(std::sin(j * 1.3));
    b1.push_back(std::sin(j * 1.3) + 0.15);
    b2.push_back(std::sin(j * 1.3) + 0.3);
  }
  const struct {
    const std::vector<double>& b;
    double D, p;
  } ref[] = {{b0, 0.021666666666666723, 0.9999999999985987},
             {b1, 0.18, 0.0066011912218436625},
             {b2, 0.26, 1.3297562023783724e-05}};
  for (const auto& r : ref) {
    auto k = ks_two_sample(a, r.b);
    EXPECT_NEAR(k.D, r.D, 1e-14);
    EXPECT_NEAR(k.p, r.p, 1e-9 * std::max(r.p, 1e-3));
  }
  auto same = ks_two_sample(a, a);
  EXPECT_EQ(same.D, 0.0);
  EXPECT_EQ(same.p, 1.0);
}

TEST(Suite, CheapCriteriaPassAndReportInOrder) {
  SuiteOptions o;
  o.criteria = {2, 8};
  std::vector<std::string> seen;
  auto rs = run_suite(o, [&](const CriterionResult& r) { seen.push_back(r.id); });
  ASSERT_EQ(rs.size(), 2u);
  EXPECT_EQ(seen, (std::vector<std::string>{"2", "8"}));
  EXPECT_TRUE(suite_passed(rs));
  EXPECT_EQ(rs[0].line().rfind("[PASS] 2", 0), 0u);
  CriterionResult soft{"9", "x"};
  soft.gating = false;
  EXPECT_TRUE(suite_passed({soft}));
  soft.gating = true;
  EXPECT_FALSE(suite_passed({soft}));
}
