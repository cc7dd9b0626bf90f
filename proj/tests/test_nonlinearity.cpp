#include "brute_oracle.hpp"
#include "degnse/nonlinearity.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace degnse;

namespace {

double rel(const SpectralField& a, const SpectralField& b) {
  double d = (a.coeffs() - b.coeffs()).norm();
  double s = std::max(a.coeffs().norm(), b.coeffs().norm());
  return s > 0 ? d / s : d;
}

}  // namespace

TEST(PairInteraction, SelfInteractionVanishes) {
  for (const auto& l : enumerate_modes(2)) {
    auto pb = perp_basis(l);
    auto pi = pair_interaction(l, pb.x1 + 0.3 * pb.x2, l, 0.7 * pb.x1 - pb.x2);
    for (const auto& e : pi.emissions) EXPECT_LE(e.coeff.norm(), 1e-15);
  }
}

TEST(PairInteraction, ZeroPrefactorVanishes) {
  // u_l . m = 0 kills the ordered pair
  ModeIndex l{1, 0, 0}, m{0, 1, 0};
  auto pi = pair_interaction(l, Vec3(0, 0, 1), m, Vec3(0, 0, 1));
  for (const auto& e : pi.emissions) EXPECT_EQ(e.coeff.norm(), 0.0);
}

TEST(PairInteraction, TargetsAndOrthogonality) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  auto modes = enumerate_modes(3);
  for (int trial = 0; trial < 300; ++trial) {
    ModeIndex l = modes[gen() % modes.size()], m = modes[gen() % modes.size()];
    Vec3 ul = leray_project(l, Vec3(nd(gen), nd(gen), nd(gen)));
    Vec3 um = leray_project(m, Vec3(nd(gen), nd(gen), nd(gen)));
    auto pi = pair_interaction(l, ul, m, um);
    for (const auto& e : pi.emissions) {
      const ModeIndex s = l + m, d = l - m;
      bool ok = e.target == s || e.target == -s || e.target == d || e.target == -d;
      EXPECT_TRUE(ok);
      EXPECT_LE(std::abs(e.coeff.dot(e.target.vec())), 1e-12 * (1.0 + e.coeff.norm()));
    }
  }
}

TEST(PairInteraction, PaperExampleMatchesBruteOracle) {
  ModeIndex l{2, 2, 1}, m{-1, -2, -1};
  const int N = 4;
  SpectralField u(N);
  u.set_coeff(l, {1.0, 0.0});
  u.set_coeff(m, {1.0, 0.0});
  auto a = pair_interaction(l, perp_basis(l).x1, m, perp_basis(m).x1);
  auto b = pair_interaction(m, perp_basis(m).x1, l, perp_basis(l).x1);
  SpectralField fromPairs(N);
  for (const auto* pi : {&a, &b})
    for (const auto& e : pi->emissions)
      if (e.target.sup_norm() <= N) fromPairs.set_r3(e.target, fromPairs.r3(e.target) + raw_to_normalized() * e.coeff);
  auto oracle = degnse::testing::brute_convective(u, 4 * N + 1);
  EXPECT_LE(rel(fromPairs, oracle), 1e-10);
  // support: only the classes of (1,0,0) and (3,4,2)
  const auto& t = oracle.trunc();
  for (int j = 0; j < t.size(); ++j) {
    auto k = t.mode(j);
    bool target = k == ModeIndex{1, 0, 0} || k == ModeIndex{-1, 0, 0} || k == ModeIndex{3, 4, 2} || k == ModeIndex{-3, -4, -2};
    if (!target) EXPECT_LE(oracle.r3(j).norm(), 1e-12);
  }
  EXPECT_GT(oracle.r3({1, 0, 0}).norm() + oracle.r3({-1, 0, 0}).norm(), 1e-3);
}

TEST(Convective, TrivialCases) {
  SpectralField z(3);
  EXPECT_EQ(convective_term(z).coeffs().norm(), 0.0);
  auto s = single_mode(3, {1, 2, -1}, 0.4, -1.3);
  EXPECT_LE(convective_term(s).coeffs().norm(), 1e-15);
  EXPECT_LE(pseudospectral_oracle(s, 13).coeffs().norm(), 1e-12);
}

TEST(Convective, MatchesBruteOracle) {
  std::mt19937_64 gen(5);
  for (int N = 1; N <= 3; ++N) {
    auto u = random_field(N, gen);
    auto v = random_field(N, gen);
    EXPECT_LE(rel(convective_term(u), degnse::testing::brute_convective(u, 4 * N + 1)), 1e-10) << N;
    EXPECT_LE(rel(bilinear_term(u, v), degnse::testing::brute_bilinear(u, v, 4 * N + 1)), 1e-10) << N;
  }
}

TEST(Convective, PseudospectralOracleAgrees) {
  std::mt19937_64 gen(9);
  for (int N = 1; N <= 4; ++N) {
    auto u = random_field(N, gen);
    EXPECT_LE(rel(convective_term(u), pseudospectral_oracle(u, 4 * N + 1)), 1e-10) << N;
    EXPECT_LE(rel(convective_term(u, N - 1 > 0 ? N - 1 : N), pseudospectral_oracle(u, 4 * N + 1, N - 1 > 0 ? N - 1 : N)), 1e-10);
  }
  EXPECT_THROW(pseudospectral_oracle(random_field(2, gen), 8), std::invalid_argument);
}

TEST(Convective, TwoModeSupportViaOracle) {
  SpectralField u(4);
  u.set_coeff({2, 0, 0}, {0.7, -0.2});
  u.set_coeff({0, 2, 1}, {0.3, 0.9});
  auto o = pseudospectral_oracle(u, 17);
  const auto& t = o.trunc();
  const ModeIndex l{2, 0, 0}, m{0, 2, 1};
  for (int j = 0; j < t.size(); ++j) {
    auto k = t.mode(j);
    bool target = k == l + m || k == -(l + m) || k == l - m || k == m - l;
    if (!target) EXPECT_LE(o.r3(j).norm(), 1e-13);
  }
  EXPECT_LE(rel(o, convective_term(u)), 1e-10);
}

TEST(Convective, EnergyConservation) {
  std::mt19937_64 gen(13);
  for (int N = 1; N <= 4; ++N)
    for (int trial = 0; trial < 3; ++trial) {
      auto u = random_field(N, gen);
      double e = sobolev_inner(convective_term(u), u, 0.0);
      double scale = std::pow(sobolev_norm(u, 1.0), 2) * sobolev_norm(u, 0.0);
      EXPECT_LE(std::abs(e), 1e-10 * scale);
      // truncated output still orthogonal to the projected field
      if (N > 1) {
        auto lo = project_window(u, N - 1, Window::Low).embed(N - 1);
        EXPECT_LE(std::abs(sobolev_inner(convective_term(lo), lo, 0.0)), 1e-10 * scale);
      }
    }
}

TEST(Bilinear, ConsistencyAndSplitting) {
  std::mt19937_64 gen(17);
  auto u = random_field(3, gen);
  EXPECT_EQ(bilinear_term(u, u).coeffs(), convective_term(u).coeffs());
  EXPECT_EQ(bilinear_term(u, SpectralField(3)).coeffs().norm(), 0.0);
  auto L = project_window(u, 1, Window::Low), H = project_window(u, 1, Window::High);
  auto sum = bilinear_term(L, L) + bilinear_term(L, H) + bilinear_term(H, L) + bilinear_term(H, H);
  EXPECT_LE((sum.coeffs() - convective_term(u).coeffs()).lpNorm<Eigen::Infinity>(), 1e-12);
  auto v = random_field(3, gen);
  auto lin = bilinear_term(2.0 * u + v, v);
  auto ref = 2.0 * bilinear_term(u, v) + bilinear_term(v, v);
  EXPECT_LE(rel(lin, ref), 1e-13);
}

TEST(Bilinear, BasisIndependence) {
  // R^3 reconstruction of the kernel output equals the basis-free pair sum
  std::mt19937_64 gen(19);
  auto u = random_field(2, gen);
  auto B = convective_term(u);
  const auto& t = u.trunc();
  std::vector<Vec3> acc(t.size(), Vec3::Zero());
  for (int a = 0; a < t.size(); ++a)
    for (int b = 0; b < t.size(); ++b) {
      auto pi = pair_interaction(t.mode(a), u.r3(a), t.mode(b), u.r3(b));
      for (const auto& e : pi.emissions) {
        int j = t.index(e.target);
        if (j >= 0) acc[j] += raw_to_normalized() * e.coeff;
      }
    }
  for (int j = 0; j < t.size(); ++j) EXPECT_LE((acc[j] - B.r3(j)).norm(), 1e-12);
}

TEST(Bilinear, JacobianMatchesDirectionalDerivative) {
  std::mt19937_64 gen(23);
  auto u = random_field(2, gen);
  auto h = random_field(2, gen);
  Eigen::MatrixXd J = convective_jacobian(u, 2);
  auto exact = bilinear_term(u, h) + bilinear_term(h, u);
  EXPECT_LE((J * h.coeffs() - exact.coeffs()).norm(), 1e-13 * exact.coeffs().norm());
  Eigen::MatrixXd J1 = convective_jacobian(u, 1);
  auto exact1 = bilinear_term(u, h, 1) + bilinear_term(h, u, 1);
  EXPECT_LE((J1 * h.coeffs() - exact1.coeffs()).norm(), 1e-13 * exact1.coeffs().norm());
}

TEST(NormMonitor, ConstantIsFiniteAndPositive) {
  auto m = fit_bilinear_constant(2, 1.0, 20, 1);
  EXPECT_GT(m.constant, 0.0);
  EXPECT_TRUE(std::isfinite(m.constant));
}

namespace {

// Splits u into blocks of at most w modes; block products stay on the direct pair kernel.
std::vector<SpectralField> blocks(const SpectralField& u, int w) {
  std::vector<SpectralField> out;
  const int P = u.trunc().size();
  for (int s = 0; s < P; s += w) {
    SpectralField b(u.N_max());
    for (int j = s; j < std::min(P, s + w); ++j) b.coeffs().segment<2>(2 * j) = u.coeffs().segment<2>(2 * j);
    out.push_back(b);
  }
  return out;
}

}  // namespace

TEST(Bilinear, GridPathMatchesPairKernel) {
  // Full supports at N >= 5 take the FFT path; block sums take the pair kernel.
  std::mt19937_64 gen(3);
  for (int N : {5, 6}) {
    auto u = random_field(N, gen), v = random_field(N, gen);
    for (int No : {N, 1}) {
      SpectralField uv(No), uu(No);
      for (const auto& a : blocks(u, 100)) {
        for (const auto& b : blocks(v, 100)) uv += bilinear_term(a, b, No);
        for (const auto& b : blocks(u, 100)) uu += bilinear_term(a, b, No);
      }
      EXPECT_LE(rel(bilinear_term(u, v, No), uv), 1e-13) << N << " " << No;
      EXPECT_LE(rel(convective_term(u, No), uu), 1e-13) << N << " " << No;
    }
  }
}
