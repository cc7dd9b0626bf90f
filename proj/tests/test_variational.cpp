#include "flow_oracle.hpp"
#include "degnse/variational.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

#include <cmath>
#include <random>

using namespace degnse;

namespace {

ModelSpec flow_spec(double rho, int N_max = 2, int N = 1) {
  ModelSpec s;
  s.N_max = N_max;
  s.N = N;
  s.noise.N0 = 1;
  s.cutoff.rho = rho;
  return s;
}

SpectralField start(int N_max, double w, double alpha, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto u = random_field(N_max, gen);
  return (w / sobolev_norm(u, alpha)) * u;
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(JacobianFlow, ZeroTrajectoryIsStokes) {
  auto s = flow_spec(1.0);
  s.noise.q_scale = 0.0;
  auto tr = simulate(SpectralField(2), 0.2, 1e-3, 1, s);
  auto fl = jacobian_flow(tr);
  ASSERT_EQ(fl.M, 52);
  EXPECT_EQ(fl.J.front(), Eigen::MatrixXd::Identity(52, 52));
  const auto low = window_components(*Truncation::get(2), 1);
  Eigen::VectorXd d(52);
  for (int i = 0; i < 52; ++i) d[i] = std::exp(-Truncation::get(2)->norm2(low[i] / 2) * 0.2);
  EXPECT_LE((fl.J.back() - Eigen::MatrixXd(d.asDiagonal())).norm(), 1e-10);
}

// rho chosen so the W-norm sits on the noise shell (rho, 2 rho) and the drift cutoff is active
class ShellFlow : public ::testing::TestWithParam<double> {};

TEST_P(ShellFlow, MatchesFrozenHighFiniteDifferences) {
  const double ratio = GetParam();  // |x|_W / rho
  auto s = flow_spec(1.0);
  const double a = s.noise.w_alpha();
  auto tr = simulate(start(2, ratio, a, 3), 0.05, 1e-3, 11, s);
  auto fl = jacobian_flow(tr);
  const int n = tr.steps();
  auto fd = degnse::testing::fd_jacobian(tr, n, 1e-5);
  EXPECT_LE(rel(fl.J.back(), fd), 1e-4) << ratio;
  for (double r : fl.identity_residual) EXPECT_LE(r, 1e-10);
}

INSTANTIATE_TEST_SUITE_P(Shells, ShellFlow, ::testing::Values(0.5, 1.5, 4.0));

TEST(JacobianFlow, InverseIdentityOnUnitInterval) {
  auto s = flow_spec(1.0);
  auto tr = simulate(start(2, 1.4, s.noise.w_alpha(), 4), 1.0, 1e-3, 5, s);
  FlowOptions o;
  o.record_stride = 100;
  auto fl = jacobian_flow(tr, o);
  double worst = 0;
  for (double r : fl.identity_residual) worst = std::max(worst, r);
  EXPECT_LE(worst, 1e-6);
}

TEST(JacobianFlow, InverseMatchesDirectInverseBelowCutoff) {
  auto s = flow_spec(50.0);
  auto tr = simulate(start(2, 3.0, s.noise.w_alpha(), 6), 0.3, 1e-3, 7, s);
  ASSERT_EQ(tr.tau, kNever);
  auto fl = jacobian_flow(tr);
  for (size_t i = 0; i < fl.J.size(); i += 50) {
    Eigen::MatrixXd inv = fl.J[i].inverse();
    EXPECT_LE(rel(fl.Jinv[i], inv), 1e-8);
  }
}

TEST(JacobianFlow, ItoInverseConvergesWithCorrectedTrace) {
  auto s = flow_spec(1.0);
  s.noise.qbar = 3.0;
  std::vector<double> errs_plus, errs_minus;
  for (double dt : {4e-4, 1e-4}) {
    double ep = 0, em = 0;
    for (int seed = 0; seed < 6; ++seed) {
      auto tr = simulate(start(2, 1.5, s.noise.w_alpha(), 8), 0.2, dt, 100 + seed, s);
      auto fl = jacobian_flow(tr);
      auto yp = inverse_flow_ito(tr, +1.0), ym = inverse_flow_ito(tr, -1.0);
      const auto I = Eigen::MatrixXd::Identity(fl.M, fl.M);
      ep += (fl.J.back() * yp.back() - I).norm();
      em += (fl.J.back() * ym.back() - I).norm();
    }
    errs_plus.push_back(ep / 6);
    errs_minus.push_back(em / 6);
  }
  std::printf("ito inverse: +trace %.3e -> %.3e, -trace %.3e -> %.3e\n", errs_plus[0], errs_plus[1], errs_minus[0],
              errs_minus[1]);
  EXPECT_LT(errs_plus[1], errs_plus[0]);
  EXPECT_LT(errs_plus[1], errs_minus[1]);
}

TEST(FrechetFlow, MatchesFullFiniteDifferences) {
  auto s = flow_spec(1.0);
  s.cutoff.delta = 0.01;
  const double a = s.noise.w_alpha();
  auto tr = simulate(start(2, 1.5, a, 9), 0.05, 1e-3, 12, s);
  std::mt19937_64 gen(13);
  auto h = random_field(2, gen);
  auto d = frechet_flow(tr, h);
  auto fd = degnse::testing::fd_frechet(tr, h, tr.steps(), 1e-5);
  EXPECT_LE((d.back().coeffs() - fd.coeffs()).norm(), 1e-4 * fd.coeffs().norm());
  auto z = frechet_flow(tr, SpectralField(2));
  EXPECT_EQ(z.back().coeffs().norm(), 0.0);
}

TEST(FrechetFlow, CrossBlocksStartAtZeroAndGrow) {
  auto s = flow_spec(5.0);
  auto tr = simulate(start(2, 3.0, s.noise.w_alpha(), 10), 0.2, 1e-3, 14, s);
  std::mt19937_64 gen(15);
  auto h = random_field(2, gen);
  auto hL = project_window(h, 1, Window::Low), hH = project_window(h, 1, Window::High);
  auto dL = frechet_flow(tr, hL), dH = frechet_flow(tr, hH);
  EXPECT_EQ(project_window(dL[0], 1, Window::High).coeffs().norm(), 0.0);
  EXPECT_EQ(project_window(dH[0], 1, Window::Low).coeffs().norm(), 0.0);
  double early = project_window(dL[10], 1, Window::High).coeffs().norm();
  double late = project_window(dL[200], 1, Window::High).coeffs().norm();
  EXPECT_GT(early, 0.0);
  EXPECT_GT(late, early);
}

TEST(Malliavin, DualAssemblyAndPositivity) {
  auto s = flow_spec(1.0);
  auto tr = simulate(start(2, 1.5, s.noise.w_alpha(), 16), 0.5, 1e-3, 17, s);
  auto fl = jacobian_flow(tr);
  auto m0 = malliavin_matrix(tr, fl, 0);
  EXPECT_EQ(m0.definition.norm(), 0.0);
  auto m = malliavin_matrix(tr, fl);
  EXPECT_LE(m.relative_gap, 1e-8);
  EXPECT_LE(m.symmetry_defect, 1e-12);
  EXPECT_GE(m.lambda_min, -1e-14 * m.lambda_max);
  // quadratic form nondecreasing in t
  std::mt19937_64 gen(18);
  Eigen::VectorXd eta = Eigen::VectorXd::NullaryExpr(fl.M, [&] { return std::normal_distribution<>()(gen); });
  double prev = 0;
  for (int n : {50, 100, 200, 400, 500}) {
    double q = eta.dot(malliavin_matrix(tr, fl, n).definition * eta);
    EXPECT_GE(q, prev);
    prev = q;
  }
}

TEST(Malliavin, SpdBelowCutoffThroughBrackets) {
  // low modes of Z_L(N0) are unforced below rho; the drift couples them in
  auto s = flow_spec(1e3, 2, 2);
  auto tr = simulate(start(2, 20.0, s.noise.w_alpha(), 19), 0.5, 5e-3, 20, s);
  ASSERT_EQ(tr.tau, kNever);
  auto fl = jacobian_flow(tr);
  auto m = malliavin_matrix(tr, fl);
  std::printf("lambda_min %.3e lambda_max %.3e\n", m.lambda_min, m.lambda_max);
  EXPECT_GT(m.lambda_min, 1e-12 * m.lambda_max);
  EXPECT_LE(m.relative_gap, 1e-8);
}

TEST(MalliavinDirection, HighResponseCancelsAndMatchesJM) {
  auto s = flow_spec(1.0);
  s.cutoff.delta = 0.05;
  auto tr = simulate(start(2, 1.5, s.noise.w_alpha(), 21), 0.2, 1e-3, 22, s);
  auto fl = jacobian_flow(tr);
  auto rep = malliavin_direction(tr, fl);
  EXPECT_LE(rep.high_residual, 1e-8);
  EXPECT_LE(rep.jm_residual, 1e-8);
  EXPECT_GT(rep.DL_final.norm(), 0.0);
  auto zero = malliavin_direction(tr, fl, true);
  EXPECT_EQ(zero.DL_final.norm(), 0.0);
  auto s0 = s;
  s0.cutoff.delta = 0.0;
  tr.spec = s0;
  EXPECT_THROW(malliavin_direction(tr, fl), std::invalid_argument);
}

TEST(Malliavin, TailCurveMonotone) {
  auto s = flow_spec(1.0);
  auto tc = lambda_min_tail(start(2, 1.5, s.noise.w_alpha(), 23), 0.1, 5e-3, 8, 24, s, {1e-2, 1e-4, 1e-6, 1e-8}, 1.0);
  for (double l : tc.lambda_min) EXPECT_GT(l, 0.0);
  for (size_t i = 1; i < tc.prob.size(); ++i) EXPECT_LE(tc.prob[i], tc.prob[i - 1]);
}
