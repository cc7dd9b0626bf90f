#include "degnse/control.hpp"
#include "degnse/nonlinearity.hpp"
#include "degnse/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace degnse;

namespace {

ModelSpec cspec(int N_max = 4) {
  ModelSpec s;
  s.N_max = N_max;
  s.N = 1;
  s.noise.N0 = 1;
  return s;
}

const AuxiliaryModeSet& carriers4() {
  static const AuxiliaryModeSet set = select_auxiliary_pairs(1, 4);
  return set;
}

SpectralField scaled(int N, double w, std::mt19937_64& gen) {
  auto u = random_field(N, gen);
  return (w / sobolev_norm(u, w_exponent(1.0))) * u;
}

// A carrier set produced by an external SAT encoding of the same constraints.
AuxiliaryModeSet external_set() {
  const int rows[26][9] = {
      {-1, -1, -1, 1, -2, -4, 2, -1, -3}, {-1, -1, 0, 3, 3, -4, 4, 4, -4},  {-1, -1, 1, 1, 3, 0, 2, 4, -1},
      {-1, 0, -1, 3, -2, -1, 4, -2, 0},   {-1, 0, 0, 3, -4, -2, 4, -4, -2}, {-1, 0, 1, 3, 4, 1, 4, 4, 0},
      {-1, 1, -1, 1, 2, -4, 2, 1, -3},    {-1, 1, 0, 1, -3, 4, 2, -4, 4},   {-1, 1, 1, 1, 2, 4, 2, 1, 3},
      {0, -1, -1, 1, 3, 2, 1, 4, 3},      {0, -1, 0, 4, 3, -2, 4, 4, -2},   {0, -1, 1, 4, -4, 3, 4, -3, 2},
      {0, 0, -1, 1, 4, -4, 1, 4, -3},     {0, 0, 1, 1, -4, -3, -1, 4, 4},   {0, 1, -1, 1, -3, -1, -1, 4, 0},
      {0, 1, 0, 4, 1, -4, -4, 0, 4},      {0, 1, 1, 4, 2, 4, -4, -1, -3},   {1, -1, -1, 1, -1, 3, 0, 0, -4},
      {1, -1, 0, 4, -2, 4, -3, 1, -4},    {1, -1, 1, 4, -1, 2, -3, 0, -1},  {1, 0, -1, 4, 2, 0, -3, -2, -1},
      {1, 0, 0, 4, -4, 0, -3, 4, 0},      {1, 0, 1, 4, 4, 4, -3, -4, -3},   {1, 1, -1, 4, 1, -2, -3, 0, 1},
      {1, 1, 0, 2, -3, 2, -1, 4, -2},     {1, 1, 1, 4, -2, -3, -3, 3, 4},
  };
  AuxiliaryModeSet set;
  set.N0 = 1;
  set.N_max = 4;
  for (const auto& r : rows) {
    AuxiliaryPair p{{r[0], r[1], r[2]}, {r[3], r[4], r[5]}, {r[6], r[7], r[8]}, +1};
    p.sign = is_positive(p.k) ? +1 : -1;
    set.pairs.push_back(p);
  }
  return set;
}

// Residual of du + Au + B(u,u) - Qw assembled from the public operators, split at N0.
PhaseDefects reassembled_defect(const ControlSolution& plan, double t, int phase) {
  SpectralField u, du;
  plan.state(t, u, du, phase);
  SpectralField r = du + apply_stokes(u) + convective_term(u) - apply_Q(plan.control(t, phase), plan.spec().noise);
  const int N0 = plan.spec().noise.N0;
  const auto low = project_window(r, N0, Window::Low).coeffs();
  const auto high = project_window(r, N0, Window::High).coeffs();
  return {high.cwiseAbs().maxCoeff(), low.cwiseAbs().maxCoeff(), 0.0};
}

struct GenericPlan {
  SpectralField x, y;
  ControlSolution plan;
};

const GenericPlan& generic_plan() {
  static const GenericPlan g = [] {
    std::mt19937_64 gen(5);
    GenericPlan out;
    out.x = scaled(3, 1.0, gen);
    out.y = scaled(3, 1.0, gen);
    out.plan = plan_control(out.x, out.y, 1.0, 0.05, cspec(), carriers4());
    return out;
  }();
  return g;
}

}  // namespace

TEST(Carriers, PairConstantMatchesHandArithmetic) {
  EXPECT_NEAR(pair_constant({2, 2, 1}, {-1, -2, -1}), 3.0 / std::sqrt(5.0), 1e-15);
  EXPECT_THROW(pair_constant({1, 2, 0}, {2, 4, 0}), std::invalid_argument);
}

TEST(Carriers, PairValidityRules) {
  // k = (0,0,1) positive: k = l + m with l and -m positive.
  AuxiliaryPair good{{0, 0, 1}, {1, -4, -3}, {-1, 4, 4}, +1};
  EXPECT_TRUE(auxiliary_pair_valid(good, 1, 4));
  EXPECT_FALSE(auxiliary_pair_valid(good, 1, 3));  // carrier outside truncation
  auto wrong_sign = good;
  wrong_sign.sign = -1;
  EXPECT_FALSE(auxiliary_pair_valid(wrong_sign, 1, 4));
  AuxiliaryPair equal_norm{{1, 1, 0}, {3, -2, 1}, {-2, 3, -1}, +1};
  EXPECT_EQ(equal_norm.l.norm2(), equal_norm.m.norm2());
  EXPECT_FALSE(auxiliary_pair_valid(equal_norm, 1, 4));
  AuxiliaryPair parallel{{1, 1, 0}, {4, 4, 0}, {-3, -3, 0}, +1};
  EXPECT_FALSE(auxiliary_pair_valid(parallel, 1, 4));
  AuxiliaryPair unequal{{1, 1, 0}, {4, -2, 1}, {-3, 3, -1}, +1};
  EXPECT_TRUE(auxiliary_pair_valid(unequal, 1, 4));
  AuxiliaryPair low_carrier{{0, 0, 1}, {2, 0, 1}, {-2, 0, 0}, +1};
  EXPECT_FALSE(auxiliary_pair_valid(low_carrier, 1, 4));  // |.|_inf <= 2 N0
}

TEST(Carriers, EveryReturnedPairIsIntegerExact) {
  const auto& set = carriers4();
  const auto lows = enumerate_modes(1);
  ASSERT_EQ(set.pairs.size(), lows.size());
  for (size_t i = 0; i < set.pairs.size(); ++i) {
    const auto& p = set.pairs[i];
    EXPECT_TRUE(p.k == lows[i]);
    EXPECT_TRUE(auxiliary_pair_valid(p, 1, 4));
    EXPECT_TRUE(is_positive(p.k) ? (p.l + p.m == p.k) : (p.l - p.m == p.k));
    for (size_t j = 0; j < i; ++j) EXPECT_TRUE(carriers_compatible(p, set.pairs[j], 1));
  }
}

TEST(Carriers, InfeasibleBelowFourReportsSmallestLevel) {
  const auto s3 = search_carriers(1, 3);
  EXPECT_EQ(s3.status, CarrierStatus::Infeasible);
  try {
    select_auxiliary_pairs(1, 3);
    FAIL() << "expected CarrierInfeasible";
  } catch (const CarrierInfeasible& e) {
    EXPECT_EQ(e.N_max, 3);
    EXPECT_EQ(e.smallest_feasible, 4);
  }
}

TEST(Carriers, AuditIsExactlyZero) {
  const auto a = audit_interactions(carriers4());
  EXPECT_TRUE(a.clean());
  EXPECT_EQ(a.forbidden, 0);
  EXPECT_GT(a.intended, 0);
  // 52 carriers, ordered pairs among them plus both orders against 26 low modes, 4 polarizations each
  EXPECT_EQ(a.checked, 4L * (52 * 52 + 2 * 26 * 52));
}

TEST(Carriers, AuditAgreesOnExternalSet) {
  const auto ext = external_set();
  for (const auto& p : ext.pairs) EXPECT_TRUE(auxiliary_pair_valid(p, 1, 4));
  EXPECT_TRUE(audit_interactions(ext).clean());
}

TEST(Carriers, AuditDetectsConflict) {
  auto set = external_set();
  // Swap pair 1 for a valid pair whose carriers clash with pair 0.
  const auto& p0 = set.pairs[0];
  bool replaced = false;
  for (const auto& l : enumerate_modes(2, Window::High, 4)) {
    AuxiliaryPair q{set.pairs[1].k, l, l - set.pairs[1].k, -1};
    if (!auxiliary_pair_valid(q, 1, 4) || carriers_compatible(q, p0, 1)) continue;
    set.pairs[1] = q;
    replaced = true;
    break;
  }
  ASSERT_TRUE(replaced);
  const auto a = audit_interactions(set);
  EXPECT_GT(a.forbidden, 0);
  EXPECT_GT(a.max_forbidden, 0.0);
}

TEST(Plan, ZeroToZeroEmitsZeroControl) {
  const auto z = SpectralField(4);
  const auto plan = plan_control(z, z, 1.0, 0.05, cspec(), carriers4());
  for (double t : {0.0, 0.1, 0.3, 0.6, 0.9, 1.0}) {
    EXPECT_EQ(plan.control(t).coeffs().cwiseAbs().maxCoeff(), 0.0) << t;
    EXPECT_EQ(plan.state(t).coeffs().cwiseAbs().maxCoeff(), 0.0) << t;
  }
  EXPECT_EQ(plan.planned_miss(), 0.0);
}

TEST(Plan, SingleModeFollowsStokesDecay) {
  const ModeIndex k{3, -1, 2};
  auto x = single_mode(4, k, 0.4, -0.7);
  const auto plan = plan_control(x, SpectralField(4), 1.0, 0.05, cspec(), carriers4());
  const double a = w_exponent(1.0);
  const double expected = std::exp(-k.norm2() * plan.T1()) * sobolev_norm(x, a);
  EXPECT_NEAR(sobolev_norm(plan.state(plan.T1() * (1 - 1e-15)), a), expected, 1e-10 * sobolev_norm(x, a));
}

TEST(Plan, XEqualsYStaysWithinTolerance) {
  std::mt19937_64 gen(11);
  const auto x = scaled(3, 1.0, gen);
  const auto plan = plan_control(x, x, 1.0, 0.05, cspec(), carriers4());
  EXPECT_LE(plan.planned_miss(), 0.025);
  EXPECT_LE(sobolev_norm(plan.state(1.0) - x.embed(4), w_exponent(1.0)), 0.05);
}

TEST(Plan, PhaseStructure) {
  const auto& g = generic_plan();
  const auto& p = g.plan;
  EXPECT_LT(0.0, p.T1());
  EXPECT_LT(p.T1(), p.T2());
  EXPECT_LT(p.T2(), p.T3());
  EXPECT_LT(p.T3(), p.T());
  EXPECT_LE(p.T1(), 0.25 + 1e-15);
  EXPECT_EQ((p.state(0.0) - g.x.embed(4)).coeffs().cwiseAbs().maxCoeff(), 0.0);

  // Continuity across each boundary, one-sided limits from both phases.
  const double bounds[3] = {p.T1(), p.T2(), p.T3()};
  for (int b = 0; b < 3; ++b) {
    SpectralField ul, dul, ur, dur;
    p.state(bounds[b], ul, dul, b + 1);
    p.state(bounds[b], ur, dur, b + 2);
    const double scale = 1.0 + ul.coeffs().cwiseAbs().maxCoeff();
    EXPECT_LE((ul - ur).coeffs().cwiseAbs().maxCoeff(), 1e-12 * scale) << "boundary " << b + 1;
  }

  // Phase-1 control vanishes; later controls never touch the unforced block.
  for (int i = 0; i <= 8; ++i) {
    const double t = p.T1() * i / 8.0;
    EXPECT_EQ(p.control(t, 1).coeffs().cwiseAbs().maxCoeff(), 0.0);
  }
  for (double t : {0.3, 0.55, 0.7, 0.9, 0.99}) {
    const auto w = p.control(t);
    EXPECT_EQ(project_window(w, 1, Window::Low).coeffs().cwiseAbs().maxCoeff(), 0.0) << t;
  }
}

TEST(Plan, EndpointsAreExact) {
  const auto& g = generic_plan();
  const auto& p = g.plan;
  SpectralField u, du;
  p.state(p.T2(), u, du, 2);
  EXPECT_EQ(project_window(u, 1, Window::High).coeffs().cwiseAbs().maxCoeff(), 0.0);
  p.state(p.T3(), u, du, 3);
  const auto zL = project_window(g.y.embed(4), 1, Window::Low);
  EXPECT_LE((project_window(u, 1, Window::Low) - zL).coeffs().cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE(p.planned_miss(), 0.5 * p.eps());
  EXPECT_LE(sobolev_norm(p.state(p.T()) - g.y.embed(4), w_exponent(1.0)), p.eps());
}

TEST(Plan, DefectsBelowThreshold) {
  const auto& p = generic_plan().plan;
  ASSERT_EQ(p.defects().size(), 4u);
  for (const auto& d : p.defects()) {
    EXPECT_LE(d.high, 1e-9);
    EXPECT_LE(d.low, 1e-9);
  }
  // Independent reassembly of the controlled equation at interior points of every phase.
  const double bounds[5] = {0.0, p.T1(), p.T2(), p.T3(), p.T()};
  for (int ph = 1; ph <= 4; ++ph) {
    const int nodes = ph == 1 ? 400 : 800;
    for (int i : {0, 3, nodes / 2, nodes - 1}) {
      const double t = bounds[ph - 1] + (bounds[ph] - bounds[ph - 1]) * i / nodes;
      const auto d = reassembled_defect(p, t, ph);
      EXPECT_LE(d.high, 1e-9) << "phase " << ph << " t=" << t;
      EXPECT_LE(d.low, 1e-9) << "phase " << ph << " t=" << t;
    }
  }
}

TEST(Plan, EnergyMonitors) {
  const auto& g = generic_plan();
  const auto& p = g.plan;
  const double a = w_exponent(1.0), x0 = sobolev_norm(g.x, a);
  for (int i = 0; i <= 50; ++i) {
    EXPECT_LE(sobolev_norm(p.state(p.T1() * i / 50.0), a), std::sqrt(2.0) * x0);
    const double t = p.T1() + (p.T2() - p.T1()) * i / 50.0;
    EXPECT_LE(sobolev_norm(p.state(t), a), 2.0 * x0);
  }
}

TEST(Plan, ReplanningShrinksMiss) {
  std::mt19937_64 gen(21);
  const auto x = scaled(3, 1.0, gen), y = scaled(3, 1.0, gen);
  const auto plan = plan_control(x, y, 1.0, 0.004, cspec(), carriers4());
  const auto& h = plan.replan_history();
  ASSERT_GE(h.size(), 2u);
  for (size_t i = 1; i < h.size(); ++i) EXPECT_LT(h[i], h[i - 1]);
  EXPECT_LE(h.back(), 0.002);
  EXPECT_THROW(plan_control(x, y, 1.0, 1e-12, cspec(), carriers4()), NumericalFailure);
}

TEST(Replay, SameTruncationMatchesPlan) {
  const auto& p = generic_plan().plan;
  const auto r = verify_control(p, 4, 200);
  EXPECT_LE(r.miss, p.eps() + 1e-6);
  EXPECT_NEAR(r.miss, p.planned_miss(), 1e-6);
  EXPECT_LE(r.sup_norm, p.rho0() * (1.0 + 1e-6));
}

TEST(Replay, RejectsLowerTruncation) {
  EXPECT_THROW(verify_control(generic_plan().plan, 3, 10), std::invalid_argument);
}
