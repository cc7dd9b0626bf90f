#include "degnse/hormander.hpp"
#include "degnse/nonlinearity.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

using namespace degnse;

namespace {

ModelSpec hspec(double rho, double delta = 0.0) {
  ModelSpec s;
  s.N_max = 2;
  s.N = 2;
  s.noise.N0 = 1;
  s.cutoff.rho = rho;
  s.cutoff.delta = delta;
  return s;
}

SpectralField point(const ModelSpec& s, double w, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  auto u = random_field(s.N_max, gen);
  return (w / sobolev_norm(u, s.noise.w_alpha())) * u;
}

// Independent certificate oracle: scans the integer box directly.
int brute_minimal_N(int N0) {
  for (int N = N0 + 1;; ++N) {
    bool all = true;
    for (int a = -N0; a <= N0 && all; ++a)
      for (int b = -N0; b <= N0 && all; ++b)
        for (int c = -N0; c <= N0 && all; ++c) {
          if (!a && !b && !c) continue;
          bool ok = false;
          for (int x = -N; x <= N && !ok; ++x)
            for (int y = -N; y <= N && !ok; ++y)
              for (int z = -N; z <= N && !ok; ++z) {
                if (std::max({std::abs(x), std::abs(y), std::abs(z)}) <= N0) continue;
                for (int s : {1, -1}) {
                  int p = s * (a - x), q = s * (b - y), r = s * (c - z);
                  if (s < 0) p = x - a, q = y - b, r = z - c;
                  int sup = std::max({std::abs(p), std::abs(q), std::abs(r)});
                  if (sup <= N0 || sup > N) continue;
                  if (x * x + y * y + z * z == p * p + q * q + r * r) continue;
                  if (y * r - z * q == 0 && z * p - x * r == 0 && x * q - y * p == 0) continue;
                  ok = true;
                }
              }
          all = ok;
        }
    if (all) return N;
  }
}

Eigen::VectorXd low_of(const SpectralField& f, const std::vector<int>& gens) {
  Eigen::VectorXd v(gens.size());
  for (size_t i = 0; i < gens.size(); ++i) v[i] = f.coeffs()[gens[i]];
  return v;
}

}  // namespace

TEST(Decomposition, ExampleCertificate) {
  PairCertificate c{{1, 0, 0}, {2, 2, 1}, {-1, -2, -1}, +1};
  EXPECT_TRUE(certificate_valid(c, 1, 2));
  c.m = {-1, -2, 0};
  EXPECT_FALSE(certificate_valid(c, 1, 2));
  PairCertificate same{{1, 0, 0}, {2, 1, 0}, {-1, 1, 0}, +1};  // m low
  EXPECT_FALSE(certificate_valid(same, 1, 2));
  PairCertificate parallel{{1, 0, 0}, {2, 0, 0}, {-1, 0, 0}, +1};
  EXPECT_FALSE(certificate_valid(parallel, 1, 2));
}

TEST(Decomposition, MatchesBruteOracle) {
  for (int N0 : {1, 2}) {
    auto d = decomposition_search(N0);
    EXPECT_EQ(d.N, brute_minimal_N(N0)) << N0;
    EXPECT_EQ(d.certificates.size(), enumerate_modes(N0).size());
    for (const auto& c : d.certificates) EXPECT_TRUE(certificate_valid(c, N0, d.N));
  }
  EXPECT_EQ(decomposition_search(1).N, 2);
  EXPECT_THROW(decomposition_search(0), std::invalid_argument);
}

TEST(Drift, CorrectionSupportAndZero) {
  auto s = hspec(1.0);
  const double a = s.noise.w_alpha();
  EXPECT_EQ(drift_field_X0(SpectralField(2), s).coeffs().norm(), 0.0);
  for (double w : {0.5, 0.9, 2.2, 3.0}) EXPECT_EQ(drift_field_X02(point(s, w, 3), s).coeffs().norm(), 0.0) << w;
  auto y = point(s, 1.5, 4);
  auto x2 = drift_field_X02(y, s);
  double sum = 0;
  const auto& t = y.trunc();
  for (int c = 0; c < t.dim(); ++c)
    if (t.sup_norm(c / 2) <= 1) sum += std::abs(std::pow(t.norm2(c / 2), a) * y.coeffs()[c]);
  EXPECT_GT(x2.coeffs().norm(), 0.0);
  EXPECT_LE(x2.coeffs().lpNorm<1>(), 0.5 * 35.0 / 16.0 * 4.0 * sum / 1.5 * (1.0 + 1e-12));
}

TEST(Bracket, LinearFieldExact) {
  auto s = hspec(1.0);
  auto y = point(s, 0.7, 5);
  FieldMap A = [](const SpectralField& z) { return apply_stokes(z); };
  const auto& t = y.trunc();
  for (ModeIndex k : {ModeIndex{1, 0, 0}, ModeIndex{2, -1, 1}}) {
    const double qk = 0.3;
    SpectralField K = single_mode(2, k, qk);
    FieldMap Kc = [K](const SpectralField&) { return K; };
    auto b = bracket_L(A, Kc, y, 2, 1e-4);
    SpectralField expect = single_mode(2, k, -t.norm2(t.index(k)) * qk);
    EXPECT_LE((b - expect).coeffs().norm(), 1e-10);
  }
}

TEST(Bracket, CaseTwoClosedForm) {
  auto s = hspec(10.0);
  auto y = point(s, 5.0, 6);
  auto gens = generator_components(s);
  auto pairs = certificate_pairs(decomposition_search(1), s);
  SystemOptions o;
  o.K1 = false;
  o.pairs = pairs;
  auto sys = hormander_system(y, s, o);
  auto fd = hormander_system_fd(y, s, pairs, 1e-3);
  const auto t = y.trunc_ptr();
  double worst = 0, worst_fd = 0, scale = 0;
  for (size_t i = 0; i < sys.size(); ++i) {
    const auto& b = sys[i];
    if (b.generation != 2) continue;
    auto e = [&](int g) {
      SpectralField f = SpectralField::zero_like(y);
      f.coeffs()[gens[g]] = generator_amplitude(y, gens[g], s);
      return f;
    };
    SpectralField closed = bilinear_term(e(b.a), e(b.b)) + bilinear_term(e(b.b), e(b.a));
    Eigen::VectorXd c = low_of(closed, gens);
    worst = std::max(worst, (b.v + c).norm());
    worst_fd = std::max(worst_fd, (fd[i].v - b.v).norm());
    scale = std::max(scale, c.norm());
  }
  ASSERT_GT(scale, 0.0);
  worst_fd /= scale;
  EXPECT_LE(worst, 1e-8);
  EXPECT_LE(worst_fd, 1e-6);
}

TEST(Bracket, CaseTwoDeltaIndependent) {
  auto pairs = certificate_pairs(decomposition_search(1), hspec(10.0));
  SystemOptions o;
  o.pairs = pairs;
  auto y = point(hspec(10.0), 5.0, 7);
  auto a = hormander_system(y, hspec(10.0, 1e-3), o);
  auto b = hormander_system(y, hspec(10.0, 1e-1), o);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i].generation == 2) EXPECT_LE((a[i].v - b[i].v).norm(), 1e-10);
  auto fa = hormander_system_fd(y, hspec(10.0, 1e-3), pairs, 1e-3);
  auto fb = hormander_system_fd(y, hspec(10.0, 1e-1), pairs, 1e-3);
  for (size_t i = 0; i < fa.size(); ++i) EXPECT_LE((fa[i].v - fb[i].v).norm(), 1e-9);
}

// The analytic engine against nested finite differences wherever cutoff derivatives are live.
TEST(Bracket, AnalyticMatchesNestedDifferences) {
  const double rho = 1.0;
  auto s = hspec(rho, 0.05);
  auto pairs = certificate_pairs(decomposition_search(1), s);
  std::vector<std::pair<int, int>> sub(pairs.begin(), pairs.begin() + 24);
  auto gens = generator_components(s);
  for (int i = 0; i < 8; ++i) sub.emplace_back(i, 60 + 7 * i);  // low/high mixes
  sub.emplace_back(3, 3);
  sub.emplace_back(60, 60);
  SystemOptions o;
  o.K1 = false;
  o.pairs = sub;
  for (double w : {1.3 * rho, 1.7 * rho, 4.5 * rho}) {
    auto y = point(s, w, 11);
    auto an = hormander_system(y, s, o);
    auto fd = hormander_system_fd(y, s, sub, 1e-3 * w);
    ASSERT_EQ(an.size(), fd.size());
    double scale = 0, err = 0;
    for (size_t i = 0; i < an.size(); ++i) {
      scale = std::max(scale, an[i].v.norm());
      err = std::max(err, (an[i].v - fd[i].v).norm());
    }
    EXPECT_GT(scale, 0.0);
    EXPECT_LE(err, 1e-6 * scale) << "w=" << w;
  }
}

TEST(System, CountsAndSupport) {
  auto s = hspec(1.0);
  auto y = point(s, 1.5, 12);
  SystemOptions o;
  auto t0 = std::chrono::steady_clock::now();
  auto sys = hormander_system(y, s, o);
  const int M = low_dimension(2);
  ASSERT_EQ(static_cast<int>(generator_components(s).size()), M);
  EXPECT_EQ(static_cast<int>(sys.size()), M + M + M * M);
  for (const auto& b : sys) {
    ASSERT_EQ(b.v.size(), M);
    EXPECT_TRUE(b.v.allFinite());
  }
  auto rep = span_rank(sys, s);
  EXPECT_EQ(rep.rank, M);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 120.0);
}

TEST(Span, CaseOneKZeroAlone) {
  auto s = hspec(1.0);
  s.N = 2;
  auto y = point(s, 10.0, 13);
  SystemOptions o;
  o.K1 = o.K2 = false;
  auto rep = span_rank(hormander_system(y, s, o), s);
  EXPECT_EQ(rep.rank, rep.M);
  EXPECT_GT(rep.sigma_min, 0.0);
}

TEST(Span, CaseTwoLowNoiseVanishesYetSpans) {
  auto s = hspec(10.0);
  auto y = point(s, 5.0, 14);
  auto gens = generator_components(s);
  SystemOptions o;
  o.K1 = o.K2 = false;
  auto k0 = hormander_system(y, s, o);
  for (size_t i = 0; i < gens.size(); ++i)
    if (y.trunc().sup_norm(gens[i] / 2) <= 1) EXPECT_EQ(k0[i].v.norm(), 0.0);
  EXPECT_LT(span_rank(k0, s).rank, span_rank(k0, s).M);
  o.K2 = true;
  o.pairs = certificate_pairs(decomposition_search(1), s);
  auto rep = span_rank(hormander_system(y, s, o), s);
  EXPECT_EQ(rep.rank, rep.M);
  EXPECT_GT(rep.sigma_min, 0.0);
}

TEST(Span, SigmaStableUnderStep) {
  auto s = hspec(10.0);
  auto y = point(s, 5.0, 15);
  auto pairs = certificate_pairs(decomposition_search(1), s);
  auto a = span_rank(hormander_system_fd(y, s, pairs, 1e-4), s);
  auto b = span_rank(hormander_system_fd(y, s, pairs, 1e-5), s);
  EXPECT_EQ(a.rank, a.M);
  EXPECT_EQ(b.rank, b.M);
  EXPECT_NEAR(a.sigma_min / b.sigma_min, 1.0, 0.1);
}

TEST(Span, DuplicatesRankOne) {
  auto s = hspec(1.0);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(low_dimension(2), 1.0, 2.0);
  std::vector<BracketVector> vs(5, BracketVector{v, 0, 0, -1});
  EXPECT_EQ(span_rank(vs, s).rank, 1);
  EXPECT_THROW(span_rank({}, s), std::invalid_argument);
}

TEST(Region, Classification) {
  EXPECT_EQ(region_classify(0.0, 4.0, 1.0), Region::Case2);
  EXPECT_EQ(region_classify(40.0, 4.0, 1.0), Region::Case1);
  EXPECT_EQ(region_classify(6.0, 4.0, 1.0), Region::Case3);
  EXPECT_EQ(region_classify(3.0, 4.0, 1.0), Region::Case2);
  EXPECT_EQ(region_classify(9.0, 4.0, 1.0), Region::Case1);
  EXPECT_THROW(region_classify(1.0, 4.0, 1.5), std::invalid_argument);
}

TEST(Region, MeshStaysInBall) {
  auto s = hspec(1.0);
  auto x = point(s, 2.0, 16);
  auto mesh = ball_mesh(x, 0.25, 32, 9, s.noise.w_alpha());
  ASSERT_EQ(mesh.size(), 32u);
  for (const auto& y : mesh) EXPECT_LE(sobolev_norm(y - x, s.noise.w_alpha()), 0.25 + 1e-12);
}

TEST(CaseThree, PerturbationScalesLikeInverseCube) {
  auto s = hspec(1.0);
  auto pairs = certificate_pairs(decomposition_search(1), s);
  auto rep = case3_perturbation_bound(s, {4.0, 8.0, 16.0}, 1.5, pairs, 4, 21);
  ASSERT_EQ(rep.magnitude.size(), 3u);
  for (double m : rep.magnitude) EXPECT_GT(m, 0.0);
  EXPECT_NEAR(rep.exponent, -3.0, 0.5);
  auto off = case3_perturbation_bound(s, {4.0}, 0.5, pairs, 2, 21);
  EXPECT_EQ(off.magnitude[0], 0.0);
}

TEST(CaseThree, ShellSpansAtModerateRho) {
  auto s = hspec(8.0);
  SystemOptions o;
  o.K1 = false;
  o.pairs = certificate_pairs(decomposition_search(1), s);
  for (double w : {7.0, 12.0, 17.0}) {
    auto rep = span_rank(hormander_system(point(s, w, 17), s, o), s);
    EXPECT_EQ(rep.rank, rep.M) << w;
  }
}
