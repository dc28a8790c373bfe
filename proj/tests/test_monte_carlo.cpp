#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "dtperc/exact.hpp"
#include "dtperc/monte_carlo.hpp"
#include "oracle.hpp"

using namespace dtperc;

namespace {

constexpr std::uint64_t kSeed = 20240611;

TEST(Sampling, StreamIsKeyedBySeedAndIndex) {
  SampleStream a(1, 5), b(1, 5), c(1, 6), d(2, 5);
  auto x = a.next();
  EXPECT_EQ(x, b.next());
  EXPECT_NE(x, c.next());
  EXPECT_NE(x, d.next());
  SampleStream u(3, 0);
  for (int i = 0; i < 1000; ++i) {
    double v = u.uniform();
    ASSERT_GE(v, 0.0);
    ASSERT_LT(v, 1.0);
  }
}

TEST(Sampling, EdgeFrequenciesMatchProbabilities) {
  std::vector<double> p{0.1, 0.5, 0.9, 0.0, 1.0};
  std::vector<int> open(p.size(), 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    SampleStream rng(kSeed, static_cast<std::uint64_t>(i));
    auto c = sample_configuration(p, rng);
    for (std::size_t e = 0; e < p.size(); ++e) open[e] += (c >> e) & 1U;
  }
  for (std::size_t e = 0; e < p.size(); ++e) {
    double se = std::sqrt(p[e] * (1 - p[e]) / n);
    EXPECT_NEAR(open[e] / static_cast<double>(n), p[e], 5 * se + 1e-12) << e;
  }
}

TEST(Estimates, AgreeWithExactValues) {
  for (const char* spec : {"grid:3,3,p=0.5", "theta:3,p=0.25", "complete:4,p=0.75"}) {
    Graph g = generate(spec);
    for (const char* ev : {"a,b", "a|b|c", "npaths(a,b,2)"}) {
      EventExpr e = parse_event(ev);
      auto est = mc_prob(g, e, 200000, kSeed);
      double exact = exact_prob(g, e);
      EXPECT_NEAR(est.mean, exact, 5 * est.se + 1e-9) << spec << " " << ev;
      EXPECT_LE(est.lo, est.mean);
      EXPECT_GE(est.hi, est.mean);
    }
  }
}

TEST(Estimates, WilsonIntervalAndStandardError) {
  auto e = make_estimate(30, 100, 1);
  EXPECT_DOUBLE_EQ(e.mean, 0.3);
  EXPECT_NEAR(e.se, std::sqrt(0.3 * 0.7 / 100), 1e-15);
  // Textbook Wilson interval for 30/100.
  EXPECT_NEAR(e.lo, 0.2189, 1e-4);
  EXPECT_NEAR(e.hi, 0.3958, 1e-4);
  auto z = make_estimate(0, 50, 1);
  EXPECT_EQ(z.lo, 0.0);
  EXPECT_GT(z.hi, 0.0);
}

TEST(Determinism, CountsIndependentOfThreadCount) {
  Graph g = generate("grid:4,4,p=0.5");
  std::vector<EventExpr> evs{parse_event("a,b"), parse_event("a,b,c"), parse_event("npaths(a,b,2)")};
  auto one = mc_joint(g, evs, 50001, kSeed, 1);
  for (unsigned t : {2u, 3u, 8u}) {
    auto many = mc_joint(g, evs, 50001, kSeed, t);
    EXPECT_EQ(many.hits, one.hits) << t;
    EXPECT_EQ(many.both, one.both) << t;
  }
  auto other = mc_joint(g, evs, 50001, kSeed + 1, 1);
  EXPECT_NE(other.hits, one.hits);
  Strategy t = make_strategy("bfs_cluster:a", g);
  auto p1 = mc_pair(g, t, McPairKind::sqs, evs[0], evs[1], 20000, kSeed, 1);
  auto p4 = mc_pair(g, t, McPairKind::sqs, evs[0], evs[1], 20000, kSeed, 4);
  EXPECT_EQ(p1.mean, p4.mean);
}

TEST(PairEstimates, AgreeWithExactPairSums) {
  Graph g = generate("theta:3,p=0.5");
  EventExpr a = parse_event("a,b"), b = parse_event("b,c");
  for (const char* ts : {"bfs_cluster:a", "dfs:a,id,until:b", "rest:S"}) {
    Strategy t = make_strategy(ts, g);
    for (auto [mk, ek] : {std::pair{McPairKind::joint, PairKind::joint}, std::pair{McPairKind::sqs, PairKind::sqs}}) {
      auto est = mc_pair(g, t, mk, a, b, 100000, kSeed);
      EXPECT_NEAR(est.mean, exact_pair(g, t, ek, a, b), 5 * est.se + 1e-9) << ts;
    }
  }
}

TEST(PathProfile, ParallelRoutesAreBinomial) {
  Graph g = generate("parallel:4,p=0.5");
  auto jc = mc_npaths_profile(g, g.vertex("a"), g.vertex("b"), 4, 200000, kSeed);
  auto m = jc.means();
  for (int n = 1; n <= 4; ++n) {
    double ref = oracle::binom_tail(4, n, 0.25);
    double se = std::sqrt(ref * (1 - ref) / 200000);
    EXPECT_NEAR(m[n - 1], ref, 5 * se + 1e-9) << n;
  }
  // Profiles are nested: n+1 paths imply n paths.
  for (int n = 1; n < 4; ++n) EXPECT_GE(jc.hits[n - 1], jc.hits[n]);
  auto single = mc_npaths(g, g.vertex("a"), g.vertex("b"), 2, 200000, kSeed);
  EXPECT_EQ(single.mean, m[1]);
}

TEST(DeltaMethod, ProductOfMeans) {
  // Var(XY) ~ y^2 Var(X) + x^2 Var(Y) + 2xy Cov(X,Y).
  std::vector<double> x{0.4, 0.7};
  std::vector<double> cov{0.01, 0.002, 0.002, 0.03};
  double se = delta_se([](const std::vector<double>& v) { return v[0] * v[1]; }, x, cov);
  double var = 0.49 * 0.01 + 0.16 * 0.03 + 2 * 0.28 * 0.002;
  EXPECT_NEAR(se, std::sqrt(var), 1e-8);
}

TEST(DeltaMethod, CovarianceOfIndicatorMeans) {
  JointCounts jc;
  jc.n = 10;
  jc.hits = {5, 5};
  jc.both = {5, 5, 5, 5};
  auto cov = jc.covariance();
  EXPECT_NEAR(cov[0], 0.025, 1e-15);
  EXPECT_NEAR(cov[1], 0.025, 1e-15);
}

TEST(Verdicts, ThresholdsAreSigmaScaled) {
  EXPECT_EQ(exact_verdict(-1e-13, 1e-12), Verdict::holds);
  EXPECT_EQ(exact_verdict(-1e-11, 1e-12), Verdict::violated);
  EXPECT_EQ(mc_verdict(0.031, 0.01, 3), Verdict::holds);
  EXPECT_EQ(mc_verdict(0.02, 0.01, 3), Verdict::inconclusive);
  EXPECT_EQ(mc_verdict(-0.02, 0.01, 3), Verdict::inconclusive);
  EXPECT_EQ(mc_verdict(-0.031, 0.01, 3), Verdict::violated);
}

TEST(Guards, ZeroSamplesRejected) {
  Graph g = generate("cycle:3,p=0.5");
  EXPECT_THROW(mc_prob(g, parse_event("a,b"), 0, 1), InputError);
}

}  // namespace
