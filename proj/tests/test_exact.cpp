#include <gtest/gtest.h>

#include <string>

#include "dtperc/exact.hpp"
#include "oracle.hpp"

using namespace dtperc;

namespace {

const std::string kSamples = DTPERC_SAMPLES;

oracle::Pred table_pred(const Graph& g, const EventExpr& e) {
  auto t = std::make_shared<std::vector<std::uint8_t>>(event_table(g, e));
  return [t](std::uint64_t c) { return (*t)[c] != 0; };
}

// Pair sums with an explicitly given S rule.
double pair_sum(const oracle::G& o, const std::function<std::uint64_t(std::uint64_t, std::uint64_t)>& s_of,
                const std::function<bool(std::uint64_t, std::uint64_t, std::uint64_t)>& ind) {
  const std::uint64_t total = std::uint64_t{1} << o.edges.size();
  double sum = 0;
  for (std::uint64_t c1 = 0; c1 < total; ++c1)
    for (std::uint64_t c2 = 0; c2 < total; ++c2)
      if (ind(c1, c2, s_of(c1, c2))) sum += oracle::weight(o, c1) * oracle::weight(o, c2);
  return sum;
}

std::uint64_t cluster_edges(const oracle::G& o, std::uint64_t c1, int v) {
  auto r = oracle::reach(o, c1, v);
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < o.edges.size(); ++i)
    if (r[o.edges[i].u] || r[o.edges[i].v]) s |= std::uint64_t{1} << i;
  return s;
}

TEST(ExactProb, MatchesEnumerationWithUnequalProbabilities) {
  Graph g = load_graph(kSamples + "/mixed_p.graph");
  auto o = oracle::from(g);
  for (const char* s : {"a,b", "a,b,c", "a|b|c", "a,b|c", "npaths(a,b,2)", "a,b U a,c", "!(b,c)"}) {
    EventExpr e = parse_event(s);
    // Connection probabilities straight from the search oracle.
    double ref = oracle::prob(o, table_pred(g, e));
    EXPECT_NEAR(exact_prob(g, e), ref, 1e-15) << s;
  }
  int a = o.vertex("a"), b = o.vertex("b");
  EXPECT_NEAR(exact_prob(g, parse_event("a,b")), oracle::prob(o, [&](std::uint64_t c) { return oracle::connected(o, c, a, b); }),
              1e-15);
  EXPECT_NEAR(exact_npaths(g, g.vertex("a"), g.vertex("b"), 2),
              oracle::prob(o, [&](std::uint64_t c) { return oracle::min_cut(o, c, a, b) >= 2; }), 1e-15);
}

TEST(ExactProb, ClosedFormsOnSmallFamilies) {
  // Triangle: a and b linked directly or through c.
  Graph tri = generate("cycle:3,p=0.5");
  EXPECT_DOUBLE_EQ(exact_prob(tri, parse_event("a,b")), 0.5 + 0.5 * 0.25);
  EXPECT_DOUBLE_EQ(exact_prob(tri, parse_event("a,b,c")), 0.5);
  // Parallel routes: the path count is binomial with success p^2.
  for (int n = 1; n <= 4; ++n) {
    Graph g = generate("parallel:4,p=0.5");
    EXPECT_NEAR(exact_npaths(g, g.vertex("a"), g.vertex("b"), n), oracle::binom_tail(4, n, 0.25), 1e-14);
  }
  Graph q = generate("parallel:3,q=0.3");
  EXPECT_NEAR(exact_prob(q, parse_event("npaths(a,b,3)")), 0.027, 1e-14);
}

TEST(ExactProb, SeveralEventsInOnePass) {
  Graph g = generate("grid:3,2,p=0.25");
  auto ps = exact_probs(g, {parse_event("a,b"), parse_event("a|b")});
  EXPECT_NEAR(ps[0] + ps[1], 1.0, 1e-15);
}

TEST(ExactPair, MatchesExplicitSRules) {
  Graph g = load_graph(kSamples + "/mixed_p.graph");
  auto o = oracle::from(g);
  const std::uint64_t full = Configuration::full_mask(g.num_edges());
  int a = o.vertex("a");
  for (auto [sa, sb] : std::vector<std::pair<std::string, std::string>>{{"a,b", "b,c"}, {"a,b", "a,b"}, {"a,c", "npaths(a,b,2)"}}) {
    EventExpr ea = parse_event(sa), eb = parse_event(sb);
    auto pa = table_pred(g, ea), pb = table_pred(g, eb);
    auto joint = [&](std::uint64_t c1, std::uint64_t c2, std::uint64_t s) {
      return pa(c1) && pb(oracle::splice(c1, c2, s));
    };
    auto box = [&](std::uint64_t c1, std::uint64_t c2, std::uint64_t s) { return oracle::sqs(o, pa, pb, c1, c2, s); };
    struct Rule {
      const char* spec;
      std::function<std::uint64_t(std::uint64_t, std::uint64_t)> s;
    };
    std::vector<Rule> rules{{"rest:S", [&](std::uint64_t, std::uint64_t) { return full; }},
                            {"rest:Sbar", [](std::uint64_t, std::uint64_t) { return std::uint64_t{0}; }},
                            {"bfs_cluster:a", [&](std::uint64_t c1, std::uint64_t) { return cluster_edges(o, c1, a); }}};
    for (const auto& r : rules) {
      Strategy t = make_strategy(r.spec, g);
      EXPECT_NEAR(exact_pair(g, t, PairKind::joint, ea, eb), pair_sum(o, r.s, joint), 1e-14) << r.spec;
      EXPECT_NEAR(exact_pair(g, t, PairKind::sqs, ea, eb), pair_sum(o, r.s, box), 1e-14) << r.spec;
    }
    // The two extreme trees give the classical quantities.
    double pa_ = oracle::prob(o, pa), pb_ = oracle::prob(o, pb);
    EXPECT_NEAR(exact_pair(g, make_strategy("rest:Sbar", g), PairKind::joint, ea, eb), pa_ * pb_, 1e-14);
    EXPECT_NEAR(exact_pair(g, make_strategy("rest:S", g), PairKind::joint, ea, eb),
                oracle::prob(o, [&](std::uint64_t c) { return pa(c) && pb(c); }), 1e-14);
    EXPECT_NEAR(exact_pair(g, make_strategy("rest:S", g), PairKind::sqs, ea, eb),
                oracle::prob(o, [&](std::uint64_t c) { return oracle::box(o, pa, pb, c); }), 1e-14);
  }
}

TEST(ExactPair, PolicyReadingC2) {
  Graph g = generate("path:3,p=0.5");
  auto o = oracle::from(g);
  Strategy t{"c2", [](Revealer& r) {
               r.reveal(1, Side::S);
               bool both = r.c2(1);
               r.reveal(0, both ? Side::S : Side::Sbar);
               if (r.c2(0)) r.reveal(2, Side::S);
             }};
  auto s_of = [](std::uint64_t, std::uint64_t c2) {
    std::uint64_t s = 2;
    if (c2 & 2) s |= 1;
    if (c2 & 1) s |= 4;
    return s;
  };
  EventExpr ea = parse_event("a,b"), eb = parse_event("a,c");
  auto pa = table_pred(g, ea), pb = table_pred(g, eb);
  auto joint = [&](std::uint64_t c1, std::uint64_t c2, std::uint64_t s) {
    return pa(c1) && pb(oracle::splice(c1, c2, s));
  };
  EXPECT_NEAR(exact_pair(g, t, PairKind::joint, ea, eb), pair_sum(o, s_of, joint), 1e-15);
  EXPECT_LE(verify_splice_independence(g, t), 1e-15);
}

TEST(SpliceLaw, IndependentForTreeBuiltSets) {
  for (const char* spec : {"cycle:4,p=0.5", "theta:3,p=0.25", "grid:3,2,p=0.75"}) {
    Graph g = generate(spec);
    for (const char* ts : {"bfs_cluster:a", "dfs:a,id,until:b", "dfs_stop_at:a,b+c", "seq:[dfs:c,id,S;dfs:a,id,Sbar;dfs:b,id,S]"}) {
      EXPECT_LE(verify_splice_independence(g, make_strategy(ts, g)), 1e-15) << spec << " " << ts;
    }
  }
}

TEST(Guards, LargeGraphsAreRefused) {
  Graph big = generate("grid:5,5,p=0.5");
  EXPECT_THROW(exact_prob(big, parse_event("a,b")), SizeGuardError);
  Graph mid = generate("grid:4,3,p=0.5");
  EXPECT_THROW(exact_pair(mid, make_strategy("rest:S", mid), PairKind::joint, parse_event("a,b"), parse_event("a,b")),
               SizeGuardError);
  EXPECT_THROW(verify_splice_independence(mid, make_strategy("rest:S", mid)), SizeGuardError);
  Graph tri = generate("cycle:3,p=0.5");
  EXPECT_THROW(exact_pair(tri, make_strategy("rest:S", tri), PairKind::sqs, parse_event("a|b"), parse_event("a,b")),
               HypothesisError);
}

TEST(CompensatedSum, KeepsSmallTerms) {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-17);
  EXPECT_NEAR(s.value(), 1.0 + 1e-14, 1e-16);
}

}  // namespace
