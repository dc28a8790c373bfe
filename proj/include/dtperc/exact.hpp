#pragma once

// Exact probabilities by enumerating configurations and configuration pairs.

#include <bit>
#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dtperc/decision_tree.hpp"
#include "dtperc/error.hpp"
#include "dtperc/event.hpp"
#include "dtperc/graph.hpp"

namespace dtperc {

inline constexpr double kDefaultTolerance = 1e-12;
inline constexpr std::size_t kMaxExactEdges = 24;
inline constexpr std::size_t kMaxPairEdges = 12;
inline constexpr std::size_t kMaxSpliceLawEdges = 10;

// Neumaier's compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0;
  double comp_ = 0;
};

// mu(c) for every configuration, stored as two half tables.
class ConfigWeights {
 public:
  explicit ConfigWeights(const Graph& g) {
    const std::size_t m = g.num_edges();
    low_bits_ = m / 2;
    low_ = half(g, 0, low_bits_);
    high_ = half(g, low_bits_, m);
  }

  double operator()(std::uint64_t c) const {
    return low_[c & ((std::uint64_t{1} << low_bits_) - 1)] * high_[c >> low_bits_];
  }

 private:
  static std::vector<double> half(const Graph& g, std::size_t from, std::size_t to) {
    std::vector<double> w(std::size_t{1} << (to - from));
    for (std::uint64_t c = 0; c < w.size(); ++c) {
      double x = 1.0;
      for (std::size_t i = from; i < to; ++i) {
        double p = g.edge(static_cast<EdgeId>(i)).p;
        x *= ((c >> (i - from)) & 1U) ? p : 1.0 - p;
      }
      w[c] = x;
    }
    return w;
  }

  std::size_t low_bits_ = 0;
  std::vector<double> low_, high_;
};

inline void guard_exact(const Graph& g, std::size_t limit, const char* what) {
  if (g.num_edges() > limit)
    throw SizeGuardError(std::string(what) + " enumerates 2^" + std::to_string(g.num_edges()) +
                         (limit == kMaxPairEdges ? "x2^" + std::to_string(g.num_edges()) : std::string()) +
                         " outcomes; limit is " + std::to_string(limit) + " edges");
}

// Probabilities of several events in one sweep over all configurations.
inline std::vector<double> exact_probs(const Graph& g, const std::vector<EventExpr>& events) {
  guard_exact(g, kMaxExactEdges, "exact probability");
  std::vector<CompiledEvent> compiled;
  for (const auto& e : events) compiled.emplace_back(g, e);
  ConfigWeights w(g);
  std::vector<CompensatedSum> sums(events.size());
  ClusterScratch cs;
  MaxFlow mf;
  std::vector<VertexId> labels;
  const std::uint64_t total = std::uint64_t{1} << g.num_edges();
  for (std::uint64_t c = 0; c < total; ++c) {
    double wc = w(c);
    if (wc == 0.0) continue;
    cs.compute(g, c, labels);
    for (std::size_t i = 0; i < compiled.size(); ++i)
      if (compiled[i].evaluate(labels, c, mf)) sums[i].add(wc);
  }
  std::vector<double> out;
  for (const auto& s : sums) out.push_back(s.value());
  return out;
}

inline double exact_prob(const Graph& g, const EventExpr& e) { return exact_probs(g, {e}).front(); }

inline double exact_npaths(const Graph& g, VertexId u, VertexId v, int n) {
  if (n < 1) throw InputError("npaths count must be at least 1");
  return exact_prob(g, EventExpr::npaths(g.name(u), g.name(v), n));
}

inline double table_prob(const Graph& g, const std::vector<std::uint8_t>& table) {
  ConfigWeights w(g);
  CompensatedSum s;
  for (std::uint64_t c = 0; c < table.size(); ++c)
    if (table[c]) s.add(w(c));
  return s.value();
}

// ---------------------------------------------------------------------------
// Pair queries

// Indicator on (C1, C2, S).
using PairQuery = std::function<bool(std::uint64_t c1, std::uint64_t c2, std::uint64_t s)>;

using Table = std::vector<std::uint8_t>;

// C1 in A and C1 ->_S C2 in B.
inline PairQuery joint_query(std::shared_ptr<const Table> a, std::shared_ptr<const Table> b) {
  return [a, b](std::uint64_t c1, std::uint64_t c2, std::uint64_t s) {
    return (*a)[c1] && (*b)[splice_bits(c1, c2, s)];
  };
}

// A box_S B by split enumeration over the open edges of S in C1.
inline PairQuery sqs_query(std::shared_ptr<const Table> a, std::shared_ptr<const Table> b, std::size_t m) {
  const std::uint64_t full = Configuration::full_mask(m);
  return [a, b, full](std::uint64_t c1, std::uint64_t c2, std::uint64_t s) {
    const std::uint64_t in_s = s & c1;
    const std::uint64_t a_base = ~s & full & c1;
    const std::uint64_t b_base = ~s & full & c2;
    if (!(*a)[c1] || !(*b)[in_s | b_base]) return false;
    return split_search(
        in_s, a_base, b_base, [&](std::uint64_t x) { return (*a)[x] != 0; }, [&](std::uint64_t x) { return (*b)[x] != 0; });
  };
}

inline std::shared_ptr<const Table> shared_table(const Graph& g, const EventExpr& e) {
  return std::make_shared<const Table>(event_table(g, e));
}

// Sum over all pairs of mu(C1)mu(C2) times each query's indicator, with
// S = S(C1, C2) built by t.
inline std::vector<double> exact_pair_multi(const Graph& g, const Strategy& t, const std::vector<PairQuery>& queries) {
  guard_exact(g, kMaxPairEdges, "pair enumeration");
  const std::size_t m = g.num_edges();
  const std::uint64_t total = std::uint64_t{1} << m;
  ConfigWeights w(g);
  auto table = s_table(t, g);
  std::vector<CompensatedSum> sums(queries.size());
  for (std::uint64_t c1 = 0; c1 < total; ++c1) {
    double w1 = w(c1);
    if (w1 == 0.0) continue;
    for (std::uint64_t c2 = 0; c2 < total; ++c2) {
      double w2 = w(c2);
      if (w2 == 0.0) continue;
      std::uint64_t s = table ? (*table)[c1] : run_s(t, g, c1, c2);
      for (std::size_t q = 0; q < queries.size(); ++q)
        if (queries[q](c1, c2, s)) sums[q].add(w1 * w2);
    }
  }
  std::vector<double> out;
  for (const auto& s : sums) out.push_back(s.value());
  return out;
}

enum class PairKind { joint, sqs };

inline double exact_pair(const Graph& g, const Strategy& t, PairKind kind, const EventExpr& a, const EventExpr& b) {
  guard_exact(g, kMaxPairEdges, "pair enumeration");
  if (kind == PairKind::sqs) {
    require_increasing(a, g);
    require_increasing(b, g);
  }
  auto ta = shared_table(g, a);
  auto tb = shared_table(g, b);
  PairQuery q = kind == PairKind::joint ? joint_query(ta, tb) : sqs_query(ta, tb, g.num_edges());
  return exact_pair_multi(g, t, {q}).front();
}

// Largest |P(X, Y) - mu(X)mu(Y)| over outcomes of (C1 ->_S C2, C2 ->_S C1).
inline double verify_splice_independence(const Graph& g, const Strategy& t) {
  guard_exact(g, kMaxSpliceLawEdges, "splice law");
  const std::size_t m = g.num_edges();
  const std::uint64_t total = std::uint64_t{1} << m;
  ConfigWeights w(g);
  auto table = s_table(t, g);
  std::vector<double> joint(total * total, 0.0);
  for (std::uint64_t c1 = 0; c1 < total; ++c1) {
    for (std::uint64_t c2 = 0; c2 < total; ++c2) {
      std::uint64_t s = table ? (*table)[c1] : run_s(t, g, c1, c2);
      std::uint64_t x = splice_bits(c1, c2, s);
      std::uint64_t y = splice_bits(c2, c1, s);
      joint[x * total + y] += w(c1) * w(c2);
    }
  }
  double worst = 0;
  for (std::uint64_t x = 0; x < total; ++x)
    for (std::uint64_t y = 0; y < total; ++y)
      worst = std::max(worst, std::abs(joint[x * total + y] - w(x) * w(y)));
  return worst;
}

}  // namespace dtperc
