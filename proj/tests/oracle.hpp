#pragma once

// Brute-force reference computations used by the tests. They only read the
// edge list of a graph and share no algorithm with the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dtperc/graph.hpp"

namespace oracle {

struct Edge {
  int u, v;
  double p;
};

struct G {
  int n = 0;
  std::vector<Edge> edges;
  std::vector<std::string> names;

  int vertex(const std::string& s) const {
    for (int i = 0; i < n; ++i)
      if (names[i] == s) return i;
    return -1;
  }
};

inline G from(const dtperc::Graph& g) {
  G o;
  o.n = static_cast<int>(g.num_vertices());
  for (std::size_t v = 0; v < g.num_vertices(); ++v) o.names.push_back(g.name(static_cast<dtperc::VertexId>(v)));
  for (const auto& e : g.edges()) o.edges.push_back({static_cast<int>(e.u), static_cast<int>(e.v), e.p});
  return o;
}

inline double weight(const G& g, std::uint64_t c) {
  double w = 1;
  for (std::size_t i = 0; i < g.edges.size(); ++i) w *= ((c >> i) & 1U) ? g.edges[i].p : 1 - g.edges[i].p;
  return w;
}

// Plain iterative search over open edges.
inline std::vector<int> reach(const G& g, std::uint64_t open, int s) {
  std::vector<int> seen(g.n, 0);
  std::vector<int> stack{s};
  seen[s] = 1;
  while (!stack.empty()) {
    int x = stack.back();
    stack.pop_back();
    for (std::size_t i = 0; i < g.edges.size(); ++i) {
      if (!((open >> i) & 1U)) continue;
      int y = -1;
      if (g.edges[i].u == x) y = g.edges[i].v;
      if (g.edges[i].v == x) y = g.edges[i].u;
      if (y >= 0 && !seen[y]) {
        seen[y] = 1;
        stack.push_back(y);
      }
    }
  }
  return seen;
}

inline bool connected(const G& g, std::uint64_t open, int a, int b) { return reach(g, open, a)[b] != 0; }

// Menger: the number of edge-disjoint open paths equals the smallest number
// of open edges leaving a vertex set that holds s but not t.
inline int min_cut(const G& g, std::uint64_t open, int s, int t) {
  int best = 1 << 30;
  std::vector<int> others;
  for (int v = 0; v < g.n; ++v)
    if (v != s && v != t) others.push_back(v);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << others.size()); ++mask) {
    std::vector<int> side(g.n, 0);
    side[s] = 1;
    for (std::size_t i = 0; i < others.size(); ++i)
      if ((mask >> i) & 1U) side[others[i]] = 1;
    int cut = 0;
    for (std::size_t i = 0; i < g.edges.size(); ++i)
      if (((open >> i) & 1U) && side[g.edges[i].u] != side[g.edges[i].v]) ++cut;
    best = std::min(best, cut);
  }
  return best;
}

using Pred = std::function<bool(std::uint64_t)>;

inline double prob(const G& g, const Pred& pred) {
  double s = 0;
  for (std::uint64_t c = 0; c < (std::uint64_t{1} << g.edges.size()); ++c)
    if (pred(c)) s += weight(g, c);
  return s;
}

inline std::uint64_t splice(std::uint64_t c1, std::uint64_t c2, std::uint64_t s) { return (c1 & s) | (c2 & ~s); }

// Witness search straight from the definition: subsets w1 of the open edges
// of C1 certifying A and w2 of the open edges of the spliced configuration
// certifying B, overlapping only outside S. Events must be increasing.
inline bool sqs(const G& g, const Pred& a, const Pred& b, std::uint64_t c1, std::uint64_t c2, std::uint64_t s) {
  const std::uint64_t full = (std::uint64_t{1} << g.edges.size()) - 1;
  const std::uint64_t o1 = c1, o2 = splice(c1, c2, s) & full;
  std::vector<std::uint64_t> w1s, w2s;
  for (std::uint64_t w = 0; w <= full; ++w) {
    if ((w & ~o1) == 0 && a(w)) w1s.push_back(w);
    if ((w & ~o2) == 0 && b(w)) w2s.push_back(w);
  }
  for (auto w1 : w1s)
    for (auto w2 : w2s)
      if ((w1 & w2 & s) == 0) return true;
  return false;
}

// Ordinary disjoint occurrence: S is every edge and C2 is irrelevant.
inline bool box(const G& g, const Pred& a, const Pred& b, std::uint64_t c) {
  const std::uint64_t full = (std::uint64_t{1} << g.edges.size()) - 1;
  return sqs(g, a, b, c, c, full);
}

inline double binom_tail(int n, int k, double p) {
  double s = 0;
  for (int i = k; i <= n; ++i) s += std::tgamma(n + 1.0) / (std::tgamma(i + 1.0) * std::tgamma(n - i + 1.0)) *
                                    std::pow(p, i) * std::pow(1 - p, n - i);
  return s;
}

}  // namespace oracle
