#pragma once

// Connection events: parsing, printing, evaluation, monotonicity and
// disjoint occurrence.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dtperc/error.hpp"
#include "dtperc/graph.hpp"

namespace dtperc {

struct EventExpr {
  enum class Kind { partition, npaths, union_, intersect, complement };

  Kind kind = Kind::partition;
  std::vector<std::vector<std::string>> groups;  // partition
  std::string u, v;                              // npaths
  int n = 1;                                     // npaths
  std::vector<EventExpr> children;               // union, intersect, complement

  friend bool operator==(const EventExpr&, const EventExpr&) = default;

  static EventExpr partition(std::vector<std::vector<std::string>> groups) {
    EventExpr e;
    e.kind = Kind::partition;
    e.groups = std::move(groups);
    return e;
  }
  static EventExpr npaths(std::string u, std::string v, int n) {
    EventExpr e;
    e.kind = Kind::npaths;
    e.u = std::move(u);
    e.v = std::move(v);
    e.n = n;
    return e;
  }
  static EventExpr combine(Kind k, std::vector<EventExpr> children) {
    EventExpr e;
    e.kind = k;
    e.children = std::move(children);
    return e;
  }
  static EventExpr complement(EventExpr inner) {
    return combine(Kind::complement, {std::move(inner)});
  }
};

// ---------------------------------------------------------------------------
// Parser

namespace detail {

class EventParser {
 public:
  explicit EventParser(std::string_view text) : text_(text) {}

  EventExpr parse() {
    EventExpr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("event syntax error at position " + std::to_string(pos_ + 1) + ": " + msg);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek_char(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  static bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool name_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

  std::string peek_name() {
    skip_ws();
    std::size_t p = pos_;
    if (p >= text_.size() || !name_start(text_[p])) return {};
    while (p < text_.size() && name_char(text_[p])) ++p;
    return std::string(text_.substr(pos_, p - pos_));
  }

  bool at_union() { return peek_name() == "U"; }

  std::string name() {
    std::string n = peek_name();
    if (n.empty()) fail("expected a vertex name");
    if (n == "U") fail("'U' is reserved for union");
    pos_ += n.size();
    return n;
  }

  void expect(char c) {
    if (!peek_char(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  EventExpr expr() {
    std::vector<EventExpr> items{term()};
    while (at_union()) {
      pos_ += 1;
      items.push_back(term());
    }
    if (items.size() == 1) return std::move(items.front());
    return EventExpr::combine(EventExpr::Kind::union_, std::move(items));
  }

  EventExpr term() {
    std::vector<EventExpr> items{factor()};
    while (peek_char('&')) {
      ++pos_;
      items.push_back(factor());
    }
    if (items.size() == 1) return std::move(items.front());
    return EventExpr::combine(EventExpr::Kind::intersect, std::move(items));
  }

  EventExpr factor() {
    if (peek_char('!')) {
      ++pos_;
      return EventExpr::complement(factor());
    }
    if (peek_char('(')) {
      ++pos_;
      EventExpr e = expr();
      expect(')');
      return e;
    }
    return atom();
  }

  EventExpr atom() {
    std::string first = peek_name();
    if (first == "npaths") {
      std::size_t save = pos_;
      pos_ += first.size();
      if (peek_char('(')) {
        ++pos_;
        std::string u = name();
        expect(',');
        std::string v = name();
        expect(',');
        skip_ws();
        std::size_t digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (digits == pos_) fail("expected a path count");
        int n = 0;
        try {
          n = std::stoi(std::string(text_.substr(digits, pos_ - digits)));
        } catch (const std::exception&) {
          fail("path count out of range");
        }
        if (n == 0) {
          pos_ = digits;
          fail("npaths count must be at least 1");
        }
        expect(')');
        if (u == v) fail("npaths endpoints must differ");
        return EventExpr::npaths(u, v, n);
      }
      pos_ = save;
    }
    std::vector<std::vector<std::string>> groups;
    std::set<std::string> seen;
    do {
      if (!groups.empty()) ++pos_;  // consume '|'
      std::vector<std::string> group;
      do {
        if (!group.empty()) ++pos_;  // consume ','
        std::size_t at = pos_;
        std::string n = name();
        if (!seen.insert(n).second) {
          pos_ = at;
          skip_ws();
          fail("vertex '" + n + "' appears twice in a partition");
        }
        group.push_back(n);
      } while (peek_char(','));
      groups.push_back(std::move(group));
    } while (peek_char('|'));
    return EventExpr::partition(std::move(groups));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline EventExpr parse_event(std::string_view text) { return detail::EventParser(text).parse(); }

inline std::string print(const EventExpr& e) {
  using K = EventExpr::Kind;
  switch (e.kind) {
    case K::partition: {
      std::string s;
      for (std::size_t i = 0; i < e.groups.size(); ++i) {
        if (i) s += '|';
        for (std::size_t j = 0; j < e.groups[i].size(); ++j) {
          if (j) s += ',';
          s += e.groups[i][j];
        }
      }
      return s;
    }
    case K::npaths:
      return "npaths(" + e.u + "," + e.v + "," + std::to_string(e.n) + ")";
    case K::complement:
      return "!" + print(e.children.front());
    case K::union_:
    case K::intersect: {
      std::string s = "(";
      const char* op = e.kind == K::union_ ? " U " : " & ";
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) s += op;
        s += print(e.children[i]);
      }
      return s + ")";
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Monotonicity

enum class Monotonicity { increasing, decreasing, none };

inline const char* to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::increasing:
      return "increasing";
    case Monotonicity::decreasing:
      return "decreasing";
    default:
      return "none";
  }
}

inline Monotonicity monotonicity(const EventExpr& e) {
  using K = EventExpr::Kind;
  switch (e.kind) {
    case K::npaths:
      return Monotonicity::increasing;
    case K::partition: {
      if (e.groups.size() == 1) return Monotonicity::increasing;
      bool singletons = std::all_of(e.groups.begin(), e.groups.end(),
                                    [](const auto& g) { return g.size() == 1; });
      return singletons ? Monotonicity::decreasing : Monotonicity::none;
    }
    case K::complement: {
      Monotonicity m = monotonicity(e.children.front());
      if (m == Monotonicity::increasing) return Monotonicity::decreasing;
      if (m == Monotonicity::decreasing) return Monotonicity::increasing;
      return Monotonicity::none;
    }
    case K::union_:
    case K::intersect: {
      Monotonicity m = monotonicity(e.children.front());
      for (const auto& c : e.children)
        if (monotonicity(c) != m) return Monotonicity::none;
      return m;
    }
  }
  return Monotonicity::none;
}

// ---------------------------------------------------------------------------
// Edge-disjoint paths: unit-capacity max-flow on the open subgraph.

class MaxFlow {
 public:
  // Number of edge-disjoint open s-t paths, capped at `limit`.
  int edge_disjoint_paths(const Graph& g, std::uint64_t open, VertexId s, VertexId t, int limit) {
    net_.assign(g.num_edges(), 0);
    int found = 0;
    while (found < limit && augment(g, open, s, t)) ++found;
    return found;
  }

 private:
  // net_[e] is the flow along e from its u end to its v end, in {-1, 0, 1}.
  bool augment(const Graph& g, std::uint64_t open, VertexId s, VertexId t) {
    const std::size_t n = g.num_vertices();
    pred_edge_.assign(n, 0);
    seen_.assign(n, 0);
    queue_.clear();
    queue_.push_back(s);
    seen_[s] = 1;
    for (std::size_t head = 0; head < queue_.size() && !seen_[t]; ++head) {
      VertexId v = queue_[head];
      for (EdgeId e : g.incident(v)) {
        if (!((open >> e) & 1U)) continue;
        const Edge& ed = g.edge(e);
        VertexId w = ed.other(v);
        int dir = v == ed.u ? 1 : -1;
        if (seen_[w] || net_[e] * dir >= 1) continue;
        seen_[w] = 1;
        pred_edge_[w] = e;
        queue_.push_back(w);
      }
    }
    if (!seen_[t]) return false;
    for (VertexId w = t; w != s;) {
      EdgeId e = pred_edge_[w];
      const Edge& ed = g.edge(e);
      net_[e] += w == ed.v ? 1 : -1;
      w = ed.other(w);
    }
    return true;
  }

  std::vector<int> net_;
  std::vector<EdgeId> pred_edge_;
  std::vector<char> seen_;
  std::vector<VertexId> queue_;
};

// ---------------------------------------------------------------------------
// Compiled events: names resolved against one graph.

class CompiledEvent {
 public:
  CompiledEvent() = default;
  CompiledEvent(const Graph& g, const EventExpr& e) : graph_(&g), expr_(e) { root_ = compile(e); }

  const EventExpr& expr() const { return expr_; }
  const Graph& graph() const { return *graph_; }

  // `labels` are the cluster labels of `open`; scratch is used for npaths atoms.
  bool evaluate(const std::vector<VertexId>& labels, std::uint64_t open, MaxFlow& scratch) const {
    return eval(root_, labels, open, scratch);
  }

  bool evaluate(std::uint64_t open) const {
    ClusterScratch cs;
    std::vector<VertexId> labels;
    cs.compute(*graph_, open, labels);
    MaxFlow mf;
    return evaluate(labels, open, mf);
  }

  bool uses_npaths() const {
    return std::any_of(nodes_.begin(), nodes_.end(),
                       [](const Node& n) { return n.kind == EventExpr::Kind::npaths; });
  }

 private:
  struct Node {
    EventExpr::Kind kind;
    std::vector<std::vector<VertexId>> groups;
    VertexId u = 0, v = 0;
    int n = 1;
    std::vector<std::size_t> children;
  };

  std::size_t compile(const EventExpr& e) {
    Node node;
    node.kind = e.kind;
    switch (e.kind) {
      case EventExpr::Kind::partition:
        for (const auto& grp : e.groups) {
          std::vector<VertexId> ids;
          for (const auto& nm : grp) ids.push_back(graph_->vertex(nm));
          node.groups.push_back(std::move(ids));
        }
        break;
      case EventExpr::Kind::npaths:
        if (e.n < 1) throw InputError("npaths count must be at least 1");
        node.u = graph_->vertex(e.u);
        node.v = graph_->vertex(e.v);
        node.n = e.n;
        break;
      default:
        for (const auto& c : e.children) node.children.push_back(compile(c));
    }
    nodes_.push_back(std::move(node));
    return nodes_.size() - 1;
  }

  bool eval(std::size_t idx, const std::vector<VertexId>& labels, std::uint64_t open,
            MaxFlow& mf) const {
    const Node& nd = nodes_[idx];
    switch (nd.kind) {
      case EventExpr::Kind::partition: {
        for (std::size_t i = 0; i < nd.groups.size(); ++i) {
          VertexId l = labels[nd.groups[i][0]];
          for (VertexId v : nd.groups[i])
            if (labels[v] != l) return false;
          for (std::size_t j = 0; j < i; ++j)
            if (labels[nd.groups[j][0]] == l) return false;
        }
        return true;
      }
      case EventExpr::Kind::npaths:
        if (labels[nd.u] != labels[nd.v]) return false;
        return mf.edge_disjoint_paths(*graph_, open, nd.u, nd.v, nd.n) >= nd.n;
      case EventExpr::Kind::complement:
        return !eval(nd.children[0], labels, open, mf);
      case EventExpr::Kind::union_:
        for (std::size_t c : nd.children)
          if (eval(c, labels, open, mf)) return true;
        return false;
      case EventExpr::Kind::intersect:
        for (std::size_t c : nd.children)
          if (!eval(c, labels, open, mf)) return false;
        return true;
    }
    return false;
  }

  const Graph* graph_ = nullptr;
  EventExpr expr_;
  std::vector<Node> nodes_;
  std::size_t root_ = 0;
};

inline bool evaluate(const EventExpr& e, const Graph& g, const Configuration& c) {
  if (c.size() != g.num_edges()) throw InputError("configuration does not match the graph's edges");
  return CompiledEvent(g, e).evaluate(c.bits());
}

// Truth table of an event over all 2^m configurations (bit i of the index is edge i).
inline std::vector<std::uint8_t> event_table(const Graph& g, const EventExpr& e,
                                             std::size_t max_edges = 24) {
  const std::size_t m = g.num_edges();
  if (m > max_edges)
    throw SizeGuardError("truth table needs 2^" + std::to_string(m) + " configurations; limit is 2^" +
                         std::to_string(max_edges));
  CompiledEvent ce(g, e);
  std::vector<std::uint8_t> table(std::size_t{1} << m);
  ClusterScratch cs;
  MaxFlow mf;
  std::vector<VertexId> labels;
  for (std::uint64_t c = 0; c < table.size(); ++c) {
    cs.compute(g, c, labels);
    table[c] = ce.evaluate(labels, c, mf) ? 1 : 0;
  }
  return table;
}

inline bool table_is_increasing(const std::vector<std::uint8_t>& t, std::size_t m) {
  for (std::uint64_t c = 0; c < t.size(); ++c) {
    if (!t[c]) continue;
    for (std::size_t e = 0; e < m; ++e)
      if (!t[c | (std::uint64_t{1} << e)]) return false;
  }
  return true;
}

inline bool table_is_decreasing(const std::vector<std::uint8_t>& t, std::size_t m) {
  for (std::uint64_t c = 0; c < t.size(); ++c) {
    if (t[c]) continue;
    for (std::size_t e = 0; e < m; ++e)
      if (t[c | (std::uint64_t{1} << e)]) return false;
  }
  return true;
}

inline constexpr std::size_t kBruteForceMonotoneEdges = 16;

inline bool is_increasing(const EventExpr& e, const Graph& g) {
  if (monotonicity(e) == Monotonicity::increasing) return true;
  if (g.num_edges() > kBruteForceMonotoneEdges)
    throw SizeGuardError("brute-force monotonicity check limited to " +
                         std::to_string(kBruteForceMonotoneEdges) + " edges");
  return table_is_increasing(event_table(g, e), g.num_edges());
}

inline bool is_decreasing(const EventExpr& e, const Graph& g) {
  if (monotonicity(e) == Monotonicity::decreasing) return true;
  if (g.num_edges() > kBruteForceMonotoneEdges)
    throw SizeGuardError("brute-force monotonicity check limited to " +
                         std::to_string(kBruteForceMonotoneEdges) + " edges");
  return table_is_decreasing(event_table(g, e), g.num_edges());
}

// Syntactic rules first, brute force over the graph when they are inconclusive.
inline Monotonicity monotonicity_on(const EventExpr& e, const Graph& g) {
  Monotonicity m = monotonicity(e);
  if (m != Monotonicity::none || g.num_edges() > kBruteForceMonotoneEdges) return m;
  auto t = event_table(g, e);
  if (table_is_increasing(t, g.num_edges())) return Monotonicity::increasing;
  if (table_is_decreasing(t, g.num_edges())) return Monotonicity::decreasing;
  return Monotonicity::none;
}

inline void require_increasing(const EventExpr& e, const Graph& g) {
  if (!is_increasing(e, g))
    throw HypothesisError("event '" + print(e) + "' is not increasing");
}

// ---------------------------------------------------------------------------
// Disjoint occurrence by split enumeration over open edges.

inline constexpr int kMaxSplitEdges = 24;

template <class Visit>
inline bool any_submask(std::uint64_t mask, Visit&& visit) {
  std::uint64_t w = mask;
  while (true) {
    if (visit(w)) return true;
    if (w == 0) return false;
    w = (w - 1) & mask;
  }
}

// Is there a split of `pool` into W and pool \ W with A on W | a_base and B on
// (pool \ W) | b_base? Both events are increasing, so a branch fails as soon
// as either side fails with every undecided edge, and succeeds as soon as one
// side holds without them.
template <class FA, class FB>
inline bool split_search(std::uint64_t pool, std::uint64_t a_base, std::uint64_t b_base, FA&& fa, FB&& fb) {
  auto rec = [&](auto& self, std::uint64_t wa, std::uint64_t wb, std::uint64_t rest) -> bool {
    if (!fa(wa | rest | a_base) || !fb(wb | rest | b_base)) return false;
    if (fa(wa | a_base) || fb(wb | b_base)) return true;
    std::uint64_t e = rest & (~rest + 1);
    rest &= ~e;
    return self(self, wa | e, wb, rest) || self(self, wa, wb | e, rest);
  };
  return rec(rec, 0, 0, pool);
}

inline bool disjoint_occurrence(const EventExpr& a, const EventExpr& b, const Graph& g,
                                const Configuration& c) {
  require_increasing(a, g);
  require_increasing(b, g);
  const std::uint64_t open = c.bits();
  if (std::popcount(open) > kMaxSplitEdges)
    throw SizeGuardError("disjoint occurrence split over more than " +
                         std::to_string(kMaxSplitEdges) + " open edges");
  CompiledEvent ca(g, a), cb(g, b);
  if (!ca.evaluate(open) || !cb.evaluate(open)) return false;
  return split_search(
      open, 0, 0, [&](std::uint64_t x) { return ca.evaluate(x); }, [&](std::uint64_t x) { return cb.evaluate(x); });
}

inline bool sq_s_occurrence(const EventExpr& a, const EventExpr& b, const Graph& g,
                            const Configuration& c1, const Configuration& c2, std::uint64_t s) {
  require_increasing(a, g);
  require_increasing(b, g);
  const std::uint64_t full = Configuration::full_mask(g.num_edges());
  s &= full;
  const std::uint64_t in_s = s & c1.bits();
  const std::uint64_t a_base = ~s & full & c1.bits();
  const std::uint64_t b_base = ~s & full & c2.bits();
  if (std::popcount(in_s) > kMaxSplitEdges)
    throw SizeGuardError("split over more than " + std::to_string(kMaxSplitEdges) + " edges");
  CompiledEvent ca(g, a), cb(g, b);
  return split_search(
      in_s, a_base, b_base, [&](std::uint64_t x) { return ca.evaluate(x); },
      [&](std::uint64_t x) { return cb.evaluate(x); });
}

}  // namespace dtperc
