#pragma once

// Adaptive edge-revealing strategies that build a set S from a pair of
// configurations, the splice operation, and exhaustive tree exploration.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dtperc/error.hpp"
#include "dtperc/event.hpp"
#include "dtperc/graph.hpp"

namespace dtperc {

enum class Side { S, Sbar };

inline const char* to_string(Side s) { return s == Side::S ? "S" : "Sbar"; }

struct Step {
  EdgeId edge = 0;
  Side side = Side::Sbar;
  bool c1 = false;
  bool c2 = false;

  friend bool operator==(const Step&, const Step&) = default;
};

struct RunTrace {
  std::vector<Step> steps;
  std::uint64_t s_mask = 0;

  bool in_s(EdgeId e) const { return (s_mask >> e) & 1U; }
};

// What a policy sees. Every edge may be revealed at most once per run; C2
// states are available only for edges already revealed.
class Revealer {
 public:
  explicit Revealer(const Graph& g) : graph_(&g) {}
  virtual ~Revealer() = default;

  const Graph& graph() const { return *graph_; }

  bool queried(EdgeId e) const { return (queried_ >> e) & 1U; }

  bool reveal(EdgeId e, Side side) {
    if (e >= graph_->num_edges()) throw StrategyError("policy revealed unknown edge " + std::to_string(e));
    if (queried(e))
      throw StrategyError("policy re-queried edge '" + graph_->edge(e).id + "'");
    pending_side_ = side;
    bool open = c1_state(e);
    queried_ |= std::uint64_t{1} << e;
    if (side == Side::S) s_mask_ |= std::uint64_t{1} << e;
    steps_.push_back(Step{e, side, open, false});
    return open;
  }

  bool c2(EdgeId e) {
    if (e >= graph_->num_edges() || !queried(e))
      throw StrategyError("policy read C2 of an edge it has not revealed");
    return c2_state(e);
  }

  const std::vector<Step>& steps() const { return steps_; }
  std::uint64_t s_mask() const { return s_mask_; }
  std::uint64_t queried_mask() const { return queried_; }

 protected:
  virtual bool c1_state(EdgeId e) = 0;
  virtual bool c2_state(EdgeId e) = 0;

  std::vector<Step> steps_;
  // Side of the reveal whose C1 state is being looked up.
  Side pending_side_ = Side::Sbar;

 private:
  const Graph* graph_;
  std::uint64_t queried_ = 0;
  std::uint64_t s_mask_ = 0;
};

using Policy = std::function<void(Revealer&)>;

struct Strategy {
  std::string name;
  Policy policy;
};

namespace detail {

class PairRevealer final : public Revealer {
 public:
  PairRevealer(const Graph& g, std::uint64_t c1, std::uint64_t c2) : Revealer(g), c1_(c1), c2_(c2) {}

  RunTrace finish() {
    RunTrace t;
    t.steps = std::move(steps_);
    for (auto& s : t.steps) s.c2 = (c2_ >> s.edge) & 1U;
    t.s_mask = s_mask();
    return t;
  }

 protected:
  bool c1_state(EdgeId e) override { return (c1_ >> e) & 1U; }
  bool c2_state(EdgeId e) override { return (c2_ >> e) & 1U; }

 private:
  std::uint64_t c1_, c2_;
};

// Raised when a policy touches an edge state not fixed by the current branch.
struct Branch {
  EdgeId edge;
  int config;  // 1 or 2
};

class PartialRevealer final : public Revealer {
 public:
  PartialRevealer(const Graph& g, std::uint64_t k1, std::uint64_t v1, std::uint64_t k2, std::uint64_t v2)
      : Revealer(g), k1_(k1), v1_(v1), k2_(k2), v2_(v2) {}

 protected:
  bool c1_state(EdgeId e) override {
    if (!((k1_ >> e) & 1U)) throw Branch{e, 1};
    return (v1_ >> e) & 1U;
  }
  bool c2_state(EdgeId e) override {
    if (!((k2_ >> e) & 1U)) throw Branch{e, 2};
    return (v2_ >> e) & 1U;
  }

 private:
  std::uint64_t k1_, v1_, k2_, v2_;
};

}  // namespace detail

inline RunTrace run(const Strategy& t, const Graph& g, const Configuration& c1, const Configuration& c2) {
  if (c1.size() != g.num_edges() || c2.size() != g.num_edges())
    throw InputError("configuration does not match the graph's edges");
  detail::PairRevealer r(g, c1.bits(), c2.bits());
  t.policy(r);
  return r.finish();
}

inline std::uint64_t run_s(const Strategy& t, const Graph& g, std::uint64_t c1, std::uint64_t c2) {
  detail::PairRevealer r(g, c1, c2);
  t.policy(r);
  return r.s_mask();
}

inline Configuration splice(const Configuration& c1, const Configuration& c2, std::uint64_t s) {
  if (c1.size() != c2.size()) throw InputError("splice of configurations of different sizes");
  return Configuration(c1.size(), (c1.bits() & s) | (c2.bits() & ~s));
}

inline std::uint64_t splice_bits(std::uint64_t c1, std::uint64_t c2, std::uint64_t s) {
  return (c1 & s) | (c2 & ~s);
}

// ---------------------------------------------------------------------------
// Tree exploration

// One leaf of a strategy's tree: the states it fixed and what it did there.
struct TreeLeaf {
  std::uint64_t known1 = 0, value1 = 0;
  std::uint64_t known2 = 0, value2 = 0;
  std::vector<Step> steps;
  std::uint64_t s_mask = 0;
};

inline constexpr std::size_t kMaxTreeLeaves = std::size_t{1} << 22;

// Calls visit(leaf) for every leaf, branching on an edge state only when the
// policy asks for it. Returns the number of leaves.
template <class Visit>
std::size_t explore(const Strategy& t, const Graph& g, Visit&& visit) {
  std::size_t leaves = 0;
  std::function<void(std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t)> rec =
      [&](std::uint64_t k1, std::uint64_t v1, std::uint64_t k2, std::uint64_t v2) {
        detail::PartialRevealer r(g, k1, v1, k2, v2);
        try {
          t.policy(r);
        } catch (const detail::Branch& b) {
          std::uint64_t bit = std::uint64_t{1} << b.edge;
          if (b.config == 1) {
            rec(k1 | bit, v1, k2, v2);
            rec(k1 | bit, v1 | bit, k2, v2);
          } else {
            rec(k1, v1, k2 | bit, v2);
            rec(k1, v1, k2 | bit, v2 | bit);
          }
          return;
        }
        if (++leaves > kMaxTreeLeaves) throw SizeGuardError("decision tree has too many leaves to explore");
        TreeLeaf leaf{k1, v1, k2, v2, r.steps(), r.s_mask()};
        visit(leaf);
      };
  rec(0, 0, 0, 0);
  return leaves;
}

// S as a function of C1 alone, if the policy never reads C2.
inline std::optional<std::vector<std::uint64_t>> s_table(const Strategy& t, const Graph& g,
                                                         std::size_t max_edges = 24) {
  const std::size_t m = g.num_edges();
  if (m > max_edges) throw SizeGuardError("S table limited to " + std::to_string(max_edges) + " edges");
  std::vector<std::uint64_t> table(std::size_t{1} << m);
  const std::uint64_t full = Configuration::full_mask(m);
  bool reads_c2 = false;
  explore(t, g, [&](const TreeLeaf& leaf) {
    if (leaf.known2) reads_c2 = true;
    if (reads_c2) return;
    any_submask(full & ~leaf.known1, [&](std::uint64_t x) {
      table[leaf.value1 | x] = leaf.s_mask;
      return false;
    });
  });
  if (reads_c2) return std::nullopt;
  return table;
}

inline constexpr std::size_t kMaxContinuationEdges = 16;

// True iff on every pair the trace of t1 is a prefix of the trace of t2.
inline bool verify_continuation(const Strategy& t1, const Strategy& t2, const Graph& g) {
  if (g.num_edges() > kMaxContinuationEdges)
    throw SizeGuardError("continuation check limited to " + std::to_string(kMaxContinuationEdges) + " edges");
  bool ok = true;
  explore(t2, g, [&](const TreeLeaf& leaf) {
    if (!ok) return;
    detail::PartialRevealer r(g, leaf.known1, leaf.value1, leaf.known2, leaf.value2);
    try {
      t1.policy(r);
    } catch (const detail::Branch&) {
      ok = false;
      return;
    }
    const auto& s1 = r.steps();
    if (s1.size() > leaf.steps.size()) {
      ok = false;
      return;
    }
    for (std::size_t i = 0; i < s1.size(); ++i)
      if (s1[i].edge != leaf.steps[i].edge || s1[i].side != leaf.steps[i].side) ok = false;
  });
  return ok;
}

inline bool is_all_s(const Strategy& t, const Graph& g) {
  bool ok = true;
  explore(t, g, [&](const TreeLeaf& leaf) {
    for (const auto& s : leaf.steps)
      if (s.side != Side::S) ok = false;
  });
  return ok;
}

// True iff at every leaf the revealed C1 states fix the value of the event.
inline bool decides(const Strategy& t, const Graph& g, const std::vector<std::uint8_t>& table) {
  const std::uint64_t full = Configuration::full_mask(g.num_edges());
  bool ok = true;
  explore(t, g, [&](const TreeLeaf& leaf) {
    if (!ok) return;
    const std::uint8_t first = table[leaf.value1];
    if (any_submask(full & ~leaf.known1, [&](std::uint64_t x) { return table[leaf.value1 | x] != first; }))
      ok = false;
  });
  return ok;
}

inline bool decides(const Strategy& t, const Graph& g, const EventExpr& a) {
  if (g.num_edges() > kMaxContinuationEdges)
    throw SizeGuardError("decides check limited to " + std::to_string(kMaxContinuationEdges) + " edges");
  return decides(t, g, event_table(g, a));
}

// ---------------------------------------------------------------------------
// Strategy catalog

enum class DfsOrder { id, right_hand, left_hand };

struct DfsDecision {
  enum class Kind { always_s, always_sbar, until_visited, until_any, stop_at };
  Kind kind = Kind::always_s;
  std::vector<VertexId> targets;
};

namespace detail {

struct OuterDarts {
  // For each vertex on the outer face: the edges along which the outer-face
  // walk first enters and leaves it.
  std::vector<std::optional<EdgeId>> in, out;
};

inline OuterDarts outer_darts(const Graph& g) {
  OuterDarts od;
  od.in.assign(g.num_vertices(), std::nullopt);
  od.out.assign(g.num_vertices(), std::nullopt);
  FaceSet fs = faces(g);
  const auto& face = fs.outer();
  // Start the walk at the anchor so "first occurrence" is well defined.
  std::size_t start = 0;
  for (std::size_t i = 0; i < face.size(); ++i)
    if (face[i] == *g.outer_anchor()) start = i;
  for (std::size_t k = 0; k < face.size(); ++k) {
    const Dart& d = face[(start + k) % face.size()];
    VertexId to = g.edge(d.edge).other(d.from);
    if (!od.out[d.from]) od.out[d.from] = d.edge;
    if (!od.in[to]) {
      od.in[to] = d.edge;
    }
  }
  // Keep in/out consistent: the out edge is the rotation successor of the in edge.
  for (VertexId v = 0; v < g.num_vertices(); ++v)
    if (od.in[v]) od.out[v] = g.rotation_successor(*od.in[v], v);
  return od;
}

struct DfsRunner {
  VertexId start;
  DfsOrder order;
  DfsDecision decision;
  std::shared_ptr<const OuterDarts> outer;

  // Returns true if a target was visited.
  bool operator()(Revealer& r) const {
    const Graph& g = r.graph();
    std::vector<char> visited(g.num_vertices(), 0);
    bool reached = false;
    bool stop = false;
    auto is_target = [&](VertexId v) {
      return std::find(decision.targets.begin(), decision.targets.end(), v) != decision.targets.end();
    };
    auto side = [&]() {
      switch (decision.kind) {
        case DfsDecision::Kind::always_s:
          return Side::S;
        case DfsDecision::Kind::always_sbar:
          return Side::Sbar;
        default:
          return reached ? Side::Sbar : Side::S;
      }
    };
    std::vector<EdgeId> cand;
    std::function<void(VertexId, std::optional<EdgeId>)> visit = [&](VertexId v, std::optional<EdgeId> entry) {
      visited[v] = 1;
      if (is_target(v)) {
        reached = true;
        if (decision.kind == DfsDecision::Kind::stop_at) stop = true;
      }
      if (stop) return;
      std::vector<EdgeId> order_list = candidates(g, v, entry);
      for (EdgeId e : order_list) {
        if (stop) return;
        if (r.queried(e)) continue;
        bool open = r.reveal(e, side());
        if (!open) continue;
        VertexId u = g.edge(e).other(v);
        if (!visited[u]) visit(u, e);
      }
    };
    visit(start, std::nullopt);
    return reached;
  }

  std::vector<EdgeId> candidates(const Graph& g, VertexId v, std::optional<EdgeId> entry) const {
    auto inc = g.incident(v);
    if (order == DfsOrder::id || inc.empty()) return {inc.begin(), inc.end()};
    EdgeId ref;
    if (entry) {
      ref = *entry;
    } else if (order == DfsOrder::right_hand && outer->in[v]) {
      ref = *outer->in[v];
    } else if (order == DfsOrder::left_hand && outer->out[v]) {
      ref = *outer->out[v];
    } else {
      // Not on the outer face: begin from the first edge of the rotation.
      auto rot = g.rotation(v);
      ref = order == DfsOrder::right_hand ? g.rotation_predecessor(rot[0], v) : g.rotation_successor(rot[0], v);
    }
    std::vector<EdgeId> out;
    EdgeId e = ref;
    for (std::size_t i = 0; i < inc.size(); ++i) {
      e = order == DfsOrder::right_hand ? g.rotation_successor(e, v) : g.rotation_predecessor(e, v);
      out.push_back(e);
    }
    return out;
  }
};

inline std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == sep && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<std::string> split_plain(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline DfsOrder parse_order(const std::string& s) {
  if (s == "id") return DfsOrder::id;
  if (s == "right_hand") return DfsOrder::right_hand;
  if (s == "left_hand") return DfsOrder::left_hand;
  throw InputError("unknown DFS order '" + s + "' (expected id, right_hand or left_hand)");
}

inline std::vector<VertexId> parse_targets(const Graph& g, const std::string& s) {
  std::vector<VertexId> out;
  for (const auto& name : split_plain(s, '+')) {
    if (name.empty()) throw InputError("empty target vertex in '" + s + "'");
    out.push_back(g.vertex(name));
  }
  return out;
}

}  // namespace detail

inline Strategy make_dfs(const Graph& g, VertexId start, DfsOrder order, DfsDecision decision,
                         const std::string& name) {
  std::shared_ptr<const detail::OuterDarts> outer;
  if (order != DfsOrder::id) {
    if (!g.has_rotation()) throw HypothesisError("right/left-hand DFS needs a rotation system");
    if (!g.outer_anchor()) throw HypothesisError("right/left-hand DFS needs an outer face anchor");
    outer = std::make_shared<const detail::OuterDarts>(detail::outer_darts(g));
  }
  detail::DfsRunner runner{start, order, std::move(decision), outer};
  return Strategy{name, [runner](Revealer& r) { runner(r); }};
}

inline Strategy make_strategy(const std::string& spec, const Graph& g);

namespace detail {

inline Strategy make_strategy_impl(const std::string& spec, const Graph& g) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  std::string params = colon == std::string::npos ? "" : spec.substr(colon + 1);
  auto bad = [&](const std::string& why) { return InputError("strategy '" + spec + "': " + why); };

  if (kind == "none") {
    if (!params.empty()) throw bad("takes no parameters");
    return Strategy{spec, [](Revealer&) {}};
  }
  if (kind == "rest") {
    Side side;
    if (params == "S")
      side = Side::S;
    else if (params == "Sbar")
      side = Side::Sbar;
    else
      throw bad("expected rest:S or rest:Sbar");
    return Strategy{spec, [side](Revealer& r) {
                      for (EdgeId e = 0; e < r.graph().num_edges(); ++e)
                        if (!r.queried(e)) r.reveal(e, side);
                    }};
  }
  if (kind == "fixed") {
    std::vector<std::pair<EdgeId, Side>> items;
    for (const auto& item : split_plain(params, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos) throw bad("expected <edge>=S|Sbar");
      auto e = g.find_edge(item.substr(0, eq));
      if (!e) throw bad("unknown edge '" + item.substr(0, eq) + "'");
      std::string side = item.substr(eq + 1);
      if (side != "S" && side != "Sbar") throw bad("side must be S or Sbar");
      items.emplace_back(*e, side == "S" ? Side::S : Side::Sbar);
    }
    return Strategy{spec, [items](Revealer& r) {
                      for (auto [e, side] : items)
                        if (!r.queried(e)) r.reveal(e, side);
                    }};
  }
  if (kind == "bfs_cluster") {
    VertexId a = g.vertex(params);
    return Strategy{spec, [a](Revealer& r) {
                      const Graph& gr = r.graph();
                      std::vector<char> seen(gr.num_vertices(), 0);
                      std::vector<VertexId> queue{a};
                      seen[a] = 1;
                      for (std::size_t head = 0; head < queue.size(); ++head) {
                        VertexId v = queue[head];
                        for (EdgeId e : gr.incident(v)) {
                          if (r.queried(e)) continue;
                          if (!r.reveal(e, Side::S)) continue;
                          VertexId u = gr.edge(e).other(v);
                          if (!seen[u]) {
                            seen[u] = 1;
                            queue.push_back(u);
                          }
                        }
                      }
                    }};
  }
  if (kind == "dfs") {
    auto parts = split_plain(params, ',');
    if (parts.size() != 3) throw bad("expected dfs:<start>,<order>,<decision>");
    VertexId start = g.vertex(parts[0]);
    DfsOrder order = parse_order(parts[1]);
    DfsDecision dec;
    const std::string& d = parts[2];
    if (d == "S") {
      dec.kind = DfsDecision::Kind::always_s;
    } else if (d == "Sbar") {
      dec.kind = DfsDecision::Kind::always_sbar;
    } else if (d.rfind("until:", 0) == 0) {
      dec.kind = DfsDecision::Kind::until_visited;
      dec.targets = {g.vertex(d.substr(6))};
    } else if (d.rfind("until_any:", 0) == 0) {
      dec.kind = DfsDecision::Kind::until_any;
      dec.targets = parse_targets(g, d.substr(10));
    } else {
      throw bad("decision must be S, Sbar, until:<v> or until_any:<v>+<w>");
    }
    return make_dfs(g, start, order, dec, spec);
  }
  if (kind == "dfs_stop_at") {
    auto parts = split_plain(params, ',');
    if (parts.size() < 2 || parts.size() > 3) throw bad("expected dfs_stop_at:<start>,<v>+<w>[,<order>]");
    DfsDecision dec;
    dec.kind = DfsDecision::Kind::stop_at;
    dec.targets = parse_targets(g, parts[1]);
    DfsOrder order = parts.size() == 3 ? parse_order(parts[2]) : DfsOrder::id;
    return make_dfs(g, g.vertex(parts[0]), order, dec, spec);
  }
  if (kind == "seq") {
    if (params.size() < 2 || params.front() != '[' || params.back() != ']')
      throw bad("expected seq:[<spec>;<spec>;...]");
    std::vector<Strategy> parts;
    for (const auto& sub : split_top(params.substr(1, params.size() - 2), ';')) {
      if (sub.empty()) throw bad("empty component");
      parts.push_back(make_strategy(sub, g));
    }
    return Strategy{spec, [parts](Revealer& r) {
                      for (const auto& p : parts) p.policy(r);
                    }};
  }
  if (kind == "rhw_walks") {
    auto parts = split_plain(params, ',');
    if (parts.size() != 3) throw bad("expected rhw_walks:<a>,<b>,<k>");
    VertexId a = g.vertex(parts[0]);
    VertexId b = g.vertex(parts[1]);
    int k = 0;
    try {
      k = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw bad("walk count must be an integer");
    }
    if (k < 0) throw bad("walk count must be nonnegative");
    if (k == 0) return Strategy{spec, [](Revealer&) {}};
    if (!g.has_rotation() || !g.outer_anchor())
      throw HypothesisError("right-hand walks need a rotation system and outer face anchor");
    auto outer = std::make_shared<const OuterDarts>(outer_darts(g));
    DfsRunner walk{a, DfsOrder::right_hand, DfsDecision{DfsDecision::Kind::stop_at, {b}}, outer};
    return Strategy{spec, [walk, k](Revealer& r) {
                      for (int i = 0; i < k; ++i)
                        if (!walk(r)) return;
                    }};
  }
  throw bad("unknown strategy kind '" + kind + "'");
}

}  // namespace detail

inline Strategy make_strategy(const std::string& spec, const Graph& g) {
  try {
    return detail::make_strategy_impl(spec, g);
  } catch (const InputError& e) {
    std::string msg = e.what();
    if (msg.rfind("strategy '", 0) == 0) throw;
    throw InputError("strategy '" + spec + "': " + msg);
  }
}

// t followed by revealing every remaining edge into the given side.
inline Strategy then_rest(const Strategy& t, Side side) {
  Policy p = t.policy;
  std::string name = "seq:[" + t.name + ";rest:" + to_string(side) + "]";
  return Strategy{name, [p, side](Revealer& r) {
                    p(r);
                    for (EdgeId e = 0; e < r.graph().num_edges(); ++e)
                      if (!r.queried(e)) r.reveal(e, side);
                  }};
}

}  // namespace dtperc
