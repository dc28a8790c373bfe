#pragma once

// Generalized trees that generate each edge from one of two per-edge sample
// spaces, exact enumeration of the resulting law, and the coupling condition
// that orders the all-1, mixed and all-2 trees.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dtperc/decision_tree.hpp"
#include "dtperc/error.hpp"
#include "dtperc/event.hpp"
#include "dtperc/exact.hpp"
#include "dtperc/graph.hpp"

namespace dtperc {

struct DualSpace {
  std::string name;
  std::vector<std::string> symbols1;
  std::vector<double> mu1;
  std::vector<std::string> symbols2;
  std::vector<double> mu2;

  const std::vector<std::string>& symbols(int space) const { return space == 1 ? symbols1 : symbols2; }
  const std::vector<double>& mu(int space) const { return space == 1 ? mu1 : mu2; }

  double measure(int space, const std::string& symbol) const {
    const auto& s = symbols(space);
    auto it = std::find(s.begin(), s.end(), symbol);
    return it == s.end() ? 0.0 : mu(space)[static_cast<std::size_t>(it - s.begin())];
  }

  void validate() const {
    for (int sp : {1, 2}) {
      const auto& s = symbols(sp);
      const auto& m = mu(sp);
      if (s.empty() || s.size() != m.size())
        throw InputError("dual space '" + name + "': symbol and measure sizes differ");
      double total = 0;
      for (double x : m) {
        if (!(x >= 0)) throw InputError("dual space '" + name + "': negative mass");
        total += x;
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw InputError("dual space '" + name + "': measure " + std::to_string(sp) + " sums to " +
                         std::to_string(total));
      if (std::set<std::string>(s.begin(), s.end()).size() != s.size())
        throw InputError("dual space '" + name + "': repeated symbol");
    }
  }
};

namespace detail {

inline std::vector<std::string> triplets() {
  return {"000", "001", "010", "011", "100", "101", "110", "111"};
}

inline std::vector<double> uniform_on(const std::vector<std::string>& all, const std::vector<std::string>& support) {
  std::vector<double> out;
  for (const auto& s : all)
    out.push_back(std::find(support.begin(), support.end(), s) != support.end() ? 1.0 / support.size() : 0.0);
  return out;
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  return {"hk", "vdbk", "strongbk", "strongbk_literal", "colored", "richards"};
}

inline DualSpace build_preset(const std::string& name, std::optional<double> p = std::nullopt) {
  const bool needs_p = name == "hk" || name == "vdbk" || name == "strongbk" || name == "strongbk_literal";
  if (needs_p) {
    if (!p) throw InputError("preset '" + name + "' needs p");
    if (!(*p >= 0 && *p <= 1)) throw InputError("p outside [0,1]");
  }
  const double q = p ? 1 - *p : 0;
  const double pp = p.value_or(0);
  const std::vector<std::string> pairs{"00", "01", "10", "11"};
  const std::vector<double> product{q * q, q * pp, pp * q, pp * pp};
  DualSpace ds;
  ds.name = name;
  if (name == "hk") {
    ds.symbols1 = pairs;
    ds.mu1 = product;
    ds.symbols2 = {"00", "11"};
    ds.mu2 = {q, pp};
  } else if (name == "vdbk") {
    ds.symbols1 = {"0", "1"};
    ds.mu1 = {q, pp};
    ds.symbols2 = pairs;
    ds.mu2 = product;
  } else if (name == "strongbk") {
    // mu1({1,2}) = p and mu1({2}) = p^2, the values the coupling argument uses.
    ds.symbols1 = {"0", "1", "2"};
    ds.mu1 = {q, pp * q, pp * pp};
    ds.symbols2 = pairs;
    ds.mu2 = product;
  } else if (name == "strongbk_literal") {
    ds.symbols1 = {"0", "1", "2"};
    ds.mu1 = {q * q, 2 * pp * q, pp * pp};
    ds.symbols2 = pairs;
    ds.mu2 = product;
  } else if (name == "colored") {
    ds.symbols1 = {"000", "011", "101", "110"};
    ds.mu1 = {0.25, 0.25, 0.25, 0.25};
    ds.symbols2 = detail::triplets();
    ds.mu2.assign(8, 0.125);
  } else if (name == "richards") {
    auto all = detail::triplets();
    ds.symbols1 = all;
    ds.symbols2 = all;
    auto a = detail::uniform_on(all, {"000", "111"});
    auto u = detail::uniform_on(all, all);
    auto b1 = detail::uniform_on(all, {"000", "011", "100", "111"});
    auto b2 = detail::uniform_on(all, {"000", "010", "101", "111"});
    auto b3 = detail::uniform_on(all, {"000", "001", "110", "111"});
    for (std::size_t i = 0; i < all.size(); ++i) {
      ds.mu1.push_back(2.0 / 3 * a[i] + 1.0 / 3 * u[i]);
      ds.mu2.push_back((b1[i] + b2[i] + b3[i]) / 3);
    }
  } else {
    throw InputError("unknown preset '" + name + "'");
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// General configurations and strategies

struct GenStep {
  EdgeId edge = 0;
  int space = 1;
  std::string symbol;
};

using GenTrace = std::vector<GenStep>;

// Symbol per edge, indexed by edge id.
using GeneralConfig = std::vector<std::string>;

struct GenStrategy {
  std::string name;
  // Next (edge, space) given what has been generated, or nullopt to stop.
  std::function<std::optional<std::pair<EdgeId, int>>(const Graph&, const GenTrace&)> next;
};

namespace detail {

inline std::optional<EdgeId> first_unassigned(const Graph& g, const GenTrace& tr) {
  std::uint64_t used = 0;
  for (const auto& s : tr) used |= std::uint64_t{1} << s.edge;
  for (EdgeId e = 0; e < g.num_edges(); ++e)
    if (!((used >> e) & 1U)) return e;
  return std::nullopt;
}

inline std::uint64_t trace_hash(const GenTrace& tr, std::uint64_t salt) {
  std::uint64_t h = 0x6A09E667F3BCC909ULL ^ salt;
  for (const auto& s : tr) {
    h = (h ^ s.edge) * 0x100000001B3ULL;
    for (char c : s.symbol) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001B3ULL;
    h ^= h >> 29;
  }
  return h;
}

struct NextQuery {
  EdgeId edge;
  Side side;
};

class GenReplayRevealer final : public Revealer {
 public:
  GenReplayRevealer(const Graph& g, const GenTrace& tr) : Revealer(g), tr_(tr) {}

 protected:
  bool c1_state(EdgeId e) override {
    const GenStep* s = find(e);
    if (!s) throw NextQuery{e, pending_side_};
    return s->symbol.at(0) == '1' || s->symbol.at(0) == '2';
  }
  bool c2_state(EdgeId e) override {
    const GenStep* s = find(e);
    if (!s || s->symbol.size() < 2) throw StrategyError("pair strategy read C2 on an edge without a C2 state");
    return s->symbol[1] == '1';
  }

 private:
  const GenStep* find(EdgeId e) const {
    for (const auto& s : tr_)
      if (s.edge == e) return &s;
    return nullptr;
  }
  const GenTrace& tr_;
};

}  // namespace detail

inline GenStrategy gen_all(int space) {
  return GenStrategy{space == 1 ? "all1" : "all2",
                     [space](const Graph& g, const GenTrace& tr) -> std::optional<std::pair<EdgeId, int>> {
                       auto e = detail::first_unassigned(g, tr);
                       if (!e) return std::nullopt;
                       return std::make_pair(*e, space);
                     }};
}

// Fixed space per edge, e.g. "1212".
inline GenStrategy gen_mask(const std::string& digits) {
  for (char c : digits)
    if (c != '1' && c != '2') throw InputError("mask strategy digits must be 1 or 2");
  return GenStrategy{"mask:" + digits,
                     [digits](const Graph& g, const GenTrace& tr) -> std::optional<std::pair<EdgeId, int>> {
                       if (digits.size() != g.num_edges())
                         throw InputError("mask strategy needs one digit per edge");
                       auto e = detail::first_unassigned(g, tr);
                       if (!e) return std::nullopt;
                       return std::make_pair(*e, digits[*e] - '0');
                     }};
}

// Edge order and space both depend on the symbols generated so far.
inline GenStrategy gen_adaptive(std::uint64_t salt) {
  return GenStrategy{"adaptive:" + std::to_string(salt),
                     [salt](const Graph& g, const GenTrace& tr) -> std::optional<std::pair<EdgeId, int>> {
                       std::vector<EdgeId> left;
                       std::uint64_t used = 0;
                       for (const auto& s : tr) used |= std::uint64_t{1} << s.edge;
                       for (EdgeId e = 0; e < g.num_edges(); ++e)
                         if (!((used >> e) & 1U)) left.push_back(e);
                       if (left.empty()) return std::nullopt;
                       std::uint64_t h = detail::trace_hash(tr, salt);
                       EdgeId e = left[h % left.size()];
                       int space = 1 + static_cast<int>((h >> 32) & 1U);
                       return std::make_pair(e, space);
                     }};
}

// A pair strategy read as a generating tree: edges it sends to S are drawn
// from `space_for_s`, all other edges from the other space. The C1 state of
// an edge is the first digit of its symbol.
inline GenStrategy gen_from_pair(const Strategy& t, int space_for_s) {
  const int other = space_for_s == 1 ? 2 : 1;
  Policy policy = t.policy;
  return GenStrategy{"pair[" + t.name + "]",
                     [policy, space_for_s, other](const Graph& g,
                                                  const GenTrace& tr) -> std::optional<std::pair<EdgeId, int>> {
                       detail::GenReplayRevealer r(g, tr);
                       try {
                         policy(r);
                       } catch (const detail::NextQuery& q) {
                         return std::make_pair(q.edge, q.side == Side::S ? space_for_s : other);
                       }
                       auto e = detail::first_unassigned(g, tr);
                       if (!e) return std::nullopt;
                       return std::make_pair(*e, other);
                     }};
}

inline GenStrategy parse_gen_strategy(const std::string& spec) {
  if (spec == "all1") return gen_all(1);
  if (spec == "all2") return gen_all(2);
  if (spec.rfind("mask:", 0) == 0) return gen_mask(spec.substr(5));
  if (spec.rfind("adaptive:", 0) == 0) {
    try {
      return gen_adaptive(std::stoull(spec.substr(9)));
    } catch (const std::logic_error&) {
      throw InputError("adaptive strategy needs an integer salt");
    }
  }
  throw InputError("unknown general strategy '" + spec + "'");
}

inline constexpr double kMaxGenLeaves = 1e6;

// Visits every leaf of the generating tree with its probability.
template <class Visit>
void gen_enumerate(const Graph& g, const DualSpace& ds, const GenStrategy& t, Visit&& visit) {
  const double width = static_cast<double>(std::max(ds.symbols1.size(), ds.symbols2.size()));
  if (std::pow(width, static_cast<double>(g.num_edges())) > kMaxGenLeaves)
    throw SizeGuardError("general tree would exceed " + std::to_string(static_cast<long>(kMaxGenLeaves)) +
                         " leaves");
  GenTrace tr;
  GeneralConfig config(g.num_edges());
  std::uint64_t used = 0;
  std::function<void(double)> rec = [&](double weight) {
    auto nx = t.next(g, tr);
    if (!nx) {
      if (tr.size() != g.num_edges()) throw StrategyError("general strategy '" + t.name + "' skips an edge");
      visit(static_cast<const GeneralConfig&>(config), weight);
      return;
    }
    auto [e, space] = *nx;
    if (e >= g.num_edges()) throw StrategyError("general strategy chose an unknown edge");
    if ((used >> e) & 1U) throw StrategyError("general strategy chose edge '" + g.edge(e).id + "' twice");
    if (space != 1 && space != 2) throw StrategyError("general strategy chose a space other than 1 or 2");
    const auto& syms = ds.symbols(space);
    const auto& mu = ds.mu(space);
    used |= std::uint64_t{1} << e;
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (mu[i] == 0.0) continue;
      tr.push_back(GenStep{e, space, syms[i]});
      config[e] = syms[i];
      rec(weight * mu[i]);
      tr.pop_back();
    }
    config[e].clear();
    used &= ~(std::uint64_t{1} << e);
  };
  rec(1.0);
}

using GenPredicate = std::function<bool(const GeneralConfig&)>;

struct GenDistribution {
  double total_weight = 0;
  std::size_t leaves = 0;
};

inline double gen_probability(const Graph& g, const DualSpace& ds, const GenStrategy& t, const GenPredicate& pred,
                              GenDistribution* info = nullptr) {
  CompensatedSum yes, all;
  std::size_t leaves = 0;
  gen_enumerate(g, ds, t, [&](const GeneralConfig& c, double w) {
    ++leaves;
    all.add(w);
    if (pred(c)) yes.add(w);
  });
  if (info) {
    info->total_weight = all.value();
    info->leaves = leaves;
  }
  return yes.value();
}

// ---------------------------------------------------------------------------
// Event predicates

// Union over pairs (A_i, B_i) of the bowtie event. Which witness may use an
// edge depends on its symbol: 1 goes to either one (not both), 2 and 11 to
// both, 10 to the first, 01 to the second, 0 and 00 to neither.
inline GenPredicate bowtie_predicate(const Graph& g, const std::vector<std::pair<EventExpr, EventExpr>>& pairs) {
  struct Tables {
    std::vector<std::pair<Table, Table>> t;
  };
  auto tables = std::make_shared<Tables>();
  for (const auto& [a, b] : pairs) {
    require_increasing(a, g);
    require_increasing(b, g);
    tables->t.emplace_back(event_table(g, a), event_table(g, b));
  }
  return [tables](const GeneralConfig& c) {
    std::uint64_t w1 = 0, w2 = 0, either = 0;
    for (std::size_t e = 0; e < c.size(); ++e) {
      const std::string& s = c[e];
      const std::uint64_t bit = std::uint64_t{1} << e;
      if (s == "1")
        either |= bit;
      else if (s == "2" || s == "11")
        w1 |= bit, w2 |= bit;
      else if (s == "10")
        w1 |= bit;
      else if (s == "01")
        w2 |= bit;
      else if (s != "0" && s != "00")
        throw InputError("symbol '" + s + "' has no meaning for the bowtie event");
    }
    for (const auto& [ta, tb] : tables->t) {
      if (!ta[w1 | either] || !tb[w2 | either]) continue;
      auto fa = [&](std::uint64_t x) { return ta[x] != 0; };
      auto fb = [&](std::uint64_t x) { return tb[x] != 0; };
      if (split_search(either, w1, w2, fa, fb)) return true;
    }
    return false;
  };
}

// Coordinate j of every symbol forms a configuration that must lie in events[j].
inline GenPredicate product_predicate(const Graph& g, const std::vector<EventExpr>& events) {
  auto tables = std::make_shared<std::vector<Table>>();
  for (const auto& e : events) tables->push_back(event_table(g, e));
  return [tables](const GeneralConfig& c) {
    for (std::size_t j = 0; j < tables->size(); ++j) {
      std::uint64_t bits = 0;
      for (std::size_t e = 0; e < c.size(); ++e) {
        if (c[e].size() <= j) throw InputError("symbol '" + c[e] + "' has too few coordinates");
        if (c[e][j] == '1') bits |= std::uint64_t{1} << e;
      }
      if (!(*tables)[j][bits]) return false;
    }
    return true;
  };
}

// ---------------------------------------------------------------------------
// Coupling condition

enum class ZipperDirection { forward, reversed };

struct ZipperConditionReport {
  bool holds = true;
  double worst_slack = 0;
  std::size_t evaluations = 0;
  // Distinct (mu1(X1), mu2(X2)) values met, rounded to 1e-12.
  std::set<std::pair<double, double>> cases;
  std::string worst_edge;
  GeneralConfig worst_config;
};

inline double round12(double x) { return std::round(x * 1e12) / 1e12; }

// For every edge e and every assignment of the other edges from the union of
// both symbol sets, compares mu1(X1) with mu2(X2).
inline ZipperConditionReport check_zipper_condition(const DualSpace& ds, const GenPredicate& pred, const Graph& g,
                                                     ZipperDirection dir = ZipperDirection::forward,
                                                     double tolerance = kDefaultTolerance) {
  std::vector<std::string> all = ds.symbols1;
  for (const auto& s : ds.symbols2)
    if (std::find(all.begin(), all.end(), s) == all.end()) all.push_back(s);
  const std::size_t m = g.num_edges();
  if (std::pow(static_cast<double>(all.size()), static_cast<double>(m)) > kMaxGenLeaves)
    throw SizeGuardError("coupling condition check would exceed " +
                         std::to_string(static_cast<long>(kMaxGenLeaves)) + " evaluations");
  ZipperConditionReport rep;
  bool first = true;
  GeneralConfig c(m, all.front());
  for (EdgeId e = 0; e < m; ++e) {
    std::vector<std::size_t> idx(m, 0);
    while (true) {
      for (std::size_t k = 0; k < m; ++k) c[k] = all[idx[k]];
      double x1 = 0, x2 = 0;
      for (int sp : {1, 2}) {
        const auto& syms = ds.symbols(sp);
        const auto& mu = ds.mu(sp);
        for (std::size_t i = 0; i < syms.size(); ++i) {
          c[e] = syms[i];
          ++rep.evaluations;
          if (pred(c)) (sp == 1 ? x1 : x2) += mu[i];
        }
      }
      double slack = dir == ZipperDirection::forward ? x2 - x1 : x1 - x2;
      rep.cases.emplace(round12(x1), round12(x2));
      if (first || slack < rep.worst_slack) {
        first = false;
        rep.worst_slack = slack;
        rep.worst_edge = g.edge(e).id;
        rep.worst_config = c;
        rep.worst_config[e] = "*";
      }
      // Odometer over the other edges.
      std::size_t k = 0;
      for (; k < m; ++k) {
        if (k == e) continue;
        if (++idx[k] < all.size()) break;
        idx[k] = 0;
      }
      if (k == m) break;
    }
  }
  rep.holds = rep.worst_slack >= -tolerance;
  return rep;
}

struct GenInequalityReport {
  double p_all1 = 0, p_mixed = 0, p_all2 = 0;
  double slack_low = 0;   // mixed vs all-1
  double slack_high = 0;  // all-2 vs mixed
  bool holds = true;
};

inline GenInequalityReport check_gen_inequality(const Graph& g, const DualSpace& ds, const GenStrategy& t,
                                                const GenPredicate& pred,
                                                ZipperDirection dir = ZipperDirection::forward,
                                                double tolerance = kDefaultTolerance) {
  GenInequalityReport r;
  r.p_all1 = gen_probability(g, ds, gen_all(1), pred);
  r.p_mixed = gen_probability(g, ds, t, pred);
  r.p_all2 = gen_probability(g, ds, gen_all(2), pred);
  if (dir == ZipperDirection::forward) {
    r.slack_low = r.p_mixed - r.p_all1;
    r.slack_high = r.p_all2 - r.p_mixed;
  } else {
    r.slack_low = r.p_all1 - r.p_mixed;
    r.slack_high = r.p_mixed - r.p_all2;
  }
  r.holds = r.slack_low >= -tolerance && r.slack_high >= -tolerance;
  return r;
}

// Largest pairwise gap among the three probabilities of a two-factor event.
inline double gp1_gap(const Graph& g, const DualSpace& ds, const GenStrategy& t, const GenPredicate& pred) {
  double a = gen_probability(g, ds, gen_all(1), pred);
  double b = gen_probability(g, ds, t, pred);
  double c = gen_probability(g, ds, gen_all(2), pred);
  return std::max({std::abs(a - b), std::abs(b - c), std::abs(a - c)});
}

inline ZipperDirection preset_direction(const std::string& preset) {
  return preset == "richards" ? ZipperDirection::reversed : ZipperDirection::forward;
}

}  // namespace dtperc
