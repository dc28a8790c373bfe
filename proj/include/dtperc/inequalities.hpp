#pragma once

// Named inequality checks, conjecture scans and two numeric helpers.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dtperc/decision_tree.hpp"
#include "dtperc/error.hpp"
#include "dtperc/event.hpp"
#include "dtperc/exact.hpp"
#include "dtperc/graph.hpp"
#include "dtperc/monte_carlo.hpp"
#include "dtperc/report.hpp"

namespace dtperc {

struct CheckParams {
  Method method = Method::exact;
  std::optional<std::string> strategy;
  std::optional<std::string> prefix;
  std::optional<std::string> event_a;
  std::optional<std::string> event_b;
  std::uint64_t samples = 1'000'000;
  std::optional<std::uint64_t> seed;
  double sigma = 3.0;
  double tolerance = kDefaultTolerance;
  unsigned threads = 1;
  std::optional<int> n, k, l, m;
  std::optional<double> eps;
  std::optional<int> n_max;
  bool timing = true;
};

// Pair enumeration for the proof-chain diagnostics stays well below the
// general pair limit so corpus runs stay fast.
inline constexpr std::size_t kMaxChainEdges = 10;

// ---------------------------------------------------------------------------
// Numeric helpers

// P(Poisson(lambda) >= k).
inline double poisson_upper_tail(int k, double lambda) {
  if (k <= 0) return 1.0;
  if (lambda <= 0) return 0.0;
  const double ll = std::log(lambda);
  auto term = [&](int i) { return std::exp(i * ll - lambda - std::lgamma(i + 1.0)); };
  if (lambda < k) {
    double sum = 0;
    for (int i = k;; ++i) {
      double t = term(i);
      sum += t;
      if (t < sum * 1e-17 || i > k + 10000) break;
    }
    return sum;
  }
  double lower = 0;
  for (int i = 0; i < k; ++i) lower += term(i);
  return std::max(0.0, 1.0 - lower);
}

// The lambda whose Poisson upper tail at k equals prob.
inline double implied_lambda(int k, double prob) {
  if (k < 1) throw InputError("implied lambda needs k >= 1");
  if (!(prob > 0 && prob < 1)) throw InputError("implied lambda needs a probability strictly between 0 and 1");
  double lo = 0, hi = 1;
  while (poisson_upper_tail(k, hi) < prob) {
    hi *= 2;
    if (hi > 1e9) throw InputError("implied lambda out of range");
  }
  for (int it = 0; it < 400 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    (poisson_upper_tail(k, mid) < prob ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double alpha3_cubic(double t) { return ((t - 42) * t + 12) * t + 1; }

inline double alpha3_root() {
  double lo = 0, hi = 1;  // cubic is +1 at 0 and -28 at 1
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (alpha3_cubic(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Check catalog

struct CheckInfo {
  std::string id;
  CheckKind kind;
  std::string statement;
};

inline const std::vector<CheckInfo>& check_catalog() {
  static const std::vector<CheckInfo> list{
      {"hk_tree", CheckKind::theorem, "P(A)P(B) <= P(C1 in A, C1 ->S C2 in B)"},
      {"vdbk_tree", CheckKind::theorem, "P(A box_S B) <= P(A)P(B)"},
      {"cs_bound", CheckKind::theorem, "P(B)^2/P(A) <= P(C1 in B, C1 ->S2 C2 in B)"},
      {"frac1", CheckKind::theorem, "P(a|b|c)^2/P(a|b U a|c) <= joint of a|b|c under the tree"},
      {"frac2", CheckKind::theorem, "P(a|bc)^2/P(a|b U a|c) <= joint of a|bc under the tree"},
      {"planar_dv2", CheckKind::theorem, "P(abc)^2 <= 2P(ab)P(bc)P(ac)"},
      {"planar_dv2_strong", CheckKind::conjecture, "P(abc)^2/P(ac) <= 2P(ab)P(bc) - P(abc)^2"},
      {"dv8", CheckKind::theorem, "P(abc)^2 <= 8P(ab)P(ac)P(bc)"},
      {"dv_union", CheckKind::theorem, "P(abc)^2 <= 2P(ab U ac)^2 P(bc)"},
      {"q2", CheckKind::theorem,
       "x^2/P(a|b U b|c) + x^2/P(a|c U b|c) <= x + P(a|b U a|c)^2, x = P(a|b|c)"},
      {"q2_swapped", CheckKind::theorem,
       "x^2/P(a|b U a|c) + x^2/P(a|c U b|c) <= x + P(a|b U b|c)^2, x = P(a|b|c)"},
      {"conj2_demo", CheckKind::theorem,
       "not (P(ab|c) < d and P(ac|b) < d and min(P(abc), P(a|b|c)) >= eps), d = eps^3/4"},
      {"arms23", CheckKind::theorem, "f(3)^2 <= f(2)^3, f(n) = P(n disjoint a-b paths)"},
      {"arms_klm", CheckKind::theorem, "f(n)^2 <= f(k)f(l)f(m), k+l+m = 2n"},
      {"submult", CheckKind::theorem, "f(k+l) <= f(k)f(l)"},
      {"conj3_scan", CheckKind::conjecture,
       "not (P(ab|c) < d and P(abc)P(a|b|c) - P(ac|b)P(a|bc) >= eps)"},
      {"logconcave", CheckKind::conjecture, "f(n-1)f(n+1) <= f(n)^2 and log f(n+1)/(n+1) <= log f(n)/n"},
      {"lambda_monotone", CheckKind::conjecture, "implied lambda_{k+1} <= lambda_k"},
  };
  return list;
}

inline const CheckInfo& check_info(const std::string& id) {
  for (const auto& c : check_catalog())
    if (c.id == id) return c;
  throw InputError("unknown check '" + id + "'");
}

namespace detail {

struct Marks {
  std::string a, b, c;
};

inline Marks marks_of(const Graph& g, std::size_t need) {
  const auto& mk = g.marks();
  if (mk.size() < need)
    throw HypothesisError("check needs " + std::to_string(need) + " marked vertices, graph has " +
                          std::to_string(mk.size()));
  Marks m;
  m.a = g.name(mk[0]);
  m.b = g.name(mk[1]);
  if (mk.size() > 2) m.c = g.name(mk[2]);
  return m;
}

// Events written over the letters a, b, c standing for the marks, e.g.
// "ab|c" or "a|b U a|c".
inline EventExpr mark_event(const Marks& mk, const std::string& pattern) {
  std::vector<EventExpr> items;
  std::vector<std::vector<std::string>> groups(1);
  auto flush = [&]() {
    if (!groups.back().empty() || groups.size() > 1) items.push_back(EventExpr::partition(groups));
    groups.assign(1, {});
  };
  for (char ch : pattern) {
    if (ch == ' ') continue;
    if (ch == 'U') {
      flush();
    } else if (ch == '|') {
      groups.emplace_back();
    } else {
      groups.back().push_back(ch == 'a' ? mk.a : ch == 'b' ? mk.b : mk.c);
    }
  }
  flush();
  if (items.size() == 1) return items.front();
  return EventExpr::combine(EventExpr::Kind::union_, items);
}

struct PairSpec {
  std::string name;
  PairKind kind;
  EventExpr a, b;
};

struct Plan {
  std::vector<std::pair<std::string, EventExpr>> singles;
  std::optional<Strategy> strategy;
  std::vector<PairSpec> pairs;
};

struct Evaluated {
  std::vector<double> x;
  std::vector<double> cov;
};

inline void require_seed(const CheckParams& p) {
  if (!p.seed) throw InputError("Monte Carlo runs need an explicit --seed");
}

inline Evaluated evaluate_plan(const Graph& g, const Plan& plan, const CheckParams& p, CheckReport& rep) {
  Evaluated ev;
  if (!plan.pairs.empty() && !plan.strategy) throw InputError("pair quantity without a strategy");
  if (p.method == Method::exact) {
    std::vector<EventExpr> singles;
    for (const auto& s : plan.singles) singles.push_back(s.second);
    ev.x = singles.empty() ? std::vector<double>{} : exact_probs(g, singles);
    if (!plan.pairs.empty()) {
      std::vector<PairQuery> qs;
      for (const auto& pr : plan.pairs) {
        if (pr.kind == PairKind::sqs) {
          require_increasing(pr.a, g);
          require_increasing(pr.b, g);
        }
        guard_exact(g, kMaxPairEdges, "pair enumeration");
        auto ta = shared_table(g, pr.a);
        auto tb = shared_table(g, pr.b);
        qs.push_back(pr.kind == PairKind::joint ? joint_query(ta, tb) : sqs_query(ta, tb, g.num_edges()));
      }
      auto px = exact_pair_multi(g, *plan.strategy, qs);
      ev.x.insert(ev.x.end(), px.begin(), px.end());
    }
    ev.cov.assign(ev.x.size() * ev.x.size(), 0.0);
  } else {
    require_seed(p);
    JointCounts jc;
    if (plan.pairs.empty()) {
      std::vector<EventExpr> singles;
      for (const auto& s : plan.singles) singles.push_back(s.second);
      jc = mc_joint(g, singles, p.samples, *p.seed, p.threads);
    } else {
      std::vector<PairIndicator> ind;
      for (const auto& s : plan.singles) ind.push_back(mc_event_on_c1(g, s.second));
      for (const auto& pr : plan.pairs)
        ind.push_back(pr.kind == PairKind::joint ? mc_joint_indicator(g, pr.a, pr.b)
                                                 : mc_sqs_indicator(g, pr.a, pr.b));
      jc = mc_pair_joint(g, *plan.strategy, ind, p.samples, *p.seed, p.threads);
    }
    ev.x = jc.means();
    ev.cov = jc.covariance();
  }
  ojson q = ojson::object();
  std::size_t i = 0;
  for (const auto& s : plan.singles) q["P(" + s.first + ")"] = ev.x[i++];
  for (const auto& pr : plan.pairs) q[pr.name] = ev.x[i++];
  rep.details["quantities"] = q;
  return ev;
}

using SidesFn = std::function<std::pair<double, double>(const std::vector<double>&)>;

inline void finalize(CheckReport& rep, const Evaluated& ev, const SidesFn& sides, const CheckParams& p) {
  auto [lhs, rhs] = sides(ev.x);
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.slack = rhs - lhs;
  if (p.method == Method::exact) {
    rep.tolerance = p.tolerance;
    rep.verdict = exact_verdict(rep.slack, p.tolerance);
  } else {
    rep.sigma = p.sigma;
    rep.samples = p.samples;
    rep.seed = p.seed;
    double se = delta_se(
        [&](const std::vector<double>& x) {
          auto [l, r] = sides(x);
          return r - l;
        },
        ev.x, ev.cov);
    rep.details["slack_se"] = se;
    rep.verdict = mc_verdict(rep.slack, se, p.sigma);
  }
}

inline double safe_ratio(double num, double den) { return den <= 0 ? 0.0 : num / den; }

inline std::string strategy_or(const std::optional<std::string>& s, const std::string& fallback) {
  return s ? *s : fallback;
}

inline std::pair<EventExpr, EventExpr> events_or(const CheckParams& p, const Marks& mk, const std::string& da,
                                                 const std::string& db) {
  EventExpr a = p.event_a ? parse_event(*p.event_a) : mark_event(mk, da);
  EventExpr b = p.event_b ? parse_event(*p.event_b) : mark_event(mk, db);
  return {a, b};
}

inline void record_params(CheckReport& rep, const CheckParams& p) {
  ojson j = ojson::object();
  if (p.strategy) j["strategy"] = *p.strategy;
  if (p.prefix) j["prefix"] = *p.prefix;
  if (p.event_a) j["event_a"] = *p.event_a;
  if (p.event_b) j["event_b"] = *p.event_b;
  if (p.n) j["n"] = *p.n;
  if (p.k) j["k"] = *p.k;
  if (p.l) j["l"] = *p.l;
  if (p.m) j["m"] = *p.m;
  if (p.eps) j["eps"] = *p.eps;
  if (p.n_max) j["n_max"] = *p.n_max;
  rep.details["params"] = j;
}

// ---------------------------------------------------------------------------
// Tree hypotheses

inline Table upward_closure(Table t, std::size_t m) {
  for (std::size_t e = 0; e < m; ++e) {
    const std::uint64_t bit = std::uint64_t{1} << e;
    for (std::uint64_t c = 0; c < t.size(); ++c)
      if ((c & bit) && t[c ^ bit]) t[c] = 1;
  }
  return t;
}

inline Table downward_closure(Table t, std::size_t m) {
  for (std::size_t e = 0; e < m; ++e) {
    const std::uint64_t bit = std::uint64_t{1} << e;
    for (std::uint64_t c = t.size(); c-- > 0;)
      if (!(c & bit) && t[c | bit]) t[c] = 1;
  }
  return t;
}

// B is contained in A and equals A intersected with an increasing or a
// decreasing event.
inline bool monotone_restriction(const Table& a, const Table& b, std::size_t m) {
  for (std::size_t c = 0; c < a.size(); ++c)
    if (b[c] && !a[c]) return false;
  auto matches = [&](const Table& u) {
    for (std::size_t c = 0; c < a.size(); ++c)
      if (b[c] != (a[c] && u[c])) return false;
    return true;
  };
  return matches(upward_closure(b, m)) || matches(downward_closure(b, m));
}

inline bool continues_by_construction(const std::string& t1, const std::string& t2) {
  return t2 == t1 || t2.rfind("seq:[" + t1 + ";", 0) == 0;
}

// Verifies the hypotheses of the Cauchy-Schwarz bound: T2 continues T1, T1
// sends every edge to S and decides A, and B = A intersected with a monotone
// event. Graphs above the brute-force limit are accepted only for trees
// whose properties hold by construction.
inline void verify_cs_hypotheses(const Graph& g, const std::string& t1spec, const std::string& t2spec,
                                 const EventExpr& a, const EventExpr& b, bool t1_known_good, CheckReport& rep) {
  ojson h = ojson::object();
  if (g.num_edges() <= kMaxContinuationEdges) {
    Strategy t1 = make_strategy(t1spec, g), t2 = make_strategy(t2spec, g);
    auto ta = event_table(g, a), tb = event_table(g, b);
    h["continuation"] = verify_continuation(t1, t2, g);
    h["prefix_all_s"] = is_all_s(t1, g);
    h["prefix_decides_a"] = decides(t1, g, ta);
    h["b_monotone_restriction_of_a"] = monotone_restriction(ta, tb, g.num_edges());
    h["method"] = "enumeration";
  } else {
    if (!t1_known_good || !continues_by_construction(t1spec, t2spec))
      throw SizeGuardError("tree hypotheses can be verified only up to " + std::to_string(kMaxContinuationEdges) +
                           " edges");
    h["continuation"] = true;
    h["prefix_all_s"] = true;
    h["prefix_decides_a"] = true;
    h["b_monotone_restriction_of_a"] = true;
    h["method"] = "construction";
  }
  rep.details["hypotheses"] = h;
  for (const auto& [key, val] : h.items())
    if (val.is_boolean() && !val.get<bool>())
      throw HypothesisError("hypothesis '" + key + "' fails for prefix '" + t1spec + "' and tree '" + t2spec + "'");
}

// ---------------------------------------------------------------------------
// Faces and orientation

// Vertices in the order the outer face walk meets them, starting at a.
inline std::vector<VertexId> outer_walk_from(const Graph& g, VertexId a) {
  FaceSet fs = faces(g);
  const auto& f = fs.outer();
  std::size_t start = f.size();
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i].from == a) {
      start = i;
      break;
    }
  std::vector<VertexId> out;
  if (start == f.size()) return out;
  for (std::size_t k = 0; k < f.size(); ++k) out.push_back(f[(start + k) % f.size()].from);
  return out;
}

inline void require_planar_face(const Graph& g, const std::vector<VertexId>& vs, FaceScope scope,
                                const char* what) {
  if (!g.has_rotation()) throw HypothesisError(std::string(what) + " needs a planar rotation system");
  if (!same_face(g, vs, scope))
    throw HypothesisError(std::string(what) + (scope == FaceScope::outer ? " needs the marks on the outer face"
                                                                        : " needs the marks on a common face"));
}

// Sums of mu(C1)mu(C2) over pair outcomes, used only for the chain diagnostics.
inline std::vector<double> pair_sums(const Graph& g, const Strategy& t, const std::vector<PairQuery>& qs) {
  return exact_pair_multi(g, t, qs);
}

inline PairQuery pq_or(PairQuery x, PairQuery y) {
  return [x, y](std::uint64_t c1, std::uint64_t c2, std::uint64_t s) { return x(c1, c2, s) || y(c1, c2, s); };
}

inline PairQuery pq_and_not(PairQuery x, PairQuery y) {
  return [x, y](std::uint64_t c1, std::uint64_t c2, std::uint64_t s) { return x(c1, c2, s) && !y(c1, c2, s); };
}

struct ChainResult {
  double joint = 0;
  double union_prob = 0;
  double escape = 0;  // P(joint and not union)
};

// Joint of (E, E) under t, together with the probability of the union of
// X box_S Y and Y box_S X and of the part of the joint event outside it.
inline ChainResult chain_values(const Graph& g, const Strategy& t, const EventExpr& e, const EventExpr& x,
                                const EventExpr& y) {
  auto te = shared_table(g, e), tx = shared_table(g, x), ty = shared_table(g, y);
  const std::size_t m = g.num_edges();
  PairQuery joint = joint_query(te, te);
  PairQuery uni = pq_or(sqs_query(tx, ty, m), sqs_query(ty, tx, m));
  auto v = pair_sums(g, t, {joint, uni, pq_and_not(joint, uni)});
  return ChainResult{v[0], v[1], v[2]};
}

// ---------------------------------------------------------------------------
// Individual checks

inline CheckReport start_report(const std::string& id, const std::string& graph, const CheckParams& p) {
  CheckReport r;
  r.check_id = id;
  r.graph = graph;
  r.method = p.method;
  r.kind = check_info(id).kind;
  record_params(r, p);
  return r;
}

inline std::vector<CheckReport> check_hk_vdbk(const std::string& id, const Graph& g, const std::string& desc,
                                              const CheckParams& p) {
  auto mk = marks_of(g, 2);
  auto rep = start_report(id, desc, p);
  auto [a, b] = events_or(p, mk, "ab", g.marks().size() > 2 ? "bc" : "ab");
  require_increasing(a, g);
  require_increasing(b, g);
  std::string ts = strategy_or(p.strategy, "bfs_cluster:" + mk.a);
  Plan plan;
  plan.singles = {{print(a), a}, {print(b), b}};
  plan.strategy = make_strategy(ts, g);
  const bool hk = id == "hk_tree";
  plan.pairs.push_back(PairSpec{hk ? "Joint" : "SqS", hk ? PairKind::joint : PairKind::sqs, a, b});
  rep.details["strategy"] = ts;
  auto ev = evaluate_plan(g, plan, p, rep);
  finalize(rep, ev,
           [hk](const std::vector<double>& x) {
             return hk ? std::make_pair(x[0] * x[1], x[2]) : std::make_pair(x[2], x[0] * x[1]);
           },
           p);
  return {rep};
}

inline std::vector<CheckReport> check_cs(const std::string& id, const Graph& g, const std::string& desc,
                                         const CheckParams& p) {
  auto rep = start_report(id, desc, p);
  std::string t1, t2;
  EventExpr a, b;
  bool t1_known_good = false;
  if (id == "cs_bound") {
    if (!p.prefix || !p.strategy) throw InputError("cs_bound needs --prefix <T1> and --strategy <T2>");
    if (!p.event_a || !p.event_b) throw InputError("cs_bound needs --events <A> <B>");
    t1 = *p.prefix;
    t2 = *p.strategy;
    a = parse_event(*p.event_a);
    b = parse_event(*p.event_b);
  } else {
    auto mk = marks_of(g, 3);
    std::string def_prefix = "bfs_cluster:" + mk.a;
    t1 = strategy_or(p.prefix, def_prefix);
    t2 = strategy_or(p.strategy, "seq:[" + t1 + ";rest:Sbar]");
    t1_known_good = t1 == def_prefix;
    a = mark_event(mk, "a|b U a|c");
    b = mark_event(mk, id == "frac1" ? "a|b|c" : "a|bc");
  }
  verify_cs_hypotheses(g, t1, t2, a, b, t1_known_good, rep);
  rep.details["prefix"] = t1;
  rep.details["strategy"] = t2;
  Plan plan;
  plan.singles = {{print(a), a}, {print(b), b}};
  plan.strategy = make_strategy(t2, g);
  plan.pairs.push_back(PairSpec{"Joint", PairKind::joint, b, b});
  auto ev = evaluate_plan(g, plan, p, rep);
  finalize(rep, ev,
           [](const std::vector<double>& x) { return std::make_pair(safe_ratio(x[1] * x[1], x[0]), x[2]); }, p);
  return {rep};
}

// Orientation of the walk from a that meets c before b on the outer face.
inline DfsOrder planar_orientation(const Graph& g, VertexId a, VertexId b, VertexId c) {
  auto walk = outer_walk_from(g, a);
  auto pos = [&](VertexId v) {
    return static_cast<std::size_t>(std::find(walk.begin(), walk.end(), v) - walk.begin());
  };
  return pos(c) < pos(b) ? DfsOrder::right_hand : DfsOrder::left_hand;
}

inline const char* order_name(DfsOrder o) {
  return o == DfsOrder::right_hand ? "right_hand" : o == DfsOrder::left_hand ? "left_hand" : "id";
}

inline std::vector<CheckReport> check_planar(const std::string& id, const Graph& g, const std::string& desc,
                                             const CheckParams& p) {
  auto mk = marks_of(g, 3);
  VertexId va = g.vertex(mk.a), vb = g.vertex(mk.b), vc = g.vertex(mk.c);
  require_planar_face(g, {va, vb, vc}, FaceScope::outer, id.c_str());
  auto rep = start_report(id, desc, p);
  EventExpr abc = mark_event(mk, "abc"), ab = mark_event(mk, "ab"), bc = mark_event(mk, "bc"),
            ac = mark_event(mk, "ac");
  Plan plan;
  plan.singles = {{print(abc), abc}, {print(ab), ab}, {print(bc), bc}, {print(ac), ac}};
  auto ev = evaluate_plan(g, plan, p, rep);
  if (id == "planar_dv2") {
    finalize(rep, ev,
             [](const std::vector<double>& x) { return std::make_pair(x[0] * x[0], 2 * x[1] * x[2] * x[3]); }, p);
  } else {
    finalize(rep, ev,
             [](const std::vector<double>& x) {
               return std::make_pair(safe_ratio(x[0] * x[0], x[3]), 2 * x[1] * x[2] - x[0] * x[0]);
             },
             p);
  }
  if (p.method == Method::exact && g.num_edges() <= kMaxChainEdges) {
    DfsOrder preferred = planar_orientation(g, va, vb, vc);
    ojson chain = ojson::object();
    for (DfsOrder o : {preferred, preferred == DfsOrder::right_hand ? DfsOrder::left_hand : DfsOrder::right_hand}) {
      std::string t1 = "dfs_stop_at:" + mk.a + "," + mk.c + "," + order_name(o);
      Strategy t2 = then_rest(make_strategy(t1, g), Side::Sbar);
      auto cv = chain_values(g, t2, abc, ab, bc);
      chain = ojson{{"prefix", t1},
                    {"orientation", order_name(o)},
                    {"orientation_from_rule", o == preferred},
                    {"joint", cv.joint},
                    {"cs_lower", safe_ratio(ev.x[0] * ev.x[0], ev.x[3])},
                    {"vdbk_upper", 2 * ev.x[1] * ev.x[2]},
                    {"union_sqs", cv.union_prob},
                    {"joint_outside_union", cv.escape}};
      if (cv.escape <= p.tolerance) break;
    }
    rep.details["chain"] = chain;
  }
  return {rep};
}

inline std::vector<CheckReport> check_dv(const std::string& id, const Graph& g, const std::string& desc,
                                         const CheckParams& p) {
  auto mk = marks_of(g, 3);
  auto rep = start_report(id, desc, p);
  EventExpr abc = mark_event(mk, "abc"), ab = mark_event(mk, "ab"), bc = mark_event(mk, "bc"),
            ac = mark_event(mk, "ac"), abac = mark_event(mk, "ab U ac");
  Plan plan;
  if (id == "dv8") {
    plan.singles = {{print(abc), abc}, {print(ab), ab}, {print(ac), ac}, {print(bc), bc}};
    auto ev = evaluate_plan(g, plan, p, rep);
    finalize(rep, ev,
             [](const std::vector<double>& x) { return std::make_pair(x[0] * x[0], 8 * x[1] * x[2] * x[3]); }, p);
    return {rep};
  }
  plan.singles = {{print(abc), abc}, {print(abac), abac}, {print(bc), bc}};
  auto ev = evaluate_plan(g, plan, p, rep);
  finalize(rep, ev,
           [](const std::vector<double>& x) { return std::make_pair(x[0] * x[0], 2 * x[1] * x[1] * x[2]); }, p);
  if (p.method == Method::exact && g.num_edges() <= kMaxChainEdges) {
    std::string t1 = "dfs_stop_at:" + mk.a + "," + mk.b + "+" + mk.c;
    Strategy t2 = then_rest(make_strategy(t1, g), Side::Sbar);
    auto cv = chain_values(g, t2, abc, abac, bc);
    rep.details["chain"] = ojson{{"prefix", t1},
                                 {"joint", cv.joint},
                                 {"cs_lower", safe_ratio(ev.x[0] * ev.x[0], ev.x[1])},
                                 {"vdbk_upper", 2 * ev.x[1] * ev.x[2]},
                                 {"union_sqs", cv.union_prob},
                                 {"joint_outside_union", cv.escape}};
  }
  return {rep};
}

inline std::vector<CheckReport> check_q2(const std::string& id, const Graph& g, const std::string& desc,
                                         const CheckParams& p) {
  auto mk = marks_of(g, 3);
  auto rep = start_report(id, desc, p);
  EventExpr sep = mark_event(mk, "a|b|c"), u_ab_ac = mark_event(mk, "a|b U a|c"),
            u_ab_bc = mark_event(mk, "a|b U b|c"), u_ac_bc = mark_event(mk, "a|c U b|c");
  Plan plan;
  plan.singles = {{print(sep), sep}, {print(u_ab_ac), u_ab_ac}, {print(u_ab_bc), u_ab_bc}, {print(u_ac_bc), u_ac_bc}};
  auto ev = evaluate_plan(g, plan, p, rep);
  const bool swapped = id == "q2_swapped";
  finalize(rep, ev,
           [swapped](const std::vector<double>& x) {
             const double s = x[0];
             const double squared = swapped ? x[2] : x[1];
             const double den = swapped ? x[1] : x[2];
             double lhs = safe_ratio(s * s, den) + safe_ratio(s * s, x[3]);
             return std::make_pair(lhs, s + squared * squared);
           },
           p);
  return {rep};
}

inline double eps_param(const CheckParams& p) {
  double eps = p.eps.value_or(0.2);
  if (!(eps > 0 && eps <= 1)) throw InputError("eps must lie in (0, 1]");
  return eps;
}

inline std::vector<CheckReport> check_conj(const std::string& id, const Graph& g, const std::string& desc,
                                           const CheckParams& p) {
  auto mk = marks_of(g, 3);
  auto rep = start_report(id, desc, p);
  const double eps = eps_param(p);
  const double delta = eps * eps * eps / 4;
  rep.details["eps"] = eps;
  rep.details["delta"] = delta;
  EventExpr ab_c = mark_event(mk, "ab|c"), ac_b = mark_event(mk, "ac|b"), abc = mark_event(mk, "abc"),
            sep = mark_event(mk, "a|b|c"), a_bc = mark_event(mk, "a|bc");
  Plan plan;
  plan.singles = {{print(ab_c), ab_c}, {print(ac_b), ac_b}, {print(abc), abc}, {print(sep), sep}, {print(a_bc), a_bc}};
  auto ev = evaluate_plan(g, plan, p, rep);
  const auto& x = ev.x;
  if (id == "conj2_demo") {
    // Claim: the three premises cannot all hold. lhs is the smallest margin
    // by which they hold; it must not be positive.
    finalize(rep, ev,
             [delta, eps](const std::vector<double>& v) {
               return std::make_pair(std::min({delta - v[0], delta - v[1], std::min(v[2], v[3]) - eps}), 0.0);
             },
             p);
    rep.details["premise_met"] = x[0] < delta && x[1] < delta;
    rep.details["min_abc_separated"] = std::min(x[2], x[3]);
  } else {
    finalize(rep, ev,
             [delta, eps](const std::vector<double>& v) {
               double q = v[2] * v[3] - v[1] * v[4];
               return std::make_pair(std::min(delta - v[0], q - eps), 0.0);
             },
             p);
    rep.details["premise_met"] = x[0] < delta;
    rep.details["quantity"] = x[2] * x[3] - x[1] * x[4];
  }
  return {rep};
}

inline int int_param(const std::optional<int>& v, int fallback, const char* name) {
  int x = v.value_or(fallback);
  if (x < 1) throw InputError(std::string(name) + " must be at least 1");
  return x;
}

inline EventExpr npaths_event(const Marks& mk, int n) { return EventExpr::npaths(mk.a, mk.b, n); }

inline std::vector<CheckReport> check_arms(const std::string& id, const Graph& g, const std::string& desc,
                                           const CheckParams& p) {
  auto mk = marks_of(g, 2);
  VertexId va = g.vertex(mk.a), vb = g.vertex(mk.b);
  int n = 3, k = 2, l = 2, m = 2;
  if (id == "arms_klm") {
    if (!p.n || !p.k || !p.l || !p.m) throw InputError("arms_klm needs --n, --k, --l and --m");
    n = *p.n;
    k = *p.k;
    l = *p.l;
    m = *p.m;
    if (n < 1 || k < 0 || l < 0 || m < 0 || k > n || l > n || m > n || k + l + m != 2 * n)
      throw InputError("arms_klm needs k, l, m <= n with k + l + m = 2n");
  } else if (id == "submult") {
    k = int_param(p.k, 1, "k");
    l = int_param(p.l, 1, "l");
  }
  if (id != "submult") require_planar_face(g, {va, vb}, FaceScope::any, id.c_str());
  auto rep = start_report(id, desc, p);
  // f(0) = 1 needs no event.
  std::vector<int> idx;
  if (id == "submult")
    idx = {k + l, k, l};
  else
    idx = {n, k, l, m};
  Plan plan;
  std::vector<int> slot(idx.size(), -1);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] == 0) continue;
    for (std::size_t j = 0; j < i; ++j)
      if (idx[j] == idx[i]) slot[i] = slot[j];
    if (slot[i] >= 0) continue;
    slot[i] = static_cast<int>(plan.singles.size());
    EventExpr e = npaths_event(mk, idx[i]);
    plan.singles.emplace_back(print(e), e);
  }
  auto ev = evaluate_plan(g, plan, p, rep);
  auto f = [slot](const std::vector<double>& x, std::size_t i) { return slot[i] < 0 ? 1.0 : x[slot[i]]; };
  if (id == "submult") {
    finalize(rep, ev, [f](const std::vector<double>& x) { return std::make_pair(f(x, 0), f(x, 1) * f(x, 2)); }, p);
  } else {
    finalize(rep, ev,
             [f](const std::vector<double>& x) {
               return std::make_pair(f(x, 0) * f(x, 0), f(x, 1) * f(x, 2) * f(x, 3));
             },
             p);
    if (p.method == Method::exact && g.num_edges() <= kMaxChainEdges && k >= 1 &&
        same_face(g, std::vector<VertexId>{va, vb}, FaceScope::outer)) {
      std::string t1s = "rhw_walks:" + mk.a + "," + mk.b + "," + std::to_string(k);
      Strategy t1 = make_strategy(t1s, g);
      Strategy t2 = then_rest(t1, Side::Sbar);
      EventExpr en = npaths_event(mk, n);
      auto te = shared_table(g, en);
      double joint = exact_pair_multi(g, t2, {joint_query(te, te)}).front();
      bool prefix_decides = g.num_edges() <= kMaxContinuationEdges && decides(t1, g, npaths_event(mk, k));
      rep.details["chain"] = ojson{{"prefix", t1s},
                                   {"prefix_decides", prefix_decides},
                                   {"joint", joint},
                                   {"cs_lower", safe_ratio(f(ev.x, 0) * f(ev.x, 0), f(ev.x, 1))},
                                   {"vdbk_upper", f(ev.x, 2) * f(ev.x, 3)}};
    }
  }
  return {rep};
}

// ---------------------------------------------------------------------------
// Conjecture scans over f(n) = P(n disjoint a-b paths)

struct Profile {
  std::vector<double> f;  // f[0] = f(1)
  std::vector<double> cov;
};

inline Profile npaths_profile(const Graph& g, const Marks& mk, const CheckParams& p) {
  VertexId va = g.vertex(mk.a), vb = g.vertex(mk.b);
  int top = static_cast<int>(std::min(g.incident(va).size(), g.incident(vb).size()));
  if (p.n_max) {
    if (*p.n_max < 1) throw InputError("n_max must be at least 1");
    top = std::min(top, *p.n_max);
  }
  if (top < 1) throw HypothesisError("marked vertices have no incident edges");
  Profile pr;
  if (p.method == Method::exact) {
    std::vector<EventExpr> evs;
    for (int n = 1; n <= top; ++n) evs.push_back(npaths_event(mk, n));
    pr.f = exact_probs(g, evs);
    pr.cov.assign(pr.f.size() * pr.f.size(), 0.0);
  } else {
    require_seed(p);
    auto jc = mc_npaths_profile(g, va, vb, top, p.samples, *p.seed, p.threads);
    pr.f = jc.means();
    pr.cov = jc.covariance();
  }
  while (!pr.f.empty() && pr.f.back() <= 0) pr.f.pop_back();
  const std::size_t n = pr.f.size();
  std::vector<double> cov(n * n);
  const std::size_t old = static_cast<std::size_t>(std::sqrt(static_cast<double>(pr.cov.size())) + 0.5);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) cov[i * n + j] = pr.cov[i * old + j];
  pr.cov = std::move(cov);
  for (std::size_t i = 0; i < n; ++i)
    if (pr.f[i] >= 1) throw HypothesisError("f(" + std::to_string(i + 1) + ") = 1 is degenerate");
  return pr;
}

inline std::vector<CheckReport> scan_logconcave(const Graph& g, const std::string& desc, const CheckParams& p) {
  auto mk = marks_of(g, 2);
  auto pr = npaths_profile(g, mk, p);
  const int top = static_cast<int>(pr.f.size());
  if (top < 2) throw HypothesisError("log-concavity scan needs f(1) and f(2) positive");
  std::vector<CheckReport> out;
  Evaluated ev{pr.f, pr.cov};
  ojson fjson = pr.f;
  // f(n-1) f(n+1) <= f(n)^2 for 1 <= n < top, with f(0) = 1.
  for (int n = 1; n < top; ++n) {
    auto rep = start_report("logconcave", desc, p);
    rep.details["statement"] = "f(n-1)f(n+1) <= f(n)^2";
    rep.details["n"] = n;
    rep.details["f"] = fjson;
    finalize(rep, ev,
             [n](const std::vector<double>& x) {
               double prev = n == 1 ? 1.0 : x[n - 2];
               return std::make_pair(prev * x[n], x[n - 1] * x[n - 1]);
             },
             p);
    out.push_back(rep);
  }
  for (int n = 1; n < top; ++n) {
    auto rep = start_report("logconcave", desc, p);
    rep.details["statement"] = "log f(n+1)/(n+1) <= log f(n)/n";
    rep.details["n"] = n;
    rep.details["f"] = fjson;
    finalize(rep, ev,
             [n](const std::vector<double>& x) {
               return std::make_pair(std::log(x[n]) / (n + 1), std::log(x[n - 1]) / n);
             },
             p);
    out.push_back(rep);
  }
  return out;
}

inline std::vector<CheckReport> scan_lambda(const Graph& g, const std::string& desc, const CheckParams& p) {
  auto mk = marks_of(g, 2);
  auto pr = npaths_profile(g, mk, p);
  const int top = static_cast<int>(pr.f.size());
  if (top < 2) throw HypothesisError("lambda scan needs f(1) and f(2) positive");
  std::vector<double> lambdas;
  for (int k = 1; k <= top; ++k) lambdas.push_back(implied_lambda(k, pr.f[k - 1]));
  std::vector<CheckReport> out;
  Evaluated ev{pr.f, pr.cov};
  for (int k = 1; k < top; ++k) {
    auto rep = start_report("lambda_monotone", desc, p);
    rep.details["k"] = k;
    rep.details["f"] = pr.f;
    rep.details["lambda"] = lambdas;
    finalize(rep, ev,
             [k](const std::vector<double>& x) {
               auto lam = [&](int i) {
                 double v = std::clamp(x[i - 1], 1e-300, 1 - 1e-16);
                 return implied_lambda(i, v);
               };
               return std::make_pair(lam(k + 1), lam(k));
             },
             p);
    out.push_back(rep);
  }
  return out;
}

}  // namespace detail

inline std::vector<std::string> check_ids() {
  std::vector<std::string> out;
  for (const auto& c : check_catalog()) out.push_back(c.id);
  return out;
}

// Runs one named check (or scan) and returns its reports.
inline std::vector<CheckReport> run_check(const std::string& id, const Graph& g, const std::string& graph_desc,
                                          const CheckParams& params) {
  check_info(id);
  if (params.method == Method::mc) detail::require_seed(params);
  if (params.method == Method::mc && params.samples == 0) throw InputError("sample count must be at least 1");
  if (!(params.sigma > 0)) throw InputError("sigma must be positive");
  auto t0 = std::chrono::steady_clock::now();
  std::vector<CheckReport> out;
  if (id == "hk_tree" || id == "vdbk_tree")
    out = detail::check_hk_vdbk(id, g, graph_desc, params);
  else if (id == "cs_bound" || id == "frac1" || id == "frac2")
    out = detail::check_cs(id, g, graph_desc, params);
  else if (id == "planar_dv2" || id == "planar_dv2_strong")
    out = detail::check_planar(id, g, graph_desc, params);
  else if (id == "dv8" || id == "dv_union")
    out = detail::check_dv(id, g, graph_desc, params);
  else if (id == "q2" || id == "q2_swapped")
    out = detail::check_q2(id, g, graph_desc, params);
  else if (id == "conj2_demo" || id == "conj3_scan")
    out = detail::check_conj(id, g, graph_desc, params);
  else if (id == "arms23" || id == "arms_klm" || id == "submult")
    out = detail::check_arms(id, g, graph_desc, params);
  else if (id == "logconcave")
    out = detail::scan_logconcave(g, graph_desc, params);
  else
    out = detail::scan_lambda(g, graph_desc, params);
  if (params.timing) {
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (auto& r : out) r.runtime_ms = std::round(ms * 1000) / 1000;
  }
  return out;
}

// Conjecture scans by family name, as listed in the catalog.
inline std::vector<CheckReport> scan_conjectures(const std::string& id, const Graph& g, const std::string& graph_desc,
                                                 const CheckParams& params) {
  if (id == "logconcave" || id == "lambda_monotone") return run_check(id, g, graph_desc, params);
  if (id == "conj3") return run_check("conj3_scan", g, graph_desc, params);
  throw InputError("unknown conjecture scan '" + id + "'");
}

inline bool any_violation(const std::vector<CheckReport>& rs) {
  return std::any_of(rs.begin(), rs.end(), [](const CheckReport& r) { return r.verdict == Verdict::violated; });
}

}  // namespace dtperc
