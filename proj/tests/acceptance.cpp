#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dtperc/dtperc.hpp"
#include "oracle.hpp"

using namespace dtperc;

namespace {

const std::string kCli = DTPERC_CLI;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " " << id << " " << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

std::vector<CorpusCase> select(const std::set<std::string>& ids) {
  std::vector<CorpusCase> out;
  for (auto& c : builtin_corpus())
    if (ids.count(c.check_id)) out.push_back(c);
  return out;
}

struct Tally {
  int reports = 0;
  int holds = 0;
  int inconclusive = 0;
  int violated = 0;
  int errors = 0;
  int hypothesis_skips = 0;
  double worst_slack = 1e300;
  std::vector<std::string> problems;
};

Tally tally(const std::vector<CorpusOutcome>& outs, bool allow_hypothesis_skip = false) {
  Tally t;
  for (const auto& o : outs) {
    if (o.error) {
      bool hyp = o.error->find("hypothesis") != std::string::npos;
      if (allow_hypothesis_skip && hyp) {
        ++t.hypothesis_skips;
      } else {
        ++t.errors;
        t.problems.push_back(o.c.check_id + " on " + o.c.graph + ": " + *o.error);
      }
      continue;
    }
    for (const auto& r : o.reports) {
      ++t.reports;
      t.worst_slack = std::min(t.worst_slack, r.slack);
      if (r.verdict == Verdict::holds) ++t.holds;
      if (r.verdict == Verdict::inconclusive) ++t.inconclusive;
      if (r.verdict == Verdict::violated) {
        ++t.violated;
        t.problems.push_back(r.check_id + " on " + r.graph + " slack " + fmt(r.slack));
      }
    }
  }
  return t;
}

std::string describe(const Tally& t) {
  std::string s = std::to_string(t.reports) + " reports, " + std::to_string(t.holds) + " hold, worst slack " +
                  fmt(t.worst_slack);
  if (t.hypothesis_skips) s += ", " + std::to_string(t.hypothesis_skips) + " skipped on hypotheses";
  if (!t.problems.empty()) s += "; first problem: " + t.problems.front();
  return s;
}

// Tables of the mark events computed with the reference search only.
struct RefEvents {
  oracle::G g;
  std::map<std::string, std::vector<std::uint8_t>> table;
};

RefEvents ref_events(const Graph& graph) {
  RefEvents r{oracle::from(graph), {}};
  const int a = r.g.vertex("a"), b = r.g.vertex("b"), c = r.g.vertex("c");
  const std::uint64_t n = std::uint64_t{1} << r.g.edges.size();
  for (const char* k : {"a,b", "b,c", "a,c", "a,b,c", "npaths(a,b,2)"}) r.table[k].assign(n, 0);
  for (std::uint64_t x = 0; x < n; ++x) {
    auto from_a = oracle::reach(r.g, x, a);
    auto from_b = oracle::reach(r.g, x, b);
    r.table["a,b"][x] = from_a[b];
    r.table["a,c"][x] = from_a[c];
    r.table["b,c"][x] = from_b[c];
    r.table["a,b,c"][x] = from_a[b] && from_a[c];
    r.table["npaths(a,b,2)"][x] = oracle::min_cut(r.g, x, a, b) >= 2;
  }
  return r;
}

// 1. Splice independence, with the joint law tabulated here from run_s alone.
void splice_independence() {
  auto t0 = Clock::now();
  const std::vector<std::string> graphs = {"cycle:3,p=0.5", "cycle:4,p=0.25", "path:3,p=0.75", "grid:2,2,p=0.5",
                                           "theta:3,p=0.5", "complete:4,p=0.25"};
  const std::vector<std::string> strategies = {"bfs_cluster:a", "dfs:a,id,S", "dfs:a,id,until:b",
                                               "seq:[dfs:c,id,S;dfs:a,id,Sbar;dfs:b,id,S]"};
  double worst = 0;
  int pairs = 0;
  for (const auto& spec : graphs) {
    Graph g = generate(spec);
    auto o = oracle::from(g);
    const std::uint64_t n = std::uint64_t{1} << g.num_edges();
    for (const auto& ts : strategies) {
      Strategy t = make_strategy(ts, g);
      std::vector<double> law(n * n, 0.0);
      for (std::uint64_t c1 = 0; c1 < n; ++c1)
        for (std::uint64_t c2 = 0; c2 < n; ++c2) {
          std::uint64_t s = run_s(t, g, c1, c2);
          std::uint64_t x = oracle::splice(c1, c2, s) & (n - 1), y = oracle::splice(c2, c1, s) & (n - 1);
          law[x * n + y] += oracle::weight(o, c1) * oracle::weight(o, c2);
        }
      for (std::uint64_t x = 0; x < n; ++x)
        for (std::uint64_t y = 0; y < n; ++y)
          worst = std::max(worst, std::abs(law[x * n + y] - oracle::weight(o, x) * oracle::weight(o, y)));
      ++pairs;
    }
  }
  double secs = seconds_since(t0);
  report(1, "splice independence", pairs >= 12 && worst <= 1e-12 && secs < 5,
         std::to_string(pairs) + " (graph, strategy) pairs, max deviation " + fmt(worst) + ", " + fmt(secs) + " s");
}

// 2 and 3. Library verdicts on the corpus plus a reference recomputation on
// every corpus graph with at most six edges.
void tree_inequalities() {
  auto outs = run_corpus(select({"hk_tree"}), 1, false);
  auto hk = tally(outs);
  auto vouts = run_corpus(select({"vdbk_tree"}), 1, false);
  auto vd = tally(vouts);

  double worst_hk = 0, worst_vd = 0;
  int recomputed = 0;
  std::map<std::string, RefEvents> refs;
  auto recheck = [&](const CorpusOutcome& o, bool is_hk) {
    Graph g = load_graph(o.c.graph);
    if (g.num_edges() > 6 || o.reports.empty()) return;
    auto it = refs.find(o.c.graph);
    if (it == refs.end()) it = refs.emplace(o.c.graph, ref_events(g)).first;
    const auto& ref = it->second;
    const auto& ta = ref.table.at(*o.c.params.event_a);
    const auto& tb = ref.table.at(*o.c.params.event_b);
    Strategy t = make_strategy(*o.c.params.strategy, g);
    const std::uint64_t n = std::uint64_t{1} << g.num_edges();
    double pa = 0, pb = 0, pair = 0;
    for (std::uint64_t c1 = 0; c1 < n; ++c1) {
      double w1 = oracle::weight(ref.g, c1);
      if (ta[c1]) pa += w1;
      if (tb[c1]) pb += w1;
      for (std::uint64_t c2 = 0; c2 < n; ++c2) {
        std::uint64_t s = run_s(t, g, c1, c2) & (n - 1);
        std::uint64_t x = oracle::splice(c1, c2, s) & (n - 1);
        bool hit = false;
        if (is_hk) {
          hit = ta[c1] && tb[x];
        } else if (ta[c1] && tb[x]) {
          // Shared open edges of S go to exactly one witness.
          const std::uint64_t shared = c1 & x & s;
          for (std::uint64_t u = shared;; u = (u - 1) & shared) {
            if (ta[c1 & ~(shared & ~u)] && tb[x & ~u]) {
              hit = true;
              break;
            }
            if (u == 0) break;
          }
        }
        if (hit) pair += w1 * oracle::weight(ref.g, c2);
      }
    }
    const auto& r = o.reports.front();
    double lhs = is_hk ? pa * pb : pair, rhs = is_hk ? pair : pa * pb;
    double dev = std::max(std::abs(lhs - r.lhs), std::abs(rhs - r.rhs));
    (is_hk ? worst_hk : worst_vd) = std::max(is_hk ? worst_hk : worst_vd, dev);
    if (rhs - lhs < -1e-12) (is_hk ? hk : vd).problems.push_back("reference violation on " + o.c.graph);
    ++recomputed;
  };
  for (const auto& o : outs) recheck(o, true);
  for (const auto& o : vouts) recheck(o, false);
  bool hk_ok = hk.reports >= 50 && hk.violated == 0 && hk.errors == 0 && hk.worst_slack >= -1e-12 &&
               worst_hk <= 1e-12 && hk.problems.empty();
  bool vd_ok = vd.reports >= 50 && vd.violated == 0 && vd.errors == 0 && vd.worst_slack >= -1e-12 &&
               worst_vd <= 1e-12 && vd.problems.empty();
  report(2, "decision-tree HK", hk_ok,
         describe(hk) + ", reference recomputation max deviation " + fmt(worst_hk));
  report(3, "decision-tree vdBK", vd_ok,
         describe(vd) + ", split-enumeration reference max deviation " + fmt(worst_vd) + " over " +
             std::to_string(recomputed) + " recomputed instances");
}

void plain_corpus(int id, const std::string& name, const std::set<std::string>& ids, bool allow_skip,
                  int min_reports) {
  auto t = tally(run_corpus(select(ids), 1, false), allow_skip);
  bool ok = t.reports >= min_reports && t.violated == 0 && t.errors == 0 && t.holds == t.reports;
  report(id, name, ok, describe(t));
}

// 5. Exact cases and the timed single-thread Monte Carlo grid run.
void planar_constant() {
  std::vector<CorpusCase> exact, mc;
  for (auto& c : select({"planar_dv2"})) (c.params.method == Method::mc ? mc : exact).push_back(c);
  auto te = tally(run_corpus(exact, 1, false));
  auto t0 = Clock::now();
  auto tm = tally(run_corpus(mc, 1, false));
  double secs = seconds_since(t0);
  bool ok = te.reports >= 18 && te.holds == te.reports && te.errors == 0 && !mc.empty() &&
            tm.holds == tm.reports && tm.reports > 0 && tm.errors == 0 && secs < 10;
  report(5, "planar constant 2", ok,
         "exact " + describe(te) + "; grid(5,5) Monte Carlo " + describe(tm) + " in " + fmt(secs) + " s");
}

// 6. Includes the sample graphs that are not in the built-in corpus.
void general_constant() {
  auto cases = select({"dv8", "dv_union"});
  for (const std::string f : {DTPERC_SAMPLES "/k4_subdivided.graph", DTPERC_SAMPLES "/mixed_p.graph"})
    for (const std::string id : {"dv8", "dv_union"}) cases.push_back(CorpusCase{id, f, CheckParams{}});
  auto t = tally(run_corpus(cases, 1, false));
  bool ok = t.reports >= 26 && t.holds == t.reports && t.errors == 0;
  report(6, "constant 8 and union form", ok, describe(t));
}

// 8. Reference probabilities; the implication is checked directly.
void conj_constant() {
  std::vector<std::string> graphs;
  for (const auto& c : select({"q2"})) graphs.push_back(c.graph);
  for (const std::string f : {"cycle:3", "path:2", "cycle:4", "grid:2,2", "theta:3"})
    for (double p : {0.01, 0.1, 0.5, 0.9, 0.99, 0.999})
      graphs.push_back("family:" + f + ",p=" + fmt(p));
  int instances = 0, premise = 0;
  std::string problem;
  for (const auto& spec : graphs) {
    Graph g = load_graph(spec);
    auto o = oracle::from(g);
    const int a = o.vertex("a"), b = o.vertex("b"), c = o.vertex("c");
    double ab_c = 0, ac_b = 0, abc = 0, sep = 0;
    for (std::uint64_t x = 0; x < (std::uint64_t{1} << g.num_edges()); ++x) {
      auto ra = oracle::reach(o, x, a);
      auto rb = oracle::reach(o, x, b);
      double w = oracle::weight(o, x);
      if (ra[b] && !ra[c]) ab_c += w;
      if (ra[c] && !ra[b]) ac_b += w;
      if (ra[b] && ra[c]) abc += w;
      if (!ra[b] && !ra[c] && !rb[c]) sep += w;
    }
    for (double eps : {0.2, 0.3}) {
      ++instances;
      double delta = eps * eps * eps / 4;
      if (ab_c < delta && ac_b < delta) {
        ++premise;
        if (!(std::min(abc, sep) < eps) && problem.empty()) problem = spec + " eps " + fmt(eps);
      }
      CheckParams p;
      p.eps = eps;
      auto r = run_check("conj2_demo", g, spec, p).front();
      if (r.verdict != Verdict::holds && problem.empty()) problem = "library verdict on " + spec;
    }
  }
  report(8, "three-point constant", problem.empty() && premise > 0,
         std::to_string(instances) + " instances, " + std::to_string(premise) + " meet the premise" +
             (problem.empty() ? "" : "; problem: " + problem));
}

// 9. Bisection on the cubic, written out here.
void alpha3() {
  auto f = [](double t) { return t * t * t - 42 * t * t + 12 * t + 1; };
  double lo = 0, hi = 1;
  for (int i = 0; i < 200; ++i) {
    double mid = (lo + hi) / 2;
    ((f(lo) < 0) == (f(mid) < 0) ? lo : hi) = mid;
  }
  double lib = alpha3_root();
  bool ok = std::abs(lib - 0.356) <= 5e-4 && std::abs(lib - lo) <= 1e-12;
  report(9, "alpha3 root", ok, "library " + fmt(lib) + ", bisection " + fmt(lo));
}

// 11. Case tables, equalities and inequality directions of the zipper presets.
void zipper_presets() {
  using Cases = std::set<std::pair<double, double>>;
  std::vector<std::string> problems;
  auto q = [](double a, double b) { return std::make_pair(round12(a), round12(b)); };
  auto product_cases = [&](const DualSpace& ds, ZipperDirection dir) {
    Cases out;
    for (const char* spec : {"path:1,p=0.5", "path:2,p=0.5"}) {
      Graph g = generate(spec);
      for (const auto& tri : std::vector<std::vector<std::string>>{
               {"a,b", "a,b", "a,b"}, {"a,b", "a,b", "a"}, {"a,b", "a", "a"}, {"a", "a", "a"}}) {
        auto r = check_zipper_condition(
            ds, product_predicate(g, {parse_event(tri[0]), parse_event(tri[1]), parse_event(tri[2])}), g, dir);
        if (!r.holds) problems.push_back("condition fails");
        out.insert(r.cases.begin(), r.cases.end());
      }
    }
    return out;
  };
  if (product_cases(build_preset("colored"), ZipperDirection::forward) !=
      Cases{q(0, 0), q(0, 1.0 / 8), q(0.25, 0.25), q(0.5, 0.5), q(1, 1)})
    problems.push_back("colored table");
  if (product_cases(build_preset("richards"), ZipperDirection::reversed) !=
      Cases{q(0, 0), q(9.0 / 24, 6.0 / 24), q(10.0 / 24, 8.0 / 24), q(12.0 / 24, 12.0 / 24), q(1, 1)})
    problems.push_back("richards table");
  for (double p : {0.3, 0.5}) {
    std::set<double> mu1;
    for (const char* spec : {"path:1,p=0.5", "path:2,p=0.5"}) {
      Graph g = generate(spec);
      for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{{"a,b", "a,b"}, {"a,b", "a"}, {"a", "a"}}) {
        auto r = check_zipper_condition(build_preset("strongbk", p),
                                        bowtie_predicate(g, {{parse_event(a), parse_event(b)}}), g);
        if (!r.holds) problems.push_back("strongbk condition");
        for (auto [x1, x2] : r.cases) mu1.insert(x1);
      }
    }
    if (mu1 != std::set<double>{0, round12(p * p), round12(p), 1}) problems.push_back("strongbk table");
  }

  // Equalities: both spaces of the colored measure agree on pairs of
  // coordinates, so every tree gives the same value.
  double gap = 0;
  DualSpace colored = build_preset("colored");
  for (const char* spec : {"cycle:3,p=0.5", "grid:2,2,p=0.5"}) {
    Graph g = generate(spec);
    auto pred = product_predicate(g, {parse_event("a,b"), parse_event("a,c"), parse_event("a")});
    for (const char* ts : {"adaptive:1", "adaptive:5", "adaptive:9"})
      gap = std::max(gap, gp1_gap(g, colored, parse_gen_strategy(ts), pred));
  }
  if (gap > 1e-12) problems.push_back("gp1 gap " + fmt(gap));

  int checked = 0;
  for (const char* spec : {"path:1,p=0.5", "path:2,p=0.5", "cycle:3,p=0.5", "path:3,p=0.5", "grid:2,2,p=0.5"}) {
    Graph g = generate(spec);
    std::vector<std::pair<std::string, GenPredicate>> cases;
    for (const std::string name : {"colored", "richards"})
      for (const auto& tri : std::vector<std::vector<std::string>>{{"a,b", "a,c", "b,c"}, {"a,b", "a,b", "a,b"}})
        if (g.marks().size() > 2 || tri[1] == "a,b")
          cases.emplace_back(name, product_predicate(g, {parse_event(tri[0]), parse_event(tri[1]), parse_event(tri[2])}));
    for (const std::string name : {"hk", "vdbk", "strongbk"}) {
      auto a = parse_event("a,b");
      cases.emplace_back(name, name == "hk" ? product_predicate(g, {a, a}) : bowtie_predicate(g, {{a, a}}));
    }
    for (const auto& [preset, pred] : cases) {
      DualSpace ds = build_preset(preset, 0.5);
      if (std::pow(static_cast<double>(ds.symbols1.size()), static_cast<double>(g.num_edges())) > kMaxGenLeaves)
        continue;
      for (const char* ts : {"adaptive:1", "adaptive:2", "adaptive:3", "adaptive:4"}) {
        auto r = check_gen_inequality(g, ds, parse_gen_strategy(ts), pred, preset_direction(preset));
        if (!r.holds) problems.push_back(preset + " direction on " + spec);
        ++checked;
      }
    }
  }
  report(11, "zipper presets", problems.empty() && checked > 50,
         "three case tables, gp1 gap " + fmt(gap) + ", " + std::to_string(checked) + " directional instances" +
             (problems.empty() ? "" : "; first problem: " + problems.front()));
}

// 12. Scans are findings: no violation, and every report carries what is
// needed to rerun it.
void conjecture_scans() {
  auto outs = run_corpus(select({"logconcave", "lambda_monotone", "conj3_scan"}), 1, false);
  auto t = tally(outs);
  bool reproducible = true;
  for (const auto& o : outs)
    for (const auto& r : o.reports) {
      auto j = to_json(r);
      if (r.method == Method::mc && (!r.seed || !r.samples)) reproducible = false;
      if (j["graph"].get<std::string>().empty() || !j.contains("details")) reproducible = false;
    }
  bool ok = t.violated == 0 && t.errors == 0 && t.reports > 0 && reproducible;
  report(12, "conjecture scans", ok,
         describe(t) + ", " + std::to_string(t.inconclusive) + " inconclusive" +
             (reproducible ? ", reproduction fields present" : ", reproduction fields missing"));
}

struct Cmd {
  int code = -1;
  std::string out;
};

Cmd run_cli(const std::string& args) {
  Cmd r;
  FILE* pipe = popen((kCli + " " + args + " 2>/dev/null").c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  if (!std::filesystem::exists(dir)) return out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[e.path().filename().string()] = s.str();
  }
  return out;
}

// 13. Whole corpus through the command line, then byte comparisons.
void determinism_and_speed() {
  auto base = std::filesystem::temp_directory_path() / ("dtperc_acceptance_" + std::to_string(::getpid()));
  std::filesystem::remove_all(base);
  auto t0 = Clock::now();
  auto full = run_cli("corpus run --no-timing --threads 1 --out " + (base / "one").string());
  double secs = seconds_since(t0);
  auto again = run_cli("corpus run --no-timing --threads 4 --out " + (base / "four").string());
  auto one_files = read_dir(base / "one"), four_files = read_dir(base / "four");
  std::string mc = "check dv8 --graph family:grid:5,5,p=0.5 --method mc --samples 200000 --seed 99 --no-timing";
  auto m1 = run_cli(mc + " --threads 1"), m1b = run_cli(mc + " --threads 1"), m3 = run_cli(mc + " --threads 3"),
       m8 = run_cli(mc + " --threads 8");
  bool mc_same = m1.code == 0 && m1.out == m1b.out && m1.out == m3.out && m1.out == m8.out;
  bool corpus_same = !one_files.empty() && one_files == four_files;
  std::filesystem::remove_all(base);
  bool ok = full.code == 0 && again.code == 0 && secs < 60 && mc_same && corpus_same;
  report(13, "determinism and performance", ok,
         "corpus exit " + std::to_string(full.code) + " in " + fmt(secs) + " s single-threaded, " +
             std::to_string(one_files.size()) + " files " + (corpus_same ? "identical" : "differ") +
             " at 1 and 4 threads, seeded Monte Carlo " + (mc_same ? "identical" : "differs") +
             " at 1, 3 and 8 threads");
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<void()>>> steps = {
      {1, splice_independence},
      {2, tree_inequalities},
      {4, [] { plain_corpus(4, "Cauchy-Schwarz bound and corollary", {"cs_bound", "frac1", "frac2"}, true, 20); }},
      {5, planar_constant},
      {6, general_constant},
      {7, [] { plain_corpus(7, "q2 and its swap", {"q2", "q2_swapped"}, false, 30); }},
      {8, conj_constant},
      {9, alpha3},
      {10, [] { plain_corpus(10, "arms inequalities", {"arms23", "arms_klm"}, false, 24); }},
      {11, zipper_presets},
      {12, conjecture_scans},
      {13, determinism_and_speed},
  };
  for (const auto& [id, step] : steps) {
    try {
      step();
    } catch (const std::exception& e) {
      report(id, "criterion", false, std::string("exception: ") + e.what());
    }
  }
  return failures == 0 ? 0 : 1;
}
