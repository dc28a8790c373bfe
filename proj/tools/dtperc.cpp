#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dtperc/dtperc.hpp"

using namespace dtperc;

namespace {

struct CommonOptions {
  std::string graph;
  std::string method = "exact";
  std::uint64_t samples = 1'000'000;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--graph", o.graph, "graph file or family:<name>:<params>")->required();
  cmd->add_option("--method", o.method, "exact or mc")->check(CLI::IsMember({"exact", "mc"}));
  cmd->add_option("--samples", o.samples, "Monte Carlo samples");
  cmd->add_option("--seed", o.seed, "Monte Carlo seed (required for mc)");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

int run_check_cmd(const std::string& id, const CommonOptions& co, CheckParams p, const std::vector<std::string>& events,
                  const std::string& out) {
  p.method = parse_method(co.method);
  p.samples = co.samples;
  p.seed = co.seed;
  p.threads = co.threads;
  if (!events.empty()) {
    if (events.size() != 2) throw InputError("--events takes exactly two events");
    p.event_a = events[0];
    p.event_b = events[1];
  }
  Graph g = load_graph(co.graph);
  auto reports = run_check(id, g, graph_descriptor(co.graph), p);
  if (out == "csv")
    std::cout << to_csv(reports);
  else
    std::cout << to_json(reports).dump(2) << "\n";
  return any_violation(reports) ? 1 : 0;
}

int run_estimate_cmd(const CommonOptions& co, const std::string& event_text, std::optional<int> lambda_k) {
  Graph g = load_graph(co.graph);
  EventExpr e = parse_event(event_text);
  Method m = parse_method(co.method);
  ojson j;
  j["graph"] = graph_descriptor(co.graph);
  j["event"] = print(e);
  j["method"] = to_string(m);
  double prob = 0;
  if (m == Method::exact) {
    prob = exact_prob(g, e);
    j["probability"] = prob;
  } else {
    if (!co.seed) throw InputError("Monte Carlo runs need an explicit --seed");
    Estimate est = mc_prob(g, e, co.samples, *co.seed, co.threads);
    prob = est.mean;
    j["probability"] = est.mean;
    j["se"] = est.se;
    j["ci95"] = {est.lo, est.hi};
    j["samples"] = est.n;
    j["seed"] = est.seed;
  }
  if (lambda_k) {
    j["k"] = *lambda_k;
    j["lambda"] = implied_lambda(*lambda_k, prob);
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_corpus_cmd(const std::string& filter, const std::optional<std::string>& out_dir, unsigned threads,
                   bool timing) {
  std::vector<CorpusCase> cases;
  for (auto& c : builtin_corpus())
    if (glob_match(filter, c.check_id)) cases.push_back(std::move(c));
  if (cases.empty()) throw InputError("filter '" + filter + "' matches no corpus check");
  auto outcomes = run_corpus(cases, threads, timing);
  auto rows = summarize(outcomes);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    for (const auto& [name, arr] : corpus_files(outcomes))
      write_atomic(std::filesystem::path(*out_dir) / name, arr.dump(2) + "\n");
    write_atomic(std::filesystem::path(*out_dir) / "summary.json", summary_json(rows, outcomes).dump(2) + "\n");
  }
  std::cout << summary_table(rows);
  bool violated = false;
  int error_code = 0;
  for (const auto& o : outcomes) {
    if (o.error) {
      std::cerr << "error: " << o.c.check_id << " on " << o.c.graph << ": " << *o.error << "\n";
      error_code = std::max(error_code, o.error_code);
    }
    for (const auto& r : o.reports)
      if (r.verdict == Verdict::violated) {
        std::cerr << (r.kind == CheckKind::theorem ? "violation: " : "finding: ") << to_json(r).dump() << "\n";
        violated = true;
      }
  }
  int code = violated ? 1 : error_code;
  return code;
}

struct ZipperOptions {
  std::string preset;
  std::optional<double> p;
  std::string graph;
  std::string predicate = "product";
  std::vector<std::string> events;
  std::optional<std::string> strategy;
  std::optional<std::string> pair_strategy;
  bool gp1 = false;
};

int run_zipper_cmd(const ZipperOptions& z) {
  DualSpace ds = build_preset(z.preset, z.p);
  Graph g = load_graph(z.graph);
  if (z.events.empty()) throw InputError("--events needs at least one event");
  GenPredicate pred;
  if (z.predicate == "product") {
    std::vector<EventExpr> evs;
    for (const auto& e : z.events) evs.push_back(parse_event(e));
    pred = product_predicate(g, evs);
  } else {
    if (z.events.size() % 2 != 0) throw InputError("bowtie events come in pairs A1 B1 A2 B2 ...");
    std::vector<std::pair<EventExpr, EventExpr>> pairs;
    for (std::size_t i = 0; i < z.events.size(); i += 2)
      pairs.emplace_back(parse_event(z.events[i]), parse_event(z.events[i + 1]));
    pred = bowtie_predicate(g, pairs);
  }
  if (z.strategy && z.pair_strategy) throw InputError("give --strategy or --pair-strategy, not both");
  GenStrategy t = z.pair_strategy ? gen_from_pair(make_strategy(*z.pair_strategy, g), z.preset == "hk" ? 2 : 1)
                                  : parse_gen_strategy(z.strategy.value_or("adaptive:1"));
  ZipperDirection dir = preset_direction(z.preset);

  ojson j;
  j["preset"] = z.preset;
  j["p"] = z.p ? ojson(*z.p) : ojson(nullptr);
  j["graph"] = graph_descriptor(z.graph);
  j["direction"] = dir == ZipperDirection::forward ? "mu1 <= mu2" : "mu1 >= mu2";
  j["space1"] = ojson{{"symbols", ds.symbols1}, {"mu", ds.mu1}};
  j["space2"] = ojson{{"symbols", ds.symbols2}, {"mu", ds.mu2}};

  auto cond = check_zipper_condition(ds, pred, g, dir);
  ojson cases = ojson::array();
  for (auto [x1, x2] : cond.cases) cases.push_back({x1, x2});
  j["condition"] = ojson{{"holds", cond.holds},
                         {"worst_slack", cond.worst_slack},
                         {"worst_edge", cond.worst_edge},
                         {"worst_config", cond.worst_config},
                         {"evaluations", cond.evaluations},
                         {"cases", cases}};
  auto ineq = check_gen_inequality(g, ds, t, pred, dir);
  j["inequality"] = ojson{{"strategy", t.name},
                          {"p_all1", ineq.p_all1},
                          {"p_mixed", ineq.p_mixed},
                          {"p_all2", ineq.p_all2},
                          {"slack_low", ineq.slack_low},
                          {"slack_high", ineq.slack_high},
                          {"holds", ineq.holds}};
  if (z.gp1) j["gp1_gap"] = gp1_gap(g, ds, t, pred);
  std::cout << j.dump(2) << "\n";
  return cond.holds && ineq.holds ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision-tree percolation inequalities: exact and Monte Carlo checks"};
  app.require_subcommand(1);

  // check
  auto* check = app.add_subcommand("check", "run one named check");
  std::string check_id;
  CommonOptions check_common;
  CheckParams params;
  std::vector<std::string> events;
  std::string out_format = "json";
  bool no_timing = false;
  std::optional<std::string> strategy, prefix;
  std::optional<int> n, k, l, m, n_max;
  std::optional<double> eps;
  check->add_option("check_id", check_id, "check to run")->required()->check(CLI::IsMember(check_ids()));
  add_common(check, check_common);
  check->add_option("--strategy", strategy, "decision tree spec");
  check->add_option("--prefix", prefix, "prefix tree for cs_bound and frac1/frac2");
  check->add_option("--events", events, "events A B")->expected(2);
  check->add_option("--sigma", params.sigma, "Monte Carlo sigma level");
  check->add_option("--tolerance", params.tolerance, "exact tolerance");
  check->add_option("--n", n);
  check->add_option("--k", k);
  check->add_option("--l", l);
  check->add_option("--m", m);
  check->add_option("--n-max", n_max, "largest path count scanned");
  check->add_option("--eps", eps, "epsilon for conj2_demo and conj3_scan");
  check->add_option("--out", out_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  check->add_flag("--no-timing", no_timing, "omit runtime_ms");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "probability of one event");
  CommonOptions est_common;
  std::string event_text;
  std::optional<int> lambda_k;
  add_common(estimate, est_common);
  estimate->add_option("--event", event_text, "event expression")->required();
  estimate->add_option("--lambda", lambda_k, "also report the implied Poisson lambda for this k");

  // corpus run
  auto* corpus = app.add_subcommand("corpus", "built-in acceptance corpus");
  corpus->require_subcommand(1);
  auto* corpus_run = corpus->add_subcommand("run", "run the corpus");
  std::string filter = "*";
  std::optional<std::string> out_dir;
  unsigned corpus_threads = 0;
  bool corpus_no_timing = false;
  corpus_run->add_option("--filter", filter, "glob on check ids");
  corpus_run->add_option("--out", out_dir, "directory for report files");
  corpus_run->add_option("--threads", corpus_threads, "parallel checks (0 = all cores)");
  corpus_run->add_flag("--no-timing", corpus_no_timing, "omit runtime_ms");

  // zipper
  auto* zipper = app.add_subcommand("zipper", "two-space generating trees and their coupling condition");
  ZipperOptions z;
  zipper->add_option("--preset", z.preset)->required()->check(CLI::IsMember(preset_names()));
  zipper->add_option("--p", z.p, "edge probability for hk, vdbk and strongbk presets");
  zipper->add_option("--graph", z.graph)->required();
  zipper->add_option("--predicate", z.predicate, "product or bowtie")->check(CLI::IsMember({"product", "bowtie"}));
  zipper->add_option("--events", z.events, "events (product: one per coordinate; bowtie: pairs)")->required();
  zipper->add_option("--strategy", z.strategy, "all1, all2, mask:<digits> or adaptive:<salt>");
  zipper->add_option("--pair-strategy", z.pair_strategy, "decision tree spec read as a generating tree");
  zipper->add_flag("--gp1", z.gp1, "report the largest gap between the three probabilities");

  // checks
  auto* list = app.add_subcommand("checks", "list check ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*check) {
      params.strategy = strategy;
      params.prefix = prefix;
      params.n = n;
      params.k = k;
      params.l = l;
      params.m = m;
      params.n_max = n_max;
      params.eps = eps;
      params.timing = !no_timing;
      return run_check_cmd(check_id, check_common, params, events, out_format);
    }
    if (*estimate) return run_estimate_cmd(est_common, event_text, lambda_k);
    if (*corpus_run) return run_corpus_cmd(filter, out_dir, corpus_threads, !corpus_no_timing);
    if (*zipper) return run_zipper_cmd(z);
    if (*list) {
      for (const auto& c : check_catalog())
        std::cout << c.id << "  [" << to_string(c.kind) << "]  " << c.statement << "\n";
      return 0;
    }
  } catch (const SizeGuardError& e) {
    std::cerr << "size guard: " << e.what() << "\n";
    return 3;
  } catch (const HypothesisError& e) {
    std::cerr << "hypothesis not met: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
