#pragma once

// The built-in acceptance corpus and its parallel runner.

#include <fnmatch.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dtperc/error.hpp"
#include "dtperc/graph.hpp"
#include "dtperc/inequalities.hpp"
#include "dtperc/report.hpp"

namespace dtperc {

struct CorpusCase {
  std::string check_id;
  std::string graph;  // "family:..." or a file path
  CheckParams params;
};

namespace detail {

inline CheckParams exact_params() { return CheckParams{}; }

inline CheckParams mc_params(std::uint64_t samples, std::uint64_t seed) {
  CheckParams p;
  p.method = Method::mc;
  p.samples = samples;
  p.seed = seed;
  return p;
}

inline std::string fam(const std::string& s) { return "family:" + s; }

}  // namespace detail

inline std::vector<CorpusCase> builtin_corpus() {
  using detail::exact_params;
  using detail::fam;
  std::vector<CorpusCase> out;
  auto add = [&](const std::string& id, const std::string& graph, CheckParams p) {
    out.push_back(CorpusCase{id, graph, std::move(p)});
  };

  // Three-marked graphs with at most 8 edges.
  const std::vector<std::string> small3 = {
      fam("cycle:3,p=0.25"), fam("cycle:3,p=0.5"), fam("cycle:3,p=0.75"), fam("cycle:4,p=0.5"),
      fam("cycle:5,p=0.3"),  fam("path:3,p=0.5"),  fam("grid:2,2,p=0.5"), fam("grid:2,3,p=0.6"),
      fam("theta:3,p=0.5"),  fam("complete:4,p=0.5"), fam("complete:4,p=0.375")};

  // Decision-tree HK and vdBK.
  const std::vector<std::string> strategies = {"bfs_cluster:a", "dfs:a,id,S", "dfs:a,id,until:c",
                                               "dfs:b,id,until_any:a+c", "seq:[dfs_stop_at:a,c;rest:Sbar]",
                                               "seq:[bfs_cluster:b;rest:S]",
                                               "seq:[dfs:c,id,S;dfs:a,id,Sbar;dfs:b,id,S]",
                                               "seq:[dfs:b,id,S;dfs:a,id,Sbar;dfs:c,id,S]",
                                               "seq:[dfs:a,id,Sbar;dfs:b,id,S;dfs:c,id,S]"};
  const std::vector<std::pair<std::string, std::string>> event_pairs = {
      {"a,b", "b,c"}, {"a,b", "a,c"}, {"a,b,c", "a,b"}, {"b,c", "npaths(a,b,2)"}, {"a,b,c", "a,b,c"}};
  for (const auto& g : small3)
    for (const auto& t : strategies)
      for (const auto& [ea, eb] : event_pairs)
        for (const std::string id : {"hk_tree", "vdbk_tree"}) {
          CheckParams p = exact_params();
          p.strategy = t;
          p.event_a = ea;
          p.event_b = eb;
          add(id, g, p);
        }
  for (const auto& g : std::vector<std::string>{fam("cycle:4,p=0.5"), fam("grid:2,2,p=0.5"), fam("theta:3,p=0.5")})
    for (const std::string id : {"hk_tree", "vdbk_tree"}) {
      CheckParams p = exact_params();
      p.strategy = "dfs:a,right_hand,until:c";
      p.event_a = "a,b";
      p.event_b = "b,c";
      add(id, g, p);
    }

  // Cauchy-Schwarz bound and its corollary.
  for (const auto& g : small3) {
    CheckParams p = exact_params();
    p.prefix = "dfs_stop_at:a,c";
    p.strategy = "seq:[dfs_stop_at:a,c;rest:Sbar]";
    p.event_a = "a,c";
    p.event_b = "a,b,c";
    add("cs_bound", g, p);
    p.prefix = "bfs_cluster:a";
    p.strategy = "seq:[bfs_cluster:a;dfs:b,id,S;rest:Sbar]";
    p.event_a = "a|b U a|c";
    p.event_b = "a|b|c";
    add("cs_bound", g, p);
    for (const std::string id : {"frac1", "frac2"}) {
      add(id, g, exact_params());
      CheckParams q = exact_params();
      q.strategy = "seq:[bfs_cluster:a;rest:S]";
      add(id, g, q);
    }
  }

  // Planar constant 2 with the marks on the outer face.
  std::vector<std::string> planar;
  for (const std::string pv : {"0.25", "0.5", "0.75"}) {
    for (const std::string f : {"cycle:3", "cycle:4", "cycle:6", "theta:2", "theta:3", "theta:4"})
      planar.push_back(fam(f + ",p=" + pv));
  }
  planar.push_back(fam("grid:2,3,p=0.5"));
  planar.push_back(fam("grid:3,3,p=0.5"));
  for (const auto& g : planar) {
    add("planar_dv2", g, exact_params());
    add("planar_dv2_strong", g, exact_params());
  }
  add("planar_dv2", fam("grid:5,5,p=0.5"), detail::mc_params(1'000'000, 20240501));

  // Constant 8 and the union form.
  for (const auto& g : small3) {
    add("dv8", g, exact_params());
    add("dv_union", g, exact_params());
  }
  for (const auto& g : std::vector<std::string>{fam("grid:5,5,p=0.5"), fam("complete:5,p=0.3")}) {
    add("dv8", g, detail::mc_params(1'000'000, 7));
    add("dv_union", g, detail::mc_params(1'000'000, 7));
  }

  // q2 and the conj2 chain on the three-marked corpus.
  std::vector<std::string> three = small3;
  for (const auto& g : std::vector<std::string>{fam("grid:3,3,p=0.5"), fam("grid:3,4,p=0.45"), fam("theta:4,p=0.6"),
                              fam("cycle:3,p=0.97"), fam("path:2,p=0.999"), fam("cycle:6,p=0.9")})
    three.push_back(g);
  for (const auto& g : three) {
    add("q2", g, exact_params());
    add("q2_swapped", g, exact_params());
    for (double eps : {0.2, 0.3}) {
      CheckParams p = exact_params();
      p.eps = eps;
      add("conj2_demo", g, p);
    }
    add("conj3_scan", g, exact_params());
  }

  // Arms inequalities and submultiplicativity.
  const std::vector<std::string> arms_graphs = {
      fam("parallel:3,q=0.5"), fam("parallel:4,q=0.5"), fam("parallel:5,q=0.3"), fam("parallel:4,q=0.8"),
      fam("theta:3,p=0.5"),    fam("theta:4,p=0.7"),    fam("grid:2,3,p=0.6"),   fam("grid:2,4,p=0.5")};
  for (const auto& g : arms_graphs) {
    add("arms23", g, exact_params());
    for (auto [n, k, l, m] : std::vector<std::array<int, 4>>{{3, 2, 2, 2}, {3, 3, 2, 1}}) {
      CheckParams p = exact_params();
      p.n = n;
      p.k = k;
      p.l = l;
      p.m = m;
      add("arms_klm", g, p);
    }
    CheckParams s = exact_params();
    s.k = 1;
    s.l = 2;
    add("submult", g, s);
  }

  // Conjecture scans.
  for (const auto& g : std::vector<std::string>{fam("parallel:2,q=0.5"), fam("parallel:3,q=0.5"), fam("parallel:4,q=0.5"),
                              fam("parallel:5,q=0.5"), fam("parallel:5,q=0.9"), fam("theta:3,p=0.5"),
                              fam("theta:4,p=0.6"), fam("grid:2,3,p=0.6"), fam("grid:2,4,p=0.7")}) {
    add("logconcave", g, exact_params());
    add("lambda_monotone", g, exact_params());
  }
  add("logconcave", fam("grid:2,6,p=0.7"), detail::mc_params(1'000'000, 11));
  add("lambda_monotone", fam("grid:2,6,p=0.7"), detail::mc_params(1'000'000, 11));
  return out;
}

struct CorpusOutcome {
  CorpusCase c;
  std::vector<CheckReport> reports;
  std::optional<std::string> error;
  int error_code = 0;  // 2 usage or hypothesis, 3 size guard
};

inline bool glob_match(const std::string& pattern, const std::string& text) {
  return fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

inline std::string sanitize_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '=' || c == '-' || c == '_';
    out += keep ? c : '_';
  }
  return out;
}

inline CorpusOutcome run_case(const CorpusCase& c, bool timing) {
  CorpusOutcome o{c, {}, std::nullopt, 0};
  try {
    CheckParams p = c.params;
    p.timing = timing;
    Graph g = load_graph(c.graph);
    o.reports = run_check(c.check_id, g, graph_descriptor(c.graph), p);
  } catch (const SizeGuardError& e) {
    o.error = e.what();
    o.error_code = 3;
  } catch (const std::exception& e) {
    o.error = e.what();
    o.error_code = 2;
  }
  return o;
}

// Results come back in corpus order whatever the thread count.
inline std::vector<CorpusOutcome> run_corpus(const std::vector<CorpusCase>& cases, unsigned threads, bool timing) {
  std::vector<CorpusOutcome> out(cases.size());
  threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(resolve_threads(threads), cases.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < cases.size(); i = next++) out[i] = run_case(cases[i], timing);
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write '" + tmp.string() + "'");
    f << text;
    if (!f.flush()) throw InputError("cannot write '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

struct SummaryRow {
  std::string check_id;
  std::string kind;
  std::size_t cases = 0, reports = 0, holds = 0, violated = 0, inconclusive = 0, errors = 0;
};

inline std::vector<SummaryRow> summarize(const std::vector<CorpusOutcome>& outcomes) {
  std::vector<SummaryRow> rows;
  for (const auto& info : check_catalog()) {
    SummaryRow r;
    r.check_id = info.id;
    r.kind = to_string(info.kind);
    for (const auto& o : outcomes) {
      if (o.c.check_id != info.id) continue;
      ++r.cases;
      if (o.error) ++r.errors;
      for (const auto& rep : o.reports) {
        ++r.reports;
        if (rep.verdict == Verdict::holds) ++r.holds;
        if (rep.verdict == Verdict::violated) ++r.violated;
        if (rep.verdict == Verdict::inconclusive) ++r.inconclusive;
      }
    }
    if (r.cases) rows.push_back(r);
  }
  return rows;
}

inline ojson summary_json(const std::vector<SummaryRow>& rows, const std::vector<CorpusOutcome>& outcomes) {
  ojson j;
  ojson arr = ojson::array();
  for (const auto& r : rows)
    arr.push_back(ojson{{"check_id", r.check_id},
                        {"kind", r.kind},
                        {"cases", r.cases},
                        {"reports", r.reports},
                        {"holds", r.holds},
                        {"violated", r.violated},
                        {"inconclusive", r.inconclusive},
                        {"errors", r.errors}});
  j["checks"] = arr;
  ojson errs = ojson::array();
  for (const auto& o : outcomes)
    if (o.error) errs.push_back(ojson{{"check_id", o.c.check_id}, {"graph", o.c.graph}, {"error", *o.error}});
  j["errors"] = errs;
  return j;
}

// One JSON array per (check, graph), in corpus order.
inline std::vector<std::pair<std::string, ojson>> corpus_files(const std::vector<CorpusOutcome>& outcomes) {
  std::vector<std::pair<std::string, ojson>> files;
  std::map<std::string, std::size_t> index;
  for (const auto& o : outcomes) {
    std::string name = o.c.check_id + "__" + sanitize_name(graph_descriptor(o.c.graph)) + ".json";
    auto [it, fresh] = index.emplace(name, files.size());
    if (fresh) files.emplace_back(name, ojson::array());
    ojson& arr = files[it->second].second;
    for (const auto& r : o.reports) arr.push_back(to_json(r));
    if (o.error) arr.push_back(ojson{{"check_id", o.c.check_id}, {"graph", o.c.graph}, {"error", *o.error}});
  }
  return files;
}

inline std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-18s %-10s %6s %7s %6s %8s %12s %6s\n", "check", "kind", "cases", "reports",
                "holds", "violated", "inconclusive", "errors");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-18s %-10s %6zu %7zu %6zu %8zu %12zu %6zu\n", r.check_id.c_str(),
                  r.kind.c_str(), r.cases, r.reports, r.holds, r.violated, r.inconclusive, r.errors);
    out << line;
  }
  return out.str();
}

}  // namespace dtperc
