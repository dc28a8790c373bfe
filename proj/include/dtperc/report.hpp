#pragma once

// Check reports and their JSON / CSV forms.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dtperc/monte_carlo.hpp"

namespace dtperc {

using ojson = nlohmann::ordered_json;

enum class Method { exact, mc };

inline const char* to_string(Method m) { return m == Method::exact ? "exact" : "mc"; }

inline Method parse_method(const std::string& s) {
  if (s == "exact") return Method::exact;
  if (s == "mc") return Method::mc;
  throw InputError("method must be exact or mc, got '" + s + "'");
}

// Theorem-backed checks must hold; conjecture and report-only checks record
// what they find.
enum class CheckKind { theorem, conjecture };

inline const char* to_string(CheckKind k) { return k == CheckKind::theorem ? "theorem" : "conjecture"; }

// Every check is phrased as lhs <= rhs, with slack = rhs - lhs.
struct CheckReport {
  std::string check_id;
  std::string graph;
  Method method = Method::exact;
  double lhs = 0;
  double rhs = 0;
  double slack = 0;
  Verdict verdict = Verdict::holds;
  std::optional<double> tolerance;
  std::optional<double> sigma;
  std::optional<std::uint64_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> runtime_ms;
  CheckKind kind = CheckKind::theorem;
  ojson details = ojson::object();
};

namespace detail {

template <class T>
ojson optional_json(const std::optional<T>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

}  // namespace detail

inline ojson to_json(const CheckReport& r) {
  ojson j;
  j["check_id"] = r.check_id;
  j["graph"] = r.graph;
  j["method"] = to_string(r.method);
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["slack"] = r.slack;
  j["verdict"] = to_string(r.verdict);
  j["tolerance"] = detail::optional_json(r.tolerance);
  j["sigma"] = detail::optional_json(r.sigma);
  j["samples"] = detail::optional_json(r.samples);
  j["seed"] = detail::optional_json(r.seed);
  j["runtime_ms"] = detail::optional_json(r.runtime_ms);
  j["kind"] = to_string(r.kind);
  j["details"] = r.details;
  return j;
}

inline ojson to_json(const std::vector<CheckReport>& rs) {
  ojson arr = ojson::array();
  for (const auto& r : rs) arr.push_back(to_json(r));
  return arr;
}

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{"check_id", "graph",   "method", "lhs",  "rhs",
                                             "slack",    "verdict", "tolerance", "sigma", "samples",
                                             "seed",     "runtime_ms", "kind"};
  return cols;
}

namespace detail {

inline std::string csv_field(const ojson& v) {
  if (v.is_null()) return "";
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

// Numbers are printed exactly as in the JSON form.
inline std::string to_csv(const std::vector<CheckReport>& rs) {
  std::ostringstream out;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& r : rs) {
    ojson j = to_json(r);
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << detail::csv_field(j[cols[i]]);
    out << "\n";
  }
  return out.str();
}

}  // namespace dtperc
