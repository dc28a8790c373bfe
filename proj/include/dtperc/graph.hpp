#pragma once

// Finite marked graphs with per-edge open probabilities, optional rotation
// systems, bond configurations and connectivity primitives.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dtperc/error.hpp"

namespace dtperc {

using VertexId = std::uint32_t;
using EdgeId = std::uint32_t;

// Configurations are stored as one machine word.
inline constexpr std::size_t kMaxEdges = 64;

struct Edge {
  std::string id;
  VertexId u = 0;
  VertexId v = 0;
  double p = 0.5;

  VertexId other(VertexId w) const { return w == u ? v : u; }
};

// A directed edge: `edge` traversed away from `from`.
struct Dart {
  EdgeId edge = 0;
  VertexId from = 0;

  friend bool operator==(const Dart&, const Dart&) = default;
};

class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::size_t num_edges, std::uint64_t bits = 0)
      : bits_(bits & full_mask(num_edges)), size_(num_edges) {}

  static Configuration all_open(std::size_t num_edges) {
    return Configuration(num_edges, full_mask(num_edges));
  }

  static std::uint64_t full_mask(std::size_t n) {
    return n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  }

  bool operator[](EdgeId e) const { return (bits_ >> e) & 1U; }
  void set(EdgeId e, bool open) {
    if (open)
      bits_ |= std::uint64_t{1} << e;
    else
      bits_ &= ~(std::uint64_t{1} << e);
  }

  std::uint64_t bits() const { return bits_; }
  std::size_t size() const { return size_; }
  int count_open() const { return std::popcount(bits_); }

  friend bool operator==(const Configuration&, const Configuration&) = default;

 private:
  std::uint64_t bits_ = 0;
  std::size_t size_ = 0;
};

class GraphBuilder;

class Graph {
 public:
  std::size_t num_vertices() const { return names_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const EdgeId> incident(VertexId v) const { return incident_.at(v); }

  const std::string& name(VertexId v) const { return names_.at(v); }

  std::optional<VertexId> find_vertex(std::string_view name) const {
    auto it = vertex_index_.find(std::string(name));
    if (it == vertex_index_.end()) return std::nullopt;
    return it->second;
  }

  VertexId vertex(std::string_view name) const {
    auto v = find_vertex(name);
    if (!v) throw InputError("unknown vertex '" + std::string(name) + "'");
    return *v;
  }

  std::optional<EdgeId> find_edge(std::string_view id) const {
    auto it = edge_index_.find(std::string(id));
    if (it == edge_index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<VertexId>& marks() const { return marks_; }

  bool has_rotation() const { return !rotation_.empty(); }
  // Clockwise cyclic order of the edges at v.
  std::span<const EdgeId> rotation(VertexId v) const { return rotation_.at(v); }
  const std::optional<Dart>& outer_anchor() const { return outer_anchor_; }

  // Position of e in the rotation cycle of its endpoint w.
  std::size_t rotation_position(EdgeId e, VertexId w) const {
    return w == edges_[e].u ? rot_pos_[e].first : rot_pos_[e].second;
  }
  EdgeId rotation_successor(EdgeId e, VertexId w) const {
    const auto& cyc = rotation_[w];
    return cyc[(rotation_position(e, w) + 1) % cyc.size()];
  }
  EdgeId rotation_predecessor(EdgeId e, VertexId w) const {
    const auto& cyc = rotation_[w];
    return cyc[(rotation_position(e, w) + cyc.size() - 1) % cyc.size()];
  }

  std::vector<double> probabilities() const {
    std::vector<double> out;
    out.reserve(edges_.size());
    for (const auto& e : edges_) out.push_back(e.p);
    return out;
  }

  // Same graph with different edge probabilities.
  Graph with_probabilities(std::span<const double> ps) const {
    if (ps.size() != edges_.size()) throw InputError("probability vector size mismatch");
    Graph g = *this;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (!(ps[i] >= 0.0 && ps[i] <= 1.0)) throw InputError("probability outside [0,1]");
      g.edges_[i].p = ps[i];
    }
    return g;
  }

  Configuration configuration(std::uint64_t bits) const {
    return Configuration(edges_.size(), bits);
  }

 private:
  friend class GraphBuilder;

  std::vector<std::string> names_;
  std::unordered_map<std::string, VertexId> vertex_index_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, EdgeId> edge_index_;
  std::vector<std::vector<EdgeId>> incident_;
  std::vector<VertexId> marks_;
  std::vector<std::vector<EdgeId>> rotation_;
  std::vector<std::pair<std::size_t, std::size_t>> rot_pos_;
  std::optional<Dart> outer_anchor_;
};

class GraphBuilder {
 public:
  VertexId add_vertex(const std::string& name) {
    if (vertex_index_.count(name)) throw InputError("duplicate vertex '" + name + "'");
    VertexId id = static_cast<VertexId>(names_.size());
    names_.push_back(name);
    vertex_index_.emplace(name, id);
    return id;
  }

  bool has_vertex(const std::string& name) const { return vertex_index_.count(name) != 0; }

  EdgeId add_edge(const std::string& id, const std::string& u, const std::string& v, double p) {
    if (edge_index_.count(id)) throw InputError("duplicate edge id '" + id + "'");
    VertexId a = lookup(u);
    VertexId b = lookup(v);
    if (a == b) throw InputError("loop edge '" + id + "' at vertex '" + u + "'");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("probability of edge '" + id + "' outside [0,1]");
    auto key = std::minmax(a, b);
    if (!endpoint_pairs_.emplace(key.first, key.second).second)
      throw InputError("parallel edge '" + id + "' between '" + u + "' and '" + v + "'");
    EdgeId e = static_cast<EdgeId>(edges_.size());
    edges_.push_back(Edge{id, a, b, p});
    edge_index_.emplace(id, e);
    return e;
  }

  void set_rotation(const std::string& vertex, const std::vector<std::string>& edge_ids) {
    VertexId v = lookup(vertex);
    if (rotation_.count(v)) throw InputError("duplicate rotation for vertex '" + vertex + "'");
    std::vector<EdgeId> cyc;
    for (const auto& id : edge_ids) cyc.push_back(lookup_edge(id));
    rotation_.emplace(v, std::move(cyc));
  }

  void set_rotation(VertexId v, std::vector<EdgeId> cyc) { rotation_[v] = std::move(cyc); }

  void set_outer_anchor(const std::string& edge_id, const std::string& vertex) {
    outer_anchor_ = Dart{lookup_edge(edge_id), lookup(vertex)};
  }
  void set_outer_anchor(Dart d) { outer_anchor_ = d; }

  void set_marks(const std::vector<std::string>& names) {
    marks_.clear();
    for (const auto& n : names) marks_.push_back(lookup(n));
  }

  Graph build() const {
    Graph g;
    g.names_ = names_;
    g.vertex_index_ = vertex_index_;
    g.edges_ = edges_;
    g.edge_index_ = edge_index_;
    g.marks_ = marks_;
    g.outer_anchor_ = outer_anchor_;

    if (names_.empty()) throw InputError("graph has no vertices");
    if (edges_.size() > kMaxEdges)
      throw InputError("graph has " + std::to_string(edges_.size()) + " edges; at most " +
                       std::to_string(kMaxEdges) + " are supported");

    g.incident_.assign(names_.size(), {});
    for (EdgeId e = 0; e < edges_.size(); ++e) {
      g.incident_[edges_[e].u].push_back(e);
      g.incident_[edges_[e].v].push_back(e);
    }

    if (marks_.size() < 2 || marks_.size() > 3) throw InputError("expected 2 or 3 marked vertices");
    for (std::size_t i = 0; i < marks_.size(); ++i)
      for (std::size_t j = i + 1; j < marks_.size(); ++j)
        if (marks_[i] == marks_[j]) throw InputError("marked vertices must be distinct");

    check_connected(g);

    if (!rotation_.empty()) {
      g.rotation_.assign(names_.size(), {});
      g.rot_pos_.assign(edges_.size(), {0, 0});
      for (VertexId v = 0; v < names_.size(); ++v) {
        auto it = rotation_.find(v);
        if (it == rotation_.end()) {
          if (!g.incident_[v].empty())
            throw InputError("rotation missing for vertex '" + names_[v] + "'");
          continue;
        }
        std::vector<EdgeId> want = g.incident_[v];
        std::vector<EdgeId> got = it->second;
        std::sort(want.begin(), want.end());
        std::sort(got.begin(), got.end());
        if (want != got)
          throw InputError("rotation at vertex '" + names_[v] +
                           "' must list each incident edge exactly once");
        g.rotation_[v] = it->second;
        for (std::size_t i = 0; i < it->second.size(); ++i) {
          EdgeId e = it->second[i];
          if (edges_[e].u == v)
            g.rot_pos_[e].first = i;
          else
            g.rot_pos_[e].second = i;
        }
      }
    }
    if (outer_anchor_) {
      const Edge& e = edges_.at(outer_anchor_->edge);
      if (e.u != outer_anchor_->from && e.v != outer_anchor_->from)
        throw InputError("outer face anchor vertex is not an endpoint of its edge");
    }
    return g;
  }

 private:
  VertexId lookup(const std::string& name) const {
    auto it = vertex_index_.find(name);
    if (it == vertex_index_.end()) throw InputError("unknown vertex '" + name + "'");
    return it->second;
  }
  EdgeId lookup_edge(const std::string& id) const {
    auto it = edge_index_.find(id);
    if (it == edge_index_.end()) throw InputError("unknown edge '" + id + "'");
    return it->second;
  }

  static void check_connected(const Graph& g) {
    std::vector<char> seen(g.num_vertices(), 0);
    std::vector<VertexId> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      VertexId v = stack.back();
      stack.pop_back();
      for (EdgeId e : g.incident_[v]) {
        VertexId u = g.edges_[e].other(v);
        if (!seen[u]) {
          seen[u] = 1;
          ++count;
          stack.push_back(u);
        }
      }
    }
    if (count != g.num_vertices()) throw InputError("graph is disconnected");
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, VertexId> vertex_index_;
  std::vector<Edge> edges_;
  std::unordered_map<std::string, EdgeId> edge_index_;
  std::set<std::pair<VertexId, VertexId>> endpoint_pairs_;
  std::map<VertexId, std::vector<EdgeId>> rotation_;
  std::vector<VertexId> marks_;
  std::optional<Dart> outer_anchor_;
};

// ---------------------------------------------------------------------------
// Graph file format

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline double parse_probability(const std::string& tok, std::size_t line_no) {
  std::size_t used = 0;
  double p = 0;
  try {
    p = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size())
    throw InputError("line " + std::to_string(line_no) + ": bad probability '" + tok + "'");
  return p;
}

}  // namespace detail

inline Graph parse_graph(std::string_view text) {
  struct Line {
    std::size_t no;
    std::vector<std::string> tok;
  };
  std::vector<Line> lines;
  {
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t no = 0;
    while (std::getline(in, raw)) {
      ++no;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      auto tok = detail::split_ws(raw);
      if (!tok.empty()) lines.push_back({no, std::move(tok)});
    }
  }

  auto fail = [](std::size_t no, const std::string& msg) -> InputError {
    return InputError("line " + std::to_string(no) + ": " + msg);
  };

  GraphBuilder b;
  // Vertices first so later directives may reference them in any order.
  for (const auto& l : lines) {
    const auto& d = l.tok[0];
    if (d == "vertex") {
      if (l.tok.size() != 2) throw fail(l.no, "expected 'vertex <name>'");
      try {
        b.add_vertex(l.tok[1]);
      } catch (const InputError& e) {
        throw fail(l.no, e.what());
      }
    } else if (d != "edge" && d != "rotation" && d != "outerface" && d != "mark") {
      throw fail(l.no, "unknown directive '" + d + "'");
    }
  }
  for (const auto& l : lines) {
    if (l.tok[0] != "edge") continue;
    if (l.tok.size() != 5) throw fail(l.no, "expected 'edge <id> <vertex> <vertex> <p>'");
    try {
      b.add_edge(l.tok[1], l.tok[2], l.tok[3], detail::parse_probability(l.tok[4], l.no));
    } catch (const InputError& e) {
      throw fail(l.no, e.what());
    }
  }
  bool have_marks = false;
  for (const auto& l : lines) {
    const auto& d = l.tok[0];
    try {
      if (d == "rotation") {
        if (l.tok.size() < 2) throw fail(l.no, "expected 'rotation <vertex> <edge-id> ...'");
        b.set_rotation(l.tok[1], {l.tok.begin() + 2, l.tok.end()});
      } else if (d == "outerface") {
        if (l.tok.size() != 3) throw fail(l.no, "expected 'outerface <edge-id> <vertex>'");
        b.set_outer_anchor(l.tok[1], l.tok[2]);
      } else if (d == "mark") {
        if (have_marks) throw fail(l.no, "duplicate 'mark' directive");
        if (l.tok.size() < 3 || l.tok.size() > 4)
          throw fail(l.no, "expected 'mark <vertex> <vertex> [<vertex>]'");
        b.set_marks({l.tok.begin() + 1, l.tok.end()});
        have_marks = true;
      }
    } catch (const InputError& e) {
      std::string msg = e.what();
      if (msg.rfind("line ", 0) == 0) throw;
      throw fail(l.no, msg);
    }
  }
  if (!have_marks) throw InputError("missing 'mark' directive");
  return b.build();
}

inline Graph load_graph_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open graph file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_graph(ss.str());
}

inline std::string format_graph(const Graph& g) {
  std::ostringstream out;
  out.precision(17);
  for (VertexId v = 0; v < g.num_vertices(); ++v) out << "vertex " << g.name(v) << "\n";
  for (const auto& e : g.edges())
    out << "edge " << e.id << " " << g.name(e.u) << " " << g.name(e.v) << " " << e.p << "\n";
  if (g.has_rotation()) {
    for (VertexId v = 0; v < g.num_vertices(); ++v) {
      out << "rotation " << g.name(v);
      for (EdgeId e : g.rotation(v)) out << " " << g.edge(e).id;
      out << "\n";
    }
  }
  if (g.outer_anchor())
    out << "outerface " << g.edge(g.outer_anchor()->edge).id << " "
        << g.name(g.outer_anchor()->from) << "\n";
  out << "mark";
  for (VertexId m : g.marks()) out << " " << g.name(m);
  out << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Clusters

// Vertex labels of the open subgraph's components. Labels are assigned in
// order of first appearance, so two partitions are equal iff labels match.
struct Partition {
  std::vector<VertexId> label;
  std::size_t count = 0;

  bool same(VertexId u, VertexId v) const { return label[u] == label[v]; }
  friend bool operator==(const Partition&, const Partition&) = default;
};

class ClusterScratch {
 public:
  // Fills `labels` with canonical component labels for the open edges in `bits`.
  std::size_t compute(const Graph& g, std::uint64_t bits, std::vector<VertexId>& labels) {
    const std::size_t n = g.num_vertices();
    parent_.resize(n);
    std::iota(parent_.begin(), parent_.end(), VertexId{0});
    const auto edges = g.edges();
    while (bits) {
      int e = std::countr_zero(bits);
      bits &= bits - 1;
      VertexId a = find(edges[e].u);
      VertexId b = find(edges[e].v);
      if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }
    labels.resize(n);
    remap_.assign(n, kNone);
    std::size_t count = 0;
    for (VertexId v = 0; v < n; ++v) {
      VertexId r = find(v);
      if (remap_[r] == kNone) remap_[r] = static_cast<VertexId>(count++);
      labels[v] = remap_[r];
    }
    return count;
  }

 private:
  static constexpr VertexId kNone = ~VertexId{0};
  VertexId find(VertexId v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }
  std::vector<VertexId> parent_;
  std::vector<VertexId> remap_;
};

inline Partition clusters(const Graph& g, const Configuration& c) {
  if (c.size() != g.num_edges()) throw InputError("configuration does not match the graph's edges");
  Partition p;
  ClusterScratch scratch;
  p.count = scratch.compute(g, c.bits(), p.label);
  return p;
}

// ---------------------------------------------------------------------------
// Faces of an embedded graph

struct FaceSet {
  std::vector<std::vector<Dart>> faces;
  std::size_t outer_index = 0;
  // Face index of each dart; dart index is 2*edge + (from == edge.u ? 0 : 1).
  std::vector<std::size_t> face_of_dart;

  const std::vector<Dart>& outer() const { return faces[outer_index]; }
};

inline std::size_t dart_index(const Graph& g, Dart d) {
  return 2 * static_cast<std::size_t>(d.edge) + (d.from == g.edge(d.edge).u ? 0 : 1);
}

// Face successor: entering w along e, leave along the rotation successor of e at w.
inline Dart next_face_dart(const Graph& g, Dart d) {
  VertexId w = g.edge(d.edge).other(d.from);
  return Dart{g.rotation_successor(d.edge, w), w};
}

namespace detail {

inline FaceSet trace_faces(const Graph& g) {
  if (!g.has_rotation()) throw InputError("graph has no rotation system");
  FaceSet fs;
  const std::size_t nd = 2 * g.num_edges();
  constexpr std::size_t kUnset = ~std::size_t{0};
  fs.face_of_dart.assign(nd, kUnset);
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    for (VertexId from : {g.edge(e).u, g.edge(e).v}) {
      Dart start{e, from};
      if (fs.face_of_dart[dart_index(g, start)] != kUnset) continue;
      std::vector<Dart> face;
      Dart d = start;
      do {
        fs.face_of_dart[dart_index(g, d)] = fs.faces.size();
        face.push_back(d);
        d = next_face_dart(g, d);
      } while (!(d == start));
      fs.faces.push_back(std::move(face));
    }
  }
  return fs;
}

}  // namespace detail

inline FaceSet faces(const Graph& g) {
  if (!g.has_rotation()) throw InputError("graph has no rotation system");
  if (!g.outer_anchor()) throw InputError("graph has no outer face anchor");
  FaceSet fs = detail::trace_faces(g);
  fs.outer_index = fs.face_of_dart[dart_index(g, *g.outer_anchor())];
  return fs;
}

enum class FaceScope { outer, any };

inline bool same_face(const Graph& g, std::span<const VertexId> vs, FaceScope which) {
  FaceSet fs = faces(g);
  auto on_face = [&](const std::vector<Dart>& face) {
    return std::all_of(vs.begin(), vs.end(), [&](VertexId v) {
      return std::any_of(face.begin(), face.end(), [&](const Dart& d) { return d.from == v; });
    });
  };
  if (which == FaceScope::outer) return on_face(fs.outer());
  return std::any_of(fs.faces.begin(), fs.faces.end(), on_face);
}

// ---------------------------------------------------------------------------
// Generated families

struct Point {
  double x = 0;
  double y = 0;
};

namespace detail {

// Clockwise rotation from a straight-line drawing, and an outer anchor on the
// face of most negative signed area (the successor rule traces the outer
// face clockwise when inner faces come out counterclockwise).
inline void embed_from_coordinates(GraphBuilder& b, const Graph& g, const std::vector<Point>& pt) {
  for (VertexId v = 0; v < g.num_vertices(); ++v) {
    std::vector<EdgeId> inc(g.incident(v).begin(), g.incident(v).end());
    auto angle = [&](EdgeId e) {
      VertexId u = g.edge(e).other(v);
      return std::atan2(pt[u].y - pt[v].y, pt[u].x - pt[v].x);
    };
    std::sort(inc.begin(), inc.end(), [&](EdgeId x, EdgeId y) { return angle(x) > angle(y); });
    b.set_rotation(v, inc);
  }
  Graph rotated = b.build();
  FaceSet fs = trace_faces(rotated);
  std::size_t best = 0;
  double best_area = 0;
  for (std::size_t f = 0; f < fs.faces.size(); ++f) {
    double area = 0;
    for (const Dart& d : fs.faces[f]) {
      VertexId to = rotated.edge(d.edge).other(d.from);
      area += pt[d.from].x * pt[to].y - pt[to].x * pt[d.from].y;
    }
    if (f == 0 || area < best_area) {
      best = f;
      best_area = area;
    }
  }
  b.set_outer_anchor(fs.faces[best].front());
}

inline std::string prob_text(double p) {
  std::ostringstream o;
  o << p;
  return o.str();
}

}  // namespace detail

struct FamilySpec {
  std::string name;
  std::vector<int> args;
  std::optional<double> p;
  std::optional<double> q;  // per-route probability for parallel(n)

  std::string descriptor() const {
    std::string s = name + ":";
    for (std::size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + std::to_string(args[i]);
    if (p) s += ",p=" + detail::prob_text(*p);
    if (q) s += ",q=" + detail::prob_text(*q);
    return s;
  }
};

// "grid:5,5,p=0.5" (the leading "family:" is optional).
inline FamilySpec parse_family(std::string_view text) {
  std::string s(text);
  if (s.rfind("family:", 0) == 0) s = s.substr(7);
  auto colon = s.find(':');
  if (colon == std::string::npos) throw InputError("family spec needs '<name>:<params>': " + s);
  FamilySpec f;
  f.name = s.substr(0, colon);
  std::stringstream rest(s.substr(colon + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    try {
      std::size_t used = 0;
      if (item.rfind("p=", 0) == 0) {
        f.p = std::stod(item.substr(2), &used);
        used += 2;
      } else if (item.rfind("q=", 0) == 0) {
        f.q = std::stod(item.substr(2), &used);
        used += 2;
      } else {
        f.args.push_back(std::stoi(item, &used));
      }
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("bad family parameter '" + item + "'");
    }
  }
  return f;
}

inline Graph generate(const FamilySpec& f) {
  auto need_args = [&](std::size_t n) {
    if (f.args.size() != n)
      throw InputError("family '" + f.name + "' expects " + std::to_string(n) + " integer parameter(s)");
  };
  double p = 0.5;
  if (f.q) {
    if (f.name != "parallel") throw InputError("q= is only defined for parallel(n)");
    if (!(*f.q >= 0 && *f.q <= 1)) throw InputError("q outside [0,1]");
    p = std::sqrt(*f.q);
  } else if (f.p) {
    p = *f.p;
  } else {
    throw InputError("family '" + f.name + "' needs p=<prob>");
  }
  if (!(p >= 0 && p <= 1)) throw InputError("p outside [0,1]");

  GraphBuilder b;
  std::vector<Point> pt;
  int edge_no = 0;
  auto vertex = [&](const std::string& name, Point at) {
    b.add_vertex(name);
    pt.push_back(at);
  };
  auto edge = [&](const std::string& u, const std::string& v) {
    b.add_edge("e" + std::to_string(++edge_no), u, v, p);
  };
  bool planar = true;
  const double pi = std::acos(-1.0);

  if (f.name == "path") {
    need_args(1);
    int n = f.args[0];
    if (n < 1) throw InputError("path(n) needs n >= 1");
    std::vector<std::string> names(n + 1);
    names[0] = "a";
    names[n] = "b";
    for (int i = 1; i < n; ++i) names[i] = "x" + std::to_string(i);
    if (n >= 2) names[n / 2] = "c";
    for (int i = 0; i <= n; ++i) vertex(names[i], {double(i), 0});
    for (int i = 0; i < n; ++i) edge(names[i], names[i + 1]);
    if (n >= 2)
      b.set_marks({"a", "b", "c"});
    else
      b.set_marks({"a", "b"});
  } else if (f.name == "cycle") {
    need_args(1);
    int n = f.args[0];
    if (n < 3) throw InputError("cycle(n) needs n >= 3");
    std::vector<std::string> names(n);
    for (int i = 0; i < n; ++i) names[i] = "v" + std::to_string(i);
    names[0] = "a";
    names[n / 3] = "b";
    names[(2 * n) / 3] = "c";
    for (int i = 0; i < n; ++i)
      vertex(names[i], {std::cos(pi / 2 - 2 * pi * i / n), std::sin(pi / 2 - 2 * pi * i / n)});
    for (int i = 0; i < n; ++i) edge(names[i], names[(i + 1) % n]);
    b.set_marks({"a", "b", "c"});
  } else if (f.name == "grid") {
    need_args(2);
    int w = f.args[0], h = f.args[1];
    if (w < 2 || h < 2) throw InputError("grid(w,h) needs w, h >= 2");
    auto name = [&](int i, int j) {
      if (i == 0 && j == 0) return std::string("a");
      if (i == w - 1 && j == h - 1) return std::string("b");
      if (i == w - 1 && j == 0) return std::string("c");
      return "v" + std::to_string(i) + "_" + std::to_string(j);
    };
    for (int j = 0; j < h; ++j)
      for (int i = 0; i < w; ++i) vertex(name(i, j), {double(i), -double(j)});
    for (int j = 0; j < h; ++j)
      for (int i = 0; i + 1 < w; ++i) edge(name(i, j), name(i + 1, j));
    for (int j = 0; j + 1 < h; ++j)
      for (int i = 0; i < w; ++i) edge(name(i, j), name(i, j + 1));
    b.set_marks({"a", "b", "c"});
  } else if (f.name == "theta") {
    // Paths of lengths 1..k between a and b, nested so the longest is outermost.
    need_args(1);
    int k = f.args[0];
    if (k < 2) throw InputError("theta(k) needs k >= 2");
    vertex("a", {0, 0});
    vertex("b", {1, 0});
    edge("a", "b");
    for (int len = 2; len <= k; ++len) {
      std::vector<std::string> names{"a"};
      for (int j = 1; j < len; ++j) {
        std::string nm = (len == k && j == len / 2) ? "c" : "t" + std::to_string(len) + "_" + std::to_string(j);
        vertex(nm, {double(j) / len, double(len - 1)});
        names.push_back(nm);
      }
      names.push_back("b");
      for (std::size_t j = 0; j + 1 < names.size(); ++j) edge(names[j], names[j + 1]);
    }
    b.set_marks({"a", "b", "c"});
  } else if (f.name == "parallel") {
    need_args(1);
    int n = f.args[0];
    if (n < 1) throw InputError("parallel(n) needs n >= 1");
    vertex("a", {0, 0});
    vertex("b", {2, 0});
    for (int i = 1; i <= n; ++i) {
      std::string m = "m" + std::to_string(i);
      vertex(m, {1, double(i) - (n + 1) / 2.0});
      edge("a", m);
      edge(m, "b");
    }
    b.set_marks({"a", "b"});
  } else if (f.name == "complete") {
    need_args(1);
    int n = f.args[0];
    if (n < 3) throw InputError("complete(n) needs n >= 3");
    std::vector<std::string> names(n);
    for (int i = 0; i < n; ++i) names[i] = "v" + std::to_string(i);
    names[0] = "a";
    names[1] = "b";
    names[2] = "c";
    for (int i = 0; i < n; ++i) vertex(names[i], {0, 0});
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) edge(names[i], names[j]);
    b.set_marks({"a", "b", "c"});
    planar = false;
  } else {
    throw InputError("unknown graph family '" + f.name + "'");
  }

  if (planar) {
    Graph plain = b.build();
    detail::embed_from_coordinates(b, plain, pt);
  }
  return b.build();
}

inline Graph generate(std::string_view spec) { return generate(parse_family(spec)); }

// "family:<spec>" or a path to a graph file.
inline Graph load_graph(const std::string& source) {
  if (source.rfind("family:", 0) == 0) return generate(source);
  return load_graph_file(source);
}

inline std::string graph_descriptor(const std::string& source) {
  if (source.rfind("family:", 0) == 0) return parse_family(source).descriptor();
  auto slash = source.find_last_of('/');
  std::string base = slash == std::string::npos ? source : source.substr(slash + 1);
  if (auto dot = base.rfind('.'); dot != std::string::npos && dot > 0) base.erase(dot);
  return base;
}

}  // namespace dtperc
