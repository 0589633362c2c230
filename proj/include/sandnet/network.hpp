#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sandnet/expr.hpp"

namespace sandnet {

/// Dense zero-based index with a tag so vertex and edge ids do not mix.
template <class Tag>
struct Index {
  std::uint32_t value = 0;

  constexpr Index() = default;
  constexpr explicit Index(std::size_t v) : value(static_cast<std::uint32_t>(v)) {}
  constexpr std::size_t operator*() const { return value; }
  friend constexpr auto operator<=>(Index, Index) = default;
};

using VertexId = Index<struct VertexTag>;
using EdgeId = Index<struct EdgeTag>;

enum class VertexKind : std::uint8_t { Boundary, Transition };
enum class EdgeEnd : std::uint8_t { Start, End };

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Vertex {
  int label = 0;  // id as written in the .net file
  Point position;
  VertexKind kind = VertexKind::Transition;

  bool is_boundary() const { return kind == VertexKind::Boundary; }
};

/// An edge parametrized by arclength s in [0, length], start at s = 0.
/// Source and inverse slope bound are given on the normalized parameter
/// t = s / length.
struct Edge {
  int label = 0;
  VertexId start;
  VertexId end;
  double length = 1.0;
  Expr source{0.0};
  Expr eta_inv{1.0};
  int interior_nodes = 1;

  double source_at(double s) const { return source(s / length); }
  double eta_inv_at(double s) const { return eta_inv(s / length); }
  VertexId vertex(EdgeEnd e) const { return e == EdgeEnd::Start ? start : end; }
  VertexId opposite(VertexId v) const { return v == start ? end : start; }
};

struct Incidence {
  EdgeId edge;
  EdgeEnd end;  // which end of `edge` touches the vertex
};

/// Immutable network. Construction only checks that endpoint indices exist;
/// everything else is reported by validate().
class Network {
 public:
  Network() = default;

  Network(std::vector<Vertex> vertices, std::vector<Edge> edges)
      : vertices_(std::move(vertices)), edges_(std::move(edges)), incidence_(vertices_.size()) {
    for (std::size_t j = 0; j < edges_.size(); ++j) {
      const Edge& e = edges_[j];
      if (*e.start >= vertices_.size() || *e.end >= vertices_.size())
        throw std::out_of_range("edge " + std::to_string(e.label) + " references a missing vertex");
      incidence_[*e.start].push_back({EdgeId(j), EdgeEnd::Start});
      incidence_[*e.end].push_back({EdgeId(j), EdgeEnd::End});
    }
  }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Vertex& vertex(VertexId v) const { return vertices_.at(*v); }
  const Edge& edge(EdgeId e) const { return edges_.at(*e); }
  const std::vector<Incidence>& incidence(VertexId v) const { return incidence_.at(*v); }
  std::size_t degree(VertexId v) const { return incidence_.at(*v).size(); }

  std::size_t boundary_count() const {
    return static_cast<std::size_t>(
        std::count_if(vertices_.begin(), vertices_.end(), [](const Vertex& v) { return v.is_boundary(); }));
  }

  std::optional<VertexId> find_vertex(int label) const {
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      if (vertices_[i].label == label) return VertexId(i);
    return std::nullopt;
  }

  std::optional<EdgeId> find_edge(int label) const {
    for (std::size_t j = 0; j < edges_.size(); ++j)
      if (edges_[j].label == label) return EdgeId(j);
    return std::nullopt;
  }

  /// Copy with every edge's interior node count replaced.
  Network with_interior_nodes(const std::function<int(const Edge&)>& nodes) const {
    auto edges = edges_;
    for (auto& e : edges) e.interior_nodes = nodes(e);
    return Network(vertices_, std::move(edges));
  }

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> incidence_;
};

inline double euclidean(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind : std::uint8_t {
  NoBoundary,
  Disconnected,
  LeafNotBoundary,
  SelfLoop,
  DuplicateEdge,
  BadLength,
  BadGrid,
  EtaNotPositive,
  SourceNegative,
  EvaluationFailed,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind k) const {
    return std::any_of(violations.begin(), violations.end(), [k](const Violation& v) { return v.kind == k; });
  }
  std::string summary() const {
    std::string out;
    for (const auto& v : violations) out += v.message + "\n";
    return out;
  }
};

/// Checks the standing assumptions on a network. Expressions are sampled at
/// `samples` equispaced points per edge (endpoints included) and at the
/// uniform grid nodes of the edge.
inline ValidationReport validate(const Network& net, int samples = 1000) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string msg) { report.violations.push_back({k, std::move(msg)}); };

  if (net.vertex_count() == 0) {
    add(ViolationKind::NoBoundary, "network has no vertices");
    return report;
  }
  if (net.boundary_count() == 0) add(ViolationKind::NoBoundary, "no boundary vertex");

  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    const Vertex& v = net.vertices()[i];
    if (net.degree(VertexId(i)) == 1 && !v.is_boundary())
      add(ViolationKind::LeafNotBoundary,
          "vertex " + std::to_string(v.label) + " has degree 1 but is not a boundary vertex");
  }

  // Connectivity by BFS on the undirected vertex graph.
  std::vector<bool> seen(net.vertex_count(), false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  while (!frontier.empty()) {
    std::size_t v = frontier.front();
    frontier.pop();
    for (const auto& inc : net.incidence(VertexId(v))) {
      std::size_t w = *net.edge(inc.edge).opposite(VertexId(v));
      if (!seen[w]) {
        seen[w] = true;
        frontier.push(w);
      }
    }
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) add(ViolationKind::Disconnected, "network is not connected");

  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const Edge& e : net.edges()) {
    std::string name = "edge " + std::to_string(e.label);
    if (e.start == e.end) add(ViolationKind::SelfLoop, name + " is a self-loop");
    auto key = std::minmax(e.start.value, e.end.value);
    if (!pairs.insert(key).second) add(ViolationKind::DuplicateEdge, name + " duplicates another edge between the same vertices");
    if (!(e.length > 0.0) || !std::isfinite(e.length)) add(ViolationKind::BadLength, name + " has non-positive length");
    if (e.interior_nodes < 1) add(ViolationKind::BadGrid, name + " needs at least one interior node");

    double eta_min = std::numeric_limits<double>::infinity();
    double f_min = std::numeric_limits<double>::infinity();
    try {
      auto probe = [&](double t) {
        eta_min = std::min(eta_min, e.eta_inv(t));
        f_min = std::min(f_min, e.source(t));
      };
      for (int k = 0; k < samples; ++k) probe(samples > 1 ? static_cast<double>(k) / (samples - 1) : 0.0);
      const int cells = std::max(1, e.interior_nodes + 1);
      for (int m = 1; m < cells; ++m) probe(static_cast<double>(m) / cells);
      if (!(eta_min > 0.0)) add(ViolationKind::EtaNotPositive, name + ": eta^-1 not strictly positive (min " + std::to_string(eta_min) + ")");
      if (f_min < 0.0) add(ViolationKind::SourceNegative, name + ": source is negative (min " + std::to_string(f_min) + ")");
    } catch (const EvalError& err) {
      add(ViolationKind::EvaluationFailed, name + ": " + err.what());
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Vertex metric

/// Weighted length of an edge, the integral of eta^-1 over [0, length], by
/// the composite trapezoid rule on `cells` cells (defaults to the edge grid).
inline double edge_weight(const Edge& e, int cells = 0) {
  if (cells <= 0) cells = e.interior_nodes + 1;
  double h = e.length / cells;
  double sum = 0.5 * (e.eta_inv_at(0.0) + e.eta_inv_at(e.length));
  for (int k = 1; k < cells; ++k) sum += e.eta_inv_at(k * h);
  return sum * h;
}

class DistanceMatrix {
 public:
  explicit DistanceMatrix(std::size_t n) : n_(n), data_(n * n, std::numeric_limits<double>::infinity()) {}
  double operator()(VertexId a, VertexId b) const { return data_[*a * n_ + *b]; }
  double& operator()(VertexId a, VertexId b) { return data_[*a * n_ + *b]; }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

/// All-pairs weighted shortest paths between vertices, one Dijkstra per source.
inline DistanceMatrix vertex_distance_matrix(const Network& net) {
  std::vector<double> weight(net.edge_count());
  for (std::size_t j = 0; j < net.edge_count(); ++j) weight[j] = edge_weight(net.edges()[j]);

  DistanceMatrix out(net.vertex_count());
  using Item = std::pair<double, std::size_t>;
  for (std::size_t src = 0; src < net.vertex_count(); ++src) {
    std::vector<double> dist(net.vertex_count(), std::numeric_limits<double>::infinity());
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.emplace(0.0, src);
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d > dist[v]) continue;
      for (const auto& inc : net.incidence(VertexId(v))) {
        std::size_t w = *net.edge(inc.edge).opposite(VertexId(v));
        double cand = d + weight[*inc.edge];
        if (cand < dist[w]) {
          dist[w] = cand;
          heap.emplace(cand, w);
        }
      }
    }
    for (std::size_t v = 0; v < net.vertex_count(); ++v) out(VertexId(src), VertexId(v)) = dist[v];
  }
  return out;
}

}  // namespace sandnet
