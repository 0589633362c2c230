#pragma once

// Discrete distance to the boundary on a network grid.
//
// The upwind scheme
//     max_{y ~ x} (delta(x) - delta(y)) / Dist(x, y) = 1 / eta(x),   delta = 0 on the boundary
// has the explicit solution "cheapest discrete path to the boundary" where a
// step x -> y costs Dist(x, y) * eta^-1(x), eta^-1 taken on the edge carrying
// the step. solve() computes it in increasing-delta order (fast marching on a
// 1-D complex is Dijkstra). Ties between adjacent nodes are then split by a
// midpoint so that every forward difference has a definite sign.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sandnet/network.hpp"

namespace sandnet {

using NodeId = std::uint32_t;

struct Tolerances {
  double tie = 1e-12;       // relative, scaled by 1 + max|delta|
  double residual = 1e-12;  // discrete eikonal residual
  double flux = 1e-12;      // relative, scaled by 1 + max|v|

  /// Defaults, all overridden by SANDNET_TOL when that variable holds a
  /// positive number.
  static Tolerances from_env() {
    Tolerances tol;
    if (const char* env = std::getenv("SANDNET_TOL")) {
      char* end = nullptr;
      double v = std::strtod(env, &end);
      if (end != env && v > 0.0 && std::isfinite(v)) tol.tie = tol.residual = tol.flux = v;
    }
    return tol;
  }
};

/// Nodes of one closed edge. Index 0 is the start vertex, the last index the
/// end vertex. Expressions are sampled once at build time.
struct EdgeGrid {
  std::vector<double> s;        // arclength, strictly increasing, s.front() == 0, s.back() == length
  std::vector<NodeId> nodes;    // global node ids
  std::vector<double> eta_inv;  // eta^-1 at s
  std::vector<double> source;   // f at s

  std::size_t size() const { return s.size(); }
  std::size_t last() const { return s.size() - 1; }
  double step(std::size_t m) const { return s[m + 1] - s[m]; }
  std::size_t index_of(EdgeEnd e) const { return e == EdgeEnd::Start ? 0 : last(); }
};

struct NodeLocation {
  EdgeId edge;
  std::size_t index = 0;
};

struct Neighbor {
  NodeId node;
  EdgeId edge;
  std::size_t from;  // index of the origin node on `edge`
  std::size_t to;    // index of the neighbor on `edge`
  double dist;
};

class Grid {
 public:
  Grid() = default;

  /// Uniform partition t_m = m * h_j, h_j = length / (M_j + 1), of every edge.
  explicit Grid(const Network& net) : vertex_count_(net.vertex_count()) {
    boundary_.resize(vertex_count_);
    incidence_.resize(vertex_count_);
    for (std::size_t i = 0; i < vertex_count_; ++i) {
      boundary_[i] = net.vertices()[i].is_boundary();
      incidence_[i] = net.incidence(VertexId(i));
    }
    NodeId next = static_cast<NodeId>(vertex_count_);
    edges_.resize(net.edge_count());
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
      const Edge& e = net.edges()[j];
      if (e.interior_nodes < 1) throw std::invalid_argument("edge " + std::to_string(e.label) + " has no interior node");
      std::size_t cells = static_cast<std::size_t>(e.interior_nodes) + 1;
      EdgeGrid& g = edges_[j];
      g.s.resize(cells + 1);
      g.nodes.resize(cells + 1);
      for (std::size_t m = 0; m <= cells; ++m) g.s[m] = m == cells ? e.length : e.length * static_cast<double>(m) / cells;
      g.nodes.front() = *e.start;
      g.nodes.back() = *e.end;
      for (std::size_t m = 1; m < cells; ++m) g.nodes[m] = next++;
      g.eta_inv.resize(cells + 1);
      g.source.resize(cells + 1);
      for (std::size_t m = 0; m <= cells; ++m) {
        g.eta_inv[m] = e.eta_inv_at(g.s[m]);
        g.source[m] = e.source_at(g.s[m]);
      }
      nominal_step_ = std::max(nominal_step_, e.length / cells);
    }
    reindex();
  }

  std::size_t node_count() const { return locations_.size(); }
  std::size_t vertex_count() const { return vertex_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  bool is_vertex(NodeId n) const { return n < vertex_count_; }
  bool is_boundary(NodeId n) const { return is_vertex(n) && boundary_[n]; }
  static NodeId vertex_node(VertexId v) { return v.value; }
  const EdgeGrid& edge(EdgeId j) const { return edges_.at(*j); }
  const std::vector<EdgeGrid>& edges() const { return edges_; }
  const std::vector<Incidence>& incidence(VertexId v) const { return incidence_.at(*v); }

  /// Edge and index of an interior node.
  NodeLocation locate(NodeId n) const { return locations_.at(n); }

  /// Largest step of the uniform partition, before any tie refinement.
  double nominal_step() const { return nominal_step_; }

  double max_step() const {
    double h = 0.0;
    for (const auto& g : edges_)
      for (std::size_t m = 0; m + 1 < g.size(); ++m) h = std::max(h, g.step(m));
    return h;
  }

  template <class F>
  void for_each_neighbor(NodeId n, F&& visit) const {
    auto emit = [&](EdgeId j, std::size_t from, std::size_t to) {
      const EdgeGrid& g = edges_[*j];
      visit(Neighbor{g.nodes[to], j, from, to, std::fabs(g.s[to] - g.s[from])});
    };
    if (is_vertex(n)) {
      for (const auto& inc : incidence_[n]) {
        const EdgeGrid& g = edges_[*inc.edge];
        std::size_t at = g.index_of(inc.end);
        emit(inc.edge, at, inc.end == EdgeEnd::Start ? 1 : g.last() - 1);
      }
    } else {
      const NodeLocation& loc = locations_[n];
      emit(loc.edge, loc.index, loc.index - 1);
      emit(loc.edge, loc.index, loc.index + 1);
    }
  }

  std::vector<Neighbor> neighbors(NodeId n) const {
    std::vector<Neighbor> out;
    for_each_neighbor(n, [&](const Neighbor& nb) { out.push_back(nb); });
    return out;
  }

  /// Inserts midpoints after the listed cell indices of edge j. New nodes get
  /// fresh ids after the current ones; `fill` receives the new node, its edge
  /// and the index it ends up at.
  void split_cells(const Network& net, EdgeId j, const std::vector<std::size_t>& cells,
                   const std::function<void(NodeId, EdgeId, std::size_t)>& fill) {
    if (cells.empty()) return;
    const Edge& e = net.edge(j);
    EdgeGrid& old = edges_.at(*j);
    EdgeGrid g;
    std::size_t next = 0;
    std::vector<std::pair<NodeId, std::size_t>> created;
    NodeId fresh = static_cast<NodeId>(locations_.size() + pending_);
    for (std::size_t m = 0; m < old.size(); ++m) {
      g.s.push_back(old.s[m]);
      g.nodes.push_back(old.nodes[m]);
      g.eta_inv.push_back(old.eta_inv[m]);
      g.source.push_back(old.source[m]);
      if (next < cells.size() && cells[next] == m) {
        double mid = 0.5 * (old.s[m] + old.s[m + 1]);
        g.s.push_back(mid);
        g.nodes.push_back(fresh);
        g.eta_inv.push_back(e.eta_inv_at(mid));
        g.source.push_back(e.source_at(mid));
        created.emplace_back(fresh, g.size() - 1);
        ++fresh;
        ++next;
      }
    }
    old = std::move(g);
    pending_ += created.size();
    reindex();
    for (auto [node, index] : created) fill(node, j, index);
  }

 private:
  void reindex() {
    std::size_t total = vertex_count_;
    for (const auto& g : edges_) total += g.size() - 2;
    locations_.assign(total, NodeLocation{});
    for (std::size_t j = 0; j < edges_.size(); ++j) {
      const EdgeGrid& g = edges_[j];
      for (std::size_t m = 1; m + 1 < g.size(); ++m) locations_.at(g.nodes[m]) = {EdgeId(j), m};
    }
    pending_ = 0;
  }

  std::size_t vertex_count_ = 0;
  std::vector<bool> boundary_;
  std::vector<std::vector<Incidence>> incidence_;
  std::vector<EdgeGrid> edges_;
  std::vector<NodeLocation> locations_;
  std::size_t pending_ = 0;
  double nominal_step_ = 0.0;
};

/// Grid with the requested interior node counts.
inline Grid build_grid(const Network& net) { return Grid(net); }

struct DistanceField {
  std::vector<double> delta;           // per node id
  std::vector<NodeId> accepted_order;  // order in which solve() froze the nodes

  double at(const EdgeGrid& g, std::size_t m) const { return delta[g.nodes[m]]; }
  double max() const { return delta.empty() ? 0.0 : *std::max_element(delta.begin(), delta.end()); }
};

/// Fast-marching solve of the upwind scheme.
inline DistanceField solve(const Network& net, const Grid& grid) {
  const double inf = std::numeric_limits<double>::infinity();
  DistanceField field;
  field.delta.assign(grid.node_count(), inf);
  field.accepted_order.reserve(grid.node_count());
  std::vector<bool> frozen(grid.node_count(), false);

  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    if (!net.vertices()[i].is_boundary()) continue;
    field.delta[i] = 0.0;
    heap.emplace(0.0, static_cast<NodeId>(i));
  }

  while (!heap.empty()) {
    auto [d, n] = heap.top();
    heap.pop();
    if (frozen[n] || d > field.delta[n]) continue;
    frozen[n] = true;
    field.accepted_order.push_back(n);
    grid.for_each_neighbor(n, [&](const Neighbor& nb) {
      if (frozen[nb.node] || grid.is_boundary(nb.node)) return;
      // the step runs from nb.node down to n; its cost uses eta at nb.node
      double cand = d + nb.dist * grid.edge(nb.edge).eta_inv[nb.to];
      if (cand < field.delta[nb.node]) {
        field.delta[nb.node] = cand;
        heap.emplace(cand, nb.node);
      }
    });
  }
  if (field.accepted_order.size() != grid.node_count())
    throw std::runtime_error("fast marching reached " + std::to_string(field.accepted_order.size()) + " of " +
                             std::to_string(grid.node_count()) + " nodes; the network is disconnected");
  return field;
}

/// Worst |max_y (delta(x) - delta(y)) / Dist(x, y) - eta^-1(x)| over non-boundary nodes.
inline double eikonal_residual(const Grid& grid, const DistanceField& field) {
  double worst = 0.0;
  for (NodeId n = 0; n < grid.node_count(); ++n) {
    if (grid.is_boundary(n)) continue;
    double best = -std::numeric_limits<double>::infinity();
    grid.for_each_neighbor(n, [&](const Neighbor& nb) {
      double slope = (field.delta[n] - field.delta[nb.node]) / nb.dist;
      best = std::max(best, slope - grid.edge(nb.edge).eta_inv[nb.from]);
    });
    worst = std::max(worst, std::fabs(best));
  }
  return worst;
}

inline double tie_threshold(const DistanceField& field, const Tolerances& tol) {
  double scale = 0.0;
  for (double d : field.delta) scale = std::max(scale, std::fabs(d));
  return tol.tie * (1.0 + scale);
}

/// Splits every cell whose endpoints carry equal delta (within the tie
/// threshold) at its midpoint and assigns delta(mid) = delta + step/2 * eta^-1(mid).
/// Returns the number of inserted nodes.
inline std::size_t enlarge_ties(const Network& net, Grid& grid, DistanceField& field, const Tolerances& tol = {}) {
  const double threshold = tie_threshold(field, tol);
  std::size_t inserted = 0;
  for (std::size_t j = 0; j < grid.edge_count(); ++j) {
    const EdgeGrid& g = grid.edge(EdgeId(j));
    std::vector<std::size_t> cells;
    std::vector<std::pair<double, double>> base;  // (max delta, half step) per split cell
    for (std::size_t m = 0; m + 1 < g.size(); ++m) {
      double a = field.at(g, m), b = field.at(g, m + 1);
      if (std::fabs(a - b) <= threshold) {
        cells.push_back(m);
        base.emplace_back(std::max(a, b), 0.5 * g.step(m));
      }
    }
    if (cells.empty()) continue;
    std::size_t k = 0;
    grid.split_cells(net, EdgeId(j), cells, [&](NodeId node, EdgeId edge, std::size_t index) {
      if (field.delta.size() <= node) field.delta.resize(node + 1);
      field.delta[node] = base[k].first + base[k].second * grid.edge(edge).eta_inv[index];
      ++k;
    });
    inserted += cells.size();
  }
  return inserted;
}

// ---------------------------------------------------------------------------
// Slopes, singular sets, projection sets and the edge partition

struct EdgeShape {
  std::vector<std::int8_t> slope;      // sign of each forward difference, one per cell
  std::optional<std::size_t> singular;  // node index of the interior maximum, if any
  std::optional<EdgeEnd> top;           // endpoint where the edge leaves its vertex downhill
  bool regular = true;                  // sign pattern is (+..+), (-..-) or (+..+-..-)

  /// Node index of the single point of the projection set.
  std::size_t peak(const EdgeGrid& g) const {
    if (singular) return *singular;
    return top == EdgeEnd::Start ? 0 : g.last();
  }
};

struct VertexSlopes {
  std::vector<std::pair<EdgeId, int>> sigma;  // slope of delta leaving the vertex along each edge
  std::vector<EdgeId> inc_plus;
  std::vector<EdgeId> inc_minus;
  bool local_max = false;  // transition vertex without uphill edges

  int sigma_of(EdgeId j) const {
    for (auto [e, s] : sigma)
      if (e == j) return s;
    return 0;
  }
};

struct EdgePartition {
  std::vector<int> level;               // class index, -1 when never reached
  std::vector<bool> interior_singular;  // E0'
  std::vector<bool> max_endpoint;       // E0''
  std::vector<std::vector<EdgeId>> classes;
};

struct Structure {
  std::vector<EdgeShape> edges;
  std::vector<VertexSlopes> vertices;
  EdgePartition partition;

  std::size_t interior_singular_count() const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [](const EdgeShape& e) { return e.singular.has_value(); }));
  }
  std::size_t max_vertex_count() const {
    return static_cast<std::size_t>(
        std::count_if(vertices.begin(), vertices.end(), [](const VertexSlopes& v) { return v.local_max; }));
  }
  /// #S(d^h): interior maxima plus vertex maxima.
  std::size_t singular_count() const { return interior_singular_count() + max_vertex_count(); }
};

inline Structure classify(const Network& net, const Grid& grid, const DistanceField& field) {
  Structure st;
  st.edges.resize(net.edge_count());
  st.vertices.resize(net.vertex_count());

  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const EdgeGrid& g = grid.edge(EdgeId(j));
    EdgeShape& shape = st.edges[j];
    shape.slope.resize(g.size() - 1);
    for (std::size_t m = 0; m + 1 < g.size(); ++m) shape.slope[m] = field.at(g, m + 1) > field.at(g, m) ? 1 : -1;
    for (std::size_t m = 1; m < shape.slope.size(); ++m) {
      if (shape.slope[m] == shape.slope[m - 1]) continue;
      if (shape.slope[m - 1] < 0 || shape.singular) shape.regular = false;  // local minimum or second maximum
      if (!shape.singular && shape.slope[m - 1] > 0) shape.singular = m;
    }
    bool start_down = shape.slope.front() < 0;
    bool end_down = shape.slope.back() > 0;
    if (start_down && end_down) shape.regular = false;
    if (!shape.singular) {
      if (end_down) shape.top = EdgeEnd::End;
      else if (start_down) shape.top = EdgeEnd::Start;
    }

    const Edge& e = net.edges()[j];
    int sigma_start = shape.slope.front();
    int sigma_end = -shape.slope.back();
    st.vertices[*e.start].sigma.emplace_back(EdgeId(j), sigma_start);
    st.vertices[*e.end].sigma.emplace_back(EdgeId(j), sigma_end);
  }

  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    VertexSlopes& vs = st.vertices[i];
    for (auto [j, s] : vs.sigma) (s > 0 ? vs.inc_plus : vs.inc_minus).push_back(j);
    vs.local_max = !net.vertices()[i].is_boundary() && vs.inc_plus.empty();
  }

  // Partition: E0 = edges holding an interior maximum or touching a vertex
  // maximum; E_m = edges sharing a transition vertex with E_{m-1}.
  EdgePartition& part = st.partition;
  part.level.assign(net.edge_count(), -1);
  part.interior_singular.assign(net.edge_count(), false);
  part.max_endpoint.assign(net.edge_count(), false);
  std::vector<EdgeId> current;
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const Edge& e = net.edges()[j];
    part.interior_singular[j] = st.edges[j].singular.has_value();
    part.max_endpoint[j] = st.vertices[*e.start].local_max || st.vertices[*e.end].local_max;
    if (part.interior_singular[j] || part.max_endpoint[j]) {
      part.level[j] = 0;
      current.push_back(EdgeId(j));
    }
  }
  int level = 0;
  while (!current.empty()) {
    part.classes.push_back(current);
    std::vector<EdgeId> next;
    for (EdgeId k : current) {
      const Edge& e = net.edge(k);
      for (VertexId v : {e.start, e.end}) {
        if (net.vertex(v).is_boundary()) continue;
        for (const auto& inc : net.incidence(v)) {
          if (part.level[*inc.edge] >= 0) continue;
          part.level[*inc.edge] = level + 1;
          next.push_back(inc.edge);
        }
      }
    }
    std::sort(next.begin(), next.end());
    current = std::move(next);
    ++level;
  }
  return st;
}

struct Projection {
  std::size_t steps = 0;   // number of cells walked
  std::size_t target = 0;  // node index reached
  double s = 0.0;          // arclength of the reached node
  int direction = 0;       // +1 towards the end vertex, -1 towards the start, 0 if already there
};

/// Walks from node m of edge j uphill until the projection set is reached.
inline Projection project(const Grid& grid, const Structure& st, EdgeId j, std::size_t m) {
  const EdgeGrid& g = grid.edge(j);
  const EdgeShape& shape = st.edges.at(*j);
  const std::size_t goal = shape.peak(g);
  Projection p;
  if (m == goal) {
    p.target = m;
    p.s = g.s[m];
    return p;
  }
  p.direction = m < shape.slope.size() ? shape.slope[m] : shape.slope.back();
  std::size_t at = m;
  while (at != goal) {
    if ((p.direction < 0 && at == 0) || (p.direction > 0 && at == g.last()))
      throw std::logic_error("projection walk left the edge; the slope pattern is irregular");
    at = p.direction > 0 ? at + 1 : at - 1;
    ++p.steps;
  }
  p.target = at;
  p.s = g.s[at];
  return p;
}

/// Grid, solved and tie-refined distance, and its classification.
struct DistanceSolution {
  Grid grid;
  DistanceField field;
  Structure structure;
  std::size_t inserted = 0;
};

inline DistanceSolution solve_distance(const Network& net, const Tolerances& tol = {}) {
  DistanceSolution sol;
  sol.grid = build_grid(net);
  sol.field = solve(net, sol.grid);
  sol.inserted = enlarge_ties(net, sol.grid, sol.field, tol);
  sol.structure = classify(net, sol.grid, sol.field);
  return sol;
}

}  // namespace sandnet
