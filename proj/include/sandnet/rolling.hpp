#pragma once

// Rolling layer: on every edge, v is the trapezoid integral of f along the
// ascent walk to the projection set, plus the mass handed over at the top
// vertex when that set is a vertex.

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "sandnet/eikonal.hpp"
#include "sandnet/netfile.hpp"

namespace sandnet {

/// Transmission coefficients and vertex sources. Vertices without overrides
/// split their mass uniformly over the downhill edges.
struct TransmissionSpec {
  std::vector<Coefficient> transmission;
  std::vector<VertexSource> sources;
  std::vector<Coefficient> source_split;

  static TransmissionSpec from(const NetFile& file) { return {file.transmission, file.sources, file.source_split}; }

  double source_at(VertexId v) const {
    double g = 0.0;
    for (const auto& s : sources)
      if (s.vertex == v) g += s.value;
    return g;
  }
};

/// Coefficients of one vertex over its downhill edges, in Inc^- order.
struct VertexSplit {
  std::vector<EdgeId> edges;
  std::vector<double> transmission;
  std::vector<double> source_split;
  double source = 0.0;

  double transmission_of(EdgeId j) const { return lookup(transmission, j); }
  double source_split_of(EdgeId j) const { return lookup(source_split, j); }

 private:
  double lookup(const std::vector<double>& c, EdgeId j) const {
    for (std::size_t k = 0; k < edges.size(); ++k)
      if (edges[k] == j) return c[k];
    throw std::logic_error("edge is not downhill at this vertex");
  }
};

namespace detail {

inline std::vector<double> resolve_coefficients(const Network& net, VertexId v, const std::vector<EdgeId>& downhill,
                                                const std::vector<Coefficient>& overrides, const char* what) {
  std::vector<double> out(downhill.size(), downhill.empty() ? 0.0 : 1.0 / static_cast<double>(downhill.size()));
  std::vector<const Coefficient*> mine;
  for (const auto& c : overrides)
    if (c.vertex == v) mine.push_back(&c);
  if (mine.empty()) return out;
  auto label = std::to_string(net.vertex(v).label);
  if (mine.size() != downhill.size())
    throw std::invalid_argument(std::string(what) + " coefficients at vertex " + label +
                                " must cover exactly the downhill edges");
  for (std::size_t k = 0; k < downhill.size(); ++k) {
    auto it = std::find_if(mine.begin(), mine.end(), [&](const Coefficient* c) { return c->edge == downhill[k]; });
    if (it == mine.end())
      throw std::invalid_argument(std::string(what) + " coefficient missing for edge " +
                                  std::to_string(net.edge(downhill[k]).label) + " at vertex " + label);
    out[k] = (*it)->value;
  }
  return out;
}

}  // namespace detail

inline std::vector<VertexSplit> resolve_splits(const Network& net, const Structure& st, const TransmissionSpec& spec) {
  std::vector<VertexSplit> out(net.vertex_count());
  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    if (net.vertices()[i].is_boundary()) continue;
    VertexSplit& s = out[i];
    s.edges = st.vertices[i].inc_minus;
    s.transmission = detail::resolve_coefficients(net, VertexId(i), s.edges, spec.transmission, "transmission");
    s.source_split = detail::resolve_coefficients(net, VertexId(i), s.edges, spec.source_split, "source split");
    s.source = spec.source_at(VertexId(i));
  }
  for (const auto& g : spec.sources)
    if (net.vertex(g.vertex).is_boundary() && g.value != 0.0)
      throw std::invalid_argument("vertex source on boundary vertex " + std::to_string(net.vertex(g.vertex).label));
  return out;
}

struct RollingField {
  std::vector<std::vector<double>> v;  // per edge, per grid node index
  std::vector<double> inflow;          // per vertex: sum of v over the uphill edges
  std::vector<int> level;              // dependency level per edge
  std::vector<std::vector<EdgeId>> schedule;

  double at(EdgeId j, EdgeEnd end) const { return end == EdgeEnd::Start ? v[*j].front() : v[*j].back(); }

  double max() const {
    double m = 0.0;
    for (const auto& e : v)
      for (double x : e) m = std::max(m, std::fabs(x));
    return m;
  }
};

/// Edge levels: an edge with an interior maximum is level 0, an edge whose top
/// is a vertex sits one level above the uphill edges feeding that vertex.
inline std::vector<int> dependency_levels(const Network& net, const Structure& st) {
  const std::size_t n = net.edge_count();
  std::vector<int> level(n, -1);
  std::vector<char> state(n, 0);  // 0 new, 1 on stack, 2 done

  std::function<int(std::size_t)> visit = [&](std::size_t j) -> int {
    if (state[j] == 2) return level[j];
    if (state[j] == 1) throw std::logic_error("dependency cycle through edge " + std::to_string(net.edges()[j].label));
    state[j] = 1;
    int lv = 0;
    const EdgeShape& shape = st.edges[j];
    if (!shape.singular) {
      if (!shape.top) throw std::logic_error("edge " + std::to_string(net.edges()[j].label) + " has no projection set");
      VertexId top = net.edges()[j].vertex(*shape.top);
      for (EdgeId k : st.vertices[*top].inc_plus) lv = std::max(lv, visit(*k) + 1);
    }
    level[j] = lv;
    state[j] = 2;
    return lv;
  };
  for (std::size_t j = 0; j < n; ++j) visit(j);
  return level;
}

inline RollingField compute_rolling(const Network& net, const Grid& grid, const Structure& st,
                                    const TransmissionSpec& spec = {}) {
  const auto splits = resolve_splits(net, st, spec);
  RollingField out;
  out.v.resize(net.edge_count());
  out.inflow.assign(net.vertex_count(), 0.0);
  out.level = dependency_levels(net, st);
  int top_level = out.level.empty() ? -1 : *std::max_element(out.level.begin(), out.level.end());
  out.schedule.resize(static_cast<std::size_t>(top_level + 1));
  for (std::size_t j = 0; j < net.edge_count(); ++j) out.schedule[static_cast<std::size_t>(out.level[j])].push_back(EdgeId(j));

  std::vector<bool> done(net.edge_count(), false);
  for (const auto& batch : out.schedule) {
    for (EdgeId j : batch) {
      const EdgeGrid& g = grid.edge(j);
      const EdgeShape& shape = st.edges[*j];
      std::vector<double>& v = out.v[*j];
      v.assign(g.size(), 0.0);
      std::size_t peak = shape.peak(g);
      double base = 0.0;
      if (!shape.singular) {
        VertexId top = net.edge(j).vertex(*shape.top);
        double in = 0.0;
        for (EdgeId k : st.vertices[*top].inc_plus) {
          if (!done[*k]) throw std::logic_error("uphill edge processed after its dependent");
          const Edge& ek = net.edge(k);
          in += out.at(k, ek.start == top ? EdgeEnd::Start : EdgeEnd::End);
        }
        out.inflow[*top] = in;
        const VertexSplit& s = splits[*top];
        base = s.source_split_of(j) * s.source + s.transmission_of(j) * in;
      }
      v[peak] = base;
      for (std::size_t m = peak; m-- > 0;) v[m] = v[m + 1] + 0.5 * (g.source[m] + g.source[m + 1]) * g.step(m);
      for (std::size_t m = peak + 1; m < g.size(); ++m) v[m] = v[m - 1] + 0.5 * (g.source[m - 1] + g.source[m]) * g.step(m - 1);
      done[*j] = true;
    }
  }
  return out;
}

struct VertexFlux {
  VertexId vertex;
  double inflow = 0.0;   // sum over uphill edges
  double outflow = 0.0;  // sum over downhill edges
  double source = 0.0;
  double residual = 0.0;  // inflow + source - outflow
};

inline std::vector<VertexFlux> flux_report(const Network& net, const Structure& st, const RollingField& rf,
                                           const TransmissionSpec& spec = {}) {
  std::vector<VertexFlux> out;
  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    if (net.vertices()[i].is_boundary()) continue;
    VertexFlux fx;
    fx.vertex = VertexId(i);
    for (auto [j, sigma] : st.vertices[i].sigma) {
      const Edge& e = net.edge(j);
      double value = rf.at(j, *e.start == i ? EdgeEnd::Start : EdgeEnd::End);
      (sigma > 0 ? fx.inflow : fx.outflow) += value;
    }
    fx.source = spec.source_at(VertexId(i));
    fx.residual = fx.inflow + fx.source - fx.outflow;
    out.push_back(fx);
  }
  return out;
}

/// Mass leaving the network through the boundary vertices.
inline double boundary_outflow(const Network& net, const RollingField& rf) {
  double total = 0.0;
  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    if (!net.vertices()[i].is_boundary()) continue;
    for (const auto& inc : net.incidence(VertexId(i))) total += rf.at(inc.edge, inc.end);
  }
  return total;
}

/// Complete solution pair on one grid.
struct Solution {
  DistanceSolution distance;
  RollingField rolling;
  TransmissionSpec spec;
};

inline Solution solve_pair(const Network& net, const TransmissionSpec& spec = {}, const Tolerances& tol = {}) {
  Solution sol;
  sol.distance = solve_distance(net, tol);
  sol.spec = spec;
  sol.rolling = compute_rolling(net, sol.distance.grid, sol.distance.structure, spec);
  return sol;
}

}  // namespace sandnet
