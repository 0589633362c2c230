#pragma once

// Invariant checks over a solved pair.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "sandnet/analysis.hpp"

namespace sandnet {

struct CheckResult {
  std::string name;
  bool passed = true;
  std::string detail;
  double worst = 0.0;
};

/// Label-correcting shortest paths on the uniform grid; independent of the
/// heap ordering used by solve().
inline std::vector<double> label_correcting_distance(const Network& net, const Grid& grid) {
  std::vector<double> dist(grid.node_count(), std::numeric_limits<double>::infinity());
  std::deque<NodeId> queue;
  std::vector<bool> queued(grid.node_count(), false);
  for (std::size_t i = 0; i < net.vertex_count(); ++i)
    if (net.vertices()[i].is_boundary()) {
      dist[i] = 0.0;
      queue.push_back(static_cast<NodeId>(i));
      queued[i] = true;
    }
  while (!queue.empty()) {
    NodeId n = queue.front();
    queue.pop_front();
    queued[n] = false;
    for (const Neighbor& nb : grid.neighbors(n)) {
      double cand = dist[n] + nb.dist * grid.edge(nb.edge).eta_inv[nb.to];
      if (cand < dist[nb.node]) {
        dist[nb.node] = cand;
        if (!queued[nb.node]) {
          queue.push_back(nb.node);
          queued[nb.node] = true;
        }
      }
    }
  }
  return dist;
}

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

}  // namespace detail

inline std::vector<CheckResult> audit(const Network& net, const Solution& sol, const Tolerances& tol = {}) {
  using detail::fmt;
  const Grid& grid = sol.distance.grid;
  const DistanceField& field = sol.distance.field;
  const Structure& st = sol.distance.structure;
  const RollingField& rf = sol.rolling;
  const double dscale = 1.0 + field.max();
  std::vector<CheckResult> out;

  {
    CheckResult c{"distance sign", true, "", 0.0};
    for (NodeId n = 0; n < grid.node_count(); ++n) {
      bool bad = grid.is_boundary(n) ? field.delta[n] != 0.0 : !(field.delta[n] > 0.0);
      if (bad) {
        c.passed = false;
        c.worst = std::max(c.worst, std::fabs(field.delta[n]));
      }
    }
    c.detail = c.passed ? "zero on the boundary, positive elsewhere" : "sign violated";
    out.push_back(c);
  }
  {
    double r = eikonal_residual(grid, field);
    out.push_back({"eikonal residual", r <= tol.residual * dscale, "max " + fmt(r), r});
  }
  {
    Grid base = build_grid(net);
    auto oracle = label_correcting_distance(net, base);
    double worst = 0.0;
    for (NodeId n = 0; n < base.node_count(); ++n) worst = std::max(worst, std::fabs(oracle[n] - field.delta[n]));
    out.push_back({"path oracle", worst <= 1e-12 * dscale, "max deviation " + fmt(worst), worst});
  }
  {
    double threshold = tie_threshold(field, tol);
    std::size_t ties = 0;
    for (const auto& g : grid.edges())
      for (std::size_t m = 0; m + 1 < g.size(); ++m)
        if (std::fabs(field.at(g, m) - field.at(g, m + 1)) <= threshold) ++ties;
    out.push_back({"no ties", ties == 0, std::to_string(ties) + " tied cells", static_cast<double>(ties)});
  }
  {
    std::size_t irregular = 0, both = 0;
    for (const auto& shape : st.edges) {
      if (!shape.regular) ++irregular;
      if (shape.singular.has_value() == shape.top.has_value()) ++both;
    }
    out.push_back({"edge slope pattern", irregular == 0 && both == 0,
                   std::to_string(irregular) + " irregular, " + std::to_string(both) + " without a single projection set",
                   static_cast<double>(irregular + both)});
  }
  {
    long plus = 0, minus = 0;
    for (const auto& vs : st.vertices) {
      plus += static_cast<long>(vs.inc_plus.size());
      minus += static_cast<long>(vs.inc_minus.size());
    }
    long sing = static_cast<long>(st.interior_singular_count());
    long edges = static_cast<long>(net.edge_count());
    bool ok = plus - sing == edges && minus + sing == edges;
    out.push_back({"slope counting", ok,
                   "N+ " + std::to_string(plus) + ", N- " + std::to_string(minus) + ", S " + std::to_string(sing) +
                       ", edges " + std::to_string(edges),
                   0.0});
  }
  {
    long lower = static_cast<long>(net.vertex_count()) - static_cast<long>(net.edge_count());
    long upper = static_cast<long>(net.edge_count()) -
                 static_cast<long>(net.vertex_count() - net.boundary_count());
    long s = static_cast<long>(st.singular_count());
    out.push_back({"singular set bounds", lower <= s && s <= upper,
                   std::to_string(lower) + " <= " + std::to_string(s) + " <= " + std::to_string(upper), 0.0});
  }
  {
    std::size_t unclassed = 0;
    for (int lv : st.partition.level)
      if (lv < 0) ++unclassed;
    out.push_back({"edge partition", unclassed == 0,
                   std::to_string(st.partition.classes.size()) + " classes, " + std::to_string(unclassed) + " unclassed",
                   static_cast<double>(unclassed)});
  }
  {
    double worst = 0.0;
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
      const EdgeGrid& g = grid.edge(EdgeId(j));
      const EdgeShape& shape = st.edges[j];
      std::size_t peak = shape.peak(g);
      for (std::size_t m = 0; m + 1 < g.size(); ++m) {
        if (m + 1 == peak || m == peak) continue;
        std::size_t up = m < peak ? m + 1 : m, down = m < peak ? m : m + 1;
        double gap = field.at(g, up) - field.at(g, down) - g.step(m) * g.eta_inv[up];
        worst = std::max(worst, std::fabs(gap));
      }
    }
    out.push_back({"geodesic walks", worst <= 1e-12 * dscale, "max deviation " + fmt(worst), worst});
  }

  const double vmax = rf.max();
  {
    // v grows downhill by the trapezoid source of each cell
    double worst = 0.0;
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
      const EdgeGrid& g = grid.edge(EdgeId(j));
      const auto& slope = st.edges[j].slope;
      for (std::size_t m = 0; m + 1 < g.size(); ++m) {
        double gain = 0.5 * (g.source[m] + g.source[m + 1]) * g.step(m);
        worst = std::max(worst, std::fabs(rf.v[j][m + 1] - rf.v[j][m] + slope[m] * gain));
      }
    }
    out.push_back({"cell balance", worst <= tol.flux * (1.0 + vmax), "max deviation " + fmt(worst), worst});
  }
  {
    double worst = 0.0;
    for (const auto& v : rf.v)
      for (double x : v) worst = std::min(worst, x);
    out.push_back({"rolling non-negative", worst >= 0.0, "min " + fmt(worst), -worst});
  }
  {
    double worst = 0.0;
    for (std::size_t j = 0; j < net.edge_count(); ++j)
      if (st.edges[j].singular) worst = std::max(worst, std::fabs(rf.v[j][*st.edges[j].singular]));
    for (std::size_t i = 0; i < net.vertex_count(); ++i) {
      if (!st.vertices[i].local_max) continue;
      for (const auto& inc : net.incidence(VertexId(i)))
        worst = std::max(worst, std::fabs(rf.at(inc.edge, inc.end)) - sol.spec.source_at(VertexId(i)));
    }
    out.push_back({"rolling zero on singular set", worst <= tol.flux * (1.0 + vmax), "max " + fmt(worst), worst});
  }
  {
    double worst = 0.0;
    for (const auto& fx : flux_report(net, st, rf, sol.spec)) worst = std::max(worst, std::fabs(fx.residual));
    out.push_back({"flux conservation", worst <= tol.flux * (1.0 + vmax), "max residual " + fmt(worst), worst});
  }
  {
    MassBalance mb = mass_balance(net, sol);
    out.push_back({"mass balance", mb.ok(),
                   "outflow " + fmt(mb.outflow) + ", poured " + fmt(mb.poured) + ", bound " + fmt(mb.bound), mb.error});
  }
  {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < net.vertex_count(); ++i) {
      if (net.vertices()[i].is_boundary()) continue;
      double in = 0.0;
      for (EdgeId k : st.vertices[i].inc_plus)
        in += rf.at(k, *net.edge(k).start == i ? EdgeEnd::Start : EdgeEnd::End);
      in += sol.spec.source_at(VertexId(i));
      if (!(in > 0.0)) continue;
      for (EdgeId j : st.vertices[i].inc_minus)
        if (!(rf.at(j, *net.edge(j).start == i ? EdgeEnd::Start : EdgeEnd::End) > 0.0)) ++bad;
    }
    out.push_back({"downhill edges fed", bad == 0, std::to_string(bad) + " unfed downhill edges", static_cast<double>(bad)});
  }
  {
    UfResult uf = compute_uf(net, grid, field, sol.spec);
    double below = 0.0, above = 0.0, gap = 0.0;
    for (NodeId n = 0; n < grid.node_count(); ++n) {
      below = std::max(below, -uf.values[n]);
      above = std::max(above, uf.values[n] - field.delta[n]);
    }
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
      const EdgeGrid& g = grid.edge(EdgeId(j));
      for (std::size_t m = 0; m < g.size(); ++m)
        if (rf.v[j][m] > 0.0) gap = std::max(gap, field.at(g, m) - uf.values[g.nodes[m]]);
    }
    out.push_back({"u^f bounds", below <= 0.0 && above <= 1e-12 * dscale,
                   "min " + fmt(-below) + ", max excess over distance " + fmt(above), std::max(below, above)});
    out.push_back({"u^f on rolling support", gap <= 1e-12 * dscale, "max gap " + fmt(gap), gap});
  }
  return out;
}

inline bool all_passed(const std::vector<CheckResult>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

}  // namespace sandnet
