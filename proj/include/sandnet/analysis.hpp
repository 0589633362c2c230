#pragma once

// Uniqueness diagnostics, error metrics and convergence studies.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sandnet/netfile.hpp"
#include "sandnet/rolling.hpp"

namespace sandnet {

// ---------------------------------------------------------------------------
// u^f

struct UfResult {
  std::vector<double> values;  // per node id
  bool empty_source = false;
};

/// Nodes carrying source: interior nodes with f > 0, vertex nodes with g > 0
/// or with f > 0 at the vertex end of an incident edge.
inline std::vector<bool> source_support(const Network& net, const Grid& grid, const TransmissionSpec& spec = {}) {
  std::vector<bool> support(grid.node_count(), false);
  for (const auto& g : grid.edges())
    for (std::size_t m = 0; m < g.size(); ++m)
      if (g.source[m] > 0.0) support[g.nodes[m]] = true;
  for (std::size_t i = 0; i < net.vertex_count(); ++i)
    if (spec.source_at(VertexId(i)) > 0.0) support[i] = true;
  return support;
}

/// u^f(x) = max over support nodes y of [delta(y) - D(y -> x)]_+, by a
/// multi-source Dijkstra on the keys -delta(y).
inline UfResult compute_uf(const Network& net, const Grid& grid, const DistanceField& field,
                           const TransmissionSpec& spec = {}) {
  const double inf = std::numeric_limits<double>::infinity();
  auto support = source_support(net, grid, spec);
  UfResult out;
  std::vector<double> key(grid.node_count(), inf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (NodeId n = 0; n < grid.node_count(); ++n) {
    if (!support[n]) continue;
    key[n] = -field.delta[n];
    heap.emplace(key[n], n);
  }
  out.empty_source = heap.empty();
  std::vector<bool> frozen(grid.node_count(), false);
  while (!heap.empty()) {
    auto [k, n] = heap.top();
    heap.pop();
    if (frozen[n] || k > key[n]) continue;
    frozen[n] = true;
    if (k >= 0.0) continue;  // nothing positive propagates from here
    grid.for_each_neighbor(n, [&](const Neighbor& nb) {
      double cand = k + nb.dist * grid.edge(nb.edge).eta_inv[nb.from];
      if (cand < key[nb.node]) {
        key[nb.node] = cand;
        heap.emplace(cand, nb.node);
      }
    });
  }
  out.values.resize(grid.node_count());
  for (NodeId n = 0; n < grid.node_count(); ++n) out.values[n] = std::max(0.0, -key[n]);
  return out;
}

// ---------------------------------------------------------------------------
// Uniqueness

struct SingularPoint {
  std::optional<VertexId> vertex;  // set for a vertex maximum
  EdgeId edge;                     // edge of an interior maximum
  std::size_t index = 0;           // node index on `edge`
  double t = 0.0;                  // normalized parameter on `edge`
  bool covered = false;            // f > 0 within one cell, or g > 0
};

struct UniquenessReport {
  std::vector<SingularPoint> singular;
  bool unique = true;
  UfResult uf;
  std::vector<NodeId> gap_nodes;       // nodes with u^f < delta
  std::vector<EdgeId> zero_edges;      // edges where v vanishes identically
  std::vector<EdgeId> gap_edges;       // edges holding a node with u^f < delta
};

inline UniquenessReport uniqueness_check(const Network& net, const Grid& grid, const DistanceField& field,
                                         const Structure& st, const RollingField* rolling = nullptr,
                                         const TransmissionSpec& spec = {}) {
  UniquenessReport rep;
  auto positive_near = [&](const EdgeGrid& g, std::size_t m) {
    std::size_t lo = m == 0 ? 0 : m - 1, hi = std::min(g.last(), m + 1);
    for (std::size_t k = lo; k <= hi; ++k)
      if (g.source[k] > 0.0) return true;
    return false;
  };
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    if (!st.edges[j].singular) continue;
    const EdgeGrid& g = grid.edge(EdgeId(j));
    SingularPoint p;
    p.edge = EdgeId(j);
    p.index = *st.edges[j].singular;
    p.t = g.s[p.index] / net.edges()[j].length;
    p.covered = positive_near(g, p.index);
    rep.singular.push_back(p);
  }
  for (std::size_t i = 0; i < net.vertex_count(); ++i) {
    if (!st.vertices[i].local_max) continue;
    SingularPoint p;
    p.vertex = VertexId(i);
    p.covered = spec.source_at(VertexId(i)) > 0.0;
    for (const auto& inc : net.incidence(VertexId(i))) {
      const EdgeGrid& g = grid.edge(inc.edge);
      if (positive_near(g, g.index_of(inc.end))) p.covered = true;
    }
    rep.singular.push_back(p);
  }
  rep.unique = std::all_of(rep.singular.begin(), rep.singular.end(), [](const SingularPoint& p) { return p.covered; });

  rep.uf = compute_uf(net, grid, field, spec);
  const double tol = 1e-12 * (1.0 + field.max());
  std::vector<bool> gap_edge(net.edge_count(), false);
  for (NodeId n = 0; n < grid.node_count(); ++n) {
    if (rep.uf.values[n] >= field.delta[n] - tol) continue;
    rep.gap_nodes.push_back(n);
    if (grid.is_vertex(n)) {
      for (const auto& inc : grid.incidence(VertexId(n))) gap_edge[*inc.edge] = true;
    } else {
      gap_edge[*grid.locate(n).edge] = true;
    }
  }
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    if (gap_edge[j]) rep.gap_edges.push_back(EdgeId(j));
    if (rolling && std::all_of(rolling->v[j].begin(), rolling->v[j].end(), [](double x) { return x == 0.0; }))
      rep.zero_edges.push_back(EdgeId(j));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Interpolation and quadrature

/// Linear interpolation of node values on an edge grid at arclength s.
inline double interpolate(const EdgeGrid& g, const std::vector<double>& values, double s) {
  if (s <= g.s.front()) return values.front();
  if (s >= g.s.back()) return values.back();
  auto it = std::upper_bound(g.s.begin(), g.s.end(), s);
  std::size_t m = static_cast<std::size_t>(it - g.s.begin()) - 1;
  double w = (s - g.s[m]) / g.step(m);
  return values[m] + w * (values[m + 1] - values[m]);
}

inline std::vector<double> edge_values(const EdgeGrid& g, const std::vector<double>& node_values) {
  std::vector<double> out(g.size());
  for (std::size_t m = 0; m < g.size(); ++m) out[m] = node_values[g.nodes[m]];
  return out;
}

namespace detail {

inline constexpr std::array<double, 5> gauss_x = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                                  0.9061798459386640};
inline constexpr std::array<double, 5> gauss_w = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                  0.4786286704993665, 0.2369268850561891};

template <class F>
double gauss(double a, double b, F&& fn) {
  double mid = 0.5 * (a + b), half = 0.5 * (b - a), sum = 0.0;
  for (std::size_t k = 0; k < gauss_x.size(); ++k) sum += gauss_w[k] * fn(mid + half * gauss_x[k]);
  return sum * half;
}

}  // namespace detail

/// Integral of f over the network by composite five-point Gauss on `pieces`
/// pieces per edge.
inline double source_mass(const Network& net, int pieces = 2000) {
  double total = 0.0;
  for (const Edge& e : net.edges()) {
    double h = e.length / pieces;
    for (int k = 0; k < pieces; ++k)
      total += detail::gauss(k * h, (k + 1) * h, [&](double s) { return e.source_at(s); });
  }
  return total;
}

// ---------------------------------------------------------------------------
// Error metrics

struct ExactSolution {
  std::function<double(std::size_t edge, double s)> d;
  std::function<double(std::size_t edge, double s)> v;
};

struct ErrorRow {
  double h = 0.0;
  double linf_d = 0.0, l1_d = 0.0, linf_v = 0.0, l1_v = 0.0;
};

enum class Sampling : std::uint8_t { Fine, Nodes };

/// Errors of a discrete solution against reference functions per edge. Fine
/// sampling uses `samples` uniform intervals per edge and linear interpolation;
/// node sampling compares at grid nodes only.
inline ErrorRow errors_against(const Network& net, const Solution& sol, const ExactSolution& ref, int samples = 10000,
                               Sampling mode = Sampling::Fine) {
  ErrorRow row;
  row.h = sol.distance.grid.nominal_step();
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
    const auto d = edge_values(g, sol.distance.field.delta);
    const auto& v = sol.rolling.v[j];
    std::vector<double> s;
    if (mode == Sampling::Nodes) {
      s = g.s;
    } else {
      s.resize(static_cast<std::size_t>(samples) + 1);
      for (int k = 0; k <= samples; ++k) s[static_cast<std::size_t>(k)] = k == samples ? g.s.back() : g.s.back() * k / samples;
    }
    double prev_d = 0.0, prev_v = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      double dh = mode == Sampling::Nodes ? d[k] : interpolate(g, d, s[k]);
      double vh = mode == Sampling::Nodes ? v[k] : interpolate(g, v, s[k]);
      double ed = std::fabs(dh - ref.d(j, s[k]));
      double ev = std::fabs(vh - ref.v(j, s[k]));
      row.linf_d = std::max(row.linf_d, ed);
      row.linf_v = std::max(row.linf_v, ev);
      if (k > 0) {
        double w = 0.5 * (s[k] - s[k - 1]);
        row.l1_d += w * (ed + prev_d);
        row.l1_v += w * (ev + prev_v);
      }
      prev_d = ed;
      prev_v = ev;
    }
  }
  return row;
}

/// Interpolant of a discrete solution, usable as a reference.
inline ExactSolution as_reference(const Solution& sol) {
  auto shared = std::make_shared<Solution>(sol);
  ExactSolution ref;
  ref.d = [shared](std::size_t j, double s) {
    const EdgeGrid& g = shared->distance.grid.edge(EdgeId(j));
    return interpolate(g, edge_values(g, shared->distance.field.delta), s);
  };
  ref.v = [shared](std::size_t j, double s) {
    return interpolate(shared->distance.grid.edge(EdgeId(j)), shared->rolling.v[j], s);
  };
  return ref;
}

inline bool same_geometry(const Network& a, const Network& b) {
  if (a.vertex_count() != b.vertex_count() || a.edge_count() != b.edge_count()) return false;
  for (std::size_t i = 0; i < a.vertex_count(); ++i) {
    const Vertex &p = a.vertices()[i], &q = b.vertices()[i];
    if (!(p.position == q.position) || p.kind != q.kind) return false;
  }
  for (std::size_t j = 0; j < a.edge_count(); ++j) {
    const Edge &p = a.edges()[j], &q = b.edges()[j];
    if (p.start != q.start || p.end != q.end || p.length != q.length || !(p.source == q.source) ||
        !(p.eta_inv == q.eta_inv))
      return false;
  }
  return true;
}

/// Closed-form solution when the network is the three-edge star test case.
inline std::optional<ExactSolution> known_exact(const Network& net) {
  if (!same_geometry(net, generate_test1().network)) return std::nullopt;
  ExactSolution ex;
  ex.d = [](std::size_t j, double s) {
    if (j < 2) return 0.5 - s;
    return s < 0.25 ? 0.5 + s : 1.0 - s;
  };
  ex.v = [](std::size_t j, double s) {
    if (j < 2) return s - s * s + 7.0 / 64.0;
    double q = 0.5 * s * s - s + 7.0 / 32.0;
    return s < 0.25 ? q : -q;
  };
  return ex;
}

// ---------------------------------------------------------------------------
// Convergence

enum class GridPolicy : std::uint8_t {
  Nearest,     // ceil(length / h) cells
  OddCells,    // rounded up to an odd cell count
  QuarterCells // rounded up to a multiple of four cells
};

inline int cells_for(double length, double h, GridPolicy policy) {
  int cells = std::max(2, static_cast<int>(std::ceil(length / h - 1e-9)));
  if (policy == GridPolicy::OddCells && cells % 2 == 0) ++cells;
  if (policy == GridPolicy::QuarterCells && cells % 4 != 0) cells += 4 - cells % 4;
  return cells;
}

inline Network with_step(const Network& net, double h, GridPolicy policy = GridPolicy::Nearest) {
  return net.with_interior_nodes([&](const Edge& e) { return cells_for(e.length, h, policy) - 1; });
}

struct ConvergenceOptions {
  std::vector<double> h_list = {1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3};
  GridPolicy policy = GridPolicy::Nearest;
  int samples = 10000;
  Sampling sampling = Sampling::Fine;
  bool force_reference = false;
  double reference_factor = 10.0;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
  std::array<double, 4> slopes{};  // Linf_d, L1_d, Linf_v, L1_v
  bool reference = false;          // errors against a finer grid rather than a closed form
};

/// Least-squares slope of log(err) against log(h); points with err <= 0 are
/// dropped, NaN when fewer than four remain.
inline double fit_slope(const std::vector<double>& h, const std::vector<double>& err) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < h.size(); ++k)
    if (err[k] > 0.0 && h[k] > 0.0 && std::isfinite(err[k])) pts.emplace_back(std::log(h[k]), std::log(err[k]));
  if (pts.size() < 4) return std::numeric_limits<double>::quiet_NaN();
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxy = 0.0, sxx = 0.0;
  for (auto [x, y] : pts) {
    sxy += (x - mx) * (y - my);
    sxx += (x - mx) * (x - mx);
  }
  return sxx > 0.0 ? sxy / sxx : std::numeric_limits<double>::quiet_NaN();
}

inline ErrorTable convergence_study(const NetFile& file, const ConvergenceOptions& opts = {},
                                    const Tolerances& tol = {}) {
  if (opts.h_list.size() < 2) throw std::invalid_argument("need >= 2 steps");
  for (double h : opts.h_list)
    if (!(h > 0.0)) throw std::invalid_argument("steps must be positive");
  const Network& base = file.network;
  const auto spec = TransmissionSpec::from(file);
  ErrorTable table;
  std::optional<ExactSolution> ref = opts.force_reference ? std::nullopt : known_exact(base);
  if (!ref) {
    table.reference = true;
    double finest = *std::min_element(opts.h_list.begin(), opts.h_list.end());
    ref = as_reference(solve_pair(with_step(base, finest / opts.reference_factor, opts.policy), spec, tol));
  }
  for (double h : opts.h_list) {
    Network net = with_step(base, h, opts.policy);
    table.rows.push_back(errors_against(net, solve_pair(net, spec, tol), *ref, opts.samples, opts.sampling));
  }
  std::vector<double> hs, e[4];
  for (const auto& r : table.rows) {
    hs.push_back(r.h);
    e[0].push_back(r.linf_d);
    e[1].push_back(r.l1_d);
    e[2].push_back(r.linf_v);
    e[3].push_back(r.l1_v);
  }
  for (int k = 0; k < 4; ++k) table.slopes[static_cast<std::size_t>(k)] = fit_slope(hs, e[k]);
  return table;
}

// ---------------------------------------------------------------------------
// Weak form

/// Continuous piecewise-linear test function: one value per vertex (zero on
/// the boundary) and interior breakpoints per edge in the normalized parameter.
struct TestFunction {
  std::vector<double> vertex_value;
  std::vector<std::vector<std::pair<double, double>>> knots;  // per edge: (t, value), t ascending, endpoints included

  double slope(std::size_t j, double t, double length) const {
    const auto& k = knots[j];
    std::size_t m = 0;
    while (m + 2 < k.size() && t >= k[m + 1].first) ++m;
    return (k[m + 1].second - k[m].second) / ((k[m + 1].first - k[m].first) * length);
  }

  double value(std::size_t j, double t) const {
    const auto& k = knots[j];
    std::size_t m = 0;
    while (m + 2 < k.size() && t >= k[m + 1].first) ++m;
    double w = (t - k[m].first) / (k[m + 1].first - k[m].first);
    return k[m].second + w * (k[m + 1].second - k[m].second);
  }
};

inline TestFunction random_test_function(const Network& net, std::mt19937_64& rng, int breakpoints = 3) {
  std::uniform_real_distribution<double> unit(0.0, 1.0), value(-1.0, 1.0);
  TestFunction psi;
  psi.vertex_value.resize(net.vertex_count());
  for (std::size_t i = 0; i < net.vertex_count(); ++i)
    psi.vertex_value[i] = net.vertices()[i].is_boundary() ? 0.0 : value(rng);
  psi.knots.resize(net.edge_count());
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const Edge& e = net.edges()[j];
    std::vector<double> ts;
    for (int k = 0; k < breakpoints; ++k) ts.push_back(0.05 + 0.9 * unit(rng));
    std::sort(ts.begin(), ts.end());
    auto& kn = psi.knots[j];
    kn.emplace_back(0.0, psi.vertex_value[*e.start]);
    for (double t : ts) kn.emplace_back(t, value(rng));
    kn.emplace_back(1.0, psi.vertex_value[*e.end]);
  }
  return psi;
}

/// |sum_j int v eta d' psi' - int f psi| for the interpolated discrete pair.
inline double weak_residual(const Network& net, const Solution& sol, const TestFunction& psi, int f_pieces = 8) {
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const Edge& e = net.edges()[j];
    const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
    const auto d = edge_values(g, sol.distance.field.delta);
    const auto& v = sol.rolling.v[j];
    std::vector<double> cuts = g.s;
    for (const auto& [t, val] : psi.knots[j]) cuts.push_back(t * e.length);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::fabs(a - b) < 1e-15; }),
               cuts.end());
    std::size_t cell = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      double a = cuts[k], b = cuts[k + 1];
      if (!(b > a)) continue;
      double mid = 0.5 * (a + b);
      while (cell + 2 < g.size() && g.s[cell + 1] <= mid) ++cell;
      double dslope = (d[cell + 1] - d[cell]) / g.step(cell);
      double vslope = (v[cell + 1] - v[cell]) / g.step(cell);
      double pslope = psi.slope(j, mid / e.length, e.length);
      lhs += detail::gauss(a, b, [&](double s) {
        double vh = v[cell] + vslope * (s - g.s[cell]);
        return vh / e.eta_inv_at(s) * dslope * pslope;
      });
      double piece = (b - a) / f_pieces;
      for (int p = 0; p < f_pieces; ++p)
        rhs += detail::gauss(a + p * piece, a + (p + 1) * piece,
                             [&](double s) { return e.source_at(s) * psi.value(j, s / e.length); });
    }
  }
  for (const auto& g : sol.spec.sources) rhs += g.value * psi.vertex_value[*g.vertex];
  return std::fabs(lhs - rhs);
}

/// Largest weak-form residual over `count` seeded random test functions.
inline double weak_residual_max(const Network& net, const Solution& sol, int count = 20, std::uint64_t seed = 7) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < count; ++k) worst = std::max(worst, weak_residual(net, sol, random_test_function(net, rng)));
  return worst;
}

// ---------------------------------------------------------------------------
// Mass balance

struct MassBalance {
  double outflow = 0.0;  // boundary exit
  double poured = 0.0;   // int f + sum g
  double error = 0.0;
  double bound = 0.0;
  bool indicator = false;

  bool ok() const { return error <= bound; }
};

inline MassBalance mass_balance(const Network& net, const Solution& sol) {
  MassBalance mb;
  mb.outflow = boundary_outflow(net, sol.rolling);
  mb.poured = source_mass(net);
  for (const auto& g : sol.spec.sources) mb.poured += g.value;
  mb.error = std::fabs(mb.outflow - mb.poured);
  double h = sol.distance.grid.nominal_step();
  double fmax = 0.0;
  for (const auto& g : sol.distance.grid.edges())
    for (double f : g.source) fmax = std::max(fmax, std::fabs(f));
  mb.indicator = std::any_of(net.edges().begin(), net.edges().end(), [](const Edge& e) { return e.source.has_indicator(); });
  mb.bound = mb.indicator ? 2.0 * h * fmax * static_cast<double>(net.edge_count()) : 10.0 * h * h;
  return mb;
}

}  // namespace sandnet
