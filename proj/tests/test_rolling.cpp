#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"

using namespace sandnet;

namespace {

double at_vertex(const Network& net, const RollingField& rf, std::size_t edge, std::size_t vertex) {
  const Edge& e = net.edges()[edge];
  return rf.at(EdgeId(edge), *e.start == vertex ? EdgeEnd::Start : EdgeEnd::End);
}

// Two long tent edges hanging off a path. The hop-count classes put the path
// edges x_i-x_p and x_p-x_r in the same class although the first one needs
// the value of the second at x_p.
NetFile chained_network() {
  std::vector<Vertex> vs = {{0, {0, 0}, VertexKind::Boundary},    // B1
                            {1, {1, 0}, VertexKind::Transition},  // x_i
                            {2, {1, 10}, VertexKind::Boundary},   // B2
                            {3, {2, 0}, VertexKind::Transition},  // x_p
                            {4, {3, 0}, VertexKind::Transition},  // x_r
                            {5, {3, 10}, VertexKind::Boundary}};  // B3
  const std::pair<std::size_t, std::size_t> ends[] = {{0, 1}, {1, 2}, {1, 3}, {3, 4}, {4, 5}};
  std::vector<Edge> es;
  for (std::size_t k = 0; k < 5; ++k) {
    Edge e;
    e.label = static_cast<int>(k) + 1;
    e.start = VertexId(ends[k].first);
    e.end = VertexId(ends[k].second);
    e.length = euclidean(vs[ends[k].first].position, vs[ends[k].second].position);
    e.source = Expr(1.0);
    e.interior_nodes = nodes_for_step(e.length, 0.05);
    es.push_back(e);
  }
  return {Network(vs, es), {}, {}, {}, {}};
}

}  // namespace

TEST(Rolling, TestOneVertexValues) {
  const Network net = generate_test1().network;
  Solution sol = solve_pair(net);
  EXPECT_NEAR(at_vertex(net, sol.rolling, 0, 0), 7.0 / 64.0, 1e-14);
  EXPECT_NEAR(at_vertex(net, sol.rolling, 1, 0), 7.0 / 64.0, 1e-14);
  EXPECT_NEAR(at_vertex(net, sol.rolling, 2, 0), 7.0 / 32.0, 1e-14);
  std::size_t peak = *sol.distance.structure.edges[2].singular;
  EXPECT_EQ(sol.rolling.v[2][peak], 0.0);
}

TEST(Rolling, ZeroSourceGivesZero) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Network net = oracle::random_network(seed).network;
    std::vector<Edge> es = net.edges();
    for (auto& e : es) e.source = Expr(0.0);
    Network zero(net.vertices(), es);
    Solution sol = solve_pair(zero);
    for (const auto& v : sol.rolling.v)
      for (double x : v) EXPECT_EQ(x, 0.0);
  }
}

TEST(Rolling, TentWithConstantSource) {
  std::vector<Vertex> vs = {{0, {0, 0}, VertexKind::Boundary}, {1, {1, 0}, VertexKind::Boundary}};
  Edge e;
  e.start = VertexId(0);
  e.end = VertexId(1);
  e.source = Expr(1.0);
  e.interior_nodes = 99;
  Network net(vs, {e});
  Solution sol = solve_pair(net);
  const EdgeGrid& g = sol.distance.grid.edge(EdgeId(0));
  for (std::size_t m = 0; m < g.size(); ++m) EXPECT_NEAR(sol.rolling.v[0][m], std::fabs(0.5 - g.s[m]), 1e-14);
}

TEST(Rolling, FluxReportOnTestOne) {
  const Network net = generate_test1().network;
  Solution sol = solve_pair(net);
  auto report = flux_report(net, sol.distance.structure, sol.rolling);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_NEAR(report[0].inflow, 7.0 / 32.0, 1e-14);
  EXPECT_NEAR(report[0].outflow, 7.0 / 32.0, 1e-14);
  EXPECT_NEAR(report[0].residual, 0.0, 1e-15);
  EXPECT_NEAR(boundary_outflow(net, sol.rolling), 1.0, 1e-14);
  EXPECT_NEAR(source_mass(net), 1.0, 1e-14);
}

TEST(Rolling, VertexSourceAtLocalMaximum) {
  GenOptions opts;
  opts.source = "0";
  NetFile star = generate_star(3, {1.0}, opts);
  star.sources = {{VertexId(0), 1.0}};
  star.source_split = {{VertexId(0), EdgeId(0), 0.2}, {VertexId(0), EdgeId(1), 0.3}, {VertexId(0), EdgeId(2), 0.5}};
  Solution sol = solve_pair(star.network, TransmissionSpec::from(star));
  ASSERT_TRUE(sol.distance.structure.vertices[0].local_max);
  EXPECT_NEAR(sol.rolling.v[0].front(), 0.2, 1e-15);
  EXPECT_NEAR(sol.rolling.v[1].front(), 0.3, 1e-15);
  EXPECT_NEAR(sol.rolling.v[2].front(), 0.5, 1e-15);
  EXPECT_NEAR(boundary_outflow(star.network, sol.rolling), 1.0, 1e-15);
  auto report = flux_report(star.network, sol.distance.structure, sol.rolling, sol.spec);
  EXPECT_NEAR(report[0].outflow, 1.0, 1e-15);
  EXPECT_NEAR(report[0].residual, 0.0, 1e-15);
}

TEST(Rolling, TransmissionOverride) {
  NetFile f = generate_test1();
  f.transmission = {{VertexId(0), EdgeId(0), 0.25}, {VertexId(0), EdgeId(1), 0.75}};
  Solution sol = solve_pair(f.network, TransmissionSpec::from(f));
  EXPECT_NEAR(at_vertex(f.network, sol.rolling, 0, 0), 7.0 / 128.0, 1e-14);
  EXPECT_NEAR(at_vertex(f.network, sol.rolling, 1, 0), 21.0 / 128.0, 1e-14);
}

TEST(Rolling, OverrideMustCoverDownhillEdges) {
  NetFile f = generate_test1();
  f.transmission = {{VertexId(0), EdgeId(2), 1.0}};
  EXPECT_THROW(solve_pair(f.network, TransmissionSpec::from(f)), std::invalid_argument);
}

TEST(Rolling, MatchesDirectWalkSums) {
  for (auto& [name, file] : oracle::corpus()) {
    const Network& net = file.network;
    Solution sol = solve_pair(net);
    double worst = 0.0;
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
      const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
      for (std::size_t m = 0; m < g.size(); ++m)
        worst = std::max(worst, std::fabs(sol.rolling.v[j][m] -
                                          oracle::walk_sum(net, sol.distance.grid, sol.distance.structure, j, m)));
    }
    EXPECT_LE(worst, 1e-12 * (1.0 + sol.rolling.max())) << name;
  }
}

TEST(Rolling, InvariantsOnCorpus) {
  for (auto& [name, file] : oracle::corpus()) {
    const Network& net = file.network;
    Solution sol = solve_pair(net);
    const Structure& st = sol.distance.structure;
    const double vmax = sol.rolling.max();
    for (const auto& v : sol.rolling.v)
      for (double x : v) EXPECT_GE(x, 0.0) << name;
    for (std::size_t j = 0; j < net.edge_count(); ++j)
      if (st.edges[j].singular) { EXPECT_EQ(sol.rolling.v[j][*st.edges[j].singular], 0.0) << name; }
    for (std::size_t i = 0; i < net.vertex_count(); ++i) {
      if (!st.vertices[i].local_max) continue;
      for (const auto& inc : net.incidence(VertexId(i))) EXPECT_EQ(sol.rolling.at(inc.edge, inc.end), 0.0) << name;
    }
    for (const auto& fx : flux_report(net, st, sol.rolling))
      EXPECT_LE(std::fabs(fx.residual), 1e-12 * (1.0 + vmax)) << name;
    for (std::size_t i = 0; i < net.vertex_count(); ++i) {
      if (net.vertices()[i].is_boundary()) continue;
      double in = 0.0;
      for (EdgeId k : st.vertices[i].inc_plus) in += at_vertex(net, sol.rolling, *k, i);
      if (in <= 0.0) continue;
      for (EdgeId j : st.vertices[i].inc_minus) EXPECT_GT(at_vertex(net, sol.rolling, *j, i), 0.0) << name;
    }
  }
}

TEST(Rolling, HopClassesAreNotAScheduleButLevelsAre) {
  NetFile f = chained_network();
  const Network& net = f.network;
  ASSERT_TRUE(validate(net).ok());
  Solution sol = solve_pair(net);
  const Structure& st = sol.distance.structure;
  ASSERT_TRUE(st.edges[1].singular);
  ASSERT_TRUE(st.edges[4].singular);
  // hop classes: {e2, e5}, then {e1, e3, e4}
  EXPECT_EQ(st.partition.level[2], 1);
  EXPECT_EQ(st.partition.level[3], 1);
  EXPECT_EQ(st.edges[2].top, EdgeEnd::End);  // e3 tops at x_p, fed by e4
  ASSERT_EQ(st.vertices[3].inc_plus.size(), 1u);
  EXPECT_EQ(st.vertices[3].inc_plus[0], EdgeId(3));
  // dependency levels order them correctly
  EXPECT_EQ(sol.rolling.level, (std::vector<int>{3, 0, 2, 1, 0}));
  EXPECT_NEAR(boundary_outflow(net, sol.rolling), source_mass(net), 1e-9);
  for (const auto& fx : flux_report(net, st, sol.rolling)) EXPECT_NEAR(fx.residual, 0.0, 1e-12);
  for (std::size_t j = 0; j < net.edge_count(); ++j) {
    const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
    for (std::size_t m = 0; m < g.size(); ++m)
      EXPECT_NEAR(sol.rolling.v[j][m], oracle::walk_sum(net, sol.distance.grid, st, j, m), 1e-11);
  }
}

TEST(Rolling, TestTwoStructure) {
  const Network net = generate_test2().network;
  Solution sol = solve_pair(net);
  auto zero = [&](std::size_t j) {
    for (double x : sol.rolling.v[j])
      if (x != 0.0) return false;
    return true;
  };
  EXPECT_TRUE(zero(0));
  EXPECT_TRUE(zero(4));
  EXPECT_FALSE(zero(3));
  // x1 and x2 continuous, x0 and x3 multivalued
  EXPECT_NEAR(at_vertex(net, sol.rolling, 3, 2), at_vertex(net, sol.rolling, 1, 2), 1e-14);
  EXPECT_EQ(at_vertex(net, sol.rolling, 0, 1), at_vertex(net, sol.rolling, 3, 1));
  EXPECT_GT(std::fabs(at_vertex(net, sol.rolling, 0, 0) - at_vertex(net, sol.rolling, 2, 0)), 0.1);
  EXPECT_GT(std::fabs(at_vertex(net, sol.rolling, 2, 3) - at_vertex(net, sol.rolling, 4, 3)), 0.1);
}

TEST(Rolling, TestThreeStructure) {
  const Network net = generate_test3().network;
  Solution sol = solve_pair(net);
  auto spread = [&](std::size_t vertex) {
    double lo = 1e300, hi = -1e300;
    for (const auto& inc : net.incidence(VertexId(vertex))) {
      double v = sol.rolling.at(inc.edge, inc.end);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return hi - lo;
  };
  EXPECT_LT(spread(0), 1e-14);
  EXPECT_LT(spread(4), 1e-14);
  for (std::size_t i : {1u, 2u, 3u, 5u}) EXPECT_GT(spread(i), 0.01) << i;
  for (double x : sol.rolling.v[8]) EXPECT_EQ(x, 0.0);
}

TEST(Levels, CycleIsALogicError) {
  // A hand-built structure whose two edges feed each other.
  Network net = generate_test1().network;
  auto sol = solve_distance(net);
  Structure st = sol.structure;
  st.edges[2].singular.reset();
  st.edges[2].top = EdgeEnd::Start;
  st.vertices[0].inc_plus = {EdgeId(2)};
  EXPECT_THROW(dependency_levels(net, st), std::logic_error);
}
