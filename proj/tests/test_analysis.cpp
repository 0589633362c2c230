#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"

using namespace sandnet;

namespace {

// Test 1 by hand: d falls linearly from the centre on the short edges and
// has a tent on the long edge with its top at s = 1/4.
double exact_d(std::size_t j, double s) {
  if (j < 2) return 0.5 - s;
  return std::min(0.5 + s, 1.0 - s);
}

double exact_v(std::size_t j, double s) {
  // f = 1 - 2s on the short edges, 1 - s on the long edge
  if (j < 2) return 7.0 / 64.0 + s - s * s;
  double from_top = std::fabs((s - s * s / 2.0) - (0.25 - 0.03125));
  return from_top;
}

ExactSolution hand_exact() { return {exact_d, exact_v}; }

UniquenessReport check(const Network& net) {
  Solution sol = solve_pair(net);
  return uniqueness_check(net, sol.distance.grid, sol.distance.field, sol.distance.structure, &sol.rolling);
}

}  // namespace

TEST(Uf, MatchesBruteForceOnCorpus) {
  for (auto& [name, file] : oracle::corpus()) {
    const Network& net = file.network;
    auto ds = solve_distance(net);
    auto fast = compute_uf(net, ds.grid, ds.field);
    auto slow = oracle::brute_uf(net, ds.grid, ds.field);
    for (NodeId n = 0; n < ds.grid.node_count(); ++n)
      EXPECT_NEAR(fast.values[n], slow[n], 1e-12 * (1.0 + ds.field.max())) << name << " node " << n;
  }
}

TEST(Uf, BoundedByDistanceAndEqualOnRollingSupport) {
  for (auto make : {generate_test1, generate_test2, generate_test3}) {
    const Network net = make(0.01).network;
    Solution sol = solve_pair(net);
    const double tol = 1e-12 * (1.0 + sol.distance.field.max());
    auto uf = compute_uf(net, sol.distance.grid, sol.distance.field);
    for (NodeId n = 0; n < uf.values.size(); ++n) {
      EXPECT_GE(uf.values[n], 0.0);
      EXPECT_LE(uf.values[n], sol.distance.field.delta[n] + tol);
    }
    for (std::size_t j = 0; j < net.edge_count(); ++j) {
      const EdgeGrid& g = sol.distance.grid.edge(EdgeId(j));
      for (std::size_t m = 0; m < g.size(); ++m)
        if (sol.rolling.v[j][m] > 0.0) { EXPECT_NEAR(uf.values[g.nodes[m]], sol.distance.field.delta[g.nodes[m]], tol); }
    }
  }
}

TEST(Uf, EqualsDistanceOnTestOne) {
  const Network net = generate_test1().network;
  auto ds = solve_distance(net);
  auto uf = compute_uf(net, ds.grid, ds.field);
  for (NodeId n = 0; n < uf.values.size(); ++n) EXPECT_NEAR(uf.values[n], ds.field.delta[n], 1e-14);
}

TEST(Uf, EmptySourceIsFlagged) {
  GenOptions opts;
  opts.source = "0";
  NetFile star = generate_star(4, {1.0}, opts);
  auto ds = solve_distance(star.network);
  auto uf = compute_uf(star.network, ds.grid, ds.field);
  EXPECT_TRUE(uf.empty_source);
  for (double x : uf.values) EXPECT_EQ(x, 0.0);
  star.sources = {{VertexId(0), 1.0}};
  auto with_g = compute_uf(star.network, ds.grid, ds.field, TransmissionSpec::from(star));
  EXPECT_FALSE(with_g.empty_source);
  for (NodeId n = 0; n < with_g.values.size(); ++n) EXPECT_NEAR(with_g.values[n], ds.field.delta[n], 1e-14);
}

TEST(Uniqueness, Verdicts) {
  auto one = check(generate_test1().network);
  EXPECT_TRUE(one.unique);
  EXPECT_TRUE(one.gap_nodes.empty());
  EXPECT_EQ(one.singular.size(), 1u);

  auto two = check(generate_test2().network);
  EXPECT_FALSE(two.unique);
  EXPECT_FALSE(two.gap_nodes.empty());

  auto three = check(generate_test3().network);
  EXPECT_FALSE(three.unique);
  EXPECT_NE(std::find(three.zero_edges.begin(), three.zero_edges.end(), EdgeId(8)), three.zero_edges.end());
  EXPECT_NE(std::find(three.gap_edges.begin(), three.gap_edges.end(), EdgeId(8)), three.gap_edges.end());
}

TEST(Errors, TestOneIsReproducedExactly) {
  const Network net = generate_test1().network;
  Solution sol = solve_pair(net);
  ErrorRow nodes = errors_against(net, sol, hand_exact(), 0, Sampling::Nodes);
  EXPECT_LE(nodes.linf_d, 1e-10);
  EXPECT_LE(nodes.l1_d, 1e-10);
  EXPECT_LE(nodes.linf_v, 1e-10);
  EXPECT_LE(nodes.l1_v, 1e-10);
  ErrorRow fine = errors_against(net, sol, hand_exact());
  EXPECT_LE(fine.linf_d, 1e-10);
  // between nodes only the linear interpolant of a quadratic is seen
  EXPECT_LE(fine.linf_v, 0.01 * 0.01 / 4.0 + 1e-12);
}

TEST(Errors, LibraryClosedFormAgreesWithHandDerivation) {
  auto ex = known_exact(generate_test1().network);
  ASSERT_TRUE(ex.has_value());
  for (std::size_t j = 0; j < 3; ++j)
    for (int k = 0; k <= 40; ++k) {
      double s = (j < 2 ? 0.5 : 1.0) * k / 40.0;
      EXPECT_NEAR(ex->d(j, s), exact_d(j, s), 1e-15);
      EXPECT_NEAR(ex->v(j, s), exact_v(j, s), 1e-15);
    }
  EXPECT_FALSE(known_exact(generate_test2().network).has_value());
}

TEST(Errors, SolutionAgainstItselfIsZero) {
  const Network net = generate_test3().network;
  Solution sol = solve_pair(net);
  ErrorRow row = errors_against(net, sol, as_reference(sol), 1000);
  EXPECT_LE(row.linf_d, 1e-15);
  EXPECT_LE(row.linf_v, 1e-15);
}

TEST(Convergence, OrdersOnGridsMissingTheTop) {
  ConvergenceOptions opts;
  opts.policy = GridPolicy::OddCells;
  opts.samples = 2000;
  ErrorTable t = convergence_study(generate_test1(), opts);
  EXPECT_FALSE(t.reference);
  EXPECT_GE(t.slopes[0], 0.75);
  EXPECT_LE(t.slopes[0], 1.25);
  EXPECT_GE(t.slopes[1], 1.7);
  EXPECT_LE(t.slopes[1], 2.3);
  EXPECT_GE(t.slopes[2], 0.75);
  EXPECT_GE(t.slopes[3], 0.75);
}

TEST(Convergence, SecondOrderWhenTheTopIsANode) {
  ConvergenceOptions opts;
  opts.policy = GridPolicy::QuarterCells;
  opts.samples = 2000;
  ErrorTable t = convergence_study(generate_test1(), opts);
  EXPECT_GE(t.slopes[2], 1.7);
  EXPECT_LE(t.slopes[2], 2.3);
  EXPECT_GE(t.slopes[3], 1.7);
  EXPECT_LE(t.slopes[3], 2.3);
}

TEST(Convergence, NeedsTwoSteps) {
  ConvergenceOptions opts;
  opts.h_list = {0.01};
  EXPECT_THROW(convergence_study(generate_test1(), opts), std::invalid_argument);
}

TEST(Convergence, ReferenceModeOnTestThree) {
  ConvergenceOptions opts;
  opts.h_list = {0.1, 0.05, 0.025, 0.0125};
  opts.samples = 500;
  ErrorTable t = convergence_study(generate_test3(), opts);
  EXPECT_TRUE(t.reference);
  for (std::size_t k = 1; k < t.rows.size(); ++k) EXPECT_LT(t.rows[k].linf_v, t.rows[k - 1].linf_v);
  EXPECT_LT(t.rows.back().l1_v, t.rows.front().l1_v);
  EXPECT_LT(t.rows.back().linf_d, t.rows.front().linf_d);
}

TEST(Convergence, RefiningByHalfStepsLowersTheError) {
  NetFile f = generate_test1();
  double prev = std::numeric_limits<double>::infinity();
  for (double h = 0.09; h > 0.005; h /= 1.5) {
    Network net = with_step(f.network, h, GridPolicy::OddCells);
    ErrorRow row = errors_against(net, solve_pair(net), hand_exact(), 1000);
    EXPECT_LT(row.l1_d, prev) << h;
    prev = row.l1_d;
  }
}

TEST(FitSlope, ExactPowerLawAndTooFewPoints) {
  std::vector<double> h = {0.1, 0.05, 0.02, 0.01}, e;
  for (double x : h) e.push_back(3.0 * x * x);
  EXPECT_NEAR(fit_slope(h, e), 2.0, 1e-12);
  e[2] = 0.0;
  EXPECT_TRUE(std::isnan(fit_slope(h, e)));
}

TEST(CellPolicy, Counts) {
  EXPECT_EQ(cells_for(1.0, 0.1, GridPolicy::Nearest), 10);
  EXPECT_EQ(cells_for(1.0, 0.1, GridPolicy::OddCells), 11);
  EXPECT_EQ(cells_for(1.0, 0.1, GridPolicy::QuarterCells), 12);
  EXPECT_EQ(cells_for(0.01, 0.1, GridPolicy::Nearest), 2);
}

TEST(WeakForm, ResidualShrinksWithTheStep) {
  NetFile f = generate_test1();
  double prev = 0.0;
  for (double h : {0.02, 0.01, 0.005}) {
    Network net = with_step(f.network, h);
    double r = weak_residual_max(net, solve_pair(net));
    if (prev > 0.0) { EXPECT_GE(prev / r, 1.8) << h; }
    prev = r;
  }
}

TEST(WeakForm, LinearTestFunctionOnTent) {
  // v = |1/2 - s|, d' = sign(1/2 - s): for psi vanishing at both ends the
  // left side is exactly int f psi when the top is a node.
  std::vector<Vertex> vs = {{0, {0, 0}, VertexKind::Boundary}, {1, {1, 0}, VertexKind::Boundary}};
  Edge e;
  e.start = VertexId(0);
  e.end = VertexId(1);
  e.source = Expr(1.0);
  e.interior_nodes = 9;
  Network net(vs, {e});
  Solution sol = solve_pair(net);
  TestFunction psi;
  psi.vertex_value = {0.0, 0.0};
  psi.knots = {{{0.0, 0.0}, {0.5, 1.0}, {1.0, 0.0}}};
  EXPECT_NEAR(weak_residual(net, sol, psi), 0.0, 1e-14);
}

TEST(MassBalance, BoundsBySourceKind) {
  MassBalance one = mass_balance(generate_test1().network, solve_pair(generate_test1().network));
  EXPECT_FALSE(one.indicator);
  EXPECT_TRUE(one.ok());
  EXPECT_NEAR(one.poured, 1.0, 1e-14);
  NetFile band = generate_star(3, {1.0, 0.7, 0.4}, GenOptions{0.01, "2*chi(abs(t-0.25)<=0.125)", "1"});
  MassBalance b = mass_balance(band.network, solve_pair(band.network));
  EXPECT_TRUE(b.indicator);
  EXPECT_TRUE(b.ok()) << b.error << " > " << b.bound;
}
