#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"

using namespace sandnet;

namespace {

const char* kTestOne =
    "#SPNET\n"
    "#v 0 0 0 t\n"
    "#v 1 0 0.5 b\n"
    "#v 2 -0.5 0 b\n"
    "#v 3 1 0 b\n"
    "#e 1 0 1 49 1-t 1\n"
    "#e 2 0 2 49 1-t 1\n"
    "#e 3 0 3 99 1-t 1\n";

NetFileErrorKind error_kind(const std::string& text, const ReadOptions& opts = {}) {
  try {
    (void)read_net(text, opts);
  } catch (const NetFileError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for:\n" << text;
  return NetFileErrorKind::Io;
}

}  // namespace

TEST(Read, TestOneFile) {
  NetFile f = read_net(std::string(kTestOne));
  const Network& net = f.network;
  ASSERT_EQ(net.vertex_count(), 4u);
  ASSERT_EQ(net.edge_count(), 3u);
  EXPECT_FALSE(net.vertices()[0].is_boundary());
  EXPECT_EQ(net.boundary_count(), 3u);
  EXPECT_DOUBLE_EQ(net.edges()[0].length, 0.5);
  EXPECT_DOUBLE_EQ(net.edges()[2].length, 1.0);
  EXPECT_EQ(net.edges()[2].interior_nodes, 99);
  EXPECT_TRUE(same_network(f, generate_test1()));
}

TEST(Read, AttachedIdsCommentsAndCrlf) {
  std::string text =
      "#SPNET\r\n"
      "// star with one arm\r\n"
      "#v0 0 0 b   // left\r\n"
      "#v1 1 0 b\r\n"
      "\r\n"
      "#e1 0 1 9 2*chi(abs(t-0.25) <= 0.125) 1 + t\r\n";
  NetFile f = read_net(text);
  ASSERT_EQ(f.network.edge_count(), 1u);
  EXPECT_EQ(f.network.edges()[0].source.str(), "2*chi(abs(t-0.25)<=0.125)");
  EXPECT_EQ(f.network.edges()[0].eta_inv.str(), "1+t");
  EXPECT_TRUE(f.warnings.empty());
}

TEST(Read, Extensions) {
  std::string text = std::string(kTestOne) + "#c 0 1 0.25\n#c 0 2 0.75\n#g 0 1\n#k 0 1 0.5\n#k 0 2 0.5\n";
  NetFile f = read_net(text);
  ASSERT_EQ(f.transmission.size(), 2u);
  EXPECT_EQ(f.transmission[1].value, 0.75);
  ASSERT_EQ(f.sources.size(), 1u);
  EXPECT_EQ(f.source_split.size(), 2u);

  NetFile strict = read_net(text, ReadOptions{true});
  EXPECT_TRUE(strict.transmission.empty());
  EXPECT_EQ(strict.warnings.size(), 5u);
}

TEST(Read, Errors) {
  EXPECT_EQ(error_kind("#v 0 0 0 b\n"), NetFileErrorKind::Header);
  EXPECT_EQ(error_kind(""), NetFileErrorKind::Header);
  EXPECT_EQ(error_kind("#SPNET\n#v 0 0 b\n"), NetFileErrorKind::Syntax);
  EXPECT_EQ(error_kind("#SPNET\n#v 0 0 0 x\n"), NetFileErrorKind::Syntax);
  EXPECT_EQ(error_kind("#SPNET\n#q 1\n"), NetFileErrorKind::Syntax);
  EXPECT_EQ(error_kind("#SPNET\nv 0 0 0 b\n"), NetFileErrorKind::Syntax);
  EXPECT_EQ(error_kind("#SPNET\n#v 0 0 0 b\n#v 0 1 0 b\n"), NetFileErrorKind::Syntax);
  EXPECT_EQ(error_kind("#SPNET\n#v 0 0 0 b\n#v 1 1 0 b\n#e 1 0 1 9 1+ 1\n"), NetFileErrorKind::Syntax);
  EXPECT_EQ(error_kind("#SPNET\n#v 0 0 0 b\n#v 1 1 0 b\n#e 1 0 7 9 1 1\n"), NetFileErrorKind::Reference);
  EXPECT_EQ(error_kind(std::string(kTestOne) + "#c 9 1 1\n"), NetFileErrorKind::Reference);
  EXPECT_EQ(error_kind(std::string(kTestOne) + "#c 1 2 1\n"), NetFileErrorKind::Reference);
  EXPECT_EQ(error_kind("#SPNET\n#v 0 0 0 t\n#v 1 1 0 t\n#e 1 0 1 9 1 1\n"), NetFileErrorKind::Validation);
  EXPECT_EQ(error_kind(std::string(kTestOne) + "#c 0 1 0.5\n"), NetFileErrorKind::Validation);
  EXPECT_EQ(error_kind("#SPNET\n#v 0 0 0 b\n#v 1 1 0 b\n#e 1 0 1 9 1 -1 -1\n"), NetFileErrorKind::Syntax);
}

TEST(Read, LineNumberInMessage) {
  try {
    (void)read_net(std::string("#SPNET\n#v 0 0 0 b\n#v 1 zz 0 b\n"));
    FAIL();
  } catch (const NetFileError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Write, HeaderAndExtensions) {
  NetFile f = generate_test1();
  EXPECT_EQ(write_net(f).rfind("#SPNET\n", 0), 0u);
  f.transmission.push_back({VertexId(0), EdgeId(0), 0.5});
  f.transmission.push_back({VertexId(0), EdgeId(1), 0.5});
  EXPECT_NE(write_net(f).find("\n#c 0 1 0.5\n"), std::string::npos);
}

TEST(Write, RoundTripOnGeneratedNetworks) {
  std::vector<NetFile> files = {generate_test1(), generate_test2(), generate_test3(), generate_sierpinski(1),
                                generate_sierpinski(3), generate_star(5, {0.3, 0.7, 1.1, 0.9, 2.0})};
  for (std::uint64_t s = 1; s <= 20; ++s) files.push_back(oracle::random_network(s));
  NetFile ext = generate_test1();
  ext.transmission = {{VertexId(0), EdgeId(0), 0.3}, {VertexId(0), EdgeId(1), 0.7}};
  ext.sources = {{VertexId(0), 0.125}};
  ext.source_split = {{VertexId(0), EdgeId(0), 0.5}, {VertexId(0), EdgeId(1), 0.5}};
  files.push_back(ext);
  for (const auto& f : files) {
    std::string once = write_net(f);
    NetFile back = read_net(once);
    EXPECT_TRUE(same_network(f, back)) << once;
    EXPECT_EQ(write_net(back), once);
  }
}

TEST(Generate, TestOneLengths) {
  const Network& net = generate_test1().network;
  EXPECT_DOUBLE_EQ(net.edges()[0].length, 0.5);
  EXPECT_DOUBLE_EQ(net.edges()[1].length, 0.5);
  EXPECT_DOUBLE_EQ(net.edges()[2].length, 1.0);
  EXPECT_DOUBLE_EQ(net.edges()[0].source_at(0.25), 0.5);  // 1 - 2s on arclength
}

TEST(Generate, SierpinskiCounts) {
  const Network& two = generate_sierpinski(2).network;
  EXPECT_EQ(two.vertex_count(), 6u);
  EXPECT_EQ(two.edge_count(), 9u);
  EXPECT_EQ(two.boundary_count(), 3u);
  const Network& three = generate_sierpinski(3).network;
  EXPECT_EQ(three.vertex_count(), 15u);
  EXPECT_EQ(three.edge_count(), 27u);
  for (const Edge& e : three.edges()) EXPECT_NEAR(e.length, 1.0, 1e-12);
  const Network& test3 = generate_test3().network;
  EXPECT_EQ(test3.vertex_count(), 6u);
  EXPECT_EQ(test3.edge_count(), 9u);
}

TEST(Generate, StarAndParameterChecks) {
  GenOptions zero;
  zero.source = "0";
  NetFile star = generate_star(3, {1.0}, zero);
  EXPECT_TRUE(validate(star.network).ok());
  Solution sol = solve_pair(star.network);
  for (const auto& v : sol.rolling.v)
    for (double x : v) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(generate_star(2), std::invalid_argument);
  EXPECT_THROW(generate_star(3, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(generate_sierpinski(0), std::invalid_argument);
}

TEST(Generate, AllOutputsValidate) {
  for (const auto& f : {generate_test1(), generate_test2(), generate_test3(), generate_sierpinski(1),
                        generate_sierpinski(2), generate_sierpinski(4), generate_star(7)})
    EXPECT_TRUE(validate(f.network).ok()) << validate(f.network).summary();
}
