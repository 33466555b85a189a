#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "helpers.hpp"
#include "netdep/graph.hpp"

using namespace netdep;

namespace {

LabeledNetwork parse(const std::string& text) {
  std::istringstream in(text);
  return load_edge_list(in);
}

void expect_error(auto&& fn, const std::string& code) {
  try {
    fn();
    FAIL() << "expected error " << code;
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}

}  // namespace

TEST(EdgeList, LabelsInFirstAppearanceOrder) {
  const auto ln = parse("src,dst\na,b\nb,c\n");
  EXPECT_EQ(ln.network.size(), 3u);
  EXPECT_EQ(ln.labels, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(ln.network.edges(), (std::vector<Edge>{{0, 1}, {1, 2}}));
  EXPECT_EQ(ln.index.at("c"), 2u);
}

TEST(EdgeList, ReversedDuplicateCollapses) {
  EXPECT_EQ(parse("src,dst\na,b\nb,a\n").network.edge_count(), 1u);
}

TEST(EdgeList, SelfLoopReportsRow) {
  try {
    parse("src,dst\na,a\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "self-loop");
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
  }
}

TEST(EdgeList, Malformed) {
  expect_error([] { parse(""); }, "empty-file");
  expect_error([] { parse("src,dst\n"); }, "empty-file");
  expect_error([] { parse("from,to\na,b\n"); }, "bad-header");
  expect_error([] { parse("src,dst\na,b,c\n"); }, "malformed-row");
  expect_error([] { parse("src,dst\na,\n"); }, "malformed-row");
}

TEST(EdgeList, ToleratesCrlfBomAndBlankLines) {
  const auto ln = parse("\xEF\xBB\xBFsrc,dst\r\n\r\nx,y\r\n y , z \r\n");
  EXPECT_EQ(ln.network.edge_count(), 2u);
  EXPECT_EQ(ln.labels[2], "z");
}

TEST(EdgeList, WriteThenReadRoundTrips) {
  const auto ln = parse("src,dst\nq,r\nr,s\ns,q\nt,q\n");
  std::ostringstream out;
  write_edge_list(out, ln.network, ln.labels);
  const auto back = parse(out.str());
  EXPECT_EQ(back.labels, ln.labels);
  EXPECT_EQ(back.network.edges(), ln.network.edges());
}

TEST(Network, RejectsBadEndpointsAndSelfLoops) {
  expect_error([] { Network(3, {{0, 3}}); }, "bad-endpoint");
  expect_error([] { Network(3, {{1, 1}}); }, "self-loop");
}

TEST(Adjacency, PathAndComplete) {
  const auto w = adjacency_weights(testutil::path(3));
  Eigen::MatrixXd expect(3, 3);
  expect << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  EXPECT_EQ(w.dense(), expect);
  const auto k3 = adjacency_weights(testutil::complete(3)).dense();
  EXPECT_EQ(k3, Eigen::MatrixXd::Ones(3, 3) - Eigen::MatrixXd::Identity(3, 3));
}

TEST(Adjacency, EdgelessHasNoTies) {
  try {
    adjacency_weights(Network(5, {}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "no-ties");
    EXPECT_EQ(e.kind(), ErrorKind::degenerate);
  }
}

TEST(WeightMatrix, Validation) {
  expect_error([] { WeightMatrix(Eigen::MatrixXd::Identity(2, 2)); }, "bad-weights");
  Eigen::MatrixXd neg = Eigen::MatrixXd::Zero(2, 2);
  neg(0, 1) = -1;
  expect_error([&] { WeightMatrix{neg}; }, "bad-weights");
  expect_error([] { WeightMatrix(Eigen::MatrixXd::Zero(3, 3)); }, "no-ties");
}

TEST(Geodesic, PathCompleteAndComponents) {
  EXPECT_EQ(geodesic_distances(testutil::path(3))(0, 2), 2);
  const auto d4 = geodesic_distances(testutil::complete(4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) EXPECT_EQ(d4(i, j), i == j ? 0 : 1);
  const auto d = geodesic_distances(Network(3, {{0, 1}}));
  EXPECT_EQ(d(0, 2), kUnreachable);
  EXPECT_EQ(d(2, 2), 0);
}

TEST(Geodesic, InverseWeights) {
  const auto w = inverse_geodesic_weights(Network(4, {{0, 1}, {1, 2}}), 2.0);
  EXPECT_DOUBLE_EQ(w(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(w(0, 2), 0.25);
  EXPECT_DOUBLE_EQ(w(0, 3), 0.0);
  EXPECT_DOUBLE_EQ(w(3, 3), 0.0);
}

TEST(Degrees, SmallGraphs) {
  EXPECT_EQ(degrees(testutil::path(3)), (std::vector<std::size_t>{1, 2, 1}));
  EXPECT_EQ(degrees(testutil::complete(4)), (std::vector<std::size_t>{3, 3, 3, 3}));
  EXPECT_EQ(degrees(testutil::star(4)), (std::vector<std::size_t>{4, 1, 1, 1, 1}));
}

TEST(Generator, DenseAndImpossible) {
  EXPECT_EQ(generate_random_network(5, ErdosRenyi{1.0}, 9, false).edge_count(), 10u);
  expect_error([] { generate_random_network(5, ErdosRenyi{0.0}, 9, true); }, "could-not-connect");
  expect_error([] { generate_random_network(10, SmallWorld{3, 0.1}, 1, false); }, "bad-model");
  expect_error([] { generate_random_network(10, ErdosRenyi{1.5}, 1, false); }, "bad-model");
}

TEST(Generator, ErdosRenyiEdgeCountInBinomialBand) {
  const double p = 0.03;
  const auto net = generate_random_network(200, ErdosRenyi{p}, 1, true);
  EXPECT_TRUE(is_connected(net));
  const auto [lo, hi] = testutil::binomial_band(200 * 199 / 2, p, 0.99);
  EXPECT_GE(static_cast<double>(net.edge_count()), lo);
  EXPECT_LE(static_cast<double>(net.edge_count()), hi);
}

TEST(Generator, SmallWorldKeepsEdgeCount) {
  const auto net = generate_random_network(200, SmallWorld{4, 0.1}, 3, false);
  EXPECT_EQ(net.edge_count(), 400u);
  const auto ring = generate_random_network(10, SmallWorld{2, 0.0}, 3, false);
  EXPECT_EQ(ring.edge_count(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_TRUE(ring.has_edge(i, (i + 1) % 10));
}

TEST(Generator, BitReproducible) {
  for (std::uint64_t seed : {0ull, 1ull, 77ull}) {
    EXPECT_EQ(generate_random_network(120, ErdosRenyi{0.05}, seed, true).edges(),
              generate_random_network(120, ErdosRenyi{0.05}, seed, true).edges());
    EXPECT_EQ(generate_random_network(120, SmallWorld{6, 0.3}, seed, true).edges(),
              generate_random_network(120, SmallWorld{6, 0.3}, seed, true).edges());
  }
  EXPECT_NE(generate_random_network(120, ErdosRenyi{0.05}, 1, false).edges(),
            generate_random_network(120, ErdosRenyi{0.05}, 2, false).edges());
}

TEST(Generator, DefaultNetworkIsConnected) {
  const auto net = default_simulation_network();
  EXPECT_EQ(net.size(), 200u);
  EXPECT_TRUE(is_connected(net));
}

// Structural invariants over many random networks.
TEST(GraphProperties, AdjacencyDegreesAndTriangleInequality) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const std::size_t n = 5 + seed % 30;
    const NetworkModel model = seed % 2 ? NetworkModel(ErdosRenyi{0.15}) : NetworkModel(SmallWorld{4, 0.3});
    const auto net = generate_random_network(n, model, seed, false);
    const auto a = net.adjacency();
    EXPECT_EQ(a, a.transpose());
    EXPECT_EQ(a.diagonal().sum(), 0.0);
    const auto deg = degrees(net);
    EXPECT_EQ(std::accumulate(deg.begin(), deg.end(), std::size_t{0}), 2 * net.edge_count());
    const auto d = geodesic_distances(net);
    EXPECT_EQ(d, d.transpose());
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      for (Eigen::Index j = 0; j < d.rows(); ++j)
        for (Eigen::Index k = 0; k < d.rows(); ++k) {
          if (d(i, k) == kUnreachable || d(k, j) == kUnreachable) continue;
          ASSERT_NE(d(i, j), kUnreachable);
          ASSERT_LE(d(i, j), d(i, k) + d(k, j));
        }
  }
}
