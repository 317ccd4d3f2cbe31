#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sphnn/error.hpp"
#include "sphnn/hypergraph.hpp"

using namespace sphnn;

namespace {

Hypergraph two_edges(std::vector<double> w = {}) {
  return Hypergraph("M", 4, {{0, 1, 2}, {1, 2, 3}}, std::move(w));
}

}  // namespace

TEST(Hypergraph, IncidenceMatrixTranscribesMembership) {
  const Hypergraph hg = two_edges();
  EXPECT_EQ(hg.incidence_matrix(), (Matrix{{1, 0}, {1, 1}, {1, 1}, {0, 1}}));
  EXPECT_EQ(hg.num_incidences(), 6u);
  EXPECT_EQ(hg.fixed_arity(), 3u);
  EXPECT_EQ(hg.weights(), (std::vector<double>{1, 1}));
  for (NodeId v = 0; v < 4; ++v)
    for (const auto& inc : hg.incident_edges(v)) EXPECT_EQ(hg.members(inc.edge)[inc.slot], v);
}

TEST(Hypergraph, EmptyInstanceSetSignals) {
  const HeteroGraph g = load_graph(oracle::fixture("tiny_dblp"));
  EXPECT_THROW(build_hypergraph(g, "APA", {}), EmptyHypergraph);
  EXPECT_THROW(Hypergraph("M", 3, {}), EmptyHypergraph);
}

TEST(Hypergraph, InvalidMembersRejected) {
  EXPECT_THROW(Hypergraph("M", 3, {{0}}), DataError);
  EXPECT_THROW(Hypergraph("M", 3, {{0, 0}}), DataError);
  EXPECT_THROW(Hypergraph("M", 3, {{0, 3}}), DataError);
  EXPECT_THROW(Hypergraph("M", 3, {{0, 1}}, {0.0}), DataError);
  EXPECT_THROW(Hypergraph("M", 3, {{0, 1}}, {1.0, 1.0}), DataError);
}

TEST(Hypergraph, ApaFixtureHasOneHyperedge) {
  const HeteroGraph g = load_graph(oracle::fixture("tiny_dblp"));
  const auto p = parse_motif(oracle::read_file(oracle::fixture("motifs/apa.json")), g);
  const auto inst = enumerate_instances(g, p);
  ASSERT_EQ(inst.size(), oracle::brute_force_instances(g, p).size());
  const Hypergraph hg = build_hypergraph(g, p.id, inst);
  ASSERT_EQ(hg.num_edges(), 1u);
  const std::vector<NodeId> expect{*g.find_node("a0"), *g.find_node("a1"), *g.find_node("p0")};
  auto members = hg.members(0);
  std::sort(members.begin(), members.end());
  EXPECT_EQ(members, expect);
  const Matrix h = hg.incidence_matrix();
  double ones = 0.0;
  for (double x : h.data()) ones += x;
  EXPECT_EQ(ones, 3.0);
  EXPECT_EQ(edge_degrees(hg), (std::vector<double>{3}));
  EXPECT_EQ(node_degrees(hg)[*g.find_node("v0")], 0.0);
}

TEST(Hypergraph, Degrees) {
  EXPECT_EQ(node_degrees(two_edges()), (std::vector<double>{1, 2, 2, 1}));
  EXPECT_EQ(node_degrees(two_edges({2, 3})), (std::vector<double>{2, 5, 5, 3}));
  EXPECT_EQ(edge_degrees(two_edges()), (std::vector<double>{3, 3}));
  EXPECT_EQ(node_degrees(Hypergraph("M", 5, {{0, 1}}))[4], 0.0);
}

TEST(Hypergraph, AdjacencyExample) {
  EXPECT_EQ(adjacency(two_edges()),
            (Matrix{{1, 1, 1, 0}, {1, 2, 2, 1}, {1, 2, 2, 1}, {0, 1, 1, 1}}));
  EXPECT_EQ(adjacency(Hypergraph("M", 4, {{0, 1}}))(2, 3), 0.0);
}

TEST(HypergraphProperty, MatrixLaws) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 3 + rng() % 28;
    const Hypergraph hg = oracle::random_hypergraph(rng, n, 1 + rng() % 20, 5);
    const Matrix h = oracle::dense_h(hg);
    EXPECT_EQ(hg.incidence_matrix(), h);
    const Matrix expect = oracle::naive_matmul(oracle::naive_matmul(h, oracle::diag(hg.weights())),
                                               oracle::naive_transpose(h));
    const Matrix a = adjacency(hg);
    EXPECT_EQ(a, expect) << "seed " << seed;
    EXPECT_EQ(a, transpose(a));

    const auto d = node_degrees(hg);
    const auto delta = edge_degrees(hg);
    double sum_d = 0.0, sum_wdelta = 0.0, sum_delta = 0.0, ones = 0.0;
    for (double x : d) sum_d += x;
    for (std::size_t e = 0; e < delta.size(); ++e) {
      sum_wdelta += hg.weight(e) * delta[e];
      sum_delta += delta[e];
    }
    for (double x : h.data()) ones += x;
    EXPECT_EQ(sum_d, sum_wdelta);
    EXPECT_EQ(sum_delta, ones);

    const Hypergraph unit("U", n, [&] {
      std::vector<std::vector<NodeId>> m;
      for (std::size_t e = 0; e < hg.num_edges(); ++e) m.push_back(hg.members(e));
      return m;
    }());
    const Matrix au = adjacency(unit);
    const auto du = node_degrees(unit);
    for (std::size_t v = 0; v < n; ++v) EXPECT_EQ(au(v, v), du[v]);
  }
}

TEST(Hypergraph, PairwiseReduction) {
  const HeteroGraph g = load_graph(oracle::fixture("tiny_dblp"));
  const Hypergraph hg = pairwise_hypergraph(g);
  EXPECT_EQ(hg.motif_id(), "pairwise");
  ASSERT_EQ(hg.num_edges(), g.num_edges());
  for (std::size_t e = 0; e < hg.num_edges(); ++e)
    EXPECT_EQ(hg.members(e), (std::vector<NodeId>{g.edges()[e].src, g.edges()[e].dst}));
}

TEST(Hypergraph, JsonExport) {
  const auto j = hypergraph_to_json(two_edges({1, 2}));
  EXPECT_EQ(j["motif"], "M");
  EXPECT_EQ(j["n_nodes"], 4);
  EXPECT_EQ(j["edges"], nlohmann::json::parse("[[0,1,2],[1,2,3]]"));
  EXPECT_EQ(j["weights"], nlohmann::json::parse("[1.0,2.0]"));
}
