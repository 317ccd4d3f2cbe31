#include <algorithm>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sphnn/error.hpp"
#include "sphnn/motif.hpp"

using namespace sphnn;

namespace {

const char* kApa = R"({"id": "APA",
  "roles": [{"name": "a1", "type": "author"}, {"name": "p", "type": "paper"},
            {"name": "a2", "type": "author"}],
  "edges": [["a1", "p", "writes"], ["a2", "p", "writes"]]})";

HeteroGraph authors_papers(const std::vector<std::pair<int, int>>& writes, int n_authors,
                           int n_papers) {
  HeteroGraph::Builder b;
  const auto author = b.add_node_type("author", 1);
  const auto paper = b.add_node_type("paper", 1);
  const auto w = b.add_edge_type("writes");
  for (int i = 0; i < n_authors; ++i) b.add_node("a" + std::to_string(i), author, {0.0});
  for (int i = 0; i < n_papers; ++i) b.add_node("p" + std::to_string(i), paper, {0.0});
  for (auto [a, p] : writes) b.add_edge(a, n_authors + p, w);
  return std::move(b).build();
}

std::set<std::vector<NodeId>> assignments(const std::vector<MotifInstance>& inst) {
  std::set<std::vector<NodeId>> s;
  for (const auto& i : inst) s.insert(i.assignment);
  return s;
}

}  // namespace

TEST(Motif, ParsesApa) {
  const HeteroGraph g = authors_papers({{0, 0}}, 1, 1);
  const MotifPattern p = parse_motif(kApa, g);
  EXPECT_EQ(p.id, "APA");
  EXPECT_EQ(p.arity(), 3u);
  EXPECT_EQ(p.edges.size(), 2u);
  EXPECT_EQ(p.roles[1].type, *g.find_type("paper"));
}

TEST(Motif, ParseErrors) {
  const HeteroGraph g = authors_papers({{0, 0}}, 1, 1);
  auto kind_of = [&](const std::string& spec) {
    try {
      parse_motif(spec, g);
    } catch (const DataError& e) {
      return e.kind();
    }
    return DataErrorKind::MissingFile;
  };
  EXPECT_EQ(kind_of(R"({"id":"X","roles":[{"name":"a","type":"author"}],"edges":[]})"),
            DataErrorKind::InvalidPattern);
  EXPECT_EQ(kind_of(R"({"id":"X","roles":[{"name":"a","type":"author"},{"name":"p","type":"paper"}],
                       "edges":[["a","x","writes"]]})"),
            DataErrorKind::InvalidPattern);
  EXPECT_EQ(kind_of(R"({"id":"X","roles":[{"name":"a","type":"author"},{"name":"p","type":"paper"},
                       {"name":"b","type":"author"}],"edges":[["a","p","writes"]]})"),
            DataErrorKind::InvalidPattern);
  EXPECT_EQ(kind_of(R"({"id":"X","roles":[{"name":"a","type":"venue"},{"name":"p","type":"paper"}],
                       "edges":[["a","p","writes"]]})"),
            DataErrorKind::UnknownName);
  EXPECT_EQ(kind_of(R"({"id":"X","roles":[{"name":"a","type":"author"},{"name":"p","type":"paper"}],
                       "edges":[["a","p","cites"]]})"),
            DataErrorKind::UnknownName);
  EXPECT_EQ(kind_of("not json"), DataErrorKind::InvalidPattern);
  std::string big = R"({"id":"X","roles":[)";
  for (int i = 0; i < 7; ++i) big += std::string(i ? "," : "") + R"({"name":"r)" + std::to_string(i) + R"(","type":"author"})";
  big += R"(],"edges":[]})";
  EXPECT_EQ(kind_of(big), DataErrorKind::InvalidPattern);
}

TEST(Motif, ApaOnTwoAuthorFixtureHasOneInstance) {
  const HeteroGraph g = authors_papers({{0, 0}, {1, 0}}, 2, 1);
  const MotifPattern p = parse_motif(kApa, g);
  const auto inst = enumerate_instances(g, p);
  ASSERT_EQ(inst.size(), 1u);
  EXPECT_EQ(inst[0].node_set, (std::vector<NodeId>{0, 1, 2}));
  EXPECT_EQ(assignments(inst), oracle::brute_force_instances(g, p));
}

TEST(Motif, ApaWithSingleAuthorPapersIsEmpty) {
  const HeteroGraph g = authors_papers({{0, 0}, {1, 1}, {2, 2}}, 3, 3);
  EXPECT_TRUE(enumerate_instances(g, parse_motif(kApa, g)).empty());
}

TEST(Motif, TrianglesInCompleteGraph) {
  HeteroGraph::Builder b;
  const auto t = b.add_node_type("x", 1);
  const auto e = b.add_edge_type("link");
  for (int i = 0; i < 4; ++i) b.add_node("n" + std::to_string(i), t, {0.0});
  for (NodeId i = 0; i < 4; ++i)
    for (NodeId j = i + 1; j < 4; ++j) b.add_edge(i, j, e);
  const HeteroGraph g = std::move(b).build();
  const MotifPattern p = parse_motif(
      R"({"id":"T","roles":[{"name":"a","type":"x"},{"name":"b","type":"x"},{"name":"c","type":"x"}],
          "edges":[["a","b","link"],["b","c","link"],["a","c","link"]]})",
      g);
  EXPECT_EQ(pattern_automorphisms(p).size(), 6u);
  const auto inst = enumerate_instances(g, p);
  EXPECT_EQ(inst.size(), 4u);
  EXPECT_EQ(assignments(inst), oracle::brute_force_instances(g, p));
}

TEST(Motif, AutomorphismsStartWithIdentity) {
  const HeteroGraph g = authors_papers({{0, 0}}, 1, 1);
  const auto autos = pattern_automorphisms(parse_motif(kApa, g));
  ASSERT_EQ(autos.size(), 2u);
  EXPECT_EQ(autos[0], (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(autos[1], (std::vector<std::size_t>{2, 1, 0}));
  EXPECT_EQ(canonical_assignment({5, 3, 1}, autos), (std::vector<NodeId>{1, 3, 5}));
}

TEST(MotifProperty, EnumerationEqualsBruteForce) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = 4 + rng() % 9;
    const HeteroGraph g = oracle::random_graph(rng, n, 1 + rng() % 3, 1 + rng() % 2, 0.35);
    const std::size_t arity = 2 + rng() % 3;
    const MotifPattern p = parse_motif(oracle::random_motif_spec(rng, g, arity), g);
    const auto inst = enumerate_instances(g, p);
    EXPECT_EQ(assignments(inst), oracle::brute_force_instances(g, p)) << "seed " << seed;
    for (std::size_t i = 1; i < inst.size(); ++i)
      EXPECT_LT(inst[i - 1].assignment, inst[i].assignment);
    for (const auto& x : inst) {
      EXPECT_TRUE(is_valid_instance(g, p, x.assignment));
      auto sorted = x.assignment;
      std::sort(sorted.begin(), sorted.end());
      EXPECT_EQ(sorted, x.node_set);
    }
  }
}

TEST(MotifProperty, RelabelingEquivariance) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const HeteroGraph g = oracle::random_graph(rng, 10, 2, 2, 0.4);
    const std::string spec = oracle::random_motif_spec(rng, g, 3);
    std::vector<NodeId> perm(g.num_nodes());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    const HeteroGraph h = oracle::permute_graph(g, perm);

    std::set<std::vector<NodeId>> expect, got;
    for (const auto& x : enumerate_instances(g, parse_motif(spec, g))) {
      std::vector<NodeId> s;
      for (NodeId v : x.node_set) s.push_back(perm[v]);
      std::sort(s.begin(), s.end());
      expect.insert(s);
    }
    for (const auto& x : enumerate_instances(h, parse_motif(spec, h))) got.insert(x.node_set);
    EXPECT_EQ(expect, got) << "seed " << seed;
  }
}

TEST(Sampling, IdentityWhenUnderCap) {
  std::vector<MotifInstance> inst(10);
  for (NodeId i = 0; i < 10; ++i) inst[i] = {{i, i + 100}, {i, i + 100}};
  EXPECT_EQ(sample_instances(inst, 20, 1), inst);
  EXPECT_EQ(sample_instances(inst, 10, 1), inst);
}

TEST(Sampling, DeterministicSubsetInOrder) {
  std::vector<MotifInstance> inst(1000);
  for (NodeId i = 0; i < 1000; ++i) inst[i] = {{i, i + 1000}, {i, i + 1000}};
  const auto a = sample_instances(inst, 100, 42);
  const auto b = sample_instances(inst, 100, 42);
  const auto c = sample_instances(inst, 100, 43);
  EXPECT_EQ(a.size(), 100u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (std::size_t i = 1; i < a.size(); ++i) EXPECT_LT(a[i - 1].assignment, a[i].assignment);
}

TEST(Sampling, UniformFrequency) {
  std::vector<MotifInstance> inst(4);
  for (NodeId i = 0; i < 4; ++i) inst[i] = {{i, 10 + i}, {i, 10 + i}};
  std::vector<int> hits(4, 0);
  for (std::uint64_t seed = 0; seed < 10000; ++seed)
    ++hits[sample_instances(inst, 1, seed)[0].assignment[0]];
  for (int h : hits) EXPECT_NEAR(h / 10000.0, 0.25, 0.02);
}

TEST(Sampling, ZeroCapIsAnError) {
  EXPECT_THROW(sample_instances({}, 0, 1), DataError);
}
