#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sphnn/error.hpp"
#include "sphnn/synth.hpp"
#include "sphnn/train.hpp"

using namespace sphnn;

namespace {

/// `per_class` labeled target nodes for each of `q` classes plus an unlabeled
/// node of another type.
HeteroGraph labeled_graph(int q, std::size_t per_class) {
  HeteroGraph::Builder b;
  const auto paper = b.add_node_type("paper", 1);
  const auto other = b.add_node_type("author", 1);
  b.add_edge_type("writes");
  NodeId v = 0;
  for (int c = 0; c < q; ++c)
    for (std::size_t i = 0; i < per_class; ++i, ++v) {
      b.add_node("p" + std::to_string(v), paper, {0.0});
      b.set_label(v, c);
    }
  b.add_node("a", other, {0.0});
  b.set_num_classes(q);
  b.set_target_type(paper);
  return std::move(b).build();
}

TrainConfig small_train_config(const oracle::SmallModel& s) {
  TrainConfig cfg;
  cfg.model = s.config;
  cfg.model.train_lambda = false;
  cfg.adam.lr = 0.01;
  cfg.epochs = 60;
  cfg.patience = 1000;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST(Split, CountsOnHundredNodes) {
  const HeteroGraph g = labeled_graph(2, 50);
  const SplitMasks s = split_nodes(g, 0.4, 1);
  EXPECT_EQ(s.train.size(), 40u);
  EXPECT_EQ(s.val.size(), 30u);
  EXPECT_EQ(s.test.size(), 30u);
}

TEST(Split, CeilingPerClassAndOddRemainder) {
  const HeteroGraph g = labeled_graph(3, 7);
  // ⌈0.1·7⌉ = 1 per class, 6 left: 3 val, 3 test.
  const SplitMasks s = split_nodes(g, 0.1, 1);
  EXPECT_EQ(s.train.size(), 3u);
  EXPECT_EQ(s.val.size(), 9u);
  EXPECT_EQ(s.test.size(), 9u);
  const SplitMasks t = split_nodes(labeled_graph(2, 30), 0.1, 1);
  EXPECT_EQ(t.train.size(), 6u);
  const SplitMasks u = split_nodes(labeled_graph(1, 8), 0.5, 2);
  // 4 train, 4 left; validation takes the floor.
  EXPECT_EQ(u.val.size(), 2u);
  EXPECT_EQ(u.test.size(), 2u);
}

TEST(Split, DeterministicAndSeedDependent) {
  const HeteroGraph g = labeled_graph(3, 20);
  const SplitMasks a = split_nodes(g, 0.3, 7), b = split_nodes(g, 0.3, 7), c = split_nodes(g, 0.3, 8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_NE(a.train, c.train);
}

TEST(Split, RejectsBadRates) {
  const HeteroGraph g = labeled_graph(2, 5);
  EXPECT_THROW(split_nodes(g, 0.0, 1), ConfigError);
  EXPECT_THROW(split_nodes(g, 1.0, 1), ConfigError);
}

TEST(SplitProperty, DisjointCoverOfLabeledTargets) {
  const HeteroGraph g = labeled_graph(4, 23);
  for (double rate : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const SplitMasks s = split_nodes(g, rate, seed);
      std::set<NodeId> all;
      for (const auto* part : {&s.train, &s.val, &s.test})
        for (NodeId v : *part) {
          EXPECT_TRUE(all.insert(v).second);
          EXPECT_NE(g.label(v), kUnlabeled);
        }
      EXPECT_EQ(all.size(), 92u);
      std::vector<std::size_t> per_class(4, 0);
      for (NodeId v : s.train) ++per_class[g.label(v)];
      for (std::size_t c : per_class)
        EXPECT_EQ(c, static_cast<std::size_t>(std::ceil(rate * 23 - 1e-9)));
    }
  }
}

TEST(DeriveSeed, StreamsDiffer) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const auto s = oracle::small_model();
  TrainConfig cfg = small_train_config(s);
  cfg.epochs = 0;
  const SplitMasks split{s.mask, {}, {}, 0.5};
  const TrainResult r = train(cfg, s.graph, s.hypergraphs, split);
  EXPECT_TRUE(r.history.empty());
  EXPECT_EQ(r.params.fingerprint(),
            init_params(s.graph, s.hypergraphs, cfg.model, derive_seed(cfg.seed, 1)).fingerprint());
}

TEST(Train, IdenticalRunsGiveIdenticalHistories) {
  const auto s = oracle::small_model();
  TrainConfig cfg = small_train_config(s);
  cfg.model.dropout = 0.3;
  const SplitMasks split{{s.mask[0], s.mask[1]}, {s.mask[2], s.mask[3]}, {}, 0.5};
  const TrainResult a = train(cfg, s.graph, s.hypergraphs, split);
  const TrainResult b = train(cfg, s.graph, s.hypergraphs, split);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].val_loss, b.history[i].val_loss);
  }
  EXPECT_EQ(a.params.fingerprint(), b.params.fingerprint());
}

TEST(Train, LossHalvesOnTheFixture) {
  const auto s = oracle::small_model();
  const TrainConfig cfg = small_train_config(s);
  const SplitMasks split{s.mask, {}, {}, 0.5};
  const TrainResult r = train(cfg, s.graph, s.hypergraphs, split);
  ASSERT_GE(r.history.size(), 50u);
  EXPECT_LT(r.history[49].train_loss, 0.5 * r.history[0].train_loss);
}

TEST(Train, EarlyStoppingKeepsTheBestEpoch) {
  SynthConfig sc;
  sc.papers_per_class = 20;
  sc.authors_per_class = 10;
  sc.seed = 4;
  const HeteroGraph g = generate(sc);
  std::vector<Hypergraph> hgs{pairwise_hypergraph(g)};
  TrainConfig cfg;
  cfg.model.num_classes = g.num_classes();
  cfg.model.d_hidden = 16;
  cfg.model.d_att = 8;
  cfg.model.d_fusion = 8;
  cfg.adam.lr = 0.05;
  cfg.epochs = 300;
  cfg.patience = 5;
  cfg.seed = 1;
  cfg.label_rate = 0.2;
  const TrainResult r = train(cfg, g, hgs);
  ASSERT_FALSE(r.history.empty());
  double best = INFINITY;
  std::size_t arg = 0;
  for (const auto& h : r.history)
    if (h.val_loss < best) best = h.val_loss, arg = h.epoch;
  EXPECT_EQ(r.best_epoch, arg);
  if (r.history.size() < cfg.epochs) {
    EXPECT_EQ(r.history.size(), r.best_epoch + cfg.patience + 1);
  }

  // The returned parameters are the best epoch's, not the last.
  const double val = evaluate_loss(r.params, g, hgs, cfg.model, g.labels(), r.split.val);
  EXPECT_NEAR(val, best, 1e-12);
}

TEST(Train, DivergenceIsANumericError) {
  HeteroGraph::Builder b;
  const auto paper = b.add_node_type("paper", 1);
  const auto w = b.add_edge_type("link");
  for (int i = 0; i < 4; ++i) {
    b.add_node("p" + std::to_string(i), paper, {i % 2 ? 1.0 : -1.0});
    b.set_label(i, i % 2);
  }
  b.add_edge(0, 1, w);
  b.add_edge(2, 3, w);
  b.set_num_classes(2);
  b.set_target_type(paper);
  const HeteroGraph g = std::move(b).build();
  std::vector<Hypergraph> hgs{pairwise_hypergraph(g)};
  TrainConfig cfg;
  cfg.model.num_classes = 2;
  cfg.epochs = 5;
  cfg.adam.lr = 1e300;
  try {
    train(cfg, g, hgs, SplitMasks{{0, 1}, {2, 3}, {}, 0.5});
    FAIL() << "expected divergence";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("diverged at epoch"), std::string::npos);
  }
}

TEST(Train, HistoryCsv) {
  const auto dir = oracle::temp_dir("history");
  write_history_csv(dir / "h.csv", {{0, 1.5, 2.25, 0.5}, {1, 0.1, 0.2, 1.0}});
  EXPECT_EQ(oracle::read_file(dir / "h.csv"),
            "epoch,train_loss,val_loss,val_acc\n0,1.5,2.25,0.5\n1,0.1,0.2,1\n");
  std::filesystem::remove_all(dir);
}

TEST(Train, LossDecreasesOverFirstTenEpochsOnSyntheticFixture) {
  const HeteroGraph g = load_graph(oracle::fixture("synthetic/data"));
  std::vector<Hypergraph> hgs;
  for (const char* name : {"motifs/apa.json", "motifs/pvp.json", "motifs/apv.json"}) {
    const auto p = parse_motif(oracle::read_file(oracle::fixture(name)), g);
    hgs.push_back(build_hypergraph(g, p.id, enumerate_instances(g, p)));
  }
  TrainConfig cfg;
  cfg.model.num_classes = g.num_classes();
  cfg.epochs = 10;
  const TrainResult r = train(cfg, g, hgs);
  ASSERT_EQ(r.history.size(), 10u);
  for (std::size_t i = 1; i < 10; ++i) {
    EXPECT_GE(r.history[i].train_loss, 0.0);
    EXPECT_LT(r.history[i].train_loss, r.history[i - 1].train_loss) << "epoch " << i;
  }
}
