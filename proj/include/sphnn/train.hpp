#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sphnn/hin.hpp"
#include "sphnn/hypergraph.hpp"
#include "sphnn/model.hpp"
#include "sphnn/numeric.hpp"

namespace sphnn {

/// Disjoint train/val/test node sets drawn from the labeled target-type nodes.
struct SplitMasks {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;
  double label_rate = 0.0;
};

/// Stratified split: per class ⌈rate·n⌉ training nodes, the remainder halved
/// into validation (floor) and test (ceil). Deterministic in `seed`.
SplitMasks split_nodes(const HeteroGraph& g, double label_rate, std::uint64_t seed);

struct TrainConfig {
  ModelConfig model;
  AdamOptions adam;
  std::size_t epochs = 300;
  std::size_t patience = 30;
  std::uint64_t seed = 0;
  double label_rate = 0.4;
};

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  double val_acc;
};

struct TrainResult {
  ModelParams params;  // from the best validation-loss epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  SplitMasks split;
};

/// Mixes a run seed with a stream tag so that splits, initialization and
/// dropout draw from independent streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Full-batch Adam training with early stopping on validation loss.
TrainResult train(const TrainConfig& cfg, const HeteroGraph& g,
                  const std::vector<Hypergraph>& hypergraphs, const SplitMasks& split);

/// Splits with `cfg.seed` / `cfg.label_rate`, then trains.
TrainResult train(const TrainConfig& cfg, const HeteroGraph& g,
                  const std::vector<Hypergraph>& hypergraphs);

/// `epoch,train_loss,val_loss,val_acc` with round-trip precision.
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);

}  // namespace sphnn
