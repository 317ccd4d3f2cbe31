#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sphnn/hin.hpp"
#include "sphnn/hypergraph.hpp"
#include "sphnn/metrics.hpp"
#include "sphnn/motif.hpp"
#include "sphnn/train.hpp"

namespace sphnn {

/// Which contributions are active.
enum class Variant { Full, NoHypergraph, NoAttention };

Variant parse_variant(std::string_view name);
const char* to_string(Variant v);

/// Everything one run needs, parsed from a JSON config file. Relative paths
/// resolve against the config file's directory.
struct RunConfig {
  std::filesystem::path data;
  std::vector<std::filesystem::path> motifs;
  std::filesystem::path out;  // optional; command-line --out wins
  TrainConfig train;
  std::size_t max_instances = kDefaultMaxInstances;
  Variant variant = Variant::Full;
};

/// Throws ConfigError on unknown keys, wrong types or out-of-range values.
RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json run_config_to_json(const RunConfig& cfg);

struct MotifStats {
  std::string id;
  std::size_t instances = 0;  // before sampling
  std::size_t hyperedges = 0;
  std::size_t covered_nodes = 0;
};

/// Graph, parsed motifs and their hypergraphs. Motifs without instances are
/// dropped from `hypergraphs` but still reported in `stats`.
struct Dataset {
  HeteroGraph graph;
  std::vector<MotifPattern> motifs;
  std::vector<Hypergraph> hypergraphs;
  std::vector<MotifStats> stats;
};

std::string read_text_file(const std::filesystem::path& path);

Dataset build_dataset(HeteroGraph graph, const std::vector<std::string>& motif_specs,
                      std::size_t max_instances, std::uint64_t sample_seed);
Dataset prepare_dataset(const RunConfig& cfg);

/// Hypergraphs used by a variant: the motif hypergraphs, or a single pairwise
/// hypergraph with one 2-node hyperedge per graph edge.
std::vector<Hypergraph> variant_hypergraphs(const Dataset& ds, Variant v);

struct RunOutcome {
  TrainResult result;
  Metrics val;
  Metrics test;
};

/// Trains cfg.variant on `ds` with cfg.train and evaluates on val/test.
RunOutcome run_experiment(const RunConfig& cfg, const Dataset& ds);

/// Metrics of `params` on a node subset.
Metrics evaluate_nodes(const ModelParams& params, const ModelConfig& model, const Dataset& ds,
                       Variant v, const std::vector<NodeId>& nodes);

struct LambdaPoint {
  double lambda = 0.0;
  double val_acc = 0.0;
  double val_loss = 0.0;
  double test_acc = 0.0;
  bool best = false;
};

/// λ grid "start:stop:step" (inclusive stop).
std::vector<double> parse_grid(const std::string& spec);
std::vector<double> parse_list(const std::string& spec);

/// One training run per λ; the best point has the highest validation
/// accuracy, ties broken by lower validation loss then smaller λ.
std::vector<LambdaPoint> sweep_lambda(const RunConfig& cfg, const Dataset& ds,
                                      const std::vector<double>& grid);

struct RatePoint {
  double rate = 0.0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  double mean_macro_f1 = 0.0;
  double mean_micro_f1 = 0.0;
  std::size_t seeds = 0;
};

/// Seeds cfg.seed, cfg.seed+1, ... per rate.
std::vector<RatePoint> sweep_label_rate(const RunConfig& cfg, const Dataset& ds,
                                        const std::vector<double>& rates, std::size_t seeds);

struct AblationRow {
  Variant variant;
  Metrics mean;  // averaged over seeds; n_eval is the per-run test size
  double std_acc = 0.0;
  std::size_t seeds = 0;
};

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Dataset& ds, std::size_t seeds);

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
};

/// Central differences on the config's dataset, all labeled target nodes.
GradCheckReport run_grad_check(const RunConfig& cfg, const Dataset& ds, double step);

void write_lambda_csv(const std::filesystem::path& path, const std::vector<LambdaPoint>& pts);
void write_rate_csv(const std::filesystem::path& path, const std::vector<RatePoint>& pts);
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);
nlohmann::json ablation_json(const std::vector<AblationRow>& rows);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace sphnn
