#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sphnn/checkpoint.hpp"
#include "sphnn/error.hpp"
#include "sphnn/experiment.hpp"
#include "sphnn/synth.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sphnn;

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

void fail(const char* kind, const std::string& message, const std::string& detail = {}) {
  std::cerr << "sphnn: error=" << kind;
  if (!detail.empty()) std::cerr << ' ' << detail;
  std::cerr << " message=" << one_line(message) << '\n';
}

fs::path output_dir(const std::string& flag, const RunConfig& cfg) {
  if (!flag.empty()) return flag;
  if (!cfg.out.empty()) return cfg.out;
  throw ConfigError("no output directory: pass --out or set 'out' in the config");
}

void print_stats(const Dataset& ds) {
  std::cout << ds.graph.summary() << '\n';
  for (const auto& s : ds.stats)
    std::cout << "motif " << s.id << " instances=" << s.instances << " hyperedges=" << s.hyperedges
              << " covered=" << s.covered_nodes << '\n';
}

json stats_json(const Dataset& ds) {
  json motifs = json::array();
  for (const auto& s : ds.stats)
    motifs.push_back({{"id", s.id},
                      {"instances", s.instances},
                      {"hyperedges", s.hyperedges},
                      {"covered_nodes", s.covered_nodes}});
  return {{"graph", ds.graph.summary()}, {"motifs", motifs}};
}

void dump_hypergraphs(const Dataset& ds, const fs::path& dir) {
  for (const auto& hg : ds.hypergraphs)
    write_json(dir / ("hypergraph_" + hg.motif_id() + ".json"), hypergraph_to_json(hg));
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    out.push_back(s.substr(start, comma == std::string::npos ? comma : comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

int cmd_gen_synth(const std::string& out, std::optional<std::uint64_t> seed,
                  const std::string& config) {
  SynthConfig cfg;
  if (!config.empty()) {
    json j;
    try {
      j = json::parse(read_text_file(config));
    } catch (const json::exception& e) {
      throw ConfigError("synth config " + config + ": " + e.what());
    }
    cfg = synth_config_from_json(j);
  }
  if (seed) cfg.seed = *seed;
  const HeteroGraph g = generate(cfg);
  save_graph(g, out);
  std::cout << g.summary() << '\n';
  return 0;
}

int cmd_build(const std::string& data, const std::string& motifs, const std::string& out,
              std::size_t max_instances, std::uint64_t seed) {
  std::vector<std::string> specs;
  for (const auto& path : split_commas(motifs)) {
    if (path.empty()) throw ConfigError("empty entry in --motifs");
    specs.push_back(read_text_file(path));
  }
  const Dataset ds = build_dataset(load_graph(data), specs, max_instances, seed);
  dump_hypergraphs(ds, out);
  write_json(fs::path(out) / "stats.json", stats_json(ds));
  print_stats(ds);
  return 0;
}

json run_info(const RunConfig& cfg, const Dataset& ds) {
  json specs = json::array();
  for (const auto& m : ds.motifs) specs.push_back(m.source_json);
  return {{"motif_specs", specs},
          {"max_instances", cfg.max_instances},
          {"seed", cfg.train.seed},
          {"label_rate", cfg.train.label_rate},
          {"variant", to_string(cfg.variant)}};
}

int cmd_train(const std::string& config, const std::string& out_flag, bool dump) {
  const RunConfig cfg = load_run_config(config);
  const fs::path out = output_dir(out_flag, cfg);
  const Dataset ds = prepare_dataset(cfg);
  print_stats(ds);
  const RunOutcome o = run_experiment(cfg, ds);
  ModelConfig model = cfg.train.model;
  model.num_classes = ds.graph.num_classes();
  model.use_attention = cfg.variant != Variant::NoAttention;
  json run = run_info(cfg, ds);
  run["best_epoch"] = o.result.best_epoch;
  save_checkpoint(out / "checkpoint", o.result.params, model, cfg.train.seed, run);
  write_history_csv(out / "history.csv", o.result.history);
  write_json(out / "report.json", report_json(o.test, run_config_to_json(cfg)));
  if (dump) dump_hypergraphs(ds, out);
  std::cout << "epochs=" << o.result.history.size() << " best_epoch=" << o.result.best_epoch
            << " val_acc=" << round4(o.val.accuracy) << " test_acc=" << round4(o.test.accuracy)
            << " test_macro_f1=" << round4(o.test.macro_f1) << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, const std::string& split,
             const std::string& out) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const json& run = ck.manifest.at("run");
  const ModelConfig model = model_config_from_json(ck.manifest.at("model"));
  std::vector<std::string> specs;
  for (const auto& s : run.at("motif_specs")) specs.push_back(s.get<std::string>());
  const auto seed = run.at("seed").get<std::uint64_t>();
  const Dataset ds = build_dataset(load_graph(data), specs,
                                   run.at("max_instances").get<std::size_t>(), seed);
  if (ds.graph.num_classes() != model.num_classes)
    throw DataError(DataErrorKind::InvalidArgument,
                    "dataset has " + std::to_string(ds.graph.num_classes()) +
                        " classes but the checkpoint expects " +
                        std::to_string(model.num_classes));
  const Variant variant = parse_variant(run.at("variant").get<std::string>());
  const double rate = run.at("label_rate").get<double>();
  const SplitMasks masks = split_nodes(ds.graph, rate, derive_seed(seed, 0));
  const std::vector<NodeId>& nodes =
      split == "train" ? masks.train : split == "val" ? masks.val : masks.test;
  if (nodes.empty()) throw DataError(DataErrorKind::InvalidArgument, "split '" + split + "' is empty");
  const Metrics m = evaluate_nodes(ck.params, model, ds, variant, nodes);
  const json config = {{"checkpoint", fs::path(checkpoint).generic_string()},
                       {"data", fs::path(data).generic_string()},
                       {"split", split},
                       {"seed", seed},
                       {"label_rate", rate},
                       {"variant", to_string(variant)}};
  write_json(fs::path(out) / "report.json", report_json(m, config));
  std::cout << "split=" << split << " n=" << m.n_eval << " accuracy=" << round4(m.accuracy)
            << " macro_f1=" << round4(m.macro_f1) << '\n';
  return 0;
}

int cmd_sweep_lambda(const std::string& config, const std::string& grid, const std::string& out_flag) {
  const RunConfig cfg = load_run_config(config);
  const fs::path out = output_dir(out_flag, cfg);
  const auto points = parse_grid(grid);
  const Dataset ds = prepare_dataset(cfg);
  const auto pts = sweep_lambda(cfg, ds, points);
  write_lambda_csv(out / "lambda_sweep.csv", pts);
  for (const auto& p : pts)
    std::cout << "lambda=" << p.lambda << " val_acc=" << round4(p.val_acc)
              << " test_acc=" << round4(p.test_acc) << (p.best ? " best" : "") << '\n';
  return 0;
}

int cmd_sweep_rate(const std::string& config, const std::string& rates, std::size_t seeds,
                   const std::string& out_flag) {
  const RunConfig cfg = load_run_config(config);
  const fs::path out = output_dir(out_flag, cfg);
  const auto list = parse_list(rates);
  for (double r : list)
    if (!(r > 0.0 && r < 1.0)) throw ConfigError("label rates must lie in (0, 1)");
  const Dataset ds = prepare_dataset(cfg);
  const auto pts = sweep_label_rate(cfg, ds, list, seeds);
  write_rate_csv(out / "rate_sweep.csv", pts);
  for (const auto& p : pts)
    std::cout << "rate=" << p.rate << " acc=" << round4(p.mean_acc) << " +- " << round4(p.std_acc)
              << '\n';
  return 0;
}

int cmd_ablate(const std::string& config, std::size_t seeds, const std::string& out_flag) {
  const RunConfig cfg = load_run_config(config);
  const fs::path out = output_dir(out_flag, cfg);
  const Dataset ds = prepare_dataset(cfg);
  const auto rows = run_ablation(cfg, ds, seeds);
  write_json(out / "ablation.json", ablation_json(rows));
  write_ablation_csv(out / "ablation.csv", rows);
  for (const auto& r : rows)
    std::cout << to_string(r.variant) << " acc=" << round4(r.mean.accuracy)
              << " macro_f1=" << round4(r.mean.macro_f1) << '\n';
  return 0;
}

int cmd_grad_check(const std::string& config, double step, double tolerance) {
  const RunConfig cfg = load_run_config(config);
  const Dataset ds = prepare_dataset(cfg);
  const GradCheckReport r = run_grad_check(cfg, ds, step);
  for (const auto& e : r.entries)
    std::cout << e.name << " size=" << e.size << " max_rel_error=" << e.max_rel_error << '\n';
  std::cout << "max_rel_error=" << r.max_rel_error << '\n';
  if (!(r.max_rel_error < tolerance))
    throw NumericError("gradient check failed: max relative error " +
                       std::to_string(r.max_rel_error) + " >= " + std::to_string(tolerance));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motif hypergraph attention networks for heterogeneous graphs"};
  app.name("sphnn");
  app.require_subcommand(1);

  std::string out, eval_out = ".", config, data, motifs, checkpoint, split = "test";
  std::string grid = "0.1:1.0:0.1", rates = "0.1,0.2,0.3,0.4,0.5,0.6";
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> synth_seed;
  std::size_t max_instances = kDefaultMaxInstances, seeds = 5;
  double step = 1e-3, tolerance = 1e-4;
  bool dump = false;

  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic paper/author/venue dataset");
  gen->add_option("--out", out, "Output dataset directory")->required();
  gen->add_option("--seed", synth_seed, "Generator seed (overrides the config)");
  gen->add_option("--config", config, "Synthetic generator JSON config");

  auto* build = app.add_subcommand("build", "Enumerate motifs and dump hypergraphs");
  build->add_option("--data", data, "Dataset directory")->required();
  build->add_option("--motifs", motifs, "Comma-separated motif JSON files")->required();
  build->add_option("--out", out, "Output directory")->required();
  build->add_option("--max-instances", max_instances, "Instance cap per motif")
      ->check(CLI::PositiveNumber);
  build->add_option("--seed", seed, "Sampling seed");

  auto* train = app.add_subcommand("train", "Train and report test metrics");
  train->add_option("--config", config, "Run config JSON")->required();
  train->add_option("--out", out, "Output directory");
  train->add_flag("--dump-hypergraph", dump, "Also write hypergraph JSON files");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
  eval->add_option("--data", data, "Dataset directory")->required();
  eval->add_option("--split", split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", eval_out, "Directory for report.json");

  auto* sweep_l = app.add_subcommand("sweep-lambda", "Train once per self-connection weight");
  sweep_l->add_option("--config", config, "Run config JSON")->required();
  sweep_l->add_option("--grid", grid, "start:stop:step (inclusive)");
  sweep_l->add_option("--out", out, "Output directory");

  auto* sweep_r = app.add_subcommand("sweep-label-rate", "Accuracy against labeling rate");
  sweep_r->add_option("--config", config, "Run config JSON")->required();
  sweep_r->add_option("--rates", rates, "Comma-separated labeling rates");
  sweep_r->add_option("--seeds", seeds, "Seeds per rate")->check(CLI::PositiveNumber);
  sweep_r->add_option("--out", out, "Output directory");

  auto* ablate = app.add_subcommand("ablate", "Full model against its ablations");
  ablate->add_option("--config", config, "Run config JSON")->required();
  ablate->add_option("--seeds", seeds, "Seeds per variant")->check(CLI::PositiveNumber);
  ablate->add_option("--out", out, "Output directory");

  auto* grad = app.add_subcommand("grad-check", "Finite-difference check of every gradient");
  grad->add_option("--config", config, "Run config JSON")->required();
  grad->add_option("--step", step, "Central difference step")->check(CLI::PositiveNumber);
  grad->add_option("--tolerance", tolerance, "Maximum relative error")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("config", e.what());
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_synth(out, synth_seed, config);
    if (build->parsed()) return cmd_build(data, motifs, out, max_instances, seed);
    if (train->parsed()) return cmd_train(config, out, dump);
    if (eval->parsed()) return cmd_eval(checkpoint, data, split, eval_out);
    if (sweep_l->parsed()) return cmd_sweep_lambda(config, grid, out);
    if (sweep_r->parsed()) return cmd_sweep_rate(config, rates, seeds, out);
    if (ablate->parsed()) return cmd_ablate(config, seeds, out);
    if (grad->parsed()) return cmd_grad_check(config, step, tolerance);
  } catch (const ConfigError& e) {
    fail("config", e.what());
    return 2;
  } catch (const DataError& e) {
    std::string detail = std::string("kind=") + to_string(e.kind());
    if (!e.file().empty()) detail += " file=" + e.file();
    if (e.line() > 0) detail += " line=" + std::to_string(e.line());
    fail("data", e.what(), detail);
    return 3;
  } catch (const NumericError& e) {
    fail("numeric", e.what());
    return 4;
  } catch (const json::exception& e) {
    fail("data", e.what(), "kind=malformed-checkpoint");
    return 3;
  } catch (const fs::filesystem_error& e) {
    fail("data", e.what(), "kind=filesystem");
    return 3;
  }
  return 0;
}
