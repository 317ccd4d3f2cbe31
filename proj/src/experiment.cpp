#include "sphnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "sphnn/error.hpp"

namespace sphnn {

namespace fs = std::filesystem;
using json = nlohmann::json;

Variant parse_variant(std::string_view name) {
  if (name == "full") return Variant::Full;
  if (name == "no-hypergraph") return Variant::NoHypergraph;
  if (name == "no-attention") return Variant::NoAttention;
  throw ConfigError("unknown variant '" + std::string(name) +
                    "' (expected full, no-hypergraph or no-attention)");
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoHypergraph: return "no-hypergraph";
    case Variant::NoAttention: return "no-attention";
  }
  return "full";
}

// ---------------------------------------------------------------------------
// Config

namespace {

template <class T>
T get_as(const json& v, const std::string& key) {
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::size_t get_positive(const json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 1)
    throw ConfigError("config key '" + key + "' must be a positive integer");
  return v.get<std::size_t>();
}

}  // namespace

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  bool has_data = false, has_motifs = false;
  auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  for (const auto& [key, v] : j.items()) {
    TrainConfig& t = c.train;
    ModelConfig& m = c.train.model;
    if (key == "data") {
      c.data = resolve(get_as<std::string>(v, key));
      has_data = true;
    } else if (key == "motifs") {
      if (!v.is_array() || v.empty()) throw ConfigError("config key 'motifs' must be a non-empty array");
      for (const auto& p : v) c.motifs.push_back(resolve(get_as<std::string>(p, key)));
      has_motifs = true;
    } else if (key == "out") {
      c.out = resolve(get_as<std::string>(v, key));
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) throw ConfigError("config key 'seed' must be a non-negative integer");
      t.seed = v.get<std::uint64_t>();
    } else if (key == "label_rate") t.label_rate = get_as<double>(v, key);
    else if (key == "epochs") {
      if (!v.is_number_unsigned()) throw ConfigError("config key 'epochs' must be a non-negative integer");
      t.epochs = v.get<std::size_t>();
    } else if (key == "patience") t.patience = get_positive(v, key);
    else if (key == "lr") t.adam.lr = get_as<double>(v, key);
    else if (key == "beta1") t.adam.beta1 = get_as<double>(v, key);
    else if (key == "beta2") t.adam.beta2 = get_as<double>(v, key);
    else if (key == "eps") t.adam.eps = get_as<double>(v, key);
    else if (key == "weight_decay") t.adam.weight_decay = get_as<double>(v, key);
    else if (key == "lambda") m.lambda = get_as<double>(v, key);
    else if (key == "train_lambda") m.train_lambda = get_as<bool>(v, key);
    else if (key == "mode") m.mode = parse_accumulation(get_as<std::string>(v, key));
    else if (key == "layers") m.layers = get_positive(v, key);
    else if (key == "d_hidden") m.d_hidden = get_positive(v, key);
    else if (key == "d_att") m.d_att = get_positive(v, key);
    else if (key == "d_fusion") m.d_fusion = get_positive(v, key);
    else if (key == "leaky_slope") m.slope = get_as<double>(v, key);
    else if (key == "dropout") m.dropout = get_as<double>(v, key);
    else if (key == "max_instances") c.max_instances = get_positive(v, key);
    else if (key == "variant") c.variant = parse_variant(get_as<std::string>(v, key));
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (!has_data) throw ConfigError("config key 'data' is required");
  if (!has_motifs) throw ConfigError("config key 'motifs' is required");
  const auto& t = c.train;
  if (!(t.label_rate > 0.0 && t.label_rate < 1.0)) throw ConfigError("label_rate must lie in (0, 1)");
  if (!(t.adam.lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(t.adam.beta1 >= 0.0 && t.adam.beta1 < 1.0 && t.adam.beta2 >= 0.0 && t.adam.beta2 < 1.0))
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  if (!(t.adam.eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(t.adam.weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(t.model.lambda > 0.0 && t.model.lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (!(t.model.dropout >= 0.0 && t.model.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(t.model.slope >= 0.0)) throw ConfigError("leaky_slope must be non-negative");
  return c;
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + file.string() + ": " + e.what());
  }
  return run_config_from_json(j, file.parent_path());
}

json run_config_to_json(const RunConfig& c) {
  json motifs = json::array();
  for (const auto& m : c.motifs) motifs.push_back(m.generic_string());
  const auto& t = c.train;
  const auto& m = t.model;
  json j = {{"data", c.data.generic_string()},
          {"motifs", motifs},
          {"seed", t.seed},
          {"label_rate", t.label_rate},
          {"epochs", t.epochs},
          {"patience", t.patience},
          {"lr", t.adam.lr},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"eps", t.adam.eps},
          {"weight_decay", t.adam.weight_decay},
          {"lambda", m.lambda},
          {"train_lambda", m.train_lambda},
          {"mode", to_string(m.mode)},
          {"layers", m.layers},
          {"d_hidden", m.d_hidden},
          {"d_att", m.d_att},
          {"d_fusion", m.d_fusion},
          {"leaky_slope", m.slope},
          {"dropout", m.dropout},
          {"max_instances", c.max_instances},
          {"variant", to_string(c.variant)}};
  if (!c.out.empty()) j["out"] = c.out.generic_string();
  return j;
}

// ---------------------------------------------------------------------------
// Data preparation

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::MissingFile, "cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Dataset build_dataset(HeteroGraph graph, const std::vector<std::string>& motif_specs,
                      std::size_t max_instances, std::uint64_t sample_seed) {
  Dataset ds;
  ds.graph = std::move(graph);
  for (std::size_t i = 0; i < motif_specs.size(); ++i) {
    MotifPattern p = parse_motif(motif_specs[i], ds.graph);
    for (const auto& other : ds.motifs)
      if (other.id == p.id) throw ConfigError("duplicate motif id '" + p.id + "'");
    const auto all = enumerate_instances(ds.graph, p);
    const auto kept = sample_instances(all, max_instances, derive_seed(sample_seed, 16 + i));
    MotifStats st{p.id, all.size(), kept.size(), 0};
    if (!kept.empty()) {
      Hypergraph hg = build_hypergraph(ds.graph, p.id, kept);
      for (NodeId v = 0; v < hg.num_nodes(); ++v) st.covered_nodes += !hg.incident_edges(v).empty();
      ds.hypergraphs.push_back(std::move(hg));
    }
    ds.stats.push_back(st);
    ds.motifs.push_back(std::move(p));
  }
  if (ds.hypergraphs.empty())
    throw DataError(DataErrorKind::EmptyHypergraph, "no motif has any instance on this graph");
  return ds;
}

Dataset prepare_dataset(const RunConfig& cfg) {
  HeteroGraph g = load_graph(cfg.data);
  std::vector<std::string> specs;
  for (const auto& m : cfg.motifs) specs.push_back(read_text_file(m));
  return build_dataset(std::move(g), specs, cfg.max_instances, cfg.train.seed);
}

std::vector<Hypergraph> variant_hypergraphs(const Dataset& ds, Variant v) {
  if (v == Variant::NoHypergraph) return {pairwise_hypergraph(ds.graph)};
  return ds.hypergraphs;
}

namespace {

ModelConfig model_for(const RunConfig& cfg, const Dataset& ds) {
  ModelConfig m = cfg.train.model;
  m.num_classes = ds.graph.num_classes();
  m.use_attention = cfg.variant != Variant::NoAttention;
  return m;
}

Metrics metrics_on(const std::vector<int>& pred, const HeteroGraph& g,
                   const std::vector<NodeId>& nodes) {
  std::vector<int> y_true, y_pred;
  for (NodeId v : nodes) {
    y_true.push_back(g.label(v));
    y_pred.push_back(pred[v]);
  }
  if (nodes.empty()) return {};
  return evaluate(y_true, y_pred, g.num_classes());
}

/// Runs fn(i) for i in [0, n) on worker threads; results go to caller-owned
/// slots so output order never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(n, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

Metrics evaluate_nodes(const ModelParams& params, const ModelConfig& model, const Dataset& ds,
                       Variant v, const std::vector<NodeId>& nodes) {
  const auto hgs = variant_hypergraphs(ds, v);
  const ForwardResult fr = forward(params, ds.graph, hgs, model);
  std::vector<int> pred(fr.logits.rows());
  for (std::size_t i = 0; i < fr.logits.rows(); ++i) {
    auto row = fr.logits.row(i);
    pred[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return metrics_on(pred, ds.graph, nodes);
}

RunOutcome run_experiment(const RunConfig& cfg, const Dataset& ds) {
  TrainConfig tc = cfg.train;
  tc.model = model_for(cfg, ds);
  const auto hgs = variant_hypergraphs(ds, cfg.variant);
  RunOutcome out;
  out.result = train(tc, ds.graph, hgs);
  const ForwardResult fr = forward(out.result.params, ds.graph, hgs, tc.model);
  const LossResult lr = loss_and_accuracy(fr.logits, ds.graph.labels(), out.result.split.train);
  out.val = metrics_on(lr.predictions, ds.graph, out.result.split.val);
  out.test = metrics_on(lr.predictions, ds.graph, out.result.split.test);
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

std::vector<double> parse_grid(const std::string& spec) {
  double v[3];
  std::size_t start = 0;
  for (int k = 0; k < 3; ++k) {
    const std::size_t colon = spec.find(':', start);
    if ((k < 2) == (colon == std::string::npos))
      throw ConfigError("grid must look like start:stop:step, got '" + spec + "'");
    const std::string part = spec.substr(start, colon == std::string::npos ? colon : colon - start);
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v[k]);
    if (ec != std::errc() || p != part.data() + part.size())
      throw ConfigError("bad number '" + part + "' in grid '" + spec + "'");
    start = colon + 1;
  }
  if (!(v[2] > 0.0) || v[1] < v[0]) throw ConfigError("grid needs step > 0 and stop >= start");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::floor((v[1] - v[0]) / v[2] + 1e-9)) + 1;
  for (std::size_t i = 0; i < count; ++i) out.push_back(round4(v[0] + static_cast<double>(i) * v[2]));
  return out;
}

std::vector<double> parse_list(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, ',')) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), x);
    if (part.empty() || ec != std::errc() || p != part.data() + part.size())
      throw ConfigError("bad number '" + part + "' in list '" + spec + "'");
    out.push_back(x);
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::vector<LambdaPoint> sweep_lambda(const RunConfig& cfg, const Dataset& ds,
                                      const std::vector<double>& grid) {
  std::vector<LambdaPoint> pts(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    RunConfig c = cfg;
    c.train.model.lambda = grid[i];
    c.train.model.train_lambda = false;
    const RunOutcome o = run_experiment(c, ds);
    pts[i].lambda = grid[i];
    pts[i].val_acc = o.val.accuracy;
    pts[i].val_loss = o.result.history.at(o.result.best_epoch).val_loss;
    pts[i].test_acc = o.test.accuracy;
  });
  if (!pts.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const auto& a = pts[i];
      const auto& b = pts[best];
      if (a.val_acc > b.val_acc || (a.val_acc == b.val_acc && a.val_loss < b.val_loss)) best = i;
    }
    pts[best].best = true;
  }
  return pts;
}

std::vector<RatePoint> sweep_label_rate(const RunConfig& cfg, const Dataset& ds,
                                        const std::vector<double>& rates, std::size_t seeds) {
  if (seeds == 0) throw ConfigError("need at least one seed");
  std::vector<Metrics> runs(rates.size() * seeds);
  parallel_for(runs.size(), [&](std::size_t i) {
    RunConfig c = cfg;
    c.train.label_rate = rates[i / seeds];
    c.train.seed = cfg.train.seed + i % seeds;
    runs[i] = run_experiment(c, ds).test;
  });
  std::vector<RatePoint> out;
  for (std::size_t r = 0; r < rates.size(); ++r) {
    RatePoint p;
    p.rate = rates[r];
    p.seeds = seeds;
    for (std::size_t s = 0; s < seeds; ++s) {
      const Metrics& m = runs[r * seeds + s];
      p.mean_acc += m.accuracy / static_cast<double>(seeds);
      p.mean_macro_f1 += m.macro_f1 / static_cast<double>(seeds);
      p.mean_micro_f1 += m.micro_f1 / static_cast<double>(seeds);
    }
    if (seeds > 1) {
      double ss = 0.0;
      for (std::size_t s = 0; s < seeds; ++s) {
        const double d = runs[r * seeds + s].accuracy - p.mean_acc;
        ss += d * d;
      }
      p.std_acc = std::sqrt(ss / static_cast<double>(seeds - 1));
    }
    out.push_back(p);
  }
  return out;
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, const Dataset& ds, std::size_t seeds) {
  if (seeds == 0) throw ConfigError("need at least one seed");
  const Variant variants[] = {Variant::Full, Variant::NoHypergraph, Variant::NoAttention};
  std::vector<Metrics> runs(3 * seeds);
  parallel_for(runs.size(), [&](std::size_t i) {
    RunConfig c = cfg;
    c.variant = variants[i / seeds];
    c.train.seed = cfg.train.seed + i % seeds;
    runs[i] = run_experiment(c, ds).test;
  });
  std::vector<AblationRow> rows;
  for (std::size_t k = 0; k < 3; ++k) {
    AblationRow row;
    row.variant = variants[k];
    row.seeds = seeds;
    double ss = 0.0;
    for (std::size_t s = 0; s < seeds; ++s) {
      const Metrics& m = runs[k * seeds + s];
      row.mean.accuracy += m.accuracy / static_cast<double>(seeds);
      row.mean.macro_f1 += m.macro_f1 / static_cast<double>(seeds);
      row.mean.micro_f1 += m.micro_f1 / static_cast<double>(seeds);
      row.mean.n_eval = m.n_eval;
    }
    for (std::size_t s = 0; s < seeds; ++s) {
      const double d = runs[k * seeds + s].accuracy - row.mean.accuracy;
      ss += d * d;
    }
    row.std_acc = seeds > 1 ? std::sqrt(ss / static_cast<double>(seeds - 1)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

GradCheckReport run_grad_check(const RunConfig& cfg, const Dataset& ds, double step) {
  const ModelConfig model = model_for(cfg, ds);
  const auto hgs = variant_hypergraphs(ds, cfg.variant);
  const ModelParams params = init_params(ds.graph, hgs, model, derive_seed(cfg.train.seed, 1));
  std::vector<NodeId> mask;
  for (NodeId v : ds.graph.nodes_of_type(ds.graph.target_type()))
    if (ds.graph.label(v) != kUnlabeled) mask.push_back(v);
  GradCheckReport r;
  r.entries = gradient_check(params, ds.graph, hgs, model, ds.graph.labels(), mask, step);
  for (const auto& e : r.entries) r.max_rel_error = std::max(r.max_rel_error, e.max_rel_error);
  return r;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::MissingFile, "cannot write", path.string());
  return out;
}

}  // namespace

void write_lambda_csv(const fs::path& path, const std::vector<LambdaPoint>& pts) {
  auto out = open_out(path);
  out << "lambda,val_acc,val_loss,test_acc,best\n";
  for (const auto& p : pts)
    out << num(p.lambda) << ',' << num(p.val_acc) << ',' << num(p.val_loss) << ','
        << num(p.test_acc) << ',' << (p.best ? 1 : 0) << '\n';
}

void write_rate_csv(const fs::path& path, const std::vector<RatePoint>& pts) {
  auto out = open_out(path);
  out << "rate,mean_acc,std_acc,mean_macro_f1,mean_micro_f1,seeds\n";
  for (const auto& p : pts)
    out << num(p.rate) << ',' << num(p.mean_acc) << ',' << num(p.std_acc) << ','
        << num(p.mean_macro_f1) << ',' << num(p.mean_micro_f1) << ',' << p.seeds << '\n';
}

void write_ablation_csv(const fs::path& path, const std::vector<AblationRow>& rows) {
  auto out = open_out(path);
  out << "variant,macro_f1,micro_f1,accuracy,std_acc,seeds\n";
  for (const auto& r : rows)
    out << to_string(r.variant) << ',' << num(r.mean.macro_f1) << ',' << num(r.mean.micro_f1)
        << ',' << num(r.mean.accuracy) << ',' << num(r.std_acc) << ',' << r.seeds << '\n';
}

json ablation_json(const std::vector<AblationRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows)
    arr.push_back({{"variant", to_string(r.variant)},
                   {"macro_f1", round4(r.mean.macro_f1)},
                   {"micro_f1", round4(r.mean.micro_f1)},
                   {"accuracy", round4(r.mean.accuracy)},
                   {"std_acc", round4(r.std_acc)},
                   {"seeds", r.seeds}});
  return {{"rows", arr}};
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace sphnn
