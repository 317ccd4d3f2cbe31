#include "sphnn/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

#include "sphnn/error.hpp"

namespace sphnn {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SplitMasks split_nodes(const HeteroGraph& g, double label_rate, std::uint64_t seed) {
  if (!(label_rate > 0.0 && label_rate < 1.0))
    throw ConfigError("label_rate must lie in (0, 1)");
  const int q = g.num_classes();
  std::vector<std::vector<NodeId>> by_class(static_cast<std::size_t>(std::max(q, 0)));
  for (NodeId v : g.nodes_of_type(g.target_type())) {
    const int y = g.label(v);
    if (y != kUnlabeled) by_class[static_cast<std::size_t>(y)].push_back(v);
  }
  SplitMasks s;
  s.label_rate = label_rate;
  std::mt19937_64 rng(seed);
  for (int c = 0; c < q; ++c) {
    auto& nodes = by_class[static_cast<std::size_t>(c)];
    if (nodes.empty())
      throw DataError(DataErrorKind::InvalidArgument,
                      "class " + std::to_string(c) + " has no labeled target-type nodes");
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const double n = static_cast<double>(nodes.size());
    // The small slack keeps e.g. 0.1·30 from rounding up to 4.
    const auto n_train = std::min(nodes.size(),
                                  static_cast<std::size_t>(std::ceil(label_rate * n - 1e-9)));
    const std::size_t rest = nodes.size() - n_train;
    const std::size_t n_val = rest / 2;
    s.train.insert(s.train.end(), nodes.begin(), nodes.begin() + n_train);
    s.val.insert(s.val.end(), nodes.begin() + n_train, nodes.begin() + n_train + n_val);
    s.test.insert(s.test.end(), nodes.begin() + n_train + n_val, nodes.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.val.begin(), s.val.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {

double accuracy_on(const std::vector<int>& pred, const std::vector<int>& labels,
                   const std::vector<NodeId>& nodes) {
  if (nodes.empty()) return 0.0;
  std::size_t ok = 0;
  for (NodeId v : nodes) ok += pred[v] == labels[v];
  return static_cast<double>(ok) / static_cast<double>(nodes.size());
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const HeteroGraph& g,
                  const std::vector<Hypergraph>& hypergraphs, const SplitMasks& split) {
  if (split.train.empty()) throw ConfigError("training split is empty");
  TrainResult result;
  result.split = split;
  result.params = init_params(g, hypergraphs, cfg.model, derive_seed(cfg.seed, 1));
  if (cfg.epochs == 0) return result;

  ModelParams params = result.params;
  std::vector<AdamState> states;
  params.visit([&](const std::string&, const Matrix& m) { states.emplace_back(m); });
  std::mt19937_64 dropout_rng(derive_seed(cfg.seed, 2));
  const bool use_dropout = cfg.model.dropout > 0.0;
  const auto& labels = g.labels();
  // Without validation nodes, early stopping falls back to the training loss.
  const auto& select = split.val.empty() ? split.train : split.val;

  double best = INFINITY;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    double train_loss = 0.0, val_loss = 0.0, val_acc = 0.0;
    ModelParams grads;
    try {
      ForwardResult fr = forward(params, g, hypergraphs, cfg.model,
                                 use_dropout ? &dropout_rng : nullptr);
      Gradients gr = backward(params, fr.cache, fr.logits, labels, split.train);
      train_loss = gr.loss;
      grads = std::move(gr.grads);
      const Matrix eval_logits =
          use_dropout ? forward(params, g, hypergraphs, cfg.model).logits : fr.logits;
      const LossResult lv = loss_and_accuracy(eval_logits, labels, select);
      val_loss = lv.loss;
      val_acc = accuracy_on(lv.predictions, labels, select);
    } catch (const NumericError& e) {
      throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    result.history.push_back({epoch, train_loss, val_loss, val_acc});

    if (val_loss < best) {
      best = val_loss;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }

    std::size_t k = 0;
    std::vector<const Matrix*> grad_list;
    grads.visit([&](const std::string&, const Matrix& m) { grad_list.push_back(&m); });
    params.visit([&](const std::string& name, Matrix& m) {
      const std::size_t idx = k++;
      if (name == "lambda") {
        if (!cfg.model.train_lambda) return;
        AdamOptions no_decay = cfg.adam;
        no_decay.weight_decay = 0.0;
        adam_step(m, *grad_list[idx], states[idx], no_decay);
        m(0, 0) = std::clamp(m(0, 0), 1e-3, 1.0);
        return;
      }
      adam_step(m, *grad_list[idx], states[idx], cfg.adam);
    });
  }
  return result;
}

TrainResult train(const TrainConfig& cfg, const HeteroGraph& g,
                  const std::vector<Hypergraph>& hypergraphs) {
  return train(cfg, g, hypergraphs, split_nodes(g, cfg.label_rate, derive_seed(cfg.seed, 0)));
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrorKind::MissingFile, "cannot write", path.string());
  auto num = [](double x) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
  };
  out << "epoch,train_loss,val_loss,val_acc\n";
  for (const auto& r : history)
    out << r.epoch << ',' << num(r.train_loss) << ',' << num(r.val_loss) << ',' << num(r.val_acc)
        << '\n';
}

}  // namespace sphnn
