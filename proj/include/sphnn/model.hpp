#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sphnn/hin.hpp"
#include "sphnn/hypergraph.hpp"
#include "sphnn/numeric.hpp"

namespace sphnn {

/// How member features are accumulated into a hyperedge feature.
enum class Accumulation { Mean, Norm1, Norm2, Concat };

Accumulation parse_accumulation(std::string_view name);
const char* to_string(Accumulation mode);

struct ModelConfig {
  int num_classes = 0;
  std::size_t layers = 2;
  std::size_t d_hidden = 64;
  std::size_t d_att = 64;
  std::size_t d_fusion = 32;
  double lambda = 1.0;
  bool train_lambda = false;
  double slope = 0.2;  // LeakyReLU slope for attention scores and hidden layers
  Accumulation mode = Accumulation::Mean;
  /// When false the learned incidence is replaced by H with columns scaled by
  /// 1/δ(e) (no-attention ablation).
  bool use_attention = true;
  double dropout = 0.0;
};

struct LayerParams {
  Matrix attention_proj;  // d_in × d_att
  Matrix weight;          // d_in × d_out
  Matrix concat_proj;     // (m·d_in) × d_in, concat mode only
};

struct BranchParams {
  std::string motif_id;
  std::vector<LayerParams> layers;
};

/// Every trainable tensor. λ is stored as a 1×1 matrix so that it flows through
/// the same optimizer and checkpoint paths as the other tensors.
struct ModelParams {
  std::vector<std::string> type_names;
  std::vector<Matrix> type_proj;       // per node type: d_τ × d_hidden
  std::vector<Matrix> attention_vec;   // per layer: 1 × 2·d_att, shared by branches
  std::vector<BranchParams> branches;  // one per hypergraph
  Matrix fusion_w;                     // q × d_f
  Matrix fusion_b;                     // 1 × d_f
  Matrix fusion_a;                     // 1 × d_f
  Matrix lambda;                       // 1 × 1

  template <class F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  /// Same structure with every entry zero.
  ModelParams zeros_like() const;
  /// FNV-1a hash over all parameter bytes.
  std::uint64_t fingerprint() const;

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F& f) {
    for (std::size_t t = 0; t < self.type_proj.size(); ++t)
      f("proj." + self.type_names[t], self.type_proj[t]);
    for (std::size_t l = 0; l < self.attention_vec.size(); ++l)
      f("attention.L" + std::to_string(l) + ".a", self.attention_vec[l]);
    for (auto& b : self.branches) {
      for (std::size_t l = 0; l < b.layers.size(); ++l) {
        const std::string prefix = b.motif_id + ".L" + std::to_string(l) + ".";
        f(prefix + "P", b.layers[l].attention_proj);
        f(prefix + "theta", b.layers[l].weight);
        if (!b.layers[l].concat_proj.empty()) f(prefix + "concat", b.layers[l].concat_proj);
      }
    }
    f(std::string("fusion.W"), self.fusion_w);
    f(std::string("fusion.b"), self.fusion_b);
    f(std::string("fusion.a"), self.fusion_a);
    f(std::string("lambda"), self.lambda);
  }
};

/// Glorot-uniform initialization, deterministic in `seed`. One branch per
/// hypergraph; motif ids must be unique.
ModelParams init_params(const HeteroGraph& g, const std::vector<Hypergraph>& hypergraphs,
                        const ModelConfig& cfg, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Building blocks (exposed for testing)

/// Row v = x_v · U_{type(v)}, N × d_hidden.
Matrix project_features(const HeteroGraph& g, std::span<const Matrix> type_proj);

/// Accumulated hyperedge features, |E| × d. `concat_proj` is required in
/// concat mode and maps the role-ordered concatenation back to d columns.
Matrix edge_features(const Hypergraph& hg, const Matrix& x, Accumulation mode,
                     const Matrix* concat_proj = nullptr);

/// Per-incidence attention values in edge-major order (see
/// Hypergraph::incidence_offset), plus what the backward pass needs.
struct AttentionResult {
  std::vector<double> values;  // Ĥ entries
  std::vector<double> raw;     // scores before LeakyReLU
  Matrix node_proj;            // X·P
  Matrix edge_proj;            // x_e·P
  Matrix edge_feat;            // accumulated features (empty in mean mode)
  Matrix concat_in;            // role-ordered concatenation (concat mode)
};

AttentionResult attention_incidence(const Hypergraph& hg, const Matrix& x, const Matrix& proj,
                                    const Matrix& att_vec, double slope, Accumulation mode,
                                    const Matrix* concat_proj = nullptr);

/// Ĥ = H with every column divided by δ(e).
std::vector<double> uniform_incidence(const Hypergraph& hg);

/// Expands per-incidence values into a dense N × |E| matrix.
Matrix dense_incidence(const Hypergraph& hg, std::span<const double> values);

/// d(v)^{-1/2}, 0 for uncovered nodes.
std::vector<double> inv_sqrt_node_degrees(const Hypergraph& hg);

struct ConvResult {
  Matrix y;    // X·Θ
  Matrix msg;  // per-edge messages
  Matrix pre;  // before activation
  Matrix out;
};

/// X' = σ((λI + D_v^{-1/2} Ĥ W D_e^{-1} Ĥᵀ D_v^{-1/2}) X Θ); σ is LeakyReLU
/// when `activate`, identity otherwise.
ConvResult hyperconv_layer(const Hypergraph& hg, const Matrix& x, std::span<const double> hhat,
                           double lambda, const Matrix& weight, bool activate, double slope);

struct FusionResult {
  std::vector<double> scores;
  std::vector<double> coeffs;
  std::vector<Matrix> hidden;  // tanh(Z_t W + b)
  Matrix fused;
};

FusionResult semantic_fusion(std::span<const Matrix> z_list, const Matrix& w, const Matrix& b,
                             const Matrix& a);

struct LossResult {
  double loss = 0.0;
  std::vector<int> predictions;  // argmax of every row
  Matrix logit_grad;             // dL/dZ
};

/// Mean cross-entropy of row-softmaxed logits over `mask`.
LossResult loss_and_accuracy(const Matrix& logits, std::span<const int> labels,
                             std::span<const NodeId> mask);

// ---------------------------------------------------------------------------
// Full model

struct LayerCache {
  Matrix input;
  Matrix dropout_mask;
  AttentionResult attention;
  std::vector<double> hhat;
  ConvResult conv;
};

struct BranchCache {
  std::size_t hypergraph = 0;
  std::vector<LayerCache> layers;
};

/// Intermediates of one forward pass; valid only with the parameters, graph
/// and hypergraphs that produced it.
struct ForwardCache {
  const HeteroGraph* graph = nullptr;
  const std::vector<Hypergraph>* hypergraphs = nullptr;
  ModelConfig config;
  std::uint64_t fingerprint = 0;
  Matrix projected;
  std::vector<BranchCache> branches;
  FusionResult fusion;
};

struct ForwardResult {
  Matrix logits;
  ForwardCache cache;
};

/// Runs every non-empty hypergraph branch and fuses them. `dropout_rng` enables
/// dropout (training mode); pass nullptr for evaluation.
ForwardResult forward(const ModelParams& params, const HeteroGraph& g,
                      const std::vector<Hypergraph>& hypergraphs, const ModelConfig& cfg,
                      std::mt19937_64* dropout_rng = nullptr);

/// Gradients of every parameter for an upstream gradient dL/dZ.
ModelParams backward_from_logits(const ModelParams& params, const ForwardCache& cache,
                                 const Matrix& logit_grad);

struct Gradients {
  double loss = 0.0;
  ModelParams grads;
};

Gradients backward(const ModelParams& params, const ForwardCache& cache, const Matrix& logits,
                   std::span<const int> labels, std::span<const NodeId> mask);

double evaluate_loss(const ModelParams& params, const HeteroGraph& g,
                     const std::vector<Hypergraph>& hypergraphs, const ModelConfig& cfg,
                     std::span<const int> labels, std::span<const NodeId> mask);

struct GradCheckEntry {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
};

/// Central-difference check of every parameter tensor (including λ).
std::vector<GradCheckEntry> gradient_check(const ModelParams& params, const HeteroGraph& g,
                                           const std::vector<Hypergraph>& hypergraphs,
                                           const ModelConfig& cfg, std::span<const int> labels,
                                           std::span<const NodeId> mask, double step);

}  // namespace sphnn
