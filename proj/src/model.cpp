#include "sphnn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "sphnn/error.hpp"

namespace sphnn {

Accumulation parse_accumulation(std::string_view name) {
  if (name == "mean") return Accumulation::Mean;
  if (name == "1-norm") return Accumulation::Norm1;
  if (name == "2-norm") return Accumulation::Norm2;
  if (name == "concat") return Accumulation::Concat;
  throw ConfigError("unknown accumulation mode '" + std::string(name) +
                    "' (expected mean, 1-norm, 2-norm or concat)");
}

const char* to_string(Accumulation mode) {
  switch (mode) {
    case Accumulation::Mean: return "mean";
    case Accumulation::Norm1: return "1-norm";
    case Accumulation::Norm2: return "2-norm";
    case Accumulation::Concat: return "concat";
  }
  return "mean";
}

// ---------------------------------------------------------------------------
// Parameters

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.visit([](const std::string&, Matrix& m) { m.fill(0.0); });
  return z;
}

std::uint64_t ModelParams::fingerprint() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const void* p, std::size_t n) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  visit([&](const std::string&, const Matrix& m) {
    const std::size_t shape[2] = {m.rows(), m.cols()};
    mix(shape, sizeof(shape));
    mix(m.data().data(), m.size() * sizeof(double));
  });
  return h;
}

namespace {

void glorot(Matrix& m, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& x : m.data()) x = dist(rng);
}

}  // namespace

ModelParams init_params(const HeteroGraph& g, const std::vector<Hypergraph>& hypergraphs,
                        const ModelConfig& cfg, std::uint64_t seed) {
  if (cfg.layers < 1) throw ConfigError("layers must be at least 1");
  if (cfg.d_hidden < 1 || cfg.d_att < 1 || cfg.d_fusion < 1)
    throw ConfigError("model dimensions must be positive");
  if (cfg.num_classes < 1) throw ConfigError("num_classes must be positive");
  if (!(cfg.lambda > 0.0 && cfg.lambda <= 1.0)) throw ConfigError("lambda must lie in (0, 1]");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(cfg.slope >= 0.0)) throw ConfigError("leaky_slope must be non-negative");
  if (hypergraphs.empty()) throw ConfigError("at least one hypergraph is required");

  ModelParams p;
  for (NodeTypeId t = 0; t < g.num_node_types(); ++t) {
    p.type_names.push_back(g.type_name(t));
    p.type_proj.emplace_back(g.feature_dim(t), cfg.d_hidden);
  }
  for (std::size_t l = 0; l < cfg.layers; ++l) p.attention_vec.emplace_back(1, 2 * cfg.d_att);
  for (const auto& hg : hypergraphs) {
    if (hg.num_nodes() != g.num_nodes())
      throw ConfigError("hypergraph '" + hg.motif_id() + "' does not span the graph's nodes");
    for (const auto& b : p.branches)
      if (b.motif_id == hg.motif_id())
        throw ConfigError("duplicate motif id '" + hg.motif_id() + "'");
    BranchParams b;
    b.motif_id = hg.motif_id();
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const std::size_t d_out =
          l + 1 == cfg.layers ? static_cast<std::size_t>(cfg.num_classes) : cfg.d_hidden;
      LayerParams lp;
      lp.attention_proj = Matrix(cfg.d_hidden, cfg.d_att);
      lp.weight = Matrix(cfg.d_hidden, d_out);
      if (cfg.mode == Accumulation::Concat) {
        if (hg.fixed_arity() == 0 && hg.num_edges() > 0)
          throw ConfigError("concat accumulation needs fixed-arity hyperedges ('" +
                            hg.motif_id() + "')");
        const std::size_t m = std::max<std::size_t>(hg.fixed_arity(), 2);
        lp.concat_proj = Matrix(m * cfg.d_hidden, cfg.d_hidden);
      }
      b.layers.push_back(std::move(lp));
    }
    p.branches.push_back(std::move(b));
  }
  p.fusion_w = Matrix(static_cast<std::size_t>(cfg.num_classes), cfg.d_fusion);
  p.fusion_b = Matrix(1, cfg.d_fusion);
  p.fusion_a = Matrix(1, cfg.d_fusion);
  p.lambda = Matrix(1, 1, cfg.lambda);

  std::mt19937_64 rng(seed);
  p.visit([&](const std::string& name, Matrix& m) {
    if (name == "fusion.b" || name == "lambda") return;
    glorot(m, rng);
  });
  return p;
}

// ---------------------------------------------------------------------------
// Feature projection

Matrix project_features(const HeteroGraph& g, std::span<const Matrix> type_proj) {
  if (type_proj.size() < g.num_node_types())
    throw NumericError("project_features: missing projection for a node type");
  const std::size_t d = type_proj.empty() ? 0 : type_proj[0].cols();
  Matrix out(g.num_nodes(), d);
  for (NodeTypeId t = 0; t < g.num_node_types(); ++t) {
    const auto& nodes = g.nodes_of_type(t);
    if (nodes.empty()) continue;
    if (type_proj[t].rows() != g.feature_dim(t) || type_proj[t].cols() != d)
      throw NumericError("project_features: projection shape mismatch for type '" +
                         g.type_name(t) + "'");
    const Matrix proj = matmul(g.type_features(t), type_proj[t]);
    for (std::size_t r = 0; r < nodes.size(); ++r)
      std::copy(proj.row(r).begin(), proj.row(r).end(), out.row(nodes[r]).begin());
  }
  require_finite(out, "projected features");
  return out;
}

namespace {

void project_features_backward(const HeteroGraph& g, const Matrix& dx,
                               std::vector<Matrix>& dproj) {
  for (NodeTypeId t = 0; t < g.num_node_types(); ++t) {
    const auto& nodes = g.nodes_of_type(t);
    if (nodes.empty()) continue;
    Matrix rows(nodes.size(), dx.cols());
    for (std::size_t r = 0; r < nodes.size(); ++r)
      std::copy(dx.row(nodes[r]).begin(), dx.row(nodes[r]).end(), rows.row(r).begin());
    axpy(dproj[t], matmul_tn(g.type_features(t), rows));
  }
}

Matrix concat_members(const Hypergraph& hg, const Matrix& x) {
  const std::size_t m = hg.fixed_arity();
  if (m == 0) throw NumericError("concat accumulation on variable-size hyperedges");
  const std::size_t d = x.cols();
  Matrix c(hg.num_edges(), m * d);
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    for (std::size_t s = 0; s < m; ++s)
      std::copy(x.row(mem[s]).begin(), x.row(mem[s]).end(), c.row(e).begin() + s * d);
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hyperedge features

Matrix edge_features(const Hypergraph& hg, const Matrix& x, Accumulation mode,
                     const Matrix* concat_proj) {
  if (x.rows() != hg.num_nodes()) throw NumericError("edge_features: row count mismatch");
  const std::size_t d = x.cols();
  if (mode == Accumulation::Concat) {
    if (!concat_proj) throw NumericError("edge_features: concat mode needs a projection");
    return matmul(concat_members(hg, x), *concat_proj);
  }
  Matrix out(hg.num_edges(), d);
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    auto o = out.row(e);
    const auto& mem = hg.members(e);
    for (NodeId v : mem) {
      auto xv = x.row(v);
      for (std::size_t k = 0; k < d; ++k) {
        switch (mode) {
          case Accumulation::Mean: o[k] += xv[k]; break;
          case Accumulation::Norm1: o[k] += std::abs(xv[k]); break;
          default: o[k] += xv[k] * xv[k]; break;
        }
      }
    }
    for (double& v : o) {
      if (mode == Accumulation::Mean) v /= static_cast<double>(mem.size());
      else if (mode == Accumulation::Norm2) v = std::sqrt(v);
    }
  }
  return out;
}

namespace {

/// Routes dL/dE back to the member features (and the concat projection).
void edge_features_backward(const Hypergraph& hg, const Matrix& x, Accumulation mode,
                            const Matrix& edge_feat, const Matrix& concat_in,
                            const Matrix* concat_proj, const Matrix& de, Matrix& dx,
                            Matrix* dconcat) {
  const std::size_t d = x.cols();
  if (mode == Accumulation::Concat) {
    axpy(*dconcat, matmul_tn(concat_in, de));
    const Matrix dc = matmul_nt(de, *concat_proj);
    for (std::size_t e = 0; e < hg.num_edges(); ++e) {
      const auto& mem = hg.members(e);
      for (std::size_t s = 0; s < mem.size(); ++s) {
        auto dxv = dx.row(mem[s]);
        auto src = dc.row(e);
        for (std::size_t k = 0; k < d; ++k) dxv[k] += src[s * d + k];
      }
    }
    return;
  }
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    auto g = de.row(e);
    for (NodeId v : mem) {
      auto xv = x.row(v);
      auto dxv = dx.row(v);
      for (std::size_t k = 0; k < d; ++k) {
        switch (mode) {
          case Accumulation::Mean: dxv[k] += g[k] / static_cast<double>(mem.size()); break;
          case Accumulation::Norm1:
            dxv[k] += g[k] * static_cast<double>((xv[k] > 0.0) - (xv[k] < 0.0));
            break;
          default: {
            const double n = edge_feat(e, k);
            if (n > 0.0) dxv[k] += g[k] * xv[k] / n;
          }
        }
      }
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Hyperedge attention

AttentionResult attention_incidence(const Hypergraph& hg, const Matrix& x, const Matrix& proj,
                                    const Matrix& att_vec, double slope, Accumulation mode,
                                    const Matrix* concat_proj) {
  const std::size_t d_att = proj.cols();
  if (att_vec.size() != 2 * d_att)
    throw NumericError("attention_incidence: attention vector must have 2·d_att entries");
  AttentionResult r;
  r.node_proj = matmul(x, proj);
  if (mode == Accumulation::Mean) {
    // x_e·P = mean of member x_v·P, so the projection is shared with the nodes.
    r.edge_proj = Matrix(hg.num_edges(), d_att);
    for (std::size_t e = 0; e < hg.num_edges(); ++e) {
      const auto& mem = hg.members(e);
      auto o = r.edge_proj.row(e);
      for (NodeId v : mem) {
        auto src = r.node_proj.row(v);
        for (std::size_t k = 0; k < d_att; ++k) o[k] += src[k];
      }
      for (double& v : o) v /= static_cast<double>(mem.size());
    }
  } else {
    if (mode == Accumulation::Concat) {
      if (!concat_proj) throw NumericError("attention_incidence: concat mode needs a projection");
      r.concat_in = concat_members(hg, x);
      r.edge_feat = matmul(r.concat_in, *concat_proj);
    } else {
      r.edge_feat = edge_features(hg, x, mode);
    }
    r.edge_proj = matmul(r.edge_feat, proj);
  }

  auto a = att_vec.data();
  const std::span<const double> a_node = a.subspan(0, d_att);
  const std::span<const double> a_edge = a.subspan(d_att, d_att);
  std::vector<double> node_term(hg.num_nodes());
  for (std::size_t v = 0; v < hg.num_nodes(); ++v) node_term[v] = dot(r.node_proj.row(v), a_node);

  r.values.resize(hg.num_incidences());
  r.raw.resize(hg.num_incidences());
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    const std::size_t off = hg.incidence_offset(e);
    const double edge_term = dot(r.edge_proj.row(e), a_edge);
    double mx = -INFINITY;
    for (std::size_t s = 0; s < mem.size(); ++s) {
      r.raw[off + s] = node_term[mem[s]] + edge_term;
      mx = std::max(mx, leaky_relu(r.raw[off + s], slope));
    }
    double z = 0.0;
    for (std::size_t s = 0; s < mem.size(); ++s)
      z += (r.values[off + s] = std::exp(leaky_relu(r.raw[off + s], slope) - mx));
    for (std::size_t s = 0; s < mem.size(); ++s) r.values[off + s] /= z;
    if (!std::isfinite(mx) || !std::isfinite(z))
      throw NumericError("attention_incidence: non-finite scores on hyperedge " +
                         std::to_string(e));
  }
  return r;
}

std::vector<double> uniform_incidence(const Hypergraph& hg) {
  std::vector<double> values(hg.num_incidences());
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    const std::size_t off = hg.incidence_offset(e);
    for (std::size_t s = 0; s < mem.size(); ++s)
      values[off + s] = 1.0 / static_cast<double>(mem.size());
  }
  return values;
}

Matrix dense_incidence(const Hypergraph& hg, std::span<const double> values) {
  Matrix h(hg.num_nodes(), hg.num_edges());
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    const std::size_t off = hg.incidence_offset(e);
    for (std::size_t s = 0; s < mem.size(); ++s) h(mem[s], e) = values[off + s];
  }
  return h;
}

namespace {

struct AttentionGrads {
  Matrix& dx;
  Matrix& dproj;
  Matrix& datt;
  Matrix* dconcat;
};

void attention_backward(const Hypergraph& hg, const Matrix& x, const Matrix& proj,
                        const Matrix& att_vec, double slope, Accumulation mode,
                        const Matrix* concat_proj, const AttentionResult& r,
                        std::span<const double> dvalues, AttentionGrads out) {
  const std::size_t d_att = proj.cols();
  auto a = att_vec.data();
  std::vector<double> dnode(hg.num_nodes(), 0.0);
  std::vector<double> dedge(hg.num_edges(), 0.0);
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const std::size_t off = hg.incidence_offset(e);
    const std::size_t m = hg.members(e).size();
    double inner = 0.0;
    for (std::size_t s = 0; s < m; ++s) inner += r.values[off + s] * dvalues[off + s];
    for (std::size_t s = 0; s < m; ++s) {
      const double dscore = r.values[off + s] * (dvalues[off + s] - inner);
      const double draw = dscore * (r.raw[off + s] >= 0.0 ? 1.0 : slope);
      dnode[hg.members(e)[s]] += draw;
      dedge[e] += draw;
    }
  }

  auto datt = out.datt.data();
  Matrix dnode_proj(hg.num_nodes(), d_att);
  for (std::size_t v = 0; v < hg.num_nodes(); ++v) {
    if (dnode[v] == 0.0) continue;
    auto xp = r.node_proj.row(v);
    auto o = dnode_proj.row(v);
    for (std::size_t k = 0; k < d_att; ++k) {
      datt[k] += dnode[v] * xp[k];
      o[k] = dnode[v] * a[k];
    }
  }
  Matrix dedge_proj(hg.num_edges(), d_att);
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    auto ep = r.edge_proj.row(e);
    auto o = dedge_proj.row(e);
    for (std::size_t k = 0; k < d_att; ++k) {
      datt[d_att + k] += dedge[e] * ep[k];
      o[k] = dedge[e] * a[d_att + k];
    }
  }

  if (mode == Accumulation::Mean) {
    for (std::size_t e = 0; e < hg.num_edges(); ++e) {
      const auto& mem = hg.members(e);
      auto g = dedge_proj.row(e);
      for (NodeId v : mem) {
        auto o = dnode_proj.row(v);
        for (std::size_t k = 0; k < d_att; ++k) o[k] += g[k] / static_cast<double>(mem.size());
      }
    }
  } else {
    axpy(out.dproj, matmul_tn(r.edge_feat, dedge_proj));
    const Matrix de = matmul_nt(dedge_proj, proj);
    edge_features_backward(hg, x, mode, r.edge_feat, r.concat_in, concat_proj, de, out.dx,
                           out.dconcat);
  }
  axpy(out.dproj, matmul_tn(x, dnode_proj));
  axpy(out.dx, matmul_nt(dnode_proj, proj));
}

}  // namespace

// ---------------------------------------------------------------------------
// Convolution

std::vector<double> inv_sqrt_node_degrees(const Hypergraph& hg) {
  auto d = node_degrees(hg);
  for (double& x : d) x = x > 0.0 ? 1.0 / std::sqrt(x) : 0.0;
  return d;
}

ConvResult hyperconv_layer(const Hypergraph& hg, const Matrix& x, std::span<const double> hhat,
                           double lambda, const Matrix& weight, bool activate, double slope) {
  if (x.rows() != hg.num_nodes()) throw NumericError("hyperconv_layer: row count mismatch");
  if (hhat.size() != hg.num_incidences())
    throw NumericError("hyperconv_layer: incidence value count mismatch");
  const auto dv = inv_sqrt_node_degrees(hg);
  ConvResult r;
  r.y = matmul(x, weight);
  const std::size_t d = r.y.cols();

  r.msg = Matrix(hg.num_edges(), d);
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    const std::size_t off = hg.incidence_offset(e);
    const double c = hg.weight(e) / static_cast<double>(mem.size());
    auto o = r.msg.row(e);
    for (std::size_t s = 0; s < mem.size(); ++s) {
      const double coef = c * hhat[off + s] * dv[mem[s]];
      if (coef == 0.0) continue;
      auto y = r.y.row(mem[s]);
      for (std::size_t k = 0; k < d; ++k) o[k] += coef * y[k];
    }
  }

  r.pre = scale(r.y, lambda);
  for (std::size_t v = 0; v < hg.num_nodes(); ++v) {
    if (dv[v] == 0.0) continue;
    auto o = r.pre.row(v);
    for (const auto& inc : hg.incident_edges(v)) {
      const double coef = dv[v] * hhat[hg.incidence_offset(inc.edge) + inc.slot];
      auto msg = r.msg.row(inc.edge);
      for (std::size_t k = 0; k < d; ++k) o[k] += coef * msg[k];
    }
  }
  r.out = activate ? leaky_relu(r.pre, slope) : r.pre;
  require_finite(r.out, "hypergraph convolution output");
  return r;
}

namespace {

struct ConvGrads {
  Matrix dx;
  Matrix dweight;
  double dlambda = 0.0;
  std::vector<double> dhhat;
};

ConvGrads conv_backward(const Hypergraph& hg, const Matrix& x, std::span<const double> hhat,
                        double lambda, const Matrix& weight, bool activate, double slope,
                        const ConvResult& r, const Matrix& dout) {
  const auto dv = inv_sqrt_node_degrees(hg);
  const std::size_t d = r.y.cols();
  Matrix dpre = dout;
  if (activate) {
    auto g = dpre.data();
    auto pre = r.pre.data();
    for (std::size_t i = 0; i < g.size(); ++i)
      if (pre[i] < 0.0) g[i] *= slope;
  }

  ConvGrads out;
  out.dhhat.assign(hg.num_incidences(), 0.0);
  {
    auto g = dpre.data();
    auto y = r.y.data();
    for (std::size_t i = 0; i < g.size(); ++i) out.dlambda += g[i] * y[i];
  }
  Matrix dy = scale(dpre, lambda);

  // Node gather: pre_v += dv_v Σ_e ĥ_ve msg_e.
  Matrix dmsg(hg.num_edges(), d);
  for (std::size_t v = 0; v < hg.num_nodes(); ++v) {
    if (dv[v] == 0.0) continue;
    auto g = dpre.row(v);
    for (const auto& inc : hg.incident_edges(v)) {
      const std::size_t idx = hg.incidence_offset(inc.edge) + inc.slot;
      auto msg = r.msg.row(inc.edge);
      out.dhhat[idx] += dv[v] * dot(g, msg);
      auto dm = dmsg.row(inc.edge);
      const double coef = dv[v] * hhat[idx];
      for (std::size_t k = 0; k < d; ++k) dm[k] += coef * g[k];
    }
  }
  // Edge scatter: msg_e = (w_e/δ_e) Σ_v ĥ_ve dv_v y_v.
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    const std::size_t off = hg.incidence_offset(e);
    const double c = hg.weight(e) / static_cast<double>(mem.size());
    auto dm = dmsg.row(e);
    for (std::size_t s = 0; s < mem.size(); ++s) {
      const NodeId v = mem[s];
      if (dv[v] == 0.0) continue;
      auto y = r.y.row(v);
      out.dhhat[off + s] += c * dv[v] * dot(dm, y);
      const double coef = c * hhat[off + s] * dv[v];
      auto dyv = dy.row(v);
      for (std::size_t k = 0; k < d; ++k) dyv[k] += coef * dm[k];
    }
  }
  out.dweight = matmul_tn(x, dy);
  out.dx = matmul_nt(dy, weight);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Semantic fusion

FusionResult semantic_fusion(std::span<const Matrix> z_list, const Matrix& w, const Matrix& b,
                             const Matrix& a) {
  if (z_list.empty()) throw NumericError("semantic_fusion: no representations to fuse");
  const std::size_t n = z_list[0].rows();
  const std::size_t d_f = w.cols();
  if (b.size() != d_f || a.size() != d_f) throw NumericError("semantic_fusion: shape mismatch");
  FusionResult r;
  for (const Matrix& z : z_list) {
    if (!z.same_shape(z_list[0])) throw NumericError("semantic_fusion: shape mismatch");
    Matrix h = matmul(z, w);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = h.row(i);
      for (std::size_t k = 0; k < d_f; ++k) row[k] = std::tanh(row[k] + b.data()[k]);
    }
    double score = 0.0;
    for (std::size_t i = 0; i < n; ++i) score += dot(h.row(i), a.data());
    r.scores.push_back(n ? score / static_cast<double>(n) : 0.0);
    r.hidden.push_back(std::move(h));
  }
  const Matrix c = row_softmax(Matrix::row_vector(r.scores));
  r.coeffs.assign(c.data().begin(), c.data().end());
  r.fused = Matrix(n, z_list[0].cols());
  for (std::size_t t = 0; t < z_list.size(); ++t) axpy(r.fused, z_list[t], r.coeffs[t]);
  return r;
}

namespace {

void fusion_backward(std::span<const Matrix> z_list, const Matrix& w, const Matrix& a,
                     const FusionResult& r, const Matrix& dfused, std::vector<Matrix>& dz,
                     Matrix& dw, Matrix& db, Matrix& da) {
  const std::size_t t_count = z_list.size();
  const std::size_t n = dfused.rows();
  const std::size_t d_f = w.cols();
  std::vector<double> dcoef(t_count);
  for (std::size_t t = 0; t < t_count; ++t) dcoef[t] = dot(dfused.data(), z_list[t].data());
  double mean = 0.0;
  for (std::size_t t = 0; t < t_count; ++t) mean += r.coeffs[t] * dcoef[t];

  dz.assign(t_count, Matrix());
  for (std::size_t t = 0; t < t_count; ++t) {
    dz[t] = scale(dfused, r.coeffs[t]);
    const double k = r.coeffs[t] * (dcoef[t] - mean) / static_cast<double>(n);
    if (k == 0.0) continue;
    const Matrix& h = r.hidden[t];
    Matrix dpre(n, d_f);
    for (std::size_t i = 0; i < n; ++i) {
      auto hr = h.row(i);
      auto o = dpre.row(i);
      for (std::size_t j = 0; j < d_f; ++j) {
        da.data()[j] += k * hr[j];
        o[j] = k * a.data()[j] * (1.0 - hr[j] * hr[j]);
        db.data()[j] += o[j];
      }
    }
    axpy(dw, matmul_tn(z_list[t], dpre));
    axpy(dz[t], matmul_nt(dpre, w));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Loss

LossResult loss_and_accuracy(const Matrix& logits, std::span<const int> labels,
                             std::span<const NodeId> mask) {
  if (mask.empty()) throw DataError(DataErrorKind::InvalidArgument, "loss: empty label mask");
  if (labels.size() != logits.rows()) throw NumericError("loss: label count mismatch");
  const std::size_t q = logits.cols();
  LossResult r;
  r.predictions.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    r.predictions[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  r.logit_grad = Matrix(logits.rows(), q);
  const double inv = 1.0 / static_cast<double>(mask.size());
  for (NodeId v : mask) {
    if (v >= logits.rows()) throw NumericError("loss: mask node out of range");
    const int y = labels[v];
    if (y < 0 || static_cast<std::size_t>(y) >= q)
      throw DataError(DataErrorKind::LabelOutOfRange,
                      "loss: node " + std::to_string(v) + " has no valid label");
    auto row = logits.row(v);
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double x : row) z += std::exp(x - mx);
    const double lse = mx + std::log(z);
    r.loss += (lse - row[y]) * inv;
    auto g = r.logit_grad.row(v);
    for (std::size_t k = 0; k < q; ++k) g[k] += std::exp(row[k] - lse) * inv;
    g[y] -= inv;
  }
  if (!std::isfinite(r.loss)) throw NumericError("loss: non-finite value");
  return r;
}

// ---------------------------------------------------------------------------
// Full forward / backward

ForwardResult forward(const ModelParams& params, const HeteroGraph& g,
                      const std::vector<Hypergraph>& hypergraphs, const ModelConfig& cfg,
                      std::mt19937_64* dropout_rng) {
  if (params.branches.size() != hypergraphs.size())
    throw NumericError("forward: parameter branches do not match hypergraphs");
  if (params.attention_vec.size() != cfg.layers)
    throw NumericError("forward: parameter depth does not match config");
  ForwardResult out;
  ForwardCache& cache = out.cache;
  cache.graph = &g;
  cache.hypergraphs = &hypergraphs;
  cache.config = cfg;
  cache.fingerprint = params.fingerprint();
  cache.projected = project_features(g, params.type_proj);
  const double lambda = params.lambda(0, 0);

  std::vector<Matrix> z_list;
  for (std::size_t b = 0; b < hypergraphs.size(); ++b) {
    const Hypergraph& hg = hypergraphs[b];
    if (hg.num_edges() == 0) continue;
    if (hg.num_nodes() != g.num_nodes())
      throw NumericError("forward: hypergraph '" + hg.motif_id() + "' has wrong node count");
    const BranchParams& bp = params.branches[b];
    BranchCache bc;
    bc.hypergraph = b;
    const Matrix* x = &cache.projected;
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      const LayerParams& lp = bp.layers[l];
      LayerCache lc;
      lc.input = *x;
      if (l > 0 && dropout_rng && cfg.dropout > 0.0) {
        std::bernoulli_distribution keep(1.0 - cfg.dropout);
        lc.dropout_mask = Matrix(x->rows(), x->cols());
        auto mask = lc.dropout_mask.data();
        auto in = lc.input.data();
        for (std::size_t i = 0; i < mask.size(); ++i) {
          mask[i] = keep(*dropout_rng) ? 1.0 / (1.0 - cfg.dropout) : 0.0;
          in[i] *= mask[i];
        }
      }
      const Matrix* concat = lp.concat_proj.empty() ? nullptr : &lp.concat_proj;
      if (cfg.use_attention) {
        lc.attention = attention_incidence(hg, lc.input, lp.attention_proj,
                                           params.attention_vec[l], cfg.slope, cfg.mode, concat);
        lc.hhat = lc.attention.values;
      } else {
        lc.hhat = uniform_incidence(hg);
      }
      const bool activate = l + 1 < cfg.layers;
      lc.conv = hyperconv_layer(hg, lc.input, lc.hhat, lambda, lp.weight, activate, cfg.slope);
      bc.layers.push_back(std::move(lc));
      x = &bc.layers.back().conv.out;
    }
    z_list.push_back(*x);
    cache.branches.push_back(std::move(bc));
  }
  if (z_list.empty()) throw DataError(DataErrorKind::EmptyHypergraph, "all hypergraphs are empty");
  cache.fusion = semantic_fusion(z_list, params.fusion_w, params.fusion_b, params.fusion_a);
  out.logits = cache.fusion.fused;
  return out;
}

ModelParams backward_from_logits(const ModelParams& params, const ForwardCache& cache,
                                 const Matrix& logit_grad) {
  if (!cache.graph || !cache.hypergraphs || cache.branches.empty())
    throw NumericError("backward: no forward cache");
  if (cache.fingerprint != params.fingerprint())
    throw NumericError("backward: cache does not belong to these parameters");
  const ModelConfig& cfg = cache.config;
  const auto& hypergraphs = *cache.hypergraphs;
  const double lambda = params.lambda(0, 0);

  ModelParams grads = params.zeros_like();
  std::vector<Matrix> z_list;
  for (const auto& bc : cache.branches) z_list.push_back(bc.layers.back().conv.out);
  std::vector<Matrix> dz;
  fusion_backward(z_list, params.fusion_w, params.fusion_a, cache.fusion, logit_grad, dz,
                  grads.fusion_w, grads.fusion_b, grads.fusion_a);

  Matrix dprojected(cache.projected.rows(), cache.projected.cols());
  for (std::size_t i = 0; i < cache.branches.size(); ++i) {
    const BranchCache& bc = cache.branches[i];
    const Hypergraph& hg = hypergraphs[bc.hypergraph];
    const BranchParams& bp = params.branches[bc.hypergraph];
    BranchParams& bg = grads.branches[bc.hypergraph];
    Matrix dout = std::move(dz[i]);
    for (std::size_t l = cfg.layers; l-- > 0;) {
      const LayerCache& lc = bc.layers[l];
      const LayerParams& lp = bp.layers[l];
      LayerParams& lg = bg.layers[l];
      const bool activate = l + 1 < cfg.layers;
      ConvGrads cg = conv_backward(hg, lc.input, lc.hhat, lambda, lp.weight, activate, cfg.slope,
                                   lc.conv, dout);
      axpy(lg.weight, cg.dweight);
      grads.lambda(0, 0) += cg.dlambda;
      Matrix dinput = std::move(cg.dx);
      if (cfg.use_attention) {
        const Matrix* concat = lp.concat_proj.empty() ? nullptr : &lp.concat_proj;
        attention_backward(hg, lc.input, lp.attention_proj, params.attention_vec[l], cfg.slope,
                           cfg.mode, concat, lc.attention, cg.dhhat,
                           {dinput, lg.attention_proj, grads.attention_vec[l],
                            concat ? &lg.concat_proj : nullptr});
      }
      if (!lc.dropout_mask.empty()) dinput = hadamard(dinput, lc.dropout_mask);
      dout = std::move(dinput);
    }
    axpy(dprojected, dout);
  }
  project_features_backward(*cache.graph, dprojected, grads.type_proj);
  return grads;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, const Matrix& logits,
                   std::span<const int> labels, std::span<const NodeId> mask) {
  LossResult lr = loss_and_accuracy(logits, labels, mask);
  return {lr.loss, backward_from_logits(params, cache, lr.logit_grad)};
}

double evaluate_loss(const ModelParams& params, const HeteroGraph& g,
                     const std::vector<Hypergraph>& hypergraphs, const ModelConfig& cfg,
                     std::span<const int> labels, std::span<const NodeId> mask) {
  const ForwardResult fr = forward(params, g, hypergraphs, cfg);
  return loss_and_accuracy(fr.logits, labels, mask).loss;
}

std::vector<GradCheckEntry> gradient_check(const ModelParams& params, const HeteroGraph& g,
                                           const std::vector<Hypergraph>& hypergraphs,
                                           const ModelConfig& cfg, std::span<const int> labels,
                                           std::span<const NodeId> mask, double step) {
  ModelConfig eval_cfg = cfg;
  eval_cfg.dropout = 0.0;
  const ForwardResult fr = forward(params, g, hypergraphs, eval_cfg);
  const Gradients grads = backward(params, fr.cache, fr.logits, labels, mask);

  std::vector<std::pair<std::string, const Matrix*>> analytic;
  grads.grads.visit(
      [&](const std::string& name, const Matrix& m) { analytic.emplace_back(name, &m); });

  std::vector<GradCheckEntry> out;
  for (std::size_t idx = 0; idx < analytic.size(); ++idx) {
    ModelParams probe = params;
    Matrix* target = nullptr;
    std::size_t k = 0;
    probe.visit([&](const std::string&, Matrix& m) {
      if (k++ == idx) target = &m;
    });
    const Matrix original = *target;
    auto loss_fn = [&](const Matrix& value) {
      *target = value;
      return evaluate_loss(probe, g, hypergraphs, eval_cfg, labels, mask);
    };
    const double err = finite_diff_check(loss_fn, original, *analytic[idx].second, step);
    *target = original;
    out.push_back({analytic[idx].first, original.size(), err});
  }
  return out;
}

}  // namespace sphnn
