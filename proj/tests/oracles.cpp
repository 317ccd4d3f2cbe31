#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace oracle {

namespace fs = std::filesystem;
using sphnn::EdgeTypeId;
using sphnn::NodeTypeId;

fs::path fixture(const std::string& name) { return fs::path(SPHNN_FIXTURES_DIR) / name; }

fs::path cli_path() { return SPHNN_CLI_PATH; }

fs::path temp_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("sphnn_test_" + std::to_string(::getpid()) + "_" + tag + "_" +
                        std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

HeteroGraph random_graph(std::mt19937_64& rng, std::size_t n, std::size_t types,
                         std::size_t etypes, double p) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HeteroGraph::Builder b;
  for (std::size_t t = 0; t < types; ++t) b.add_node_type("t" + std::to_string(t), 1 + t);
  for (std::size_t e = 0; e < etypes; ++e) b.add_edge_type("e" + std::to_string(e));
  for (std::size_t v = 0; v < n; ++v) {
    const auto t = static_cast<NodeTypeId>(rng() % types);
    std::vector<double> f(1 + t);
    for (double& x : f) x = u(rng) - 0.5;
    b.add_node("n" + std::to_string(v), t, std::move(f));
  }
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t c = a + 1; c < n; ++c)
      if (u(rng) < p)
        b.add_edge(static_cast<NodeId>(a), static_cast<NodeId>(c),
                   static_cast<EdgeTypeId>(rng() % etypes));
  b.set_num_classes(1);
  return std::move(b).build();
}

std::string random_motif_spec(std::mt19937_64& rng, const HeteroGraph& g, std::size_t arity) {
  nlohmann::json roles = nlohmann::json::array(), edges = nlohmann::json::array();
  for (std::size_t i = 0; i < arity; ++i)
    roles.push_back({{"name", "r" + std::to_string(i)},
                     {"type", g.type_name(static_cast<NodeTypeId>(rng() % g.num_node_types()))}});
  std::set<std::array<std::size_t, 3>> used;
  auto add = [&](std::size_t a, std::size_t b) {
    const std::size_t et = rng() % g.num_edge_types();
    if (!used.insert({std::min(a, b), std::max(a, b), et}).second) return;
    edges.push_back({"r" + std::to_string(a), "r" + std::to_string(b),
                     g.etype_name(static_cast<EdgeTypeId>(et))});
  };
  for (std::size_t i = 1; i < arity; ++i) add(rng() % i, i);
  if (arity > 2 && rng() % 2 == 0) {
    const std::size_t a = rng() % arity;
    const std::size_t b = (a + 1 + rng() % (arity - 1)) % arity;
    add(a, b);
  }
  return nlohmann::json{{"id", "M"}, {"roles", roles}, {"edges", edges}}.dump();
}

namespace {

std::vector<std::vector<std::size_t>> brute_automorphisms(const MotifPattern& p) {
  const std::size_t m = p.arity();
  std::set<std::array<std::size_t, 3>> edge_set;
  for (const auto& e : p.edges) edge_set.insert({std::min(e.a, e.b), std::max(e.a, e.b), e.etype});
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<std::size_t>> out;
  do {
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) ok = p.roles[perm[i]].type == p.roles[i].type;
    std::set<std::array<std::size_t, 3>> mapped;
    for (const auto& e : p.edges) {
      const std::size_t a = perm[e.a], b = perm[e.b];
      mapped.insert({std::min(a, b), std::max(a, b), e.etype});
    }
    if (ok && mapped == edge_set) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

std::set<std::vector<NodeId>> brute_force_instances(const HeteroGraph& g, const MotifPattern& p) {
  const std::size_t m = p.arity();
  const std::size_t n = g.num_nodes();
  const auto autos = brute_automorphisms(p);
  std::set<std::vector<NodeId>> out;
  std::vector<NodeId> a(m, 0);
  while (true) {
    bool ok = true;
    for (std::size_t i = 0; i < m && ok; ++i) {
      ok = g.node_type(a[i]) == p.roles[i].type;
      for (std::size_t j = 0; j < i && ok; ++j) ok = a[i] != a[j];
    }
    for (std::size_t k = 0; k < p.edges.size() && ok; ++k) {
      const auto& e = p.edges[k];
      bool found = false;
      for (const auto& x : g.edges())
        found = found || (x.etype == e.etype && ((x.src == a[e.a] && x.dst == a[e.b]) ||
                                                 (x.src == a[e.b] && x.dst == a[e.a])));
      ok = found;
    }
    if (ok) {
      std::vector<NodeId> best;
      for (const auto& perm : autos) {
        std::vector<NodeId> img(m);
        for (std::size_t i = 0; i < m; ++i) img[perm[i]] = a[i];
        if (best.empty() || img < best) best = img;
      }
      out.insert(best);
    }
    std::size_t i = 0;
    while (i < m && ++a[i] == n) a[i++] = 0;
    if (i == m) break;
  }
  return out;
}

Hypergraph random_hypergraph(std::mt19937_64& rng, std::size_t n, std::size_t edges,
                             int max_weight) {
  std::vector<std::vector<NodeId>> members;
  std::vector<double> weights;
  std::vector<NodeId> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t e = 0; e < edges; ++e) {
    const std::size_t size = 2 + rng() % std::min<std::size_t>(4, n - 1);
    std::shuffle(all.begin(), all.end(), rng);
    members.emplace_back(all.begin(), all.begin() + static_cast<long>(size));
    weights.push_back(static_cast<double>(1 + rng() % static_cast<unsigned>(max_weight)));
  }
  return Hypergraph("R", n, std::move(members), std::move(weights));
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

Matrix naive_transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix diag(const std::vector<double>& d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix dense_h(const Hypergraph& hg) {
  Matrix h(hg.num_nodes(), hg.num_edges());
  for (std::size_t e = 0; e < hg.num_edges(); ++e)
    for (NodeId v : hg.members(e)) h(v, e) = 1.0;
  return h;
}

Matrix scalar_attention(const Hypergraph& hg, const Matrix& x, const Matrix& p, const Matrix& a,
                        double slope) {
  const std::size_t d = x.cols(), k = p.cols();
  Matrix out(hg.num_nodes(), hg.num_edges());
  auto project = [&](const std::vector<double>& row) {
    std::vector<double> r(k, 0.0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t i = 0; i < d; ++i) r[j] += row[i] * p(i, j);
    return r;
  };
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& mem = hg.members(e);
    std::vector<double> xe(d, 0.0);
    for (NodeId v : mem)
      for (std::size_t i = 0; i < d; ++i) xe[i] += x(v, i) / static_cast<double>(mem.size());
    const auto pe = project(xe);
    std::vector<double> s;
    for (NodeId v : mem) {
      std::vector<double> row(x.row(v).begin(), x.row(v).end());
      const auto pv = project(row);
      double score = 0.0;
      for (std::size_t j = 0; j < k; ++j) score += a(0, j) * pv[j] + a(0, k + j) * pe[j];
      s.push_back(score >= 0.0 ? score : slope * score);
    }
    double z = 0.0;
    for (double si : s) z += std::exp(si);
    for (std::size_t i = 0; i < mem.size(); ++i) out(mem[i], e) = std::exp(s[i]) / z;
  }
  return out;
}

Matrix dense_conv(const Hypergraph& hg, const Matrix& x, const Matrix& hhat_dense, double lambda,
                  const Matrix& theta) {
  const std::size_t n = hg.num_nodes(), m = hg.num_edges();
  const Matrix h = dense_h(hg);
  std::vector<double> dv(n, 0.0), de_inv(m), w(m);
  for (std::size_t e = 0; e < m; ++e) {
    w[e] = hg.weight(e);
    double size = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      dv[v] += w[e] * h(v, e);
      size += h(v, e);
    }
    de_inv[e] = 1.0 / size;
  }
  for (double& d : dv) d = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  const Matrix dvm = diag(dv);
  Matrix prop = naive_matmul(naive_matmul(naive_matmul(dvm, hhat_dense), diag(w)), diag(de_inv));
  prop = naive_matmul(naive_matmul(prop, naive_transpose(hhat_dense)), dvm);
  for (std::size_t v = 0; v < n; ++v) prop(v, v) += lambda;
  return naive_matmul(naive_matmul(prop, x), theta);
}

Matrix reference_forward(const HeteroGraph& g, const Hypergraph& hg,
                         const sphnn::ModelParams& params, double slope) {
  const std::size_t n = g.num_nodes();
  const std::size_t d = params.type_proj.front().cols();
  Matrix x(n, d);
  for (NodeId v = 0; v < n; ++v) {
    const auto f = g.features(v);
    const Matrix& u = params.type_proj[g.node_type(v)];
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < f.size(); ++i) x(v, j) += f[i] * u(i, j);
  }
  Matrix hn = dense_h(hg);
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    double size = 0.0;
    for (std::size_t v = 0; v < n; ++v) size += hn(v, e);
    for (std::size_t v = 0; v < n; ++v) hn(v, e) /= size;
  }
  const auto& layers = params.branches.front().layers;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    x = dense_conv(hg, x, hn, 1.0, layers[l].weight);
    if (l + 1 < layers.size())
      for (double& v : x.data()) v = v >= 0.0 ? v : slope * v;
  }
  return x;
}

std::pair<std::vector<double>, Matrix> scalar_fusion(const std::vector<Matrix>& z, const Matrix& w,
                                                     const Matrix& b, const Matrix& a) {
  const std::size_t n = z.front().rows(), q = z.front().cols(), df = w.cols();
  std::vector<double> scores;
  for (const Matrix& zt : z) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < df; ++k) {
        double h = b(0, k);
        for (std::size_t c = 0; c < q; ++c) h += zt(i, c) * w(c, k);
        s += a(0, k) * std::tanh(h);
      }
    scores.push_back(s / static_cast<double>(n));
  }
  const double mx = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (double& s : scores) total += (s = std::exp(s - mx));
  for (double& s : scores) s /= total;
  Matrix fused(n, q);
  for (std::size_t t = 0; t < z.size(); ++t)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < q; ++c) fused(i, c) += scores[t] * z[t](i, c);
  return {scores, fused};
}

double scalar_cross_entropy(const Matrix& logits, const std::vector<int>& labels,
                            const std::vector<NodeId>& mask) {
  double total = 0.0;
  for (NodeId v : mask) {
    double mx = -INFINITY;
    for (std::size_t c = 0; c < logits.cols(); ++c) mx = std::max(mx, logits(v, c));
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) z += std::exp(logits(v, c) - mx);
    total += mx + std::log(z) - logits(v, static_cast<std::size_t>(labels[v]));
  }
  return total / static_cast<double>(mask.size());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CliResult run_cli(const std::string& args) {
  const fs::path dir = temp_dir("cli");
  const std::string cmd = "\"" + cli_path().string() + "\" " + args + " > \"" +
                          (dir / "out.txt").string() + "\" 2> \"" + (dir / "err.txt").string() +
                          "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_file(dir / "out.txt");
  r.err = read_file(dir / "err.txt");
  fs::remove_all(dir);
  return r;
}

SmallModel small_model() {
  SmallModel s;
  s.graph = sphnn::load_graph(fixture("gradcheck/data"));
  for (const char* name : {"motifs/apa.json", "motifs/pvp.json"}) {
    const auto p = sphnn::parse_motif(read_file(fixture(name)), s.graph);
    s.hypergraphs.push_back(
        sphnn::build_hypergraph(s.graph, p.id, sphnn::enumerate_instances(s.graph, p)));
  }
  s.config.num_classes = s.graph.num_classes();
  s.config.d_hidden = 8;
  s.config.d_att = 6;
  s.config.d_fusion = 5;
  s.config.lambda = 0.7;
  s.config.train_lambda = true;
  for (NodeId v = 0; v < s.graph.num_nodes(); ++v)
    if (s.graph.label(v) != sphnn::kUnlabeled) s.mask.push_back(v);
  return s;
}


HeteroGraph permute_graph(const HeteroGraph& g, const std::vector<NodeId>& perm) {
  HeteroGraph::Builder b;
  for (NodeTypeId t = 0; t < g.num_node_types(); ++t) b.add_node_type(g.type_name(t), g.feature_dim(t));
  for (EdgeTypeId t = 0; t < g.num_edge_types(); ++t) b.add_edge_type(g.etype_name(t));
  std::vector<NodeId> inverse(perm.size());
  for (NodeId v = 0; v < perm.size(); ++v) inverse[perm[v]] = v;
  for (NodeId w = 0; w < perm.size(); ++w) {
    const NodeId v = inverse[w];
    const auto f = g.features(v);
    b.add_node(g.node_key(v), g.node_type(v), {f.begin(), f.end()});
    if (g.label(v) != sphnn::kUnlabeled) b.set_label(w, g.label(v));
  }
  for (const auto& e : g.edges()) b.add_edge(perm[e.src], perm[e.dst], e.etype);
  b.set_num_classes(g.num_classes());
  b.set_target_type(g.target_type());
  return std::move(b).build();
}

std::set<std::tuple<NodeId, NodeId, std::string>> named_edges(const HeteroGraph& g) {
  std::set<std::tuple<NodeId, NodeId, std::string>> out;
  for (const auto& e : g.edges()) out.emplace(e.src, e.dst, g.etype_name(e.etype));
  return out;
}

}  // namespace oracle
