#include "sphnn/hin.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "sphnn/error.hpp"

namespace sphnn {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Builder

NodeTypeId HeteroGraph::Builder::add_node_type(std::string name, std::size_t feature_dim) {
  if (std::find(type_names_.begin(), type_names_.end(), name) != type_names_.end())
    throw DataError(DataErrorKind::InvalidArgument, "duplicate node type '" + name + "'");
  if (feature_dim == 0)
    throw DataError(DataErrorKind::FeatureDimension,
                    "node type '" + name + "' has zero feature dimension");
  type_names_.push_back(std::move(name));
  feature_dims_.push_back(feature_dim);
  return static_cast<NodeTypeId>(type_names_.size() - 1);
}

EdgeTypeId HeteroGraph::Builder::add_edge_type(std::string name) {
  if (std::find(etype_names_.begin(), etype_names_.end(), name) != etype_names_.end())
    throw DataError(DataErrorKind::InvalidArgument, "duplicate edge type '" + name + "'");
  etype_names_.push_back(std::move(name));
  return static_cast<EdgeTypeId>(etype_names_.size() - 1);
}

NodeId HeteroGraph::Builder::add_node(std::string key, NodeTypeId type,
                                      std::vector<double> features) {
  if (type >= type_names_.size())
    throw DataError(DataErrorKind::UnknownName, "unknown node type id for '" + key + "'");
  if (features.size() != feature_dims_[type])
    throw DataError(DataErrorKind::FeatureDimension,
                    "node '" + key + "' has " + std::to_string(features.size()) +
                        " features, type '" + type_names_[type] + "' expects " +
                        std::to_string(feature_dims_[type]));
  for (double x : features)
    if (!std::isfinite(x))
      throw DataError(DataErrorKind::MalformedRow, "non-finite feature for '" + key + "'");
  node_keys_.push_back(std::move(key));
  node_types_.push_back(type);
  features_.push_back(std::move(features));
  labels_.push_back(kUnlabeled);
  return static_cast<NodeId>(node_types_.size() - 1);
}

bool HeteroGraph::Builder::add_edge(NodeId a, NodeId b, EdgeTypeId etype) {
  const auto n = node_types_.size();
  if (a >= n || b >= n)
    throw DataError(DataErrorKind::DanglingEndpoint,
                    "edge endpoint " + std::to_string(a >= n ? a : b) + " is not a node");
  if (etype >= etype_names_.size())
    throw DataError(DataErrorKind::UnknownName, "unknown edge type id");
  if (a == b)
    throw DataError(DataErrorKind::SelfLoop, "self-loop on '" + node_keys_[a] + "'");
  const Edge e{std::min(a, b), std::max(a, b), etype};
  // The reverse orientation of an existing edge is the same undirected edge.
  if (!edge_set_.insert(e).second) return false;
  edges_.push_back(e);
  return true;
}

void HeteroGraph::Builder::set_label(NodeId v, int label) {
  if (v >= labels_.size())
    throw DataError(DataErrorKind::DanglingEndpoint, "label for unknown node");
  labels_[v] = label;
}

HeteroGraph HeteroGraph::Builder::build() && {
  HeteroGraph g;
  const std::size_t n = node_types_.size();
  for (std::size_t v = 0; v < n; ++v) {
    const int y = labels_[v];
    if (y != kUnlabeled && (y < 0 || y >= q_))
      throw DataError(DataErrorKind::LabelOutOfRange,
                      "label " + std::to_string(y) + " of '" + node_keys_[v] +
                          "' outside [0," + std::to_string(q_) + ")");
  }
  if (!type_names_.empty() && target_type_ >= type_names_.size())
    throw DataError(DataErrorKind::UnknownName, "target type id out of range");

  g.type_names_ = std::move(type_names_);
  g.feature_dims_ = std::move(feature_dims_);
  g.etype_names_ = std::move(etype_names_);
  g.node_keys_ = std::move(node_keys_);
  g.node_types_ = std::move(node_types_);
  std::sort(edges_.begin(), edges_.end());
  g.edges_ = std::move(edges_);
  g.labels_ = std::move(labels_);
  g.q_ = q_;
  g.target_type_ = target_type_;
  g.name_ = std::move(name_);

  const std::size_t ntypes = g.type_names_.size();
  g.by_type_.assign(ntypes, {});
  g.type_row_.assign(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    auto& bucket = g.by_type_[g.node_types_[v]];
    g.type_row_[v] = bucket.size();
    bucket.push_back(v);
  }
  g.type_features_.clear();
  for (NodeTypeId t = 0; t < ntypes; ++t) {
    Matrix m(g.by_type_[t].size(), g.feature_dims_[t]);
    for (std::size_t r = 0; r < g.by_type_[t].size(); ++r) {
      const auto& f = features_[g.by_type_[t][r]];
      std::copy(f.begin(), f.end(), m.row(r).begin());
    }
    g.type_features_.push_back(std::move(m));
  }

  g.adj_offsets_.assign(n + 1, 0);
  for (const Edge& e : g.edges_) {
    ++g.adj_offsets_[e.src + 1];
    ++g.adj_offsets_[e.dst + 1];
  }
  for (std::size_t v = 0; v < n; ++v) g.adj_offsets_[v + 1] += g.adj_offsets_[v];
  g.adj_.resize(g.adj_offsets_[n]);
  std::vector<std::size_t> cursor(g.adj_offsets_.begin(), g.adj_offsets_.end() - 1);
  for (const Edge& e : g.edges_) {
    g.adj_[cursor[e.src]++] = {e.dst, e.etype};
    g.adj_[cursor[e.dst]++] = {e.src, e.etype};
  }
  for (std::size_t v = 0; v < n; ++v)
    std::sort(g.adj_.begin() + g.adj_offsets_[v], g.adj_.begin() + g.adj_offsets_[v + 1]);
  return g;
}

// ---------------------------------------------------------------------------
// Queries

NodeTypeId HeteroGraph::node_type(NodeId v) const {
  if (v >= node_types_.size())
    throw DataError(DataErrorKind::InvalidArgument, "invalid node id " + std::to_string(v));
  return node_types_[v];
}

const std::string& HeteroGraph::node_key(NodeId v) const {
  if (v >= node_keys_.size())
    throw DataError(DataErrorKind::InvalidArgument, "invalid node id " + std::to_string(v));
  return node_keys_[v];
}

std::optional<NodeTypeId> HeteroGraph::find_type(std::string_view name) const {
  auto it = std::find(type_names_.begin(), type_names_.end(), name);
  if (it == type_names_.end()) return std::nullopt;
  return static_cast<NodeTypeId>(it - type_names_.begin());
}

std::optional<EdgeTypeId> HeteroGraph::find_etype(std::string_view name) const {
  auto it = std::find(etype_names_.begin(), etype_names_.end(), name);
  if (it == etype_names_.end()) return std::nullopt;
  return static_cast<EdgeTypeId>(it - etype_names_.begin());
}

std::optional<NodeId> HeteroGraph::find_node(std::string_view key) const {
  auto it = std::find(node_keys_.begin(), node_keys_.end(), key);
  if (it == node_keys_.end()) return std::nullopt;
  return static_cast<NodeId>(it - node_keys_.begin());
}

std::span<const double> HeteroGraph::features(NodeId v) const {
  const NodeTypeId t = node_type(v);
  return type_features_[t].row(type_row_[v]);
}

std::span<const Neighbor> HeteroGraph::incident(NodeId v) const {
  if (v >= node_types_.size())
    throw DataError(DataErrorKind::InvalidArgument, "invalid node id " + std::to_string(v));
  return {adj_.data() + adj_offsets_[v], adj_offsets_[v + 1] - adj_offsets_[v]};
}

bool HeteroGraph::has_edge(NodeId a, NodeId b, EdgeTypeId etype) const {
  auto nb = incident(a);
  return std::binary_search(nb.begin(), nb.end(), Neighbor{b, etype});
}

std::size_t HeteroGraph::typed_degree(NodeId v, EdgeTypeId etype) const {
  auto nb = incident(v);
  return static_cast<std::size_t>(std::count_if(
      nb.begin(), nb.end(), [etype](const Neighbor& x) { return x.etype == etype; }));
}

int HeteroGraph::label(NodeId v) const {
  if (v >= labels_.size())
    throw DataError(DataErrorKind::InvalidArgument, "invalid node id " + std::to_string(v));
  return labels_[v];
}

std::string HeteroGraph::summary() const {
  std::ostringstream os;
  os << "N=" << num_nodes() << " edges=" << num_edges() << " q=" << q_
     << " node_types=" << num_node_types() << " edge_types=" << num_edge_types();
  return os.str();
}

std::vector<NodeId> typed_neighbors(const HeteroGraph& g, NodeId v,
                                    std::optional<EdgeTypeId> etype) {
  std::vector<NodeId> out;
  for (const Neighbor& nb : g.incident(v))
    if (!etype || nb.etype == *etype) out.push_back(nb.node);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<int> known_dataset_classes(std::string_view name) {
  static const std::map<std::string, int, std::less<>> known{
      {"DBLP", 4}, {"ACM", 3}, {"AMINER", 10}};
  auto it = known.find(name);
  if (it == known.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Dataset directory I/O

namespace {

struct Row {
  std::size_t line;
  std::vector<std::string> cols;
};

std::vector<Row> read_tsv(const fs::path& path, std::size_t expected_cols) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrorKind::MissingFile, "cannot open file", path.string());
  std::vector<Row> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    Row row{lineno, {}};
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      row.cols.push_back(line.substr(start, tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (row.cols.size() != expected_cols)
      throw DataError(DataErrorKind::MalformedRow,
                      "expected " + std::to_string(expected_cols) + " tab-separated columns, got " +
                          std::to_string(row.cols.size()),
                      path.string(), lineno);
    for (const auto& c : row.cols)
      if (c.empty())
        throw DataError(DataErrorKind::MalformedRow, "empty column", path.string(), lineno);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> parse_vector(const std::string& text, const fs::path& file,
                                 std::size_t line) {
  std::vector<double> out;
  const char* p = text.data();
  const char* end = p + text.size();
  while (p <= end) {
    const char* comma = std::find(p, end, ',');
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(p, comma, x);
    if (ec != std::errc() || ptr != comma || !std::isfinite(x))
      throw DataError(DataErrorKind::MalformedRow,
                      "bad feature value '" + std::string(p, comma) + "'", file.string(), line);
    out.push_back(x);
    p = comma + 1;
  }
  return out;
}

int parse_int(const std::string& text, const fs::path& file, std::size_t line) {
  int x = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), x);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError(DataErrorKind::MalformedRow, "bad integer '" + text + "'", file.string(),
                    line);
  return x;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace

HeteroGraph load_graph(const fs::path& dir) {
  const fs::path nodes_path = dir / "nodes.tsv";
  const fs::path features_path = dir / "features.tsv";
  const fs::path edges_path = dir / "edges.tsv";
  const fs::path labels_path = dir / "labels.tsv";
  const fs::path meta_path = dir / "meta.json";

  json meta;
  {
    std::ifstream in(meta_path);
    if (!in) throw DataError(DataErrorKind::MissingFile, "cannot open file", meta_path.string());
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw DataError(DataErrorKind::MalformedRow, e.what(), meta_path.string());
    }
  }
  if (!meta.is_object() || !meta.contains("q") || !meta["q"].is_number_integer() ||
      !meta.contains("target_type") || !meta["target_type"].is_string())
    throw DataError(DataErrorKind::MalformedRow,
                    "meta.json needs integer 'q' and string 'target_type'", meta_path.string());
  const int q = meta["q"].get<int>();
  if (q < 1)
    throw DataError(DataErrorKind::MalformedRow, "q must be positive", meta_path.string());
  std::string name;
  if (meta.contains("name")) {
    name = meta["name"].get<std::string>();
    if (auto expected = known_dataset_classes(name); expected && *expected != q)
      throw DataError(DataErrorKind::InvalidArgument,
                      "dataset '" + name + "' has " + std::to_string(*expected) +
                          " classes, meta.json declares " + std::to_string(q),
                      meta_path.string());
  }

  const auto node_rows = read_tsv(nodes_path, 2);
  const auto feature_rows = read_tsv(features_path, 2);
  const auto edge_rows = read_tsv(edges_path, 3);
  const auto label_rows = read_tsv(labels_path, 2);

  std::unordered_map<std::string, NodeId> key_to_id;
  std::vector<std::string> type_of_node;
  std::vector<std::string> type_order;
  for (const Row& r : node_rows) {
    if (!key_to_id.emplace(r.cols[0], static_cast<NodeId>(key_to_id.size())).second)
      throw DataError(DataErrorKind::DuplicateNode, "duplicate node key '" + r.cols[0] + "'",
                      nodes_path.string(), r.line);
    type_of_node.push_back(r.cols[1]);
    if (std::find(type_order.begin(), type_order.end(), r.cols[1]) == type_order.end())
      type_order.push_back(r.cols[1]);
  }

  std::vector<std::optional<std::pair<std::vector<double>, std::size_t>>> feats(
      key_to_id.size());
  for (const Row& r : feature_rows) {
    auto it = key_to_id.find(r.cols[0]);
    if (it == key_to_id.end())
      throw DataError(DataErrorKind::DanglingEndpoint,
                      "features for unknown node '" + r.cols[0] + "'", features_path.string(),
                      r.line);
    if (feats[it->second])
      throw DataError(DataErrorKind::DuplicateNode,
                      "duplicate features for '" + r.cols[0] + "'", features_path.string(),
                      r.line);
    feats[it->second] = std::make_pair(parse_vector(r.cols[1], features_path, r.line), r.line);
  }

  // A type's dimension is fixed by its first node (in node order).
  std::map<std::string, std::size_t> dims;
  for (NodeId v = 0; v < feats.size(); ++v) {
    if (!feats[v]) {
      const auto& key = node_rows[v].cols[0];
      throw DataError(DataErrorKind::MissingFeature, "no features for node '" + key + "'",
                      features_path.string());
    }
    auto [it, inserted] = dims.emplace(type_of_node[v], feats[v]->first.size());
    if (!inserted && it->second != feats[v]->first.size())
      throw DataError(DataErrorKind::FeatureDimension,
                      "node '" + node_rows[v].cols[0] + "' has " +
                          std::to_string(feats[v]->first.size()) + " features, type '" +
                          type_of_node[v] + "' expects " + std::to_string(it->second),
                      features_path.string(), feats[v]->second);
  }

  HeteroGraph::Builder b;
  b.set_name(name);
  b.set_num_classes(q);
  std::map<std::string, NodeTypeId> type_ids;
  for (const auto& t : type_order) type_ids[t] = b.add_node_type(t, dims.at(t));
  for (NodeId v = 0; v < feats.size(); ++v)
    b.add_node(node_rows[v].cols[0], type_ids.at(type_of_node[v]), std::move(feats[v]->first));

  const std::string target = meta["target_type"].get<std::string>();
  if (!type_ids.count(target))
    throw DataError(DataErrorKind::UnknownName, "target_type '" + target + "' has no nodes",
                    meta_path.string());
  b.set_target_type(type_ids.at(target));

  std::map<std::string, EdgeTypeId> etype_ids;
  std::set<std::tuple<NodeId, NodeId, EdgeTypeId>> seen_rows;
  for (const Row& r : edge_rows) {
    NodeId ends[2];
    for (int k = 0; k < 2; ++k) {
      auto it = key_to_id.find(r.cols[k]);
      if (it == key_to_id.end())
        throw DataError(DataErrorKind::DanglingEndpoint,
                        "edge references unknown node '" + r.cols[k] + "'", edges_path.string(),
                        r.line);
      ends[k] = it->second;
    }
    auto et = etype_ids.find(r.cols[2]);
    if (et == etype_ids.end()) et = etype_ids.emplace(r.cols[2], b.add_edge_type(r.cols[2])).first;
    if (!seen_rows.emplace(ends[0], ends[1], et->second).second)
      throw DataError(DataErrorKind::DuplicateEdge,
                      "duplicate edge " + r.cols[0] + " -> " + r.cols[1] + " (" + r.cols[2] + ")",
                      edges_path.string(), r.line);
    try {
      b.add_edge(ends[0], ends[1], et->second);
    } catch (const DataError& e) {
      throw DataError(e.kind(), e.what(), edges_path.string(), r.line);
    }
  }

  std::vector<bool> labeled(key_to_id.size(), false);
  for (const Row& r : label_rows) {
    auto it = key_to_id.find(r.cols[0]);
    if (it == key_to_id.end())
      throw DataError(DataErrorKind::DanglingEndpoint,
                      "label for unknown node '" + r.cols[0] + "'", labels_path.string(), r.line);
    const int y = parse_int(r.cols[1], labels_path, r.line);
    if (y < 0 || y >= q)
      throw DataError(DataErrorKind::LabelOutOfRange,
                      "label " + std::to_string(y) + " outside [0," + std::to_string(q) + ")",
                      labels_path.string(), r.line);
    if (labeled[it->second])
      throw DataError(DataErrorKind::DuplicateNode, "duplicate label for '" + r.cols[0] + "'",
                      labels_path.string(), r.line);
    labeled[it->second] = true;
    b.set_label(it->second, y);
  }
  return std::move(b).build();
}

void save_graph(const HeteroGraph& g, const fs::path& dir) {
  fs::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw DataError(DataErrorKind::MissingFile, "cannot write", (dir / name).string());
    return out;
  };
  {
    auto out = open("nodes.tsv");
    for (NodeId v = 0; v < g.num_nodes(); ++v)
      out << g.node_key(v) << '\t' << g.type_name(g.node_type(v)) << '\n';
  }
  {
    auto out = open("features.tsv");
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      out << g.node_key(v) << '\t';
      auto f = g.features(v);
      for (std::size_t i = 0; i < f.size(); ++i) out << (i ? "," : "") << format_double(f[i]);
      out << '\n';
    }
  }
  {
    auto out = open("edges.tsv");
    for (const Edge& e : g.edges())
      out << g.node_key(e.src) << '\t' << g.node_key(e.dst) << '\t' << g.etype_name(e.etype)
          << '\n';
  }
  {
    auto out = open("labels.tsv");
    for (NodeId v = 0; v < g.num_nodes(); ++v)
      if (g.label(v) != kUnlabeled) out << g.node_key(v) << '\t' << g.label(v) << '\n';
  }
  {
    auto out = open("meta.json");
    json meta{{"q", g.num_classes()},
              {"target_type", g.num_node_types() ? g.type_name(g.target_type()) : ""}};
    if (!g.name().empty()) meta["name"] = g.name();
    out << meta.dump(2) << '\n';
  }
}

}  // namespace sphnn
