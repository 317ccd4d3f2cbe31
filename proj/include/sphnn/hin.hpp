#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sphnn/numeric.hpp"

namespace sphnn {

using NodeId = std::uint32_t;
using NodeTypeId = std::uint32_t;
using EdgeTypeId = std::uint32_t;

/// Label value for nodes without a class.
inline constexpr int kUnlabeled = -1;

struct Edge {
  NodeId src;  // src < dst after normalization
  NodeId dst;
  EdgeTypeId etype;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

struct Neighbor {
  NodeId node;
  EdgeTypeId etype;

  friend auto operator<=>(const Neighbor&, const Neighbor&) = default;
};

/// Heterogeneous information network: typed nodes with per-type features,
/// undirected typed edges and optional class labels. Immutable once built.
class HeteroGraph {
 public:
  /// Incremental construction with validation. Node ids are assigned densely
  /// in insertion order.
  class Builder {
   public:
    NodeTypeId add_node_type(std::string name, std::size_t feature_dim);
    EdgeTypeId add_edge_type(std::string name);
    NodeId add_node(std::string key, NodeTypeId type, std::vector<double> features);
    /// Adds an undirected edge. Throws on self-loops and invalid endpoints.
    /// Returns false when the undirected edge already exists, so directed
    /// input listing both orientations is symmetrized.
    bool add_edge(NodeId a, NodeId b, EdgeTypeId etype);
    void set_label(NodeId v, int label);
    void set_num_classes(int q) { q_ = q; }
    void set_target_type(NodeTypeId t) { target_type_ = t; }
    void set_name(std::string name) { name_ = std::move(name); }

    std::size_t num_nodes() const { return node_types_.size(); }
    HeteroGraph build() &&;

   private:
    friend class HeteroGraph;
    std::vector<std::string> type_names_;
    std::vector<std::size_t> feature_dims_;
    std::vector<std::string> etype_names_;
    std::vector<std::string> node_keys_;
    std::vector<NodeTypeId> node_types_;
    std::vector<std::vector<double>> features_;
    std::vector<Edge> edges_;
    std::set<Edge> edge_set_;
    std::vector<int> labels_;
    int q_ = 0;
    NodeTypeId target_type_ = 0;
    std::string name_;
  };

  HeteroGraph() = default;

  std::size_t num_nodes() const noexcept { return node_types_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t num_node_types() const noexcept { return type_names_.size(); }
  std::size_t num_edge_types() const noexcept { return etype_names_.size(); }
  int num_classes() const noexcept { return q_; }
  NodeTypeId target_type() const noexcept { return target_type_; }
  const std::string& name() const noexcept { return name_; }

  NodeTypeId node_type(NodeId v) const;
  const std::string& node_key(NodeId v) const;
  const std::string& type_name(NodeTypeId t) const { return type_names_.at(t); }
  const std::string& etype_name(EdgeTypeId t) const { return etype_names_.at(t); }
  std::optional<NodeTypeId> find_type(std::string_view name) const;
  std::optional<EdgeTypeId> find_etype(std::string_view name) const;
  std::optional<NodeId> find_node(std::string_view key) const;

  std::size_t feature_dim(NodeTypeId t) const { return feature_dims_.at(t); }
  std::span<const double> features(NodeId v) const;
  /// Nodes of type t in NodeId order.
  const std::vector<NodeId>& nodes_of_type(NodeTypeId t) const { return by_type_.at(t); }
  /// Feature matrix of type t, rows aligned with nodes_of_type(t).
  const Matrix& type_features(NodeTypeId t) const { return type_features_.at(t); }

  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// All incident (neighbor, etype) pairs of v, sorted.
  std::span<const Neighbor> incident(NodeId v) const;
  bool has_edge(NodeId a, NodeId b, EdgeTypeId etype) const;
  /// Number of incident edges of the given type.
  std::size_t typed_degree(NodeId v, EdgeTypeId etype) const;

  int label(NodeId v) const;
  const std::vector<int>& labels() const noexcept { return labels_; }

  /// One-line "N=.. edges=.. q=.." summary.
  std::string summary() const;

 private:
  std::vector<std::string> type_names_;
  std::vector<std::size_t> feature_dims_;
  std::vector<std::string> etype_names_;
  std::vector<std::string> node_keys_;
  std::vector<NodeTypeId> node_types_;
  std::vector<std::size_t> type_row_;  // row of v inside its type's feature matrix
  std::vector<Matrix> type_features_;
  std::vector<std::vector<NodeId>> by_type_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> adj_offsets_;
  std::vector<Neighbor> adj_;
  std::vector<int> labels_;
  int q_ = 0;
  NodeTypeId target_type_ = 0;
  std::string name_;
};

/// Sorted, deduplicated neighbors of v, optionally restricted to one edge type.
std::vector<NodeId> typed_neighbors(const HeteroGraph& g, NodeId v,
                                    std::optional<EdgeTypeId> etype = std::nullopt);

/// Loads a dataset directory (nodes.tsv, features.tsv, edges.tsv, labels.tsv,
/// meta.json). Throws DataError with file and line context.
HeteroGraph load_graph(const std::filesystem::path& dir);

/// Writes `g` in the dataset directory format. Features are printed with
/// round-trip precision.
void save_graph(const HeteroGraph& g, const std::filesystem::path& dir);

/// Class counts of the published benchmark datasets, used to validate a
/// meta.json that declares one of these names.
std::optional<int> known_dataset_classes(std::string_view name);

}  // namespace sphnn
