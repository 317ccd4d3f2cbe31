#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "sphnn/hin.hpp"
#include "sphnn/motif.hpp"
#include "sphnn/numeric.hpp"

namespace sphnn {

/// Hypergraph over all N nodes of a graph, one hyperedge per motif instance.
/// The incidence structure is stored both per edge (members, in role order)
/// and per node (incident edges with the node's position inside the edge).
class Hypergraph {
 public:
  struct Incidence {
    std::size_t edge;
    std::size_t slot;  // position of the node inside edge's member list
  };

  Hypergraph() = default;
  /// Throws EmptyHypergraph when `edges` is empty and DataError for invalid
  /// members (out of range, repeated, or fewer than two).
  Hypergraph(std::string motif_id, std::size_t n_nodes,
             std::vector<std::vector<NodeId>> edges, std::vector<double> weights = {});

  const std::string& motif_id() const noexcept { return motif_id_; }
  std::size_t num_nodes() const noexcept { return n_nodes_; }
  std::size_t num_edges() const noexcept { return members_.size(); }
  /// Sum of hyperedge sizes (number of ones in H).
  std::size_t num_incidences() const noexcept { return n_incidences_; }

  const std::vector<NodeId>& members(std::size_t e) const { return members_.at(e); }
  /// Index of (e, slot 0) in edge-major flat per-incidence storage.
  std::size_t incidence_offset(std::size_t e) const { return offsets_.at(e); }
  const std::vector<Incidence>& incident_edges(NodeId v) const { return node_edges_.at(v); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double weight(std::size_t e) const { return weights_.at(e); }

  /// Common member count when every hyperedge has the same size, else 0.
  std::size_t fixed_arity() const noexcept { return fixed_arity_; }

  /// Dense N × |E| incidence matrix H (debugging and oracles).
  Matrix incidence_matrix() const;

 private:
  std::string motif_id_;
  std::size_t n_nodes_ = 0;
  std::vector<std::vector<NodeId>> members_;
  std::vector<std::vector<Incidence>> node_edges_;
  std::vector<double> weights_;
  std::vector<std::size_t> offsets_;
  std::size_t n_incidences_ = 0;
  std::size_t fixed_arity_ = 0;
};

/// One hyperedge per instance in canonical order, unit weights, N = g's node
/// count. Throws EmptyHypergraph for an empty instance list.
Hypergraph build_hypergraph(const HeteroGraph& g, const std::string& motif_id,
                            const std::vector<MotifInstance>& instances);

/// One 2-node hyperedge per graph edge: the pairwise reduction used by the
/// no-hypergraph ablation.
Hypergraph pairwise_hypergraph(const HeteroGraph& g);

/// d(v) = Σ_e w_e h(v,e).
std::vector<double> node_degrees(const Hypergraph& hg);
/// δ(e) = Σ_v h(v,e).
std::vector<double> edge_degrees(const Hypergraph& hg);
/// A = H W Hᵀ (dense N × N).
Matrix adjacency(const Hypergraph& hg);

/// `{ "motif", "n_nodes", "edges", "weights" }` debug export.
nlohmann::json hypergraph_to_json(const Hypergraph& hg);

}  // namespace sphnn
