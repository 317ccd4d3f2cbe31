#include "sphnn/hypergraph.hpp"

#include <algorithm>

#include "sphnn/error.hpp"

namespace sphnn {

Hypergraph::Hypergraph(std::string motif_id, std::size_t n_nodes,
                       std::vector<std::vector<NodeId>> edges, std::vector<double> weights)
    : motif_id_(std::move(motif_id)),
      n_nodes_(n_nodes),
      members_(std::move(edges)),
      node_edges_(n_nodes),
      weights_(std::move(weights)) {
  if (members_.empty()) throw EmptyHypergraph(motif_id_);
  if (weights_.empty()) weights_.assign(members_.size(), 1.0);
  if (weights_.size() != members_.size())
    throw DataError(DataErrorKind::InvalidArgument, "hyperedge weight count mismatch");

  fixed_arity_ = members_.front().size();
  for (std::size_t e = 0; e < members_.size(); ++e) {
    const auto& m = members_[e];
    if (m.size() < 2)
      throw DataError(DataErrorKind::InvalidArgument,
                      "hyperedge " + std::to_string(e) + " has fewer than 2 members");
    if (!(weights_[e] > 0.0))
      throw DataError(DataErrorKind::InvalidArgument, "hyperedge weights must be positive");
    if (m.size() != fixed_arity_) fixed_arity_ = 0;
    std::vector<NodeId> sorted = m;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw DataError(DataErrorKind::InvalidArgument,
                      "hyperedge " + std::to_string(e) + " repeats a node");
    for (std::size_t slot = 0; slot < m.size(); ++slot) {
      if (m[slot] >= n_nodes_)
        throw DataError(DataErrorKind::DanglingEndpoint,
                        "hyperedge member " + std::to_string(m[slot]) + " out of range");
      node_edges_[m[slot]].push_back({e, slot});
    }
    offsets_.push_back(n_incidences_);
    n_incidences_ += m.size();
  }
}

Matrix Hypergraph::incidence_matrix() const {
  Matrix h(n_nodes_, members_.size());
  for (std::size_t e = 0; e < members_.size(); ++e)
    for (NodeId v : members_[e]) h(v, e) = 1.0;
  return h;
}

Hypergraph build_hypergraph(const HeteroGraph& g, const std::string& motif_id,
                            const std::vector<MotifInstance>& instances) {
  std::vector<std::vector<NodeId>> edges;
  edges.reserve(instances.size());
  for (const auto& inst : instances) edges.push_back(inst.assignment);
  return Hypergraph(motif_id, g.num_nodes(), std::move(edges));
}

Hypergraph pairwise_hypergraph(const HeteroGraph& g) {
  std::vector<std::vector<NodeId>> edges;
  edges.reserve(g.num_edges());
  for (const Edge& e : g.edges()) edges.push_back({e.src, e.dst});
  return Hypergraph("pairwise", g.num_nodes(), std::move(edges));
}

std::vector<double> node_degrees(const Hypergraph& hg) {
  std::vector<double> d(hg.num_nodes(), 0.0);
  for (NodeId v = 0; v < hg.num_nodes(); ++v)
    for (const auto& inc : hg.incident_edges(v)) d[v] += hg.weight(inc.edge);
  return d;
}

std::vector<double> edge_degrees(const Hypergraph& hg) {
  std::vector<double> delta(hg.num_edges());
  for (std::size_t e = 0; e < hg.num_edges(); ++e)
    delta[e] = static_cast<double>(hg.members(e).size());
  return delta;
}

Matrix adjacency(const Hypergraph& hg) {
  Matrix a(hg.num_nodes(), hg.num_nodes());
  for (std::size_t e = 0; e < hg.num_edges(); ++e) {
    const auto& m = hg.members(e);
    const double w = hg.weight(e);
    for (NodeId u : m)
      for (NodeId v : m) a(u, v) += w;
  }
  return a;
}

nlohmann::json hypergraph_to_json(const Hypergraph& hg) {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t e = 0; e < hg.num_edges(); ++e) edges.push_back(hg.members(e));
  return {{"motif", hg.motif_id()},
          {"n_nodes", hg.num_nodes()},
          {"edges", std::move(edges)},
          {"weights", hg.weights()}};
}

}  // namespace sphnn
