#include "sphnn/motif.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <json.hpp>

#include "sphnn/error.hpp"

namespace sphnn {

using json = nlohmann::json;

namespace {

[[noreturn]] void pattern_error(const std::string& id, const std::string& msg) {
  throw DataError(DataErrorKind::InvalidPattern, "motif '" + id + "': " + msg);
}

bool pattern_connected(const MotifPattern& p) {
  const std::size_t m = p.arity();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : p.edges) parent[find(e.a)] = find(e.b);
  for (std::size_t r = 1; r < m; ++r)
    if (find(r) != find(0)) return false;
  return true;
}

struct EdgeKey {
  std::size_t a, b;
  EdgeTypeId etype;
  friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

std::vector<EdgeKey> normalized_edges(const MotifPattern& p,
                                      const std::vector<std::size_t>& perm) {
  std::vector<EdgeKey> out;
  for (const auto& e : p.edges) {
    const std::size_t a = perm[e.a], b = perm[e.b];
    out.push_back({std::min(a, b), std::max(a, b), e.etype});
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

MotifPattern parse_motif(std::string_view json_text, const HeteroGraph& g) {
  json spec;
  try {
    spec = json::parse(json_text);
  } catch (const json::exception& e) {
    throw DataError(DataErrorKind::InvalidPattern, std::string("motif spec: ") + e.what());
  }
  if (!spec.is_object() || !spec.contains("id") || !spec["id"].is_string() ||
      !spec.contains("roles") || !spec["roles"].is_array() || !spec.contains("edges") ||
      !spec["edges"].is_array())
    throw DataError(DataErrorKind::InvalidPattern,
                    "motif spec needs string 'id', array 'roles' and array 'edges'");

  MotifPattern p;
  p.id = spec["id"].get<std::string>();
  for (const auto& r : spec["roles"]) {
    if (!r.is_object() || !r.contains("name") || !r.contains("type") || !r["name"].is_string() ||
        !r["type"].is_string())
      pattern_error(p.id, "each role needs string 'name' and 'type'");
    const auto name = r["name"].get<std::string>();
    const auto type_name = r["type"].get<std::string>();
    for (const auto& existing : p.roles)
      if (existing.name == name) pattern_error(p.id, "duplicate role '" + name + "'");
    auto t = g.find_type(type_name);
    if (!t)
      throw DataError(DataErrorKind::UnknownName,
                      "motif '" + p.id + "': unknown node type '" + type_name + "'");
    p.roles.push_back({name, *t});
  }
  if (p.arity() < kMinMotifArity || p.arity() > kMaxMotifArity)
    pattern_error(p.id, "arity " + std::to_string(p.arity()) + " outside [" +
                            std::to_string(kMinMotifArity) + "," +
                            std::to_string(kMaxMotifArity) + "]");

  auto role_index = [&](const json& v) {
    if (!v.is_string()) pattern_error(p.id, "edge endpoints must be role names");
    const auto name = v.get<std::string>();
    for (std::size_t i = 0; i < p.roles.size(); ++i)
      if (p.roles[i].name == name) return i;
    pattern_error(p.id, "edge references undeclared role '" + name + "'");
  };
  for (const auto& e : spec["edges"]) {
    if (!e.is_array() || e.size() != 3 || !e[2].is_string())
      pattern_error(p.id, "each edge must be [role, role, edge_type]");
    const std::size_t a = role_index(e[0]);
    const std::size_t b = role_index(e[1]);
    if (a == b) pattern_error(p.id, "edge connects role '" + p.roles[a].name + "' to itself");
    const auto etype_name = e[2].get<std::string>();
    auto et = g.find_etype(etype_name);
    if (!et)
      throw DataError(DataErrorKind::UnknownName,
                      "motif '" + p.id + "': unknown edge type '" + etype_name + "'");
    for (const auto& x : p.edges)
      if (std::min(x.a, x.b) == std::min(a, b) && std::max(x.a, x.b) == std::max(a, b) &&
          x.etype == *et)
        pattern_error(p.id, "duplicate edge");
    p.edges.push_back({a, b, *et});
  }
  if (!pattern_connected(p)) pattern_error(p.id, "pattern graph is disconnected");

  json normalized{{"id", p.id}, {"roles", json::array()}, {"edges", json::array()}};
  for (const auto& r : p.roles)
    normalized["roles"].push_back({{"name", r.name}, {"type", g.type_name(r.type)}});
  for (const auto& e : p.edges)
    normalized["edges"].push_back(
        {p.roles[e.a].name, p.roles[e.b].name, g.etype_name(e.etype)});
  p.source_json = normalized.dump();
  return p;
}

std::vector<std::vector<std::size_t>> pattern_automorphisms(const MotifPattern& p) {
  const std::size_t m = p.arity();
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  const auto reference = normalized_edges(p, perm);
  std::vector<std::vector<std::size_t>> out;
  do {
    bool types_ok = true;
    for (std::size_t r = 0; r < m && types_ok; ++r)
      types_ok = p.roles[perm[r]].type == p.roles[r].type;
    if (types_ok && normalized_edges(p, perm) == reference) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

std::vector<NodeId> canonical_assignment(
    const std::vector<NodeId>& assignment,
    const std::vector<std::vector<std::size_t>>& automorphisms) {
  std::vector<NodeId> best = assignment;
  std::vector<NodeId> image(assignment.size());
  for (const auto& perm : automorphisms) {
    for (std::size_t r = 0; r < perm.size(); ++r) image[r] = assignment[perm[r]];
    if (image < best) best = image;
  }
  return best;
}

bool is_valid_instance(const HeteroGraph& g, const MotifPattern& p,
                       const std::vector<NodeId>& assignment) {
  if (assignment.size() != p.arity()) return false;
  for (std::size_t r = 0; r < assignment.size(); ++r) {
    if (assignment[r] >= g.num_nodes() || g.node_type(assignment[r]) != p.roles[r].type)
      return false;
    for (std::size_t s = 0; s < r; ++s)
      if (assignment[s] == assignment[r]) return false;
  }
  for (const auto& e : p.edges)
    if (!g.has_edge(assignment[e.a], assignment[e.b], e.etype)) return false;
  return true;
}

namespace {

/// Backtracking matcher. Roles are visited in BFS order from the anchor role so
/// that every non-anchor role has an already-placed parent whose typed
/// neighborhood supplies its candidates.
class Matcher {
 public:
  Matcher(const HeteroGraph& g, const MotifPattern& p)
      : g_(g), p_(p), assignment_(p.arity()) {
    const std::size_t m = p.arity();
    std::size_t anchor = 0;
    for (std::size_t r = 1; r < m; ++r)
      if (g.nodes_of_type(p.roles[r].type).size() <
          g.nodes_of_type(p.roles[anchor].type).size())
        anchor = r;

    std::vector<bool> placed(m, false);
    order_.push_back(anchor);
    placed[anchor] = true;
    parent_.assign(m, {0, 0});
    for (std::size_t i = 0; i < order_.size(); ++i) {
      const std::size_t r = order_[i];
      for (const auto& e : p.edges) {
        std::size_t other;
        if (e.a == r) other = e.b;
        else if (e.b == r) other = e.a;
        else continue;
        if (placed[other]) continue;
        placed[other] = true;
        parent_[other] = {r, e.etype};
        order_.push_back(other);
      }
    }

    required_degree_.assign(m, std::vector<std::size_t>(g.num_edge_types(), 0));
    for (const auto& e : p.edges) {
      ++required_degree_[e.a][e.etype];
      ++required_degree_[e.b][e.etype];
    }
    position_.assign(m, 0);
    for (std::size_t i = 0; i < m; ++i) position_[order_[i]] = i;
  }

  std::vector<std::vector<NodeId>> run() {
    for (NodeId v : g_.nodes_of_type(p_.roles[order_[0]].type)) {
      if (!degree_ok(order_[0], v)) continue;
      assignment_[order_[0]] = v;
      extend(1);
    }
    return std::move(found_);
  }

 private:
  bool degree_ok(std::size_t role, NodeId v) const {
    const auto& req = required_degree_[role];
    for (EdgeTypeId t = 0; t < req.size(); ++t)
      if (req[t] && g_.typed_degree(v, t) < req[t]) return false;
    return true;
  }

  bool consistent(std::size_t role, NodeId v, std::size_t depth) const {
    if (g_.node_type(v) != p_.roles[role].type) return false;
    for (std::size_t i = 0; i < depth; ++i)
      if (assignment_[order_[i]] == v) return false;
    for (const auto& e : p_.edges) {
      std::size_t other;
      if (e.a == role) other = e.b;
      else if (e.b == role) other = e.a;
      else continue;
      if (position_[other] < depth && !g_.has_edge(v, assignment_[other], e.etype)) return false;
    }
    return degree_ok(role, v);
  }

  void extend(std::size_t depth) {
    if (depth == order_.size()) {
      found_.push_back(assignment_);
      return;
    }
    const std::size_t role = order_[depth];
    const auto [parent_role, etype] = parent_[role];
    const NodeId anchor = assignment_[parent_role];
    for (const Neighbor& nb : g_.incident(anchor)) {
      if (nb.etype != etype) continue;
      if (!consistent(role, nb.node, depth)) continue;
      assignment_[role] = nb.node;
      extend(depth + 1);
    }
  }

  const HeteroGraph& g_;
  const MotifPattern& p_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> position_;
  std::vector<std::pair<std::size_t, EdgeTypeId>> parent_;
  std::vector<std::vector<std::size_t>> required_degree_;
  std::vector<NodeId> assignment_;
  std::vector<std::vector<NodeId>> found_;
};

}  // namespace

std::vector<MotifInstance> enumerate_instances(const HeteroGraph& g, const MotifPattern& p) {
  for (const auto& r : p.roles)
    if (r.type >= g.num_node_types())
      throw DataError(DataErrorKind::InvalidPattern, "motif '" + p.id + "': role type not in graph");
  for (const auto& e : p.edges)
    if (e.etype >= g.num_edge_types())
      throw DataError(DataErrorKind::InvalidPattern,
                      "motif '" + p.id + "': edge type not in graph");

  const auto autos = pattern_automorphisms(p);
  auto raw = Matcher(g, p).run();
  for (auto& a : raw) a = canonical_assignment(a, autos);
  std::sort(raw.begin(), raw.end());
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());

  std::vector<MotifInstance> out;
  out.reserve(raw.size());
  for (auto& a : raw) {
    MotifInstance inst;
    inst.node_set = a;
    std::sort(inst.node_set.begin(), inst.node_set.end());
    inst.assignment = std::move(a);
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<MotifInstance> sample_instances(const std::vector<MotifInstance>& instances,
                                            std::size_t max_count, std::uint64_t seed) {
  if (max_count == 0)
    throw DataError(DataErrorKind::InvalidArgument, "max_count must be at least 1");
  if (instances.size() <= max_count) return instances;
  std::vector<std::size_t> idx(instances.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < max_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(max_count);
  std::sort(idx.begin(), idx.end());
  std::vector<MotifInstance> out;
  out.reserve(max_count);
  for (std::size_t i : idx) out.push_back(instances[i]);
  return out;
}

}  // namespace sphnn
