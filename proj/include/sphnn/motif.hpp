#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sphnn/hin.hpp"

namespace sphnn {

inline constexpr std::size_t kMinMotifArity = 2;
inline constexpr std::size_t kMaxMotifArity = 6;
inline constexpr std::size_t kDefaultMaxInstances = 100000;

struct MotifRole {
  std::string name;
  NodeTypeId type;
};

struct PatternEdge {
  std::size_t a;  // role indices
  std::size_t b;
  EdgeTypeId etype;
};

/// Typed pattern graph over a fixed set of roles, resolved against one graph's
/// type tables.
struct MotifPattern {
  std::string id;
  std::vector<MotifRole> roles;
  std::vector<PatternEdge> edges;
  std::string source_json;  // normalized spec, kept for checkpoints

  std::size_t arity() const noexcept { return roles.size(); }
};

/// A matched assignment of graph nodes to the pattern's roles. `assignment` is
/// the canonical (lexicographically smallest) automorphic image.
struct MotifInstance {
  std::vector<NodeId> assignment;
  std::vector<NodeId> node_set;  // sorted

  friend bool operator==(const MotifInstance&, const MotifInstance&) = default;
};

/// Parses a motif spec (`{"id","roles":[{name,type}],"edges":[[r1,r2,etype]]}`)
/// and resolves type names against `g`.
MotifPattern parse_motif(std::string_view json_text, const HeteroGraph& g);

/// All role permutations that preserve role types and the typed edge set.
/// Always contains the identity first.
std::vector<std::vector<std::size_t>> pattern_automorphisms(const MotifPattern& p);

/// Lexicographically smallest image of `assignment` under the automorphisms.
std::vector<NodeId> canonical_assignment(
    const std::vector<NodeId>& assignment,
    const std::vector<std::vector<std::size_t>>& automorphisms);

/// True when `assignment` respects role types, pattern edges and injectivity.
bool is_valid_instance(const HeteroGraph& g, const MotifPattern& p,
                       const std::vector<NodeId>& assignment);

/// Enumerates all instances of `p` on `g`, deduplicated up to pattern
/// automorphism, sorted by canonical assignment.
std::vector<MotifInstance> enumerate_instances(const HeteroGraph& g, const MotifPattern& p);

/// Uniform sample without replacement of at most `max_count` instances,
/// deterministic in `seed`. Preserves the input order of the kept instances.
std::vector<MotifInstance> sample_instances(const std::vector<MotifInstance>& instances,
                                            std::size_t max_count, std::uint64_t seed);

}  // namespace sphnn
