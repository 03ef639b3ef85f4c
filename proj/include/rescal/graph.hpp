#pragma once

// Single-relation directed graphs: generation, transitive closure, the
// E / E^c / E^rev evaluation partitions, sampling and edge-list I/O.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rescal {

using EntityId = std::uint32_t;

/// Ordered pair (subject, object). Ordering is row-major, which is the
/// canonical order of every edge set in this library.
struct Edge {
  EntityId sub = 0;
  EntityId obj = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable directed graph over vertices [0, V). Edges are kept sorted and
/// unique; self-loops and out-of-range ids are rejected on construction.
class DirectedGraph {
 public:
  DirectedGraph(std::size_t num_vertices, std::vector<Edge> edges);

  std::size_t num_vertices() const noexcept { return num_vertices_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  /// Sorted out-neighbours of `v`.
  std::span<const EntityId> successors(EntityId v) const;
  bool contains(Edge e) const;

  friend bool operator==(const DirectedGraph&, const DirectedGraph&) = default;

 private:
  std::size_t num_vertices_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> row_offsets_;  // CSR offsets into targets_
  std::vector<EntityId> targets_;
};

/// Complete balanced binary tree with 2^depth - 1 vertices in level order
/// (root 0, children of v are 2v+1 and 2v+2), edges parent -> child.
DirectedGraph build_complete_binary_tree(std::size_t depth);

/// Number of edges in the transitive closure of a depth-`depth` complete
/// binary tree: sum over levels k of k * 2^k.
std::size_t closed_tree_edge_count(std::size_t depth);

bool is_acyclic(const DirectedGraph& g);

/// All (u, w) joined by a directed path of length >= 1. Throws InvalidInput
/// when `g` has a cycle. `threads` > 1 splits the per-vertex traversals; the
/// result does not depend on the thread count.
DirectedGraph transitive_closure(const DirectedGraph& g, unsigned threads = 1);

/// E, E^c and E^rev for a transitively closed graph.
///
/// E^c is every ordered pair not in E, self-pairs included, so
/// |E| + |E^c| = V^2. It is never materialised unless asked for: pairs are
/// addressed by their rank in row-major order, which keeps depth-13 trees
/// (67M complement pairs) cheap.
class EdgePartitions {
 public:
  explicit EdgePartitions(DirectedGraph closed);

  std::size_t num_vertices() const noexcept { return graph_.num_vertices(); }
  const DirectedGraph& graph() const noexcept { return graph_; }

  std::span<const Edge> positives() const noexcept { return graph_.edges(); }
  std::span<const Edge> reversed() const noexcept { return reversed_; }

  std::size_t complement_size() const noexcept;
  bool in_complement(Edge e) const;

  /// The k-th complement pair in row-major order, k < complement_size().
  Edge complement_at(std::size_t k) const;
  /// Complement pairs for ascending ranks, in one sweep.
  std::vector<Edge> complement_at(std::span<const std::size_t> sorted_ranks) const;
  std::vector<Edge> materialize_complement() const;

  /// Number of complement pairs in rows [0, v).
  std::size_t complement_row_offset(EntityId v) const { return complement_offsets_.at(v); }

 private:
  DirectedGraph graph_;
  std::vector<Edge> reversed_;
  std::vector<std::size_t> complement_offsets_;  // size V + 1
};

EdgePartitions edge_partitions(const DirectedGraph& closed);

/// Uniform n-subset of [0, population) without replacement, sorted.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

/// Uniform n-subset of `edges` without replacement, returned in row-major
/// order. Deterministic for a fixed seed. Throws std::invalid_argument when
/// n exceeds the set size.
std::vector<Edge> sample_edges(std::span<const Edge> edges, std::size_t n, std::uint64_t seed);

/// Same draw as sample_edges(p.materialize_complement(), n, seed) without
/// building the complement.
std::vector<Edge> sample_complement(const EdgePartitions& p, std::size_t n, std::uint64_t seed);

/// Bijection between external entity names and dense ids.
class Vocab {
 public:
  /// Id of `name`, assigning the next free id on first sight.
  EntityId intern(std::string_view name);
  std::optional<EntityId> find(std::string_view name) const;
  const std::string& name(EntityId id) const { return names_.at(id); }
  std::size_t size() const noexcept { return names_.size(); }

  /// Names "0", "1", ... for graphs without external names.
  static Vocab numeric(std::size_t n);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, EntityId> ids_;
};

struct IngestedGraph {
  DirectedGraph graph;
  Vocab vocab;
  std::size_t duplicate_lines = 0;
};

/// Reads "subject<TAB>object" lines. Names get ids in order of first
/// appearance; repeated lines are dropped and counted. Empty lines are
/// skipped. Throws ParseError on malformed lines and InvalidInput on
/// self-loops or an edgeless file.
IngestedGraph read_edge_list(std::istream& in);
IngestedGraph ingest_edge_list(const std::filesystem::path& path);

/// Writes edges in row-major id order using `vocab` names.
void write_edge_list(std::ostream& out, const DirectedGraph& g, const Vocab& vocab);
void export_edge_list(const std::filesystem::path& path, const DirectedGraph& g, const Vocab& vocab);

}  // namespace rescal
