#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mutforest/lattice_pmf.hpp"

namespace mutforest {

using VertexId = std::int64_t;
inline constexpr VertexId kNoParent = -1;

/// Ordered plane forest with vertex types in [0, d) and optional edge
/// lengths (the exponential lifetime of each vertex). Vertices use contiguous
/// ids; children are stored in CSR form. Immutable once built.
class TypedForest {
 public:
  TypedForest() = default;

  int dim() const { return dim_; }
  std::size_t size() const { return types_.size(); }
  bool empty() const { return types_.empty(); }

  int type(VertexId v) const { return types_[static_cast<std::size_t>(v)]; }
  VertexId parent(VertexId v) const { return parents_[static_cast<std::size_t>(v)]; }
  std::span<const VertexId> children(VertexId v) const {
    const auto b = child_offsets_[static_cast<std::size_t>(v)];
    const auto e = child_offsets_[static_cast<std::size_t>(v) + 1];
    return {child_list_.data() + b, static_cast<std::size_t>(e - b)};
  }
  std::span<const VertexId> roots() const { return roots_; }
  bool has_edge_lengths() const { return !edge_lengths_.empty(); }
  double edge_length(VertexId v) const { return edge_lengths_.at(static_cast<std::size_t>(v)); }

  /// p_j(v): number of type-j children of v.
  LatticeVector child_counts(VertexId v) const;

  /// Returns a copy carrying the given per-vertex edge lengths.
  TypedForest with_edge_lengths(std::vector<double> lengths) const;

  friend bool operator==(const TypedForest&, const TypedForest&) = default;

 private:
  friend class ForestBuilder;
  int dim_ = 0;
  std::vector<int> types_;
  std::vector<VertexId> parents_;
  std::vector<std::int64_t> child_offsets_{0};
  std::vector<VertexId> child_list_;
  std::vector<VertexId> roots_;
  std::vector<double> edge_lengths_;
};

/// Incremental construction. Vertices are added with their parent; sibling
/// order is insertion order, except that finish() stably sorts each child
/// list by type so the plane-order convention (nondecreasing types left to
/// right) holds. Roots keep insertion order.
class ForestBuilder {
 public:
  explicit ForestBuilder(int dim);
  void reserve(std::size_t n);
  VertexId add_root(int type, std::optional<double> edge_length = {});
  VertexId add_child(VertexId parent, int type, std::optional<double> edge_length = {});
  std::size_t size() const { return types_.size(); }
  TypedForest finish() &&;

 private:
  int dim_;
  std::vector<int> types_;
  std::vector<VertexId> parents_;
  std::vector<VertexId> roots_;
  std::vector<double> lengths_;
  bool any_length_ = false;
  bool all_length_ = true;
};

/// Vertices of tree 1 level by level, then tree 2, and so on; left to right
/// within a level.
std::vector<VertexId> bfs_label(const TypedForest& f);

/// Type-`type` clusters (maximal monotype connected subtrees), ranked by the
/// breadth-first rank of their roots. Each cluster lists its vertices in
/// breadth-first order.
std::vector<std::vector<VertexId>> clusters(const TypedForest& f, int type);

/// Collapses every cluster to one vertex, keeping inter-cluster edges.
TypedForest mutation_forest(const TypedForest& f);

/// Coding chains x^(i): chain i visits the subforest of type i in its own
/// breadth-first order; increment of coordinate j is p_j(u), and p_i(u) - 1
/// for coordinate i.
struct CodingChains {
  int dim = 0;
  /// values[i] holds x^(i)_0 = 0, x^(i)_1, ..., x^(i)_{n_i}, flattened with stride dim.
  std::vector<std::vector<std::int64_t>> values;

  std::int64_t length(int type) const {
    return static_cast<std::int64_t>(values[static_cast<std::size_t>(type)].size() / static_cast<std::size_t>(dim)) - 1;
  }
  std::int64_t value(int chain, std::int64_t step, int coord) const {
    return values[static_cast<std::size_t>(chain)][static_cast<std::size_t>(step * dim + coord)];
  }
  std::int64_t final_value(int chain, int coord) const { return value(chain, length(chain), coord); }
};

CodingChains encode(const TypedForest& f);

struct MutationCensus {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> total;        // N_i
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> mutations;    // M_i
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> cross;  // M_ij, zero diagonal
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> roots;        // x_i
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> self_births;  // type-i children of type-i parents

  static MutationCensus zeros(int dim);
  int dim() const { return static_cast<int>(total.size()); }
  bool operator==(const MutationCensus& o) const;
};

MutationCensus census(const TypedForest& f);

/// Newline-delimited "id parent type [edge_length]" records, types written
/// 1-based, roots with parent -1, ids in increasing order.
void write_forest(std::ostream& os, const TypedForest& f);
TypedForest read_forest(std::istream& is, int dim);

}  // namespace mutforest
