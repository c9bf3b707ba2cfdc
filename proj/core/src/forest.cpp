#include "mutforest/forest.hpp"

#include <algorithm>
#include <deque>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mutforest {

LatticeVector TypedForest::child_counts(VertexId v) const {
  LatticeVector k(static_cast<std::size_t>(dim_), 0);
  for (VertexId c : children(v)) ++k[static_cast<std::size_t>(type(c))];
  return k;
}

TypedForest TypedForest::with_edge_lengths(std::vector<double> lengths) const {
  if (lengths.size() != size()) throw std::invalid_argument("edge length count does not match vertex count");
  for (double l : lengths) {
    if (!(l > 0.0)) throw std::invalid_argument("edge lengths must be positive");
  }
  TypedForest out = *this;
  out.edge_lengths_ = std::move(lengths);
  return out;
}

ForestBuilder::ForestBuilder(int dim) : dim_(dim) {
  if (dim < 1) throw std::invalid_argument("forest dimension must be >= 1");
}

void ForestBuilder::reserve(std::size_t n) {
  types_.reserve(n);
  parents_.reserve(n);
}

VertexId ForestBuilder::add_root(int type, std::optional<double> edge_length) {
  if (type < 0 || type >= dim_) throw std::out_of_range("vertex type out of range");
  const auto id = static_cast<VertexId>(types_.size());
  types_.push_back(type);
  parents_.push_back(kNoParent);
  roots_.push_back(id);
  lengths_.push_back(edge_length.value_or(0.0));
  any_length_ |= edge_length.has_value();
  all_length_ &= edge_length.has_value();
  return id;
}

VertexId ForestBuilder::add_child(VertexId parent, int type, std::optional<double> edge_length) {
  if (type < 0 || type >= dim_) throw std::out_of_range("vertex type out of range");
  if (parent < 0 || parent >= static_cast<VertexId>(types_.size())) throw std::out_of_range("unknown parent id");
  const auto id = static_cast<VertexId>(types_.size());
  types_.push_back(type);
  parents_.push_back(parent);
  lengths_.push_back(edge_length.value_or(0.0));
  any_length_ |= edge_length.has_value();
  all_length_ &= edge_length.has_value();
  return id;
}

TypedForest ForestBuilder::finish() && {
  if (any_length_ && !all_length_) throw std::invalid_argument("edge lengths must be given for all vertices or none");
  TypedForest f;
  f.dim_ = dim_;
  const std::size_t n = types_.size();
  f.child_offsets_.assign(n + 1, 0);
  for (std::size_t v = 0; v < n; ++v) {
    if (parents_[v] != kNoParent) ++f.child_offsets_[static_cast<std::size_t>(parents_[v]) + 1];
  }
  for (std::size_t v = 0; v < n; ++v) f.child_offsets_[v + 1] += f.child_offsets_[v];
  f.child_list_.resize(static_cast<std::size_t>(f.child_offsets_[n]));
  std::vector<std::int64_t> fill(f.child_offsets_.begin(), f.child_offsets_.end() - 1);
  for (std::size_t v = 0; v < n; ++v) {
    if (parents_[v] != kNoParent) f.child_list_[static_cast<std::size_t>(fill[static_cast<std::size_t>(parents_[v])]++)] = static_cast<VertexId>(v);
  }
  for (std::size_t v = 0; v < n; ++v) {
    auto b = f.child_list_.begin() + f.child_offsets_[v];
    auto e = f.child_list_.begin() + f.child_offsets_[v + 1];
    std::stable_sort(b, e, [&](VertexId a, VertexId c) { return types_[static_cast<std::size_t>(a)] < types_[static_cast<std::size_t>(c)]; });
  }
  f.types_ = std::move(types_);
  f.parents_ = std::move(parents_);
  f.roots_ = std::move(roots_);
  if (any_length_) {
    for (double l : lengths_) {
      if (!(l > 0.0)) throw std::invalid_argument("edge lengths must be positive");
    }
    f.edge_lengths_ = std::move(lengths_);
  }
  // Reject cycles: every vertex must be reached from a root.
  std::vector<char> seen(n, 0);
  std::size_t reached = 0;
  std::vector<VertexId> stack(f.roots_.begin(), f.roots_.end());
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    if (seen[static_cast<std::size_t>(v)]) throw std::invalid_argument("forest contains a cycle");
    seen[static_cast<std::size_t>(v)] = 1;
    ++reached;
    for (VertexId c : f.children(v)) stack.push_back(c);
  }
  if (reached != n) throw std::invalid_argument("forest has vertices unreachable from the roots");
  return f;
}

std::vector<VertexId> bfs_label(const TypedForest& f) {
  std::vector<VertexId> order;
  order.reserve(f.size());
  for (VertexId r : f.roots()) {
    std::size_t head = order.size();
    order.push_back(r);
    while (head < order.size()) {
      const VertexId v = order[head++];
      for (VertexId c : f.children(v)) order.push_back(c);
    }
  }
  return order;
}

namespace {

struct ClusterIndex {
  std::vector<std::int64_t> of_vertex;  // cluster id per vertex
  std::vector<VertexId> root;           // cluster root per cluster id, ids in BFS rank order
  std::vector<std::vector<VertexId>> members;
};

ClusterIndex index_clusters(const TypedForest& f, const std::vector<VertexId>& order) {
  ClusterIndex idx;
  idx.of_vertex.assign(f.size(), -1);
  for (VertexId v : order) {
    const VertexId p = f.parent(v);
    std::int64_t c;
    if (p == kNoParent || f.type(p) != f.type(v)) {
      c = static_cast<std::int64_t>(idx.root.size());
      idx.root.push_back(v);
      idx.members.emplace_back();
    } else {
      c = idx.of_vertex[static_cast<std::size_t>(p)];
    }
    idx.of_vertex[static_cast<std::size_t>(v)] = c;
    idx.members[static_cast<std::size_t>(c)].push_back(v);
  }
  return idx;
}

}  // namespace

std::vector<std::vector<VertexId>> clusters(const TypedForest& f, int type) {
  const auto order = bfs_label(f);
  auto idx = index_clusters(f, order);
  std::vector<std::vector<VertexId>> out;
  for (std::size_t c = 0; c < idx.root.size(); ++c) {
    if (f.type(idx.root[c]) == type) out.push_back(std::move(idx.members[c]));
  }
  return out;
}

TypedForest mutation_forest(const TypedForest& f) {
  const auto order = bfs_label(f);
  const auto idx = index_clusters(f, order);
  const std::size_t nc = idx.root.size();

  // Child clusters of each cluster, by breadth-first rank of their roots.
  std::vector<std::vector<std::int64_t>> kids(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const VertexId p = f.parent(idx.root[c]);
    if (p != kNoParent) kids[static_cast<std::size_t>(idx.of_vertex[static_cast<std::size_t>(p)])].push_back(static_cast<std::int64_t>(c));
  }
  auto cluster_type = [&](std::int64_t c) { return f.type(idx.root[static_cast<std::size_t>(c)]); };
  for (auto& k : kids) {
    std::stable_sort(k.begin(), k.end(), [&](auto a, auto b) { return cluster_type(a) < cluster_type(b); });
  }

  ForestBuilder b(f.dim());
  b.reserve(nc);
  for (VertexId r : f.roots()) {
    std::deque<std::pair<std::int64_t, VertexId>> queue;  // (cluster, new id)
    const auto rc = idx.of_vertex[static_cast<std::size_t>(r)];
    queue.emplace_back(rc, b.add_root(cluster_type(rc)));
    while (!queue.empty()) {
      const auto [c, id] = queue.front();
      queue.pop_front();
      for (auto k : kids[static_cast<std::size_t>(c)]) queue.emplace_back(k, b.add_child(id, cluster_type(k)));
    }
  }
  return std::move(b).finish();
}

CodingChains encode(const TypedForest& f) {
  const int d = f.dim();
  const auto order = bfs_label(f);
  const auto idx = index_clusters(f, order);
  CodingChains chains;
  chains.dim = d;
  chains.values.assign(static_cast<std::size_t>(d), std::vector<std::int64_t>(static_cast<std::size_t>(d), 0));
  for (std::size_t c = 0; c < idx.root.size(); ++c) {
    const int i = f.type(idx.root[c]);
    auto& chain = chains.values[static_cast<std::size_t>(i)];
    for (VertexId u : idx.members[c]) {
      const auto k = f.child_counts(u);
      const std::size_t prev = chain.size() - static_cast<std::size_t>(d);
      for (int j = 0; j < d; ++j) {
        chain.push_back(chain[prev + static_cast<std::size_t>(j)] + k[static_cast<std::size_t>(j)] - (j == i ? 1 : 0));
      }
    }
  }
  return chains;
}

MutationCensus MutationCensus::zeros(int dim) {
  MutationCensus c;
  c.total = decltype(c.total)::Zero(dim);
  c.mutations = decltype(c.mutations)::Zero(dim);
  c.cross = decltype(c.cross)::Zero(dim, dim);
  c.roots = decltype(c.roots)::Zero(dim);
  c.self_births = decltype(c.self_births)::Zero(dim);
  return c;
}

bool MutationCensus::operator==(const MutationCensus& o) const {
  return total == o.total && mutations == o.mutations && cross == o.cross && roots == o.roots &&
         self_births == o.self_births;
}

MutationCensus census(const TypedForest& f) {
  auto c = MutationCensus::zeros(f.dim());
  for (std::size_t v = 0; v < f.size(); ++v) {
    const int t = f.type(static_cast<VertexId>(v));
    ++c.total(t);
    const VertexId p = f.parent(static_cast<VertexId>(v));
    if (p == kNoParent) {
      ++c.roots(t);
    } else if (f.type(p) != t) {
      ++c.cross(f.type(p), t);
      ++c.mutations(t);
    } else {
      ++c.self_births(t);
    }
  }
  return c;
}

void write_forest(std::ostream& os, const TypedForest& f) {
  const auto old = os.precision(17);
  for (std::size_t v = 0; v < f.size(); ++v) {
    os << v << ' ' << f.parent(static_cast<VertexId>(v)) << ' ' << f.type(static_cast<VertexId>(v)) + 1;
    if (f.has_edge_lengths()) os << ' ' << f.edge_length(static_cast<VertexId>(v));
    os << '\n';
  }
  os.precision(old);
}

TypedForest read_forest(std::istream& is, int dim) {
  struct Rec {
    VertexId id, parent;
    int type;
    std::optional<double> length;
  };
  std::vector<Rec> recs;
  std::string line;
  int max_type = 0;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Rec r{};
    if (!(ls >> r.id >> r.parent >> r.type)) throw std::runtime_error("forest record " + std::to_string(lineno) + ": expected 'id parent type'");
    double l;
    if (ls >> l) r.length = l;
    if (r.id != static_cast<VertexId>(recs.size())) throw std::runtime_error("forest record " + std::to_string(lineno) + ": ids must be contiguous from 0");
    if (r.type < 1) throw std::runtime_error("forest record " + std::to_string(lineno) + ": types are 1-based");
    if (r.parent != kNoParent && (r.parent < 0 || r.parent >= r.id)) {
      // Parents may appear after children in hand-written files; resolved below.
      if (r.parent < 0) throw std::runtime_error("forest record " + std::to_string(lineno) + ": bad parent id");
    }
    max_type = std::max(max_type, r.type);
    recs.push_back(r);
  }
  if (dim <= 0) dim = max_type;
  if (max_type > dim) throw std::runtime_error("forest has type " + std::to_string(max_type) + " > dimension " + std::to_string(dim));

  // Insert vertices so that every parent precedes its children, keeping the
  // original relative order; ids are then renumbered in insertion order.
  std::vector<std::vector<VertexId>> kids(recs.size());
  std::vector<VertexId> roots;
  for (const auto& r : recs) {
    if (r.parent == kNoParent) {
      roots.push_back(r.id);
    } else {
      if (r.parent >= static_cast<VertexId>(recs.size())) throw std::runtime_error("forest record references unknown parent " + std::to_string(r.parent));
      kids[static_cast<std::size_t>(r.parent)].push_back(r.id);
    }
  }
  ForestBuilder b(dim);
  b.reserve(recs.size());
  std::vector<VertexId> new_id(recs.size(), -1);
  std::vector<VertexId> stack;
  for (VertexId r : roots) {
    new_id[static_cast<std::size_t>(r)] = b.add_root(recs[static_cast<std::size_t>(r)].type - 1, recs[static_cast<std::size_t>(r)].length);
  }
  std::deque<VertexId> queue(roots.begin(), roots.end());
  while (!queue.empty()) {
    const VertexId v = queue.front();
    queue.pop_front();
    for (VertexId c : kids[static_cast<std::size_t>(v)]) {
      new_id[static_cast<std::size_t>(c)] = b.add_child(new_id[static_cast<std::size_t>(v)], recs[static_cast<std::size_t>(c)].type - 1, recs[static_cast<std::size_t>(c)].length);
      queue.push_back(c);
    }
  }
  if (b.size() != recs.size()) throw std::runtime_error("forest file contains a cycle or unreachable vertices");
  return std::move(b).finish();
}

}  // namespace mutforest
