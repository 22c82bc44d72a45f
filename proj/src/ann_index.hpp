#pragma once

#include "graph_store.hpp"

#include <unordered_map>

namespace ttag {

struct IndexEntry {
    NodeRef node;
    std::vector<ActivityPeriod> periods;
    Vec embedding;  // unit norm or zero
};

// Per-type nearest-neighbour index over text embeddings. Search is exact
// cosine top-k; at desk scale pools are small enough that exact search is
// also the fastest option.
class TypeIndex {
  public:
    TypeIndex() = default;
    explicit TypeIndex(TypeId type) : type_(type) {}

    TypeId node_type() const { return type_; }
    size_t size() const { return entries_.size(); }
    const std::vector<IndexEntry>& entries() const { return entries_; }
    void add(IndexEntry e) { entries_.push_back(std::move(e)); }

    // Indices of the k nearest entries by cosine, descending; ties by
    // ascending node id. Empty index -> empty result.
    std::vector<size_t> knn(const Vec& query, size_t k) const;

  private:
    TypeId type_ = 0;
    std::vector<IndexEntry> entries_;
};

// One index per node type, holding only nodes with at least one activity
// period. Index embeddings are taken at the node's latest version within
// its first activity period; they steer retrieval only, candidates are
// re-embedded at their sampled timestamps before filtering.
std::unordered_map<TypeId, TypeIndex> build_type_indices(const TemporalGraph& g);

}  // namespace ttag
