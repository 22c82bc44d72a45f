#pragma once

#include "graph_store.hpp"

#include <limits>
#include <unordered_map>

namespace ttag {

struct SamplerSpec {
    size_t hops = 2;
    size_t per_relation_limit = 10;
    // Ablation switches: temporal_edges=false replaces the per-query as-of
    // cut with the fixed static_cut when picking edges; temporal_features
    // likewise for feature resolution. static_cut defaults to infinity
    // ("whole history"); pipelines that ablate set it to the end of the
    // training window so evaluation cannot see post-cut interactions.
    bool temporal_edges = true;
    bool temporal_features = true;
    double static_cut = std::numeric_limits<double>::infinity();
};

struct SubgraphNode {
    NodeRef ref;
    size_t hop = 0;
    Vec numeric;
    Vec text;
};

struct Subgraph {
    NodeRef target;
    double as_of = 0.0;
    SamplerSpec spec;
    std::vector<SubgraphNode> nodes;  // BFS discovery order, target first
    std::vector<TimestampedEdge> edges;
    std::unordered_map<NodeRef, size_t, NodeRefHash> index;

    bool contains(NodeRef v) const { return index.count(v) > 0; }
    size_t index_of(NodeRef v) const;
};

// Point-in-time K-hop expansion around v. Both edge directions are
// traversed; per frontier node, per relation and direction, up to
// per_relation_limit most recent qualifying edges are followed.
Subgraph sample_subgraph(const TemporalGraph& g, NodeRef v, double as_of,
                         const SamplerSpec& spec);

// Neighbors of v inside sg via relation r / direction dir, most recent
// first, deduplicated, limited to sg.spec.per_relation_limit.
std::vector<NodeRef> neighbors_for_conv(const Subgraph& sg, NodeRef v, RelId r, EdgeDir dir);

}  // namespace ttag
