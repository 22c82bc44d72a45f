#include "sampler.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

namespace ttag {

size_t Subgraph::index_of(NodeRef v) const {
    auto it = index.find(v);
    if (it == index.end()) throw Error("node not in subgraph");
    return it->second;
}

Subgraph sample_subgraph(const TemporalGraph& g, NodeRef v, double as_of,
                         const SamplerSpec& spec) {
    if (!g.has_node(v)) throw Error("sample_subgraph: unknown target node");

    Subgraph sg;
    sg.target = v;
    sg.as_of = as_of;
    sg.spec = spec;

    double edge_cut = spec.temporal_edges ? as_of : spec.static_cut;
    double feat_cut = spec.temporal_features ? as_of : spec.static_cut;

    auto add_node = [&](NodeRef u, size_t hop) {
        SubgraphNode n;
        n.ref = u;
        n.hop = hop;
        n.numeric = g.features_at(u, feat_cut);
        n.text = g.text_embedding_at(u, feat_cut);
        sg.index.emplace(u, sg.nodes.size());
        sg.nodes.push_back(std::move(n));
    };

    add_node(v, 0);
    std::unordered_set<uint64_t> seen_edges;
    std::vector<NodeRef> frontier{v};

    for (size_t hop = 1; hop <= spec.hops && !frontier.empty(); ++hop) {
        std::vector<NodeRef> next;
        for (NodeRef cur : frontier) {
            for (RelId r = 0; r < g.num_relations(); ++r) {
                for (EdgeDir dir : {EdgeDir::Out, EdgeDir::In}) {
                    for (const auto& e :
                         g.edges_before_dir(cur, r, dir, edge_cut, spec.per_relation_limit)) {
                        if (seen_edges.insert(e.edge_seq).second) sg.edges.push_back(e);
                        NodeRef other = (dir == EdgeDir::Out) ? e.dst : e.src;
                        if (!sg.contains(other)) {
                            add_node(other, hop);
                            next.push_back(other);
                        }
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    return sg;
}

std::vector<NodeRef> neighbors_for_conv(const Subgraph& sg, NodeRef v, RelId r, EdgeDir dir) {
    if (!sg.contains(v)) throw Error("neighbors_for_conv: node not in subgraph");
    std::vector<const TimestampedEdge*> incident;
    for (const auto& e : sg.edges) {
        if (e.relation != r) continue;
        if (dir == EdgeDir::Out ? (e.src == v) : (e.dst == v)) incident.push_back(&e);
    }
    std::sort(incident.begin(), incident.end(),
              [](const TimestampedEdge* a, const TimestampedEdge* b) {
                  if (a->timestamp != b->timestamp) return a->timestamp > b->timestamp;
                  return a->edge_seq > b->edge_seq;
              });
    std::vector<NodeRef> out;
    std::unordered_set<NodeRef, NodeRefHash> dedup;
    for (const auto* e : incident) {
        NodeRef other = (dir == EdgeDir::Out) ? e->dst : e->src;
        if (dedup.insert(other).second) {
            out.push_back(other);
            if (out.size() >= sg.spec.per_relation_limit) break;
        }
    }
    return out;
}

}  // namespace ttag
