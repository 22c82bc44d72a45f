#pragma once

#include "graph_store.hpp"

#include <cstring>
#include <random>

namespace ttag::testing {

inline bool bit_equal(const Vec& a, const Vec& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * size_t(a.size())) == 0;
}

// Random heterogeneous store for property tests: `types` node types,
// `rels` relations, nodes with geometric-ish version counts, random text
// on even types, random edges and single activity periods in [0, t_max].
struct RandomWorld {
    StoreInput input;
    TemporalGraph graph;
    double t_max;
    std::vector<NodeRef> refs;

    RandomWorld(StoreInput in, double tmax)
        : input(in), graph(build_store(std::move(in))), t_max(tmax) {
        for (NodeRef v : graph.all_nodes()) refs.push_back(v);
    }
};

inline RandomWorld make_random_world(uint64_t seed, size_t n_nodes = 60, size_t n_edges = 400,
                                     size_t types = 3, size_t rels = 3, double t_max = 1000.0,
                                     size_t max_versions = 6, size_t text_dim = 5) {
    std::mt19937_64 rng(seed);
    auto uni = [&](double a, double b) {
        return std::uniform_real_distribution<double>(a, b)(rng);
    };
    StoreInput in;
    for (size_t t = 0; t < types; ++t) {
        in.type_names.push_back("type" + std::to_string(t));
        in.type_feature_dims.push_back(2 + t);
    }
    for (size_t r = 0; r < rels; ++r) in.relation_names.push_back("rel" + std::to_string(r));
    in.text_dim = text_dim;

    std::vector<NodeRef> refs;
    for (size_t i = 0; i < n_nodes; ++i) {
        TypeId t = TypeId(rng() % types);
        NodeRef ref{t, 1 + i};
        bool has_text = (t % 2 == 0);
        in.nodes.push_back({ref, has_text});
        refs.push_back(ref);

        size_t n_ver = 1 + rng() % max_versions;
        for (size_t k = 0; k < n_ver; ++k) {
            FeatureVersion ver;
            ver.timestamp = uni(0.0, t_max);
            ver.numeric = Vec::Zero(Eigen::Index(in.type_feature_dims[t]));
            for (Eigen::Index d = 0; d < ver.numeric.size(); ++d) ver.numeric[d] = uni(-1, 1);
            if (has_text && rng() % 4 != 0) {
                ver.text = Vec::Zero(Eigen::Index(text_dim));
                for (Eigen::Index d = 0; d < ver.text.size(); ++d) ver.text[d] = uni(-1, 1);
            }
            in.versions.emplace_back(ref, ver);
        }
        double a = uni(0.0, t_max * 0.5);
        in.activity.emplace_back(ref, ActivityPeriod{a, a + uni(10.0, t_max * 0.5)});
    }
    for (size_t e = 0; e < n_edges; ++e) {
        EdgeInput ei;
        ei.src = refs[rng() % refs.size()];
        ei.dst = refs[rng() % refs.size()];
        ei.relation = RelId(rng() % rels);
        // Coarse grid so timestamp ties occur and tie-breaking is exercised.
        ei.timestamp = double(rng() % 100) * (t_max / 100.0);
        in.edges.push_back(ei);
    }
    return RandomWorld(in, t_max);
}

}  // namespace ttag::testing
