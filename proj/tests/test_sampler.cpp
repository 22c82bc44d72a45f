#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace ttag;
using testing::make_random_world;
using testing::reference_sample;
using testing::RefSubgraph;

TEST_CASE("sampler equals the brute-force reference on 10^3 random draws") {
    for (uint64_t seed : {7u, 8u, 9u}) {
        auto w = make_random_world(seed, 50, 500);
        std::mt19937_64 rng(seed + 100);
        for (size_t q = 0; q < 340; ++q) {
            NodeRef v = w.refs[rng() % w.refs.size()];
            double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
            SamplerSpec spec;
            spec.hops = 1 + rng() % 3;
            spec.per_relation_limit = 1 + rng() % 6;

            Subgraph sg = sample_subgraph(w.graph, v, t, spec);
            RefSubgraph ref = reference_sample(w.input, v, t, spec);

            std::set<NodeRef> got_nodes;
            for (const auto& n : sg.nodes) {
                got_nodes.insert(n.ref);
                REQUIRE(ref.hop_of.at(n.ref) == n.hop);  // smallest hop kept
            }
            REQUIRE(got_nodes == ref.nodes);
            std::set<size_t> got_edges;
            for (const auto& e : sg.edges) got_edges.insert(e.edge_seq);
            REQUIRE(got_edges == ref.edge_seqs);
        }
    }
}

TEST_CASE("no leakage: 10^4 draws emit nothing at or after the cut") {
    for (uint64_t seed : {7u, 8u, 9u}) {
        auto w = make_random_world(seed, 60, 600);
        std::mt19937_64 rng(seed + 7);
        for (size_t q = 0; q < 3400; ++q) {
            NodeRef v = w.refs[rng() % w.refs.size()];
            double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
            Subgraph sg = sample_subgraph(w.graph, v, t, {2, 5, true, true});
            for (const auto& e : sg.edges) REQUIRE(e.timestamp < t);
            for (const auto& n : sg.nodes) {
                // Features resolved exactly as of t (store lookups are the
                // oracle-verified point-in-time reference).
                REQUIRE(testing::bit_equal(n.numeric, w.graph.features_at(n.ref, t)));
                REQUIRE(testing::bit_equal(n.text, w.graph.text_embedding_at(n.ref, t)));
            }
        }
    }
}

TEST_CASE("subgraph structural invariants") {
    auto w = make_random_world(11, 60, 500);
    std::mt19937_64 rng(2);
    for (size_t q = 0; q < 200; ++q) {
        NodeRef v = w.refs[rng() % w.refs.size()];
        double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
        SamplerSpec spec{2, 4, true, true};
        Subgraph sg = sample_subgraph(w.graph, v, t, spec);
        REQUIRE(sg.nodes.size() == sg.index.size());  // deduplicated
        REQUIRE(sg.nodes[0].ref == v);
        REQUIRE(sg.nodes[0].hop == 0);
        for (const auto& n : sg.nodes) CHECK(n.hop <= spec.hops);
        for (const auto& e : sg.edges) {
            CHECK(sg.contains(e.src));
            CHECK(sg.contains(e.dst));
        }
    }
}

TEST_CASE("enlarging K or N never removes nodes") {
    auto w = make_random_world(13, 50, 400);
    std::mt19937_64 rng(3);
    for (size_t q = 0; q < 60; ++q) {
        NodeRef v = w.refs[rng() % w.refs.size()];
        double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
        auto nodes_of = [&](size_t k, size_t n) {
            std::set<NodeRef> s;
            for (const auto& nd : sample_subgraph(w.graph, v, t, {k, n, true, true}).nodes)
                s.insert(nd.ref);
            return s;
        };
        auto base = nodes_of(2, 3);
        auto more_hops = nodes_of(3, 3);
        auto more_edges = nodes_of(2, 6);
        CHECK(std::includes(more_hops.begin(), more_hops.end(), base.begin(), base.end()));
        CHECK(std::includes(more_edges.begin(), more_edges.end(), base.begin(), base.end()));
    }
}

TEST_CASE("ablation flags") {
    auto w = make_random_world(19, 50, 400);
    NodeRef v = w.refs[0];
    double mid = w.t_max * 0.3;

    SUBCASE("temporal_edges off ignores the cut") {
        Subgraph all = sample_subgraph(w.graph, v, mid, {2, 50, false, true});
        Subgraph inf = sample_subgraph(w.graph, v, w.t_max * 10, {2, 50, true, true});
        std::set<size_t> a, b;
        for (const auto& e : all.edges) a.insert(e.edge_seq);
        for (const auto& e : inf.edges) b.insert(e.edge_seq);
        CHECK(a == b);
    }
    SUBCASE("temporal_edges off with a finite static cut freezes the graph there") {
        double snap = w.t_max * 0.5;
        SamplerSpec spec{2, 50, false, true};
        spec.static_cut = snap;
        Subgraph frozen = sample_subgraph(w.graph, v, mid, spec);
        Subgraph at_snap = sample_subgraph(w.graph, v, snap, {2, 50, true, true});
        std::set<size_t> a, b;
        for (const auto& e : frozen.edges) a.insert(e.edge_seq);
        for (const auto& e : at_snap.edges) b.insert(e.edge_seq);
        CHECK(a == b);
        // Features still resolve at the query time, not the snapshot.
        for (const auto& n : frozen.nodes)
            CHECK(testing::bit_equal(n.numeric, w.graph.features_at(n.ref, mid)));
    }
    SUBCASE("temporal_features off resolves newest features") {
        Subgraph sg = sample_subgraph(w.graph, v, mid, {1, 5, true, false});
        for (const auto& n : sg.nodes) {
            Vec newest = w.graph.features_at(n.ref, std::numeric_limits<double>::infinity());
            CHECK(testing::bit_equal(n.numeric, newest));
        }
    }
}

TEST_CASE("neighbors_for_conv: recency order, dedupe, limit") {
    auto w = make_random_world(23, 40, 400);
    std::mt19937_64 rng(9);
    for (size_t q = 0; q < 100; ++q) {
        NodeRef v = w.refs[rng() % w.refs.size()];
        double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
        Subgraph sg = sample_subgraph(w.graph, v, t, {2, 4, true, true});
        for (RelId r = 0; r < w.graph.num_relations(); ++r) {
            for (EdgeDir dir : {EdgeDir::Out, EdgeDir::In}) {
                auto ns = neighbors_for_conv(sg, v, r, dir);
                CHECK(ns.size() <= sg.spec.per_relation_limit);
                std::set<NodeRef> uniq(ns.begin(), ns.end());
                CHECK(uniq.size() == ns.size());
                for (NodeRef u : ns) CHECK(sg.contains(u));
            }
        }
    }
}
