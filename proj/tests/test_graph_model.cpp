#include "graph_model.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <fstream>
#include <map>
#include <set>

using namespace ttag;
using testing::make_random_world;

namespace {

// Straight-line Eigen re-implementation of the forward pass, reading
// parameters by name. Kept deliberately loop-and-matrix style so it shares
// no code with the tape version.
Vec reference_embed(GraphModel& model, const Subgraph& sg) {
    const ParamStore& ps = model.params();
    const auto& cfg = model.config();
    const auto& schema = model.schema();
    auto P = [&](const std::string& name) -> const Mat& {
        int i = ps.find(name);
        REQUIRE(i >= 0);
        return ps[i].value;
    };

    size_t V = sg.nodes.size();
    size_t slots = schema.num_relations * 2;

    // Neighbor lists straight from the edge multiset.
    std::vector<std::vector<std::vector<size_t>>> nbrs(
        V, std::vector<std::vector<size_t>>(slots));
    for (size_t i = 0; i < V; ++i) {
        for (size_t s = 0; s < slots; ++s) {
            std::vector<const TimestampedEdge*> inc;
            for (const auto& e : sg.edges) {
                NodeRef from = s % 2 == 0 ? e.src : e.dst;
                if (from == sg.nodes[i].ref && size_t(e.relation) == s / 2) inc.push_back(&e);
            }
            std::sort(inc.begin(), inc.end(), [](const auto* a, const auto* b) {
                if (a->timestamp != b->timestamp) return a->timestamp > b->timestamp;
                return a->edge_seq > b->edge_seq;
            });
            std::set<size_t> seen;
            for (const auto* e : inc) {
                size_t u = sg.index_of(s % 2 == 0 ? e->dst : e->src);
                if (!seen.insert(u).second) continue;
                nbrs[i][s].push_back(u);
                if (nbrs[i][s].size() >= sg.spec.per_relation_limit) break;
            }
        }
    }

    std::vector<Vec> h(V);
    for (size_t i = 0; i < V; ++i) {
        const auto& n = sg.nodes[i];
        size_t df = schema.type_feature_dims[n.ref.type];
        Vec x = Vec::Zero(Eigen::Index(schema.text_dim + df));
        if (cfg.use_text) x.head(Eigen::Index(schema.text_dim)) = n.text;
        if (cfg.use_numeric) x.tail(Eigen::Index(df)) = n.numeric;
        std::string b = "enc_" + schema.type_names[n.ref.type];
        Vec hid = (P(b + "_w1") * x + P(b + "_b1")).cwiseMax(0.0);
        h[i] = P(b + "_w2") * hid + P(b + "_b2");
    }

    for (size_t l = 0; l < cfg.layers; ++l) {
        std::string lp = "conv_l" + std::to_string(l);
        std::vector<Vec> h2(V);
        for (size_t i = 0; i < V; ++i) {
            std::vector<Vec> aggs;
            for (size_t s = 0; s < slots; ++s) {
                const auto& ns = nbrs[i][s];
                if (ns.empty()) continue;
                std::string sp =
                    lp + "_r" + std::to_string(s / 2) + (s % 2 == 0 ? "_out" : "_in");
                std::vector<Vec> msgs;
                for (size_t u : ns) msgs.push_back(P(sp + "_wmsg") * h[u]);
                if (cfg.conv_kind == ConvKind::Mean) {
                    Vec m = Vec::Zero(msgs[0].size());
                    for (const Vec& v : msgs) m += v;
                    aggs.push_back(m / double(msgs.size()));
                } else {
                    Vec sv = P(sp + "_attn_ws") * h[i];
                    Vec scores(msgs.size());
                    for (size_t k = 0; k < msgs.size(); ++k) {
                        Vec z = sv + msgs[k];
                        Vec lz = z.unaryExpr(
                            [](double v) { return v > 0 ? v : 0.2 * v; });
                        scores[Eigen::Index(k)] = P(sp + "_attn_a").col(0).dot(lz);
                    }
                    Vec w = (scores.array() - scores.maxCoeff()).exp();
                    w /= w.sum();
                    Vec m = Vec::Zero(msgs[0].size());
                    for (size_t k = 0; k < msgs.size(); ++k) m += w[Eigen::Index(k)] * msgs[k];
                    aggs.push_back(m);
                }
            }
            std::string sl = "self_l" + std::to_string(l);
            Vec base = P(sl + "_w") * h[i] + P(sl + "_b");
            if (!aggs.empty()) {
                Vec m = Vec::Zero(base.size());
                for (const Vec& a : aggs) m += a;
                base += m / double(aggs.size());
            }
            h2[i] = base.cwiseMax(0.0);
        }
        h = std::move(h2);
    }

    Vec gnn = P("out_w") * h[0] + P("out_b");
    Vec text = cfg.use_text ? sg.nodes[0].text : Vec(Vec::Zero(Eigen::Index(schema.text_dim)));
    Vec p1 = (P("proj_w1") * text + P("proj_b1")).cwiseMax(0.0);
    Vec proj = P("proj_w2") * p1 + P("proj_b2");
    Vec res = gnn + proj;
    double n = res.norm();
    return n < 1e-12 ? res : Vec(res / n);
}

ModelConfig small_config(ConvKind kind) {
    ModelConfig cfg;
    cfg.out_dim = 12;
    cfg.hidden_dim = 10;
    cfg.layers = 2;
    cfg.conv_kind = kind;
    cfg.sampler = {2, 4, true, true};
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("model forward matches the straight-line reference") {
    for (ConvKind kind : {ConvKind::Mean, ConvKind::Attention}) {
        auto w = make_random_world(41, 50, 400);
        GraphModel model(small_config(kind), GraphSchema::of(w.graph));
        std::mt19937_64 rng(6);
        for (int q = 0; q < 40; ++q) {
            NodeRef v = w.refs[rng() % w.refs.size()];
            double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
            Vec got = model.embed_node(w.graph, v, t);
            Vec want = reference_embed(model, sample_subgraph(w.graph, v, t, model.config().sampler));
            REQUIRE((got - want).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("embeddings are unit norm and deterministic") {
    auto w = make_random_world(43, 40, 300);
    GraphModel model(small_config(ConvKind::Attention), GraphSchema::of(w.graph));
    std::mt19937_64 rng(2);
    for (int q = 0; q < 30; ++q) {
        NodeRef v = w.refs[rng() % w.refs.size()];
        double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
        Vec a = model.embed_node(w.graph, v, t);
        Vec b = model.embed_node(w.graph, v, t);
        CHECK(std::abs(a.norm() - 1.0) < 1e-12);
        CHECK(testing::bit_equal(a, b));
    }
}

TEST_CASE("degenerate residual falls back to the projected text path") {
    auto w = make_random_world(44, 30, 200);
    GraphModel model(small_config(ConvKind::Mean), GraphSchema::of(w.graph));
    for (size_t i = 0; i < model.params().size(); ++i)
        model.params()[int(i)].value.setZero();

    NodeRef v = w.refs[0];
    bool degenerate = false;
    Vec e = model.embed_node(w.graph, v, w.t_max / 2, false, &degenerate);
    CHECK(degenerate);
    CHECK(e.isZero());  // all-zero projector -> zero fallback
    CHECK_THROWS_AS(model.embed_node(w.graph, v, w.t_max / 2, true), Error);
}

TEST_CASE("feature ablation flags isolate the input slots") {
    auto w = make_random_world(45, 40, 300);
    // Same world with all text embeddings rescaled.
    StoreInput perturbed = w.input;
    for (auto& [ref, ver] : perturbed.versions)
        if (ver.has_text()) ver.text *= -2.5;
    TemporalGraph g2 = build_store(std::move(perturbed));

    auto cfg = small_config(ConvKind::Mean);
    cfg.use_text = false;
    GraphModel no_text(cfg, GraphSchema::of(w.graph));
    std::mt19937_64 rng(3);
    for (int q = 0; q < 20; ++q) {
        NodeRef v = w.refs[rng() % w.refs.size()];
        double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
        Vec a = no_text.embed_node(w.graph, v, t);
        Vec b = no_text.embed_node(g2, v, t);
        CHECK(testing::bit_equal(a, b));  // text is invisible to the model
    }
}

TEST_CASE("analytic batch gradients match finite differences") {
    auto w = make_random_world(47, 40, 300);
    for (ConvKind kind : {ConvKind::Mean, ConvKind::Attention}) {
        auto cfg = small_config(kind);
        GraphModel model(cfg, GraphSchema::of(w.graph));

        // Task-homogeneous batch: queries of one type, positives of another.
        BatchSpec batch;
        std::vector<NodeRef> t0, t1;
        for (NodeRef r : w.refs) (r.type == 0 ? t0 : t1).push_back(r);
        REQUIRE(t0.size() >= 4);
        REQUIRE(t1.size() >= 6);
        batch.query_type = 0;
        for (int i = 0; i < 4; ++i)
            batch.entries.push_back({t0[size_t(i)], t1[size_t(i)], 300.0 + 50.0 * i});
        batch.negatives = {{t1[4], 420.0}, {t1[5], 510.0}};

        double err = model.grad_check(w.graph, batch, 3, 99);
        CHECK(err < 1e-4);
    }
}

TEST_CASE("checkpoint round trip preserves behaviour") {
    auto w = make_random_world(48, 30, 200);
    GraphModel model(small_config(ConvKind::Attention), GraphSchema::of(w.graph));
    auto path = std::filesystem::temp_directory_path() / "ttag_gm_test.bin";
    model.save(path);
    GraphModel back = GraphModel::load(path);
    GraphModel back2 = GraphModel::load(path);
    std::filesystem::remove(path);

    CHECK(back.config().conv_kind == ConvKind::Attention);
    CHECK(back.schema().num_relations == w.graph.num_relations());
    std::mt19937_64 rng(8);
    for (int q = 0; q < 15; ++q) {
        NodeRef v = w.refs[rng() % w.refs.size()];
        double t = std::uniform_real_distribution<double>(0.0, w.t_max)(rng);
        Vec a = model.embed_node(w.graph, v, t);
        Vec b = back.embed_node(w.graph, v, t);
        Vec c = back2.embed_node(w.graph, v, t);
        CHECK(testing::bit_equal(b, c));               // loads agree exactly
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-5);   // float32 storage
    }
}

TEST_CASE("corrupt checkpoints are rejected") {
    auto path = std::filesystem::temp_directory_path() / "ttag_gm_bad.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "not a checkpoint";
    }
    CHECK_THROWS_AS(GraphModel::load(path), Error);
    std::filesystem::remove(path);
}
