#include "text_model.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace ttag;

namespace {

Vec unit(std::mt19937_64& rng, int d) {
    std::normal_distribution<double> n;
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = n(rng);
    return v / v.norm();
}

}  // namespace

TEST_CASE("two equally similar candidates cost exactly ln 2") {
    Vec q(2), p(2), n(2);
    q << 1.0, 0.0;
    p << 0.0, 1.0;   // q.p = 0
    n << 0.0, -1.0;  // q.n = 0
    ContrastiveBatch b;
    b.task = "fl2jp";
    b.queries = {q};
    b.positives = {p};
    b.extra_negatives = {n};
    b.temperature = 0.07;
    CHECK(std::abs(infonce_loss(b).loss - std::log(2.0)) < 1e-9);

    // Four candidates with identical logits -> ln 4.
    ContrastiveBatch b4;
    b4.task = "fl2jp";
    Vec e1(2), e2(2);
    e1 << 1.0, 0.0;
    e2 << -1.0, 0.0;
    b4.queries = {p, p};  // both orthogonal to every candidate
    b4.positives = {e1, e2};
    b4.extra_negatives = {e1, e2};
    b4.temperature = 0.05;
    CHECK(std::abs(infonce_loss(b4).loss - std::log(4.0)) < 1e-9);
}

TEST_CASE("temperature rescaling never changes the preferred candidate") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Vec q = unit(rng, 8);
        std::vector<Vec> cands;
        for (int i = 0; i < 6; ++i) cands.push_back(unit(rng, 8));

        // The candidate minimizing the loss when treated as the positive
        // must be the same at every temperature.
        int best_at_tau[3] = {-1, -1, -1};
        double taus[3] = {0.02, 0.05, 0.5};
        for (int ti = 0; ti < 3; ++ti) {
            double best = 1e18;
            for (size_t c = 0; c < cands.size(); ++c) {
                ContrastiveBatch b;
                b.task = "fl2jp";
                b.queries = {q};
                b.positives = {cands[c]};
                for (size_t o = 0; o < cands.size(); ++o)
                    if (o != c) b.extra_negatives.push_back(cands[o]);
                b.temperature = taus[ti];
                double l = infonce_loss(b).loss;
                if (l < best) best = l, best_at_tau[ti] = int(c);
            }
        }
        CHECK(best_at_tau[0] == best_at_tau[1]);
        CHECK(best_at_tau[1] == best_at_tau[2]);
    }
}

TEST_CASE("loss gradients match finite differences") {
    std::mt19937_64 rng(5);
    ContrastiveBatch b;
    b.task = "jp2fl";
    b.temperature = 0.1;
    for (int i = 0; i < 3; ++i) {
        b.queries.push_back(unit(rng, 6));
        b.positives.push_back(unit(rng, 6));
    }
    for (int i = 0; i < 4; ++i) b.extra_negatives.push_back(unit(rng, 6));

    auto res = infonce_loss(b);
    const double h = 1e-6;
    auto fd_on = [&](std::vector<Vec>& group, const std::vector<Vec>& grads) {
        for (size_t i = 0; i < group.size(); ++i)
            for (Eigen::Index d = 0; d < group[i].size(); ++d) {
                double keep = group[i][d];
                group[i][d] = keep + h;
                double up = infonce_loss(b).loss;
                group[i][d] = keep - h;
                double dn = infonce_loss(b).loss;
                group[i][d] = keep;
                double fd = (up - dn) / (2 * h);
                CHECK(std::abs(fd - grads[i][d]) < 1e-5);
            }
    };
    fd_on(b.queries, res.d_queries);
    fd_on(b.positives, res.d_positives);
    fd_on(b.extra_negatives, res.d_negatives);
}

TEST_CASE("encoder conventions and determinism") {
    TextModelConfig cfg;
    cfg.vocab_size = 50;
    cfg.dim = 16;
    cfg.seed = 3;
    DualEncoder enc(cfg);

    CHECK(enc.encode({}).isZero());
    Vec e = enc.encode({1, 4, 9});
    CHECK(std::abs(e.norm() - 1.0) < 1e-12);
    Vec e2 = enc.encode({1, 4, 9});
    CHECK((e - e2).isZero());

    DualEncoder enc_same(cfg);
    CHECK((enc_same.encode({1, 4, 9}) - e).isZero());
}

TEST_CASE("training separates topics and the strong stage sharpens pairs") {
    // Tiny synthetic vocabulary: tokens 0-9 are topic A, 10-19 topic B.
    std::mt19937_64 rng(2);
    auto doc = [&](int topic) {
        std::vector<uint32_t> d;
        for (int i = 0; i < 8; ++i) d.push_back(uint32_t(topic * 10 + rng() % 10));
        return d;
    };
    std::vector<PairExample> weak;
    for (int i = 0; i < 200; ++i) {
        int topic = i % 2;
        weak.push_back({"fl2jp", "title_body", doc(topic), doc(topic), {}});
    }
    std::vector<PairExample> strong;
    for (int i = 0; i < 100; ++i) {
        int topic = i % 2;
        strong.push_back({"fl2jp", "hired", doc(topic), doc(topic), {doc(1 - topic)}});
    }

    TextModelConfig cfg;
    cfg.vocab_size = 20;
    cfg.dim = 8;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.learning_rate = 5e-2;
    cfg.seed = 7;
    DualEncoder enc(cfg);

    auto weak_losses = enc.train_stage(weak, TrainStage::Weak);
    REQUIRE(weak_losses.size() == cfg.epochs);
    CHECK(weak_losses.back() < weak_losses.front());

    auto strong_losses = enc.train_stage(strong, TrainStage::Strong);
    CHECK(strong_losses.back() < std::log(16.0));  // well under chance

    // Same-topic documents now score above cross-topic ones.
    double same = cosine_sim(enc.encode(doc(0)), enc.encode(doc(0)));
    double cross = cosine_sim(enc.encode(doc(0)), enc.encode(doc(1)));
    CHECK(same > cross + 0.2);
}

TEST_CASE("encoder save/load reproduces embeddings bit-exactly") {
    TextModelConfig cfg;
    cfg.vocab_size = 30;
    cfg.dim = 12;
    cfg.seed = 4;
    DualEncoder enc(cfg);

    auto path = std::filesystem::temp_directory_path() / "ttag_enc_test.bin";
    enc.save(path);
    DualEncoder back = DualEncoder::load(path);
    DualEncoder back2 = DualEncoder::load(path);
    std::filesystem::remove(path);

    CHECK(back.config().dim == cfg.dim);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 20; ++i) {
        std::vector<uint32_t> d;
        for (int k = 0; k < 5; ++k) d.push_back(uint32_t(rng() % 30));
        Vec a = enc.encode(d), b = back.encode(d), c = back2.encode(d);
        CHECK((b - c).isZero());                     // two loads agree exactly
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);  // float32 storage
    }
}
