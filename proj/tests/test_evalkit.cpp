#include "evalkit.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace ttag;

namespace {

constexpr double kDay = 86400.0;

NodeRef fl(uint64_t id) { return {0, id}; }
NodeRef jp(uint64_t id) { return {1, id}; }

// Small marketplace world with hand-placed edges and text embeddings.
// Freelancer/job topics live on the unit circle so rankings are knowable.
TemporalGraph make_eval_world() {
    StoreInput in;
    in.type_names = {"freelancer", "job_post"};
    in.type_feature_dims = {2, 1};
    in.relation_names = {"clicked"};
    in.text_dim = 2;

    auto add = [&](NodeRef ref, double angle, double completion) {
        in.nodes.push_back({ref, true});
        FeatureVersion v;
        v.timestamp = 0.0;
        v.numeric = ref.type == 0 ? Vec(2) : Vec(1);
        v.numeric[0] = completion;
        if (ref.type == 0) v.numeric[1] = 0.0;
        v.text = Vec(2);
        v.text << std::cos(angle), std::sin(angle);
        in.versions.emplace_back(ref, v);
        in.activity.emplace_back(ref, ActivityPeriod{0.0, 30 * kDay});
    };
    // Freelancers 1-3; fl 3 falls below the completion threshold.
    add(fl(1), 0.0, 1.0);
    add(fl(2), 1.0, 1.0);
    add(fl(3), 0.1, 0.2);
    // Jobs 1-4 at angles around the circle.
    add(jp(1), 0.05, 1.0);
    add(jp(2), 1.1, 1.0);
    add(jp(3), 2.5, 1.0);
    add(jp(4), -1.2, 1.0);

    double cut = 5 * kDay + kDay / 2;
    // fl1 and fl2 have recent pre-cut edges; fl1's relevant job jp1 has a
    // pre-cut edge too, jp2 (fl2's match) stays cold until after the cut.
    in.edges.push_back({fl(1), jp(1), 0, cut - 3600.0});
    in.edges.push_back({fl(2), jp(4), 0, cut - 7200.0});
    in.edges.push_back({fl(2), jp(2), 0, cut + 3600.0});
    return build_store(std::move(in));
}

}  // namespace

TEST_CASE("ndcg at k on hand-computed rankings") {
    std::vector<NodeRef> ranked = {jp(1), jp(2), jp(3), jp(4)};
    CHECK(ndcg_at_k(ranked, {jp(1)}, 10) == doctest::Approx(1.0));
    CHECK(ndcg_at_k(ranked, {jp(2)}, 10) == doctest::Approx(1.0 / std::log2(3.0)));
    CHECK(ndcg_at_k(ranked, {jp(4)}, 3) == doctest::Approx(0.0));  // outside top-k
    CHECK(ndcg_at_k(ranked, {}, 10) == doctest::Approx(0.0));
    CHECK(ndcg_at_k({}, {jp(1)}, 10) == doctest::Approx(0.0));
    // Two relevant in the first two ranks is ideal.
    CHECK(ndcg_at_k(ranked, {jp(1), jp(2)}, 10) == doctest::Approx(1.0));
    double got = ndcg_at_k(ranked, {jp(1), jp(3)}, 10);
    double want = (1.0 + 1.0 / 2.0) / (1.0 + 1.0 / std::log2(3.0));
    CHECK(got == doctest::Approx(want));
    CHECK_THROWS_AS(ndcg_at_k(ranked, {jp(1)}, 0), Error);
}

TEST_CASE("case construction applies the pool filters") {
    TemporalGraph g = make_eval_world();
    std::vector<Contract> contracts = {
        {1, 1, 5 * kDay + 13 * 3600.0, 5 * kDay + 14 * 3600.0},  // fl1 -> jp1, after cut
        {2, 2, 5 * kDay + 15 * 3600.0, 5 * kDay + 16 * 3600.0},  // fl2 -> jp2
        {3, 3, 5 * kDay + 15 * 3600.0, 5 * kDay + 16 * 3600.0},  // fl3: filtered out
    };
    EvalConfig cfg;
    auto cases = build_eval_cases(g, contracts, cfg);

    size_t n_fl2jp = 0, n_jp2fl = 0;
    for (const auto& c : cases) {
        if (c.task == "fl2jp") {
            ++n_fl2jp;
            CHECK(c.candidates.size() == 4);  // every active job
        } else {
            ++n_jp2fl;
            // fl3 fails the completion filter; fl1 and fl2 have recent edges.
            CHECK(c.candidates == std::vector<NodeRef>{fl(1), fl(2)});
        }
    }
    CHECK(n_fl2jp == 3);  // fl3 still queries, jobs pool has no filter
    CHECK(n_jp2fl == 2);  // jp3's would-be positive fl3 is not in the pool
}

TEST_CASE("text ranking and cold-start slicing") {
    TemporalGraph g = make_eval_world();
    std::vector<Contract> contracts = {
        {1, 1, 5 * kDay + 13 * 3600.0, 5 * kDay + 14 * 3600.0},
        {2, 2, 5 * kDay + 15 * 3600.0, 5 * kDay + 16 * 3600.0},
    };
    EvalConfig cfg;
    auto cases = build_eval_cases(g, contracts, cfg);
    auto rep = evaluate(g, text_embedder(g), cases, cfg, "text");

    // fl1 at angle 0 ranks jp1 (angle .05) first; fl2 at angle 1 ranks jp2
    // (angle 1.1) first: perfect scores everywhere.
    CHECK(rep.fl2jp.overall.ndcg == doctest::Approx(1.0));
    CHECK(rep.fl2jp.overall.cases == 2);
    // fl1's pair is warm on both sides; fl2's match jp2 is candidate-cold.
    CHECK(rep.fl2jp.warm.cases == 1);
    CHECK(rep.fl2jp.candidate_cold.cases == 1);
    CHECK(rep.fl2jp.query_cold.cases == 0);
    // Reverse direction: jp1 warm, jp2 itself query-cold.
    CHECK(rep.jp2fl.overall.cases == 2);
    CHECK(rep.jp2fl.query_cold.cases == 1);
}

TEST_CASE("evaluation is insensitive to content created after the cut") {
    TemporalGraph g = make_eval_world();

    // Same world plus heavy post-cut activity: scrambled text versions and
    // a burst of edges the evening after the cut.
    auto build_with_future_noise = [&] {
        StoreInput in;
        in.type_names = {"freelancer", "job_post"};
        in.type_feature_dims = {2, 1};
        in.relation_names = {"clicked"};
        in.text_dim = 2;
        auto add = [&](NodeRef ref, double angle, double completion) {
            in.nodes.push_back({ref, true});
            FeatureVersion v;
            v.timestamp = 0.0;
            v.numeric = ref.type == 0 ? Vec(2) : Vec(1);
            v.numeric[0] = completion;
            if (ref.type == 0) v.numeric[1] = 0.0;
            v.text = Vec(2);
            v.text << std::cos(angle), std::sin(angle);
            in.versions.emplace_back(ref, v);
            in.activity.emplace_back(ref, ActivityPeriod{0.0, 30 * kDay});
        };
        add(fl(1), 0.0, 1.0);
        add(fl(2), 1.0, 1.0);
        add(fl(3), 0.1, 0.2);
        add(jp(1), 0.05, 1.0);
        add(jp(2), 1.1, 1.0);
        add(jp(3), 2.5, 1.0);
        add(jp(4), -1.2, 1.0);
        double cut = 5 * kDay + kDay / 2;
        in.edges.push_back({fl(1), jp(1), 0, cut - 3600.0});
        in.edges.push_back({fl(2), jp(4), 0, cut - 7200.0});
        in.edges.push_back({fl(2), jp(2), 0, cut + 3600.0});
        // Post-cut noise: scrambled text versions and extra edges.
        for (uint64_t i = 1; i <= 3; ++i) {
            FeatureVersion v;
            v.timestamp = cut + 2 * 3600.0;
            v.numeric = Vec::Zero(2);
            v.text = Vec(2);
            v.text << -1.0, 0.0;
            in.versions.emplace_back(fl(i), v);
        }
        for (uint64_t i = 1; i <= 4; ++i)
            in.edges.push_back({fl(1), jp(i), 0, cut + 4 * 3600.0 + double(i)});
        return build_store(std::move(in));
    };
    TemporalGraph noisy = build_with_future_noise();

    std::vector<Contract> contracts = {
        {1, 1, 5 * kDay + 13 * 3600.0, 5 * kDay + 14 * 3600.0},
        {2, 2, 5 * kDay + 15 * 3600.0, 5 * kDay + 16 * 3600.0},
    };
    EvalConfig cfg;
    auto cases_a = build_eval_cases(g, contracts, cfg);
    auto cases_b = build_eval_cases(noisy, contracts, cfg);
    REQUIRE(cases_a.size() == cases_b.size());

    auto rep_a = evaluate(g, text_embedder(g), cases_a, cfg, "a");
    auto rep_b = evaluate(noisy, text_embedder(noisy), cases_b, cfg, "b");
    CHECK(rep_a.fl2jp.overall.ndcg == rep_b.fl2jp.overall.ndcg);
    CHECK(rep_a.jp2fl.overall.ndcg == rep_b.jp2fl.overall.ndcg);
    CHECK(rep_a.fl2jp.query_cold.cases == rep_b.fl2jp.query_cold.cases);
}

TEST_CASE("report serialization carries every slice") {
    EvalReport rep;
    rep.model_id = "m";
    rep.fl2jp.overall = {0.5, 10};
    rep.jp2fl.query_cold = {0.25, 4};
    json j = rep.to_json();
    CHECK(j.at("model") == "m");
    CHECK(j.at("fl2jp").at("overall").at("ndcg") == 0.5);
    CHECK(j.at("jp2fl").at("query_cold").at("cases") == 4);
    CHECK(rep.to_table().find("fl->jp") != std::string::npos);
}
