#include "helpers.hpp"
#include "pipeline.hpp"
#include "service.hpp"

#include <doctest.h>

#include <arpa/inet.h>
#include <sys/socket.h>
#include <unistd.h>

#include <fstream>

using namespace ttag;

namespace {

// One tiny end-to-end pipeline shared by the whole translation unit.
struct PipelineFixture {
    std::filesystem::path root, raw, emb, text_model, quints, gm;

    PipelineFixture() {
        root = std::filesystem::temp_directory_path() / "ttag_pipe_fixture";
        std::filesystem::remove_all(root);
        std::filesystem::create_directories(root);
        raw = root / "raw";
        emb = root / "emb";
        text_model = root / "text.bin";
        quints = root / "quints.jsonl";
        gm = root / "gm.bin";

        WorldConfig w;
        w.freelancers = 250;
        w.clients = 60;
        w.job_posts = 450;
        w.train_days = 25;
        w.val_days = 3;
        w.eval_days = 3;
        w.seed = 7;
        stage_gen(w, raw);

        TextModelConfig tc;
        tc.vocab_size = w.vocab_size;
        tc.dim = 24;
        tc.epochs = 1;
        tc.learning_rate = 1e-3;
        tc.batch_size = 64;
        tc.seed = 7;
        stage_train_text(raw, tc, text_model);
        stage_embed_all(raw, text_model, emb);

        MiningParams mp;
        mp.ann_candidates = 60;
        mp.negatives_per_positive = 6;
        mp.rng_seed = 7;
        stage_mine(emb, mp, 4, true, true, quints);

        ModelConfig mc;
        mc.out_dim = 16;
        mc.hidden_dim = 16;
        mc.steps = 6;
        mc.batch_size = 6;
        mc.checkpoint_every = 3;
        mc.seed = 7;
        stage_train_graph(emb, mc, quints, gm);
    }
};

PipelineFixture& fixture() {
    static PipelineFixture f;
    return f;
}

std::string request_over_socket(int port, const std::string& payload) {
    int fd = socket(AF_INET, SOCK_STREAM, 0);
    REQUIRE(fd >= 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(uint16_t(port));
    inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    REQUIRE(connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0);
    std::string line = payload + "\n";
    REQUIRE(write(fd, line.data(), line.size()) == ssize_t(line.size()));
    std::string out;
    char buf[4096];
    while (out.find('\n') == std::string::npos) {
        ssize_t n = read(fd, buf, sizeof buf);
        REQUIRE(n > 0);
        out.append(buf, size_t(n));
    }
    close(fd);
    return out.substr(0, out.find('\n'));
}

}  // namespace

TEST_CASE("pipeline stages produce a usable dataset and checkpoint") {
    auto& f = fixture();
    TemporalGraph g = load_store(f.emb);
    CHECK(g.text_dim() == 24);

    auto contracts = load_contracts(f.emb);
    auto splits = load_splits(f.emb);
    auto train = labels_for_split(g, contracts, splits, "train");
    auto eval = labels_for_split(g, contracts, splits, "eval");
    CHECK(train.size() > eval.size());
    CHECK(!eval.empty());
    // Both query directions per contract.
    CHECK(train.size() % 2 == 0);

    auto qs = load_quintuples(f.quints, g);
    size_t adv = 0, rnd = 0;
    for (const auto& q : qs) (q.kind == NegKind::Adversarial ? adv : rnd)++;
    CHECK(adv > 0);
    CHECK(rnd > 0);

    GraphModel model = GraphModel::load(f.gm);
    CHECK(model.schema().text_dim == 24);

    EvalConfig ec;
    EvalReport text_rep = stage_eval(f.emb, "", ec);
    CHECK(text_rep.fl2jp.overall.cases > 0);
    CHECK(text_rep.fl2jp.overall.ndcg >= 0.0);
    EvalReport gm_rep = stage_eval(f.emb, f.gm, ec);
    CHECK(gm_rep.fl2jp.overall.cases == text_rep.fl2jp.overall.cases);
}

TEST_CASE("service answers match the offline model bit for bit") {
    auto& f = fixture();
    ServiceConfig sc;
    sc.dataset_dir = f.emb;
    sc.checkpoint = f.gm;
    EmbedService svc(sc);

    TemporalGraph g = load_store(f.emb);
    GraphModel model = GraphModel::load(f.gm);

    std::mt19937_64 rng(3);
    std::vector<NodeRef> nodes;
    for (NodeRef v : g.all_nodes()) nodes.push_back(v);
    for (int i = 0; i < 40; ++i) {
        NodeRef v = nodes[rng() % nodes.size()];
        double t = std::uniform_real_distribution<double>(0.0, 30 * 86400.0)(rng);
        json req = {{"op", "embed"},
                    {"node_type", g.type_names()[v.type]},
                    {"node_id", v.id},
                    {"timestamp", t}};
        json resp = svc.handle_request(req);
        REQUIRE(resp.at("ok").get<bool>());
        auto arr = resp.at("embedding").get<std::vector<double>>();
        Vec offline = model.embed_node(g, v, t);
        REQUIRE(arr.size() == size_t(offline.size()));
        for (size_t d = 0; d < arr.size(); ++d) REQUIRE(arr[d] == offline[Eigen::Index(d)]);
        CHECK(resp.at("latency_us").get<int64_t>() >= 1);
        CHECK(resp.at("checkpoint").is_string());
    }
}

TEST_CASE("service error handling and caching") {
    auto& f = fixture();
    ServiceConfig sc;
    sc.dataset_dir = f.emb;
    sc.checkpoint = f.gm;
    EmbedService svc(sc);

    SUBCASE("malformed line reports the parse position") {
        json r = svc.handle_line("{\"op\": \"embed\", ");
        CHECK(!r.at("ok").get<bool>());
        CHECK(r.at("error").get<std::string>().find("parse") != std::string::npos);
    }
    SUBCASE("unknown op, type and id are rejected") {
        CHECK(!svc.handle_request({{"op", "frobnicate"}}).at("ok").get<bool>());
        json bad_type = {{"op", "embed"}, {"node_type", "ghost"}, {"node_id", 1}};
        CHECK(!svc.handle_request(bad_type).at("ok").get<bool>());
        json bad_id = {{"op", "embed"}, {"node_type", "freelancer"}, {"node_id", 10000000}};
        CHECK(!svc.handle_request(bad_id).at("ok").get<bool>());
    }
    SUBCASE("repeat embeds hit the cache and stats aggregate") {
        json req = {{"op", "embed"},
                    {"node_type", "freelancer"},
                    {"node_id", 1},
                    {"timestamp", 20 * 86400.0}};
        json first = svc.handle_request(req);
        json second = svc.handle_request(req);
        REQUIRE(first.at("ok").get<bool>());
        CHECK(second.at("cache_hit").get<bool>());
        CHECK(first.at("embedding") == second.at("embedding"));

        json stats = svc.handle_request({{"op", "stats"}});
        CHECK(stats.at("ok").get<bool>());
        CHECK(stats.at("requests").get<size_t>() >= 2);
        CHECK(stats.at("cache_hit_rate").get<double>() > 0.0);
        CHECK(stats.contains("p50_us"));
        CHECK(stats.contains("p99_us"));
    }
    SUBCASE("timestamps before every version flag default features") {
        json req = {{"op", "embed"},
                    {"node_type", "freelancer"},
                    {"node_id", 1},
                    {"timestamp", -5.0}};
        json r = svc.handle_request(req);
        REQUIRE(r.at("ok").get<bool>());
        CHECK(r.at("default_features").get<bool>());
    }
    SUBCASE("reload swaps the checkpoint") {
        json before = svc.handle_request({{"op", "stats"}});
        json r = svc.handle_request(
            {{"op", "reload"}, {"checkpoint", f.gm.string()}});
        CHECK(r.at("ok").get<bool>());
        json after = svc.handle_request({{"op", "stats"}});
        CHECK(after.at("checkpoint") == before.at("checkpoint"));
    }
}

TEST_CASE("service round trip over a real socket") {
    auto& f = fixture();
    ServiceConfig sc;
    sc.dataset_dir = f.emb;
    sc.checkpoint = f.gm;
    EmbedService svc(sc);
    svc.start();
    REQUIRE(svc.bound_port() > 0);

    json req = {{"op", "embed"},
                {"node_type", "job_post"},
                {"node_id", 1},
                {"timestamp", 10 * 86400.0}};
    json resp = json::parse(request_over_socket(svc.bound_port(), req.dump()));
    CHECK(resp.at("ok").get<bool>());
    CHECK(resp.at("embedding").size() == 16);

    json bad = json::parse(request_over_socket(svc.bound_port(), "not json"));
    CHECK(!bad.at("ok").get<bool>());
    svc.stop();
}
