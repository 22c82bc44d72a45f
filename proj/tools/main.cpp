#include "pipeline.hpp"
#include "service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <ctime>
#include <iostream>

using namespace ttag;

namespace {

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

TextModelConfig text_config_from_json(const json& j) {
    TextModelConfig c;
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.dim = j.value("dim", c.dim);
    c.temperature = j.value("temperature", c.temperature);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.max_hard_negatives = j.value("max_hard_negatives", c.max_hard_negatives);
    c.seed = j.value("seed", c.seed);
    return c;
}

int fail(const std::string& sub, const std::exception& e) {
    std::cerr << json{{"ok", false}, {"subcommand", sub}, {"error", e.what()}}.dump()
              << std::endl;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal text-attributed graph matching pipeline"};
    app.require_subcommand(1);

    // gen ---------------------------------------------------------------
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    std::string gen_out, gen_config;
    uint64_t gen_seed = 7;
    bool gen_seed_set = false;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--config", gen_config, "world config JSON file");
    gen->add_option("--seed", gen_seed, "world seed")->each([&](const std::string&) {
        gen_seed_set = true;
    });

    // inspect -----------------------------------------------------------
    auto* inspect = app.add_subcommand("inspect", "dataset statistics");
    std::string ins_data;
    inspect->add_option("--data", ins_data, "dataset directory")->required();

    // train-text --------------------------------------------------------
    auto* ttx = app.add_subcommand("train-text", "train the dual text encoder");
    std::string ttx_data, ttx_out, ttx_config;
    uint64_t ttx_seed = 1;
    bool ttx_seed_set = false;
    ttx->add_option("--data", ttx_data)->required();
    ttx->add_option("--out", ttx_out, "encoder checkpoint path")->required();
    ttx->add_option("--config", ttx_config, "encoder config JSON file");
    ttx->add_option("--seed", ttx_seed)->each([&](const std::string&) { ttx_seed_set = true; });

    // embed-all ---------------------------------------------------------
    auto* ea = app.add_subcommand("embed-all", "precompute text embeddings for every version");
    std::string ea_data, ea_model, ea_out;
    ea->add_option("--data", ea_data)->required();
    ea->add_option("--model", ea_model, "encoder checkpoint")->required();
    ea->add_option("--out", ea_out, "output dataset directory")->required();

    // mine --------------------------------------------------------------
    auto* mine = app.add_subcommand("mine", "mine training negatives");
    std::string mine_data, mine_out;
    MiningParams mp;
    size_t mine_random = 10;
    bool mine_no_adv = false, mine_no_rand = false;
    mine->add_option("--data", mine_data, "embedded dataset directory")->required();
    mine->add_option("--out", mine_out, "quintuple JSONL path")->required();
    mine->add_option("--seed", mp.rng_seed);
    mine->add_option("--ann-candidates", mp.ann_candidates);
    mine->add_option("--negatives", mp.negatives_per_positive, "adversarial per positive");
    mine->add_option("--sigma-low", mp.sigma_low);
    mine->add_option("--sigma-high", mp.sigma_high);
    mine->add_option("--random-per-label", mine_random);
    mine->add_flag("--no-adversarial", mine_no_adv);
    mine->add_flag("--no-random", mine_no_rand);

    // train-graph -------------------------------------------------------
    auto* tg = app.add_subcommand("train-graph", "train the graph embedding model");
    std::string tg_data, tg_quints, tg_out, tg_config, tg_conv;
    uint64_t tg_seed = 0;
    size_t tg_steps = 0;
    bool tg_no_text = false, tg_no_numeric = false, tg_static_graph = false,
         tg_static_features = false;
    tg->add_option("--data", tg_data, "embedded dataset directory")->required();
    tg->add_option("--quints", tg_quints, "mined quintuple file")->required();
    tg->add_option("--out", tg_out, "model checkpoint path")->required();
    tg->add_option("--config", tg_config, "model config JSON file");
    tg->add_option("--seed", tg_seed);
    tg->add_option("--steps", tg_steps);
    tg->add_option("--conv", tg_conv)->check(CLI::IsMember({"mean", "attention"}));
    tg->add_flag("--no-text", tg_no_text);
    tg->add_flag("--no-numeric", tg_no_numeric);
    tg->add_flag("--static-graph", tg_static_graph, "ignore edge timestamps when sampling");
    tg->add_flag("--static-features", tg_static_features, "always use newest features");

    // eval --------------------------------------------------------------
    auto* ev = app.add_subcommand("eval", "daily-pool retrieval evaluation");
    std::string ev_data, ev_ckpt, ev_out;
    bool ev_text = false;
    int ev_window = 7;
    ev->add_option("--data", ev_data, "embedded dataset directory")->required();
    ev->add_option("--checkpoint", ev_ckpt, "graph model checkpoint");
    ev->add_flag("--text-baseline", ev_text, "rank by stored text embeddings");
    ev->add_option("--window-days", ev_window);
    ev->add_option("--out", ev_out, "write the report JSON here too");

    // ablate ------------------------------------------------------------
    auto* ab = app.add_subcommand("ablate", "train + evaluate the comparison grid");
    std::string ab_data, ab_quints, ab_quints_rand, ab_workdir, ab_config, ab_variants;
    uint64_t ab_seed = 0;
    size_t ab_steps = 0;
    ab->add_option("--data", ab_data, "embedded dataset directory")->required();
    ab->add_option("--quints", ab_quints, "adversarial+random quintuples")->required();
    ab->add_option("--quints-random", ab_quints_rand, "random-only quintuples")->required();
    ab->add_option("--workdir", ab_workdir, "checkpoint output directory")->required();
    ab->add_option("--config", ab_config, "model config JSON file");
    ab->add_option("--seed", ab_seed);
    ab->add_option("--steps", ab_steps);
    ab->add_option("--variants", ab_variants, "comma-separated subset");

    // embed -------------------------------------------------------------
    auto* em = app.add_subcommand("embed", "print one embedding");
    std::string em_data, em_ckpt, em_type;
    uint64_t em_id = 0;
    double em_t = 0.0;
    bool em_t_set = false;
    em->add_option("--data", em_data)->required();
    em->add_option("--checkpoint", em_ckpt)->required();
    em->add_option("--type", em_type, "node type name")->required();
    em->add_option("--id", em_id, "node id")->required();
    em->add_option("--t", em_t, "as-of timestamp (seconds)")->each([&](const std::string&) {
        em_t_set = true;
    });

    // serve -------------------------------------------------------------
    auto* sv = app.add_subcommand("serve", "run the embedding service");
    ServiceConfig scfg;
    sv->add_option("--data", scfg.dataset_dir)->required();
    sv->add_option("--checkpoint", scfg.checkpoint)->required();
    sv->add_option("--host", scfg.host);
    sv->add_option("--port", scfg.port);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (gen->parsed()) {
        try {
            WorldConfig cfg;
            if (!gen_config.empty()) cfg = WorldConfig::from_json(read_json_file(gen_config));
            if (gen_seed_set || gen_config.empty()) cfg.seed = gen_seed;
            std::cout << stage_gen(cfg, gen_out).dump(2) << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("gen", e);
        }
    }
    if (inspect->parsed()) {
        try {
            std::cout << describe(ins_data).dump(2) << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("inspect", e);
        }
    }
    if (ttx->parsed()) {
        try {
            TextModelConfig cfg;
            if (!ttx_config.empty()) cfg = text_config_from_json(read_json_file(ttx_config));
            if (ttx_seed_set) cfg.seed = ttx_seed;
            std::cout << stage_train_text(ttx_data, cfg, ttx_out).dump(2) << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("train-text", e);
        }
    }
    if (ea->parsed()) {
        try {
            std::cout << stage_embed_all(ea_data, ea_model, ea_out).dump(2) << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("embed-all", e);
        }
    }
    if (mine->parsed()) {
        try {
            std::cout << stage_mine(mine_data, mp, mine_random, !mine_no_adv, !mine_no_rand,
                                    mine_out)
                             .dump(2)
                      << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("mine", e);
        }
    }
    if (tg->parsed()) {
        try {
            ModelConfig cfg;
            if (!tg_config.empty()) cfg = ModelConfig::from_json(read_json_file(tg_config));
            if (tg_seed != 0) cfg.seed = tg_seed;
            if (tg_steps != 0) cfg.steps = tg_steps;
            if (!tg_conv.empty())
                cfg.conv_kind = tg_conv == "mean" ? ConvKind::Mean : ConvKind::Attention;
            if (tg_no_text) cfg.use_text = false;
            if (tg_no_numeric) cfg.use_numeric = false;
            if (tg_static_graph) cfg.sampler.temporal_edges = false;
            if (tg_static_features) cfg.sampler.temporal_features = false;
            std::cout << stage_train_graph(tg_data, cfg, tg_quints, tg_out).dump(2) << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("train-graph", e);
        }
    }
    if (ev->parsed()) {
        if (ev_ckpt.empty() && !ev_text) {
            std::cerr << "eval: either --checkpoint or --text-baseline is required\n"
                      << ev->help();
            return 2;
        }
        try {
            EvalConfig cfg;
            cfg.window_days = ev_window;
            EvalReport rep = stage_eval(ev_data, ev_text ? "" : ev_ckpt, cfg);
            std::cerr << rep.to_table();
            std::cout << rep.to_json().dump(2) << std::endl;
            if (!ev_out.empty()) write_json_file(ev_out, rep.to_json());
            return 0;
        } catch (const std::exception& e) {
            return fail("eval", e);
        }
    }
    if (ab->parsed()) {
        try {
            ModelConfig cfg;
            if (!ab_config.empty()) cfg = ModelConfig::from_json(read_json_file(ab_config));
            if (ab_seed != 0) cfg.seed = ab_seed;
            if (ab_steps != 0) cfg.steps = ab_steps;
            std::vector<std::string> variants;
            for (size_t pos = 0; pos < ab_variants.size();) {
                size_t comma = ab_variants.find(',', pos);
                if (comma == std::string::npos) comma = ab_variants.size();
                if (comma > pos) variants.push_back(ab_variants.substr(pos, comma - pos));
                pos = comma + 1;
            }
            EvalConfig ecfg;
            std::cout << run_ablation_grid(ab_data, cfg, ab_quints, ab_quints_rand, ecfg,
                                           ab_workdir, variants)
                             .dump(2)
                      << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("ablate", e);
        }
    }
    if (em->parsed()) {
        try {
            TemporalGraph g = load_store(em_data);
            GraphModel model = GraphModel::load(em_ckpt);
            double t = em_t_set ? em_t : double(std::time(nullptr));
            bool degenerate = false;
            Vec v = model.embed_node(g, {g.type_id(em_type), em_id}, t, false, &degenerate);
            json out = {{"ok", true},
                        {"embedding", std::vector<double>(v.data(), v.data() + v.size())},
                        {"degenerate", degenerate}};
            std::cout << out.dump() << std::endl;
            return 0;
        } catch (const std::exception& e) {
            return fail("embed", e);
        }
    }
    if (sv->parsed()) {
        try {
            EmbedService service(scfg);
            service.start();
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << json{{"listening", true},
                              {"host", scfg.host},
                              {"port", service.bound_port()}}
                             .dump()
                      << std::endl;
            while (!g_stop) {
                struct timespec ts = {0, 100 * 1000 * 1000};
                nanosleep(&ts, nullptr);
            }
            service.stop();
            return 0;
        } catch (const std::exception& e) {
            return fail("serve", e);
        }
    }
    return 2;
}
