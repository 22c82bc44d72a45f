#include "pipeline.hpp"

#include <algorithm>

namespace ttag {

namespace {

constexpr double kDay = 86400.0;

std::vector<Contract> split_contracts(const std::vector<Contract>& all, const SplitSpec& splits,
                                      const std::string& split) {
    int lo = 0, hi = 0;
    if (split == "train")
        lo = 0, hi = splits.train_end_day;
    else if (split == "val")
        lo = splits.train_end_day, hi = splits.val_end_day;
    else if (split == "eval")
        lo = splits.val_end_day, hi = splits.eval_end_day;
    else
        throw Error("unknown split: " + split);
    std::vector<Contract> out;
    for (const auto& c : all) {
        int d = int(c.t_end / kDay);
        if (d >= lo && d < hi) out.push_back(c);
    }
    return out;
}

}  // namespace

json stage_gen(const WorldConfig& cfg, const std::filesystem::path& out_dir) {
    generate(cfg, out_dir);
    return describe(out_dir);
}

json stage_train_text(const std::filesystem::path& dataset, const TextModelConfig& cfg_in,
                      const std::filesystem::path& model_out) {
    TextModelConfig cfg = cfg_in;
    json schema = read_json_file(dataset / "schema.json");
    cfg.vocab_size = schema.value("vocab_size", cfg.vocab_size);

    auto weak = load_pairs(dataset / "weak_pairs.jsonl");
    auto strong = load_pairs(dataset / "strong_pairs.jsonl");
    if (weak.empty() && strong.empty()) throw Error("no training pairs in " + dataset.string());

    DualEncoder enc(cfg);
    auto weak_losses = enc.train_stage(weak, TrainStage::Weak);
    auto strong_losses = enc.train_stage(strong, TrainStage::Strong);
    enc.save(model_out);
    return {{"weak_pairs", weak.size()},
            {"strong_pairs", strong.size()},
            {"weak_epoch_losses", weak_losses},
            {"strong_epoch_losses", strong_losses},
            {"model", model_out.string()}};
}

json stage_embed_all(const std::filesystem::path& dataset,
                     const std::filesystem::path& text_model,
                     const std::filesystem::path& out_dir) {
    DualEncoder enc = DualEncoder::load(text_model);
    std::filesystem::create_directories(out_dir);
    for (const char* name : {"nodes.jsonl", "edges.jsonl", "activity.jsonl", "weak_pairs.jsonl",
                             "strong_pairs.jsonl", "contracts.jsonl", "splits.json"})
        std::filesystem::copy_file(dataset / name, out_dir / name,
                                   std::filesystem::copy_options::overwrite_existing);
    json schema = read_json_file(dataset / "schema.json");
    schema["text_dim"] = enc.config().dim;
    write_json_file(out_dir / "schema.json", schema);

    size_t embedded = embed_all_nodes(enc, dataset, out_dir);

    json files = json::object();
    for (const auto& entry : std::filesystem::directory_iterator(out_dir))
        if (entry.is_regular_file() && entry.path().filename() != "manifest.json")
            files[entry.path().filename().string()] = sha256_file(entry.path());
    write_json_file(out_dir / "manifest.json",
                    {{"source", dataset.string()},
                     {"text_model", text_model.string()},
                     {"files", files}});
    return {{"versions_embedded", embedded}, {"out", out_dir.string()}};
}

std::vector<MatchLabel> labels_for_split(const TemporalGraph& g,
                                         const std::vector<Contract>& contracts,
                                         const SplitSpec& splits, const std::string& split) {
    TypeId fl_t = g.type_id("freelancer");
    TypeId jp_t = g.type_id("job_post");
    std::vector<MatchLabel> labels;
    for (const auto& c : split_contracts(contracts, splits, split)) {
        NodeRef fl{fl_t, c.fl_id}, jp{jp_t, c.jp_id};
        labels.push_back({fl, jp, c.t_start, c.t_end});
        labels.push_back({jp, fl, c.t_start, c.t_end});
    }
    return labels;
}

json stage_mine(const std::filesystem::path& dataset, const MiningParams& params,
                size_t random_per_label, bool adversarial, bool random,
                const std::filesystem::path& out_file) {
    TemporalGraph g = load_store(dataset);
    auto labels = labels_for_split(g, load_contracts(dataset), load_splits(dataset), "train");
    if (labels.empty()) throw Error("no train-split contracts to mine from");

    std::vector<TrainingQuintuple> quints;
    MiningReport report;
    if (adversarial) {
        auto indices = build_type_indices(g);
        quints = mine_adversarial(g, indices, labels, params, &report);
    }
    if (random) {
        auto rnd = sample_random_negatives(g, labels, random_per_label, params.rng_seed);
        report.random = rnd.size();
        report.labels = labels.size();
        quints.insert(quints.end(), rnd.begin(), rnd.end());
    }
    save_quintuples(out_file, g, quints);
    json j = report.to_json();
    j["quintuples"] = quints.size();
    j["out"] = out_file.string();
    return j;
}

json stage_train_graph(const std::filesystem::path& dataset, const ModelConfig& cfg,
                       const std::filesystem::path& quints_file,
                       const std::filesystem::path& model_out) {
    TemporalGraph g = load_store(dataset);
    auto contracts = load_contracts(dataset);
    auto splits = load_splits(dataset);
    auto train_labels = labels_for_split(g, contracts, splits, "train");
    auto val_labels = labels_for_split(g, contracts, splits, "val");
    auto quints = load_quintuples(quints_file, g);

    GraphModel model(cfg, GraphSchema::of(g));
    TrainResult res = model.train(g, train_labels, quints, val_labels);
    model.save(model_out);

    json losses = json::array();
    for (double l : res.train_losses) losses.push_back(l);
    json val_hist = json::array();
    for (auto& [step, loss] : res.val_history) val_hist.push_back({{"step", step}, {"loss", loss}});
    return {{"train_labels", train_labels.size()},
            {"val_labels", val_labels.size()},
            {"quintuples", quints.size()},
            {"best_step", res.best_step},
            {"best_val_loss", res.best_val_loss},
            {"final_val_loss", res.final_val_loss},
            {"train_losses", losses},
            {"val_history", val_hist},
            {"model", model_out.string()}};
}

EvalReport stage_eval(const std::filesystem::path& dataset,
                      const std::filesystem::path& checkpoint, const EvalConfig& cfg) {
    TemporalGraph g = load_store(dataset);
    auto eval_contracts =
        split_contracts(load_contracts(dataset), load_splits(dataset), "eval");
    size_t skipped = 0;
    auto cases = build_eval_cases(g, eval_contracts, cfg, &skipped);

    EvalReport rep;
    if (checkpoint.empty()) {
        rep = evaluate(g, text_embedder(g), cases, cfg, "text-baseline");
    } else {
        GraphModel model = GraphModel::load(checkpoint);
        rep = evaluate(g, cached_model_embedder(model, g), cases, cfg,
                       checkpoint.filename().string());
    }
    rep.skipped_days = skipped;
    return rep;
}

json run_ablation_grid(const std::filesystem::path& dataset, const ModelConfig& base,
                       const std::filesystem::path& quints_all,
                       const std::filesystem::path& quints_random, const EvalConfig& ecfg,
                       const std::filesystem::path& workdir,
                       const std::vector<std::string>& variants) {
    std::vector<std::string> todo = variants;
    if (todo.empty())
        todo = {"text", "full", "random_negs", "no_text", "no_temporal_graph",
                "no_temporal_nodes"};
    std::filesystem::create_directories(workdir);

    TemporalGraph g = load_store(dataset);
    auto contracts = load_contracts(dataset);
    auto splits = load_splits(dataset);
    auto train_labels = labels_for_split(g, contracts, splits, "train");
    auto val_labels = labels_for_split(g, contracts, splits, "val");
    auto eval_contracts = split_contracts(contracts, splits, "eval");
    size_t skipped = 0;
    auto cases = build_eval_cases(g, eval_contracts, ecfg, &skipped);

    json out = json::object();
    out["eval_cases"] = cases.size();
    for (const std::string& name : todo) {
        if (name == "text") {
            EvalReport rep = evaluate(g, text_embedder(g), cases, ecfg, "text-baseline");
            rep.skipped_days = skipped;
            out[name] = rep.to_json();
            continue;
        }
        ModelConfig cfg = base;
        std::filesystem::path quints_file = quints_all;
        if (name == "random_negs")
            quints_file = quints_random;
        else if (name == "no_text")
            cfg.use_text = false;
        else if (name == "no_temporal_graph") {
            // Static-snapshot ablation: every query sees the graph frozen at
            // the end of the training window instead of its own as-of cut.
            cfg.sampler.temporal_edges = false;
            cfg.sampler.static_cut = splits.train_end_day * 86400.0;
        } else if (name == "no_temporal_nodes") {
            cfg.sampler.temporal_features = false;
            cfg.sampler.static_cut = splits.train_end_day * 86400.0;
        }
        else if (name != "full")
            throw Error("unknown ablation variant: " + name);

        auto quints = load_quintuples(quints_file, g);
        GraphModel model(cfg, GraphSchema::of(g));
        TrainResult res = model.train(g, train_labels, quints, val_labels);
        std::filesystem::path ckpt = workdir / (name + ".bin");
        model.save(ckpt);
        EvalReport rep = evaluate(g, cached_model_embedder(model, g), cases, ecfg, name);
        rep.skipped_days = skipped;
        json j = rep.to_json();
        j["best_val_loss"] = res.best_val_loss;
        j["checkpoint"] = ckpt.string();
        out[name] = j;
    }
    return out;
}

}  // namespace ttag
