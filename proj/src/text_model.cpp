#include "text_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace ttag {

InfoNceResult infonce_loss(const ContrastiveBatch& batch) {
    if (batch.temperature <= 0.0) throw Error("infonce_loss: temperature must be positive");
    size_t B = batch.queries.size();
    size_t M = batch.extra_negatives.size();
    if (B == 0) throw Error("infonce_loss: empty batch");
    if (batch.positives.size() != B)
        throw Error("infonce_loss: queries and positives must align");

    double tau = batch.temperature;
    InfoNceResult res;
    res.d_queries.assign(B, Vec());
    res.d_positives.assign(B, Vec());
    res.d_negatives.assign(M, Vec());
    for (size_t i = 0; i < B; ++i) res.d_positives[i] = Vec::Zero(batch.positives[i].size());
    for (size_t j = 0; j < M; ++j) res.d_negatives[j] = Vec::Zero(batch.extra_negatives[j].size());

    for (size_t i = 0; i < B; ++i) {
        const Vec& q = batch.queries[i];
        std::vector<double> logits(B + M);
        for (size_t j = 0; j < B; ++j) logits[j] = q.dot(batch.positives[j]) / tau;
        for (size_t j = 0; j < M; ++j) logits[B + j] = q.dot(batch.extra_negatives[j]) / tau;
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double l : logits) z += std::exp(l - mx);
        double lse = mx + std::log(z);
        res.loss += (lse - logits[i]) / double(B);

        Vec dq = Vec::Zero(q.size());
        for (size_t k = 0; k < B + M; ++k) {
            double pi = std::exp(logits[k] - lse);
            double ds = (pi - (k == i ? 1.0 : 0.0)) / (tau * double(B));
            const Vec& cand = k < B ? batch.positives[k] : batch.extra_negatives[k - B];
            dq += ds * cand;
            if (k < B)
                res.d_positives[k] += ds * q;
            else
                res.d_negatives[k - B] += ds * q;
        }
        res.d_queries[i] = std::move(dq);
    }
    return res;
}

double cosine_sim(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw Error("cosine_sim: dimension mismatch");
    double na = a.norm(), nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 0.0;
    return a.dot(b) / (na * nb);
}

DualEncoder::DualEncoder(const TextModelConfig& cfg) : cfg_(cfg) {
    std::mt19937_64 rng(cfg.seed);
    tok_table_ = ps_.add_init("token_table", Eigen::Index(cfg.vocab_size),
                              Eigen::Index(cfg.dim), rng);
    out_w_ = ps_.add_init("out_w", Eigen::Index(cfg.dim), Eigen::Index(cfg.dim), rng);
    out_b_ = ps_.add("out_b", Eigen::Index(cfg.dim), 1);
}

Vec DualEncoder::encode(const std::vector<uint32_t>& doc) const {
    if (doc.empty()) return Vec::Zero(Eigen::Index(cfg_.dim));
    const Mat& table = ps_[tok_table_].value;
    Vec pooled = Vec::Zero(Eigen::Index(cfg_.dim));
    for (uint32_t id : doc) {
        if (id >= cfg_.vocab_size)
            throw Error("encode: token id " + std::to_string(id) + " outside vocabulary of " +
                        std::to_string(cfg_.vocab_size));
        pooled += table.row(Eigen::Index(id)).transpose();
    }
    pooled /= double(doc.size());
    Vec out = ps_[out_w_].value * pooled + ps_[out_b_].value.col(0);
    return l2_normalize(out);
}

std::vector<double> DualEncoder::train_stage(const std::vector<PairExample>& pairs,
                                             TrainStage stage) {
    if (stage == TrainStage::Weak)
        for (const auto& p : pairs)
            if (!p.neg_tokens.empty())
                throw Error("weak stage accepts no hard negatives");

    std::mt19937_64 rng(mix_seed(cfg_.seed, stage == TrainStage::Weak ? 11 : 22));
    std::vector<double> epoch_losses;

    for (size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
        // Task-homogeneous batching: shuffle within each task, then
        // interleave whole batches.
        std::vector<size_t> fl, jp;
        for (size_t i = 0; i < pairs.size(); ++i) {
            if (pairs[i].task == "fl2jp")
                fl.push_back(i);
            else if (pairs[i].task == "jp2fl")
                jp.push_back(i);
            else
                throw Error("unknown task tag: " + pairs[i].task);
        }
        std::shuffle(fl.begin(), fl.end(), rng);
        std::shuffle(jp.begin(), jp.end(), rng);

        double loss_sum = 0.0;
        size_t batches = 0;
        size_t fi = 0, ji = 0;
        while (fi < fl.size() || ji < jp.size()) {
            size_t fl_left = fl.size() - fi, jp_left = jp.size() - ji;
            bool take_fl;
            if (fl_left == 0)
                take_fl = false;
            else if (jp_left == 0)
                take_fl = true;
            else {
                std::uniform_real_distribution<double> u(0.0, 1.0);
                take_fl = u(rng) < double(fl_left) / double(fl_left + jp_left);
            }
            auto& queue = take_fl ? fl : jp;
            size_t& pos = take_fl ? fi : ji;
            size_t n = std::min(cfg_.batch_size, queue.size() - pos);

            Tape tape(&ps_);
            auto embed_doc = [&](const std::vector<uint32_t>& doc) {
                if (doc.empty()) return tape.constant(Vec::Zero(Eigen::Index(cfg_.dim)));
                int pooled = tape.token_mean(tok_table_, doc, Eigen::Index(cfg_.dim));
                return tape.normalize(tape.affine(out_w_, out_b_, pooled));
            };

            ContrastiveBatch batch;
            batch.task = take_fl ? "fl2jp" : "jp2fl";
            batch.temperature = cfg_.temperature;
            std::vector<int> q_ids, p_ids, n_ids;
            for (size_t k = 0; k < n; ++k) {
                const auto& pr = pairs[queue[pos + k]];
                if (pr.task != batch.task) throw Error("mixed-task batch");
                q_ids.push_back(embed_doc(pr.q_tokens));
                p_ids.push_back(embed_doc(pr.p_tokens));
                size_t nneg = std::min(pr.neg_tokens.size(), cfg_.max_hard_negatives);
                for (size_t h = 0; h < nneg; ++h) n_ids.push_back(embed_doc(pr.neg_tokens[h]));
            }
            pos += n;
            for (int id : q_ids) batch.queries.push_back(tape.value(id));
            for (int id : p_ids) batch.positives.push_back(tape.value(id));
            for (int id : n_ids) batch.extra_negatives.push_back(tape.value(id));

            auto res = infonce_loss(batch);
            if (!std::isfinite(res.loss)) throw Error("non-finite training loss");
            loss_sum += res.loss;
            ++batches;

            std::vector<std::pair<int, Vec>> seeds;
            for (size_t k = 0; k < q_ids.size(); ++k) seeds.emplace_back(q_ids[k], res.d_queries[k]);
            for (size_t k = 0; k < p_ids.size(); ++k)
                seeds.emplace_back(p_ids[k], res.d_positives[k]);
            for (size_t k = 0; k < n_ids.size(); ++k)
                seeds.emplace_back(n_ids[k], res.d_negatives[k]);
            ps_.zero_grads();
            tape.backward_multi(seeds);
            ps_.adam_step(cfg_.learning_rate, 0.9, 0.999, 1e-8, cfg_.weight_decay);
        }
        epoch_losses.push_back(batches ? loss_sum / double(batches) : 0.0);
    }
    return epoch_losses;
}

static constexpr char kMagic[4] = {'T', 'T', 'X', 'M'};

void DualEncoder::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(kMagic, 4);
    uint32_t header[3] = {1u, uint32_t(cfg_.vocab_size), uint32_t(cfg_.dim)};
    out.write(reinterpret_cast<const char*>(header), sizeof header);
    json cfg = {{"temperature", cfg_.temperature},
                {"learning_rate", cfg_.learning_rate},
                {"weight_decay", cfg_.weight_decay},
                {"batch_size", cfg_.batch_size},
                {"epochs", cfg_.epochs},
                {"max_hard_negatives", cfg_.max_hard_negatives},
                {"seed", cfg_.seed}};
    std::string blob = cfg.dump();
    uint32_t len = uint32_t(blob.size());
    out.write(reinterpret_cast<const char*>(&len), 4);
    out.write(blob.data(), std::streamsize(blob.size()));
    ps_.save_tensors(out);
}

DualEncoder DualEncoder::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("not a text model file: " + path.string());
    uint32_t header[3];
    in.read(reinterpret_cast<char*>(header), sizeof header);
    if (header[0] != 1u) throw Error("unsupported text model format version");
    uint32_t len = 0;
    in.read(reinterpret_cast<char*>(&len), 4);
    std::string blob(len, '\0');
    in.read(blob.data(), len);
    json cfg_json = json::parse(blob);

    TextModelConfig cfg;
    cfg.vocab_size = header[1];
    cfg.dim = header[2];
    cfg.temperature = cfg_json.at("temperature").get<double>();
    cfg.learning_rate = cfg_json.at("learning_rate").get<double>();
    cfg.weight_decay = cfg_json.value("weight_decay", 0.0);
    cfg.batch_size = cfg_json.at("batch_size").get<size_t>();
    cfg.epochs = cfg_json.at("epochs").get<size_t>();
    cfg.max_hard_negatives = cfg_json.at("max_hard_negatives").get<size_t>();
    cfg.seed = cfg_json.at("seed").get<uint64_t>();

    DualEncoder enc(cfg);
    enc.ps_.load_tensors(in);
    return enc;
}

size_t embed_all_nodes(const DualEncoder& enc, const std::filesystem::path& dataset_dir,
                       const std::filesystem::path& out_dir) {
    auto nodes = read_jsonl(dataset_dir / "nodes.jsonl");
    std::set<std::pair<std::string, uint64_t>> known;
    for (const auto& row : nodes)
        known.emplace(row.at("type").get<std::string>(), row.at("id").get<uint64_t>());

    auto rows = read_jsonl(dataset_dir / "features.jsonl");
    std::vector<std::string> offenders;
    size_t embedded = 0;
    for (auto& row : rows) {
        if (!row.contains("tokens")) continue;
        auto key = std::make_pair(row.at("type").get<std::string>(), row.at("id").get<uint64_t>());
        if (!known.count(key)) {
            offenders.push_back(key.first + "/" + std::to_string(key.second));
            continue;
        }
        Vec emb = enc.encode(row.at("tokens").get<std::vector<uint32_t>>());
        std::vector<double> arr(emb.data(), emb.data() + emb.size());
        row["text_emb"] = arr;
        ++embedded;
    }
    if (!offenders.empty()) {
        std::string msg = "token docs reference unknown nodes:";
        for (const auto& o : offenders) msg += " " + o;
        throw Error(msg);
    }
    std::filesystem::create_directories(out_dir);
    write_jsonl(out_dir / "features.jsonl", rows);
    return embedded;
}

}  // namespace ttag
