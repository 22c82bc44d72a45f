#include "negmine.hpp"

#include "text_model.hpp"

#include <algorithm>
#include <random>

namespace ttag {

json MiningReport::to_json() const {
    return {{"labels", labels},
            {"skipped_cold_queries", skipped_cold_queries},
            {"adversarial", adversarial},
            {"random", random},
            {"band_rejections", band_rejections}};
}

namespace {

double sample_in_activity(const std::vector<ActivityPeriod>& periods, std::mt19937_64& rng) {
    std::uniform_int_distribution<size_t> pick(0, periods.size() - 1);
    const auto& p = periods[pick(rng)];
    std::uniform_real_distribution<double> t(p.t_start, p.t_end);
    return t(rng);
}

}  // namespace

std::vector<TrainingQuintuple> mine_adversarial(
    const TemporalGraph& g, const std::unordered_map<TypeId, TypeIndex>& indices,
    const std::vector<MatchLabel>& labels, const MiningParams& params, MiningReport* report) {
    if (!(0.0 <= params.sigma_low && params.sigma_low < params.sigma_high &&
          params.sigma_high <= 1.0))
        throw Error("mine_adversarial: need 0 <= sigma_low < sigma_high <= 1");

    MiningReport local;
    MiningReport& rep = report ? *report : local;
    rep.labels += labels.size();

    std::vector<TrainingQuintuple> out;
    for (size_t li = 0; li < labels.size(); ++li) {
        const auto& label = labels[li];
        auto idx_it = indices.find(label.positive.type);
        if (idx_it == indices.end())
            throw Error("mine_adversarial: no index for positive node type");
        std::mt19937_64 rng(mix_seed(params.rng_seed, li));
        std::uniform_real_distribution<double> tpos_dist(label.t_start, label.t_end);
        double t_pos = tpos_dist(rng);

        Vec e_q = g.text_embedding_at(label.query, t_pos);
        if (e_q.norm() < 1e-12) {
            ++rep.skipped_cold_queries;
            continue;
        }

        auto cand_ids = idx_it->second.knn(e_q, params.ann_candidates);
        const auto& entries = idx_it->second.entries();
        std::vector<std::pair<NodeRef, double>> survivors;
        for (size_t ci : cand_ids) {
            const auto& entry = entries[ci];
            double t_neg = sample_in_activity(entry.periods, rng);
            Vec e_n = g.text_embedding_at(entry.node, t_neg);
            double s = cosine_sim(e_q, e_n);
            if (params.sigma_low < s && s < params.sigma_high && entry.node != label.positive) {
                survivors.emplace_back(entry.node, t_neg);
            } else {
                int bin = int((s + 1.0) * 10.0);
                bin = std::clamp(bin, 0, 19);
                ++rep.band_rejections[size_t(bin)];
            }
        }

        size_t take = std::min(params.negatives_per_positive, survivors.size());
        // Partial Fisher-Yates: uniform subsample without replacement.
        for (size_t k = 0; k < take; ++k) {
            std::uniform_int_distribution<size_t> pick(k, survivors.size() - 1);
            std::swap(survivors[k], survivors[pick(rng)]);
        }
        for (size_t k = 0; k < take; ++k) {
            out.push_back({label.query, label.positive, t_pos, survivors[k].first,
                           survivors[k].second, NegKind::Adversarial});
            ++rep.adversarial;
        }
    }
    return out;
}

std::vector<TrainingQuintuple> sample_random_negatives(const TemporalGraph& g,
                                                       const std::vector<MatchLabel>& labels,
                                                       size_t count_per_label, uint64_t seed) {
    // Per-type pools of nodes with at least one activity period.
    std::unordered_map<TypeId, std::vector<NodeRef>> pools;
    for (NodeRef v : g.all_nodes())
        if (!g.main_record(v).activity.empty()) pools[v.type].push_back(v);

    std::vector<TrainingQuintuple> out;
    for (size_t li = 0; li < labels.size(); ++li) {
        const auto& label = labels[li];
        auto pit = pools.find(label.positive.type);
        if (pit == pools.end() || pit->second.empty())
            throw Error("sample_random_negatives: empty candidate pool for positive type");
        const auto& pool = pit->second;
        if (pool.size() == 1 && pool[0] == label.positive)
            throw Error("sample_random_negatives: pool contains only the positive node");

        std::mt19937_64 rng(mix_seed(seed, li) ^ 0x5eedULL);
        std::uniform_real_distribution<double> tpos_dist(label.t_start, label.t_end);
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        for (size_t k = 0; k < count_per_label; ++k) {
            double t_pos = tpos_dist(rng);
            NodeRef neg;
            do {
                neg = pool[pick(rng)];
            } while (neg == label.positive);
            double t_neg = sample_in_activity(g.main_record(neg).activity, rng);
            out.push_back({label.query, label.positive, t_pos, neg, t_neg, NegKind::Random});
        }
    }
    return out;
}

void save_quintuples(const std::filesystem::path& file, const TemporalGraph& g,
                     const std::vector<TrainingQuintuple>& quints) {
    std::vector<json> rows;
    rows.reserve(quints.size());
    for (const auto& q : quints) {
        rows.push_back({{"query_type", g.type_names()[q.query.type]},
                        {"query_id", q.query.id},
                        {"pos_type", g.type_names()[q.positive.type]},
                        {"pos_id", q.positive.id},
                        {"t_pos", q.t_pos},
                        {"neg_type", g.type_names()[q.negative.type]},
                        {"neg_id", q.negative.id},
                        {"t_neg", q.t_neg},
                        {"neg_kind", q.kind == NegKind::Adversarial ? "adversarial" : "random"}});
    }
    write_jsonl(file, rows);
}

std::vector<TrainingQuintuple> load_quintuples(const std::filesystem::path& file,
                                               const TemporalGraph& g) {
    std::vector<TrainingQuintuple> out;
    for (const auto& row : read_jsonl(file)) {
        TrainingQuintuple q;
        q.query = {g.type_id(row.at("query_type")), row.at("query_id").get<uint64_t>()};
        q.positive = {g.type_id(row.at("pos_type")), row.at("pos_id").get<uint64_t>()};
        q.t_pos = row.at("t_pos").get<double>();
        q.negative = {g.type_id(row.at("neg_type")), row.at("neg_id").get<uint64_t>()};
        q.t_neg = row.at("t_neg").get<double>();
        q.kind = row.at("neg_kind").get<std::string>() == "adversarial" ? NegKind::Adversarial
                                                                        : NegKind::Random;
        out.push_back(q);
    }
    return out;
}

}  // namespace ttag
