#include "evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <sstream>

namespace ttag {

namespace {

constexpr double kDay = 86400.0;

json slice_json(const SliceMetrics& s) {
    return {{"ndcg", s.ndcg}, {"cases", s.cases}};
}

json task_json(const TaskReport& t) {
    return {{"overall", slice_json(t.overall)},
            {"query_cold", slice_json(t.query_cold)},
            {"candidate_cold", slice_json(t.candidate_cold)},
            {"both_cold", slice_json(t.both_cold)},
            {"warm", slice_json(t.warm)}};
}

}  // namespace

json EvalReport::to_json() const {
    return {{"model", model_id},
            {"fl2jp", task_json(fl2jp)},
            {"jp2fl", task_json(jp2fl)},
            {"skipped_days", skipped_days}};
}

std::string EvalReport::to_table() const {
    std::ostringstream os;
    auto row = [&](const std::string& name, const TaskReport& t) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "%-8s %7.4f (%4zu) | qc %7.4f (%3zu)  cc %7.4f (%3zu)  both %7.4f (%3zu)  "
                      "warm %7.4f (%4zu)\n",
                      name.c_str(), t.overall.ndcg, t.overall.cases, t.query_cold.ndcg,
                      t.query_cold.cases, t.candidate_cold.ndcg, t.candidate_cold.cases,
                      t.both_cold.ndcg, t.both_cold.cases, t.warm.ndcg, t.warm.cases);
        os << buf;
    };
    os << "model: " << model_id << "  (NDCG@10, cases)\n";
    row("fl->jp", fl2jp);
    row("jp->fl", jp2fl);
    return os.str();
}

std::vector<EvalCase> build_eval_cases(const TemporalGraph& g,
                                       const std::vector<Contract>& eval_contracts,
                                       const EvalConfig& cfg, size_t* skipped_days) {
    if (skipped_days) *skipped_days = 0;
    if (eval_contracts.empty()) return {};
    TypeId fl_t = g.type_id("freelancer");
    TypeId jp_t = g.type_id("job_post");

    int min_day = std::numeric_limits<int>::max(), max_day = std::numeric_limits<int>::min();
    for (const auto& c : eval_contracts) {
        int d = int(std::floor(c.t_end / kDay));
        min_day = std::min(min_day, d);
        max_day = std::max(max_day, d);
    }
    min_day = std::max(min_day, max_day - cfg.window_days + 1);

    std::vector<EvalCase> cases;
    for (int day = min_day; day <= max_day; ++day) {
        double cut = day * kDay + kDay / 2.0;
        double day_end = (day + 1) * kDay;

        std::vector<NodeRef> jp_pool, fl_pool;
        for (NodeRef v : g.all_nodes()) {
            if (v.type == jp_t && g.is_active(v, cut)) jp_pool.push_back(v);
            if (v.type == fl_t && g.is_active(v, cut)) {
                Vec feats = g.features_at(v, cut);
                if (feats[0] > cfg.completion_min &&
                    g.has_incident_edge_in(v, cut - cfg.recency_window, cut))
                    fl_pool.push_back(v);
            }
        }
        std::sort(jp_pool.begin(), jp_pool.end());
        std::sort(fl_pool.begin(), fl_pool.end());
        if (jp_pool.empty() && fl_pool.empty()) {
            if (skipped_days) ++(*skipped_days);
            continue;
        }

        // Positives: contracts whose start falls after the cut, same day.
        std::map<NodeRef, std::set<NodeRef>> fl_rel, jp_rel;
        for (const auto& c : eval_contracts) {
            if (c.t_end <= cut || c.t_end >= day_end) continue;
            NodeRef fl{fl_t, c.fl_id}, jp{jp_t, c.jp_id};
            if (std::binary_search(jp_pool.begin(), jp_pool.end(), jp)) fl_rel[fl].insert(jp);
            if (std::binary_search(fl_pool.begin(), fl_pool.end(), fl)) jp_rel[jp].insert(fl);
        }
        for (auto& [fl, rel] : fl_rel)
            cases.push_back({cut, "fl2jp", fl, rel, jp_pool});
        for (auto& [jp, rel] : jp_rel)
            cases.push_back({cut, "jp2fl", jp, rel, fl_pool});
    }
    return cases;
}

double ndcg_at_k(const std::vector<NodeRef>& ranked, const std::set<NodeRef>& relevant, size_t k) {
    if (k < 1) throw Error("ndcg_at_k: k must be >= 1");
    double dcg = 0.0;
    for (size_t rank = 1; rank <= std::min(k, ranked.size()); ++rank)
        if (relevant.count(ranked[rank - 1])) dcg += 1.0 / std::log2(double(rank) + 1.0);
    double idcg = 0.0;
    for (size_t rank = 1; rank <= std::min(k, relevant.size()); ++rank)
        idcg += 1.0 / std::log2(double(rank) + 1.0);
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

namespace {

struct SliceAcc {
    double sum = 0.0, comp = 0.0;  // Kahan
    size_t n = 0;
    void add(double x) {
        double y = x - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        ++n;
    }
    SliceMetrics done() const { return {n ? sum / double(n) : 0.0, n}; }
};

struct TaskAcc {
    SliceAcc overall, qc, cc, both, warm;
    TaskReport done() const {
        return {overall.done(), qc.done(), cc.done(), both.done(), warm.done()};
    }
};

}  // namespace

EvalReport evaluate(const TemporalGraph& g, const Embedder& embedder,
                    const std::vector<EvalCase>& cases, const EvalConfig& cfg,
                    const std::string& model_id) {
    TaskAcc fl_acc, jp_acc;
    for (const auto& c : cases) {
        Vec q = embedder(c.query, c.day_cut);
        std::vector<std::pair<double, NodeRef>> scored;
        scored.reserve(c.candidates.size());
        for (NodeRef cand : c.candidates)
            scored.emplace_back(cosine_sim(q, embedder(cand, c.day_cut)), cand);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second.id < b.second.id;
        });
        std::vector<NodeRef> ranked;
        ranked.reserve(scored.size());
        for (const auto& [s, n] : scored) ranked.push_back(n);
        double score = ndcg_at_k(ranked, c.relevant, cfg.ndcg_k);

        bool query_cold = g.first_edge_time(c.query) >= c.day_cut;
        bool cand_cold = false;
        for (NodeRef r : c.relevant)
            if (g.first_edge_time(r) >= c.day_cut) cand_cold = true;

        TaskAcc& acc = (c.task == "fl2jp") ? fl_acc : jp_acc;
        acc.overall.add(score);
        if (query_cold && cand_cold)
            acc.both.add(score);
        else if (query_cold)
            acc.qc.add(score);
        else if (cand_cold)
            acc.cc.add(score);
        else
            acc.warm.add(score);
    }
    EvalReport rep;
    rep.model_id = model_id;
    rep.fl2jp = fl_acc.done();
    rep.jp2fl = jp_acc.done();
    return rep;
}

Embedder cached_model_embedder(const GraphModel& model, const TemporalGraph& g) {
    auto cache = std::make_shared<std::map<std::pair<NodeRef, double>, Vec>>();
    return [&model, &g, cache](NodeRef v, double t) -> Vec {
        auto key = std::make_pair(v, t);
        auto it = cache->find(key);
        if (it != cache->end()) return it->second;
        Vec e = model.embed_node(g, v, t);
        cache->emplace(key, e);
        return e;
    };
}

Embedder text_embedder(const TemporalGraph& g) {
    return [&g](NodeRef v, double t) { return g.text_embedding_at(v, t); };
}

}  // namespace ttag
