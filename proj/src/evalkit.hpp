#pragma once

#include "graph_model.hpp"

#include <functional>
#include <set>

namespace ttag {

struct EvalCase {
    double day_cut = 0.0;  // the day's 12:00 cut
    std::string task;      // "fl2jp" | "jp2fl"
    NodeRef query;
    std::set<NodeRef> relevant;
    std::vector<NodeRef> candidates;
};

struct SliceMetrics {
    double ndcg = 0.0;
    size_t cases = 0;
};

struct TaskReport {
    SliceMetrics overall;
    SliceMetrics query_cold;
    SliceMetrics candidate_cold;
    SliceMetrics both_cold;
    SliceMetrics warm;
};

struct EvalReport {
    std::string model_id;
    TaskReport fl2jp;
    TaskReport jp2fl;
    size_t skipped_days = 0;

    json to_json() const;
    std::string to_table() const;
};

struct EvalConfig {
    int window_days = 7;          // evaluated days at the end of the eval split
    double completion_min = 0.8;  // JP->FL pool filter (freelancer feature 0)
    double recency_window = 48.0 * 3600.0;
    size_t ndcg_k = 10;
};

// Per eval day (12:00 cut): candidate pools from activity at the cut,
// positives from contracts whose start lies after the cut on that day.
// The JP->FL freelancer pool additionally requires profile completion
// above the threshold and an incident edge within the recency window.
std::vector<EvalCase> build_eval_cases(const TemporalGraph& g,
                                       const std::vector<Contract>& eval_contracts,
                                       const EvalConfig& cfg, size_t* skipped_days = nullptr);

// Binary-gain NDCG truncated at k; discount 1/log2(rank+1).
double ndcg_at_k(const std::vector<NodeRef>& ranked, const std::set<NodeRef>& relevant, size_t k);

using Embedder = std::function<Vec(NodeRef, double)>;

// Ranks candidates by cosine to the query (ties by ascending node id) and
// aggregates NDCG overall and per cold-start slice. A node is cold iff it
// has no incident edge before the day cut.
EvalReport evaluate(const TemporalGraph& g, const Embedder& embedder,
                    const std::vector<EvalCase>& cases, const EvalConfig& cfg,
                    const std::string& model_id);

// Memoizing adapter around embed_node; one entry per (node, timestamp).
Embedder cached_model_embedder(const GraphModel& model, const TemporalGraph& g);
// Baseline: ranks by stored text embeddings alone.
Embedder text_embedder(const TemporalGraph& g);

}  // namespace ttag
