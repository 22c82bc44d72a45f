#pragma once

#include "ann_index.hpp"
#include "jsonl_io.hpp"

namespace ttag {

struct MatchLabel {
    NodeRef query;
    NodeRef positive;
    double t_start = 0.0;
    double t_end = 0.0;
};

enum class NegKind { Adversarial, Random };

struct TrainingQuintuple {
    NodeRef query;
    NodeRef positive;
    double t_pos = 0.0;
    NodeRef negative;
    double t_neg = 0.0;
    NegKind kind = NegKind::Adversarial;
};

struct MiningParams {
    size_t ann_candidates = 200;
    size_t negatives_per_positive = 20;
    double sigma_low = 0.5;
    double sigma_high = 0.85;
    uint64_t rng_seed = 1;
};

struct MiningReport {
    size_t labels = 0;
    size_t skipped_cold_queries = 0;  // labels whose query had a zero text embedding
    size_t adversarial = 0;
    size_t random = 0;
    std::vector<size_t> band_rejections;  // 20-bin histogram of rejected similarities over [-1, 1]

    MiningReport() : band_rejections(20, 0) {}
    json to_json() const;
};

// Adversarial mining: per label, sample t+ uniformly in [t_start, t_end],
// query the positive-type index with the query's text embedding, re-embed
// each candidate at a uniformly sampled timestamp within one of its
// activity periods, keep candidates inside the (sigma_low, sigma_high)
// similarity band, then uniformly subsample up to negatives_per_positive.
// Deterministic given rng_seed: per-label sub-seeds keep labels independent.
std::vector<TrainingQuintuple> mine_adversarial(
    const TemporalGraph& g, const std::unordered_map<TypeId, TypeIndex>& indices,
    const std::vector<MatchLabel>& labels, const MiningParams& params,
    MiningReport* report = nullptr);

std::vector<TrainingQuintuple> sample_random_negatives(const TemporalGraph& g,
                                                       const std::vector<MatchLabel>& labels,
                                                       size_t count_per_label, uint64_t seed);

void save_quintuples(const std::filesystem::path& file, const TemporalGraph& g,
                     const std::vector<TrainingQuintuple>& quints);
std::vector<TrainingQuintuple> load_quintuples(const std::filesystem::path& file,
                                               const TemporalGraph& g);

}  // namespace ttag
