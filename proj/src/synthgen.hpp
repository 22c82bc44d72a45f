#pragma once

#include "jsonl_io.hpp"

namespace ttag {

// Synthetic two-sided marketplace world. Topic vectors drive text and
// browsing; repeat-hire history adds a contract signal that is visible
// only through the interaction graph (weight beta_g).
struct WorldConfig {
    size_t freelancers = 2000;
    size_t clients = 400;
    size_t job_posts = 3000;
    size_t topic_dim = 16;
    size_t vocab_size = 2000;
    size_t doc_len = 30;
    size_t title_len = 8;
    double token_noise = 0.10;   // per-token probability of a uniform vocabulary draw
    double text_noise = 0.25;    // job topic jitter around the client taste
    double drift_rate = 0.02;    // per node-day probability of a topic drift version
    double drift_blend = 0.35;

    int train_days = 75;
    int val_days = 8;
    int eval_days = 7;

    double browse_activity = 0.25;  // probability an active freelancer browses on a day
    size_t browse_count = 5;        // impressions per browsing freelancer-day
    double click_prob = 0.30;
    double apply_prob = 0.50;
    double interview_prob = 0.25;
    double invite_prob = 0.15;      // per new job: invite one similar freelancer
    double fill_rate = 0.12;        // per open job-day once eligible
    double follow_prob = 0.55;      // prior contractor browses the client's new job
    double fast_track_per_day = 3.0;
    double orphan_job_rate = 0.15;  // jobs with no posting-client edge

    double beta_g = 2.0;             // graph-bonus weight in the contract choice
    double topic_sharpness = 0.25;   // contract-choice softmax temperature
    double browse_sharpness = 0.08;  // browse-choice softmax temperature

    uint64_t seed = 7;

    int horizon_days() const { return train_days + val_days + eval_days; }

    json to_json() const;
    static WorldConfig from_json(const json& j);
};

// Simulates the world day by day and writes the dataset directory
// (schema/nodes/edges/features/activity/pairs/contracts/splits/manifest).
// Deterministic per seed, byte for byte.
void generate(const WorldConfig& cfg, const std::filesystem::path& out_dir);

// Dataset statistics: node/edge counts per type/relation, version counts,
// activity coverage, contracts per day.
json describe(const std::filesystem::path& dataset_dir);

}  // namespace ttag
