#pragma once

#include "autodiff.hpp"
#include "jsonl_io.hpp"

#include <filesystem>

namespace ttag {

// Shared contrastive machinery ------------------------------------------------

struct ContrastiveBatch {
    std::string task;  // "fl2jp" | "jp2fl"
    std::vector<Vec> queries;
    std::vector<Vec> positives;  // aligned with queries
    std::vector<Vec> extra_negatives;
    double temperature = 0.05;
};

struct InfoNceResult {
    double loss = 0.0;
    std::vector<Vec> d_queries;
    std::vector<Vec> d_positives;
    std::vector<Vec> d_negatives;
};

// Softmax cross-entropy over one positive per query, with every in-batch
// positive and every extra negative in the denominator. Returns the mean
// loss over queries and exact gradients w.r.t. all embeddings.
InfoNceResult infonce_loss(const ContrastiveBatch& batch);

double cosine_sim(const Vec& a, const Vec& b);

// Dual encoder ----------------------------------------------------------------

struct TextModelConfig {
    size_t vocab_size = 2000;
    size_t dim = 64;
    double temperature = 0.05;
    double learning_rate = 3e-3;
    double weight_decay = 0.0;  // decoupled; keeps the token table from memorizing pairs
    size_t batch_size = 64;
    size_t epochs = 12;
    size_t max_hard_negatives = 4;  // per pair, strong stage only
    uint64_t seed = 1;
};

enum class TrainStage { Weak, Strong };

// Bag-of-tokens encoder: mean of token-table rows, one linear transform,
// L2 normalization. Weights shared between query and candidate sides.
class DualEncoder {
  public:
    explicit DualEncoder(const TextModelConfig& cfg);

    const TextModelConfig& config() const { return cfg_; }

    // Empty doc -> zero vector (the no-text convention); otherwise unit norm.
    Vec encode(const std::vector<uint32_t>& doc) const;

    // Mini-batch gradient descent on infonce_loss with in-batch negatives.
    // Batches are task-homogeneous; the weak stage rejects pairs carrying
    // hard negatives. Returns mean epoch losses.
    std::vector<double> train_stage(const std::vector<PairExample>& pairs, TrainStage stage);

    void save(const std::filesystem::path& path) const;
    static DualEncoder load(const std::filesystem::path& path);

    ParamStore& params() { return ps_; }
    const ParamStore& params() const { return ps_; }

  private:
    TextModelConfig cfg_;
    ParamStore ps_;
    int tok_table_;
    int out_w_;
    int out_b_;
};

// Recomputes text embeddings for every token-bearing feature version in
// dataset_dir/features.jsonl and writes the augmented rows to
// out_dir/features.jsonl (token lists are preserved). Rows referencing
// unknown nodes are collected into one error. Returns the number of
// versions embedded.
size_t embed_all_nodes(const DualEncoder& enc, const std::filesystem::path& dataset_dir,
                       const std::filesystem::path& out_dir);

}  // namespace ttag
