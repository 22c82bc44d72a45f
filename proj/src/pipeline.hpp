#pragma once

#include "evalkit.hpp"
#include "synthgen.hpp"

namespace ttag {

// One function per pipeline stage; the CLI is a thin wrapper over these.

// Generates a dataset and returns its statistics.
json stage_gen(const WorldConfig& cfg, const std::filesystem::path& out_dir);

// Two-stage contrastive training of the dual text encoder
// (weak_pairs.jsonl then strong_pairs.jsonl); saves the encoder and
// returns per-stage epoch losses.
json stage_train_text(const std::filesystem::path& dataset, const TextModelConfig& cfg,
                      const std::filesystem::path& model_out);

// Copies the dataset into out_dir with every token-bearing feature version
// augmented by its text embedding (schema text_dim updated).
json stage_embed_all(const std::filesystem::path& dataset,
                     const std::filesystem::path& text_model,
                     const std::filesystem::path& out_dir);

// Match labels (both query directions) from the contracts of one split:
// "train", "val" or "eval".
std::vector<MatchLabel> labels_for_split(const TemporalGraph& g,
                                         const std::vector<Contract>& contracts,
                                         const SplitSpec& splits, const std::string& split);

// Adversarial + random negative mining over the train-split labels.
json stage_mine(const std::filesystem::path& dataset, const MiningParams& params,
                size_t random_per_label, bool adversarial, bool random,
                const std::filesystem::path& out_file);

// Trains the graph model against mined quintuples; saves the checkpoint.
json stage_train_graph(const std::filesystem::path& dataset, const ModelConfig& cfg,
                       const std::filesystem::path& quints_file,
                       const std::filesystem::path& model_out);

// Daily-pool retrieval evaluation; empty checkpoint = raw text baseline.
EvalReport stage_eval(const std::filesystem::path& dataset,
                      const std::filesystem::path& checkpoint, const EvalConfig& cfg);

// Trains and evaluates the comparison grid on one dataset:
//   text | full | random_negs | no_text | no_temporal_graph | no_temporal_nodes
// An empty `variants` list runs all of them. Checkpoints land in workdir.
json run_ablation_grid(const std::filesystem::path& dataset, const ModelConfig& base,
                       const std::filesystem::path& quints_all,
                       const std::filesystem::path& quints_random, const EvalConfig& ecfg,
                       const std::filesystem::path& workdir,
                       const std::vector<std::string>& variants = {});

}  // namespace ttag
