#pragma once

#include "graph_store.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ttag {

using json = nlohmann::json;

// Dataset directory layout (all produced by `gen`, consumed downstream):
//   schema.json      node types (name + feature_dim), relations, text_dim, vocab size
//   nodes.jsonl      {type, id, has_text}
//   edges.jsonl      {src_type, src_id, dst_type, dst_id, relation, timestamp}
//   features.jsonl   {type, id, timestamp, numeric:[...], tokens:[...]?, text_emb:[...]?}
//   activity.jsonl   {type, id, t_start, t_end}
//   weak_pairs.jsonl {task, kind, q_tokens, p_tokens}
//   strong_pairs.jsonl {task, kind, q_tokens, p_tokens, neg_tokens:[[...]...]}
//   contracts.jsonl  {fl_id, jp_id, t_start, t_end}
//   splits.json      {train_end_day, val_end_day, eval_end_day}
//   manifest.json    {config, seed, files: {name: sha256}}

struct Contract {
    uint64_t fl_id = 0;
    uint64_t jp_id = 0;
    double t_start = 0.0;  // offer created
    double t_end = 0.0;    // contract started
};

struct PairExample {
    std::string task;  // "fl2jp" | "jp2fl"
    std::string kind;
    std::vector<uint32_t> q_tokens;
    std::vector<uint32_t> p_tokens;
    std::vector<std::vector<uint32_t>> neg_tokens;
};

struct SplitSpec {
    int train_end_day = 0;  // contracts with t_end day in [0, train_end_day)
    int val_end_day = 0;    // [train_end_day, val_end_day)
    int eval_end_day = 0;   // [val_end_day, eval_end_day)
};

// Line-by-line JSONL reader; parse failures name the file and line.
std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& value);

std::string sha256_file(const std::filesystem::path& path);

// Builds the immutable store from a dataset directory. Token lists in
// features.jsonl are ignored here; text_emb arrays become text versions.
TemporalGraph load_store(const std::filesystem::path& dataset_dir);

std::vector<Contract> load_contracts(const std::filesystem::path& dataset_dir);
SplitSpec load_splits(const std::filesystem::path& dataset_dir);
std::vector<PairExample> load_pairs(const std::filesystem::path& file);

// Per-version token documents from features.jsonl, keyed by (node, timestamp).
struct VersionTokens {
    NodeRef node;
    double timestamp = 0.0;
    std::vector<uint32_t> tokens;
};
std::vector<VersionTokens> load_version_tokens(const std::filesystem::path& dataset_dir,
                                               const TemporalGraph& g);

}  // namespace ttag
