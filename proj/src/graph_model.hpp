#pragma once

#include "autodiff.hpp"
#include "negmine.hpp"
#include "sampler.hpp"
#include "text_model.hpp"

#include <filesystem>
#include <optional>

namespace ttag {

enum class ConvKind { Mean, Attention };

struct ModelConfig {
    size_t out_dim = 64;  // final embedding dimension
    size_t hidden_dim = 64;
    size_t layers = 2;
    ConvKind conv_kind = ConvKind::Attention;
    double temperature = 0.05;
    double learning_rate = 1e-3;
    size_t batch_size = 16;
    size_t steps = 1200;
    size_t max_negatives_per_label = 4;  // subsampled per step from the mined set
    size_t checkpoint_every = 100;
    SamplerSpec sampler;
    uint64_t seed = 1;
    // Feature ablations: zero out the text or numeric slot everywhere
    // (including the residual projector input for text).
    bool use_text = true;
    bool use_numeric = true;

    json to_json() const;
    static ModelConfig from_json(const json& j);
};

// Structural facts the parameter shapes depend on.
struct GraphSchema {
    std::vector<std::string> type_names;
    std::vector<size_t> type_feature_dims;
    size_t text_dim = 0;
    size_t num_relations = 0;

    static GraphSchema of(const TemporalGraph& g);
    json to_json() const;
    static GraphSchema from_json(const json& j);
};

struct BatchEntry {
    NodeRef query;
    NodeRef positive;
    double t_pos = 0.0;
};

struct BatchSpec {
    TypeId query_type = 0;  // task homogeneity: all queries share this type
    std::vector<BatchEntry> entries;
    std::vector<std::pair<NodeRef, double>> negatives;
};

struct TrainResult {
    size_t best_step = 0;
    double best_val_loss = 0.0;
    double final_val_loss = 0.0;
    std::vector<double> train_losses;  // one entry per step
    std::vector<std::pair<size_t, double>> val_history;
};

// Heterogeneous temporal graph embedder: per-type input encoders, L
// relation-and-direction-specific convolution layers, and a residual
// projection of the node's text embedding, L2-normalized at the output.
class GraphModel {
  public:
    GraphModel(const ModelConfig& cfg, const GraphSchema& schema);

    const ModelConfig& config() const { return cfg_; }
    const GraphSchema& schema() const { return schema_; }
    ParamStore& params() { return ps_; }

    // Point-in-time embedding of v as of t. Unit norm. A residual sum with
    // norm below 1e-8 throws in strict mode and otherwise falls back to the
    // re-normalized projected text embedding (degenerate set when given).
    Vec embed_node(const TemporalGraph& g, NodeRef v, double t, bool strict = false,
                   bool* degenerate = nullptr) const;

    double score_pair(const TemporalGraph& g, NodeRef a, double ta, NodeRef b, double tb) const;

    // Loss of one batch; with_grads accumulates parameter gradients.
    double batch_loss(const TemporalGraph& g, const BatchSpec& batch, bool with_grads);

    BatchSpec make_batch(const TemporalGraph& g, const std::vector<MatchLabel>& labels,
                         const std::vector<size_t>& label_ids,
                         const std::unordered_map<uint64_t, std::vector<const TrainingQuintuple*>>&
                             negs_by_label,
                         std::mt19937_64& rng) const;

    TrainResult train(const TemporalGraph& g, const std::vector<MatchLabel>& train_labels,
                      const std::vector<TrainingQuintuple>& quints,
                      const std::vector<MatchLabel>& val_labels);

    // Max relative error between analytic and central-finite-difference
    // gradients over coords_per_tensor sampled coordinates of every tensor.
    double grad_check(const TemporalGraph& g, const BatchSpec& batch, size_t coords_per_tensor,
                      uint64_t seed);

    void save(const std::filesystem::path& path) const;
    static GraphModel load(const std::filesystem::path& path);

    // Key used to group a quintuple's negatives under its label.
    static uint64_t label_key(NodeRef query, NodeRef positive);

  private:
    struct Forward {
        int out_id = -1;
        double residual_norm = 0.0;
        int proj_id = -1;
    };
    Forward embed_on_tape(Tape& tape, const Subgraph& sg) const;
    int encoder_on_tape(Tape& tape, const SubgraphNode& node) const;

    ModelConfig cfg_;
    GraphSchema schema_;
    ParamStore ps_;

    // Parameter indices.
    struct EncoderIdx {
        int w1, b1, w2, b2;
    };
    struct ConvIdx {
        int w_msg;
        int attn_ws = -1, attn_a = -1;
    };
    std::vector<EncoderIdx> encoders_;                // per type
    std::vector<std::vector<ConvIdx>> convs_;         // [layer][relation*2+dir]
    std::vector<std::pair<int, int>> self_;           // per layer (w, b)
    int out_w_, out_b_;
    int proj_w1_, proj_b1_, proj_w2_, proj_b2_;
};

}  // namespace ttag
