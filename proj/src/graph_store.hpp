#pragma once

#include "common.hpp"

#include <limits>
#include <optional>
#include <span>
#include <unordered_map>

namespace ttag {

// One row of the node history table. `text` is empty when the version
// carries no text embedding.
struct FeatureVersion {
    double timestamp = 0.0;
    Vec numeric;
    Vec text;

    bool has_text() const { return text.size() > 0; }
};

struct NodeMainRecord {
    size_t history_start = 0;
    size_t version_count = 0;
    std::vector<ActivityPeriod> activity;
    bool has_text = false;
};

struct NodeDescriptor {
    NodeRef ref;
    bool has_text = false;
};

struct EdgeInput {
    NodeRef src;
    NodeRef dst;
    RelId relation = 0;
    double timestamp = 0.0;
};

struct StoreInput {
    std::vector<std::string> type_names;
    std::vector<std::string> relation_names;
    std::vector<size_t> type_feature_dims;  // indexed by TypeId
    size_t text_dim = 0;
    std::vector<NodeDescriptor> nodes;
    std::vector<EdgeInput> edges;
    std::vector<std::pair<NodeRef, FeatureVersion>> versions;
    std::vector<std::pair<NodeRef, ActivityPeriod>> activity;
    // Optional per-type defaults for nodes queried before their first
    // version; zero vectors when absent.
    std::unordered_map<TypeId, Vec> default_features;
};

enum class EdgeDir { Out = 0, In = 1 };

// Immutable temporal graph with point-in-time lookups. Built once via
// build_store; afterwards safe for concurrent readers.
class TemporalGraph {
  public:
    friend TemporalGraph build_store(StoreInput in);

    size_t num_nodes() const { return refs_.size(); }
    size_t num_edges() const { return edges_.size(); }
    size_t num_types() const { return type_names_.size(); }
    size_t num_relations() const { return rel_names_.size(); }
    size_t text_dim() const { return text_dim_; }
    size_t feature_dim(TypeId t) const { return type_feature_dims_.at(t); }

    const std::vector<std::string>& type_names() const { return type_names_; }
    const std::vector<std::string>& relation_names() const { return rel_names_; }
    TypeId type_id(const std::string& name) const;
    RelId relation_id(const std::string& name) const;

    bool has_node(NodeRef v) const { return index_.count(v) > 0; }
    const NodeMainRecord& main_record(NodeRef v) const;
    std::span<const FeatureVersion> history(NodeRef v) const;
    const std::vector<TimestampedEdge>& all_edges() const { return edges_; }
    const std::vector<NodeRef>& all_nodes() const { return refs_; }
    const Vec& default_features(TypeId t) const { return defaults_.at(t); }

    // Latest numeric features with version timestamp <= t (binary search);
    // per-type default vector when no version qualifies. cmp_count, when
    // given, receives the number of history-row timestamp comparisons.
    Vec features_at(NodeRef v, double t, int* cmp_count = nullptr) const;

    // Latest text embedding with version timestamp <= t; zero vector for
    // text-less nodes or when no qualifying version carries text.
    Vec text_embedding_at(NodeRef v, double t) const;

    // True when the node has at least one feature version with timestamp <= t.
    bool has_version_at(NodeRef v, double t) const;

    bool is_active(NodeRef v, double t) const;

    // Up-to-limit edges with relation r, direction dir and timestamp
    // strictly before t, most recent first (ties by descending edge_seq).
    std::vector<TimestampedEdge> edges_before_dir(NodeRef v, RelId r, EdgeDir dir, double t,
                                                  size_t limit) const;

    // Both directions merged, same ordering.
    std::vector<TimestampedEdge> edges_before(NodeRef v, RelId r, double t, size_t limit) const;

    // Timestamp of the earliest edge incident to v (+inf for isolated
    // nodes); used by the cold-start predicate.
    double first_edge_time(NodeRef v) const;

    // True when some edge incident to v has timestamp in [t0, t1).
    bool has_incident_edge_in(NodeRef v, double t0, double t1) const;

  private:
    size_t node_index(NodeRef v) const;
    const std::vector<TimestampedEdge>& adj_list(size_t node, RelId r, EdgeDir dir) const;

    std::vector<std::string> type_names_;
    std::vector<std::string> rel_names_;
    std::vector<size_t> type_feature_dims_;
    size_t text_dim_ = 0;
    std::unordered_map<TypeId, Vec> defaults_;

    std::vector<NodeRef> refs_;
    std::vector<NodeMainRecord> records_;
    std::unordered_map<NodeRef, size_t, NodeRefHash> index_;
    std::vector<FeatureVersion> history_;
    std::vector<TimestampedEdge> edges_;
    // adj_[node][relation * 2 + dir], each sorted ascending by (timestamp, edge_seq).
    std::vector<std::vector<std::vector<TimestampedEdge>>> adj_;
    std::vector<double> first_edge_time_;
};

TemporalGraph build_store(StoreInput in);

}  // namespace ttag
