#include "graph_store.hpp"

#include <algorithm>
#include <sstream>

namespace ttag {

namespace {

std::string describe(const std::vector<std::string>& type_names, NodeRef v) {
    std::ostringstream os;
    if (v.type < type_names.size())
        os << type_names[v.type];
    else
        os << "type#" << v.type;
    os << "/" << v.id;
    return os.str();
}

}  // namespace

TypeId TemporalGraph::type_id(const std::string& name) const {
    for (size_t i = 0; i < type_names_.size(); ++i)
        if (type_names_[i] == name) return TypeId(i);
    throw Error("unknown node type: " + name);
}

RelId TemporalGraph::relation_id(const std::string& name) const {
    for (size_t i = 0; i < rel_names_.size(); ++i)
        if (rel_names_[i] == name) return RelId(i);
    throw Error("unknown relation: " + name);
}

size_t TemporalGraph::node_index(NodeRef v) const {
    auto it = index_.find(v);
    if (it == index_.end()) throw Error("unknown node: " + describe(type_names_, v));
    return it->second;
}

const NodeMainRecord& TemporalGraph::main_record(NodeRef v) const {
    return records_[node_index(v)];
}

std::span<const FeatureVersion> TemporalGraph::history(NodeRef v) const {
    const auto& rec = records_[node_index(v)];
    return {history_.data() + rec.history_start, rec.version_count};
}

Vec TemporalGraph::features_at(NodeRef v, double t, int* cmp_count) const {
    const auto& rec = records_[node_index(v)];
    // Binary search for the number of versions with timestamp <= t.
    size_t lo = 0, hi = rec.version_count;
    int cmps = 0;
    while (lo < hi) {
        size_t mid = lo + (hi - lo) / 2;
        ++cmps;
        if (history_[rec.history_start + mid].timestamp <= t)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (cmp_count) *cmp_count = cmps;
    if (lo == 0) return defaults_.at(v.type);
    return history_[rec.history_start + lo - 1].numeric;
}

Vec TemporalGraph::text_embedding_at(NodeRef v, double t) const {
    const auto& rec = records_[node_index(v)];
    size_t lo = 0, hi = rec.version_count;
    while (lo < hi) {
        size_t mid = lo + (hi - lo) / 2;
        if (history_[rec.history_start + mid].timestamp <= t)
            lo = mid + 1;
        else
            hi = mid;
    }
    // Walk back to the latest qualifying version that carries text.
    while (lo > 0) {
        const auto& ver = history_[rec.history_start + lo - 1];
        if (ver.has_text()) return ver.text;
        --lo;
    }
    return Vec::Zero(Eigen::Index(text_dim_));
}

bool TemporalGraph::has_version_at(NodeRef v, double t) const {
    const auto& rec = records_[node_index(v)];
    return rec.version_count > 0 && history_[rec.history_start].timestamp <= t;
}

bool TemporalGraph::is_active(NodeRef v, double t) const {
    const auto& rec = records_[node_index(v)];
    for (const auto& p : rec.activity)
        if (p.t_start <= t && t <= p.t_end) return true;
    return false;
}

const std::vector<TimestampedEdge>& TemporalGraph::adj_list(size_t node, RelId r,
                                                            EdgeDir dir) const {
    static const std::vector<TimestampedEdge> kEmpty;
    const auto& per_node = adj_[node];
    size_t slot = size_t(r) * 2 + size_t(dir);
    if (slot >= per_node.size()) return kEmpty;
    return per_node[slot];
}

std::vector<TimestampedEdge> TemporalGraph::edges_before_dir(NodeRef v, RelId r, EdgeDir dir,
                                                             double t, size_t limit) const {
    size_t node = node_index(v);
    const auto& list = adj_list(node, r, dir);
    // First edge with timestamp >= t; everything before it is strictly < t.
    auto it = std::lower_bound(list.begin(), list.end(), t,
                               [](const TimestampedEdge& e, double x) { return e.timestamp < x; });
    std::vector<TimestampedEdge> out;
    size_t avail = size_t(it - list.begin());
    size_t n = std::min(limit, avail);
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) out.push_back(list[avail - 1 - i]);
    return out;
}

std::vector<TimestampedEdge> TemporalGraph::edges_before(NodeRef v, RelId r, double t,
                                                         size_t limit) const {
    auto a = edges_before_dir(v, r, EdgeDir::Out, t, limit);
    auto b = edges_before_dir(v, r, EdgeDir::In, t, limit);
    std::vector<TimestampedEdge> merged;
    merged.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(merged),
               [](const TimestampedEdge& x, const TimestampedEdge& y) {
                   if (x.timestamp != y.timestamp) return x.timestamp > y.timestamp;
                   return x.edge_seq > y.edge_seq;
               });
    if (merged.size() > limit) merged.resize(limit);
    return merged;
}

double TemporalGraph::first_edge_time(NodeRef v) const {
    return first_edge_time_[node_index(v)];
}

bool TemporalGraph::has_incident_edge_in(NodeRef v, double t0, double t1) const {
    size_t node = node_index(v);
    for (const auto& list : adj_[node]) {
        auto it = std::lower_bound(list.begin(), list.end(), t0,
                                   [](const TimestampedEdge& e, double x) { return e.timestamp < x; });
        if (it != list.end() && it->timestamp < t1) return true;
    }
    return false;
}

TemporalGraph build_store(StoreInput in) {
    TemporalGraph g;
    g.type_names_ = std::move(in.type_names);
    g.rel_names_ = std::move(in.relation_names);
    g.type_feature_dims_ = std::move(in.type_feature_dims);
    g.text_dim_ = in.text_dim;
    if (g.type_feature_dims_.size() != g.type_names_.size())
        throw Error("type_feature_dims must cover every node type");

    for (TypeId t = 0; t < g.type_names_.size(); ++t) {
        auto it = in.default_features.find(t);
        if (it != in.default_features.end()) {
            if (size_t(it->second.size()) != g.type_feature_dims_[t])
                throw Error("default feature vector dimension mismatch for type " +
                            g.type_names_[t]);
            g.defaults_[t] = it->second;
        } else {
            g.defaults_[t] = Vec::Zero(Eigen::Index(g.type_feature_dims_[t]));
        }
    }

    g.refs_.reserve(in.nodes.size());
    g.records_.resize(in.nodes.size());
    for (size_t i = 0; i < in.nodes.size(); ++i) {
        const auto& nd = in.nodes[i];
        if (nd.ref.type >= g.type_names_.size())
            throw Error("node with undeclared type id " + std::to_string(nd.ref.type));
        if (!g.index_.emplace(nd.ref, i).second)
            throw Error("duplicate node: " + describe(g.type_names_, nd.ref));
        g.refs_.push_back(nd.ref);
        g.records_[i].has_text = nd.has_text;
    }

    // Group versions by node, sort by timestamp (stable keeps supply order
    // within equal timestamps), then last-writer-wins on ties.
    std::vector<std::vector<FeatureVersion>> per_node_versions(in.nodes.size());
    for (auto& [ref, ver] : in.versions) {
        auto it = g.index_.find(ref);
        if (it == g.index_.end())
            throw Error("feature version for unknown node " + describe(g.type_names_, ref));
        size_t want = g.type_feature_dims_[ref.type];
        if (size_t(ver.numeric.size()) != want)
            throw Error("feature dimension mismatch for node " + describe(g.type_names_, ref) +
                        ": got " + std::to_string(ver.numeric.size()) + ", expected " +
                        std::to_string(want));
        if (ver.has_text()) {
            if (size_t(ver.text.size()) != g.text_dim_)
                throw Error("text embedding dimension mismatch for node " +
                            describe(g.type_names_, ref));
            if (!ver.text.allFinite())
                throw Error("non-finite text embedding for node " + describe(g.type_names_, ref));
        }
        per_node_versions[it->second].push_back(std::move(ver));
    }
    for (size_t i = 0; i < per_node_versions.size(); ++i) {
        auto& vs = per_node_versions[i];
        std::stable_sort(vs.begin(), vs.end(),
                         [](const FeatureVersion& a, const FeatureVersion& b) {
                             return a.timestamp < b.timestamp;
                         });
        auto& rec = g.records_[i];
        rec.history_start = g.history_.size();
        for (size_t k = 0; k < vs.size(); ++k) {
            if (k + 1 < vs.size() && vs[k + 1].timestamp == vs[k].timestamp) continue;
            g.history_.push_back(std::move(vs[k]));
        }
        rec.version_count = g.history_.size() - rec.history_start;
    }

    for (auto& [ref, period] : in.activity) {
        auto it = g.index_.find(ref);
        if (it == g.index_.end())
            throw Error("activity period for unknown node " + describe(g.type_names_, ref));
        if (period.t_start > period.t_end)
            throw Error("inverted activity period for node " + describe(g.type_names_, ref));
        g.records_[it->second].activity.push_back(period);
    }
    for (size_t i = 0; i < g.records_.size(); ++i) {
        auto& act = g.records_[i].activity;
        std::sort(act.begin(), act.end(),
                  [](const ActivityPeriod& a, const ActivityPeriod& b) {
                      return a.t_start < b.t_start;
                  });
        for (size_t k = 1; k < act.size(); ++k)
            if (act[k].t_start <= act[k - 1].t_end)
                throw Error("overlapping activity periods for node " +
                            describe(g.type_names_, g.refs_[i]));
    }

    size_t num_slots = g.rel_names_.size() * 2;
    g.adj_.assign(in.nodes.size(), std::vector<std::vector<TimestampedEdge>>(num_slots));
    g.first_edge_time_.assign(in.nodes.size(), std::numeric_limits<double>::infinity());
    g.edges_.reserve(in.edges.size());
    for (size_t seq = 0; seq < in.edges.size(); ++seq) {
        const auto& e = in.edges[seq];
        auto si = g.index_.find(e.src);
        auto di = g.index_.find(e.dst);
        if (si == g.index_.end() || di == g.index_.end())
            throw Error("edge #" + std::to_string(seq) + " (" + describe(g.type_names_, e.src) +
                        " -> " + describe(g.type_names_, e.dst) + ") references an unknown node");
        if (e.relation >= g.rel_names_.size())
            throw Error("edge #" + std::to_string(seq) + " uses undeclared relation id " +
                        std::to_string(e.relation));
        if (!std::isfinite(e.timestamp))
            throw Error("edge #" + std::to_string(seq) + " has non-finite timestamp");
        TimestampedEdge edge{e.src, e.dst, e.relation, e.timestamp, seq};
        g.edges_.push_back(edge);
        g.adj_[si->second][size_t(e.relation) * 2 + 0].push_back(edge);
        g.adj_[di->second][size_t(e.relation) * 2 + 1].push_back(edge);
        g.first_edge_time_[si->second] = std::min(g.first_edge_time_[si->second], e.timestamp);
        g.first_edge_time_[di->second] = std::min(g.first_edge_time_[di->second], e.timestamp);
    }
    for (auto& per_node : g.adj_)
        for (auto& list : per_node)
            std::sort(list.begin(), list.end(),
                      [](const TimestampedEdge& a, const TimestampedEdge& b) {
                          if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
                          return a.edge_seq < b.edge_seq;
                      });
    return g;
}

}  // namespace ttag
