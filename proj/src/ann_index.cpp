#include "ann_index.hpp"

#include "text_model.hpp"

#include <algorithm>
#include <numeric>

namespace ttag {

std::vector<size_t> TypeIndex::knn(const Vec& query, size_t k) const {
    std::vector<std::pair<double, size_t>> scored;
    scored.reserve(entries_.size());
    for (size_t i = 0; i < entries_.size(); ++i)
        scored.emplace_back(cosine_sim(query, entries_[i].embedding), i);
    std::sort(scored.begin(), scored.end(), [this](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return entries_[a.second].node.id < entries_[b.second].node.id;
    });
    std::vector<size_t> out;
    out.reserve(std::min(k, scored.size()));
    for (size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].second);
    return out;
}

std::unordered_map<TypeId, TypeIndex> build_type_indices(const TemporalGraph& g) {
    std::unordered_map<TypeId, TypeIndex> out;
    for (TypeId t = 0; t < g.num_types(); ++t) out.emplace(t, TypeIndex(t));
    for (NodeRef v : g.all_nodes()) {
        const auto& rec = g.main_record(v);
        if (rec.activity.empty()) continue;
        IndexEntry e;
        e.node = v;
        e.periods = rec.activity;
        e.embedding = g.text_embedding_at(v, rec.activity.front().t_end);
        out.at(v.type).add(std::move(e));
    }
    return out;
}

}  // namespace ttag
