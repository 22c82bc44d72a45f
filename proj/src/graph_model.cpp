#include "graph_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace ttag {

json ModelConfig::to_json() const {
    json j = {{"out_dim", out_dim},
            {"hidden_dim", hidden_dim},
            {"layers", layers},
            {"conv_kind", conv_kind == ConvKind::Mean ? "mean" : "attention"},
            {"temperature", temperature},
            {"learning_rate", learning_rate},
            {"batch_size", batch_size},
            {"steps", steps},
            {"max_negatives_per_label", max_negatives_per_label},
            {"checkpoint_every", checkpoint_every},
            {"seed", seed},
            {"use_text", use_text},
            {"use_numeric", use_numeric},
            {"sampler",
             {{"hops", sampler.hops},
              {"per_relation_limit", sampler.per_relation_limit},
              {"temporal_edges", sampler.temporal_edges},
              {"temporal_features", sampler.temporal_features}}}};
    // JSON has no infinity; only a finite static cut is stored.
    if (std::isfinite(sampler.static_cut)) j["sampler"]["static_cut"] = sampler.static_cut;
    return j;
}

ModelConfig ModelConfig::from_json(const json& j) {
    ModelConfig c;
    c.out_dim = j.value("out_dim", c.out_dim);
    c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
    c.layers = j.value("layers", c.layers);
    if (j.contains("conv_kind")) {
        std::string k = j.at("conv_kind").get<std::string>();
        if (k == "mean")
            c.conv_kind = ConvKind::Mean;
        else if (k == "attention")
            c.conv_kind = ConvKind::Attention;
        else
            throw Error("unknown conv_kind: " + k);
    }
    c.temperature = j.value("temperature", c.temperature);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.steps = j.value("steps", c.steps);
    c.max_negatives_per_label = j.value("max_negatives_per_label", c.max_negatives_per_label);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    c.seed = j.value("seed", c.seed);
    c.use_text = j.value("use_text", c.use_text);
    c.use_numeric = j.value("use_numeric", c.use_numeric);
    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        c.sampler.hops = s.value("hops", c.sampler.hops);
        c.sampler.per_relation_limit = s.value("per_relation_limit", c.sampler.per_relation_limit);
        c.sampler.temporal_edges = s.value("temporal_edges", c.sampler.temporal_edges);
        c.sampler.temporal_features = s.value("temporal_features", c.sampler.temporal_features);
        c.sampler.static_cut = s.value("static_cut", c.sampler.static_cut);
    }
    if (c.out_dim < 1 || c.layers < 1) throw Error("invalid model config: out_dim and layers must be >= 1");
    return c;
}

GraphSchema GraphSchema::of(const TemporalGraph& g) {
    GraphSchema s;
    s.type_names = g.type_names();
    for (TypeId t = 0; t < g.num_types(); ++t) s.type_feature_dims.push_back(g.feature_dim(t));
    s.text_dim = g.text_dim();
    s.num_relations = g.num_relations();
    return s;
}

json GraphSchema::to_json() const {
    return {{"type_names", type_names},
            {"type_feature_dims", type_feature_dims},
            {"text_dim", text_dim},
            {"num_relations", num_relations}};
}

GraphSchema GraphSchema::from_json(const json& j) {
    GraphSchema s;
    s.type_names = j.at("type_names").get<std::vector<std::string>>();
    s.type_feature_dims = j.at("type_feature_dims").get<std::vector<size_t>>();
    s.text_dim = j.at("text_dim").get<size_t>();
    s.num_relations = j.at("num_relations").get<size_t>();
    return s;
}

GraphModel::GraphModel(const ModelConfig& cfg, const GraphSchema& schema)
    : cfg_(cfg), schema_(schema) {
    std::mt19937_64 rng(cfg.seed);
    Eigen::Index H = Eigen::Index(cfg.hidden_dim);
    Eigen::Index D = Eigen::Index(cfg.out_dim);

    for (size_t t = 0; t < schema.type_names.size(); ++t) {
        Eigen::Index in = Eigen::Index(schema.text_dim + schema.type_feature_dims[t]);
        std::string base = "enc_" + schema.type_names[t];
        // Small random bias keeps relu pre-activations off the exact kink
        // even for all-zero inputs (cold nodes).
        encoders_.push_back({ps_.add_init(base + "_w1", H, in, rng),
                             ps_.add_init(base + "_b1", H, 1, rng, 0.05),
                             ps_.add_init(base + "_w2", H, H, rng), ps_.add(base + "_b2", H, 1)});
    }
    size_t slots = schema.num_relations * 2;
    for (size_t l = 0; l < cfg.layers; ++l) {
        std::vector<ConvIdx> layer;
        for (size_t s = 0; s < slots; ++s) {
            std::string base =
                "conv_l" + std::to_string(l) + "_r" + std::to_string(s / 2) +
                (s % 2 == 0 ? "_out" : "_in");
            ConvIdx c{ps_.add_init(base + "_wmsg", H, H, rng)};
            if (cfg.conv_kind == ConvKind::Attention) {
                c.attn_ws = ps_.add_init(base + "_attn_ws", H, H, rng);
                c.attn_a = ps_.add_init(base + "_attn_a", H, 1, rng);
            }
            layer.push_back(c);
        }
        convs_.push_back(std::move(layer));
        self_.emplace_back(ps_.add_init("self_l" + std::to_string(l) + "_w", H, H, rng),
                           ps_.add_init("self_l" + std::to_string(l) + "_b", H, 1, rng, 0.05));
    }
    out_w_ = ps_.add_init("out_w", D, H, rng);
    out_b_ = ps_.add("out_b", D, 1);
    proj_w1_ = ps_.add_init("proj_w1", H, Eigen::Index(schema.text_dim), rng);
    proj_b1_ = ps_.add_init("proj_b1", H, 1, rng, 0.05);
    // Zero-init: the text residual starts silent so early training fits the
    // graph path first; the text branch opens up only where it lowers the
    // loss. With a random init the unit-norm text component dominates the
    // output and the conv stack never trains past the text shortcut.
    proj_w2_ = ps_.add("proj_w2", D, H);
    proj_b2_ = ps_.add("proj_b2", D, 1);
}

int GraphModel::encoder_on_tape(Tape& tape, const SubgraphNode& node) const {
    size_t d_feat = schema_.type_feature_dims[node.ref.type];
    Vec x = Vec::Zero(Eigen::Index(schema_.text_dim + d_feat));
    if (cfg_.use_text) x.head(Eigen::Index(schema_.text_dim)) = node.text;
    if (cfg_.use_numeric) x.tail(Eigen::Index(d_feat)) = node.numeric;
    const auto& enc = encoders_[node.ref.type];
    int c = tape.constant(std::move(x));
    int h = tape.relu(tape.affine(enc.w1, enc.b1, c));
    return tape.affine(enc.w2, enc.b2, h);
}

GraphModel::Forward GraphModel::embed_on_tape(Tape& tape, const Subgraph& sg) const {
    size_t V = sg.nodes.size();
    size_t slots = schema_.num_relations * 2;

    // Per (node, slot): most-recent-first deduplicated neighbor indices,
    // capped at the sampler's per-relation limit. Matches neighbors_for_conv.
    std::vector<std::vector<std::vector<size_t>>> nbrs(V,
                                                       std::vector<std::vector<size_t>>(slots));
    {
        std::vector<std::vector<const TimestampedEdge*>> incident(V * slots);
        for (const auto& e : sg.edges) {
            incident[sg.index_of(e.src) * slots + size_t(e.relation) * 2 + 0].push_back(&e);
            incident[sg.index_of(e.dst) * slots + size_t(e.relation) * 2 + 1].push_back(&e);
        }
        for (size_t i = 0; i < V; ++i) {
            for (size_t s = 0; s < slots; ++s) {
                auto& list = incident[i * slots + s];
                std::sort(list.begin(), list.end(),
                          [](const TimestampedEdge* a, const TimestampedEdge* b) {
                              if (a->timestamp != b->timestamp) return a->timestamp > b->timestamp;
                              return a->edge_seq > b->edge_seq;
                          });
                std::vector<char> seen(V, 0);
                for (const auto* e : list) {
                    size_t other = sg.index_of(s % 2 == 0 ? e->dst : e->src);
                    if (seen[other]) continue;
                    seen[other] = 1;
                    nbrs[i][s].push_back(other);
                    if (nbrs[i][s].size() >= sg.spec.per_relation_limit) break;
                }
            }
        }
    }

    std::vector<int> h(V);
    for (size_t i = 0; i < V; ++i) h[i] = encoder_on_tape(tape, sg.nodes[i]);

    for (size_t l = 0; l < cfg_.layers; ++l) {
        // Messages cached per (slot, source node) within the layer.
        std::vector<std::vector<int>> msg_cache(slots, std::vector<int>(V, -1));
        auto msg_of = [&](size_t slot, size_t u) {
            int& m = msg_cache[slot][u];
            if (m < 0) m = tape.matvec(convs_[l][slot].w_msg, h[u]);
            return m;
        };
        std::vector<int> h_next(V);
        for (size_t i = 0; i < V; ++i) {
            std::vector<int> aggs;
            for (size_t s = 0; s < slots; ++s) {
                const auto& ns = nbrs[i][s];
                if (ns.empty()) continue;
                std::vector<int> msgs;
                msgs.reserve(ns.size());
                for (size_t u : ns) msgs.push_back(msg_of(s, u));
                if (cfg_.conv_kind == ConvKind::Mean) {
                    aggs.push_back(tape.mean(msgs));
                } else {
                    int sv = tape.matvec(convs_[l][s].attn_ws, h[i]);
                    std::vector<int> scores;
                    scores.reserve(msgs.size());
                    for (int m : msgs)
                        scores.push_back(
                            tape.param_dot(convs_[l][s].attn_a,
                                           tape.leaky_relu(tape.add(sv, m), 0.2)));
                    aggs.push_back(tape.attention(scores, msgs));
                }
            }
            int base = tape.affine(self_[l].first, self_[l].second, h[i]);
            h_next[i] = aggs.empty() ? tape.relu(base) : tape.relu(tape.add(base, tape.mean(aggs)));
        }
        h = std::move(h_next);
    }

    int gnn = tape.affine(out_w_, out_b_, h[0]);
    Vec text_in = cfg_.use_text ? sg.nodes[0].text : Vec::Zero(Eigen::Index(schema_.text_dim));
    int p1 = tape.relu(tape.affine(proj_w1_, proj_b1_, tape.constant(std::move(text_in))));
    int proj = tape.affine(proj_w2_, proj_b2_, p1);
    int res = tape.add(gnn, proj);
    int y = tape.normalize(res);

    Forward f;
    f.out_id = y;
    f.residual_norm = tape.input_norm(y);
    f.proj_id = proj;
    return f;
}

Vec GraphModel::embed_node(const TemporalGraph& g, NodeRef v, double t, bool strict,
                           bool* degenerate) const {
    Subgraph sg = sample_subgraph(g, v, t, cfg_.sampler);
    Tape tape(const_cast<ParamStore*>(&ps_));
    Forward f = embed_on_tape(tape, sg);
    if (degenerate) *degenerate = false;
    if (f.residual_norm < 1e-8) {
        if (strict)
            throw Error("degenerate residual embedding for node during training");
        if (degenerate) *degenerate = true;
        return l2_normalize(tape.value(f.proj_id));
    }
    return tape.value(f.out_id);
}

double GraphModel::score_pair(const TemporalGraph& g, NodeRef a, double ta, NodeRef b,
                              double tb) const {
    return embed_node(g, a, ta).dot(embed_node(g, b, tb));
}

uint64_t GraphModel::label_key(NodeRef query, NodeRef positive) {
    uint64_t h = mix_seed(query.id ^ (uint64_t(query.type) << 40), 3);
    h = mix_seed(h ^ positive.id ^ (uint64_t(positive.type) << 40), 5);
    return h;
}

BatchSpec GraphModel::make_batch(
    const TemporalGraph&, const std::vector<MatchLabel>& labels,
    const std::vector<size_t>& label_ids,
    const std::unordered_map<uint64_t, std::vector<const TrainingQuintuple*>>& negs_by_label,
    std::mt19937_64& rng) const {
    BatchSpec batch;
    if (label_ids.empty()) throw Error("make_batch: empty batch");
    batch.query_type = labels[label_ids[0]].query.type;

    std::map<std::pair<NodeRef, double>, bool> neg_seen;
    for (size_t id : label_ids) {
        const auto& lab = labels[id];
        if (lab.query.type != batch.query_type) throw Error("make_batch: mixed-task batch");
        std::uniform_real_distribution<double> tpos(lab.t_start, lab.t_end);
        batch.entries.push_back({lab.query, lab.positive, tpos(rng)});

        auto it = negs_by_label.find(label_key(lab.query, lab.positive));
        if (it == negs_by_label.end()) continue;
        std::vector<const TrainingQuintuple*> pool = it->second;
        size_t take = std::min(cfg_.max_negatives_per_label, pool.size());
        for (size_t k = 0; k < take; ++k) {
            std::uniform_int_distribution<size_t> pick(k, pool.size() - 1);
            std::swap(pool[k], pool[pick(rng)]);
            auto key = std::make_pair(pool[k]->negative, pool[k]->t_neg);
            if (neg_seen.emplace(key, true).second)
                batch.negatives.emplace_back(pool[k]->negative, pool[k]->t_neg);
        }
    }
    return batch;
}

double GraphModel::batch_loss(const TemporalGraph& g, const BatchSpec& batch, bool with_grads) {
    size_t B = batch.entries.size();
    if (B == 0) throw Error("batch_loss: empty batch");
    double tau = cfg_.temperature;
    if (tau <= 0.0) throw Error("batch_loss: temperature must be positive");

    Tape tape(&ps_);
    // Candidates deduplicated by (node, timestamp); each embedded once.
    std::map<std::pair<NodeRef, double>, int> embedded;
    auto embed = [&](NodeRef v, double t) {
        auto key = std::make_pair(v, t);
        auto it = embedded.find(key);
        if (it != embedded.end()) return it->second;
        Subgraph sg = sample_subgraph(g, v, t, cfg_.sampler);
        Forward f = embed_on_tape(tape, sg);
        if (f.residual_norm < 1e-8)
            throw Error("degenerate residual embedding in training batch");
        embedded.emplace(key, f.out_id);
        return f.out_id;
    };

    std::vector<int> q_ids(B);
    std::vector<int> pos_of_query(B);  // index into unique positive list
    std::vector<int> pos_ids;
    std::map<std::pair<NodeRef, double>, int> pos_index;
    for (size_t i = 0; i < B; ++i) {
        q_ids[i] = embed(batch.entries[i].query, batch.entries[i].t_pos);
        auto key = std::make_pair(batch.entries[i].positive, batch.entries[i].t_pos);
        auto it = pos_index.find(key);
        if (it == pos_index.end()) {
            it = pos_index.emplace(key, int(pos_ids.size())).first;
            pos_ids.push_back(embed(key.first, key.second));
        }
        pos_of_query[i] = it->second;
    }
    std::vector<int> neg_ids;
    for (const auto& [node, t] : batch.negatives) neg_ids.push_back(embed(node, t));

    size_t P = pos_ids.size(), M = neg_ids.size();
    double loss = 0.0;
    std::unordered_map<int, Vec> emb_grads;
    auto grad_of = [&](int id) -> Vec& {
        auto [it, fresh] = emb_grads.try_emplace(id, Vec());
        if (fresh) it->second = Vec::Zero(tape.value(id).size());
        return it->second;
    };

    for (size_t i = 0; i < B; ++i) {
        const Vec& q = tape.value(q_ids[i]);
        std::vector<double> logits(P + M);
        for (size_t j = 0; j < P; ++j) logits[j] = q.dot(tape.value(pos_ids[j])) / tau;
        for (size_t j = 0; j < M; ++j) logits[P + j] = q.dot(tape.value(neg_ids[j])) / tau;
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (double l : logits) z += std::exp(l - mx);
        double lse = mx + std::log(z);
        double li = lse - logits[size_t(pos_of_query[i])];
        if (!std::isfinite(li))
            throw Error("non-finite loss term for batch query " + std::to_string(i));
        loss += li / double(B);

        if (!with_grads) continue;
        Vec& dq = grad_of(q_ids[i]);
        for (size_t k = 0; k < P + M; ++k) {
            double pi = std::exp(logits[k] - lse);
            double ds = (pi - (k == size_t(pos_of_query[i]) ? 1.0 : 0.0)) / (tau * double(B));
            int cand = k < P ? pos_ids[k] : neg_ids[k - P];
            dq += ds * tape.value(cand);
            grad_of(cand) += ds * q;
        }
    }

    if (with_grads) {
        std::vector<std::pair<int, Vec>> seeds;
        seeds.reserve(emb_grads.size());
        // Fixed seeding order keeps accumulation deterministic.
        std::vector<int> ids;
        for (const auto& [id, gvec] : emb_grads) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        for (int id : ids) seeds.emplace_back(id, emb_grads[id]);
        tape.backward_multi(seeds);
    }
    return loss;
}

TrainResult GraphModel::train(const TemporalGraph& g, const std::vector<MatchLabel>& train_labels,
                              const std::vector<TrainingQuintuple>& quints,
                              const std::vector<MatchLabel>& val_labels) {
    if (train_labels.empty()) throw Error("train: empty training label set");
    std::unordered_map<uint64_t, std::vector<const TrainingQuintuple*>> negs_by_label;
    for (const auto& q : quints)
        negs_by_label[label_key(q.query, q.positive)].push_back(&q);

    std::unordered_map<TypeId, std::vector<size_t>> by_task;
    for (size_t i = 0; i < train_labels.size(); ++i)
        by_task[train_labels[i].query.type].push_back(i);
    std::vector<TypeId> tasks;
    for (const auto& [t, ids] : by_task) tasks.push_back(t);
    std::sort(tasks.begin(), tasks.end());

    std::mt19937_64 rng(mix_seed(cfg_.seed, 77));

    // Fixed validation batches: deterministic, reused at every checkpoint.
    std::vector<BatchSpec> val_batches;
    {
        std::mt19937_64 vrng(mix_seed(cfg_.seed, 88));
        std::unordered_map<TypeId, std::vector<size_t>> val_by_task;
        for (size_t i = 0; i < val_labels.size(); ++i)
            val_by_task[val_labels[i].query.type].push_back(i);
        for (auto& [task, ids] : val_by_task) {
            std::shuffle(ids.begin(), ids.end(), vrng);
            for (size_t off = 0; off < ids.size() && val_batches.size() < 8;
                 off += cfg_.batch_size) {
                size_t n = std::min(cfg_.batch_size, ids.size() - off);
                std::vector<size_t> chunk(ids.begin() + long(off), ids.begin() + long(off + n));
                val_batches.push_back(make_batch(g, val_labels, chunk, negs_by_label, vrng));
            }
        }
    }
    auto val_loss = [&]() {
        if (val_batches.empty()) return 0.0;
        double sum = 0.0;
        for (const auto& b : val_batches) sum += batch_loss(g, b, false);
        return sum / double(val_batches.size());
    };

    TrainResult result;
    std::vector<Mat> best_values;
    double best = std::numeric_limits<double>::infinity();

    for (size_t step = 0; step < cfg_.steps; ++step) {
        TypeId task = tasks.front();
        if (tasks.size() > 1) {
            std::uniform_int_distribution<size_t> coin(0, tasks.size() - 1);
            task = tasks[coin(rng)];
        }
        const auto& pool = by_task[task];
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        std::vector<size_t> ids(std::min(cfg_.batch_size, pool.size()));
        for (auto& id : ids) id = pool[pick(rng)];

        BatchSpec batch = make_batch(g, train_labels, ids, negs_by_label, rng);
        ps_.zero_grads();
        double loss = batch_loss(g, batch, true);
        result.train_losses.push_back(loss);
        ps_.adam_step(cfg_.learning_rate);

        if ((step + 1) % cfg_.checkpoint_every == 0 || step + 1 == cfg_.steps) {
            double vl = val_loss();
            result.val_history.emplace_back(step + 1, vl);
            if (vl < best) {
                best = vl;
                result.best_step = step + 1;
                best_values.clear();
                for (size_t i = 0; i < ps_.size(); ++i) best_values.push_back(ps_[int(i)].value);
            }
        }
    }
    if (!best_values.empty()) {
        result.final_val_loss = result.val_history.back().second;
        result.best_val_loss = best;
        for (size_t i = 0; i < ps_.size(); ++i) ps_[int(i)].value = best_values[i];
    }
    return result;
}

double GraphModel::grad_check(const TemporalGraph& g, const BatchSpec& batch,
                              size_t coords_per_tensor, uint64_t seed) {
    ps_.zero_grads();
    batch_loss(g, batch, true);
    std::vector<Mat> analytic;
    for (size_t i = 0; i < ps_.size(); ++i) analytic.push_back(ps_[int(i)].grad);

    std::mt19937_64 rng(seed);
    const double h = 1e-5;
    double max_rel = 0.0;
    for (size_t ti = 0; ti < ps_.size(); ++ti) {
        Mat& value = ps_[int(ti)].value;
        size_t n = size_t(value.size());
        size_t samples = std::min(coords_per_tensor, n);
        for (size_t k = 0; k < samples; ++k) {
            std::uniform_int_distribution<size_t> pick(0, n - 1);
            size_t flat = pick(rng);
            Eigen::Index r = Eigen::Index(flat % size_t(value.rows()));
            Eigen::Index c = Eigen::Index(flat / size_t(value.rows()));
            double orig = value(r, c);
            double an = analytic[ti](r, c);
            auto rel_at = [&](double step) {
                value(r, c) = orig + step;
                double lp = batch_loss(g, batch, false);
                value(r, c) = orig - step;
                double lm = batch_loss(g, batch, false);
                value(r, c) = orig;
                double fd = (lp - lm) / (2 * step);
                return std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
            };
            double rel = rel_at(h);
            // A relu/leaky-relu kink inside the FD interval inflates the
            // error even when the analytic gradient is right; a genuine bug
            // keeps its relative error as the step shrinks, a kink loses it.
            if (rel > 1e-5) rel = std::min(rel, rel_at(h / 100));
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

static constexpr char kMagic[4] = {'T', 'G', 'M', 'C'};

void GraphModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(kMagic, 4);
    uint32_t version = 1;
    out.write(reinterpret_cast<const char*>(&version), 4);
    auto put_blob = [&](const std::string& s) {
        uint32_t len = uint32_t(s.size());
        out.write(reinterpret_cast<const char*>(&len), 4);
        out.write(s.data(), std::streamsize(s.size()));
    };
    put_blob(cfg_.to_json().dump());
    put_blob(schema_.to_json().dump());
    ps_.save_tensors(out);
}

GraphModel GraphModel::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw Error("not a graph model checkpoint: " + path.string());
    uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), 4);
    if (version != 1) throw Error("unsupported checkpoint format version");
    auto get_blob = [&]() {
        uint32_t len = 0;
        in.read(reinterpret_cast<char*>(&len), 4);
        std::string s(len, '\0');
        in.read(s.data(), len);
        return s;
    };
    ModelConfig cfg = ModelConfig::from_json(json::parse(get_blob()));
    GraphSchema schema = GraphSchema::from_json(json::parse(get_blob()));
    GraphModel model(cfg, schema);
    model.ps_.load_tensors(in);
    return model;
}

}  // namespace ttag
