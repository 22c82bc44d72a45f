#include "synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

namespace ttag {

namespace {

constexpr double kDay = 86400.0;
constexpr double kHour = 3600.0;

}  // namespace

json WorldConfig::to_json() const {
    return {{"freelancers", freelancers},
            {"clients", clients},
            {"job_posts", job_posts},
            {"topic_dim", topic_dim},
            {"vocab_size", vocab_size},
            {"doc_len", doc_len},
            {"title_len", title_len},
            {"token_noise", token_noise},
            {"text_noise", text_noise},
            {"drift_rate", drift_rate},
            {"drift_blend", drift_blend},
            {"train_days", train_days},
            {"val_days", val_days},
            {"eval_days", eval_days},
            {"browse_activity", browse_activity},
            {"browse_count", browse_count},
            {"click_prob", click_prob},
            {"apply_prob", apply_prob},
            {"interview_prob", interview_prob},
            {"invite_prob", invite_prob},
            {"fill_rate", fill_rate},
            {"follow_prob", follow_prob},
            {"fast_track_per_day", fast_track_per_day},
            {"orphan_job_rate", orphan_job_rate},
            {"beta_g", beta_g},
            {"topic_sharpness", topic_sharpness},
            {"browse_sharpness", browse_sharpness},
            {"seed", seed}};
}

WorldConfig WorldConfig::from_json(const json& j) {
    WorldConfig c;
    c.freelancers = j.value("freelancers", c.freelancers);
    c.clients = j.value("clients", c.clients);
    c.job_posts = j.value("job_posts", c.job_posts);
    c.topic_dim = j.value("topic_dim", c.topic_dim);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.doc_len = j.value("doc_len", c.doc_len);
    c.title_len = j.value("title_len", c.title_len);
    c.token_noise = j.value("token_noise", c.token_noise);
    c.text_noise = j.value("text_noise", c.text_noise);
    c.drift_rate = j.value("drift_rate", c.drift_rate);
    c.drift_blend = j.value("drift_blend", c.drift_blend);
    c.train_days = j.value("train_days", c.train_days);
    c.val_days = j.value("val_days", c.val_days);
    c.eval_days = j.value("eval_days", c.eval_days);
    c.browse_activity = j.value("browse_activity", c.browse_activity);
    c.browse_count = j.value("browse_count", c.browse_count);
    c.click_prob = j.value("click_prob", c.click_prob);
    c.apply_prob = j.value("apply_prob", c.apply_prob);
    c.interview_prob = j.value("interview_prob", c.interview_prob);
    c.invite_prob = j.value("invite_prob", c.invite_prob);
    c.fill_rate = j.value("fill_rate", c.fill_rate);
    c.follow_prob = j.value("follow_prob", c.follow_prob);
    c.fast_track_per_day = j.value("fast_track_per_day", c.fast_track_per_day);
    c.orphan_job_rate = j.value("orphan_job_rate", c.orphan_job_rate);
    c.beta_g = j.value("beta_g", c.beta_g);
    c.topic_sharpness = j.value("topic_sharpness", c.topic_sharpness);
    c.browse_sharpness = j.value("browse_sharpness", c.browse_sharpness);
    c.seed = j.value("seed", c.seed);
    return c;
}

namespace {

struct World {
    const WorldConfig& cfg;
    std::mt19937_64 rng;

    std::vector<json> nodes, edges, features, activity, weak_pairs, strong_pairs, contracts;

    explicit World(const WorldConfig& c) : cfg(c), rng(c.seed) {}

    double urand() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
    double urand(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
    double gauss() { return std::normal_distribution<double>(0.0, 1.0)(rng); }

    Vec unit_topic() {
        Vec v(cfg.topic_dim);
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss();
        return l2_normalize(v);
    }

    Vec jitter(const Vec& base, double scale) {
        Vec v = base;
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] += scale * gauss();
        return l2_normalize(v);
    }

    // Topic-conditioned bag of tokens. The vocabulary is split into one
    // block per signed topic axis; block mass follows the absolute
    // coordinate, so the mean token embedding of a long document is
    // proportional to the topic vector and a linear encoder can recover
    // topic cosine exactly.
    std::vector<uint32_t> make_doc(const Vec& topic, size_t len) {
        size_t blocks = 2 * cfg.topic_dim;
        size_t block_len = cfg.vocab_size / blocks;
        std::vector<double> w(blocks, 0.0);
        for (size_t k = 0; k < cfg.topic_dim; ++k) {
            double x = topic[Eigen::Index(k)];
            w[2 * k + (x < 0.0 ? 1 : 0)] = std::abs(x);
        }
        std::discrete_distribution<size_t> pick(w.begin(), w.end());
        std::vector<uint32_t> doc(len);
        for (auto& tok : doc) {
            if (urand() < cfg.token_noise) {
                tok = uint32_t(rng() % cfg.vocab_size);
            } else {
                size_t b = pick(rng);
                tok = uint32_t(b * block_len + rng() % block_len);
            }
        }
        return doc;
    }
};

struct FLState {
    Vec topic;
    double completion = 0.0, rate = 0.0;
    int join_day = 0;
    bool fast = false;
    double t_join = 0.0, t_leave = 0.0;
    std::vector<uint32_t> doc;
    std::vector<std::pair<uint64_t, double>> browsed;  // recent impressions (jp, t)
    std::set<uint64_t> applied;
    std::set<uint64_t> my_clients;  // clients with a finished hire of this freelancer

    bool active(double t) const { return t >= t_join && t < t_leave; }
};

struct CLState {
    Vec taste;
};

struct JPState {
    Vec topic;
    uint64_t client = 0;  // 0 = no posting edge
    bool rush = false, fast_slot = false;
    int post_day = 0;
    double t_post = 0.0, t_close = 0.0;
    bool open = false, filled = false;
    std::vector<std::uint32_t> doc;
    std::vector<std::pair<uint64_t, double>> applicants;  // (fl, t_apply)
    std::set<uint64_t> appl_set;
};

}  // namespace

void generate(const WorldConfig& cfg, const std::filesystem::path& out_dir) {
    if (cfg.freelancers == 0 || cfg.clients == 0 || cfg.job_posts == 0)
        throw Error("world config: node counts must be positive");
    if (cfg.vocab_size < 4 * cfg.topic_dim)
        throw Error("world config: vocabulary too small for the topic blocks");
    if (cfg.horizon_days() < 3) throw Error("world config: horizon too short");

    World w(cfg);
    const int horizon = cfg.horizon_days();
    const double t_horizon = horizon * kDay;
    const size_t F = cfg.freelancers, C = cfg.clients, J = cfg.job_posts;

    std::vector<FLState> fls(F);
    std::vector<CLState> cls(C);
    std::vector<JPState> jps(J);

    // Static client tastes, all present from day 0.
    for (size_t c = 0; c < C; ++c) cls[c].taste = w.unit_topic();

    // Freelancers: 60% present from day 0, the rest join over time.
    const size_t n_days = size_t(horizon);
    std::vector<std::vector<size_t>> joiners(n_days);
    for (size_t i = 0; i < F; ++i) {
        auto& fl = fls[i];
        fl.topic = w.unit_topic();
        fl.completion = w.urand(0.55, 1.0);
        fl.rate = w.urand(0.1, 1.0);
        fl.join_day = (i < (F * 3) / 5) ? 0 : int(1 + w.rng() % uint64_t(horizon - 1));
        fl.t_join = (fl.join_day + 1) * kDay;  // provisional; set exactly at join
        fl.t_leave = t_horizon;
        if (w.urand() < 0.15)
            fl.t_leave = std::min(t_horizon, fl.join_day * kDay + w.urand(20.0, 60.0) * kDay);
        joiners[size_t(fl.join_day)].push_back(i);
    }

    // Job posting schedule, roughly uniform over the horizon. The first
    // couple of jobs each day are same-day-fill ("rush"), the next few are
    // reserved afternoon slots that newly joined freelancers can take.
    std::vector<std::vector<size_t>> posts_on(n_days);
    for (size_t j = 0; j < J; ++j) {
        jps[j].post_day = int((j * size_t(horizon)) / J);
        posts_on[size_t(jps[j].post_day)].push_back(j);
    }
    size_t fast_slots = size_t(std::lround(cfg.fast_track_per_day));
    for (int d = 0; d < horizon; ++d) {
        auto& today = posts_on[size_t(d)];
        for (size_t k = 0; k < today.size(); ++k) {
            if (k < 2)
                jps[today[k]].rush = true;
            else if (k < 2 + fast_slots)
                jps[today[k]].fast_slot = true;
        }
    }

    auto add_edge = [&](const char* st, uint64_t sid, const char* dt, uint64_t did,
                        const char* rel, double t) {
        w.edges.push_back({{"src_type", st},
                           {"src_id", sid},
                           {"dst_type", dt},
                           {"dst_id", did},
                           {"relation", rel},
                           {"timestamp", t}});
    };

    auto fl_features = [&](size_t i, double t) {
        auto& fl = fls[i];
        w.features.push_back(
            {{"type", "freelancer"},
             {"id", i + 1},
             {"timestamp", t},
             {"numeric",
              {fl.completion, fl.rate, 0.5 + 0.5 * fl.topic[0] + 0.1 * w.gauss(), w.urand()}},
             {"tokens", fl.doc}});
    };
    auto jp_features = [&](size_t j, double t, double budget, double duration) {
        auto& jp = jps[j];
        w.features.push_back(
            {{"type", "job_post"},
             {"id", j + 1},
             {"timestamp", t},
             {"numeric", {budget, duration, 0.5 + 0.5 * jp.topic[0] + 0.1 * w.gauss(), w.urand()}},
             {"tokens", jp.doc}});
    };

    auto emit_title_pair = [&](const std::vector<uint32_t>& body, const Vec& topic,
                               const char* task, int day) {
        if (day >= cfg.train_days) return;
        w.weak_pairs.push_back({{"task", task},
                                {"kind", "title_body"},
                                {"q_tokens", w.make_doc(topic, cfg.title_len)},
                                {"p_tokens", body}});
    };

    // Repeat-hire bookkeeping for the graph-only contract signal.
    std::map<std::pair<uint64_t, uint64_t>, int> fl_client_hires;  // (fl, client) -> n
    std::vector<std::set<uint64_t>> client_partners(C + 1);        // client -> freelancers

    auto graph_bonus = [&](uint64_t fl_id, uint64_t client_id) -> double {
        if (client_id == 0) return 0.0;
        auto it = fl_client_hires.find({fl_id, client_id});
        double direct = it == fl_client_hires.end() ? 0.0 : double(it->second);
        double neigh = 0.0;
        for (uint64_t c2 : fls[fl_id - 1].my_clients) {
            if (c2 == client_id) continue;
            const auto& a = client_partners[client_id];
            const auto& b = client_partners[c2];
            bool share = false;
            for (uint64_t f : (a.size() < b.size() ? a : b))
                if ((a.size() < b.size() ? b : a).count(f)) {
                    share = true;
                    break;
                }
            if (share) neigh += 1.0;
        }
        return std::min(1.5 * direct + 0.5 * neigh, 4.0);
    };

    size_t click_counter = 0;

    auto record_contract = [&](size_t j, uint64_t fl_id, double t_offer, double t_start, int day) {
        auto& jp = jps[j];
        auto& fl = fls[fl_id - 1];
        w.contracts.push_back(
            {{"fl_id", fl_id}, {"jp_id", j + 1}, {"t_start", t_offer}, {"t_end", t_start}});
        add_edge("freelancer", fl_id, "job_post", j + 1, "contracted", t_start);
        jp.filled = true;
        jp.t_close = std::min(t_horizon, t_start + kDay);
        jp.open = false;
        if (jp.client != 0) {
            fl_client_hires[{fl_id, jp.client}] += 1;
            client_partners[jp.client].insert(fl_id);
            fl.my_clients.insert(jp.client);
        }
        if (day < cfg.train_days) {
            json negs_fl2jp = json::array();  // browsed-but-not-applied jobs
            for (auto it = fl.browsed.rbegin();
                 it != fl.browsed.rend() && negs_fl2jp.size() < 4; ++it)
                if (it->first != j + 1 && !fl.applied.count(it->first))
                    negs_fl2jp.push_back(jps[it->first - 1].doc);
            w.strong_pairs.push_back({{"task", "fl2jp"},
                                      {"kind", "contract"},
                                      {"q_tokens", fl.doc},
                                      {"p_tokens", jp.doc},
                                      {"neg_tokens", negs_fl2jp}});
            json negs_jp2fl = json::array();  // losing applicants
            for (auto it = jp.applicants.rbegin();
                 it != jp.applicants.rend() && negs_jp2fl.size() < 4; ++it)
                if (it->first != fl_id) negs_jp2fl.push_back(fls[it->first - 1].doc);
            w.strong_pairs.push_back({{"task", "jp2fl"},
                                      {"kind", "contract"},
                                      {"q_tokens", jp.doc},
                                      {"p_tokens", fl.doc},
                                      {"neg_tokens", negs_jp2fl}});
        }
    };

    auto click_and_maybe_apply = [&](size_t i, size_t j, double t, double apply_prob, int day) {
        auto& fl = fls[i];
        auto& jp = jps[j];
        add_edge("freelancer", i + 1, "job_post", j + 1, "clicked", t);
        if (day < cfg.train_days && (click_counter++ % 3 == 0))
            w.weak_pairs.push_back({{"task", "fl2jp"},
                                    {"kind", "click"},
                                    {"q_tokens", fl.doc},
                                    {"p_tokens", jp.doc}});
        if (w.urand() < apply_prob && !fl.applied.count(j + 1)) {
            double ta = std::min(t + w.urand(5.0, 50.0) * 60.0, t_horizon - 1.0);
            add_edge("freelancer", i + 1, "job_post", j + 1, "applied", ta);
            fl.applied.insert(j + 1);
            jp.applicants.emplace_back(i + 1, ta);
            jp.appl_set.insert(i + 1);
            if (w.urand() < cfg.interview_prob) {
                double ti = ta + w.urand(4.0, 36.0) * kHour;
                if (ti < t_horizon && ti < jp.t_close) {
                    add_edge("freelancer", i + 1, "job_post", j + 1, "interviewed", ti);
                    if (day < cfg.train_days)
                        w.strong_pairs.push_back({{"task", "jp2fl"},
                                                  {"kind", "interview"},
                                                  {"q_tokens", jp.doc},
                                                  {"p_tokens", fl.doc},
                                                  {"neg_tokens", json::array()}});
                }
            }
        }
    };

    for (int day = 0; day < horizon; ++day) {
        const double t0 = day * kDay, t1 = t0 + kDay;
        const double cut = t0 + kDay / 2.0;

        // Topic drift: a fresh feature version and document.
        for (size_t i = 0; i < F; ++i) {
            auto& fl = fls[i];
            if (fl.join_day >= day || !fl.active(t0) || w.urand() >= cfg.drift_rate) continue;
            fl.topic = w.jitter((1.0 - cfg.drift_blend) * fl.topic, cfg.drift_blend);
            fl.doc = w.make_doc(fl.topic, cfg.doc_len);
            double t = w.urand(t0, cut);
            fl_features(i, t);
            emit_title_pair(fl.doc, fl.topic, "jp2fl", day);
        }

        // New job posts.
        for (size_t j : posts_on[size_t(day)]) {
            auto& jp = jps[j];
            // Rush and fast-slot jobs appear in the morning so they are in
            // the day's candidate pool at the noon cut; rush ones fill the
            // same evening, fast-slot ones wait for an afternoon joiner.
            jp.t_post = (jp.rush || jp.fast_slot) ? t0 + w.urand(8.0, 11.5) * kHour
                                                  : w.urand(t0 + kHour, t1);
            jp.t_close = std::min(t_horizon, jp.t_post + w.urand(7.0, 14.0) * kDay);
            jp.open = true;
            bool orphan = w.urand() < (jp.fast_slot || jp.rush ? 0.5 : cfg.orphan_job_rate);
            if (!orphan) {
                jp.client = 1 + w.rng() % C;
                jp.topic = w.jitter(cls[jp.client - 1].taste, cfg.text_noise);
            } else {
                jp.topic = w.unit_topic();
            }
            jp.doc = w.make_doc(jp.topic, cfg.doc_len);
            jp_features(j, jp.t_post, w.urand(0.1, 1.0), w.urand(0.1, 1.0));
            emit_title_pair(jp.doc, jp.topic, "fl2jp", day);
            if (!orphan) add_edge("client", jp.client, "job_post", j + 1, "posted", jp.t_post);

            // Occasional client-side invitation of a similar freelancer.
            if (!orphan && w.urand() < cfg.invite_prob) {
                size_t best = F;
                double best_s = -2.0;
                for (size_t probe = 0; probe < 40; ++probe) {
                    size_t i = w.rng() % F;
                    if (!fls[i].active(jp.t_post)) continue;
                    double s = jp.topic.dot(fls[i].topic);
                    if (s > best_s) best_s = s, best = i;
                }
                if (best < F) {
                    double ti = jp.t_post + w.urand(0.5, 6.0) * kHour;
                    if (ti < t1) {
                        add_edge("client", jp.client, "freelancer", best + 1, "invited", ti);
                        if (w.urand() < 0.6)
                            click_and_maybe_apply(best, j, ti + w.urand(0.2, 3.0) * kHour, 0.8,
                                                  day);
                    }
                }
            }
        }

        // Open job pool for today's browsing.
        std::vector<size_t> open_jobs;
        for (size_t j = 0; j < J; ++j)
            if (jps[j].open && jps[j].t_post < t1 && jps[j].t_close > t0) open_jobs.push_back(j);
        size_t active_fls = 0;
        for (size_t i = 0; i < F; ++i)
            if (fls[i].join_day <= day && fls[i].t_leave > t0) ++active_fls;
        if ((day > 0 && active_fls == 0) || (day > 0 && open_jobs.empty()))
            throw Error("infeasible world configuration: day " + std::to_string(day) +
                        " has no active participants");

        // Freelancer joins; the first few per day take a same-afternoon job.
        size_t fast_used = 0;
        for (size_t i : joiners[size_t(day)]) {
            auto& fl = fls[i];
            if (day > 0 && fast_used < fast_slots) {
                size_t pick = J;
                double best_s = -2.0;
                for (size_t j : open_jobs)
                    if (jps[j].fast_slot && !jps[j].filled && jps[j].post_day == day) {
                        double s = fl.topic.dot(jps[j].topic);
                        if (s > best_s) best_s = s, pick = j;
                    }
                if (pick < J) {
                    ++fast_used;
                    fl.fast = true;
                    // Profile written in the morning for the job they sign
                    // up to take; edges only appear after the noon cut, so
                    // the node is query-cold with usable text at the cut.
                    fl.topic = w.jitter(jps[pick].topic, 0.12);
                    fl.t_join = t0 + w.urand(8.5, 11.5) * kHour;
                    fl.doc = w.make_doc(fl.topic, cfg.doc_len);
                    fl_features(i, fl.t_join);
                    emit_title_pair(fl.doc, fl.topic, "jp2fl", day);
                    auto& jp = jps[pick];
                    double tc =
                        std::max(cut + w.urand(40.0, 90.0) * 60.0, jp.t_post + 10.0 * 60.0);
                    add_edge("freelancer", i + 1, "job_post", pick + 1, "clicked", tc);
                    double ta = tc + w.urand(10.0, 60.0) * 60.0;
                    add_edge("freelancer", i + 1, "job_post", pick + 1, "applied", ta);
                    fl.applied.insert(pick + 1);
                    jp.applicants.emplace_back(i + 1, ta);
                    jp.appl_set.insert(i + 1);
                    double t_offer = ta + w.urand(1.0, 3.0) * kHour;
                    add_edge("freelancer", i + 1, "job_post", pick + 1, "interviewed", t_offer);
                    double t_start = std::min(t_offer + w.urand(1.0, 3.0) * kHour, t1 - 60.0);
                    record_contract(pick, i + 1, t_offer, t_start, day);
                    continue;
                }
            }
            fl.t_join = day == 0 ? w.urand(0.0, 4.0) * kHour : w.urand(t0, t1);
            fl.doc = w.make_doc(fl.topic, cfg.doc_len);
            fl_features(i, fl.t_join);
            emit_title_pair(fl.doc, fl.topic, "jp2fl", day);
        }

        // Browsing, clicking, applying.
        if (!open_jobs.empty()) {
            for (size_t i = 0; i < F; ++i) {
                auto& fl = fls[i];
                if (fl.join_day >= day || !fl.active(t0 + 1.0)) continue;
                if (w.urand() >= cfg.browse_activity) continue;
                std::vector<double> wts(open_jobs.size());
                for (size_t k = 0; k < open_jobs.size(); ++k)
                    wts[k] = std::exp(fl.topic.dot(jps[open_jobs[k]].topic) / cfg.browse_sharpness);
                std::discrete_distribution<size_t> pick(wts.begin(), wts.end());
                for (size_t b = 0; b < cfg.browse_count; ++b) {
                    size_t j = open_jobs[pick(w.rng)];
                    auto& jp = jps[j];
                    double t = w.urand(std::max(jp.t_post, t0), t1);
                    if (t >= fl.t_leave || t >= jp.t_close) continue;
                    fl.browsed.emplace_back(j + 1, t);
                    if (fl.browsed.size() > 30)
                        fl.browsed.erase(fl.browsed.begin(), fl.browsed.begin() + 10);
                    if (w.urand() < cfg.click_prob)
                        click_and_maybe_apply(i, j, t, cfg.apply_prob, day);
                }
            }
        }

        // Prior hires follow their clients' new posts.
        for (size_t j : posts_on[size_t(day)]) {
            auto& jp = jps[j];
            if (jp.client == 0 || !jp.open) continue;
            for (uint64_t fl_id : client_partners[jp.client]) {
                auto& fl = fls[fl_id - 1];
                double t = jp.t_post + w.urand(0.5, 10.0) * kHour;
                if (t >= t1 || !fl.active(t) || fl.applied.count(j + 1)) continue;
                if (w.urand() < cfg.follow_prob) {
                    fl.browsed.emplace_back(j + 1, t);
                    if (w.urand() < 0.9) click_and_maybe_apply(fl_id - 1, j, t, 0.7, day);
                }
            }
        }

        // Fill decisions. Rush jobs decide the same evening; others after a
        // day on the market. The winner softmax mixes topic fit with the
        // repeat-hire graph bonus.
        for (size_t j = 0; j < J; ++j) {
            auto& jp = jps[j];
            if (!jp.open || jp.applicants.empty()) continue;
            bool rush_today = jp.rush && jp.post_day == day;
            if (!rush_today && jp.post_day >= day) continue;
            double p_fill = rush_today ? 0.9 : cfg.fill_rate;
            if (w.urand() >= p_fill) continue;
            double t_offer = rush_today ? w.urand(t0 + 17.0 * kHour, t0 + 20.0 * kHour)
                                        : w.urand(t0 + 13.0 * kHour, t0 + 19.0 * kHour);
            std::vector<std::pair<uint64_t, double>> elig;
            for (auto& [fl_id, ta] : jp.applicants)
                if (ta < t_offer && fls[fl_id - 1].active(t_offer) &&
                    fls[fl_id - 1].t_leave > t1)  // still around when the contract starts
                    elig.emplace_back(fl_id, ta);
            if (elig.empty()) continue;
            std::vector<double> wts(elig.size());
            for (size_t k = 0; k < elig.size(); ++k) {
                double s = jp.topic.dot(fls[elig[k].first - 1].topic) / cfg.topic_sharpness +
                           cfg.beta_g * graph_bonus(elig[k].first, jp.client);
                wts[k] = std::exp(s);
            }
            std::discrete_distribution<size_t> pick(wts.begin(), wts.end());
            uint64_t winner = elig[pick(w.rng)].first;
            double t_start = std::min(t_offer + w.urand(1.0, 4.0) * kHour, t1 - 60.0);
            record_contract(j, winner, t_offer, t_start, day);
        }

        // Expired listings.
        for (size_t j = 0; j < J; ++j)
            if (jps[j].open && jps[j].t_close <= t1) jps[j].open = false;
    }

    // Node, activity and client feature rows.
    for (size_t i = 0; i < F; ++i) {
        w.nodes.push_back({{"type", "freelancer"}, {"id", i + 1}, {"has_text", true}});
        w.activity.push_back({{"type", "freelancer"},
                              {"id", i + 1},
                              {"t_start", fls[i].t_join},
                              {"t_end", fls[i].t_leave}});
    }
    for (size_t c = 0; c < C; ++c) {
        w.nodes.push_back({{"type", "client"}, {"id", c + 1}, {"has_text", false}});
        w.activity.push_back(
            {{"type", "client"}, {"id", c + 1}, {"t_start", 0.0}, {"t_end", t_horizon}});
        w.features.push_back({{"type", "client"},
                              {"id", c + 1},
                              {"timestamp", 0.0},
                              {"numeric", {0.5 + 0.5 * cls[c].taste[0], w.urand()}}});
    }
    for (size_t j = 0; j < J; ++j) {
        w.nodes.push_back({{"type", "job_post"}, {"id", j + 1}, {"has_text", true}});
        w.activity.push_back({{"type", "job_post"},
                              {"id", j + 1},
                              {"t_start", jps[j].t_post},
                              {"t_end", jps[j].t_close}});
    }

    std::filesystem::create_directories(out_dir);
    json schema = {{"types",
                    {{{"name", "freelancer"}, {"feature_dim", 4}},
                     {{"name", "client"}, {"feature_dim", 2}},
                     {{"name", "job_post"}, {"feature_dim", 4}}}},
                   {"relations",
                    {"posted", "clicked", "applied", "invited", "interviewed", "contracted"}},
                   {"text_dim", 0},
                   {"vocab_size", cfg.vocab_size}};
    write_json_file(out_dir / "schema.json", schema);
    write_jsonl(out_dir / "nodes.jsonl", w.nodes);
    write_jsonl(out_dir / "edges.jsonl", w.edges);
    write_jsonl(out_dir / "features.jsonl", w.features);
    write_jsonl(out_dir / "activity.jsonl", w.activity);
    write_jsonl(out_dir / "weak_pairs.jsonl", w.weak_pairs);
    write_jsonl(out_dir / "strong_pairs.jsonl", w.strong_pairs);
    write_jsonl(out_dir / "contracts.jsonl", w.contracts);
    write_json_file(out_dir / "splits.json", {{"train_end_day", cfg.train_days},
                                              {"val_end_day", cfg.train_days + cfg.val_days},
                                              {"eval_end_day", horizon}});

    json files = json::object();
    for (const char* name :
         {"schema.json", "nodes.jsonl", "edges.jsonl", "features.jsonl", "activity.jsonl",
          "weak_pairs.jsonl", "strong_pairs.jsonl", "contracts.jsonl", "splits.json"})
        files[name] = sha256_file(out_dir / name);
    write_json_file(out_dir / "manifest.json",
                    {{"config", cfg.to_json()}, {"seed", cfg.seed}, {"files", files}});
}

json describe(const std::filesystem::path& dir) {
    json schema = read_json_file(dir / "schema.json");
    std::map<std::string, size_t> node_counts, edge_counts;
    for (const auto& n : read_jsonl(dir / "nodes.jsonl"))
        ++node_counts[n.at("type").get<std::string>()];
    double last_edge = 0.0;
    for (const auto& e : read_jsonl(dir / "edges.jsonl")) {
        ++edge_counts[e.at("relation").get<std::string>()];
        last_edge = std::max(last_edge, e.at("timestamp").get<double>());
    }
    size_t versions = 0, with_tokens = 0, with_emb = 0;
    for (const auto& f : read_jsonl(dir / "features.jsonl")) {
        ++versions;
        if (f.contains("tokens")) ++with_tokens;
        if (f.contains("text_emb")) ++with_emb;
    }
    SplitSpec splits = load_splits(dir);
    std::map<std::string, size_t> contract_splits;
    size_t n_contracts = 0;
    for (const auto& c : load_contracts(dir)) {
        ++n_contracts;
        int d = int(c.t_end / 86400.0);
        if (d < splits.train_end_day)
            ++contract_splits["train"];
        else if (d < splits.val_end_day)
            ++contract_splits["val"];
        else
            ++contract_splits["eval"];
    }
    size_t weak = read_jsonl(dir / "weak_pairs.jsonl").size();
    size_t strong = read_jsonl(dir / "strong_pairs.jsonl").size();
    size_t activity_rows = 0;
    double covered_days = 0.0;
    for (const auto& a : read_jsonl(dir / "activity.jsonl")) {
        ++activity_rows;
        covered_days += (a.at("t_end").get<double>() - a.at("t_start").get<double>()) / 86400.0;
    }
    return {{"nodes", node_counts},
            {"activity_rows", activity_rows},
            {"mean_active_days", activity_rows ? covered_days / double(activity_rows) : 0.0},
            {"edges", edge_counts},
            {"feature_versions", versions},
            {"versions_with_tokens", with_tokens},
            {"versions_with_text_emb", with_emb},
            {"contracts", n_contracts},
            {"contracts_by_split", contract_splits},
            {"weak_pairs", weak},
            {"strong_pairs", strong},
            {"last_edge_day", int(last_edge / 86400.0)},
            {"splits", {{"train_end_day", splits.train_end_day},
                        {"val_end_day", splits.val_end_day},
                        {"eval_end_day", splits.eval_end_day}}},
            {"text_dim", schema.at("text_dim")}};
}

}  // namespace ttag
