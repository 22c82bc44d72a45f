#pragma once

#include "graph_model.hpp"

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <thread>
#include <tuple>

namespace ttag {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 0;  // 0 = ephemeral; see bound_port() after start
    std::filesystem::path dataset_dir;
    std::filesystem::path checkpoint;
};

// Newline-delimited JSON over TCP, one request object per line.
//   {"op":"embed","node_type":s,"node_id":n,"timestamp":t?}
//   {"op":"stats"}   {"op":"reload","dataset":s?,"checkpoint":s?}
// Responses: {"ok",bool, "embedding":[..]?, "error":s?, "checkpoint":s,
//             "cache_hit":bool?, "latency_us":int, "default_features":bool?}
// Graph snapshot + checkpoint + prewarmed text cache form one immutable
// triple; reload swaps the whole triple, in-flight requests finish on the
// old one.
class EmbedService {
  public:
    explicit EmbedService(const ServiceConfig& cfg);
    ~EmbedService();

    void start();
    void stop();
    int bound_port() const { return bound_port_; }

    // Request handling without the socket layer (also used by tests).
    json handle_line(const std::string& line);
    json handle_request(const json& req);

  private:
    struct Snapshot {
        TemporalGraph graph;
        GraphModel model;
        std::string checkpoint_id;
        // (type, id, version timestamp) -> prewarmed text embedding
        std::map<std::tuple<TypeId, uint64_t, double>, Vec> text_cache;
        // full-embedding memo; immutable inputs make entries permanent
        mutable std::mutex emb_mu;
        mutable std::map<std::pair<NodeRef, double>, Vec> emb_cache;
        std::filesystem::path dataset_dir, checkpoint;

        Snapshot(TemporalGraph g, GraphModel m) : graph(std::move(g)), model(std::move(m)) {}
    };

    static std::shared_ptr<const Snapshot> load_snapshot(const std::filesystem::path& dataset,
                                                         const std::filesystem::path& checkpoint);
    std::shared_ptr<const Snapshot> snapshot() const;

    json do_embed(const json& req, const std::shared_ptr<const Snapshot>& snap);
    json do_stats();

    void accept_loop();
    void client_loop(int fd);

    ServiceConfig cfg_;
    mutable std::mutex snap_mu_;
    std::shared_ptr<const Snapshot> snap_;

    std::mutex stats_mu_;
    std::vector<uint32_t> latencies_us_;
    size_t requests_ = 0, cache_hits_ = 0, cache_misses_ = 0, degenerate_ = 0;

    std::atomic<bool> running_{false};
    int listen_fd_ = -1;
    int bound_port_ = 0;
    std::thread accept_thread_;
    std::mutex clients_mu_;
    std::vector<std::thread> client_threads_;
    std::vector<int> client_fds_;
};

}  // namespace ttag
