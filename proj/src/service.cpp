#include "service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <ctime>

namespace ttag {

namespace {

uint64_t now_us() {
    return uint64_t(std::chrono::duration_cast<std::chrono::microseconds>(
                        std::chrono::steady_clock::now().time_since_epoch())
                        .count());
}

bool send_all(int fd, const std::string& data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n <= 0) return false;
        off += size_t(n);
    }
    return true;
}

}  // namespace

EmbedService::EmbedService(const ServiceConfig& cfg) : cfg_(cfg) {
    snap_ = load_snapshot(cfg_.dataset_dir, cfg_.checkpoint);
}

EmbedService::~EmbedService() { stop(); }

std::shared_ptr<const EmbedService::Snapshot> EmbedService::load_snapshot(
    const std::filesystem::path& dataset, const std::filesystem::path& checkpoint) {
    auto snap = std::make_shared<Snapshot>(load_store(dataset), GraphModel::load(checkpoint));
    snap->dataset_dir = dataset;
    snap->checkpoint = checkpoint;
    snap->checkpoint_id =
        checkpoint.filename().string() + "-" + sha256_file(checkpoint).substr(0, 12);
    for (NodeRef v : snap->graph.all_nodes()) {
        for (const auto& ver : snap->graph.history(v))
            if (ver.has_text()) snap->text_cache[{v.type, v.id, ver.timestamp}] = ver.text;
    }
    return snap;
}

std::shared_ptr<const EmbedService::Snapshot> EmbedService::snapshot() const {
    std::lock_guard<std::mutex> lk(snap_mu_);
    return snap_;
}

json EmbedService::handle_line(const std::string& line) {
    try {
        return handle_request(json::parse(line));
    } catch (const json::parse_error& e) {
        return {{"ok", false},
                {"error", std::string("malformed request: ") + e.what()},
                {"checkpoint", snapshot()->checkpoint_id},
                {"latency_us", 1}};
    }
}

json EmbedService::handle_request(const json& req) {
    auto snap = snapshot();
    try {
        std::string op = req.value("op", "");
        if (op == "embed") return do_embed(req, snap);
        if (op == "stats") return do_stats();
        if (op == "reload") {
            auto dataset = req.contains("dataset")
                               ? std::filesystem::path(req.at("dataset").get<std::string>())
                               : snap->dataset_dir;
            auto ckpt = req.contains("checkpoint")
                            ? std::filesystem::path(req.at("checkpoint").get<std::string>())
                            : snap->checkpoint;
            auto fresh = load_snapshot(dataset, ckpt);
            {
                std::lock_guard<std::mutex> lk(snap_mu_);
                snap_ = fresh;
            }
            return {{"ok", true}, {"checkpoint", fresh->checkpoint_id}, {"latency_us", 1}};
        }
        return {{"ok", false},
                {"error", "unknown op: " + op},
                {"checkpoint", snap->checkpoint_id},
                {"latency_us", 1}};
    } catch (const std::exception& e) {
        return {{"ok", false},
                {"error", e.what()},
                {"checkpoint", snap->checkpoint_id},
                {"latency_us", 1}};
    }
}

json EmbedService::do_embed(const json& req, const std::shared_ptr<const Snapshot>& snap) {
    uint64_t t_begin = now_us();
    const TemporalGraph& g = snap->graph;

    json resp;
    resp["checkpoint"] = snap->checkpoint_id;
    std::string type_name;
    uint64_t node_id = 0;
    try {
        type_name = req.at("node_type").get<std::string>();
        node_id = req.at("node_id").get<uint64_t>();
    } catch (const json::exception& e) {
        resp["ok"] = false;
        resp["error"] = std::string("bad embed request: ") + e.what();
        resp["latency_us"] = std::max<uint64_t>(1, now_us() - t_begin);
        return resp;
    }

    TypeId type;
    try {
        type = g.type_id(type_name);
    } catch (const Error& e) {
        resp["ok"] = false;
        resp["error"] = e.what();
        resp["latency_us"] = std::max<uint64_t>(1, now_us() - t_begin);
        return resp;
    }
    NodeRef v{type, node_id};
    if (!g.has_node(v)) {
        resp["ok"] = false;
        resp["error"] = "unknown node " + type_name + "/" + std::to_string(node_id);
        resp["latency_us"] = std::max<uint64_t>(1, now_us() - t_begin);
        return resp;
    }
    double t = req.contains("timestamp") ? req.at("timestamp").get<double>()
                                         : double(std::time(nullptr));

    // Text-cache bookkeeping: which stored version would serve this lookup.
    bool text_consulted = false, cache_hit = false;
    {
        auto hist = g.history(v);
        const FeatureVersion* best = nullptr;
        for (const auto& ver : hist)
            if (ver.timestamp <= t && ver.has_text()) best = &ver;
        if (g.main_record(v).has_text) {
            text_consulted = true;
            cache_hit = best && snap->text_cache.count({v.type, v.id, best->timestamp}) > 0;
        }
    }

    bool degenerate = false;
    Vec emb;
    bool memo_hit = false;
    {
        std::lock_guard<std::mutex> lk(snap->emb_mu);
        auto it = snap->emb_cache.find({v, t});
        if (it != snap->emb_cache.end()) {
            emb = it->second;
            memo_hit = true;
        }
    }
    if (!memo_hit) {
        emb = snap->model.embed_node(g, v, t, false, &degenerate);
        std::lock_guard<std::mutex> lk(snap->emb_mu);
        if (snap->emb_cache.size() < 200000) snap->emb_cache.emplace(std::make_pair(v, t), emb);
    }

    resp["ok"] = true;
    resp["embedding"] = std::vector<double>(emb.data(), emb.data() + emb.size());
    if (text_consulted) resp["cache_hit"] = cache_hit;
    if (!g.has_version_at(v, t)) resp["default_features"] = true;
    uint64_t lat = std::max<uint64_t>(1, now_us() - t_begin);
    resp["latency_us"] = lat;

    {
        std::lock_guard<std::mutex> lk(stats_mu_);
        ++requests_;
        latencies_us_.push_back(uint32_t(std::min<uint64_t>(lat, UINT32_MAX)));
        if (text_consulted) (cache_hit ? cache_hits_ : cache_misses_)++;
        if (degenerate) ++degenerate_;
    }
    return resp;
}

json EmbedService::do_stats() {
    std::lock_guard<std::mutex> lk(stats_mu_);
    auto lats = latencies_us_;
    std::sort(lats.begin(), lats.end());
    auto pct = [&](double p) -> uint32_t {
        if (lats.empty()) return 0;
        size_t idx = size_t(p * double(lats.size() - 1) + 0.5);
        return lats[std::min(idx, lats.size() - 1)];
    };
    size_t lookups = cache_hits_ + cache_misses_;
    return {{"ok", true},
            {"checkpoint", snapshot()->checkpoint_id},
            {"requests", requests_},
            {"p50_us", pct(0.50)},
            {"p95_us", pct(0.95)},
            {"p99_us", pct(0.99)},
            {"cache_hit_rate", lookups ? double(cache_hits_) / double(lookups) : 0.0},
            {"degenerate_embeddings", degenerate_},
            {"latency_us", 1}};
}

void EmbedService::start() {
    if (running_.exchange(true)) return;
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(uint16_t(cfg_.port));
    if (::inet_pton(AF_INET, cfg_.host.c_str(), &addr.sin_addr) != 1)
        throw Error("bad bind address: " + cfg_.host);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
        throw Error("bind failed on " + cfg_.host + ":" + std::to_string(cfg_.port));
    if (::listen(listen_fd_, 64) < 0) throw Error("listen failed");
    sockaddr_in bound{};
    socklen_t blen = sizeof bound;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &blen);
    bound_port_ = int(ntohs(bound.sin_port));
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void EmbedService::stop() {
    if (!running_.exchange(false)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> threads;
    {
        std::lock_guard<std::mutex> lk(clients_mu_);
        for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
        threads.swap(client_threads_);
    }
    for (auto& t : threads)
        if (t.joinable()) t.join();
    {
        std::lock_guard<std::mutex> lk(clients_mu_);
        for (int fd : client_fds_) ::close(fd);
        client_fds_.clear();
    }
}

void EmbedService::accept_loop() {
    while (running_) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_) break;
            continue;
        }
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        std::lock_guard<std::mutex> lk(clients_mu_);
        client_fds_.push_back(fd);
        client_threads_.emplace_back([this, fd] { client_loop(fd); });
    }
}

void EmbedService::client_loop(int fd) {
    std::string buf;
    char chunk[4096];
    while (running_) {
        ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buf.append(chunk, size_t(n));
        size_t pos;
        while ((pos = buf.find('\n')) != std::string::npos) {
            std::string line = buf.substr(0, pos);
            buf.erase(0, pos + 1);
            if (line.empty()) continue;
            if (!send_all(fd, handle_line(line).dump() + "\n")) return;
        }
    }
}

}  // namespace ttag
