#include "jsonl_io.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

namespace ttag {

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<json> rows;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& r : rows) out << r.dump() << "\n";
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& value) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << value.dump(2) << "\n";
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        EVP_DigestUpdate(ctx, buf, size_t(in.gcount()));
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

namespace {

Vec to_vec(const json& arr) {
    Vec v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[Eigen::Index(i)] = arr[i].get<double>();
    return v;
}

}  // namespace

TemporalGraph load_store(const std::filesystem::path& dir) {
    json schema = read_json_file(dir / "schema.json");
    StoreInput in;
    for (const auto& t : schema.at("types")) {
        in.type_names.push_back(t.at("name").get<std::string>());
        in.type_feature_dims.push_back(t.at("feature_dim").get<size_t>());
    }
    for (const auto& r : schema.at("relations")) in.relation_names.push_back(r.get<std::string>());
    in.text_dim = schema.at("text_dim").get<size_t>();

    auto tid = [&](const std::string& name) -> TypeId {
        for (size_t i = 0; i < in.type_names.size(); ++i)
            if (in.type_names[i] == name) return TypeId(i);
        throw Error("undeclared node type in dataset: " + name);
    };
    auto rid = [&](const std::string& name) -> RelId {
        for (size_t i = 0; i < in.relation_names.size(); ++i)
            if (in.relation_names[i] == name) return RelId(i);
        throw Error("undeclared relation in dataset: " + name);
    };

    for (const auto& row : read_jsonl(dir / "nodes.jsonl")) {
        NodeDescriptor nd;
        nd.ref = {tid(row.at("type")), row.at("id").get<uint64_t>()};
        nd.has_text = row.value("has_text", false);
        in.nodes.push_back(nd);
    }
    for (const auto& row : read_jsonl(dir / "edges.jsonl")) {
        EdgeInput e;
        e.src = {tid(row.at("src_type")), row.at("src_id").get<uint64_t>()};
        e.dst = {tid(row.at("dst_type")), row.at("dst_id").get<uint64_t>()};
        e.relation = rid(row.at("relation"));
        e.timestamp = row.at("timestamp").get<double>();
        in.edges.push_back(e);
    }
    for (const auto& row : read_jsonl(dir / "features.jsonl")) {
        NodeRef ref{tid(row.at("type")), row.at("id").get<uint64_t>()};
        FeatureVersion ver;
        ver.timestamp = row.at("timestamp").get<double>();
        ver.numeric = to_vec(row.at("numeric"));
        if (row.contains("text_emb")) ver.text = to_vec(row.at("text_emb"));
        in.versions.emplace_back(ref, std::move(ver));
    }
    for (const auto& row : read_jsonl(dir / "activity.jsonl")) {
        NodeRef ref{tid(row.at("type")), row.at("id").get<uint64_t>()};
        in.activity.emplace_back(
            ref, ActivityPeriod{row.at("t_start").get<double>(), row.at("t_end").get<double>()});
    }
    return build_store(std::move(in));
}

std::vector<Contract> load_contracts(const std::filesystem::path& dir) {
    std::vector<Contract> out;
    for (const auto& row : read_jsonl(dir / "contracts.jsonl")) {
        out.push_back({row.at("fl_id").get<uint64_t>(), row.at("jp_id").get<uint64_t>(),
                       row.at("t_start").get<double>(), row.at("t_end").get<double>()});
    }
    return out;
}

SplitSpec load_splits(const std::filesystem::path& dir) {
    json j = read_json_file(dir / "splits.json");
    return {j.at("train_end_day").get<int>(), j.at("val_end_day").get<int>(),
            j.at("eval_end_day").get<int>()};
}

std::vector<PairExample> load_pairs(const std::filesystem::path& file) {
    std::vector<PairExample> out;
    for (const auto& row : read_jsonl(file)) {
        PairExample p;
        p.task = row.at("task").get<std::string>();
        p.kind = row.value("kind", "");
        p.q_tokens = row.at("q_tokens").get<std::vector<uint32_t>>();
        p.p_tokens = row.at("p_tokens").get<std::vector<uint32_t>>();
        if (row.contains("neg_tokens"))
            p.neg_tokens = row.at("neg_tokens").get<std::vector<std::vector<uint32_t>>>();
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<VersionTokens> load_version_tokens(const std::filesystem::path& dir,
                                               const TemporalGraph& g) {
    std::vector<VersionTokens> out;
    for (const auto& row : read_jsonl(dir / "features.jsonl")) {
        if (!row.contains("tokens")) continue;
        VersionTokens vt;
        vt.node = {g.type_id(row.at("type")), row.at("id").get<uint64_t>()};
        vt.timestamp = row.at("timestamp").get<double>();
        vt.tokens = row.at("tokens").get<std::vector<uint32_t>>();
        out.push_back(std::move(vt));
    }
    return out;
}

}  // namespace ttag
