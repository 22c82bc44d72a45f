#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttag {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Type / relation tags are indices into the registries kept by the store.
using TypeId = uint32_t;
using RelId = uint32_t;

struct NodeRef {
    TypeId type = 0;
    uint64_t id = 0;

    bool operator==(const NodeRef&) const = default;
    auto operator<=>(const NodeRef&) const = default;
};

struct NodeRefHash {
    size_t operator()(const NodeRef& n) const {
        uint64_t h = (uint64_t(n.type) << 48) ^ n.id;
        h ^= h >> 33;
        h *= 0xff51afd7ed558ccdULL;
        h ^= h >> 33;
        return size_t(h);
    }
};

struct TimestampedEdge {
    NodeRef src;
    NodeRef dst;
    RelId relation = 0;
    double timestamp = 0.0;
    uint64_t edge_seq = 0;
};

struct ActivityPeriod {
    double t_start = 0.0;
    double t_end = 0.0;
};

// splitmix64; used to derive independent sub-seeds deterministically.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Vec l2_normalize(const Vec& v) {
    double n = v.norm();
    if (n < 1e-12) return Vec::Zero(v.size());
    return v / n;
}

}  // namespace ttag
