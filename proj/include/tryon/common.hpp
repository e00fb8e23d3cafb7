#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tryon {

// Thrown when an input violates an operation's contract.
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a foreground occluder cannot be placed within the occlusion
// budget after the retry limit.
struct PlacementFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when training hits a non-finite loss; carries the offending batch.
struct TrainAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ContractError(msg);
}

// FNV-1a 64-bit. Used for content hashes in manifests and checkpoints;
// collision resistance beyond accidental corruption is not a goal.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace tryon
