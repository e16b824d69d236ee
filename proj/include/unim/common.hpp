#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace unim {

// Base class for all errors thrown by the library. Callers that need to
// distinguish configuration mistakes from bad input data can catch the
// subclasses below.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class IngestError : public Error {
public:
    explicit IngestError(const std::string& msg) : Error(msg) {}
};

// Deterministic 64-bit mixer (splitmix64). Used wherever reproducible
// pseudo-randomness is needed across platforms; std:: distributions are
// implementation-defined and would break cross-toolchain determinism.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n). n must be nonzero.
    uint64_t bounded(uint64_t n) { return next() % n; }

    // Uniform double in [0, 1).
    double uniform() { return (next() >> 11) * 0x1.0p-53; }
};

// FNV-1a, used to derive per-instance seeds from string ids.
inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t mix_seed(uint64_t a, uint64_t b) {
    SplitMix64 g(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
    return g.next();
}

// Writes through a sibling temp file and renames into place, so readers never
// observe a partially written file. Creates parent directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace unim
