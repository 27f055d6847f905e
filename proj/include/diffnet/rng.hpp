#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace diffnet {

// Substream tags used when deriving child seeds from a master seed.
// Keeping them in one place guarantees distinct purposes never collide.
enum class Stream : std::uint64_t {
    Topology = 1,
    NodeParams = 2,
    Calibration = 3,
    Statistics = 4,
    Verification = 5,
    ReplicationData = 6,
};

// SplitMix64 finalizer. Used purely as a seed-mixing function.
std::uint64_t mix64(std::uint64_t z);

// Derives a child seed from (base, path). The derivation is a pure
// function, so any component can reconstruct the stream of any
// (replication, node) pair without shared state.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);
std::uint64_t derive_seed(std::uint64_t base, Stream tag, std::uint64_t a = 0, std::uint64_t b = 0);

// Deterministic random stream. Distributions are implemented here
// rather than taken from <random> so that sequences do not depend on
// the standard library in use.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(mix64(seed ^ 0x2545f4914f6cdd1dULL)) {}

    // Uniform on [0, 1).
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi);
    // exp(U) with U uniform on [log(lo), log(hi)); requires 0 < lo <= hi.
    double log_uniform(double lo, double hi);
    // Standard normal via Box-Muller; the second deviate is cached.
    double normal();
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace diffnet
