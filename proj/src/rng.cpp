#include "diffnet/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace diffnet {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(base);
    for (std::uint64_t x : path) {
        s = mix64(s ^ mix64(x));
    }
    return s;
}

std::uint64_t derive_seed(std::uint64_t base, Stream tag, std::uint64_t a, std::uint64_t b) {
    return derive_seed(base, {static_cast<std::uint64_t>(tag), a, b});
}

double Rng::uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::log_uniform(double lo, double hi) {
    if (!(lo > 0.0) || hi < lo) {
        throw std::invalid_argument("log_uniform requires 0 < lo <= hi");
    }
    return std::exp(uniform(std::log(lo), std::log(hi)));
}

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    // u1 in (0, 1] so the log is finite
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(t);
    has_cached_ = true;
    return r * std::cos(t);
}

}  // namespace diffnet
