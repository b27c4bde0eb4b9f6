#pragma once

#include <cstdint>
#include <cstddef>

namespace epiga {

// Stream identifiers, one per concern, so reordering draws in one part of the
// algorithm never perturbs another part.
enum class Stream : std::uint64_t {
    population_init = 1,
    selection       = 2,
    crossover       = 3,
    mutation        = 4,
    diffusion       = 5,
    network_init    = 6,
    bias_init       = 7,
    sweep           = 8,
};

// SplitMix64 generator. Substreams are derived by hashing (seed, stream id,
// salt), which keeps every concern on an independent, reproducible sequence
// regardless of how many draws the others make.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 0x243F6A8885A308D3ULL) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53-bit resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

    bool bernoulli(double p) { return next_double() < p; }

    // Uniform index in [0, n).
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_double() * static_cast<double>(n)); }

    // Independent substream for one concern. `salt` separates instances that
    // share a concern (e.g. per-head init).
    Rng fork(Stream s, std::uint64_t salt = 0) const {
        std::uint64_t h = state_;
        h ^= (static_cast<std::uint64_t>(s) + 0x9E3779B97F4A7C15ULL) * 0xFF51AFD7ED558CCDULL;
        h ^= (salt + 0x632BE59BD9B4E019ULL) * 0xC4CEB9FE1A85EC53ULL;
        h = (h ^ (h >> 33)) * 0xD6E8FEB86659FD93ULL;
        return Rng(h ^ (h >> 29));
    }

private:
    std::uint64_t state_;
};

}  // namespace epiga
