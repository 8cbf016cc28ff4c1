#pragma once

#include <cstdint>

namespace relaxflow {

/// Small deterministic generator (splitmix64). Used wherever reproducible,
/// platform-independent draws are required (report sampling, sweeps).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Derive an independent stream for subtask `k` of this seed.
    static Rng stream(std::uint64_t seed, std::uint64_t k) {
        Rng mix(seed ^ (0xd1342543de82ef95ull * (k + 1)));
        mix.next_u64();
        return mix;
    }

private:
    std::uint64_t state_;
};

}  // namespace relaxflow
