#pragma once

#include <cstdint>
#include <vector>

namespace imbl {

/// Deterministic random stream (xoshiro256++ seeded through splitmix64).
///
/// The same (seed, draw sequence) always produces the same outputs, on any
/// platform. Streams are single-owner: move them between threads, never
/// share one concurrently.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    std::uint64_t next_u64();

    /// Uniform draw in [0, 1).
    double uniform01();

    /// Uniform draw in [lo, hi). Throws if lo >= hi.
    double uniform(double lo, double hi);

    /// Gaussian draw (Box-Muller). Throws if sd < 0; sd == 0 returns mean.
    double normal(double mean, double sd);

    /// Uniform index in [0, n). Throws if n == 0.
    std::size_t index(std::size_t n);

    /// Fisher-Yates shuffle.
    void shuffle(std::vector<std::size_t>& v);

    /// k distinct indices drawn uniformly from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t draws() const noexcept { return draws_; }

private:
    std::uint64_t state_[4];
    std::uint64_t seed_ = 0;
    std::uint64_t draws_ = 0;
};

/// Mixing rule for per-task streams: children of a master seed are
/// derive_seed(master, tag) with a documented tag per logical task, so
/// results cannot depend on scheduling or execution order.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag);

} // namespace imbl
