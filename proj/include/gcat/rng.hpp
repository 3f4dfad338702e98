#pragma once

#include <cstdint>
#include <random>

namespace gcat {

/// Seeded random stream with a pinned algorithm so that runs replay
/// bit-exactly on every platform.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. The standard library's distributions are implementation-defined,
/// so every draw here is derived from raw 64-bit outputs:
///   - uniform_index uses rejection sampling on the top bits,
///   - uniform_real uses the top 53 bits as a fraction in [0, 1).
/// Child streams come from split(), which hashes (seed, stream id) with the
/// SplitMix64 finalizer.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform integer in [0, n). Requires n >= 1.
    std::uint64_t uniform_index(std::uint64_t n);

    /// Uniform real in [0, 1).
    double uniform01();

    /// Uniform real in [lo, hi).
    double uniform_real(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller on two uniform01 draws.
    double normal();

    bool coin() { return (next_u64() >> 63) != 0; }

    /// Independent child generator; depends only on this stream's seed and
    /// `stream`, never on how many values were drawn.
    Rng split(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace gcat
