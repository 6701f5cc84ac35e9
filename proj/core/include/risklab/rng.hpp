#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace risklab {

// splitmix64 step. Advances state and returns the next output.
std::uint64_t splitmix64(std::uint64_t& state);

// Stateless child-seed derivation: same (master, stream) always yields the
// same seed, and distinct streams decorrelate even for small masters.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Deterministic generator. The engine is mt19937_64 (bit-exact by
// standard); every distribution is implemented here because the standard
// library's distribution algorithms are unspecified and differ across
// toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64();

    // Uniform on [0,1) with 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via the polar method; the spare value is cached.
    double gaussian();
    double gaussian(double mean, double stddev);

    // Uniform integer on [0,n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n);

    // Fisher-Yates.
    void shuffle(std::vector<std::size_t>& idx);
    std::vector<std::size_t> permutation(std::size_t n);

    // Independent named substream. Stateless in this generator's seed, so
    // callers may request streams in any order.
    Rng stream(std::uint64_t stream_id) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace risklab
