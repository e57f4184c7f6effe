#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace embaug {

/// Deterministic random source.
///
/// The engine is the 64-bit Mersenne Twister (std::mt19937_64), but every
/// mapping from raw bits to a value is written out here
/// explicitly — none of the std distribution templates are used, because their
/// output sequences are implementation-defined and results must be identical
/// across standard libraries.
///
/// Mappings:
///   uniform()      takes the top 53 bits:      (x >> 11) * 2^-53          in [0,1)
///   uniform_pos()  same bits shifted by one:  ((x >> 11) + 1) * 2^-53     in (0,1]
///   normal()       Box-Muller on (uniform_pos, uniform), second value cached
///   index(n)       128-bit multiply-shift of one draw (bias < 2^-64 for the
///                  small n used here)
///   poisson(l)     Knuth's multiplication method
///
/// Streams: derive(purpose[, index]) hashes the purpose string (FNV-1a 64) and
/// the index into the stored root seed and runs the result through a splitmix64
/// finalizer. A derived stream therefore depends only on (root seed, purpose,
/// index) — never on how many draws were taken from the parent — so work can be
/// farmed out per fold or per bag without the schedule changing any numbers.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform();
    /// Uniform on (0, 1] — safe as a log() argument.
    double uniform_pos();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; generates pairs, caches the second.
    double normal();
    /// normal() scaled and shifted.
    double normal(double mean, double stddev);

    /// Uniform integer in [0, n); n must be positive.
    std::size_t index(std::size_t n);

    /// Poisson draw (Knuth's multiplication method); lambda must be positive.
    std::uint64_t poisson(double lambda);

    /// In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Independent child stream for a named purpose (optionally indexed).
    Rng derive(std::string_view purpose, std::uint64_t index = 0) const;

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace embaug
