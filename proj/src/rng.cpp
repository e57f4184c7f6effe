#include "embaug/rng.hpp"

#include "embaug/common.hpp"

#include <cmath>
#include <numbers>

namespace embaug {

namespace {

// splitmix64 finalizer (Steele, Lea & Flood; the java.util.SplittableRandom mixer).
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, 64-bit.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1p-53; }

double Rng::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

double Rng::normal(double mean, double stddev) { return mean + stddev * normal(); }

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw ContractError("Rng::index: n must be positive");
    // Lemire's multiply-shift: high 64 bits of x * n.
    unsigned __int128 wide = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::size_t>(wide >> 64);
}

std::uint64_t Rng::poisson(double lambda) {
    if (!(lambda > 0.0)) throw ContractError("Rng::poisson: lambda must be positive");
    const double limit = std::exp(-lambda);
    std::uint64_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform();
    } while (p > limit);
    return k - 1;
}

Rng Rng::derive(std::string_view purpose, std::uint64_t index) const {
    std::uint64_t h = fnv1a(purpose);
    // Fold the index into the hash the same way FNV-1a folds bytes.
    for (int b = 0; b < 8; ++b) {
        h ^= (index >> (8 * b)) & 0xffULL;
        h *= 0x100000001b3ULL;
    }
    return Rng(splitmix64(seed_ ^ h));
}

}  // namespace embaug
