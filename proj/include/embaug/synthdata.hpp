#pragma once

#include "embaug/rng.hpp"

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace embaug {

/// One draw of augmentation parameters: h_aug = s * (gamma ⊙ R_alpha(h) + beta),
/// where R_alpha rotates by the same angle in every configured coordinate plane.
struct OracleParams {
    double alpha = 0.0;
    std::vector<double> gamma;  // per-dimension gain
    std::vector<double> beta;   // per-dimension bias
    double scale = 1.0;

    static OracleParams identity(std::size_t d);
};

struct OracleRanges {
    double alpha_max = std::numbers::pi / 4.0;
    double delta_gamma = 0.2;
    double delta_beta = 0.05;
    double delta_scale = 0.15;
};

/// Ground-truth augmenter: a smooth, label-preserving family of embedding-space
/// transforms (plane rotations + per-dimension gain/bias + global scale) that
/// stands in for pixel-space rotation/jitter/zoom pushed through an extractor.
class OracleAugmenter {
public:
    /// Pairs coordinates (2i, 2i+1) for i < d/4, so half the coordinates sit in
    /// a rotation plane. d must be a positive multiple of 4.
    OracleAugmenter(std::size_t d, OracleRanges ranges);

    /// Explicit rotation planes; indices must be distinct and within [0, d).
    OracleAugmenter(std::size_t d, OracleRanges ranges,
                    std::vector<std::pair<std::size_t, std::size_t>> planes);

    std::size_t d() const { return d_; }
    const OracleRanges& ranges() const { return ranges_; }
    const std::vector<std::pair<std::size_t, std::size_t>>& planes() const { return planes_; }

    /// Uniform draw from the configured ranges.
    /// Draw order: alpha, gamma[0..d), beta[0..d), scale.
    OracleParams sample_params(Rng& rng) const;

    std::vector<double> apply(std::span<const double> h, const OracleParams& params) const;

private:
    std::size_t d_;
    OracleRanges ranges_;
    std::vector<std::pair<std::size_t, std::size_t>> planes_;
};

struct Bag {
    std::uint32_t label = 0;  // in [0, K)
    std::size_t d = 0;
    std::vector<double> data;  // row-major [n_instances × d]

    std::size_t n_instances() const { return d == 0 ? 0 : data.size() / d; }
    std::span<const double> instance(std::size_t i) const { return {data.data() + i * d, d}; }
    std::span<double> instance(std::size_t i) { return {data.data() + i * d, d}; }
};

struct GenConfig {
    std::size_t d = 64;
    std::size_t K = 5;
    std::size_t n_bags = 155;
    double sigma = 0.25;  // instance noise scale around the chosen prototype
    double mean_bag_size = 129.0;
    std::size_t min_bag_size = 16;
    std::size_t max_bag_size = 400;
    OracleRanges oracle;
};

struct Dataset {
    std::size_t d = 0;
    std::size_t K = 0;
    std::uint64_t seed = 0;
    GenConfig config;
    std::vector<std::vector<double>> prototypes;  // K unit vectors of dimension d
    std::vector<Bag> bags;
};

/// K unit-norm prototypes (index 0 = background, 1..K-1 = grades) with pairwise
/// |cosine| below 0.5, found by rejection sampling (1000 tries per slot).
std::vector<std::vector<double>> gen_prototypes(Rng& rng, std::size_t K, std::size_t d);

/// One bag of class c: each instance is prototype + sigma * N(0, I), with the
/// prototype drawn from the class mixture — background with mass 1 - 0.2c, the
/// rest split evenly over grades 1..c.
Bag sample_bag(Rng& rng, std::uint32_t c, std::size_t n_instances,
               const std::vector<std::vector<double>>& prototypes, double sigma);

/// Full dataset: balanced labels (bag b gets label b mod K), bag sizes
/// Poisson(mean_bag_size) clamped to [min,max], all streams derived from seed.
Dataset generate_dataset(const GenConfig& config, std::uint64_t seed);

/// Embedding pairs (h, h_aug) for augmenter training, tagged with the bag each
/// pair came from so split hygiene can be audited.
struct PairSet {
    std::size_t d = 0;
    std::vector<double> h;                     // [n_pairs × d]
    std::vector<double> h_aug;                 // [n_pairs × d]
    std::vector<std::uint32_t> source_bag;     // bag index per pair

    std::size_t size() const { return source_bag.size(); }
};

/// n_augs_per_patch independently parameterized pairs per instance, restricted
/// to the given bag indices (pass all indices for the whole dataset).
PairSet make_pairs(Rng& rng, const Dataset& dataset, std::size_t n_augs_per_patch,
                   std::span<const std::size_t> bag_indices);
PairSet make_pairs(Rng& rng, const Dataset& dataset, std::size_t n_augs_per_patch);

/// Non-learned reference classifier: every instance votes for its nearest
/// prototype (largest dot product); the bag gets the highest grade whose vote
/// share reaches min_grade_share, or the background label 0 if none does.
std::uint32_t oracle_predict_label(const std::vector<std::vector<double>>& prototypes,
                                   const Bag& bag, double min_grade_share = 0.1);

/// Binary dataset file plus a `.meta.json` sidecar (seed, generation config,
/// prototypes). Embeddings are stored as 32-bit floats; loading widens back to
/// doubles, so save/load/save produces identical bytes.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace embaug
