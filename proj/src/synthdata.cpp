#include "embaug/synthdata.hpp"

#include "embaug/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace embaug {

OracleParams OracleParams::identity(std::size_t d) {
    OracleParams p;
    p.alpha = 0.0;
    p.gamma.assign(d, 1.0);
    p.beta.assign(d, 0.0);
    p.scale = 1.0;
    return p;
}

OracleAugmenter::OracleAugmenter(std::size_t d, OracleRanges ranges)
    : d_(d), ranges_(ranges) {
    if (d == 0 || d % 4 != 0) {
        throw ContractError("OracleAugmenter: dimension must be a positive multiple of 4, got " +
                            std::to_string(d));
    }
    const std::size_t m = d / 4;
    planes_.reserve(m);
    for (std::size_t i = 0; i < m; ++i) planes_.emplace_back(2 * i, 2 * i + 1);
}

OracleAugmenter::OracleAugmenter(std::size_t d, OracleRanges ranges,
                                 std::vector<std::pair<std::size_t, std::size_t>> planes)
    : d_(d), ranges_(ranges), planes_(std::move(planes)) {
    if (d == 0) throw ContractError("OracleAugmenter: dimension must be positive");
    std::vector<bool> used(d, false);
    for (const auto& [a, b] : planes_) {
        if (a >= d || b >= d || a == b || used[a] || used[b]) {
            throw ContractError("OracleAugmenter: plane (" + std::to_string(a) + "," +
                                std::to_string(b) + ") is invalid for dimension " +
                                std::to_string(d));
        }
        used[a] = used[b] = true;
    }
}

OracleParams OracleAugmenter::sample_params(Rng& rng) const {
    OracleParams p;
    p.alpha = rng.uniform(-ranges_.alpha_max, ranges_.alpha_max);
    p.gamma.resize(d_);
    for (double& g : p.gamma) g = rng.uniform(1.0 - ranges_.delta_gamma, 1.0 + ranges_.delta_gamma);
    p.beta.resize(d_);
    for (double& b : p.beta) b = rng.uniform(-ranges_.delta_beta, ranges_.delta_beta);
    p.scale = rng.uniform(1.0 - ranges_.delta_scale, 1.0 + ranges_.delta_scale);
    return p;
}

std::vector<double> OracleAugmenter::apply(std::span<const double> h,
                                           const OracleParams& params) const {
    if (h.size() != d_ || params.gamma.size() != d_ || params.beta.size() != d_) {
        throw ContractError("OracleAugmenter::apply: dimension mismatch (d=" + std::to_string(d_) +
                            ", h=" + std::to_string(h.size()) +
                            ", gamma=" + std::to_string(params.gamma.size()) +
                            ", beta=" + std::to_string(params.beta.size()) + ")");
    }
    std::vector<double> out(h.begin(), h.end());
    const double c = std::cos(params.alpha), s = std::sin(params.alpha);
    for (const auto& [a, b] : planes_) {
        const double xa = out[a], xb = out[b];
        out[a] = c * xa - s * xb;
        out[b] = s * xa + c * xb;
    }
    for (std::size_t i = 0; i < d_; ++i) {
        out[i] = params.scale * (params.gamma[i] * out[i] + params.beta[i]);
    }
    return out;
}

std::vector<std::vector<double>> gen_prototypes(Rng& rng, std::size_t K, std::size_t d) {
    if (K < 2) throw ContractError("gen_prototypes: need at least 2 classes");
    if (d < 4) throw ContractError("gen_prototypes: need dimension >= 4");
    constexpr int kMaxTries = 1000;
    std::vector<std::vector<double>> protos;
    protos.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
            std::vector<double> cand(d);
            double norm_sq = 0.0;
            for (double& x : cand) {
                x = rng.normal();
                norm_sq += x * x;
            }
            const double norm = std::sqrt(norm_sq);
            if (norm < 1e-8) continue;
            for (double& x : cand) x /= norm;
            bool separated = true;
            for (const auto& p : protos) {
                double dot = std::inner_product(cand.begin(), cand.end(), p.begin(), 0.0);
                if (std::abs(dot) >= 0.5) {
                    separated = false;
                    break;
                }
            }
            if (separated) {
                protos.push_back(std::move(cand));
                placed = true;
            }
        }
        if (!placed) {
            throw GenerationError("gen_prototypes: no candidate for prototype " +
                                  std::to_string(k) + " after " + std::to_string(kMaxTries) +
                                  " tries (dimension " + std::to_string(d) + " too small?)");
        }
    }
    return protos;
}

Bag sample_bag(Rng& rng, std::uint32_t c, std::size_t n_instances,
               const std::vector<std::vector<double>>& prototypes, double sigma) {
    const std::size_t K = prototypes.size();
    if (c >= K) {
        throw ContractError("sample_bag: class " + std::to_string(c) + " out of range for K=" +
                            std::to_string(K));
    }
    if (n_instances == 0) throw ContractError("sample_bag: bag needs at least one instance");
    const std::size_t d = prototypes[0].size();
    Bag bag;
    bag.label = c;
    bag.d = d;
    bag.data.resize(n_instances * d);
    const double background_mass = 1.0 - 0.2 * static_cast<double>(c);
    for (std::size_t i = 0; i < n_instances; ++i) {
        std::size_t proto = 0;
        const double r = rng.uniform();
        if (r >= background_mass && c > 0) {
            // Remaining mass is split evenly (0.2 each) over grades 1..c.
            auto grade = static_cast<std::size_t>((r - background_mass) / 0.2);
            proto = 1 + std::min(grade, static_cast<std::size_t>(c - 1));
        }
        auto row = bag.instance(i);
        for (std::size_t j = 0; j < d; ++j) {
            row[j] = prototypes[proto][j] + sigma * rng.normal();
        }
    }
    return bag;
}

Dataset generate_dataset(const GenConfig& config, std::uint64_t seed) {
    if (config.K < 2) throw ContractError("generate_dataset: need at least 2 classes");
    if (config.n_bags == 0) throw ContractError("generate_dataset: need at least one bag");
    if (config.min_bag_size == 0 || config.min_bag_size > config.max_bag_size) {
        throw ContractError("generate_dataset: bad bag-size bounds");
    }
    Dataset ds;
    ds.d = config.d;
    ds.K = config.K;
    ds.seed = seed;
    ds.config = config;

    Rng root(seed);
    Rng proto_rng = root.derive("prototypes");
    ds.prototypes = gen_prototypes(proto_rng, config.K, config.d);

    ds.bags.reserve(config.n_bags);
    for (std::size_t b = 0; b < config.n_bags; ++b) {
        Rng bag_rng = root.derive("bag", b);
        const auto label = static_cast<std::uint32_t>(b % config.K);
        const std::uint64_t raw = bag_rng.poisson(config.mean_bag_size);
        const std::size_t n = std::clamp<std::size_t>(static_cast<std::size_t>(raw),
                                                      config.min_bag_size, config.max_bag_size);
        ds.bags.push_back(sample_bag(bag_rng, label, n, ds.prototypes, config.sigma));
    }
    return ds;
}

PairSet make_pairs(Rng& rng, const Dataset& dataset, std::size_t n_augs_per_patch,
                   std::span<const std::size_t> bag_indices) {
    if (n_augs_per_patch == 0) throw ContractError("make_pairs: need at least one augmentation");
    OracleAugmenter aug(dataset.d, dataset.config.oracle);
    PairSet pairs;
    pairs.d = dataset.d;
    std::size_t total_instances = 0;
    for (std::size_t b : bag_indices) total_instances += dataset.bags.at(b).n_instances();
    pairs.h.reserve(total_instances * n_augs_per_patch * dataset.d);
    pairs.h_aug.reserve(total_instances * n_augs_per_patch * dataset.d);
    pairs.source_bag.reserve(total_instances * n_augs_per_patch);
    for (std::size_t b : bag_indices) {
        const Bag& bag = dataset.bags.at(b);
        for (std::size_t i = 0; i < bag.n_instances(); ++i) {
            auto h = bag.instance(i);
            for (std::size_t a = 0; a < n_augs_per_patch; ++a) {
                OracleParams theta = aug.sample_params(rng);
                std::vector<double> h_aug = aug.apply(h, theta);
                pairs.h.insert(pairs.h.end(), h.begin(), h.end());
                pairs.h_aug.insert(pairs.h_aug.end(), h_aug.begin(), h_aug.end());
                pairs.source_bag.push_back(static_cast<std::uint32_t>(b));
            }
        }
    }
    return pairs;
}

PairSet make_pairs(Rng& rng, const Dataset& dataset, std::size_t n_augs_per_patch) {
    std::vector<std::size_t> all(dataset.bags.size());
    std::iota(all.begin(), all.end(), 0);
    return make_pairs(rng, dataset, n_augs_per_patch, all);
}

std::uint32_t oracle_predict_label(const std::vector<std::vector<double>>& prototypes,
                                   const Bag& bag, double min_grade_share) {
    const std::size_t K = prototypes.size();
    std::vector<std::size_t> votes(K, 0);
    for (std::size_t i = 0; i < bag.n_instances(); ++i) {
        auto h = bag.instance(i);
        std::size_t best = 0;
        double best_dot = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < K; ++k) {
            double dot =
                std::inner_product(h.begin(), h.end(), prototypes[k].begin(), 0.0);
            if (dot > best_dot) {
                best_dot = dot;
                best = k;
            }
        }
        ++votes[best];
    }
    const auto n = static_cast<double>(bag.n_instances());
    for (std::size_t k = K; k-- > 1;) {
        if (static_cast<double>(votes[k]) / n >= min_grade_share) {
            return static_cast<std::uint32_t>(k);
        }
    }
    return 0;
}

}  // namespace embaug
