#include "embaug/metrics.hpp"

#include "embaug/common.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace embaug {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* op) {
    if (a != b) {
        throw ContractError(std::string(op) + ": length mismatch: " + std::to_string(a) + " vs " +
                            std::to_string(b));
    }
    if (a == 0) throw ContractError(std::string(op) + ": empty input");
}

void require_in_range(std::span<const std::uint32_t> labels, std::size_t K, const char* op) {
    for (std::uint32_t v : labels) {
        if (v >= K) {
            throw ContractError(std::string(op) + ": label " + std::to_string(v) +
                                " out of range for K=" + std::to_string(K));
        }
    }
}

}  // namespace

double accuracy(std::span<const std::uint32_t> preds, std::span<const std::uint32_t> truth) {
    require_same_length(preds.size(), truth.size(), "accuracy");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == truth[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double quadratic_kappa(std::span<const std::uint32_t> preds,
                       std::span<const std::uint32_t> truth, std::size_t K) {
    require_same_length(preds.size(), truth.size(), "quadratic_kappa");
    if (K < 2) throw ContractError("quadratic_kappa: need at least 2 classes");
    require_in_range(preds, K, "quadratic_kappa");
    require_in_range(truth, K, "quadratic_kappa");

    // Work on integer counts: the common (K-1)² weight normalization cancels
    // in the ratio, and exact count arithmetic keeps clean cases (perfect
    // agreement, exact reversal) free of rounding residue.
    std::vector<double> observed(K * K, 0.0);
    std::vector<double> row(K, 0.0), col(K, 0.0);
    for (std::size_t s = 0; s < preds.size(); ++s) {
        observed[truth[s] * K + preds[s]] += 1.0;
        row[truth[s]] += 1.0;
        col[preds[s]] += 1.0;
    }
    const auto n = static_cast<double>(preds.size());
    double weighted_observed = 0.0;  // sum (i-j)² O_counts
    double weighted_expected = 0.0;  // sum (i-j)² row_i col_j
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t j = 0; j < K; ++j) {
            const double w = static_cast<double>(i > j ? i - j : j - i);
            weighted_observed += w * w * observed[i * K + j];
            weighted_expected += w * w * row[i] * col[j];
        }
    }
    if (weighted_expected == 0.0) return 1.0;  // constant, identical vectors
    return 1.0 - (n * weighted_observed) / weighted_expected;
}

double nll(const std::vector<std::vector<double>>& probs,
           std::span<const std::uint32_t> truth) {
    require_same_length(probs.size(), truth.size(), "nll");
    constexpr double kEps = 1e-12;
    double total = 0.0;
    for (std::size_t s = 0; s < probs.size(); ++s) {
        const auto& p = probs[s];
        if (truth[s] >= p.size()) {
            throw ContractError("nll: label " + std::to_string(truth[s]) +
                                " out of range for a " + std::to_string(p.size()) +
                                "-class probability vector");
        }
        double sum = 0.0;
        for (double v : p) {
            if (v < 0.0) throw ContractError("nll: negative probability in sample " +
                                             std::to_string(s));
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw ContractError("nll: probability vector of sample " + std::to_string(s) +
                                " sums to " + std::to_string(sum));
        }
        total += -std::log(std::max(p[truth[s]], kEps));
    }
    return total / static_cast<double>(probs.size());
}

EvalResult evaluate_predictions(const std::vector<std::vector<double>>& probs,
                                std::span<const std::uint32_t> truth, std::size_t K) {
    require_same_length(probs.size(), truth.size(), "evaluate_predictions");
    if (K < 2) throw ContractError("evaluate_predictions: need at least 2 classes");
    std::vector<std::uint32_t> preds(probs.size());
    for (std::size_t s = 0; s < probs.size(); ++s) {
        if (probs[s].size() != K) {
            throw ContractError("evaluate_predictions: sample " + std::to_string(s) + " has " +
                                std::to_string(probs[s].size()) + " probabilities, expected " +
                                std::to_string(K));
        }
        preds[s] = static_cast<std::uint32_t>(
            std::max_element(probs[s].begin(), probs[s].end()) - probs[s].begin());
    }
    EvalResult r;
    r.n = probs.size();
    r.K = K;
    r.accuracy = accuracy(preds, truth);
    r.kappa2 = quadratic_kappa(preds, truth, K);
    r.nll = nll(probs, truth);
    r.confusion.assign(K * K, 0);
    for (std::size_t s = 0; s < probs.size(); ++s) {
        ++r.confusion[truth[s] * K + preds[s]];
    }
    return r;
}

}  // namespace embaug
