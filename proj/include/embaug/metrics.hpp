#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace embaug {

/// Everything reported per evaluation: accuracy, quadratic-weighted kappa
/// (the table's κ² column — weights are squared, the value is not), mean NLL
/// in nats, and the raw confusion counts (row = truth, column = prediction).
struct EvalResult {
    double accuracy = 0.0;
    double kappa2 = 0.0;
    double nll = 0.0;
    std::size_t n = 0;
    std::size_t K = 0;
    std::vector<std::size_t> confusion;  // row-major K×K

    std::size_t confusion_at(std::size_t truth, std::size_t pred) const {
        return confusion[truth * K + pred];
    }
};

/// Fraction of exact matches.
double accuracy(std::span<const std::uint32_t> preds, std::span<const std::uint32_t> truth);

/// Quadratic-weighted Cohen kappa: 1 - sum(w·O)/sum(w·E) with w_ij
/// proportional to (i-j)², O the observed proportion matrix and E the outer
/// product of its marginals. Perfect agreement on a constant vector (0/0) is
/// defined as 1.0.
double quadratic_kappa(std::span<const std::uint32_t> preds,
                       std::span<const std::uint32_t> truth, std::size_t K);

/// Mean negative log-likelihood of the true class, in nats, with the
/// probability clamped to at least 1e-12. Every row of probs must sum to 1
/// within 1e-9.
double nll(const std::vector<std::vector<double>>& probs,
           std::span<const std::uint32_t> truth);

/// Argmax predictions from probability rows, then all metrics at once.
EvalResult evaluate_predictions(const std::vector<std::vector<double>>& probs,
                                std::span<const std::uint32_t> truth, std::size_t K);

}  // namespace embaug
