#pragma once

#include "embaug/tensor.hpp"

#include <cstdint>
#include <vector>

namespace embaug {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/// Adam with classic (coupled) L2 weight decay: the decay term is added to the
/// gradient before the moment updates, g <- g + wd*theta.
class Adam {
public:
    /// Every parameter must carry a grad buffer (requires_grad set).
    Adam(std::vector<Tensor> params, AdamConfig config);

    /// One update from the grads currently held by the parameters.
    /// Grads are left untouched; call zero_grad() before the next backward.
    void step();

    void zero_grad();

    std::uint64_t step_count() const { return t_; }
    const AdamConfig& config() const { return config_; }

private:
    std::vector<Tensor> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    AdamConfig config_;
    std::uint64_t t_ = 0;
};

}  // namespace embaug
