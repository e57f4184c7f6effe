#include "embaug/adam.hpp"

#include "embaug/common.hpp"

#include <cmath>
#include <string>

namespace embaug {

Adam::Adam(std::vector<Tensor> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (std::size_t k = 0; k < params_.size(); ++k) {
        if (!params_[k].requires_grad()) {
            throw ContractError("Adam: parameter " + std::to_string(k) +
                                " has no grad buffer (requires_grad is off)");
        }
        m_.emplace_back(params_[k].size(), 0.0);
        v_.emplace_back(params_[k].size(), 0.0);
    }
}

void Adam::step() {
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto values = params_[k].values();
        auto grads = params_[k].grad();
        for (std::size_t i = 0; i < values.size(); ++i) {
            double g = grads[i] + config_.weight_decay * values[i];
            if (!std::isfinite(g)) {
                throw NonFiniteError("adam_step: non-finite gradient in parameter " +
                                     std::to_string(k) + " at element " + std::to_string(i));
            }
            m_[k][i] = config_.beta1 * m_[k][i] + (1.0 - config_.beta1) * g;
            v_[k][i] = config_.beta2 * v_[k][i] + (1.0 - config_.beta2) * g * g;
            double m_hat = m_[k][i] / bc1;
            double v_hat = v_[k][i] / bc2;
            values[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace embaug
