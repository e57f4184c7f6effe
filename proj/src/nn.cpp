#include "embaug/nn.hpp"

#include "embaug/common.hpp"

#include <cmath>

namespace embaug {

DenseLayer::DenseLayer(std::size_t in, std::size_t out, Rng& rng)
    : W({in, out}, true), b({out}, true) {
    if (in == 0 || out == 0) throw ContractError("DenseLayer: zero-width layer");
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    for (double& w : W.values()) w = rng.uniform(-limit, limit);
}

Var DenseLayer::apply(Graph& g, Var x) const {
    return g.add_rowwise(g.matmul(x, g.leaf(W)), g.leaf(b));
}

Mlp::Mlp(const std::vector<std::size_t>& dims, Rng& rng, double slope) : slope_(slope) {
    if (dims.size() < 2) throw ContractError("Mlp: need at least input and output widths");
    layers_.reserve(dims.size() - 1);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        layers_.emplace_back(dims[i], dims[i + 1], rng);
    }
}

Var Mlp::apply(Graph& g, Var x) const {
    Var h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        h = layers_[i].apply(g, h);
        if (i + 1 < layers_.size()) h = g.leaky_relu(h, slope_);
    }
    return h;
}

std::vector<Tensor> Mlp::parameters() const {
    std::vector<Tensor> out;
    out.reserve(layers_.size() * 2);
    for (const DenseLayer& layer : layers_) {
        out.push_back(layer.W);
        out.push_back(layer.b);
    }
    return out;
}

std::vector<Tensor> collect_parameters(std::initializer_list<std::vector<Tensor>> groups) {
    std::vector<Tensor> out;
    for (const auto& group : groups) out.insert(out.end(), group.begin(), group.end());
    return out;
}

std::size_t parameter_count(const std::vector<Tensor>& params) {
    std::size_t n = 0;
    for (const Tensor& p : params) n += p.size();
    return n;
}

}  // namespace embaug
