#pragma once

#include "embaug/graph.hpp"
#include "embaug/rng.hpp"
#include "embaug/tensor.hpp"

#include <cstddef>
#include <vector>

namespace embaug {

/// One fully connected layer: x[m×in] -> x·W + b, W stored [in×out].
struct DenseLayer {
    Tensor W;
    Tensor b;

    /// Glorot-uniform weights (limit sqrt(6/(in+out))), zero bias.
    DenseLayer(std::size_t in, std::size_t out, Rng& rng);

    std::size_t fan_in() const { return W.dim(0); }
    std::size_t fan_out() const { return W.dim(1); }

    Var apply(Graph& g, Var x) const;
};

/// Plain MLP: leaky-ReLU between layers, linear output.
class Mlp {
public:
    /// dims = {in, hidden..., out}; needs at least one layer.
    Mlp(const std::vector<std::size_t>& dims, Rng& rng, double slope = 0.2);

    Var apply(Graph& g, Var x) const;

    /// Trainable tensors in declaration order: W0, b0, W1, b1, ...
    std::vector<Tensor> parameters() const;

    const std::vector<DenseLayer>& layers() const { return layers_; }
    double slope() const { return slope_; }

private:
    std::vector<DenseLayer> layers_;
    double slope_;
};

/// Collect the parameters of several layers/models into one flat list.
std::vector<Tensor> collect_parameters(std::initializer_list<std::vector<Tensor>> groups);

/// Total number of scalar entries across a parameter list.
std::size_t parameter_count(const std::vector<Tensor>& params);

}  // namespace embaug
