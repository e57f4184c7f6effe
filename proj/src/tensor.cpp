#include "embaug/tensor.hpp"

#include <cmath>
#include <sstream>

namespace embaug {

std::string shape_str(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ',';
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

Tensor::Tensor(Shape shape, bool requires_grad) {
    for (std::size_t d : shape) {
        if (d == 0) throw ContractError("tensor dimensions must be positive, got " + shape_str(shape));
    }
    impl_ = std::make_shared<Impl>();
    impl_->values.assign(shape_numel(shape), 0.0);
    impl_->shape = std::move(shape);
    if (requires_grad) set_requires_grad(true);
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape_numel(shape) != values.size()) {
        throw ContractError("value count " + std::to_string(values.size()) +
                            " does not match shape " + shape_str(shape));
    }
    for (std::size_t d : shape) {
        if (d == 0) throw ContractError("tensor dimensions must be positive, got " + shape_str(shape));
    }
    impl_ = std::make_shared<Impl>();
    impl_->shape = std::move(shape);
    impl_->values = std::move(values);
    if (requires_grad) set_requires_grad(true);
}

Tensor Tensor::scalar(double v, bool requires_grad) {
    return Tensor({1}, {v}, requires_grad);
}

Tensor Tensor::zeros(Shape shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(Shape shape, double v) {
    Tensor t(std::move(shape));
    for (double& x : t.values()) x = v;
    return t;
}

double Tensor::at(std::size_t i, std::size_t j) const {
    return impl_->values[i * impl_->shape[1] + j];
}

double& Tensor::at(std::size_t i, std::size_t j) {
    return impl_->values[i * impl_->shape[1] + j];
}

double Tensor::item() const {
    if (!impl_ || impl_->values.size() != 1) {
        throw ContractError("item() requires a single-element tensor, got " +
                            (impl_ ? shape_str(impl_->shape) : std::string("undefined")));
    }
    return impl_->values[0];
}

void Tensor::set_requires_grad(bool on) {
    impl_->requires_grad = on;
    if (on) {
        impl_->grad.assign(impl_->values.size(), 0.0);
    } else {
        impl_->grad.clear();
    }
}

void Tensor::zero_grad() {
    for (double& g : impl_->grad) g = 0.0;
}

bool Tensor::all_finite() const {
    for (double v : impl_->values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

Tensor Tensor::clone() const {
    Tensor t;
    t.impl_ = std::make_shared<Impl>(*impl_);
    return t;
}

}  // namespace embaug
