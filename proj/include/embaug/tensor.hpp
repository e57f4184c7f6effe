#pragma once

#include <memory>
#include <span>
#include <vector>

#include "embaug/common.hpp"

namespace embaug {

/// Dense 64-bit real tensor, row-major. Copies share storage (handle
/// semantics); use clone() for a deep copy. A tensor that requires grad
/// carries a same-shape gradient buffer.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, bool requires_grad = false);
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor scalar(double v, bool requires_grad = false);
    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double v);

    bool defined() const { return impl_ != nullptr; }
    const Shape& shape() const { return impl_->shape; }
    std::size_t rank() const { return impl_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return impl_->shape.at(axis); }
    std::size_t size() const { return impl_->values.size(); }

    std::span<const double> values() const { return impl_->values; }
    std::span<double> values() { return impl_->values; }

    double at(std::size_t i) const { return impl_->values[i]; }
    double& at(std::size_t i) { return impl_->values[i]; }
    double at(std::size_t i, std::size_t j) const;
    double& at(std::size_t i, std::size_t j);

    /// Value of a single-element tensor.
    double item() const;

    bool requires_grad() const { return impl_ && impl_->requires_grad; }
    void set_requires_grad(bool on);
    std::span<const double> grad() const { return impl_->grad; }
    std::span<double> grad() { return impl_->grad; }
    void zero_grad();

    bool all_finite() const;

    /// Deep copy of shape and values. The copy requires grad iff the source
    /// does, with a fresh zero gradient buffer.
    Tensor clone() const;

    bool shares_storage(const Tensor& other) const { return impl_ == other.impl_; }

private:
    struct Impl {
        Shape shape;
        std::vector<double> values;
        bool requires_grad = false;
        std::vector<double> grad;
    };

    std::shared_ptr<Impl> impl_;
};

}  // namespace embaug
