#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vseg {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {

// One vertex of the reverse-mode graph. Values are immutable once the node is
// built (grad buffers and leaf parameters owned by the optimizer excepted).
template <class S>
struct TensorNode {
    Shape shape;
    std::vector<S> values;
    std::vector<S> grad;  // allocated when requires_grad
    bool requires_grad = false;
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backward_fn;  // null for leaves

    std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), S(0));
    }
};

}  // namespace detail

// Scoped switch that stops ops from recording the graph (inference paths).
class GradPause {
public:
    GradPause();
    ~GradPause();
    GradPause(const GradPause&) = delete;
    GradPause& operator=(const GradPause&) = delete;
    static bool recording();

private:
    bool prev_;
};

template <class S>
class TensorT {
public:
    using Node = detail::TensorNode<S>;

    TensorT() = default;

    static TensorT zeros(Shape shape, bool requires_grad = false);
    static TensorT full(Shape shape, S value, bool requires_grad = false);
    static TensorT from_values(Shape shape, std::vector<S> values,
                               bool requires_grad = false);
    static TensorT scalar(S value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::int64_t numel() const { return node_->numel(); }
    std::int64_t dim(std::size_t axis) const { return node_->shape[axis]; }
    bool requires_grad() const { return node_ && node_->requires_grad; }

    const std::vector<S>& values() const { return node_->values; }
    // Mutable access is for construction and optimizer updates on leaves;
    // never mutate a tensor that is already part of a recorded graph.
    std::vector<S>& mutable_values() { return node_->values; }

    bool has_grad() const { return node_ && !node_->grad.empty(); }
    const std::vector<S>& grad() const;
    std::vector<S>& mutable_grad();

    S item() const;  // numel()==1

    // Reverse-mode sweep from a scalar result. Grad buffers accumulate with
    // += across repeated calls; zero_grad() resets between optimizer steps.
    void backward();
    void zero_grad();

    std::shared_ptr<Node> node() const { return node_; }
    static TensorT wrap(std::shared_ptr<Node> node) {
        TensorT t;
        t.node_ = std::move(node);
        return t;
    }

private:
    std::shared_ptr<Node> node_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

extern template class TensorT<float>;
extern template class TensorT<double>;

}  // namespace vseg
