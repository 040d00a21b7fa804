#include "vseg/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace vseg {

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (std::int64_t e : shape) {
        if (e <= 0) throw std::invalid_argument("tensor shape extents must be positive");
        n *= e;
    }
    return n;
}

std::string shape_to_string(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ",";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

namespace {
thread_local bool g_recording = true;
}

GradPause::GradPause() : prev_(g_recording) { g_recording = false; }
GradPause::~GradPause() { g_recording = prev_; }
bool GradPause::recording() { return g_recording; }

template <class S>
TensorT<S> TensorT<S>::zeros(Shape shape, bool requires_grad) {
    return full(std::move(shape), S(0), requires_grad);
}

template <class S>
TensorT<S> TensorT<S>::full(Shape shape, S value, bool requires_grad) {
    const std::int64_t n = shape_numel(shape);
    return from_values(std::move(shape), std::vector<S>(static_cast<std::size_t>(n), value),
                       requires_grad);
}

template <class S>
TensorT<S> TensorT<S>::from_values(Shape shape, std::vector<S> values, bool requires_grad) {
    const std::int64_t n = shape_numel(shape);
    if (n != static_cast<std::int64_t>(values.size())) {
        throw std::invalid_argument("tensor value count " + std::to_string(values.size()) +
                                    " does not match shape " + shape_to_string(shape));
    }
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    if (requires_grad) node->ensure_grad();
    return wrap(std::move(node));
}

template <class S>
TensorT<S> TensorT<S>::scalar(S value, bool requires_grad) {
    return from_values({1}, {value}, requires_grad);
}

template <class S>
const std::vector<S>& TensorT<S>::grad() const {
    if (!node_ || node_->grad.empty()) throw std::runtime_error("tensor has no gradient buffer");
    return node_->grad;
}

template <class S>
std::vector<S>& TensorT<S>::mutable_grad() {
    if (!node_ || node_->grad.empty()) throw std::runtime_error("tensor has no gradient buffer");
    return node_->grad;
}

template <class S>
S TensorT<S>::item() const {
    if (!node_ || node_->numel() != 1)
        throw std::invalid_argument("item() requires a scalar tensor");
    return node_->values[0];
}

template <class S>
void TensorT<S>::zero_grad() {
    if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), S(0));
}

template <class S>
void TensorT<S>::backward() {
    if (!node_) throw std::invalid_argument("backward() on an undefined tensor");
    if (node_->numel() != 1)
        throw std::invalid_argument("backward() requires a scalar result, got shape " +
                                    shape_to_string(node_->shape));
    if (!node_->requires_grad) return;  // nothing reachable requires grad

    // Post-order DFS; reverse gives a topological order with the result last.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [cur, idx] = stack.back();
        if (idx < cur->parents.size()) {
            Node* parent = cur->parents[idx++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(cur);
            stack.pop_back();
        }
    }

    // Interior grads are scratch for this sweep; only leaf grads accumulate
    // across repeated backward calls.
    for (Node* n : order) {
        n->ensure_grad();
        if (n->backward_fn) std::fill(n->grad.begin(), n->grad.end(), S(0));
    }
    node_->grad[0] += S(1);

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

template class TensorT<float>;
template class TensorT<double>;

}  // namespace vseg
