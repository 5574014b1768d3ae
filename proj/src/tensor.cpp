#include "polarcod/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "polarcod/error.hpp"

namespace polarcod {

namespace {

thread_local bool g_grad_enabled = true;
thread_local bool g_checked = false;
thread_local Precision g_precision = Precision::f64;

void check_values(const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw NumericError("non-finite value produced under checked mode");
        }
    }
}

}  // namespace

std::string Shape::str() const {
    std::ostringstream os;
    os << "(" << n << ", " << c << ", " << h << ", " << w << ")";
    return os.str();
}

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool enabled) { g_grad_enabled = enabled; }
bool checked_mode() { return g_checked; }
void set_checked_mode(bool enabled) { g_checked = enabled; }
Precision precision_mode() { return g_precision; }
void set_precision_mode(Precision p) { g_precision = p; }

double round_to_precision(double v) {
    return g_precision == Precision::f32 ? static_cast<double>(static_cast<float>(v)) : v;
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& text) {
    if (text == "f64") return Precision::f64;
    if (text == "f32") return Precision::f32;
    throw ConfigError("unknown precision '" + text + "' (expected f32 or f64)");
}

namespace detail {

Node::~Node() {
    for (auto& in : inputs) {
        if (in) --in->consumers;
    }
}

std::vector<double>& Node::grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
}

double* Node::input_grad(std::size_t i) {
    auto& in = inputs[i];
    if (!in || !in->requires_grad) return nullptr;
    return in->grad_buffer().data();
}

void Node::release() {
    for (auto& in : inputs) {
        if (in) --in->consumers;
    }
    inputs.clear();
    backward = nullptr;
    if (!leaf) grad.clear();
    released = true;
}

}  // namespace detail

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(shape, 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    return from(shape, std::vector<double>(shape.numel(), value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) {
        throw DimensionError("negative dimension in shape " + shape.str());
    }
    if (values.size() != shape.numel()) {
        throw DimensionError("data length " + std::to_string(values.size()) + " does not match shape " +
                             shape.str());
    }
    auto node = std::make_shared<detail::Node>();
    node->shape = shape;
    node->value = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value) { return from({1, 1, 1, 1}, {value}); }

const Shape& Tensor::shape() const {
    static const Shape empty{};
    return node_ ? node_->shape : empty;
}

std::span<const double> Tensor::data() const {
    if (!node_) return {};
    return node_->value;
}

std::span<double> Tensor::mutable_data() {
    if (!node_) return {};
    if (!node_->leaf) throw TapeError("cannot mutate the output of a recorded operation");
    if (node_->consumers > 0) throw TapeError("cannot mutate a tensor read by a live tape");
    return node_->value;
}

double Tensor::at(int n, int c, int h, int w) const {
    const Shape& s = shape();
    return node_->value[((static_cast<std::size_t>(n) * s.c + c) * s.h + h) * s.w + w];
}

double Tensor::item() const {
    if (numel() != 1) throw DimensionError("item() on non-scalar tensor " + shape().str());
    return node_->value[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
bool Tensor::is_leaf() const { return !node_ || node_->leaf; }

void Tensor::set_requires_grad(bool flag) {
    if (!node_->leaf) throw TapeError("requires_grad can only be set on leaves");
    node_->requires_grad = flag;
}

std::span<const double> Tensor::grad() const {
    if (!node_) return {};
    return node_->grad;
}

std::span<double> Tensor::mutable_grad() { return node_->grad_buffer(); }

void Tensor::zero_grad() {
    if (node_) node_->grad.clear();
}

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tensor Tensor::clone() const {
    Tensor t = from(shape(), node_->value, node_->leaf && node_->requires_grad);
    return t;
}

Tensor Tensor::make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                           detail::BackwardFn fn) {
    if (g_precision == Precision::f32) {
        for (double& v : values) v = static_cast<double>(static_cast<float>(v));
    }
    if (g_checked) check_values(values);
    auto node = std::make_shared<detail::Node>();
    node->shape = shape;
    node->value = std::move(values);
    bool any = false;
    if (g_grad_enabled) {
        for (const auto& in : inputs) any = any || in.requires_grad();
    }
    if (any) {
        node->requires_grad = true;
        node->leaf = false;
        node->inputs.reserve(inputs.size());
        for (auto& in : inputs) {
            if (in.node_) ++in.node_->consumers;
            node->inputs.push_back(in.node_);
        }
        node->backward = std::move(fn);
    }
    return Tensor(std::move(node));
}

void Tensor::backward() const {
    if (!node_) throw TapeError("backward() on an undefined tensor");
    if (numel() != 1) throw TapeError("backward() requires a scalar loss, got shape " + shape().str());
    if (node_->released) throw TapeError("backward() on a released tape");
    if (!node_->requires_grad) throw TapeError("backward() on a tensor that does not require gradients");

    // Iterative post-order DFS gives a topological order of the recorded graph.
    std::vector<detail::Node*> order;
    std::unordered_set<detail::Node*> seen;
    std::vector<std::pair<detail::Node*, std::size_t>> stack;
    stack.emplace_back(node_.get(), 0);
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->inputs.size()) {
            detail::Node* child = n->inputs[next++].get();
            if (child && child->requires_grad && !child->leaf && !seen.count(child)) {
                if (child->released) throw TapeError("backward() through a released tape");
                seen.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }

    node_->grad_buffer()[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
    for (detail::Node* n : order) n->release();
}

}  // namespace polarcod
