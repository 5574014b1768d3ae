#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace polarcod {

// (batch, channels, height, width)
struct Shape {
    int n = 0;
    int c = 0;
    int h = 0;
    int w = 0;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
               static_cast<std::size_t>(w);
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

namespace detail {

struct Node;
using BackwardFn = std::function<void(Node& self)>;

// One record on the gradient tape. Non-leaf nodes own their inputs and a
// closure that pushes self.grad into the inputs' gradient buffers.
struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    bool leaf = true;
    bool released = false;
    int consumers = 0;  // live recorded ops reading this node
    std::vector<std::shared_ptr<Node>> inputs;
    BackwardFn backward;

    ~Node();
    std::vector<double>& grad_buffer();
    // Gradient buffer of input i, or nullptr when that input needs no gradient.
    double* input_grad(std::size_t i);
    void release();
};

}  // namespace detail

// Rank-4 double-precision tensor handle with optional reverse-mode
// differentiation. Copies share storage; use clone() for a deep copy.
class Tensor {
   public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const { return static_cast<bool>(node_); }
    const Shape& shape() const;
    std::size_t numel() const { return shape().numel(); }

    std::span<const double> data() const;
    // Writable view; only for leaves that no live recorded op reads.
    std::span<double> mutable_data();
    double at(int n, int c, int h, int w) const;
    double item() const;

    bool requires_grad() const;
    bool is_leaf() const;
    void set_requires_grad(bool flag);

    // Accumulated gradient; empty span when nothing has been accumulated.
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    void zero_grad();

    Tensor detach() const;
    Tensor clone() const;

    // Reverse sweep from this scalar; releases the recorded graph afterwards.
    void backward() const;

    // Internal: construct the result of a recorded operation.
    static Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                              detail::BackwardFn fn);
    const std::shared_ptr<detail::Node>& node() const { return node_; }

   private:
    explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
    std::shared_ptr<detail::Node> node_;
};

// Thread-local switch controlling whether operations are recorded.
bool grad_enabled();
void set_grad_enabled(bool enabled);

class NoGradGuard {
   public:
    NoGradGuard() : previous_(grad_enabled()) { set_grad_enabled(false); }
    ~NoGradGuard() { set_grad_enabled(previous_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

   private:
    bool previous_;
};

// Checked mode: every operation result is verified finite (NumericError otherwise).
bool checked_mode();
void set_checked_mode(bool enabled);

enum class Precision { f64, f32 };

// Under f32 every operation result is rounded to single precision. Arithmetic
// itself stays in double; this emulates f32 storage, it is not faster.
Precision precision_mode();
void set_precision_mode(Precision p);

double round_to_precision(double v);

std::string to_string(Precision p);
Precision parse_precision(const std::string& text);

}  // namespace polarcod
