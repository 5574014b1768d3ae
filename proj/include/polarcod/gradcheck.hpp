#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "polarcod/rng.hpp"
#include "polarcod/tensor.hpp"

namespace polarcod::gradcheck {

struct Options {
    double step = 1e-5;           // central-difference half step
    double tolerance = 1e-4;      // max allowed relative error
    double floor = 1e-6;          // denominator floor for near-zero gradients
    std::size_t max_entries = 0;  // per input; 0 checks every entry
    std::uint64_t seed = 0;       // picks sampled entries and contraction weights
};

struct Result {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t entries = 0;
    bool passed = false;
};

// |a - b| / max(|a|, |b|, floor)
double relative_error(double analytic, double numeric, double floor);

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

// Contracts fn's output with fixed random weights into a scalar and compares
// its analytic gradient w.r.t. every input leaf against central differences.
// Inputs must be leaves with requires_grad set.
Result check(const std::string& name, const Fn& fn, std::vector<Tensor> inputs, const Options& opt = {});

// Scalar-loss variant: `loss` evaluates the full objective from the current
// values of `params` (which it closes over).
Result check_scalar(const std::string& name, const std::function<Tensor()>& loss, std::vector<Tensor> params,
                    const Options& opt = {});

// One check per differentiable operation family of the tensor engine.
std::vector<Result> op_suite(std::uint64_t seed, const Options& opt = {});

}  // namespace polarcod::gradcheck
