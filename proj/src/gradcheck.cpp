#include "polarcod/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polarcod/error.hpp"
#include "polarcod/fft.hpp"
#include "polarcod/ops.hpp"

namespace polarcod::gradcheck {

double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace {

std::vector<std::size_t> pick_entries(std::size_t n, std::size_t max_entries, Rng& rng) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    if (max_entries == 0 || max_entries >= n) return all;
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < max_entries; ++i) {
        std::size_t j = i + rng.below(n - i);
        std::swap(all[i], all[j]);
    }
    all.resize(max_entries);
    std::sort(all.begin(), all.end());
    return all;
}

Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(s.numel());
    for (double& x : v) x = rng.uniform(lo, hi);
    return Tensor::from(s, std::move(v), true);
}

}  // namespace

Result check_scalar(const std::string& name, const std::function<Tensor()>& loss, std::vector<Tensor> params,
                    const Options& opt) {
    Rng rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
    for (auto& p : params) p.zero_grad();
    {
        Tensor l = loss();
        l.backward();
    }
    Result r{name, 0.0, 0, true};
    auto eval = [&] {
        NoGradGuard ng;
        return loss().item();
    };
    for (auto& p : params) {
        std::vector<double> analytic(p.grad().begin(), p.grad().end());
        if (analytic.empty()) analytic.assign(p.numel(), 0.0);
        for (std::size_t i : pick_entries(p.numel(), opt.max_entries, rng)) {
            const double orig = p.data()[i];
            p.mutable_data()[i] = orig + opt.step;
            const double up = eval();
            p.mutable_data()[i] = orig - opt.step;
            const double down = eval();
            p.mutable_data()[i] = orig;
            const double numeric = (up - down) / (2.0 * opt.step);
            r.max_rel_error = std::max(r.max_rel_error, relative_error(analytic[i], numeric, opt.floor));
            ++r.entries;
        }
    }
    r.passed = r.max_rel_error <= opt.tolerance;
    return r;
}

Result check(const std::string& name, const Fn& fn, std::vector<Tensor> inputs, const Options& opt) {
    for (const auto& t : inputs) {
        if (!t.is_leaf() || !t.requires_grad()) throw TapeError("gradcheck inputs must be leaves requiring grad");
    }
    Tensor weights;
    {
        NoGradGuard ng;
        Tensor probe = fn(inputs);
        Rng rng(opt.seed + 17);
        weights = random_tensor(probe.shape(), rng);
        weights.set_requires_grad(false);
    }
    auto loss = [&] { return ops::sum(ops::mul(fn(inputs), weights)); };
    return check_scalar(name, loss, inputs, opt);
}

std::vector<Result> op_suite(std::uint64_t seed, const Options& opt) {
    Rng rng(seed);
    std::vector<Result> out;
    auto run = [&](const std::string& name, const Fn& fn, std::vector<Tensor> in) {
        Options o = opt;
        o.seed = seed + out.size();
        out.push_back(check(name, fn, std::move(in), o));
    };
    const Shape s{2, 3, 5, 5};
    run("add (broadcast)", [](const auto& v) { return ops::add(v[0], v[1]); },
        {random_tensor(s, rng), random_tensor({1, 3, 1, 5}, rng)});
    run("sub (broadcast)", [](const auto& v) { return ops::sub(v[0], v[1]); },
        {random_tensor(s, rng), random_tensor({2, 1, 5, 1}, rng)});
    run("mul (broadcast)", [](const auto& v) { return ops::mul(v[0], v[1]); },
        {random_tensor(s, rng), random_tensor({1, 3, 1, 1}, rng)});
    run("div", [](const auto& v) { return ops::div(v[0], v[1]); },
        {random_tensor(s, rng), random_tensor(s, rng, 0.5, 2.0)});
    run("relu", [](const auto& v) { return ops::relu(v[0]); }, {random_tensor(s, rng)});
    run("sigmoid", [](const auto& v) { return ops::sigmoid(v[0]); }, {random_tensor(s, rng, -3, 3)});
    run("square/cos/sin", [](const auto& v) { return ops::add(ops::square(v[0]), ops::mul(ops::cos(v[0]), ops::sin(v[0]))); },
        {random_tensor(s, rng)});
    run("bce_with_logits",
        [](const auto& v) {
            Tensor t = Tensor::from(v[0].shape(), std::vector<double>(v[0].numel(), 1.0));
            auto tv = t.mutable_data();
            for (std::size_t i = 0; i < tv.size(); i += 2) tv[i] = 0.0;
            return ops::bce_with_logits(v[0], t);
        },
        {random_tensor(s, rng, -4, 4)});
    run("reductions", [](const auto& v) { return ops::add(ops::sum_hw(v[0]), ops::mul(ops::sum_chw(v[0]), ops::mean(v[0]))); },
        {random_tensor(s, rng)});
    run("conv2d 3x3", [](const auto& v) { return ops::conv2d(v[0], v[1], v[2], {1, 1, 1}); },
        {random_tensor(s, rng), random_tensor({4, 3, 3, 3}, rng), random_tensor({1, 4, 1, 1}, rng)});
    run("conv2d strided/dilated", [](const auto& v) { return ops::conv2d(v[0], v[1], Tensor{}, {2, 2, 2}); },
        {random_tensor({1, 2, 7, 7}, rng), random_tensor({3, 2, 3, 3}, rng)});
    run("conv2d 1x1", [](const auto& v) { return ops::conv2d(v[0], v[1], v[2], {}); },
        {random_tensor(s, rng), random_tensor({2, 3, 1, 1}, rng), random_tensor({1, 2, 1, 1}, rng)});
    run("avg_pool2d", [](const auto& v) { return ops::avg_pool2d(v[0], 3, 1, 1); }, {random_tensor(s, rng)});
    run("max_pool2d", [](const auto& v) { return ops::max_pool2d(v[0], 3, 2, 1); }, {random_tensor(s, rng)});
    run("global_avg_pool", [](const auto& v) { return ops::global_avg_pool(v[0]); }, {random_tensor(s, rng)});
    {
        auto bn = [](bool training) {
            return [training](const std::vector<Tensor>& v) {
                ops::BatchNormStats st{std::vector<double>(3, 0.1), std::vector<double>(3, 0.9)};
                return ops::batch_norm(v[0], v[1], v[2], st, training);
            };
        };
        run("batch_norm (train)", bn(true),
            {random_tensor(s, rng), random_tensor({1, 3, 1, 1}, rng, 0.5, 1.5), random_tensor({1, 3, 1, 1}, rng)});
        run("batch_norm (eval)", bn(false),
            {random_tensor(s, rng), random_tensor({1, 3, 1, 1}, rng, 0.5, 1.5), random_tensor({1, 3, 1, 1}, rng)});
    }
    run("resize_bilinear", [](const auto& v) { return ops::resize_bilinear(v[0], 7, 3); }, {random_tensor(s, rng)});
    run("upsample2x", [](const auto& v) { return ops::upsample2x(v[0]); }, {random_tensor(s, rng)});
    run("concat/chunk2",
        [](const auto& v) {
            auto [a, b] = ops::chunk2(ops::concat({v[0], v[1]}));
            return ops::mul(a, ops::slice_channels(b, 1, 1));
        },
        {random_tensor({2, 2, 5, 5}, rng), random_tensor({2, 2, 5, 5}, rng)});
    run("fft2/ifft2",
        [](const auto& v) {
            Spectrum sp = fft2(v[0]);
            return ops::add(ifft2(Spectrum{ops::mul(sp.real, sp.imag), sp.imag}), sp.real);
        },
        {random_tensor({1, 2, 4, 6}, rng)});
    run("amp_phase/polar_recombine",
        [](const auto& v) {
            auto [amp, ph] = amp_phase(fft2(v[0]));
            Tensor scaled = ops::mul(amp, ops::sigmoid(amp));
            return ifft2(polar_recombine(scaled, ph));
        },
        {random_tensor({1, 2, 4, 4}, rng)});
    run("hermitian_symmetrize", [](const auto& v) { return ops::square(hermitian_symmetrize(v[0])); },
        {random_tensor({1, 2, 5, 4}, rng)});
    return out;
}

}  // namespace polarcod::gradcheck
