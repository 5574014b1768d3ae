#include <gtest/gtest.h>

#include "oracles.hpp"
#include "polarcod/decoder.hpp"
#include "polarcod/error.hpp"
#include "polarcod/gradcheck.hpp"

using namespace polarcod;

namespace {

const std::array<int, 4> kChannels{4, 6, 8, 10};

std::array<Tensor, 4> random_stages(Rng& rng, int n, int h, int w) {
    std::array<Tensor, 4> e;
    for (int i = 0; i < 4; ++i) e[i] = oracle::random({n, kChannels[i], h >> i, w >> i}, rng);
    return e;
}

Tensor fuse_oracle(const nn::ConvBn& m, const Tensor& x) {
    Tensor y = oracle::batch_norm_train(oracle::conv2d(x, m.conv.weight, Tensor{}, 1, 1, 1), m.bn.gamma, m.bn.beta);
    return oracle::map(y, [](double v) { return v > 0 ? v : 0.0; });
}

}  // namespace

TEST(Decoder, OutputShapes) {
    Rng rng(71);
    Decoder dec(kChannels, rng);
    auto r = dec.forward(random_stages(rng, 2, 16, 16), 64, 64, true);
    for (int i = 0; i < 4; ++i) EXPECT_EQ(r.d[i].shape(), (Shape{2, kChannels[i], 16 >> i, 16 >> i}));
    EXPECT_EQ(r.coarse.shape(), (Shape{2, 1, 64, 64}));
    EXPECT_EQ(r.pred.shape(), (Shape{2, 1, 64, 64}));
}

TEST(Decoder, ZeroInputsGiveBiasPlanes) {
    Rng rng(72);
    Decoder dec(kChannels, rng);
    for (auto& l : dec.lateral)
        for (double& v : l.bias.mutable_data()) v = 0.0;
    std::array<Tensor, 4> e;
    for (int i = 0; i < 4; ++i) e[i] = Tensor::zeros({2, kChannels[i], 8 >> i, 8 >> i});
    auto r = dec.forward(e, 32, 32, true);
    for (const auto& d : r.d)
        for (double v : d.data()) EXPECT_EQ(v, 0.0);
    const double cb = dec.coarse_head.bias.data()[0];
    const double pb = dec.pred_head.bias.data()[0];
    for (double v : r.coarse.data()) EXPECT_NEAR(v, cb, 1e-15);
    for (double v : r.pred.data()) EXPECT_NEAR(v, pb, 1e-15);
}

TEST(Decoder, MatchesCompositionalOracle) {
    Rng rng(73);
    Decoder dec(kChannels, rng);
    auto e = random_stages(rng, 2, 16, 8);
    auto r = dec.forward(e, 40, 24, true);

    std::array<Tensor, 4> d;
    d[3] = fuse_oracle(dec.fuse[3], e[3]);
    for (int i = 2; i >= 0; --i) {
        const Shape s = e[i].shape();
        Tensor up = oracle::resize(d[i + 1], s.h, s.w);
        Tensor lat = oracle::conv2d(up, dec.lateral[i].weight, dec.lateral[i].bias, 1, 0, 1);
        d[i] = fuse_oracle(dec.fuse[i], oracle::zip(e[i], lat, [](double a, double b) { return a + b; }));
    }
    for (int i = 0; i < 4; ++i) EXPECT_LE(oracle::max_abs_diff(r.d[i], d[i]), 1e-12) << i;
    Tensor coarse = oracle::resize(oracle::conv2d(d[3], dec.coarse_head.weight, dec.coarse_head.bias, 1, 0, 1), 40, 24);
    Tensor pred = oracle::resize(oracle::conv2d(d[0], dec.pred_head.weight, dec.pred_head.bias, 1, 1, 1), 40, 24);
    EXPECT_LE(oracle::max_abs_diff(r.coarse, coarse), 1e-12);
    EXPECT_LE(oracle::max_abs_diff(r.pred, pred), 1e-12);
}

TEST(Decoder, RejectsMismatchedStages) {
    Rng rng(74);
    Decoder dec(kChannels, rng);
    auto e = random_stages(rng, 1, 16, 16);
    auto bad_c = e;
    bad_c[2] = Tensor::zeros({1, 7, 4, 4});
    EXPECT_THROW(dec.forward(bad_c, 16, 16, true), DimensionError);
    auto bad_hw = e;
    bad_hw[1] = Tensor::zeros({1, kChannels[1], 6, 8});
    EXPECT_THROW(dec.forward(bad_hw, 16, 16, true), DimensionError);
}

TEST(Decoder, GradientsPassFiniteDifferences) {
    Rng rng(75);
    const std::array<int, 4> ch{2, 2, 3, 3};
    Decoder dec(ch, rng);
    std::vector<Tensor> in;
    for (int i = 0; i < 4; ++i) in.push_back(oracle::random({2, ch[i], 8 >> i, 8 >> i}, rng, -1, 1, true));
    auto r = gradcheck::check(
        "decoder",
        [&](const auto& v) {
            auto out = dec.forward({v[0], v[1], v[2], v[3]}, 16, 16, true);
            return ops::add(out.pred, out.coarse);
        },
        in);
    EXPECT_TRUE(r.passed) << r.max_rel_error;
}
