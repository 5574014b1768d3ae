#include <gtest/gtest.h>

#include <functional>
#include <map>

#include "oracles.hpp"
#include "polarcod/error.hpp"
#include "polarcod/gradcheck.hpp"
#include "polarcod/loss.hpp"
#include "polarcod/model.hpp"
#include "polarcod/model_gradcheck.hpp"

using namespace polarcod;

namespace {

ModelConfig small_config() {
    ModelConfig cfg;
    cfg.channels = {4, 6, 8, 8};
    cfg.polar_channels = 4;
    cfg.guidance_channels = 4;
    return cfg;
}

ModelInput random_input(Rng& rng, int n, int h, int w) {
    return {oracle::random({n, 3, h, w}, rng, 0, 1), oracle::random({n, 1, h, w}, rng, 0, 1),
            oracle::random({n, 1, h, w}, rng, 0, 1)};
}

Tensor random_mask(Rng& rng, int n, int h, int w) {
    return oracle::map(oracle::random({n, 1, h, w}, rng, 0, 1), [](double v) { return v > 0.6 ? 1.0 : 0.0; });
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape())) return false;
    for (std::size_t i = 0; i < a.numel(); ++i)
        if (a.data()[i] != b.data()[i]) return false;
    return true;
}

struct AblationCase {
    std::string name;
    std::function<void(Ablation&)> set;
    std::set<std::string> removed;
};

std::vector<AblationCase> ablation_cases() {
    return {
        {"full", [](Ablation&) {}, {"pge.plain"}},
        {"rgb_only", [](Ablation& a) { a.rgb_only = true; },
         {"pge.plain", "pim.integrate", "pim.guidance", "pge.tau", "efm.amp_p", "efm.edge_proj"}},
        {"aolp_only", [](Ablation& a) { a.aolp_only = true; }, {"pge.plain", "efm.amp_p", "efm.edge_proj"}},
        {"dolp_only", [](Ablation& a) { a.dolp_only = true; }, {"pge.plain"}},
        {"no_pge", [](Ablation& a) { a.no_pge = true; }, {"pge.tau", "pge.enhance", "pim.integrate", "pim.guidance"}},
        {"pge_no_affine", [](Ablation& a) { a.pge_no_affine = true; },
         {"pge.plain", "pge.tau", "pim.integrate", "pim.guidance"}},
        {"pge_no_enhance", [](Ablation& a) { a.pge_no_enhance = true; }, {"pge.plain", "pge.enhance"}},
        {"no_efm", [](Ablation& a) { a.no_efm = true; }, {"pge.plain", "efm.amp_r", "efm.amp_p", "efm.edge_proj"}},
        {"efm_no_polar", [](Ablation& a) { a.efm_no_polar = true; }, {"pge.plain", "efm.amp_p", "efm.edge_proj"}},
        {"no_iter", [](Ablation& a) { a.no_iter = true; }, {"pge.plain", "decoder.feedback"}},
    };
}

}  // namespace

TEST(Model, DefaultParameterCountIsStable) {
    PolarCodNet net(ModelConfig{}, 1);
    EXPECT_EQ(net.parameter_count(), 2158890u);
    std::size_t sum = 0;
    for (const auto& p : net.params()) sum += p.tensor->numel();
    EXPECT_EQ(sum, net.parameter_count());
}

TEST(Model, ParameterNamesAreUnique) {
    PolarCodNet net(small_config(), 1);
    std::set<std::string> names;
    for (const auto& p : net.params()) EXPECT_TRUE(names.insert(p.name).second) << p.name;
}

TEST(Model, OutputsAtInputResolution) {
    Rng rng(81);
    PolarCodNet net(small_config(), 3);
    for (auto [h, w] : {std::pair{64, 64}, std::pair{32, 96}}) {
        auto out = net.forward(random_input(rng, 2, h, w), true);
        ASSERT_EQ(out.preds.size(), 2u);
        for (const auto& p : out.preds) {
            EXPECT_EQ(p.shape(), (Shape{2, 1, h, w}));
            Tensor prob = ops::sigmoid(p);
            for (double v : prob.data()) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
        EXPECT_EQ(out.coarse.shape(), (Shape{2, 1, h, w}));
    }
}

TEST(Model, InitialStateHasIdentityModulationAndRepeatedPrediction) {
    Rng rng(82);
    PolarCodNet net(small_config(), 4);
    auto out = net.forward(random_input(rng, 2, 32, 32), true);
    for (int i = 0; i < 4; ++i) EXPECT_TRUE(bit_equal(out.modulated[i], out.features[i])) << i;
    ASSERT_EQ(out.preds.size(), 2u);
    EXPECT_TRUE(bit_equal(out.preds[0], out.preds[1]));
}

TEST(Model, SinglePassAblationEmitsOnePrediction) {
    Rng rng(83);
    ModelConfig cfg = small_config();
    cfg.ablation.no_iter = true;
    PolarCodNet net(cfg, 5);
    EXPECT_EQ(net.forward(random_input(rng, 1, 32, 32), false).preds.size(), 1u);
    cfg.ablation.no_iter = false;
    cfg.iterations = 3;
    PolarCodNet three(cfg, 5);
    EXPECT_EQ(three.forward(random_input(rng, 1, 32, 32), false).preds.size(), 3u);
}

TEST(Model, SameSeedSameOutput) {
    Rng r1(84), r2(84);
    PolarCodNet a(small_config(), 9), b(small_config(), 9);
    auto oa = a.forward(random_input(r1, 2, 32, 32), true);
    auto ob = b.forward(random_input(r2, 2, 32, 32), true);
    EXPECT_TRUE(bit_equal(oa.preds.back(), ob.preds.back()));
}

TEST(Model, RgbOnlyRunsWithoutCues) {
    Rng rng(85);
    ModelConfig cfg = small_config();
    cfg.ablation.rgb_only = true;
    PolarCodNet net(cfg, 6);
    ModelInput in{oracle::random({1, 3, 32, 32}, rng, 0, 1), Tensor{}, Tensor{}};
    EXPECT_EQ(net.forward(in, false).preds.size(), 2u);
    PolarCodNet full(small_config(), 6);
    EXPECT_THROW(full.forward(in, false), DataError);
}

TEST(Model, InvalidAblationCombinationsThrow) {
    ModelConfig cfg = small_config();
    cfg.ablation.rgb_only = true;
    cfg.ablation.aolp_only = true;
    EXPECT_THROW(PolarCodNet(cfg, 1), ConfigError);
    cfg = small_config();
    cfg.ablation.aolp_only = true;
    cfg.ablation.dolp_only = true;
    EXPECT_THROW(PolarCodNet(cfg, 1), ConfigError);
    cfg = small_config();
    cfg.iterations = 0;
    EXPECT_THROW(PolarCodNet(cfg, 1), ConfigError);
}

// For every switch: the removed groups match the table, their parameters get
// exactly zero gradient, and perturbing them leaves the output bit-identical.
TEST(Model, AblationsDisconnectExactlyTheRemovedGroups) {
    for (const auto& c : ablation_cases()) {
        SCOPED_TRACE(c.name);
        ModelConfig cfg = small_config();
        c.set(cfg.ablation);
        EXPECT_EQ(disabled_groups(cfg), c.removed);

        PolarCodNet net(cfg, 11);
        std::size_t removed = 0;
        for (const auto& p : net.params())
            if (c.removed.count(p.group)) removed += p.tensor->numel();
        EXPECT_EQ(net.parameter_count() - net.active_parameter_count(), removed);

        Rng rng(86);
        ModelInput in = random_input(rng, 2, 32, 32);
        Tensor gt = random_mask(rng, 2, 32, 32);
        // Nonzero feedback and modulation so every connected path carries signal.
        for (const auto& p : net.params())
            if (p.group == std::string("decoder.feedback") || p.group == std::string("pge.tau"))
                for (double& v : p.tensor->mutable_data()) v = rng.uniform(-0.1, 0.1);

        net.zero_grad();
        auto out = net.forward(in, true);
        total_loss(out.preds, out.coarse, gt, cfg.effective_iterations()).backward();
        double active_grad = 0.0;
        for (const auto& p : net.params()) {
            double g = 0.0;
            for (double v : p.tensor->grad()) g = std::max(g, std::abs(v));
            if (c.removed.count(p.group)) {
                EXPECT_EQ(g, 0.0) << p.name;
            } else {
                active_grad = std::max(active_grad, g);
            }
        }
        EXPECT_GT(active_grad, 0.0);

        for (const auto& p : net.params())
            if (c.removed.count(p.group))
                for (double& v : p.tensor->mutable_data()) v += 0.25;
        auto again = net.forward(in, true);
        ASSERT_EQ(again.preds.size(), out.preds.size());
        for (std::size_t t = 0; t < out.preds.size(); ++t) EXPECT_TRUE(bit_equal(again.preds[t], out.preds[t]));
        EXPECT_TRUE(bit_equal(again.coarse, out.coarse));
    }
}

TEST(Model, EnabledGroupsInfluenceOutput) {
    Rng rng(87);
    ModelConfig cfg = small_config();
    PolarCodNet net(cfg, 12);
    for (const auto& p : net.params())
        if (p.group == std::string("decoder.feedback") || p.group == std::string("pge.tau"))
            for (double& v : p.tensor->mutable_data()) v = rng.uniform(-0.1, 0.1);
    ModelInput in = random_input(rng, 2, 32, 32);
    Tensor gt = random_mask(rng, 2, 32, 32);
    net.zero_grad();
    auto out = net.forward(in, true);
    total_loss(out.preds, out.coarse, gt, 2).backward();
    std::map<std::string, double> by_group;
    for (const auto& p : net.params())
        for (double v : p.tensor->grad()) by_group[p.group] = std::max(by_group[p.group], std::abs(v));
    for (const char* g : {"encoder", "pim.integrate", "pim.guidance", "pge.tau", "pge.enhance", "efm.amp_r",
                          "efm.amp_p", "efm.edge_proj", "decoder", "decoder.feedback"})
        EXPECT_GT(by_group[g], 0.0) << g;
}

TEST(Model, EveryParameterGradientPassesFiniteDifferences) {
    auto r = gradcheck::end_to_end(13);
    EXPECT_GT(r.entries, 2000u);
    EXPECT_TRUE(r.passed) << r.max_rel_error << " over " << r.entries;
}

TEST(Model, AblatedVariantGradientsPassFiniteDifferences) {
    Ablation a;
    a.no_pge = true;
    a.no_iter = true;
    auto r = gradcheck::end_to_end(14, a);
    EXPECT_TRUE(r.passed) << r.max_rel_error << " over " << r.entries;
}
