#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "statefusion/errors.hpp"
#include "statefusion/mlp.hpp"
#include "test_support.hpp"

using namespace statefusion;

namespace {

MlpConfig config(std::size_t in, std::vector<std::size_t> hidden, std::size_t out, std::uint64_t seed = 1) {
    MlpConfig c;
    c.input_dim = in;
    c.hidden_dims = std::move(hidden);
    c.output_dim = out;
    c.seed = seed;
    return c;
}

LabeledSet random_set(std::mt19937_64& gen, std::size_t n, std::size_t dim, std::size_t classes) {
    LabeledSet set{support::random_grid(gen, n, dim, -1.0, 1.0), std::vector<std::size_t>(n)};
    std::uniform_int_distribution<std::size_t> label(0, classes - 1);
    for (auto& y : set.labels) y = label(gen);
    return set;
}

std::vector<double*> parameters(MlpModel& m) {
    std::vector<double*> out;
    for (auto& layer : m.layers) {
        for (auto& w : layer.weights.data()) out.push_back(&w);
        for (auto& b : layer.bias) out.push_back(&b);
    }
    return out;
}

std::vector<double> flatten(const Gradients& g) {
    std::vector<double> out;
    for (const auto& layer : g) {
        out.insert(out.end(), layer.weights.data().begin(), layer.weights.data().end());
        out.insert(out.end(), layer.bias.begin(), layer.bias.end());
    }
    return out;
}

/// Fixed input shared by the regression pins.
std::vector<double> pin_input() {
    std::vector<double> x(6);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i) - 0.2;
    return x;
}

}  // namespace

TEST(Mlp, ParameterCountOfFusionShape) {
    const std::size_t expected = 48 * 64 + 64 + 64 * 64 + 64 + 64 * 15 + 15;
    EXPECT_EQ(expected, 8271u);
    EXPECT_EQ(init_mlp(config(48, {64, 64}, 15)).parameter_count(), expected);
}

TEST(Mlp, EmptyHiddenStackIsSingleSoftmaxLayer) {
    const auto m = init_mlp(config(4, {}, 3));
    ASSERT_EQ(m.layers.size(), 1u);
    EXPECT_EQ(m.parameter_count(), 15u);
}

TEST(Mlp, InitIsDeterministicInSeed) {
    EXPECT_EQ(init_mlp(config(10, {8}, 3, 5)), init_mlp(config(10, {8}, 3, 5)));
    EXPECT_NE(init_mlp(config(10, {8}, 3, 5)), init_mlp(config(10, {8}, 3, 6)));
}

TEST(Mlp, InvalidConfigIsRejected) {
    EXPECT_THROW(init_mlp(config(0, {}, 3)), ValidationError);
    EXPECT_THROW(init_mlp(config(3, {0}, 3)), ValidationError);
    auto c = config(3, {}, 3);
    c.learning_rate = 0.0;
    EXPECT_THROW(init_mlp(c), ValidationError);
    c = config(3, {}, 3);
    c.patience = 0;
    EXPECT_THROW(init_mlp(c), ValidationError);
}

TEST(Mlp, ZeroParametersGiveUniformOutput) {
    auto m = init_mlp(config(5, {4, 4}, 7));
    for (auto* p : parameters(m)) *p = 0.0;
    for (double v : forward(m, std::vector<double>{1, 2, 3, 4, 5})) EXPECT_DOUBLE_EQ(v, 1.0 / 7.0);
    EXPECT_NEAR(loss(m, std::vector<double>{1, 2, 3, 4, 5}, 3), std::log(7.0), 1e-12);
}

TEST(Mlp, FinalBiasShiftLeavesOutputUnchanged) {
    auto m = init_mlp(config(6, {5}, 4, 9));
    const auto x = pin_input();
    const auto before = forward(m, x);
    for (auto& b : m.layers.back().bias) b += 3.7;
    const auto after = forward(m, x);
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-14);
}

TEST(Mlp, OutputsStayNormalizedForExtremeParameters) {
    std::mt19937_64 gen(31);
    auto m = init_mlp(config(6, {5, 5}, 4, 2));
    for (auto* p : parameters(m)) *p = std::uniform_real_distribution<double>(-300, 300)(gen);
    const auto out = forward(m, pin_input());
    double s = 0.0;
    for (double v : out) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    EXPECT_GE(loss(m, pin_input(), 0), 0.0);
}

TEST(Mlp, DimensionMismatchIsAnError) {
    const auto m = init_mlp(config(3, {}, 2));
    EXPECT_THROW(forward(m, std::vector<double>{1, 2}), ValidationError);
    EXPECT_THROW(loss(m, std::vector<double>{1, 2, 3}, 2), ValidationError);
}

TEST(Mlp, PerfectPredictionHasZeroLoss) {
    auto m = init_mlp(config(2, {}, 3));
    for (auto* p : parameters(m)) *p = 0.0;
    m.layers[0].bias = {0.0, 900.0, 0.0};
    EXPECT_EQ(loss(m, std::vector<double>{0.3, 0.4}, 1), 0.0);
    EXPECT_EQ(predict(m, std::vector<double>{0.3, 0.4}).index, 1u);
}

TEST(Mlp, PredictTieGoesToLowestIndex) {
    auto m = init_mlp(config(2, {}, 4));
    for (auto* p : parameters(m)) *p = 0.0;
    EXPECT_EQ(predict(m, std::vector<double>{1, 1}).index, 0u);
    Grid rows(3, 2, 1.0);
    EXPECT_EQ(predict_batch(m, rows), (std::vector<std::size_t>{0, 0, 0}));
}

// Central differences with h = 1e-5. Relative error per parameter is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
TEST(Mlp, GradientMatchesFiniteDifferences) {
    std::mt19937_64 gen(41);
    const double h = 1e-5;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto m = init_mlp(config(6, {7, 5}, 4, seed));
        for (auto& layer : m.layers)
            for (auto& b : layer.bias) b = std::uniform_real_distribution<double>(-0.1, 0.1)(gen);
        const LabeledSet set = random_set(gen, 8, 6, 4);
        std::vector<std::size_t> batch(set.size());
        std::iota(batch.begin(), batch.end(), 0);
        const auto analytic = flatten(gradient(m, set, batch));
        auto params = parameters(m);
        ASSERT_EQ(params.size(), analytic.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = *params[i];
            *params[i] = saved + h;
            const double up = batch_loss(m, set, batch);
            *params[i] = saved - h;
            const double down = batch_loss(m, set, batch);
            *params[i] = saved;
            const double numeric = (up - down) / (2 * h);
            const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
            worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
        }
        EXPECT_LT(worst, 1e-4) << "seed " << seed;
    }
}

TEST(Mlp, GradientVanishesAtExactFit) {
    // Two separable points, logits 1000 apart: soft-max saturates to exactly one-hot.
    auto m = init_mlp(config(1, {}, 2));
    m.layers[0].weights = Grid(2, 1, {-500.0, 500.0});
    m.layers[0].bias = {0.0, 0.0};
    const LabeledSet set{Grid(2, 1, {-1.0, 1.0}), {0, 1}};
    const std::vector<std::size_t> batch{0, 1};
    for (double g : flatten(gradient(m, set, batch))) EXPECT_EQ(g, 0.0);
}

TEST(Mlp, DuplicatedBatchHasSameMeanGradient) {
    std::mt19937_64 gen(42);
    const auto m = init_mlp(config(5, {6}, 3, 4));
    const LabeledSet set = random_set(gen, 6, 5, 3);
    const std::vector<std::size_t> once{0, 1, 2, 3, 4, 5};
    const std::vector<std::size_t> twice{0, 1, 2, 3, 4, 5, 0, 1, 2, 3, 4, 5};
    const auto a = flatten(gradient(m, set, once));
    const auto b = flatten(gradient(m, set, twice));
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-14);
}

TEST(Mlp, SeparableToyReachesFullTrainAccuracy) {
    LabeledSet set{Grid(20, 2), std::vector<std::size_t>(20)};
    for (std::size_t i = 0; i < 20; ++i) {
        const double side = i < 10 ? -1.0 : 1.0;
        set.features(i, 0) = side * (0.5 + 0.05 * static_cast<double>(i % 10));
        set.features(i, 1) = 0.1 * static_cast<double>(i % 7) - 0.3;
        set.labels[i] = i < 10 ? 0 : 1;
    }
    auto c = config(2, {8}, 2, 3);
    c.learning_rate = 0.1;
    c.batch_size = 4;
    c.patience = 200;
    const auto result = train(init_mlp(c), set, set);
    EXPECT_LE(result.report.epochs_run, 200u);
    EXPECT_EQ(predict_batch(result.model, set.features), set.labels);
}

TEST(Mlp, FrozenValidationLossStopsAfterPatience) {
    // Zero inputs and balanced full batches keep every gradient at zero.
    auto c = config(3, {}, 2);
    c.batch_size = 4;
    c.patience = 1;
    const LabeledSet set{Grid(4, 3, 0.0), {0, 1, 0, 1}};
    const auto result = train(init_mlp(c), set, set);
    EXPECT_EQ(result.report.epochs_run, 2u);
    EXPECT_EQ(result.report.best_epoch, 1u);
    EXPECT_NEAR(result.report.best_validation_loss, std::log(2.0), 1e-15);
}

TEST(Mlp, TrainingIsDeterministicAndReportIsConsistent) {
    std::mt19937_64 gen(43);
    const LabeledSet tr = random_set(gen, 64, 5, 3);
    const LabeledSet va = random_set(gen, 32, 5, 3);
    auto c = config(5, {6, 6}, 3, 8);
    c.learning_rate = 0.05;
    c.max_epochs = 30;
    c.patience = 5;
    const auto a = train(init_mlp(c), tr, va);
    const auto b = train(init_mlp(c), tr, va);
    EXPECT_EQ(a.report, b.report);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.report.train_loss_curve.size(), a.report.epochs_run);
    EXPECT_EQ(a.report.validation_loss_curve.size(), a.report.epochs_run);
    EXPECT_LE(a.report.best_validation_loss, a.report.validation_loss_curve.front());
    for (double v : a.report.train_loss_curve) EXPECT_TRUE(std::isfinite(v) && v >= 0.0);
    EXPECT_NEAR(mean_loss(a.model, va), a.report.best_validation_loss, 1e-12);
}

TEST(Mlp, DivergenceIsReported) {
    std::mt19937_64 gen(44);
    const LabeledSet set = random_set(gen, 16, 4, 2);
    auto c = config(4, {4}, 2, 1);
    c.learning_rate = 1e300;
    try {
        train(init_mlp(c), set, set);
        FAIL();
    } catch (const TrainingDiverged& e) {
        EXPECT_GE(e.report().epochs_run, 1u);
        EXPECT_EQ(e.report().train_loss_curve.size(), e.report().epochs_run);
    }
}

TEST(Mlp, BatchForwardMatchesSingle) {
    std::mt19937_64 gen(45);
    const auto m = init_mlp(config(6, {7, 5}, 4, 3));
    const Grid x = support::random_grid(gen, 20, 6, -1, 1);
    const Grid probs = forward_batch(m, x);
    for (std::size_t n = 0; n < 20; ++n) {
        const auto p = forward(m, x.row(n));
        for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(probs(n, k), p[k], 1e-15);
    }
}

TEST(Mlp, ModelFileRoundTripIsExact) {
    support::TempDir dir("mlp");
    const auto m = init_mlp(config(6, {7, 5}, 4, 3));
    save_mlp(m, "fp123", dir.path() / "m.json");
    std::string fp;
    EXPECT_EQ(load_mlp(dir.path() / "m.json", &fp), m);
    EXPECT_EQ(fp, "fp123");
}

// Values pinned from a verified run of the seeded model below.
TEST(Mlp, RegressionPins) {
    const auto m = init_mlp(config(6, {5}, 4, 2024));
    const auto p = predict(m, pin_input());
    const std::vector<double> expected{0.21301467752560141, 0.25483424171134827, 0.22484148436205575, 0.30730959640099459};
    ASSERT_EQ(p.probabilities.size(), expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_NEAR(p.probabilities[i], expected[i], 1e-12);
    EXPECT_EQ(p.index, 3u);
    EXPECT_NEAR(loss(m, pin_input(), 2), 1.4923596390107072, 1e-12);
}
