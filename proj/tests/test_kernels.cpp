#include <gtest/gtest.h>

#include <random>

#include "statefusion/kernels.hpp"
#include "test_support.hpp"

using namespace statefusion;

TEST(Kernels, MarginalizeSerialAndParallelAgreeBitwise) {
    std::mt19937_64 gen(1);
    const Grid priors = support::random_grid(gen, 517, 9);
    const Grid cond = support::random_stochastic(gen, 15, 9);
    EXPECT_EQ(kernels::marginalize_serial(priors, cond), kernels::marginalize_omp(priors, cond));
}

TEST(Kernels, MarginalizeMatchesHandLoop) {
    std::mt19937_64 gen(2);
    const Grid priors = support::random_grid(gen, 4, 3);
    const Grid cond = support::random_stochastic(gen, 5, 3);
    const Grid out = kernels::marginalize_serial(priors, cond);
    for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t j = 0; j < 5; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < 3; ++i) s += priors(n, i) * cond(j, i);
            EXPECT_NEAR(out(n, j), s, 1e-15);
        }
}

TEST(Kernels, NormalizeColumnsAgree) {
    std::mt19937_64 gen(3);
    const Grid raw = support::random_grid(gen, 40, 33);
    EXPECT_EQ(kernels::normalize_columns_serial(raw, 1e-6), kernels::normalize_columns_omp(raw, 1e-6));
}

TEST(Kernels, SoftmaxRowsAgreeAndAreStable) {
    std::mt19937_64 gen(4);
    Grid logits = support::random_grid(gen, 300, 15, -50.0, 50.0);
    logits(0, 0) = 1000.0;
    const Grid a = kernels::softmax_rows_serial(logits);
    EXPECT_EQ(a, kernels::softmax_rows_omp(logits));
    EXPECT_NEAR(a(0, 0), 1.0, 1e-12);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double s = 0.0;
        for (double v : a.row(r)) s += v;
        EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Kernels, AffineAgreesWithAndWithoutRelu) {
    std::mt19937_64 gen(5);
    const Grid in = support::random_grid(gen, 129, 48, -1.0, 1.0);
    const Grid w = support::random_grid(gen, 64, 48, -1.0, 1.0);
    std::vector<double> b(64);
    for (auto& v : b) v = std::uniform_real_distribution<double>(-1, 1)(gen);
    for (bool relu : {false, true}) {
        const Grid s = kernels::affine_serial(in, w, b, relu);
        EXPECT_EQ(s, kernels::affine_omp(in, w, b, relu));
        double expect = b[3];
        for (std::size_t k = 0; k < 48; ++k) expect += in(7, k) * w(3, k);
        if (relu && expect < 0) expect = 0;
        EXPECT_NEAR(s(7, 3), expect, 1e-12);
    }
}
