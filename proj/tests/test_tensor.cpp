// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "hammerlab/rng.hpp"
#include "hammerlab/tensor.hpp"

namespace hammerlab {
namespace {

std::vector<float> random_values(std::size_t n, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (float& x : v) {
        x = static_cast<float>(rng.uniform(lo, hi));
    }
    return v;
}

TEST(Tensor, ShapeMustMatchData) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<float>(5)), dimension_error);
    const Tensor t({2, 3}, std::vector<float>(6));
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t.rank(), 2u);
    EXPECT_EQ(t.dtype(), DType::f32);
    EXPECT_EQ(t.element_bytes(), 4u);
}

TEST(Tensor, WrongDtypeAccessThrows) {
    const Tensor t({2}, std::vector<float>{1, 2});
    EXPECT_THROW((void)t.i8(), domain_error);
}

TEST(Tensor, QuantizedTensorRejectsBadScale) {
    EXPECT_THROW(Tensor({1}, std::vector<std::int8_t>{1}, QuantParams{0.0f, 0}), domain_error);
    EXPECT_THROW(Tensor({1}, std::vector<std::int8_t>{1}, QuantParams{std::nanf(""), 0}), domain_error);
}

TEST(Matmul, MatchesTripleLoop) {
    const std::size_t m = 5, k = 7, n = 3;
    const auto a = random_values(m * k, 1), b = random_values(k * n, 2);
    const Tensor c = matmul(Tensor({m, k}, a), Tensor({k, n}, b));
    ASSERT_EQ(c.shape(), (Shape{m, n}));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double ref = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                ref += static_cast<double>(a[i * k + p]) * b[p * n + j];
            }
            EXPECT_NEAR(c.f32()[i * n + j], ref, 1e-5);
        }
    }
}

TEST(Matmul, RejectsMismatchedInnerDimension) {
    EXPECT_THROW(matmul(Tensor::zeros({2, 3}), Tensor::zeros({4, 2})), dimension_error);
    EXPECT_THROW(matmul(Tensor::zeros({6}), Tensor::zeros({6, 1})), dimension_error);
}

TEST(Softmax, MatchesExpOverSum) {
    const auto x = random_values(12, 3, -5.0, 5.0);
    const Tensor s = softmax(Tensor({3, 4}, x));
    for (std::size_t r = 0; r < 3; ++r) {
        double sum = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            sum += std::exp(static_cast<double>(x[r * 4 + j]));
        }
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_NEAR(s.f32()[r * 4 + j], std::exp(static_cast<double>(x[r * 4 + j])) / sum, 1e-6);
        }
    }
}

TEST(Softmax, StableForLargeLogits) {
    const Tensor s = softmax(Tensor({2}, std::vector<float>{1000.0f, 999.0f}));
    EXPECT_NEAR(s.f32()[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-6);
}

TEST(Softmax, NonFiniteInputs) {
    const float inf = std::numeric_limits<float>::infinity();
    const Tensor nan_row = softmax(Tensor({3}, std::vector<float>{1.0f, std::nanf(""), 0.0f}));
    for (float v : nan_row.f32()) {
        EXPECT_TRUE(std::isnan(v));
    }
    const Tensor inf_row = softmax(Tensor({4}, std::vector<float>{inf, 1.0f, inf, -inf}));
    EXPECT_EQ(inf_row.f32()[0], 0.5f);
    EXPECT_EQ(inf_row.f32()[1], 0.0f);
    EXPECT_EQ(inf_row.f32()[2], 0.5f);
    EXPECT_EQ(inf_row.f32()[3], 0.0f);
}

TEST(LayerNorm, MatchesTwoPassReference) {
    const std::size_t n = 6;
    const auto x = random_values(2 * n, 4, -3.0, 3.0);
    const auto g = random_values(n, 5, 0.5, 1.5), b = random_values(n, 6);
    const Tensor y = layer_norm(Tensor({2, n}, x), Tensor({n}, g), Tensor({n}, b));
    for (std::size_t r = 0; r < 2; ++r) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += x[r * n + i];
        }
        mean /= n;
        for (std::size_t i = 0; i < n; ++i) {
            var += (x[r * n + i] - mean) * (x[r * n + i] - mean);
        }
        var /= n;
        for (std::size_t i = 0; i < n; ++i) {
            const double ref = (x[r * n + i] - mean) / std::sqrt(var + 1e-5) * g[i] + b[i];
            EXPECT_NEAR(y.f32()[r * n + i], ref, 1e-5);
        }
    }
}

TEST(LayerNorm, RejectsWrongAffineLength) {
    EXPECT_THROW(layer_norm(Tensor::zeros({2, 4}), Tensor::zeros({3}), Tensor::zeros({4})), dimension_error);
}

TEST(Quantize, ConstantTensorRoundTripsExactly) {
    const Tensor q = quantize(Tensor({3}, std::vector<float>{5.0f, 5.0f, 5.0f}));
    const Tensor d = dequantize(q);
    for (float v : d.f32()) {
        EXPECT_EQ(v, 5.0f);
    }
}

TEST(Quantize, ZeroIsExact) {
    const Tensor q = quantize(Tensor({4}, std::vector<float>{-1.0f, 0.0f, 0.25f, 3.0f}));
    EXPECT_EQ(dequantize(q).f32()[1], 0.0f);
    EXPECT_GE(q.quant()->zero_point, -128);
    EXPECT_LE(q.quant()->zero_point, 127);
}

TEST(Quantize, RandomRoundTripWithinHalfScale) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(s);
        const double lo = rng.uniform(-10.0, 1.0), hi = lo + rng.uniform(0.01, 20.0);
        const auto x = random_values(1 + rng.below(64), 1000 + s, lo, hi);
        const Tensor q = quantize(Tensor({x.size()}, x));
        const Tensor d = dequantize(q);
        const double scale = q.quant()->scale;
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_LE(std::abs(static_cast<double>(d.f32()[i]) - x[i]), scale / 2 * (1 + 1e-6) + 1e-7)
                << "seed " << s << " element " << i;
        }
    }
}

TEST(Quantize, BytesEqualDistinguishesDtypeAndParams) {
    const Tensor a = quantize(Tensor({2}, std::vector<float>{1.0f, -1.0f}));
    Tensor b = a;
    EXPECT_TRUE(bytes_equal(a, b));
    b.i8()[0] ^= 1;
    EXPECT_FALSE(bytes_equal(a, b));
    EXPECT_FALSE(bytes_equal(a, dequantize(a)));
}

}  // namespace
}  // namespace hammerlab
