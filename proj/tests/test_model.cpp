// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace hammerlab {
namespace {

// Parameter count written out from the architecture description.
std::size_t vit_params(std::size_t pd, std::size_t e, std::size_t tokens, std::size_t hidden, std::size_t depth,
                       std::size_t k, bool cls) {
    const std::size_t block = 2 * e + (e * 3 * e + 3 * e) + (e * e + e) + 2 * e + (e * hidden + hidden) +
                              (hidden * e + e);
    return (pd * e + e) + (cls ? e : 0) + tokens * e + depth * block + 2 * e + (e * k + k);
}

TEST(ModelConfig, ParameterCountsMatchArchitecture) {
    ModelConfig c;
    EXPECT_EQ(parameter_count(c), vit_params(48, 32, 16, 64, 1, 2, false));
    EXPECT_EQ(init_model(c).parameter_count(), 10754u);
    c.pooling = Pooling::cls;
    c.depth = 2;
    EXPECT_EQ(parameter_count(c), vit_params(48, 32, 17, 64, 2, 2, true));
}

TEST(ModelConfig, MlpHeadWidths) {
    for (std::size_t h : {384u, 512u, 640u, 768u}) {
        ModelConfig c;
        c.arch = Arch::tiny_mlp;
        c.image_size = 8;
        c.head_in_features = h;
        const Model m = init_model(c);
        EXPECT_EQ(m.params.at("head_fc").shape(), (Shape{h, 2}));
        EXPECT_EQ(m.params.at("hidden_fc").shape(), (Shape{192, h}));
        EXPECT_EQ(m.parameter_count(), 192 * h + h + h * 2 + 2);
    }
}

TEST(ModelConfig, Validation) {
    ModelConfig c;
    c.patch_size = 5;
    EXPECT_THROW(c.validate(), config_error);
    c = {};
    c.num_heads = 3;
    EXPECT_THROW(c.validate(), config_error);
    c = {};
    c.head_in_features = 16;
    EXPECT_THROW(c.validate(), config_error);
    c = {};
    c.num_classes = 0;
    EXPECT_THROW(c.validate(), config_error);
}

TEST(Model, InitIsDeterministic) {
    ModelConfig c;
    c.seed = 42;
    EXPECT_TRUE(bytes_equal(init_model(c).params, init_model(c).params));
    c.seed = 43;
    EXPECT_FALSE(bytes_equal(init_model(ModelConfig{.seed = 42}).params, init_model(c).params));
}

TEST(Model, ForwardIsPureAndShaped) {
    const Model m = init_model(ModelConfig{});
    const Dataset d = synth_dataset(SynthKind::stripes, 4, 2);
    const Tensor a = forward(m, d.pixels_of(0));
    const Tensor b = forward(m, d.pixels_of(0));
    EXPECT_EQ(a.shape(), (Shape{2}));
    EXPECT_TRUE(bytes_equal(a, b));
    EXPECT_THROW(forward(m, std::span(d.pixels).subspan(0, 10)), dimension_error);
}

TEST(Model, HeadOfFeaturesEqualsLogits) {
    for (Pooling pool : {Pooling::mean, Pooling::cls}) {
        ModelConfig c;
        c.pooling = pool;
        const Model m = init_model(c);
        const Predictor p(m);
        const Dataset d = synth_dataset(SynthKind::blobs, 6, 3);
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto f = p.features(d.pixels_of(i));
            EXPECT_EQ(p.head(f), p.logits(d.pixels_of(i)));
        }
    }
}

TEST(Argmax, TiesAndNaN) {
    const float nan = std::nanf("");
    const std::vector<float> tie = {1.0f, 3.0f, 3.0f};
    const std::vector<float> with_nan = {nan, 0.5f, 0.25f};
    const std::vector<float> all_nan = {nan, nan};
    EXPECT_EQ(argmax<float>(tie), 1);
    EXPECT_EQ(argmax<float>(with_nan), 1);
    EXPECT_EQ(argmax<float>(all_nan), -1);
}

/// Double-precision central differences against the analytic gradient.
void check_gradients(ModelConfig c) {
    const Model m = init_model(c);
    SynthOptions opt;
    opt.image_size = c.image_size;
    opt.channels = c.channels;
    const Dataset ds = synth_dataset(SynthKind::blobs, 4, 9, opt);
    std::vector<std::vector<double>> w;
    for (const auto& e : m.params) {
        w.emplace_back(e.tensor.f32().begin(), e.tensor.f32().end());
    }
    auto views = [&w] {
        ParamViews<double> v;
        for (const auto& x : w) {
            v.emplace_back(x);
        }
        return v;
    };
    const std::vector<std::size_t> idx = {0, 1, 2, 3};
    const auto g = batch_gradient<double, double>(c, views(), ds, idx);
    Rng rng(1);
    for (std::size_t p = 0; p < w.size(); ++p) {
        for (int k = 0; k < 3; ++k) {
            const std::size_t j = rng.below(w[p].size());
            const double h = 1e-6, orig = w[p][j];
            w[p][j] = orig + h;
            const double lp = batch_gradient<double, double>(c, views(), ds, idx).loss;
            w[p][j] = orig - h;
            const double lm = batch_gradient<double, double>(c, views(), ds, idx).loss;
            w[p][j] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double an = g.grads[p][j];
            const double denom = std::max(1e-6, std::max(std::abs(fd), std::abs(an)));
            EXPECT_LE(std::abs(fd - an) / denom, 1e-3) << m.params.name(p) << "[" << j << "]";
        }
    }
}

TEST(Gradients, VitMeanPooling) {
    ModelConfig c;
    c.embed_dim = 8;
    c.num_heads = 2;
    c.head_in_features = 8;
    c.mlp_hidden = 12;
    c.image_size = 8;
    c.seed = 5;
    check_gradients(c);
}

TEST(Gradients, VitClsPoolingDepthTwo) {
    ModelConfig c;
    c.embed_dim = 8;
    c.num_heads = 4;
    c.head_in_features = 8;
    c.mlp_hidden = 8;
    c.image_size = 8;
    c.depth = 2;
    c.pooling = Pooling::cls;
    c.seed = 6;
    check_gradients(c);
}

TEST(Gradients, Mlp) {
    ModelConfig c;
    c.arch = Arch::tiny_mlp;
    c.image_size = 4;
    c.head_in_features = 10;
    c.seed = 7;
    check_gradients(c);
}

TEST(Train, DeterministicAndLearns) {
    // 200 separable blobs must reach 95% train accuracy within the default 30 epochs.
    const Dataset d = synth_dataset(SynthKind::blobs, 200, 1);
    Model a = init_model(ModelConfig{}), b = init_model(ModelConfig{});
    const TrainConfig tc;
    ASSERT_EQ(tc.epochs, 30u);
    const auto ha = train(a, d, tc);
    train(b, d, tc);
    EXPECT_TRUE(bytes_equal(a.params, b.params));
    ASSERT_EQ(ha.train_accuracy.size(), 30u);
    EXPECT_GE(*std::max_element(ha.train_accuracy.begin(), ha.train_accuracy.end()), 0.95);
    EXPECT_GE(accuracy(a, d), 0.95);
}

TEST(Train, RejectsEmptyOrMismatchedData) {
    Model m = init_model(ModelConfig{});
    const Dataset empty{16, 16, 3, 2, {}, {}};
    EXPECT_THROW(train(m, empty, TrainConfig{}), data_error);
    SynthOptions opt;
    opt.image_size = 8;
    EXPECT_THROW(train(m, synth_dataset(SynthKind::blobs, 8, 1, opt), TrainConfig{}), dimension_error);
}

TEST(Bfat, ZeroProbabilityEqualsPlainTraining) {
    auto [tr, te] = testing::small_blobs();
    Model a = init_model(ModelConfig{}), b = init_model(ModelConfig{});
    TrainConfig tc;
    tc.epochs = 2;
    BFATConfig bc;
    bc.flip_prob = 0.0;
    FlipLedger ledger;
    train(a, tr, tc);
    train_bitflip_aware(b, tr, tc, bc, &ledger);
    EXPECT_TRUE(bytes_equal(a.params, b.params));
    for (const auto& p : ledger) {
        EXPECT_TRUE(p.empty());
    }
}

TEST(Bfat, LedgerReplaysTheSampledFlips) {
    auto [tr, te] = testing::small_blobs();
    Model m = init_model(ModelConfig{});
    TrainConfig tc;
    tc.epochs = 1;
    BFATConfig bc;
    bc.flip_prob = 1e-3;
    bc.seed = 3;
    bc.layers = {"head_fc", "block0_mlp_fc1"};
    FlipLedger ledger;
    train_bitflip_aware(m, tr, tc, bc, &ledger);
    ASSERT_FALSE(ledger.empty());
    std::size_t flips = 0;
    for (const auto& p : ledger) {
        ASSERT_TRUE(p.seed.has_value());
        EXPECT_EQ(p, sample_bfat_flips(m.params, bc, *p.seed));
        for (const auto& f : p.flips) {
            EXPECT_TRUE(f.layer == "head_fc" || f.layer == "block0_mlp_fc1");
        }
        flips += p.size();
    }
    EXPECT_GT(flips, 0u);
    for (const auto& e : m.params) {
        for (float v : e.tensor.f32()) {
            ASSERT_TRUE(std::isfinite(v)) << e.name;
        }
    }
}

TEST(Bfat, SamplingRateMatchesProbability) {
    const Model m = init_model(ModelConfig{});
    BFATConfig bc;
    bc.flip_prob = 0.01;
    std::size_t total = 0;
    const int draws = 200;
    for (int s = 0; s < draws; ++s) {
        total += sample_bfat_flips(m.params, bc, static_cast<std::uint64_t>(s)).size();
    }
    const double expected = 0.01 * static_cast<double>(m.parameter_count()) * draws;
    EXPECT_NEAR(static_cast<double>(total), expected, 5 * std::sqrt(expected));
}

TEST(Bfat, ConfigValidation) {
    BFATConfig bc;
    bc.flip_prob = 1.5;
    EXPECT_THROW(bc.validate(), config_error);
    bc = {};
    bc.bit_set = {};
    EXPECT_THROW(bc.validate(), config_error);
}

TEST(Dataset, StratifiedSplitIsDeterministicAndComplete) {
    const Dataset d = synth_dataset(SynthKind::blobs, 101, 4, {16, 3, 3});
    const auto [tr, te] = split_dataset(d, 0.8, 7);
    const auto [tr2, te2] = split_dataset(d, 0.8, 7);
    EXPECT_EQ(tr, tr2);
    EXPECT_EQ(te, te2);
    EXPECT_EQ(tr.size() + te.size(), d.size());
    for (std::uint32_t c = 0; c < 3; ++c) {
        const auto count = [c](const Dataset& x) { return std::count(x.labels.begin(), x.labels.end(), c); };
        EXPECT_EQ(count(tr), static_cast<long>(std::floor(static_cast<double>(count(d)) * 0.8)));
    }
    EXPECT_THROW(split_dataset(d, 1.0, 0), domain_error);
}

TEST(Dataset, SynthKindsAreBalancedAndValid) {
    for (SynthKind k : {SynthKind::blobs, SynthKind::stripes, SynthKind::xor_}) {
        const Dataset d = synth_dataset(k, 40, 1);
        d.validate();
        EXPECT_EQ(std::count(d.labels.begin(), d.labels.end(), 0u), 20);
        EXPECT_EQ(parse_synth_kind(to_string(k)), k);
    }
    EXPECT_THROW(synth_dataset(SynthKind::blobs, 3, 1), data_error);
}

}  // namespace
}  // namespace hammerlab
