// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace hammerlab {
namespace {

using testing::test_split;
using testing::trained_vit;

TEST(Quantization, EveryTensorBecomesI8) {
    const QuantizedModel q = quantize_model(trained_vit());
    for (const auto& e : q.params) {
        EXPECT_EQ(e.tensor.dtype(), DType::i8) << e.name;
        EXPECT_EQ(e.tensor.shape(), trained_vit().params.at(e.name).shape());
    }
    const Model back = dequantize_model(q);
    for (const auto& e : back.params) {
        const auto& orig = trained_vit().params.at(e.name).f32();
        const double scale = q.params.at(e.name).quant()->scale;
        for (std::size_t i = 0; i < orig.size(); ++i) {
            EXPECT_LE(std::abs(static_cast<double>(e.tensor.f32()[i]) - orig[i]), scale / 2 + 1e-6);
        }
    }
    EXPECT_GE(accuracy(q, test_split()), accuracy(trained_vit(), test_split()) - 0.05);
}

TEST(Quantization, FlipDisplacementIsBounded) {
    QuantizedModel q = quantize_model(trained_vit());
    const auto out = apply_plan(q.params, uniform_rate_plan(q.params, 0.01, 5));
    ASSERT_FALSE(out.empty());
    for (const auto& o : out) {
        const double scale = q.params.at(o.spec.layer).quant()->scale;
        EXPECT_LE(std::abs(static_cast<double>(o.new_value) - o.old_value), 128.0 * scale * (1 + 1e-6));
        EXPECT_LT(o.spec.bit, 8);
    }
}

TEST(Quantization, SweepPairsSeeds) {
    const std::vector<std::uint64_t> seeds = {3, 4};
    const SweepResult r = quantization_sweep(trained_vit(), test_split(), 1e-3, TriggerSpec{}, seeds);
    ASSERT_EQ(r.points.size(), 2u);
    EXPECT_EQ(r.points[0].label, "f32");
    EXPECT_EQ(r.points[1].label, "int8");
    const QuantizedModel q = quantize_model(trained_vit());
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        QuantizedModel w = q;
        apply_plan(w.params, uniform_rate_plan(w.params, 1e-3, seeds[k]));
        EXPECT_EQ(r.points[1].trials[k].flip_acc, accuracy(w, test_split()));
        EXPECT_EQ(r.points[0].trials[k].n_flips, r.points[1].trials[k].n_flips);
    }
}

TEST(Nas, ScoreFormula) {
    const NasWeights w{1.0, 1.0, 0.0, 1.0};
    const auto s = nas_score(0.90, 0.855, w, 0.0);
    EXPECT_NEAR(s.rr, 0.95, 1e-15);
    EXPECT_NEAR(s.l_nas, -1.85, 1e-12);
    EXPECT_EQ(l_nas(0.3, 0.5, 0.2, 0.8, 0.75, 0.25), -0.3 * 0.8 - 0.5 * 0.75 + 0.2 * 0.25);
    EXPECT_THROW(nas_score(0.0, 0.0, w, 0.0), domain_error);
}

TEST(Nas, WeightsAndBudget) {
    NasWeights w;
    EXPECT_DOUBLE_EQ(w.c_eff(50000), 0.5);
    EXPECT_THROW(w.c_eff(100001), config_error);
    w.alpha = -1.0;
    EXPECT_THROW(w.validate(), config_error);
    w = {0.0, 0.0, 0.0, 1.0};
    EXPECT_THROW(w.validate(), config_error);
}

TEST(Nas, SearchSortsAscendingStable) {
    auto [tr, te] = testing::small_blobs();
    ModelConfig a, b, c;
    b.embed_dim = 16;
    b.head_in_features = 16;
    c.arch = Arch::tiny_mlp;
    c.head_in_features = 16;
    TrainConfig tc;
    tc.epochs = 2;
    const NasWeights w{1.0, 1.0, 0.5, 100000.0};
    const FlipProtocol proto{5, 2, 1};
    const auto ranked = nas_search({a, b, c}, tr, te, w, tc, proto);
    ASSERT_EQ(ranked.size(), 3u);
    std::vector<double> scores;
    for (const auto& cfg : {a, b, c}) {
        scores.push_back(evaluate_candidate(cfg, tr, te, w, tc, proto).l_nas);
    }
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(ranked[i].l_nas, sorted[i]);
        EXPECT_EQ(ranked[i].l_nas, l_nas(1.0, 1.0, 0.5, ranked[i].acc_clean, ranked[i].rr, ranked[i].c_eff));
    }
    EXPECT_THROW(nas_search({a}, tr, te, w, tc, proto), precondition_error);
}

TEST(Nas, ProtocolIsDeterministic) {
    const FlipProtocol p{10, 3, 7};
    const double x = protocol_flip_accuracy(trained_vit(), test_split(), p);
    EXPECT_EQ(x, protocol_flip_accuracy(trained_vit(), test_split(), p));
    double sum = 0.0;
    for (std::size_t t = 0; t < 3; ++t) {
        Model w = trained_vit();
        apply_plan(w, random_uniform_plan(w.params, {}, 10, derive_seed(7, t)));
        sum += accuracy(w, test_split());
    }
    EXPECT_EQ(x, sum / 3.0);
}

}  // namespace
}  // namespace hammerlab
