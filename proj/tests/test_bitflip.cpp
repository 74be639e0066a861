// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "hammerlab/bitflip.hpp"
#include "hammerlab/model.hpp"

namespace hammerlab {
namespace {

// Oracle: flip through memcpy and integer arithmetic only.
float flip_oracle(float v, int pos) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    u = (u & (1u << pos)) ? u - (1u << pos) : u + (1u << pos);
    float out;
    std::memcpy(&out, &u, 4);
    return out;
}

TEST(FlipBit, KnownValues) {
    EXPECT_EQ(flip_bit(1.0f, 31), -1.0f);
    EXPECT_EQ(flip_bit(1.0f, 30), std::numeric_limits<float>::infinity());
    EXPECT_EQ(flip_bit(1.0f, 22), 1.5f);
    EXPECT_EQ(flip_bit(1.0f, 0), std::nextafter(1.0f, 2.0f));
    EXPECT_EQ(flip_bit(2.0f, 23), 4.0f);
    EXPECT_EQ(flip_bit(1.0f, 23), 0.5f);
    EXPECT_EQ(flip_bit(0.0f, 31), -0.0f);
    EXPECT_TRUE(std::signbit(flip_bit(0.0f, 31)));
    EXPECT_TRUE(std::isnan(flip_bit(std::numeric_limits<float>::infinity(), 0)));
}

TEST(FlipBit, MatchesOracleAndIsInvolution) {
    Rng rng(77);
    for (int i = 0; i < 5000; ++i) {
        const auto bits = static_cast<std::uint32_t>(rng.next_u64());
        const int pos = static_cast<int>(rng.below(32));
        const float x = from_bits(bits);
        EXPECT_EQ(bits_of(flip_bit(x, pos)), bits_of(flip_oracle(x, pos)));
        EXPECT_EQ(bits_of(flip_bit(flip_bit(x, pos), pos)), bits);
    }
}

TEST(FlipBit, RejectsBadPositions) {
    EXPECT_THROW(flip_bit(1.0f, 32), domain_error);
    EXPECT_THROW(flip_bit(1.0f, -1), domain_error);
}

TEST(ClassifyBit, FieldBoundaries) {
    EXPECT_EQ(classify_bit(31), BitField::sign);
    EXPECT_EQ(classify_bit(30), BitField::exponent);
    EXPECT_EQ(classify_bit(23), BitField::exponent);
    EXPECT_EQ(classify_bit(22), BitField::high_mantissa);
    EXPECT_EQ(classify_bit(16), BitField::high_mantissa);
    EXPECT_EQ(classify_bit(15), BitField::low_mantissa);
    EXPECT_EQ(classify_bit(0), BitField::low_mantissa);
    std::size_t total = 0;
    for (auto f : {BitField::sign, BitField::exponent, BitField::high_mantissa, BitField::low_mantissa}) {
        for (int b : field_bits(f)) {
            EXPECT_EQ(classify_bit(b), f);
        }
        total += field_bits(f).size();
    }
    EXPECT_EQ(total, 32u);
    EXPECT_EQ(parse_bit_field(to_string(BitField::high_mantissa)), BitField::high_mantissa);
    EXPECT_THROW(parse_bit_field("mantissa"), config_error);
}

ParamRegistry small_registry() {
    ParamRegistry r;
    r.add("a", Tensor({4}, std::vector<float>{1.0f, -2.0f, 0.5f, 0.0f}));
    r.add("b", Tensor({2, 2}, std::vector<float>{3.0f, 4.0f, 5.0f, 6.0f}));
    return r;
}

TEST(ApplyPlan, RecordsOutcomes) {
    ParamRegistry r = small_registry();
    const auto out = apply_plan(r, FlipPlan{{{"a", 0, 31}, {"b", 3, 22}}, std::nullopt});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].old_value, 1.0f);
    EXPECT_EQ(out[0].new_value, -1.0f);
    EXPECT_EQ(out[0].field, BitField::sign);
    EXPECT_EQ(out[1].field, BitField::high_mantissa);
    EXPECT_EQ(r.at("a").f32()[0], -1.0f);
    EXPECT_EQ(out[1].new_bits, out[1].old_bits ^ (1u << 22));
}

TEST(ApplyPlan, AtomicOnBadAddress) {
    ParamRegistry r = small_registry();
    const ParamRegistry before = r;
    EXPECT_THROW(apply_plan(r, FlipPlan{{{"a", 0, 31}, {"a", 4, 0}}, std::nullopt}), address_error);
    EXPECT_THROW(apply_plan(r, FlipPlan{{{"a", 0, 31}, {"zzz", 0, 0}}, std::nullopt}), address_error);
    EXPECT_THROW(apply_plan(r, FlipPlan{{{"a", 0, 31}, {"b", 0, 32}}, std::nullopt}), domain_error);
    EXPECT_TRUE(bytes_equal(r, before));
}

TEST(ApplyPlan, TwiceRestoresAndDuplicatesCancel) {
    ParamRegistry r = small_registry();
    const ParamRegistry before = r;
    const FlipPlan p = random_uniform_plan(r, {}, 50, 3);
    apply_plan(r, p);
    apply_plan(r, p);
    EXPECT_TRUE(bytes_equal(r, before));
    apply_plan(r, FlipPlan{{{"b", 1, 7}, {"b", 1, 7}}, std::nullopt});
    EXPECT_TRUE(bytes_equal(r, before));
}

TEST(ApplyPlan, I8FlipsAddressTheByte) {
    ParamRegistry r;
    r.add("q", Tensor({2}, std::vector<std::int8_t>{0, -1}, QuantParams{0.5f, 0}));
    const auto out = apply_plan(r, FlipPlan{{{"q", 0, 7}, {"q", 1, 0}}, std::nullopt});
    EXPECT_EQ(r.at("q").i8()[0], -128);
    EXPECT_EQ(r.at("q").i8()[1], -2);
    EXPECT_EQ(out[0].field, BitField::sign);
    EXPECT_EQ(out[0].new_value, -64.0f);
    EXPECT_THROW(apply_plan(r, FlipPlan{{{"q", 0, 8}}, std::nullopt}), domain_error);
}

TEST(Plans, ExplicitIsIndexMajor) {
    const std::vector<std::size_t> idx = {4, 1};
    const std::vector<int> bits = {30, 7};
    const FlipPlan p = explicit_plan("head_fc", idx, bits);
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p.flips[0], (BitFlipSpec{"head_fc", 4, 30}));
    EXPECT_EQ(p.flips[1], (BitFlipSpec{"head_fc", 4, 7}));
    EXPECT_EQ(p.flips[2], (BitFlipSpec{"head_fc", 1, 30}));
}

TEST(Plans, RandomUniformIsDeterministicAndInRange) {
    const ParamRegistry r = small_registry();
    const FlipPlan p = random_uniform_plan(r, {}, 200, 9);
    EXPECT_EQ(p, random_uniform_plan(r, {}, 200, 9));
    EXPECT_NE(p, random_uniform_plan(r, {}, 200, 10));
    std::set<std::string> layers;
    for (const auto& f : p.flips) {
        EXPECT_LT(f.index, r.at(f.layer).size());
        EXPECT_GE(f.bit, 0);
        EXPECT_LT(f.bit, 32);
        layers.insert(f.layer);
    }
    EXPECT_EQ(layers.size(), 2u);
}

TEST(Plans, FieldConstrainedDistinctAndBounded) {
    const ParamRegistry r = small_registry();
    const auto bits = field_bits(BitField::exponent);
    const FlipPlan p = field_constrained_plan(r, "a", 32, bits, 1);
    std::set<std::pair<std::size_t, int>> seen;
    for (const auto& f : p.flips) {
        EXPECT_EQ(classify_bit(f.bit), BitField::exponent);
        EXPECT_TRUE(seen.emplace(f.index, f.bit).second);
    }
    EXPECT_EQ(seen.size(), 32u);
    EXPECT_THROW(field_constrained_plan(r, "a", 33, bits, 1), domain_error);
}

TEST(Plans, GenerateFromRequest) {
    const ParamRegistry r = small_registry();
    PlanRequest req;
    req.strategy = PlanStrategy::explicit_;
    req.layer = "b";
    req.indices = {0, 3};
    req.bits = {31};
    EXPECT_EQ(generate_plan(r, req, 0).size(), 2u);
    req.indices = {4};
    EXPECT_THROW(generate_plan(r, req, 0), address_error);
    EXPECT_THROW(parse_plan_strategy("greedy"), config_error);
}

}  // namespace
}  // namespace hammerlab
