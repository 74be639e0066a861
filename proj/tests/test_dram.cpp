// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace hammerlab {
namespace {

ParamRegistry tiny_registry() {
    ParamRegistry r;
    r.add("w", Tensor({40}, std::vector<float>(40, 1.0f)));
    r.add("q", Tensor({24}, std::vector<std::int8_t>(24, 3), QuantParams{0.1f, 0}));
    r.add("v", Tensor({10}, std::vector<float>(10, -1.0f)));
    return r;
}

const DramGeometry kSmall{32, 8, 2};

TEST(DramGeometry, Validation) {
    EXPECT_THROW((DramGeometry{0, 1, 1}).validate(), config_error);
    EXPECT_EQ(kSmall.capacity_bytes(), 512u);
}

TEST(DramMap, PackingAndAddressArithmetic) {
    const DramMap m = map_model(tiny_registry(), kSmall, {0, 1});
    ASSERT_EQ(m.placements().size(), 3u);
    EXPECT_EQ(m.placement("w").start, 32u);
    EXPECT_EQ(m.placement("q").start, 32u + 160u);
    EXPECT_EQ(m.placement("q").element_bytes, 1u);
    EXPECT_EQ(m.placement("v").start, 32u + 160u + 24u);
    // Linear 300: global row 9 = bank 1 row 1, offset 12.
    const DramAddress a = m.to_address(300);
    EXPECT_EQ(a.bank, 1u);
    EXPECT_EQ(a.row, 1u);
    EXPECT_EQ(a.byte_offset, 12u);
    EXPECT_EQ(m.to_linear(a), 300u);
    EXPECT_THROW(m.placement("nope"), address_error);
}

TEST(DramMap, CellOfIsLittleEndianAndInvertible) {
    const ParamRegistry reg = tiny_registry();
    const DramMap m = map_model(reg, kSmall, {0, 1});
    const VulnerableCell c = m.cell_of({"w", 3, 30});
    // w[3] starts at 32 + 12 = 44; bit 30 is in byte 3, bit 6.
    EXPECT_EQ(m.to_linear({c.bank, c.row, c.byte_offset}), 47u);
    EXPECT_EQ(c.bit, 6);
    for (const auto& e : reg) {
        const int width = e.tensor.dtype() == DType::f32 ? 32 : 8;
        for (std::size_t i = 0; i < e.tensor.size(); ++i) {
            for (int b = 0; b < width; ++b) {
                const BitFlipSpec s{e.name, i, b};
                EXPECT_EQ(m.spec_of(m.cell_of(s)), s);
            }
        }
    }
    EXPECT_FALSE(m.spec_of({0, 0, 0, 0}).has_value());
    EXPECT_FALSE(m.spec_of({5, 0, 0, 0}).has_value());
    EXPECT_THROW(m.cell_of({"w", 40, 0}), address_error);
    EXPECT_THROW(m.cell_of({"q", 0, 8}), domain_error);
}

TEST(DramMap, CapacityAndBase) {
    EXPECT_THROW(map_model(tiny_registry(), DramGeometry{32, 4, 1}), capacity_error);
    EXPECT_THROW(map_model(tiny_registry(), kSmall, {2, 0}), address_error);
    EXPECT_THROW(map_model(tiny_registry(), kSmall, {1, 7}), capacity_error);
}

TEST(Template, DensityIsExpectedCellsPerByte) {
    const DramGeometry g{1024, 64, 1};
    const HammerTemplate t = generate_template(g, 0.5, 7);
    const double expected = 0.5 * static_cast<double>(g.capacity_bytes());
    EXPECT_NEAR(static_cast<double>(t.cells.size()), expected, 5 * std::sqrt(expected));
    EXPECT_TRUE(std::is_sorted(t.cells.begin(), t.cells.end()));
    EXPECT_EQ(generate_template(g, 8.0, 1).cells.size(), g.capacity_bytes() * 8);
    EXPECT_TRUE(generate_template(g, 0.0, 1).cells.empty());
    EXPECT_THROW(generate_template(g, 9.0, 1), config_error);
    const DramGeometry big{8192, 1024, 1};
    const double sparse = kDefaultTemplateDensity * static_cast<double>(big.capacity_bytes());
    EXPECT_NEAR(static_cast<double>(generate_template(big, kDefaultTemplateDensity, 2).cells.size()), sparse,
                5 * std::sqrt(sparse));
}

TEST(Template, RowWindowIsRespected) {
    const HammerTemplate t = generate_template(kSmall, 2.0, 3, 2, 3);
    ASSERT_FALSE(t.cells.empty());
    std::set<std::size_t> banks;
    for (const auto& c : t.cells) {
        EXPECT_GE(c.row, 2u);
        EXPECT_LT(c.row, 5u);
        banks.insert(c.bank);
    }
    EXPECT_EQ(banks.size(), 2u);
}

TEST(Hammer, DistanceOneSameBankOnly) {
    const ParamRegistry reg = tiny_registry();
    const DramMap m = map_model(reg, kSmall, {0, 1});
    HammerTemplate t;
    for (std::size_t r = 0; r < 8; ++r) {
        t.cells.push_back({0, r, 4, 1});
        t.cells.push_back({1, r, 4, 1});
    }
    t.normalize();
    const auto res = hammer(m, t, {{0, 3}});
    // Rows 2 and 4 of bank 0 hold w; bank 1 is untouched.
    ASSERT_EQ(res.realized.size(), 2u);
    for (const auto& s : res.realized) {
        const auto c = m.cell_of(s);
        EXPECT_EQ(c.bank, 0u);
        EXPECT_TRUE(c.row == 2 || c.row == 4);
    }
    EXPECT_EQ(hammer(m, t, {{0, 0}}).realized, (std::vector<BitFlipSpec>{{"w", 1, 1}}));
    EXPECT_TRUE(hammer(m, t, {{1, 5}}).realized.empty());
    EXPECT_THROW(hammer(m, t, {{0, 8}}), address_error);
}

TEST(CoverRows, OptimalAgainstBruteForce) {
    const DramGeometry g{8, 9, 1};
    Rng rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        std::set<RowId> victims;
        for (std::size_t n = 1 + rng.below(5); n > 0; --n) {
            victims.insert({0, rng.below(9)});
        }
        const auto chosen = cover_rows(g, victims);
        const std::set<RowId> cs(chosen.begin(), chosen.end());
        for (const auto& v : victims) {
            EXPECT_TRUE(cs.count({0, v.row + 1}) || (v.row > 0 && cs.count({0, v.row - 1})));
        }
        std::size_t best = 99;
        for (unsigned mask = 0; mask < (1u << 9); ++mask) {
            bool ok = true;
            for (const auto& v : victims) {
                const bool up = v.row + 1 < 9 && (mask >> (v.row + 1) & 1u);
                const bool down = v.row > 0 && (mask >> (v.row - 1) & 1u);
                ok = ok && (up || down);
            }
            if (ok) {
                best = std::min<std::size_t>(best, static_cast<std::size_t>(__builtin_popcount(mask)));
            }
        }
        EXPECT_EQ(chosen.size(), best);
    }
}

TEST(FeasiblePlan, PartitionAndCollateral) {
    const ParamRegistry reg = tiny_registry();
    const DramMap m = map_model(reg, kSmall, {0, 1});
    const HammerTemplate t = generate_template(kSmall, 1.0, 5);
    for (std::uint64_t s = 0; s < 30; ++s) {
        const FlipPlan p = random_uniform_plan(reg, {}, 15, s);
        const Feasibility f = feasible_plan(p, m, t);
        EXPECT_EQ(f.achievable.size() + f.unreachable.size(), p.size());
        for (const auto& x : f.achievable.flips) {
            EXPECT_TRUE(t.contains(m.cell_of(x)));
        }
        for (const auto& x : f.unreachable) {
            EXPECT_FALSE(t.contains(m.cell_of(x)));
        }
        const auto realized = hammer(m, t, f.aggressors).realized;
        const std::set<BitFlipSpec> rs(realized.begin(), realized.end());
        const std::set<BitFlipSpec> want(f.achievable.flips.begin(), f.achievable.flips.end());
        for (const auto& x : want) {
            EXPECT_TRUE(rs.count(x));
        }
        std::set<BitFlipSpec> extra;
        for (const auto& x : rs) {
            if (!want.count(x)) {
                extra.insert(x);
            }
        }
        EXPECT_EQ(extra, std::set<BitFlipSpec>(f.collateral.begin(), f.collateral.end()));
    }
}

}  // namespace
}  // namespace hammerlab
