// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace hammerlab {
namespace {

using testing::TempDir;

TEST(Checkpoint, RoundTripKeepsNonFiniteBitsExactly) {
    TempDir dir("ckpt");
    ModelConfig c;
    c.pooling = Pooling::cls;
    c.seed = 11;
    Model m = init_model(c);
    auto w = m.params.at("head_fc").f32();
    w[0] = std::numeric_limits<float>::infinity();
    w[1] = -std::numeric_limits<float>::infinity();
    w[2] = from_bits(0x7FC0BEEFu);
    w[3] = from_bits(0xFF800001u);
    w[4] = -0.0f;
    save_checkpoint(m, dir / "m.mhck");
    const Model back = load_checkpoint(dir / "m.mhck");
    EXPECT_EQ(back.config, m.config);
    EXPECT_TRUE(bytes_equal(back.params, m.params));
    EXPECT_EQ(bits_of(back.params.at("head_fc").f32()[2]), 0x7FC0BEEFu);
    EXPECT_THROW(load_quantized_checkpoint(dir / "m.mhck"), format_error);
}

TEST(Checkpoint, QuantizedRoundTrip) {
    TempDir dir("qckpt");
    QuantizedModel q = quantize_model(init_model(ModelConfig{.seed = 2}));
    apply_plan(q.params, random_uniform_plan(q.params, {}, 40, 1));
    save_checkpoint(q, dir / "q.mhck");
    const QuantizedModel back = load_quantized_checkpoint(dir / "q.mhck");
    EXPECT_TRUE(bytes_equal(back.params, q.params));
    EXPECT_THROW(load_checkpoint(dir / "q.mhck"), format_error);
}

TEST(Checkpoint, RejectsCorruption) {
    const Model m = init_model(ModelConfig{});
    const auto good = encode_checkpoint(m.config, m.params);
    auto bad = good;
    bad[0] = 'X';
    EXPECT_THROW(decode_checkpoint(bad), format_error);
    bad = good;
    bad.push_back(0);
    EXPECT_THROW(decode_checkpoint(bad), format_error);
    bad = good;
    bad.resize(bad.size() - 3);
    EXPECT_THROW(decode_checkpoint(bad), format_error);
    // A registry that does not match the declared architecture.
    ParamRegistry reg = m.params;
    ParamRegistry wrong;
    for (const auto& e : reg) {
        wrong.add(e.name == "head_fc" ? "head_xx" : e.name, e.tensor);
    }
    EXPECT_THROW(decode_checkpoint(encode_checkpoint(m.config, wrong)), format_error);
}

TEST(DatasetFile, RoundTripAndErrors) {
    TempDir dir("mhds");
    const Dataset d = synth_dataset(SynthKind::stripes, 12, 3, {8, 1, 3});
    save_dataset(d, dir / "d.mhds");
    EXPECT_EQ(load_dataset(dir / "d.mhds"), d);

    auto bytes = encode_dataset(d);
    auto truncated = bytes;
    truncated.pop_back();
    EXPECT_THROW(decode_dataset(truncated), format_error);
    auto bad_label = bytes;
    bad_label[bad_label.size() - 2] = 9;  // last label -> 9 with 3 classes
    EXPECT_THROW(decode_dataset(bad_label), data_error);
    auto empty = bytes;
    empty[6] = empty[7] = empty[8] = empty[9] = 0;  // N = 0
    EXPECT_THROW(decode_dataset(empty), data_error);
    EXPECT_THROW(load_dataset(dir / "missing.mhds"), error);
}

TEST(DatasetDir, RoundTripGroupsByClass) {
    TempDir dir("dsdir");
    const Dataset d = synth_dataset(SynthKind::blobs, 10, 5, {4, 3, 2});
    save_dataset_dir(d, dir / "root");
    const Dataset back = load_dataset(dir / "root");
    EXPECT_EQ(back.size(), d.size());
    EXPECT_EQ(back.num_classes, 2u);
    // Directory order is class-major; compare as multisets of (label, image).
    std::multiset<std::pair<std::uint32_t, std::vector<std::uint8_t>>> a, b;
    for (std::size_t i = 0; i < d.size(); ++i) {
        a.emplace(d.labels[i], d.image(i).pixels);
        b.emplace(back.labels[i], back.image(i).pixels);
    }
    EXPECT_EQ(a, b);
    std::filesystem::create_directories(dir / "none");
    EXPECT_THROW(load_dataset(dir / "none"), data_error);
}

TEST(PlanText, RoundTripAndErrors) {
    FlipPlan p{{{"head_fc", 3, 30}, {"block0_attn_qkv", 100, 0}}, 42};
    EXPECT_EQ(parse_plan(format_plan(p)), p);
    EXPECT_EQ(parse_plan("# a comment\n\nhead_fc\t1\t2\n").size(), 1u);
    EXPECT_THROW(parse_plan("head_fc 1 2\n"), format_error);
    EXPECT_THROW(parse_plan("head_fc\t-1\t2\n"), format_error);
    EXPECT_THROW(parse_plan("head_fc\t1\t32\n"), format_error);
    EXPECT_THROW(parse_plan("\t1\t2\n"), format_error);
}

TEST(TemplateText, RoundTripAndErrors) {
    const HammerTemplate t = generate_template(DramGeometry{64, 8, 2}, 0.3, 9);
    const HammerTemplate back = parse_template(format_template(t));
    EXPECT_EQ(back.cells, t.cells);
    EXPECT_EQ(back.density, t.density);
    EXPECT_EQ(back.seed, t.seed);
    EXPECT_THROW(parse_template("0 0 0 8\n"), format_error);
    EXPECT_THROW(parse_template("0 0 0\n"), format_error);
    EXPECT_THROW(parse_template("0 0 0 1\ndensity 1 seed 2\n"), format_error);
}

}  // namespace
}  // namespace hammerlab
