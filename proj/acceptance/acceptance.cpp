// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "hammerlab/cli.hpp"
#include "hammerlab/hammerlab.hpp"

using namespace hammerlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
    char b[128];
    std::snprintf(b, sizeof b, f, a);
    return b;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t n) {
    std::vector<std::uint64_t> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = first + i;
    }
    return s;
}

// Shared fixtures ------------------------------------------------------------

struct Split {
    Dataset train, test;
};

Split blobs_split() {
    auto [tr, te] = split_dataset(synth_dataset(SynthKind::blobs, 400, 1), 0.8, 1);
    return {std::move(tr), std::move(te)};
}

/// Wider reference model used by the trend criteria.
ModelConfig reference_config() {
    ModelConfig c;
    c.embed_dim = 64;
    c.num_heads = 8;
    c.head_in_features = 64;
    c.mlp_hidden = 128;
    c.seed = 7;
    return c;
}

TrainConfig reference_training() {
    TrainConfig t;
    t.epochs = 15;
    return t;
}

const Split& data() {
    static const Split s = blobs_split();
    return s;
}

const Model& reference_model() {
    static const Model m = [] {
        Model x = init_model(reference_config());
        train(x, data().train, reference_training());
        return x;
    }();
    return m;
}

// Criteria -------------------------------------------------------------------

Outcome c1_ieee754() {
    const auto t0 = Clock::now();
    bool ok = flip_bit(1.0f, 31) == -1.0f;
    ok = ok && std::isinf(flip_bit(1.0f, 30)) && flip_bit(1.0f, 30) > 0.0f;
    ok = ok && flip_bit(1.0f, 22) == 1.5f;
    Rng rng(2024);
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto bits = static_cast<std::uint32_t>(rng.next_u64());
        const int pos = static_cast<int>(rng.below(32));
        const float x = from_bits(bits);
        if (bits_of(flip_bit(flip_bit(x, pos), pos)) != bits) {
            ++bad;
        }
    }
    const double secs = seconds_since(t0);
    ok = ok && bad == 0 && secs < 1.0;
    return {ok, "3 fixed cases, 10000 involutions, " + std::to_string(bad) + " failures, " + fmt("%.3f s", secs)};
}

Outcome c2_plan_atomicity() {
    const auto t0 = Clock::now();
    Model m = init_model(ModelConfig{});
    const ParamRegistry snapshot = m.params;
    std::size_t failures = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(derive_seed(99, s));
        FlipPlan p = random_uniform_plan(m.params, {}, 1 + rng.below(40), s);
        apply_plan(m, p);
        apply_plan(m, p);
        failures += bytes_equal(m.params, snapshot) ? 0 : 1;

        FlipPlan bad = p;
        const auto at = static_cast<std::ptrdiff_t>(rng.below(bad.flips.size() + 1));
        if (s % 2 == 0) {
            bad.flips.insert(bad.flips.begin() + at, {"no_such_layer", 0, 3});
        } else {
            bad.flips.insert(bad.flips.begin() + at, {"head_fc", m.params.at("head_fc").size() + rng.below(9), 3});
        }
        bool threw = false;
        try {
            apply_plan(m, bad);
        } catch (const address_error&) {
            threw = true;
        }
        failures += (threw && bytes_equal(m.params, snapshot)) ? 0 : 1;
    }
    const double secs = seconds_since(t0);
    return {failures == 0 && secs < 10.0,
            "100 valid + 100 invalid plans, " + std::to_string(failures) + " failures, " + fmt("%.2f s", secs)};
}

Outcome c3_dram_adjacency() {
    const DramGeometry g{64, 16, 2};
    // One vulnerable cell per (bank, row, byte), bit = byte % 8, over all mapped bytes.
    Model m = init_model(ModelConfig{.arch = Arch::tiny_mlp, .image_size = 2, .channels = 1, .head_in_features = 4,
                                     .num_classes = 2});
    const DramMap map = map_model(m, g, {0, 1});
    HammerTemplate t;
    for (std::size_t b = 0; b < g.banks; ++b) {
        for (std::size_t r = 0; r < g.rows_per_bank; ++r) {
            for (std::size_t off = 0; off < g.row_size_bytes; off += 3) {
                t.cells.push_back({b, r, off, static_cast<int>(off % 8)});
            }
        }
    }
    t.normalize();
    std::size_t mismatches = 0, checked = 0;
    // Exhaustive over single aggressors and ordered pairs in bank 0, plus random sets across banks.
    std::vector<std::vector<RowId>> sets;
    for (std::size_t a = 0; a < g.rows_per_bank; ++a) {
        sets.push_back({{0, a}});
        for (std::size_t b = a + 1; b < g.rows_per_bank; ++b) {
            sets.push_back({{0, a}, {0, b}});
        }
    }
    Rng rng(5);
    for (int k = 0; k < 200; ++k) {
        std::vector<RowId> s;
        for (std::size_t n = 1 + rng.below(4); n > 0; --n) {
            s.push_back({rng.below(g.banks), rng.below(g.rows_per_bank)});
        }
        sets.push_back(s);
    }
    for (const auto& aggr : sets) {
        const auto res = hammer(map, t, aggr);
        const std::set<BitFlipSpec> got(res.realized.begin(), res.realized.end());
        for (const auto& c : t.cells) {
            bool near = false;
            for (const auto& a : aggr) {
                const auto d = c.row > a.row ? c.row - a.row : a.row - c.row;
                near = near || (a.bank == c.bank && d == 1);
            }
            const auto spec = map.spec_of(c);
            const bool expect = near && spec.has_value();
            const bool have = spec && got.count(*spec);
            mismatches += expect != have ? 1 : 0;
            ++checked;
        }
    }
    // Partition: random plans against a density-0.5 template, membership oracle.
    std::size_t partition_bad = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const HammerTemplate tt = generate_template(g, 0.5, s);
        const FlipPlan p = random_uniform_plan(m.params, {}, 20, 1000 + s);
        const Feasibility f = feasible_plan(p, map, tt);
        std::multiset<BitFlipSpec> all(f.achievable.flips.begin(), f.achievable.flips.end());
        all.insert(f.unreachable.begin(), f.unreachable.end());
        partition_bad += all == std::multiset<BitFlipSpec>(p.flips.begin(), p.flips.end()) ? 0 : 1;
        for (const auto& x : f.achievable.flips) {
            partition_bad += tt.contains(map.cell_of(x)) ? 0 : 1;
        }
        for (const auto& x : f.unreachable) {
            partition_bad += tt.contains(map.cell_of(x)) ? 1 : 0;
        }
        const auto realized = hammer(map, tt, f.aggressors).realized;
        const std::set<BitFlipSpec> rs(realized.begin(), realized.end());
        for (const auto& x : f.achievable.flips) {
            partition_bad += rs.count(x) ? 0 : 1;
        }
    }
    return {mismatches == 0 && partition_bad == 0,
            std::to_string(checked) + " cell/aggressor-set checks, " + std::to_string(mismatches) +
                " adjacency mismatches, " + std::to_string(partition_bad) + " partition violations"};
}

Outcome c4_trigger() {
    Rng rng(11);
    std::size_t bad = 0;
    Model m = init_model(ModelConfig{.seed = 3});
    Dataset d{16, 16, 3, 2, {}, {}};
    for (int i = 0; i < 100; ++i) {
        Image img{16, 16, 3, std::vector<std::uint8_t>(16 * 16 * 3)};
        for (auto& p : img.pixels) {
            p = static_cast<std::uint8_t>(rng.below(256));
        }
        TriggerSpec spec;
        spec.size_px = rng.below(17);
        spec.corner = static_cast<Corner>(rng.below(4));
        spec.intensity = static_cast<std::uint8_t>(rng.below(256));
        const Image s1 = stamp(img, spec);
        bad += stamp(s1, spec) == s1 ? 0 : 1;
        const bool bottom = spec.corner == Corner::bottom_left || spec.corner == Corner::bottom_right;
        const bool right = spec.corner == Corner::top_right || spec.corner == Corner::bottom_right;
        for (std::size_t y = 0; y < 16; ++y) {
            for (std::size_t x = 0; x < 16; ++x) {
                const bool in_y = bottom ? y >= 16 - spec.size_px : y < spec.size_px;
                const bool in_x = right ? x >= 16 - spec.size_px : x < spec.size_px;
                for (std::size_t c = 0; c < 3; ++c) {
                    const auto want = in_y && in_x ? spec.intensity : img.at(y, x, c);
                    bad += s1.at(y, x, c) == want ? 0 : 1;
                }
            }
        }
        d.push_back(img, static_cast<std::uint32_t>(rng.below(2)));
    }
    for (std::uint32_t target = 0; target < 2; ++target) {
        TriggerSpec spec;
        spec.target_class = target;
        const PoisonedDataset pd = poison(d, spec);
        const Predictor p(m);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < pd.size(); ++i) {
            hits += p.predict(pd.data.pixels_of(i)) == static_cast<int>(target) ? 1 : 0;
        }
        const double oracle = static_cast<double>(hits) / static_cast<double>(pd.size());
        bad += asr(m, pd) == accuracy(m, pd.data) && asr(m, pd) == oracle ? 0 : 1;
    }
    return {bad == 0, "100 random images x (idempotence, pixel-disjointness), ASR identity; " + std::to_string(bad) +
                          " violations"};
}

/// Central-difference check of every parameter group in double precision.
double worst_gradient_error() {
    ModelConfig c;
    c.embed_dim = 8;
    c.num_heads = 2;
    c.head_in_features = 8;
    c.mlp_hidden = 12;
    c.image_size = 8;
    c.patch_size = 4;
    c.seed = 5;
    const Model m = init_model(c);
    const Dataset ds = synth_dataset(SynthKind::blobs, 4, 9, {8, 3, 2});
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
    double worst = 0.0;
    Rng rng(1);
    for (std::size_t p = 0; p < w.size(); ++p) {
        for (int k = 0; k < 4; ++k) {
            const std::size_t j = rng.below(w[p].size());
            const double h = 1e-6, orig = w[p][j];
            w[p][j] = orig + h;
            const double lp = batch_gradient<double, double>(c, views(), ds, idx).loss;
            w[p][j] = orig - h;
            const double lm = batch_gradient<double, double>(c, views(), ds, idx).loss;
            w[p][j] = orig;
            const double fd = (lp - lm) / (2 * h);
            const double an = g.grads[p][j];
            const double err = std::abs(fd - an) / std::max(1e-6, std::max(std::abs(fd), std::abs(an)));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

Outcome c5_pipeline() {
    const auto t0 = Clock::now();
    const ModelConfig c;  // default tiny_vit
    Model m = init_model(c);
    TrainConfig tc;
    tc.epochs = 15;
    train(m, data().train, tc);
    const double acc = accuracy(m, data().test);
    const double secs = seconds_since(t0);
    const double grad = worst_gradient_error();
    const bool ok = m.parameter_count() <= 100000 && acc >= 0.95 && secs <= 60.0 && grad <= 1e-3;
    return {ok, std::to_string(m.parameter_count()) + " params, test acc " + fmt("%.4f", acc) + " in " +
                    fmt("%.1f s", secs) + ", worst gradient rel. error " + fmt("%.2e", grad)};
}

std::string test_summary(const PairedTest& t) {
    return "n=" + std::to_string(t.n) + fmt(", mean diff %.4f", t.mean_diff) + fmt(", t=%.3f", t.t) +
           fmt(", p=%.4g", t.p_value);
}

Outcome c6_field_sensitivity() {
    const auto t0 = Clock::now();
    const Model& m = reference_model();
    const auto exp_bits = field_bits(BitField::exponent);
    const auto low_bits = field_bits(BitField::low_mantissa);
    std::vector<double> low, ex;
    for (std::uint64_t s : seed_range(0, 50)) {
        Model a = m, b = m;
        apply_plan(a, field_constrained_plan(a.params, "head_fc", 10, low_bits, s));
        apply_plan(b, field_constrained_plan(b.params, "head_fc", 10, exp_bits, s));
        low.push_back(accuracy(a, data().test));
        ex.push_back(accuracy(b, data().test));
    }
    const PairedTest t = paired_t_test(low, ex);
    const double secs = seconds_since(t0);
    return {t.mean_diff > 0.0 && t.p_value < 0.05 && secs <= 300.0,
            fmt("mean flip_acc low-mantissa %.4f", summarize(low).mean) +
                fmt(" vs exponent %.4f; ", summarize(ex).mean) + test_summary(t) + fmt(", %.1f s", secs)};
}

Outcome c7_layer_sweep() {
    const auto t0 = Clock::now();
    const Model& m = reference_model();
    const std::vector<std::string> layers = {"head_fc", "block0_attn_qkv"};
    const auto seeds = seed_range(0, 100);
    const SweepResult r =
        layer_sweep(m, data().test, layers, shared_template_generator(m.params, layers), TriggerSpec{}, seeds);
    std::vector<double> head, qkv;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        head.push_back(r.points[0].trials[i].delta_acc);
        qkv.push_back(r.points[1].trials[i].delta_acc);
    }
    const PairedTest t = paired_t_test(head, qkv);
    const double secs = seconds_since(t0);
    return {t.mean_diff > 0.0 && t.p_value < 0.05 && secs <= 300.0,
            fmt("mean delta_acc head_fc %.4f", r.points[0].delta_acc.mean) +
                fmt(" vs attn_qkv %.4f; ", r.points[1].delta_acc.mean) + test_summary(t) + fmt(", %.1f s", secs)};
}

Outcome c8_trojan() {
    const auto t0 = Clock::now();
    const Model& m = reference_model();
    const TriggerSpec trig;  // 4x4 white square, top-left, target class 0
    const auto pool = sign_exponent_pool(m.params, "head_fc");
    const GreedyResult g = greedy_plan_search(m, data().test, trig, 20, pool, 0.0);
    std::vector<FrontierPoint> pts = budget_points(g, 20);
    for (double lambda : {0.5, 1.0, 2.0}) {
        const auto more = budget_points(greedy_plan_search(m, data().test, trig, 20, pool, lambda), 20);
        pts.insert(pts.end(), more.begin(), more.end());
    }
    const auto frontier = pareto_frontier(pts);
    const double best_asr = g.steps.empty() ? g.base_asr : g.steps.back().asr;
    // Replay the chosen plan through the full forward path.
    const EvalReport replay = run_attack(m, data().test, g.plan, trig);
    const double secs = seconds_since(t0);
    std::string detail = fmt("ASR %.4f", best_asr) + " with " + std::to_string(g.plan.size()) +
                         fmt(" flips (replayed %.4f", replay.trigger_metric) + fmt(", delta_acc %.4f)", replay.delta_acc) +
                         "; frontier (budget: ASR/delta):";
    for (const auto& p : frontier) {
        detail += " " + std::to_string(p.budget) + ":" + fmt("%.3f", p.asr) + "/" + fmt("%.3f", p.delta_acc);
    }
    detail += fmt("; %.1f s", secs);
    return {best_asr >= 0.9 && replay.trigger_metric == best_asr && !frontier.empty() && secs <= 300.0, detail};
}

Outcome c9_quantization() {
    const auto t0 = Clock::now();
    const Model& m = reference_model();
    const QuantizedModel q = quantize_model(m);
    const double rate = 1e-3;
    const auto seeds = seed_range(0, 30);
    const SweepResult r = quantization_sweep(m, data().test, rate, TriggerSpec{}, seeds);
    std::vector<double> df, dq;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        df.push_back(r.points[0].trials[i].delta_acc);
        dq.push_back(r.points[1].trials[i].delta_acc);
    }
    // Exact bound on every i8 flip, checked in double from the stored bytes.
    std::size_t flips = 0, violations = 0;
    for (std::uint64_t s : seeds) {
        QuantizedModel w = q;
        const auto plan = uniform_rate_plan(w.params, rate, s);
        FlipPlan all_bits_plan = plan;
        for (int b = 0; b < 8; ++b) {
            all_bits_plan.flips.push_back({"head_fc", s % w.params.at("head_fc").size(), b});
        }
        for (const auto& o : apply_plan(w.params, all_bits_plan)) {
            const auto& qp = *w.params.at(o.spec.layer).quant();
            const double before = (static_cast<double>(std::bit_cast<std::int8_t>(static_cast<std::uint8_t>(o.old_bits))) -
                                   qp.zero_point) * static_cast<double>(qp.scale);
            const double after = (static_cast<double>(std::bit_cast<std::int8_t>(static_cast<std::uint8_t>(o.new_bits))) -
                                  qp.zero_point) * static_cast<double>(qp.scale);
            violations += std::abs(after - before) <= static_cast<double>(qp.scale) * 128.0 ? 0 : 1;
            ++flips;
        }
    }
    const double clean_f = accuracy(m, data().test), clean_q = accuracy(q, data().test);
    const double secs = seconds_since(t0);
    const double mf = summarize(df).mean, mq = summarize(dq).mean;
    return {mq <= mf && violations == 0 && seeds.size() >= 20,
            fmt("rate %.0e: ", rate) + fmt("mean delta_acc int8 %.4f", mq) + fmt(" vs f32 %.4f", mf) +
                fmt(" (clean %.4f", clean_q) + fmt(" vs %.4f)", clean_f) + "; " + std::to_string(flips) +
                " i8 flips, " + std::to_string(violations) + " bound violations" + fmt("; %.1f s", secs)};
}

Outcome c10_bfat() {
    const auto t0 = Clock::now();
    // Fixed protocol: 10 random flips over the whole model, any bit, 10 plans
    // per model, identical plan seeds for both models of a pair.
    const FlipProtocol proto{10, 10, 4242};
    std::vector<double> rr_bfat, rr_plain, clean_bfat, clean_plain;
    for (std::uint64_t s : seed_range(0, 20)) {
        ModelConfig c;
        c.seed = s;
        TrainConfig tc;
        tc.epochs = 15;
        tc.seed = s;
        BFATConfig bc;
        bc.seed = s;
        Model plain = init_model(c), hard = init_model(c);
        train(plain, data().train, tc);
        train_bitflip_aware(hard, data().train, tc, bc);
        const double cp = accuracy(plain, data().test), cb = accuracy(hard, data().test);
        clean_plain.push_back(cp);
        clean_bfat.push_back(cb);
        rr_plain.push_back(protocol_flip_accuracy(plain, data().test, proto) / cp);
        rr_bfat.push_back(protocol_flip_accuracy(hard, data().test, proto) / cb);
    }
    const PairedTest t = paired_t_test(rr_bfat, rr_plain);
    const double secs = seconds_since(t0);
    return {t.mean_diff > 0.0,
            fmt("mean rr BFAT %.4f", summarize(rr_bfat).mean) + fmt(" vs plain %.4f", summarize(rr_plain).mean) +
                fmt(" (clean %.4f", summarize(clean_bfat).mean) + fmt(" vs %.4f); ", summarize(clean_plain).mean) +
                test_summary(t) + fmt("; %.1f s", secs)};
}

Outcome c11_identities() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "hammerlab_acceptance";
    fs::create_directories(dir);
    const Model& m = reference_model();
    std::size_t bad = 0;

    // Attack and sweep reports through the library, then through the CLI verifier.
    const auto sweep = bitcount_sweep(m, data().test, {5, 10, 20, 50, 100}, uniform_count_generator(), TriggerSpec{},
                                      seed_range(0, 5));
    const auto attack = run_attack(m, data().test, random_uniform_plan(m.params, {}, 10, 3), TriggerSpec{});
    bad += attack.delta_acc == attack.clean_acc - attack.flip_acc ? 0 : 1;
    bad += attack.rr && *attack.rr == attack.flip_acc / attack.clean_acc ? 0 : 1;
    const std::vector<std::pair<std::string, Json>> docs = {{"sweep.json", sweep_report(sweep, Json::object())},
                                                            {"attack.json", attack_report(attack, Json::object())}};
    auto verify = [](const fs::path& p) {
        std::ostringstream out, err;
        const std::string arg = p.string();
        const char* argv[] = {"hammerlab", "verify", "--report", arg.c_str()};
        return run_cli(4, argv, out, err);
    };
    for (const auto& [name, doc] : docs) {
        io::write_text(dir / name, render_report(doc));
        bad += verify(dir / name) == 0 ? 0 : 1;
    }
    // One edited rr digit must be caught.
    std::string text = render_report(docs[1].second);
    const auto key = text.find("\"rr\": ");
    const auto dot = key == std::string::npos ? key : text.find('.', key);
    if (dot == std::string::npos) {
        ++bad;
    } else {
        char& d = text[dot + 1];
        d = d == '9' ? '8' : static_cast<char>(d + 1);
        io::write_text(dir / "tampered.json", text);
        bad += verify(dir / "tampered.json") != 0 ? 0 : 1;
    }
    // l_nas formula.
    const NasWeights w{1.0, 1.0, 0.0, 1.0};
    const auto s = nas_score(0.90, 0.90 * 0.95, w, 0.0);
    bad += std::abs(l_nas(1.0, 1.0, 0.0, 0.90, 0.95, 0.0) - (-1.85)) < 1e-12 ? 0 : 1;
    bad += s.l_nas == -s.acc_clean - s.rr ? 0 : 1;
    const NasWeights w2{0.3, 0.5, 0.2, 1000.0};
    const auto s2 = nas_score(0.8, 0.6, w2, 0.25);
    bad += s2.l_nas == -0.3 * 0.8 - 0.5 * (0.6 / 0.8) + 0.2 * 0.25 ? 0 : 1;
    fs::remove_all(dir);
    return {bad == 0, "sweep + attack reports verified, tampered rr rejected, l_nas(1,1,0; 0.90, 0.95) = " +
                          fmt("%.2f", l_nas(1.0, 1.0, 0.0, 0.90, 0.95, 0.0)) + "; " + std::to_string(bad) +
                          " failures"};
}

Outcome c12_persistence() {
    namespace fs = std::filesystem;
    Model m = reference_model();
    // Exponent flips that produce +-Inf and NaN, plus sign flips; then raw NaN payloads.
    FlipPlan p;
    const auto& head = m.params.at("head_fc").f32();
    for (std::size_t i = 0; i < head.size(); i += 3) {
        p.flips.push_back({"head_fc", i, 30});
    }
    p.flips.push_back({"norm.gamma", 0, 30});  // 1.0 -> +Inf
    p.flips.push_back({"norm.gamma", 1, 31});
    apply_plan(m, p);
    auto qkv = m.params.at("block0_attn_qkv").f32();
    qkv[0] = from_bits(0x7FC00001u);  // quiet NaN with payload
    qkv[1] = from_bits(0xFF800000u);  // -Inf
    qkv[2] = from_bits(0x7F800123u);  // signalling NaN pattern
    qkv[3] = from_bits(0x00000001u);  // smallest subnormal
    std::size_t nonfinite = 0;
    for (const auto& e : m.params) {
        for (float v : e.tensor.f32()) {
            nonfinite += std::isfinite(v) ? 0 : 1;
        }
    }
    const fs::path f = fs::temp_directory_path() / "hammerlab_acceptance_flipped.mhck";
    save_checkpoint(m, f);
    const Model back = load_checkpoint(f);
    const QuantizedModel q = quantize_model(reference_model());
    QuantizedModel qf = q;
    apply_plan(qf.params, random_uniform_plan(qf.params, {}, 50, 9));
    save_checkpoint(qf, f);
    const QuantizedModel qback = load_quantized_checkpoint(f);
    fs::remove(f);
    const bool ok = bytes_equal(back.params, m.params) && back.config == m.config && bytes_equal(qback.params, qf.params);
    return {ok && nonfinite > 0, std::to_string(nonfinite) + " non-finite weights; f32 and i8 checkpoints " +
                                     (ok ? "byte-identical" : "DIFFER") + " after reload"};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"C1  IEEE-754 flip suite", c1_ieee754},
        {"C2  plan atomicity and involution", c2_plan_atomicity},
        {"C3  DRAM adjacency and feasibility partition", c3_dram_adjacency},
        {"C4  trigger contract", c4_trigger},
        {"C5  toy pipeline end-to-end", c5_pipeline},
        {"C6  field-sensitivity trend", c6_field_sensitivity},
        {"C7  layer-sweep trend", c7_layer_sweep},
        {"C8  Trojan feasibility", c8_trojan},
        {"C9  quantization resilience trend", c9_quantization},
        {"C10 bit-flip-aware training trend", c10_bfat},
        {"C11 metric identities", c11_identities},
        {"C12 persistence fidelity", c12_persistence},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
