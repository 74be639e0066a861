// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hammerlab/bitflip.hpp"
#include "hammerlab/dataset.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/graph.hpp"
#include "hammerlab/metrics.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/rng.hpp"
#include "hammerlab/stats.hpp"
#include "hammerlab/trigger.hpp"

namespace hammerlab {

enum class SweepAxis : std::uint8_t { layer, n_flips, architecture, dataset, quantization };

inline std::string_view to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::layer: return "layer";
        case SweepAxis::n_flips: return "nflips";
        case SweepAxis::architecture: return "arch";
        case SweepAxis::dataset: return "dataset";
        case SweepAxis::quantization: return "quant";
    }
    return "?";
}

inline SweepAxis parse_sweep_axis(std::string_view s) {
    if (s == "layer") return SweepAxis::layer;
    if (s == "nflips") return SweepAxis::n_flips;
    if (s == "arch") return SweepAxis::architecture;
    if (s == "dataset") return SweepAxis::dataset;
    if (s == "quant") return SweepAxis::quantization;
    throw config_error("unknown sweep axis '" + std::string(s) + "'");
}

/// All trials at one axis value, with mean/min/max of each metric.
struct SweepPoint {
    std::string label;
    std::vector<EvalReport> trials;
    Summary clean_acc, flip_acc, delta_acc, trigger_metric;
    std::optional<Summary> rr;  // over the trials where rr is defined
};

inline SweepPoint make_point(std::string label, std::vector<EvalReport> trials) {
    if (trials.empty()) {
        throw domain_error("sweep point '" + label + "' has no trials");
    }
    std::vector<double> c, f, d, t, r;
    for (const auto& e : trials) {
        c.push_back(e.clean_acc);
        f.push_back(e.flip_acc);
        d.push_back(e.delta_acc);
        t.push_back(e.trigger_metric);
        if (e.rr) {
            r.push_back(*e.rr);
        }
    }
    SweepPoint p{std::move(label), std::move(trials), summarize(c), summarize(f), summarize(d), summarize(t),
                 std::nullopt};
    if (!r.empty()) {
        p.rr = summarize(r);
    }
    return p;
}

struct SweepResult {
    SweepAxis axis = SweepAxis::layer;
    std::vector<SweepPoint> points;
};

using LayerPlanGenerator = std::function<FlipPlan(const ParamRegistry&, const std::string& layer, std::uint64_t seed)>;
using CountPlanGenerator = std::function<FlipPlan(const ParamRegistry&, std::size_t count, std::uint64_t seed)>;

/// `count` distinct flat indices in [0, range), in draw order.
inline std::vector<std::size_t> draw_indices(std::size_t range, std::size_t count, std::uint64_t seed) {
    if (count > range) {
        throw domain_error("cannot draw " + std::to_string(count) + " distinct indices below " + std::to_string(range));
    }
    Rng rng(seed);
    std::vector<std::size_t> out;
    std::set<std::size_t> seen;
    while (out.size() < count) {
        const std::size_t i = rng.below(range);
        if (seen.insert(i).second) {
            out.push_back(i);
        }
    }
    return out;
}

/// The same (index, bit) pattern for every layer of a sweep: `num_indices`
/// flat indices drawn per seed below the smallest swept layer, crossed with
/// `bits`. With the defaults this is a 20-flip plan.
struct SharedTemplate {
    std::size_t num_indices = 5;
    std::vector<int> bits = {7, 20, 22, 30};
};

inline LayerPlanGenerator shared_template_generator(const ParamRegistry& reg, const std::vector<std::string>& layers,
                                                    SharedTemplate tmpl = {}) {
    std::size_t range = 0;
    for (const auto& l : layers) {
        const std::size_t n = reg.at(l).size();
        range = range == 0 ? n : std::min(range, n);
    }
    return [range, tmpl](const ParamRegistry&, const std::string& layer, std::uint64_t seed) {
        const auto idx = draw_indices(range, tmpl.num_indices, seed);
        FlipPlan p = explicit_plan(layer, idx, tmpl.bits);
        p.seed = seed;
        return p;
    };
}

/// run_attack for each seed, collected into one point.
template <typename M, typename PlanFn>
SweepPoint attack_point(std::string label, const M& model, const Dataset& test, const TriggerSpec& trigger,
                        const std::vector<std::uint64_t>& seeds, PlanFn&& plan_for) {
    std::vector<EvalReport> trials;
    trials.reserve(seeds.size());
    for (std::uint64_t s : seeds) {
        trials.push_back(run_attack(model, test, plan_for(s), trigger, s));
    }
    return make_point(std::move(label), std::move(trials));
}

inline void check_seeds(const std::vector<std::uint64_t>& seeds) {
    if (seeds.empty()) {
        throw config_error("a sweep needs at least one seed");
    }
}

template <typename M>
SweepResult layer_sweep(const M& model, const Dataset& test, const std::vector<std::string>& layers,
                        const LayerPlanGenerator& gen, const TriggerSpec& trigger,
                        const std::vector<std::uint64_t>& seeds) {
    check_seeds(seeds);
    for (const auto& l : layers) {
        (void)model.params.at(l);
    }
    SweepResult r{SweepAxis::layer, {}};
    for (const auto& l : layers) {
        r.points.push_back(attack_point(l, model, test, trigger, seeds,
                                        [&](std::uint64_t s) { return gen(model.params, l, s); }));
    }
    return r;
}

/// One point per count, in the given order. Results are never reordered or
/// smoothed, so non-monotone damage shows up as measured.
template <typename M>
SweepResult bitcount_sweep(const M& model, const Dataset& test, const std::vector<std::size_t>& counts,
                           const CountPlanGenerator& gen, const TriggerSpec& trigger,
                           const std::vector<std::uint64_t>& seeds) {
    check_seeds(seeds);
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] <= counts[i - 1]) {
            throw precondition_error("bit counts must be strictly ascending");
        }
    }
    SweepResult r{SweepAxis::n_flips, {}};
    for (std::size_t c : counts) {
        r.points.push_back(attack_point(std::to_string(c), model, test, trigger, seeds,
                                        [&](std::uint64_t s) { return gen(model.params, c, s); }));
    }
    return r;
}

/// Random flips over the whole model (or `layer`), bits from `bits` or all.
inline CountPlanGenerator uniform_count_generator(std::string layer = {}, std::vector<int> bits = {}) {
    return [layer = std::move(layer), bits = std::move(bits)](const ParamRegistry& reg, std::size_t count,
                                                              std::uint64_t seed) {
        std::vector<std::string> layers;
        if (!layer.empty()) {
            layers.push_back(layer);
        }
        return random_uniform_plan(reg, layers, count, seed, bits);
    };
}

/// A trained model and its test split, one per architecture or dataset.
struct Scenario {
    std::string label;
    Model model;
    Dataset test;
};

inline SweepResult scenario_sweep(SweepAxis axis, const std::vector<Scenario>& scenarios, std::size_t count,
                                  const CountPlanGenerator& gen, const TriggerSpec& trigger,
                                  const std::vector<std::uint64_t>& seeds) {
    check_seeds(seeds);
    SweepResult r{axis, {}};
    for (const auto& sc : scenarios) {
        r.points.push_back(attack_point(sc.label, sc.model, sc.test, trigger, seeds,
                                        [&](std::uint64_t s) { return gen(sc.model.params, count, s); }));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Greedy Trojan plan search

/// Sign and exponent bits of every weight in `layer`, index-major.
inline std::vector<BitFlipSpec> sign_exponent_pool(const ParamRegistry& reg, const std::string& layer = "head_fc") {
    std::vector<int> bits = field_bits(BitField::exponent);
    bits.push_back(31);
    std::vector<BitFlipSpec> pool;
    const std::size_t n = reg.at(layer).size();
    for (std::size_t i = 0; i < n; ++i) {
        for (int b : bits) {
            pool.push_back({layer, i, b});
        }
    }
    return pool;
}

struct GreedyStep {
    BitFlipSpec flip;
    double asr = 0.0;
    double flip_acc = 0.0;
    double delta_acc = 0.0;
    double score = 0.0;
};

struct GreedyResult {
    FlipPlan plan;
    double clean_acc = 0.0;
    double base_asr = 0.0;
    double base_score = 0.0;
    std::vector<GreedyStep> steps;  // steps[k] describes the plan prefix of length k + 1
};

namespace detail {

/// (flipped accuracy, ASR) of the current weights. Candidates confined to
/// head_fc are scored from cached pooled features, since nothing upstream
/// of the head changes.
class TrojanScorer {
public:
    TrojanScorer(const Model& model, const Dataset& test, const PoisonedDataset& poisoned, bool head_only)
        : work_(model), test_(test), poisoned_(poisoned), head_only_(head_only) {
        if (head_only_) {
            const Predictor p(model);
            for (std::size_t i = 0; i < test.size(); ++i) {
                clean_feats_.push_back(p.features(test.pixels_of(i)));
            }
            for (std::size_t i = 0; i < poisoned.size(); ++i) {
                trig_feats_.push_back(p.features(poisoned.data.pixels_of(i)));
            }
        }
    }

    Model& model() { return work_; }

    std::pair<double, double> evaluate() const {
        if (!head_only_) {
            return {accuracy(work_, test_), asr(work_, poisoned_)};
        }
        const Predictor p(work_);
        auto rate = [&p](const std::vector<std::vector<float>>& feats, const Dataset& d) {
            std::size_t ok = 0;
            for (std::size_t i = 0; i < feats.size(); ++i) {
                const auto l = p.head(feats[i]);
                ok += argmax<float>(l) == static_cast<int>(d.labels[i]) ? 1 : 0;
            }
            return static_cast<double>(ok) / static_cast<double>(feats.size());
        };
        return {rate(clean_feats_, test_), rate(trig_feats_, poisoned_.data)};
    }

private:
    Model work_;
    const Dataset& test_;
    const PoisonedDataset& poisoned_;
    bool head_only_;
    std::vector<std::vector<float>> clean_feats_, trig_feats_;
};

}  // namespace detail

/// Greedy forward selection maximizing ASR - lambda * delta_acc. Each round
/// scores every unused candidate on top of the current plan and keeps the
/// best (first in pool order on ties) if it strictly improves the score.
inline GreedyResult greedy_plan_search(const Model& model, const Dataset& test, const TriggerSpec& trigger,
                                       std::size_t budget, const std::vector<BitFlipSpec>& pool,
                                       double lambda = 1.0) {
    if (budget == 0) {
        throw precondition_error("greedy search budget must be at least 1");
    }
    if (pool.empty()) {
        throw domain_error("greedy search needs a non-empty candidate pool");
    }
    validate_plan(model.params, FlipPlan{pool, std::nullopt});
    const bool head_only =
        std::all_of(pool.begin(), pool.end(), [](const BitFlipSpec& f) { return f.layer == "head_fc"; });
    const PoisonedDataset poisoned = poison(test, trigger);
    if (poisoned.empty()) {
        throw data_error("poisoned split is empty");
    }
    detail::TrojanScorer scorer(model, test, poisoned, head_only);

    GreedyResult r;
    const auto [clean, base_asr] = scorer.evaluate();
    r.clean_acc = clean;
    r.base_asr = base_asr;
    r.base_score = base_asr;
    double current = r.base_score;
    std::vector<bool> used(pool.size(), false);
    while (r.steps.size() < budget) {
        std::optional<std::size_t> best;
        GreedyStep best_step;
        for (std::size_t c = 0; c < pool.size(); ++c) {
            if (used[c]) {
                continue;
            }
            const FlipPlan one{{pool[c]}, std::nullopt};
            apply_plan(scorer.model(), one);
            const auto [acc, a] = scorer.evaluate();
            apply_plan(scorer.model(), one);
            const double delta = clean - acc;
            const double score = a - lambda * delta;
            if (!best || score > best_step.score) {
                best = c;
                best_step = {pool[c], a, acc, delta, score};
            }
        }
        if (!best || !(best_step.score > current)) {
            break;
        }
        used[*best] = true;
        apply_plan(scorer.model(), FlipPlan{{pool[*best]}, std::nullopt});
        r.plan.flips.push_back(pool[*best]);
        r.steps.push_back(best_step);
        current = best_step.score;
    }
    return r;
}

struct FrontierPoint {
    std::size_t budget = 0;
    std::size_t flips = 0;  // plan length actually used (greedy may stop early)
    double asr = 0.0;
    double delta_acc = 0.0;
};

/// (ASR, delta_acc) of the greedy plan truncated to each budget 1..max_budget.
inline std::vector<FrontierPoint> budget_points(const GreedyResult& r, std::size_t max_budget) {
    std::vector<FrontierPoint> out;
    for (std::size_t b = 1; b <= max_budget; ++b) {
        const std::size_t k = std::min(b, r.steps.size());
        if (k == 0) {
            out.push_back({b, 0, r.base_asr, 0.0});
        } else {
            out.push_back({b, k, r.steps[k - 1].asr, r.steps[k - 1].delta_acc});
        }
    }
    return out;
}

/// Points not dominated by another (higher-or-equal ASR and lower-or-equal
/// delta_acc, one strictly). Among points with equal metrics only the one with
/// the fewest flips, then the smallest budget, then the earliest survives.
/// Input order is kept.
inline std::vector<FrontierPoint> pareto_frontier(const std::vector<FrontierPoint>& pts) {
    std::vector<FrontierPoint> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        bool dominated = false;
        for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
            const auto& q = pts[j];
            if (q.asr >= p.asr && q.delta_acc <= p.delta_acc && (q.asr > p.asr || q.delta_acc < p.delta_acc)) {
                dominated = true;
            } else if (j != i && q.asr == p.asr && q.delta_acc == p.delta_acc) {
                dominated = std::tie(q.flips, q.budget, j) < std::tie(p.flips, p.budget, i);
            }
        }
        if (!dominated) {
            out.push_back(p);
        }
    }
    return out;
}

}  // namespace hammerlab
