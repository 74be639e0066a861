// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "hammerlab/bitflip.hpp"
#include "hammerlab/dataset.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/graph.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/trigger.hpp"

namespace hammerlab {

/// Fraction of samples whose argmax equals the label.
inline double accuracy(const Model& model, const Dataset& data) {
    if (data.empty()) {
        throw data_error("accuracy of an empty dataset is undefined");
    }
    const Predictor p(model);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        ok += p.predict(data.pixels_of(i)) == static_cast<int>(data.labels[i]) ? 1 : 0;
    }
    return static_cast<double>(ok) / static_cast<double>(data.size());
}

/// Attack success rate: share of poisoned samples classified as the target.
template <typename M>
double asr(const M& model, const PoisonedDataset& poisoned) {
    if (poisoned.empty()) {
        throw data_error("ASR of an empty poisoned set is undefined");
    }
    return accuracy(model, poisoned.data);
}

struct MetricPack {
    double delta_acc = 0.0;
    std::optional<double> rr;  // absent when clean accuracy is 0
};

inline MetricPack metric_pack(double clean_acc, double flip_acc) {
    MetricPack m{clean_acc - flip_acc, std::nullopt};
    if (clean_acc > 0.0) {
        m.rr = flip_acc / clean_acc;
    }
    return m;
}

struct EvalReport {
    double clean_acc = 0.0;
    double flip_acc = 0.0;
    double trigger_metric = 0.0;  // ASR of the flipped model on the poisoned split
    double delta_acc = 0.0;
    std::optional<double> rr;
    std::size_t n_flips = 0;
    std::uint64_t seed = 0;
};

inline EvalReport make_report(double clean_acc, double flip_acc, double trigger_metric, std::size_t n_flips,
                              std::uint64_t seed) {
    const MetricPack m = metric_pack(clean_acc, flip_acc);
    return {clean_acc, flip_acc, trigger_metric, m.delta_acc, m.rr, n_flips, seed};
}

/// The attack workflow on a private copy: clean accuracy, flip, flipped
/// accuracy, trigger ASR. The caller's model is never touched.
template <typename M>
EvalReport run_attack(const M& model, const Dataset& test, const FlipPlan& plan, const TriggerSpec& trigger,
                      std::uint64_t seed = 0) {
    const double clean = accuracy(model, test);
    M work = model;
    apply_plan(work.params, plan);
    const double flipped = accuracy(work, test);
    const PoisonedDataset pd = poison(test, trigger);
    const double trig = pd.empty() ? 0.0 : asr(work, pd);
    return make_report(clean, flipped, trig, plan.size(), seed);
}

/// Bit-flip tolerance search.
struct BftConfig {
    double threshold = 0.9;
    std::vector<double> flip_rates;  // flips per parameter, strictly ascending
    std::size_t trials_per_rate = 5;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(threshold > 0.0 && threshold < 1.0)) {
            throw config_error("BFT threshold must lie in (0, 1)");
        }
        if (flip_rates.empty()) {
            throw config_error("BFT needs at least one flip rate");
        }
        for (std::size_t i = 0; i < flip_rates.size(); ++i) {
            if (!(flip_rates[i] >= 0.0) || (i > 0 && flip_rates[i] <= flip_rates[i - 1])) {
                throw config_error("BFT flip rates must be non-negative and strictly ascending");
            }
        }
        if (trials_per_rate == 0) {
            throw config_error("BFT needs at least one trial per rate");
        }
    }
};

using RatePlanGenerator = std::function<FlipPlan(const ParamRegistry&, double rate, std::uint64_t seed)>;

/// round(rate x parameter count) flips uniformly over the whole model.
inline FlipPlan uniform_rate_plan(const ParamRegistry& reg, double rate, std::uint64_t seed) {
    const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(reg.total_elements())));
    return random_uniform_plan(reg, {}, count, seed);
}

struct BftResult {
    double rate = 0.0;  // 0 when even the smallest rate falls below the threshold
    double baseline = 0.0;
    std::vector<double> mean_accuracy;  // one per configured rate
};

/// Largest configured rate whose mean flipped accuracy stays at or above
/// the threshold.
template <typename M>
BftResult bft(const M& model, const Dataset& data, const BftConfig& cfg, const RatePlanGenerator& gen = uniform_rate_plan) {
    cfg.validate();
    BftResult r;
    r.baseline = accuracy(model, data);
    if (r.baseline <= cfg.threshold) {
        throw precondition_error("baseline accuracy does not exceed the BFT threshold");
    }
    for (std::size_t k = 0; k < cfg.flip_rates.size(); ++k) {
        double sum = 0.0;
        for (std::size_t t = 0; t < cfg.trials_per_rate; ++t) {
            M work = model;
            apply_plan(work.params, gen(work.params, cfg.flip_rates[k], derive_seed(cfg.seed, k * 1000003 + t)));
            sum += accuracy(work, data);
        }
        const double mean = sum / static_cast<double>(cfg.trials_per_rate);
        r.mean_accuracy.push_back(mean);
        if (mean >= cfg.threshold) {
            r.rate = cfg.flip_rates[k];
        }
    }
    return r;
}

}  // namespace hammerlab
