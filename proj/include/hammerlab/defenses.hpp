// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hammerlab/bitflip.hpp"
#include "hammerlab/campaign.hpp"
#include "hammerlab/dataset.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/metrics.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/tensor.hpp"
#include "hammerlab/train.hpp"

namespace hammerlab {

inline TrainHistory train_bitflip_aware(Model& model, const Dataset& data, TrainConfig cfg, const BFATConfig& bfat,
                                        FlipLedger* ledger = nullptr) {
    cfg.bfat = bfat;
    return train(model, data, cfg, ledger);
}

/// Every tensor stored as per-tensor affine i8. Evaluation dequantizes the
/// weights before each forward pass.
struct QuantizedModel {
    ModelConfig config;
    ParamRegistry params;
};

inline QuantizedModel quantize_model(const Model& m) {
    QuantizedModel q{m.config, {}};
    for (const auto& e : m.params) {
        q.params.add(e.name, quantize(e.tensor));
    }
    return q;
}

inline Model dequantize_model(const QuantizedModel& q) {
    Model m{q.config, {}};
    for (const auto& e : q.params) {
        m.params.add(e.name, e.tensor.dtype() == DType::i8 ? dequantize(e.tensor) : e.tensor);
    }
    return m;
}

inline double accuracy(const QuantizedModel& q, const Dataset& data) { return accuracy(dequantize_model(q), data); }

/// Same flips-per-parameter rate on the f32 model and its i8 twin, paired by
/// seed. Points are labelled "f32" and "int8".
inline SweepResult quantization_sweep(const Model& model, const Dataset& test, double rate,
                                      const TriggerSpec& trigger, const std::vector<std::uint64_t>& seeds) {
    check_seeds(seeds);
    const QuantizedModel q = quantize_model(model);
    SweepResult r{SweepAxis::quantization, {}};
    r.points.push_back(attack_point("f32", model, test, trigger, seeds,
                                    [&](std::uint64_t s) { return uniform_rate_plan(model.params, rate, s); }));
    r.points.push_back(attack_point("int8", q, test, trigger, seeds,
                                    [&](std::uint64_t s) { return uniform_rate_plan(q.params, rate, s); }));
    return r;
}

// ---------------------------------------------------------------------------
// Architecture scoring

struct NasWeights {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 0.0;
    double budget = 100000.0;  // parameter count that maps to C_eff = 1

    void validate() const {
        if (alpha < 0.0 || beta < 0.0 || gamma < 0.0) {
            throw config_error("NAS weights must be non-negative");
        }
        if (alpha == 0.0 && beta == 0.0 && gamma == 0.0) {
            throw config_error("NAS weights must not all be zero");
        }
        if (!(budget > 0.0)) {
            throw config_error("NAS parameter budget must be positive");
        }
    }

    double c_eff(std::size_t params) const {
        const double c = static_cast<double>(params) / budget;
        if (c > 1.0) {
            throw config_error("candidate with " + std::to_string(params) + " parameters exceeds the NAS budget");
        }
        return c;
    }
};

struct NasCandidateScore {
    ModelConfig config;
    double acc_clean = 0.0;
    double acc_flip = 0.0;
    double rr = 0.0;
    double c_eff = 0.0;
    double l_nas = 0.0;  // lower is better
};

inline double l_nas(double alpha, double beta, double gamma, double acc_clean, double rr, double c_eff) {
    return -alpha * acc_clean - beta * rr + gamma * c_eff;
}

inline NasCandidateScore nas_score(double acc_clean, double acc_flip, const NasWeights& w, double c_eff,
                                   const ModelConfig& config = {}) {
    w.validate();
    if (!(acc_clean > 0.0)) {
        throw domain_error("NAS score needs a positive clean accuracy");
    }
    const double rr = acc_flip / acc_clean;
    return {config, acc_clean, acc_flip, rr, c_eff, l_nas(w.alpha, w.beta, w.gamma, acc_clean, rr, c_eff)};
}

/// Flips used to measure acc_flip: `trials` random whole-model plans of
/// `count` flips each; acc_flip is their mean accuracy.
struct FlipProtocol {
    std::size_t count = 10;
    std::size_t trials = 5;
    std::uint64_t seed = 0;
};

inline double protocol_flip_accuracy(const Model& model, const Dataset& test, const FlipProtocol& proto) {
    if (proto.trials == 0) {
        throw config_error("flip protocol needs at least one trial");
    }
    double sum = 0.0;
    for (std::size_t t = 0; t < proto.trials; ++t) {
        Model work = model;
        apply_plan(work, random_uniform_plan(work.params, {}, proto.count, derive_seed(proto.seed, t)));
        sum += accuracy(work, test);
    }
    return sum / static_cast<double>(proto.trials);
}

inline NasCandidateScore evaluate_candidate(const ModelConfig& config, const Dataset& train_set, const Dataset& test,
                                            const NasWeights& w, const TrainConfig& tc, const FlipProtocol& proto) {
    Model m = init_model(config);
    train(m, train_set, tc);
    const double clean = accuracy(m, test);
    const double flipped = protocol_flip_accuracy(m, test, proto);
    return nas_score(clean, flipped, w, w.c_eff(m.parameter_count()), config);
}

/// Trains and scores every candidate, then sorts ascending by l_nas (stable).
inline std::vector<NasCandidateScore> nas_search(const std::vector<ModelConfig>& candidates, const Dataset& train_set,
                                                 const Dataset& test, const NasWeights& w, const TrainConfig& tc,
                                                 const FlipProtocol& proto) {
    if (candidates.size() < 2) {
        throw precondition_error("NAS search needs at least two candidates");
    }
    w.validate();
    std::vector<NasCandidateScore> out;
    for (const auto& c : candidates) {
        out.push_back(evaluate_candidate(c, train_set, test, w, tc, proto));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const NasCandidateScore& a, const NasCandidateScore& b) { return a.l_nas < b.l_nas; });
    return out;
}

}  // namespace hammerlab
