// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <vector>

#include "hammerlab/bitflip.hpp"
#include "hammerlab/dataset.hpp"
#include "hammerlab/graph.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/rng.hpp"

namespace hammerlab {

/// Bit-flip-aware training: before every optimisation step each parameter
/// flips with probability flip_prob at a bit drawn uniformly from bit_set.
struct BFATConfig {
    double flip_prob = 1e-4;
    std::vector<int> bit_set = all_bits();
    bool persistent = false;  // keep the flips instead of reverting them after the step
    std::uint64_t seed = 0;
    std::vector<std::string> layers;  // tensors eligible for flips; empty means all

    void validate() const {
        if (!(flip_prob >= 0.0 && flip_prob <= 1.0)) {
            throw config_error("flip_prob must lie in [0, 1]");
        }
        if (bit_set.empty()) {
            throw config_error("BFAT bit_set must not be empty");
        }
        for (int b : bit_set) {
            check_bit_position(b);
        }
    }
};

struct TrainConfig {
    std::size_t epochs = 30;
    double lr = 0.05;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    double clip_norm = 5.0;  // global gradient-norm clip, <= 0 disables
    std::optional<BFATConfig> bfat;
};

struct TrainHistory {
    std::vector<double> train_accuracy;  // running accuracy of each epoch's forward passes
    std::vector<double> mean_loss;
    std::size_t skipped_steps = 0;  // steps whose gradient was non-finite
};

/// Transient flips injected at each step, in step order.
using FlipLedger = std::vector<FlipPlan>;

template <typename T>
struct BatchGradient {
    std::vector<std::vector<T>> grads;
    T loss = 0;
    std::size_t correct = 0;
};

template <typename T>
std::vector<std::vector<T>> zero_grads(const ParamRegistry& reg) {
    std::vector<std::vector<T>> g;
    g.reserve(reg.size());
    for (const auto& e : reg) {
        g.emplace_back(e.tensor.size(), T(0));
    }
    return g;
}

/// Mean cross-entropy and its gradient over the given samples.
template <typename T, typename W>
BatchGradient<T> batch_gradient(const ModelConfig& config, const ParamViews<W>& views, const Dataset& data,
                                std::span<const std::size_t> indices) {
    const auto slots = graph::make_slots(config);
    BatchGradient<T> out;
    out.grads.reserve(views.size());
    for (const auto& v : views) {
        out.grads.emplace_back(v.size(), T(0));
    }
    const T inv = T(1) / static_cast<T>(indices.size());
    std::vector<T> dlogits(config.num_classes);
    for (std::size_t i : indices) {
        graph::Tape<T> tape;
        const auto logits = graph::logits<T, W>(config, slots, views, data.pixels_of(i), &tape);
        if (argmax<T>(logits) == static_cast<int>(data.labels[i])) {
            ++out.correct;
        }
        out.loss += graph::cross_entropy<T>(logits, data.labels[i], dlogits) * inv;
        for (T& d : dlogits) {
            d *= inv;
        }
        graph::backward<T, W>(config, slots, views, tape, dlogits, out.grads);
    }
    return out;
}

/// Per-parameter Bernoulli(flip_prob) flips over the whole registry, sampled
/// by geometric skipping.
inline FlipPlan sample_bfat_flips(const ParamRegistry& reg, const BFATConfig& cfg, std::uint64_t step_seed) {
    FlipPlan plan;
    plan.seed = step_seed;
    if (cfg.flip_prob <= 0.0) {
        return plan;
    }
    Rng rng(step_seed);
    const double log_q = std::log1p(-cfg.flip_prob);
    auto gap = [&]() -> std::size_t {
        if (cfg.flip_prob >= 1.0) {
            return 0;
        }
        const double g = std::floor(std::log1p(-rng.uniform()) / log_q);
        return g > 1e18 ? static_cast<std::size_t>(1e18) : static_cast<std::size_t>(g);
    };
    std::size_t base = 0;
    std::size_t next = gap();
    for (const auto& e : reg) {
        if (!cfg.layers.empty() && std::find(cfg.layers.begin(), cfg.layers.end(), e.name) == cfg.layers.end()) {
            continue;
        }
        const std::size_t n = e.tensor.size();
        while (next < base + n) {
            const int bit = cfg.bit_set[rng.below(cfg.bit_set.size())];
            plan.flips.push_back({e.name, next - base, bit});
            next += 1 + gap();
        }
        base += n;
    }
    return plan;
}

/// Plain mini-batch SGD with global-norm clipping. With cfg.bfat set, each
/// step's gradient is taken at the flipped weights; unless persistent, the
/// flips are undone before the update lands, so no flip artefact survives.
/// Deterministic given the seeds.
inline TrainHistory train(Model& model, const Dataset& data, const TrainConfig& cfg, FlipLedger* ledger = nullptr) {
    if (data.empty()) {
        throw data_error("cannot train on an empty dataset");
    }
    if (data.image_elements() != model.config.input_dim()) {
        throw dimension_error("dataset images do not match the model input");
    }
    if (cfg.bfat) {
        cfg.bfat->validate();
    }
    const std::size_t bs = std::max<std::size_t>(1, cfg.batch_size);
    TrainHistory hist;
    std::vector<std::size_t> order(data.size());
    std::size_t step = 0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        Rng rng(derive_seed(cfg.seed, epoch));
        rng.shuffle(std::span(order));
        std::size_t correct = 0;
        double loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += bs, ++step) {
            const auto batch = std::span<const std::size_t>(order).subspan(start, std::min(bs, order.size() - start));
            FlipPlan flips;
            if (cfg.bfat) {
                flips = sample_bfat_flips(model.params, *cfg.bfat, derive_seed(cfg.bfat->seed, step));
                apply_plan(model, flips);
                if (ledger) {
                    ledger->push_back(flips);
                }
            }
            auto g = batch_gradient<float, float>(model.config, views_of(model.params), data, batch);
            if (!flips.empty() && !cfg.bfat->persistent) {
                apply_plan(model, flips);
            }
            correct += g.correct;
            loss += static_cast<double>(g.loss) * static_cast<double>(batch.size());

            double norm2 = 0.0;
            for (const auto& gv : g.grads) {
                for (float v : gv) {
                    norm2 += static_cast<double>(v) * v;
                }
            }
            const double norm = std::sqrt(norm2);
            if (!std::isfinite(norm)) {
                ++hist.skipped_steps;
                continue;
            }
            double factor = cfg.lr;
            if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
                factor *= cfg.clip_norm / norm;
            }
            const auto f = static_cast<float>(factor);
            if (f == 0.0f) {
                continue;
            }
            for (std::size_t p = 0; p < model.params.size(); ++p) {
                auto w = model.params[p].f32();
                for (std::size_t j = 0; j < w.size(); ++j) {
                    w[j] -= f * g.grads[p][j];
                }
            }
        }
        hist.train_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(data.size()));
        hist.mean_loss.push_back(loss / static_cast<double>(data.size()));
    }
    return hist;
}

}  // namespace hammerlab
