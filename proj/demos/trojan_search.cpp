// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

// Greedy search for a small head-layer flip set that routes triggered
// inputs to class 0, traced for several accuracy penalties.

#include <algorithm>
#include <cstdio>

#include "hammerlab/hammerlab.hpp"

using namespace hammerlab;

int main() {
    auto [train_set, test_set] = split_dataset(synth_dataset(SynthKind::blobs, 400, 1), 0.8, 1);
    Model model = init_model(ModelConfig{});
    TrainConfig tc;
    tc.epochs = 15;
    train(model, train_set, tc);

    const TriggerSpec trigger;  // 4x4 white square, top-left, target 0
    const auto pool = sign_exponent_pool(model.params, "head_fc");
    std::vector<FrontierPoint> points;
    for (double lambda : {0.0, 0.5, 1.0, 2.0}) {
        const GreedyResult g = greedy_plan_search(model, test_set, trigger, 10, pool, lambda);
        std::printf("lambda %.1f: %zu flips, ASR %.3f -> %.3f\n", lambda, g.plan.size(), g.base_asr,
                    g.steps.empty() ? g.base_asr : g.steps.back().asr);
        const auto pts = budget_points(g, 10);
        points.insert(points.end(), pts.begin(), pts.end());
    }
    std::printf("frontier (flips, ASR, delta_acc):\n");
    auto frontier = pareto_frontier(points);
    std::sort(frontier.begin(), frontier.end(), [](const auto& a, const auto& b) { return a.flips < b.flips; });
    for (const auto& p : frontier) {
        std::printf("  %2zu  %.3f  %+.3f\n", p.flips, p.asr, p.delta_acc);
    }
    return 0;
}
