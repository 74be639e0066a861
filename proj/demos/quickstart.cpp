// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

// Train a tiny ViT on synthetic blobs, then flip 50 random bits of each
// IEEE-754 field in the classifier head and compare the accuracy drop.

#include <cstdio>

#include "hammerlab/hammerlab.hpp"

using namespace hammerlab;

int main() {
    auto [train_set, test_set] = split_dataset(synth_dataset(SynthKind::blobs, 400, 1), 0.8, 1);
    Model model = init_model(ModelConfig{});
    TrainConfig tc;
    tc.epochs = 15;
    train(model, train_set, tc);
    std::printf("%zu parameters, clean test accuracy %.4f\n", model.parameter_count(), accuracy(model, test_set));

    for (BitField field : {BitField::sign, BitField::exponent, BitField::high_mantissa, BitField::low_mantissa}) {
        const auto bits = field_bits(field);
        const FlipPlan plan = field_constrained_plan(model.params, "head_fc", 50, bits, 7);
        const EvalReport r = run_attack(model, test_set, plan, TriggerSpec{});
        std::printf("50 %-13s flips in head_fc: flip_acc %.4f  delta_acc %+.4f\n",
                    std::string(to_string(field)).c_str(), r.flip_acc, r.delta_acc);
    }
    return 0;
}
