// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

// How much of a random flip plan a sparse hammer template can realize, and
// how many aggressor rows it takes. An optional argument names a file that
// receives the 0.5 cells/byte template, for use with the dram subcommand.

#include <cstdio>

#include "hammerlab/hammerlab.hpp"

using namespace hammerlab;

int main(int argc, char** argv) {
    const Model model = init_model(ModelConfig{});
    const DramGeometry geometry{1024, 128, 1};
    const DramMap map = map_model(model, geometry, {0, 4});
    const FlipPlan plan = random_uniform_plan(model.params, {}, 200, 3);

    std::printf("model occupies %zu bytes from row 4\n", model.parameter_count() * 4);
    for (double density : {0.01, 0.1, 0.5, 2.0}) {
        const HammerTemplate t = generate_template(geometry, density, 11);
        const Feasibility f = feasible_plan(plan, map, t);
        std::printf("density %5.2f cells/byte: %3zu of %zu flips achievable, %3zu aggressor rows, %5zu collateral\n",
                    density, f.achievable.size(), plan.size(), f.aggressors.size(), f.collateral.size());
    }
    if (argc > 1) {
        save_template(generate_template(geometry, 0.5, 11), argv[1]);
        std::printf("template written to %s\n", argv[1]);
    }
    return 0;
}
