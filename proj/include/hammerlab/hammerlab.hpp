// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "hammerlab/error.hpp"
#include "hammerlab/rng.hpp"
#include "hammerlab/tensor.hpp"
#include "hammerlab/dataset.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/graph.hpp"
#include "hammerlab/bitflip.hpp"
#include "hammerlab/train.hpp"
#include "hammerlab/trigger.hpp"
#include "hammerlab/dram.hpp"
#include "hammerlab/stats.hpp"
#include "hammerlab/metrics.hpp"
#include "hammerlab/campaign.hpp"
#include "hammerlab/defenses.hpp"
#include "hammerlab/io.hpp"
#include "hammerlab/report.hpp"
#include "hammerlab/config.hpp"
