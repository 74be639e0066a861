// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hammerlab/dataset.hpp"
#include "hammerlab/error.hpp"

namespace hammerlab {

enum class Corner : std::uint8_t { top_left, top_right, bottom_left, bottom_right };

inline std::string_view to_string(Corner c) {
    switch (c) {
        case Corner::top_left: return "top_left";
        case Corner::top_right: return "top_right";
        case Corner::bottom_left: return "bottom_left";
        case Corner::bottom_right: return "bottom_right";
    }
    return "?";
}

inline Corner parse_corner(std::string_view s) {
    if (s == "top_left") return Corner::top_left;
    if (s == "top_right") return Corner::top_right;
    if (s == "bottom_left") return Corner::bottom_left;
    if (s == "bottom_right") return Corner::bottom_right;
    throw config_error("unknown corner '" + std::string(s) + "'");
}

/// Solid square patch in one image corner.
struct TriggerSpec {
    std::size_t size_px = 4;
    Corner corner = Corner::top_left;
    std::uint8_t intensity = 255;
    std::uint32_t target_class = 0;
    bool exclude_target_class = false;  // drop samples already labelled target_class when poisoning

    friend bool operator==(const TriggerSpec&, const TriggerSpec&) = default;
};

/// Copy of `img` with the trigger square set to `intensity` on every channel.
inline Image stamp(Image img, const TriggerSpec& spec) {
    if (spec.size_px > img.height || spec.size_px > img.width) {
        throw domain_error("trigger of " + std::to_string(spec.size_px) + " px does not fit a " +
                           std::to_string(img.height) + "x" + std::to_string(img.width) + " image");
    }
    const bool bottom = spec.corner == Corner::bottom_left || spec.corner == Corner::bottom_right;
    const bool right = spec.corner == Corner::top_right || spec.corner == Corner::bottom_right;
    const std::size_t y0 = bottom ? img.height - spec.size_px : 0;
    const std::size_t x0 = right ? img.width - spec.size_px : 0;
    for (std::size_t y = y0; y < y0 + spec.size_px; ++y) {
        for (std::size_t x = x0; x < x0 + spec.size_px; ++x) {
            for (std::size_t c = 0; c < img.channels; ++c) {
                img.at(y, x, c) = spec.intensity;
            }
        }
    }
    return img;
}

struct PoisonedDataset {
    Dataset data;                     // stamped images, every label = target_class
    std::vector<std::size_t> source;  // index of each sample in the original dataset
    std::uint32_t target_class = 0;

    std::size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
};

/// Stamps every sample and relabels it to the target class, preserving order.
inline PoisonedDataset poison(const Dataset& d, const TriggerSpec& spec) {
    if (d.empty()) {
        throw data_error("cannot poison an empty dataset");
    }
    if (spec.target_class >= d.num_classes) {
        throw domain_error("trigger target class " + std::to_string(spec.target_class) + " out of range");
    }
    PoisonedDataset out{empty_like(d), {}, spec.target_class};
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (spec.exclude_target_class && d.labels[i] == spec.target_class) {
            continue;
        }
        out.data.push_back(stamp(d.image(i), spec), spec.target_class);
        out.source.push_back(i);
    }
    return out;
}

}  // namespace hammerlab
