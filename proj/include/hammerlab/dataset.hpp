// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hammerlab/error.hpp"
#include "hammerlab/rng.hpp"

namespace hammerlab {

/// One H x W x C image, u8 pixels, row-major with interleaved channels.
struct Image {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::vector<std::uint8_t> pixels;

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) { return pixels[(y * width + x) * channels + c]; }
    std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
        return pixels[(y * width + x) * channels + c];
    }
    friend bool operator==(const Image&, const Image&) = default;
};

/// N images of identical geometry plus integer labels.
struct Dataset {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;
    std::size_t num_classes = 0;
    std::vector<std::uint8_t> pixels;  // N x H x W x C
    std::vector<std::uint32_t> labels;

    std::size_t size() const { return labels.size(); }
    bool empty() const { return labels.empty(); }
    std::size_t image_elements() const { return height * width * channels; }

    std::span<const std::uint8_t> pixels_of(std::size_t i) const {
        return std::span(pixels).subspan(i * image_elements(), image_elements());
    }

    Image image(std::size_t i) const {
        const auto px = pixels_of(i);
        return {height, width, channels, {px.begin(), px.end()}};
    }

    void push_back(const Image& img, std::uint32_t label) {
        pixels.insert(pixels.end(), img.pixels.begin(), img.pixels.end());
        labels.push_back(label);
    }

    /// Throws data_error when an invariant is violated.
    void validate() const {
        if (num_classes == 0) {
            throw data_error("dataset must declare at least one class");
        }
        if (pixels.size() != labels.size() * image_elements()) {
            throw data_error("pixel buffer does not match N x H x W x C");
        }
        for (std::uint32_t l : labels) {
            if (l >= num_classes) {
                throw data_error("label " + std::to_string(l) + " out of range for " + std::to_string(num_classes) +
                                 " classes");
            }
        }
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline Dataset empty_like(const Dataset& d) { return {d.height, d.width, d.channels, d.num_classes, {}, {}}; }

inline Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
    Dataset out = empty_like(d);
    out.pixels.reserve(indices.size() * d.image_elements());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        const auto px = d.pixels_of(i);
        out.pixels.insert(out.pixels.end(), px.begin(), px.end());
        out.labels.push_back(d.labels[i]);
    }
    return out;
}

/// Deterministic stratified train/test split: within each class, a seeded
/// shuffle sends floor(n_c * fraction) samples to train and the rest to test.
/// Both splits keep the original relative order of their samples.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw domain_error("train fraction must lie in (0, 1)");
    }
    std::vector<bool> to_train(d.size(), false);
    for (std::size_t c = 0; c < d.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (d.labels[i] == c) {
                members.push_back(i);
            }
        }
        Rng rng(derive_seed(seed, c));
        rng.shuffle(std::span(members));
        const auto n_train =
            static_cast<std::size_t>(std::floor(static_cast<double>(members.size()) * train_fraction));
        for (std::size_t k = 0; k < n_train; ++k) {
            to_train[members[k]] = true;
        }
    }
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < d.size(); ++i) {
        (to_train[i] ? train_idx : test_idx).push_back(i);
    }
    return {subset(d, train_idx), subset(d, test_idx)};
}

enum class SynthKind { blobs, stripes, xor_ };

inline SynthKind parse_synth_kind(std::string_view s) {
    if (s == "blobs") return SynthKind::blobs;
    if (s == "stripes") return SynthKind::stripes;
    if (s == "xor") return SynthKind::xor_;
    throw config_error("unknown synthetic dataset kind '" + std::string(s) + "'");
}

inline std::string_view to_string(SynthKind k) {
    switch (k) {
        case SynthKind::blobs: return "blobs";
        case SynthKind::stripes: return "stripes";
        case SynthKind::xor_: return "xor";
    }
    return "?";
}

struct SynthOptions {
    std::size_t image_size = 16;
    std::size_t channels = 3;
    std::size_t num_classes = 2;
};

namespace detail {

inline std::uint8_t to_pixel(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace detail

/// Class-balanced synthetic image datasets standing in for real imaging data.
///  - blobs: each class has a coarse 4x4 colour prototype; samples add
///    Gaussian pixel noise. Linearly separable with a wide margin.
///  - stripes: class c is a sinusoidal grating at angle pi*c/K with random
///    phase. Not linearly separable.
///  - xor: two-class; the sign pattern of a vertical and a horizontal
///    half-plane contrast, label = XOR of the two signs.
inline Dataset synth_dataset(SynthKind kind, std::size_t n, std::uint64_t seed, const SynthOptions& opt = {}) {
    const std::size_t k = opt.num_classes;
    if (k < 2) {
        throw data_error("synthetic datasets need at least 2 classes");
    }
    if (kind == SynthKind::xor_ && k != 2) {
        throw data_error("xor dataset is two-class");
    }
    if (n < 2 * k) {
        throw data_error("need at least 2 samples per class, got n=" + std::to_string(n));
    }
    const std::size_t s = opt.image_size;
    const std::size_t ch = opt.channels;
    Rng rng(seed);

    std::vector<std::uint32_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<std::uint32_t>(i % k);
    }
    rng.shuffle(std::span(labels));

    constexpr std::size_t grid = 4;
    std::vector<double> prototypes;
    if (kind == SynthKind::blobs) {
        prototypes.resize(k * grid * grid * ch);
        for (double& v : prototypes) {
            v = rng.uniform(40.0, 215.0);
        }
    }

    Dataset d{s, s, ch, k, {}, {}};
    d.pixels.reserve(n * s * s * ch);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t label = labels[i];
        Image img{s, s, ch, std::vector<std::uint8_t>(s * s * ch)};
        switch (kind) {
            case SynthKind::blobs:
                for (std::size_t y = 0; y < s; ++y) {
                    for (std::size_t x = 0; x < s; ++x) {
                        const std::size_t cell = (y * grid / s) * grid + (x * grid / s);
                        for (std::size_t c = 0; c < ch; ++c) {
                            const double base = prototypes[(label * grid * grid + cell) * ch + c];
                            img.at(y, x, c) = detail::to_pixel(base + 32.0 * rng.normal());
                        }
                    }
                }
                break;
            case SynthKind::stripes: {
                const double angle = std::numbers::pi * label / static_cast<double>(k);
                const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
                const double period = 4.0;
                for (std::size_t y = 0; y < s; ++y) {
                    for (std::size_t x = 0; x < s; ++x) {
                        const double t = (x * std::cos(angle) + y * std::sin(angle)) / period;
                        const double base = 128.0 + 80.0 * std::sin(2.0 * std::numbers::pi * t + phase);
                        for (std::size_t c = 0; c < ch; ++c) {
                            img.at(y, x, c) = detail::to_pixel(base + 20.0 * rng.normal());
                        }
                    }
                }
                break;
            }
            case SynthKind::xor_: {
                const bool a = rng.bernoulli(0.5);
                const bool b = a != (label == 1);
                for (std::size_t y = 0; y < s; ++y) {
                    for (std::size_t x = 0; x < s; ++x) {
                        const double vertical = (a ? 1.0 : -1.0) * (y < s / 2 ? 1.0 : -1.0);
                        const double horizontal = (b ? 1.0 : -1.0) * (x < s / 2 ? 1.0 : -1.0);
                        for (std::size_t c = 0; c < ch; ++c) {
                            img.at(y, x, c) = detail::to_pixel(128.0 + 45.0 * (vertical + horizontal) +
                                                               20.0 * rng.normal());
                        }
                    }
                }
                break;
            }
        }
        d.push_back(img, label);
    }
    return d;
}

}  // namespace hammerlab
