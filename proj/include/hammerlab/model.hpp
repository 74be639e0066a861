// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hammerlab/error.hpp"
#include "hammerlab/rng.hpp"
#include "hammerlab/tensor.hpp"

namespace hammerlab {

enum class Arch : std::uint8_t { tiny_vit = 0, tiny_mlp = 1 };
enum class Pooling : std::uint8_t { mean = 0, cls = 1 };

inline std::string_view to_string(Arch a) { return a == Arch::tiny_vit ? "tiny_vit" : "tiny_mlp"; }
inline std::string_view to_string(Pooling p) { return p == Pooling::mean ? "mean" : "cls"; }

inline Arch parse_arch(std::string_view s) {
    if (s == "tiny_vit") return Arch::tiny_vit;
    if (s == "tiny_mlp") return Arch::tiny_mlp;
    throw config_error("unknown architecture '" + std::string(s) + "'");
}

inline Pooling parse_pooling(std::string_view s) {
    if (s == "mean") return Pooling::mean;
    if (s == "cls") return Pooling::cls;
    throw config_error("unknown pooling '" + std::string(s) + "'");
}

/// Architecture hyper-parameters. For tiny_mlp only image_size, channels,
/// head_in_features (the hidden width) and num_classes are used.
struct ModelConfig {
    Arch arch = Arch::tiny_vit;
    std::size_t image_size = 16;
    std::size_t patch_size = 4;
    std::size_t channels = 3;
    std::size_t embed_dim = 32;
    std::size_t num_heads = 2;
    std::size_t depth = 1;
    std::size_t mlp_hidden = 64;
    std::size_t head_in_features = 32;
    std::size_t num_classes = 2;
    Pooling pooling = Pooling::mean;
    std::uint64_t seed = 0;

    std::size_t patches_per_side() const { return image_size / patch_size; }
    std::size_t num_patches() const { return patches_per_side() * patches_per_side(); }
    std::size_t num_tokens() const { return num_patches() + (pooling == Pooling::cls ? 1 : 0); }
    std::size_t patch_dim() const { return patch_size * patch_size * channels; }
    std::size_t input_dim() const { return image_size * image_size * channels; }

    void validate() const {
        auto positive = [](std::size_t v, const char* what) {
            if (v == 0) {
                throw config_error(std::string(what) + " must be positive");
            }
        };
        positive(image_size, "image_size");
        positive(channels, "channels");
        positive(head_in_features, "head_in_features");
        positive(num_classes, "num_classes");
        if (arch == Arch::tiny_mlp) {
            return;
        }
        positive(patch_size, "patch_size");
        positive(embed_dim, "embed_dim");
        positive(num_heads, "num_heads");
        positive(mlp_hidden, "mlp_hidden");
        if (image_size % patch_size != 0) {
            throw config_error("image_size must be divisible by patch_size");
        }
        if (embed_dim % num_heads != 0) {
            throw config_error("embed_dim must be divisible by num_heads");
        }
        if (head_in_features != embed_dim) {
            throw config_error("tiny_vit requires head_in_features == embed_dim");
        }
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Ordered, uniquely named set of f32 (or, after quantization, i8) tensors.
class ParamRegistry {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    void add(std::string name, Tensor tensor) {
        if (find(name) != nullptr) {
            throw config_error("duplicate parameter name '" + name + "'");
        }
        entries_.push_back({std::move(name), std::move(tensor)});
    }

    const Tensor* find(std::string_view name) const {
        for (const auto& e : entries_) {
            if (e.name == name) {
                return &e.tensor;
            }
        }
        return nullptr;
    }
    Tensor* find(std::string_view name) {
        return const_cast<Tensor*>(static_cast<const ParamRegistry*>(this)->find(name));
    }

    const Tensor& at(std::string_view name) const {
        if (const Tensor* t = find(name)) {
            return *t;
        }
        throw address_error("unknown layer '" + std::string(name) + "'");
    }
    Tensor& at(std::string_view name) { return const_cast<Tensor&>(static_cast<const ParamRegistry*>(this)->at(name)); }

    const Tensor& operator[](std::size_t i) const { return entries_[i].tensor; }
    Tensor& operator[](std::size_t i) { return entries_[i].tensor; }
    const std::string& name(std::size_t i) const { return entries_[i].name; }

    std::size_t size() const { return entries_.size(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& e : entries_) {
            n += e.tensor.size();
        }
        return n;
    }

    friend bool bytes_equal(const ParamRegistry& a, const ParamRegistry& b) {
        return std::equal(a.entries_.begin(), a.entries_.end(), b.entries_.begin(), b.entries_.end(),
                          [](const Entry& x, const Entry& y) { return x.name == y.name && bytes_equal(x.tensor, y.tensor); });
    }

private:
    std::vector<Entry> entries_;
};

enum class InitKind { glorot, zeros, ones };

struct ParamSpec {
    std::string name;
    Shape shape;
    InitKind init;
};

/// The canonical parameter list of an architecture, in registry order.
/// Linear weights are stored [in_features x out_features].
inline std::vector<ParamSpec> param_layout(const ModelConfig& c) {
    std::vector<ParamSpec> out;
    auto linear = [&out](const std::string& name, std::size_t in, std::size_t outf) {
        out.push_back({name, {in, outf}, InitKind::glorot});
        out.push_back({name + ".bias", {outf}, InitKind::zeros});
    };
    auto norm = [&out](const std::string& name, std::size_t dim) {
        out.push_back({name + ".gamma", {dim}, InitKind::ones});
        out.push_back({name + ".beta", {dim}, InitKind::zeros});
    };
    if (c.arch == Arch::tiny_mlp) {
        linear("hidden_fc", c.input_dim(), c.head_in_features);
        linear("head_fc", c.head_in_features, c.num_classes);
        return out;
    }
    const std::size_t e = c.embed_dim;
    linear("patch_embed", c.patch_dim(), e);
    if (c.pooling == Pooling::cls) {
        out.push_back({"cls_token", {1, e}, InitKind::glorot});
    }
    out.push_back({"pos_embed", {c.num_tokens(), e}, InitKind::glorot});
    for (std::size_t k = 0; k < c.depth; ++k) {
        const std::string b = "block" + std::to_string(k);
        norm(b + "_ln1", e);
        linear(b + "_attn_qkv", e, 3 * e);
        linear(b + "_attn_proj", e, e);
        norm(b + "_ln2", e);
        linear(b + "_mlp_fc1", e, c.mlp_hidden);
        linear(b + "_mlp_fc2", c.mlp_hidden, e);
    }
    norm("norm", e);
    linear("head_fc", e, c.num_classes);
    return out;
}

inline std::size_t parameter_count(const ModelConfig& c) {
    std::size_t n = 0;
    for (const auto& s : param_layout(c)) {
        n += shape_elements(s.shape);
    }
    return n;
}

struct Model {
    ModelConfig config;
    ParamRegistry params;

    std::size_t parameter_count() const { return params.total_elements(); }
};

/// Fresh model with Glorot-uniform matrices, zero biases, unit norm gains.
/// Bit-identical for identical configs (including seed).
inline Model init_model(const ModelConfig& config) {
    config.validate();
    Model m{config, {}};
    Rng rng(config.seed);
    for (auto& spec : param_layout(config)) {
        const std::size_t n = shape_elements(spec.shape);
        std::vector<float> data(n, spec.init == InitKind::ones ? 1.0f : 0.0f);
        if (spec.init == InitKind::glorot) {
            const double fan_in = static_cast<double>(spec.shape[0]);
            const double fan_out = static_cast<double>(spec.shape[1]);
            const double a = std::sqrt(6.0 / (fan_in + fan_out));
            for (float& v : data) {
                v = static_cast<float>(rng.uniform(-a, a));
            }
        }
        m.params.add(spec.name, Tensor(spec.shape, std::move(data)));
    }
    return m;
}

}  // namespace hammerlab
