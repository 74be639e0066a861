// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hammerlab/error.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/rng.hpp"
#include "hammerlab/tensor.hpp"

namespace hammerlab {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559, "IEEE-754 binary32 required");

inline std::uint32_t bits_of(float v) { return std::bit_cast<std::uint32_t>(v); }
inline float from_bits(std::uint32_t b) { return std::bit_cast<float>(b); }

/// IEEE-754 binary32 field of a bit position. The mantissa is split at the
/// half-word: bits 16-22 are "high", bits 0-15 "low".
enum class BitField : std::uint8_t { sign, exponent, high_mantissa, low_mantissa };

inline std::string_view to_string(BitField f) {
    switch (f) {
        case BitField::sign: return "sign";
        case BitField::exponent: return "exponent";
        case BitField::high_mantissa: return "high_mantissa";
        case BitField::low_mantissa: return "low_mantissa";
    }
    return "?";
}

inline BitField parse_bit_field(std::string_view s) {
    if (s == "sign") return BitField::sign;
    if (s == "exponent") return BitField::exponent;
    if (s == "high_mantissa") return BitField::high_mantissa;
    if (s == "low_mantissa") return BitField::low_mantissa;
    throw config_error("unknown bit field '" + std::string(s) + "'");
}

inline void check_bit_position(int position, int width = 32) {
    if (position < 0 || position >= width) {
        throw domain_error("bit position " + std::to_string(position) + " outside [0, " + std::to_string(width - 1) +
                           "]");
    }
}

inline BitField classify_bit(int position) {
    check_bit_position(position);
    if (position == 31) return BitField::sign;
    if (position >= 23) return BitField::exponent;
    if (position >= 16) return BitField::high_mantissa;
    return BitField::low_mantissa;
}

inline std::vector<int> field_bits(BitField f) {
    std::vector<int> out;
    for (int b = 0; b < 32; ++b) {
        if (classify_bit(b) == f) {
            out.push_back(b);
        }
    }
    return out;
}

/// Value whose bit pattern differs from `value` exactly at `position`.
inline float flip_bit(float value, int position) {
    check_bit_position(position);
    return from_bits(bits_of(value) ^ (std::uint32_t{1} << position));
}

struct BitFlipSpec {
    std::string layer;
    std::size_t index = 0;
    int bit = 0;

    friend auto operator<=>(const BitFlipSpec&, const BitFlipSpec&) = default;
    friend bool operator==(const BitFlipSpec&, const BitFlipSpec&) = default;
};

/// Ordered flips. Duplicates are allowed and cancel pairwise (XOR).
struct FlipPlan {
    std::vector<BitFlipSpec> flips;
    std::optional<std::uint64_t> seed;

    std::size_t size() const { return flips.size(); }
    bool empty() const { return flips.empty(); }
    friend bool operator==(const FlipPlan&, const FlipPlan&) = default;
};

/// Record of one applied flip. For i8 tensors the bit patterns are the byte
/// value (0-255), values are dequantized, and field is sign for bit 7 and
/// low_mantissa otherwise.
struct FlipOutcome {
    BitFlipSpec spec;
    std::uint32_t old_bits = 0;
    std::uint32_t new_bits = 0;
    float old_value = 0.0f;
    float new_value = 0.0f;
    BitField field = BitField::low_mantissa;
};

/// Throws address_error / domain_error if any flip does not address the
/// registry. Touches nothing.
inline void validate_plan(const ParamRegistry& reg, const FlipPlan& plan) {
    for (const auto& f : plan.flips) {
        const Tensor* t = reg.find(f.layer);
        if (t == nullptr) {
            throw address_error("flip addresses unknown layer '" + f.layer + "'");
        }
        if (f.index >= t->size()) {
            throw address_error("flip index " + std::to_string(f.index) + " out of range for '" + f.layer + "' (" +
                                std::to_string(t->size()) + " elements)");
        }
        check_bit_position(f.bit, t->dtype() == DType::f32 ? 32 : 8);
    }
}

/// Applies flips in plan order. Atomic: on any addressing error nothing is
/// modified. Applying the same plan twice restores the registry bit-exactly.
inline std::vector<FlipOutcome> apply_plan(ParamRegistry& reg, const FlipPlan& plan) {
    validate_plan(reg, plan);
    std::vector<FlipOutcome> out;
    out.reserve(plan.size());
    for (const auto& f : plan.flips) {
        Tensor& t = reg.at(f.layer);
        FlipOutcome o{f, 0, 0, 0.0f, 0.0f, BitField::low_mantissa};
        if (t.dtype() == DType::f32) {
            float& w = t.f32()[f.index];
            o.old_bits = bits_of(w);
            o.old_value = w;
            w = flip_bit(w, f.bit);
            o.new_bits = bits_of(w);
            o.new_value = w;
            o.field = classify_bit(f.bit);
        } else {
            std::int8_t& q = t.i8()[f.index];
            const auto before = std::bit_cast<std::uint8_t>(q);
            const auto after = static_cast<std::uint8_t>(before ^ (1u << f.bit));
            o.old_bits = before;
            o.new_bits = after;
            o.old_value = dequantize_value(q, *t.quant());
            q = std::bit_cast<std::int8_t>(after);
            o.new_value = dequantize_value(q, *t.quant());
            o.field = f.bit == 7 ? BitField::sign : BitField::low_mantissa;
        }
        out.push_back(o);
    }
    return out;
}

inline std::vector<FlipOutcome> apply_plan(Model& m, const FlipPlan& plan) { return apply_plan(m.params, plan); }

/// Every (index, bit) combination, index-major. The 20-flip head attack is
/// explicit_plan("head_fc", {300, 777, 1234, 1100, 900}, {7, 20, 22, 30}).
inline FlipPlan explicit_plan(const std::string& layer, std::span<const std::size_t> indices,
                              std::span<const int> bits) {
    FlipPlan plan;
    for (std::size_t i : indices) {
        for (int b : bits) {
            plan.flips.push_back({layer, i, b});
        }
    }
    return plan;
}

inline std::vector<int> all_bits(int width = 32) {
    std::vector<int> out(static_cast<std::size_t>(width));
    for (int b = 0; b < width; ++b) {
        out[static_cast<std::size_t>(b)] = b;
    }
    return out;
}

/// `count` flips drawn with replacement: a parameter uniformly over all
/// elements of `layers` (all registry tensors when empty), then a bit
/// uniformly from `bits` (the full width of the tensor's dtype when empty).
inline FlipPlan random_uniform_plan(const ParamRegistry& reg, std::span<const std::string> layers, std::size_t count,
                                    std::uint64_t seed, std::span<const int> bits = {}) {
    std::vector<std::pair<std::string, std::size_t>> pool;
    std::size_t total = 0;
    if (layers.empty()) {
        for (const auto& e : reg) {
            pool.emplace_back(e.name, e.tensor.size());
        }
    } else {
        for (const auto& l : layers) {
            pool.emplace_back(l, reg.at(l).size());
        }
    }
    for (const auto& p : pool) {
        total += p.second;
    }
    FlipPlan plan;
    plan.seed = seed;
    if (count == 0) {
        return plan;
    }
    if (total == 0) {
        throw domain_error("random plan over an empty parameter pool");
    }
    Rng rng(seed);
    for (std::size_t n = 0; n < count; ++n) {
        std::size_t r = rng.below(total);
        std::size_t slot = 0;
        while (r >= pool[slot].second) {
            r -= pool[slot].second;
            ++slot;
        }
        const int width = reg.at(pool[slot].first).dtype() == DType::f32 ? 32 : 8;
        const int bit = bits.empty() ? static_cast<int>(rng.below(static_cast<std::uint64_t>(width)))
                                     : bits[rng.below(bits.size())];
        plan.flips.push_back({pool[slot].first, r, bit});
    }
    return plan;
}

/// `count` distinct (index, bit) flips in one layer, bits restricted to
/// `bits`. Sampled without replacement, so count may not exceed
/// elements x |bits|.
inline FlipPlan field_constrained_plan(const ParamRegistry& reg, const std::string& layer, std::size_t count,
                                       std::span<const int> bits, std::uint64_t seed) {
    const std::size_t n = reg.at(layer).size();
    if (bits.empty() && count > 0) {
        throw domain_error("field-constrained plan needs a non-empty bit set");
    }
    for (int b : bits) {
        check_bit_position(b);
    }
    if (count > n * bits.size()) {
        throw domain_error("cannot draw " + std::to_string(count) + " distinct flips from " + std::to_string(n) +
                           " weights x " + std::to_string(bits.size()) + " bits");
    }
    FlipPlan plan;
    plan.seed = seed;
    Rng rng(seed);
    std::set<std::pair<std::size_t, int>> seen;
    while (plan.flips.size() < count) {
        const std::size_t idx = rng.below(n);
        const int bit = bits[rng.below(bits.size())];
        if (seen.emplace(idx, bit).second) {
            plan.flips.push_back({layer, idx, bit});
        }
    }
    return plan;
}

enum class PlanStrategy { explicit_, random_uniform, field_constrained };

inline PlanStrategy parse_plan_strategy(std::string_view s) {
    if (s == "explicit") return PlanStrategy::explicit_;
    if (s == "random_uniform") return PlanStrategy::random_uniform;
    if (s == "field_constrained") return PlanStrategy::field_constrained;
    throw config_error("unknown flip strategy '" + std::string(s) + "'");
}

/// Declarative plan request, the form stored in campaign configs.
struct PlanRequest {
    PlanStrategy strategy = PlanStrategy::random_uniform;
    std::string layer;                 // empty with random_uniform: whole model
    std::size_t count = 0;             // ignored by explicit_
    std::vector<int> bits;             // empty with random_uniform: all bits
    std::vector<std::size_t> indices;  // explicit_ only
};

inline FlipPlan generate_plan(const ParamRegistry& reg, const PlanRequest& req, std::uint64_t seed) {
    switch (req.strategy) {
        case PlanStrategy::explicit_: {
            FlipPlan p = explicit_plan(req.layer, req.indices, req.bits);
            validate_plan(reg, p);
            return p;
        }
        case PlanStrategy::random_uniform: {
            std::vector<std::string> layers;
            if (!req.layer.empty()) {
                layers.push_back(req.layer);
            }
            return random_uniform_plan(reg, layers, req.count, seed, req.bits);
        }
        case PlanStrategy::field_constrained:
            return field_constrained_plan(reg, req.layer, req.count, req.bits, seed);
    }
    throw config_error("bad strategy");
}

}  // namespace hammerlab
