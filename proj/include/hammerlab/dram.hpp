// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hammerlab/bitflip.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/rng.hpp"

namespace hammerlab {

struct DramGeometry {
    std::size_t row_size_bytes = 8192;
    std::size_t rows_per_bank = 1024;
    std::size_t banks = 1;

    void validate() const {
        if (row_size_bytes == 0 || rows_per_bank == 0 || banks == 0) {
            throw config_error("DRAM geometry fields must be positive");
        }
    }
    std::size_t capacity_bytes() const { return row_size_bytes * rows_per_bank * banks; }
    friend bool operator==(const DramGeometry&, const DramGeometry&) = default;
};

struct RowId {
    std::size_t bank = 0;
    std::size_t row = 0;
    friend auto operator<=>(const RowId&, const RowId&) = default;
};

struct DramAddress {
    std::size_t bank = 0;
    std::size_t row = 0;
    std::size_t byte_offset = 0;
    friend auto operator<=>(const DramAddress&, const DramAddress&) = default;
};

/// One physically flippable bit.
struct VulnerableCell {
    std::size_t bank = 0;
    std::size_t row = 0;
    std::size_t byte_offset = 0;
    int bit = 0;  // bit within the byte, 0 = LSB

    RowId row_id() const { return {bank, row}; }
    friend auto operator<=>(const VulnerableCell&, const VulnerableCell&) = default;
};

struct Placement {
    std::string layer;
    std::size_t start = 0;  // linear byte address
    std::size_t bytes = 0;
    std::size_t element_bytes = 4;
};

/// Registry-order packing of every tensor's little-endian bytes onto DRAM.
/// Linear address a maps to bank a / (rows*row), row (a / row) % rows,
/// offset a % row.
class DramMap {
public:
    DramMap(DramGeometry g, std::vector<Placement> placements) : geometry_(g), placements_(std::move(placements)) {}

    const DramGeometry& geometry() const { return geometry_; }
    const std::vector<Placement>& placements() const { return placements_; }

    DramAddress to_address(std::size_t linear) const {
        const std::size_t r = geometry_.row_size_bytes;
        const std::size_t global_row = linear / r;
        return {global_row / geometry_.rows_per_bank, global_row % geometry_.rows_per_bank, linear % r};
    }
    std::size_t to_linear(const DramAddress& a) const {
        return (a.bank * geometry_.rows_per_bank + a.row) * geometry_.row_size_bytes + a.byte_offset;
    }

    /// Cell holding bit `bit` of weight `index` in `layer`.
    VulnerableCell cell_of(const BitFlipSpec& f) const {
        const Placement& p = placement(f.layer);
        if (f.index * p.element_bytes >= p.bytes) {
            throw address_error("index " + std::to_string(f.index) + " outside mapped layer '" + f.layer + "'");
        }
        check_bit_position(f.bit, static_cast<int>(p.element_bytes * 8));
        const auto a = to_address(p.start + p.element_bytes * f.index + static_cast<std::size_t>(f.bit) / 8);
        return {a.bank, a.row, a.byte_offset, f.bit % 8};
    }

    /// Inverse of cell_of; nullopt when the cell holds no mapped parameter.
    std::optional<BitFlipSpec> spec_of(const VulnerableCell& c) const {
        if (c.bank >= geometry_.banks || c.row >= geometry_.rows_per_bank || c.byte_offset >= geometry_.row_size_bytes) {
            return std::nullopt;
        }
        const std::size_t a = to_linear({c.bank, c.row, c.byte_offset});
        for (const auto& p : placements_) {
            if (a >= p.start && a < p.start + p.bytes) {
                const std::size_t rel = a - p.start;
                return BitFlipSpec{p.layer, rel / p.element_bytes,
                                   static_cast<int>((rel % p.element_bytes) * 8) + c.bit};
            }
        }
        return std::nullopt;
    }

    const Placement& placement(const std::string& layer) const {
        for (const auto& p : placements_) {
            if (p.layer == layer) {
                return p;
            }
        }
        throw address_error("layer '" + layer + "' is not mapped");
    }

private:
    DramGeometry geometry_;
    std::vector<Placement> placements_;
};

inline DramMap map_model(const ParamRegistry& reg, const DramGeometry& g, RowId base = {}) {
    g.validate();
    if (base.bank >= g.banks || base.row >= g.rows_per_bank) {
        throw address_error("base row outside the DRAM geometry");
    }
    std::size_t cursor = (base.bank * g.rows_per_bank + base.row) * g.row_size_bytes;
    std::vector<Placement> out;
    for (const auto& e : reg) {
        const std::size_t eb = e.tensor.element_bytes();
        const std::size_t bytes = e.tensor.size() * eb;
        if (cursor + bytes > g.capacity_bytes()) {
            throw capacity_error("model does not fit: layer '" + e.name + "' ends past " +
                                 std::to_string(g.capacity_bytes()) + " bytes");
        }
        out.push_back({e.name, cursor, bytes, eb});
        cursor += bytes;
    }
    return DramMap(g, std::move(out));
}

inline DramMap map_model(const Model& m, const DramGeometry& g, RowId base = {}) { return map_model(m.params, g, base); }

/// Set of cells that flip when a row at distance one is hammered.
struct HammerTemplate {
    std::vector<VulnerableCell> cells;  // sorted, unique
    std::optional<double> density;
    std::optional<std::uint64_t> seed;

    void normalize() {
        std::sort(cells.begin(), cells.end());
        cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    }
    bool contains(const VulnerableCell& c) const { return std::binary_search(cells.begin(), cells.end(), c); }
};

/// Default vulnerable-cell density, in cells per byte.
inline constexpr double kDefaultTemplateDensity = 1e-3;

/// Each bit cell of rows [first, first + count) in every bank is vulnerable
/// independently with probability density / 8, so density is the expected
/// number of vulnerable cells per byte. count = 0 means to the end of the bank.
inline HammerTemplate generate_template(const DramGeometry& g, double density, std::uint64_t seed,
                                        std::size_t first_row = 0, std::size_t row_count = 0) {
    g.validate();
    if (!(density >= 0.0 && density <= 8.0)) {
        throw config_error("template density must lie in [0, 8] cells per byte");
    }
    if (first_row >= g.rows_per_bank) {
        throw address_error("template rows outside the DRAM geometry");
    }
    const std::size_t last = row_count == 0 ? g.rows_per_bank : std::min(g.rows_per_bank, first_row + row_count);
    HammerTemplate t;
    t.density = density;
    t.seed = seed;
    const double p = density / 8.0;
    if (p <= 0.0) {
        return t;
    }
    Rng rng(seed);
    const std::size_t bits_per_row = g.row_size_bytes * 8;
    const std::size_t total = g.banks * (last - first_row) * bits_per_row;
    const double log_q = p < 1.0 ? std::log1p(-p) : 0.0;
    std::size_t pos = 0;
    while (true) {
        if (p < 1.0) {
            const double gap = std::floor(std::log1p(-rng.uniform()) / log_q);
            if (gap >= static_cast<double>(total - pos)) {
                break;
            }
            pos += static_cast<std::size_t>(gap);
        }
        if (pos >= total) {
            break;
        }
        const std::size_t rows_span = last - first_row;
        const std::size_t row_linear = pos / bits_per_row;
        const std::size_t in_row = pos % bits_per_row;
        t.cells.push_back({row_linear / rows_span, first_row + row_linear % rows_span, in_row / 8,
                           static_cast<int>(in_row % 8)});
        ++pos;
    }
    t.normalize();
    return t;
}

struct HammerResult {
    std::vector<BitFlipSpec> realized;     // in cell order
    std::vector<BitFlipSpec> unreachable;  // requested flips the template cannot produce
};

namespace detail {

inline void check_row(const DramGeometry& g, const RowId& r) {
    if (r.bank >= g.banks || r.row >= g.rows_per_bank) {
        throw address_error("row (" + std::to_string(r.bank) + ", " + std::to_string(r.row) +
                            ") outside the DRAM geometry");
    }
}

inline bool adjacent(const RowId& victim, const std::set<RowId>& aggressors) {
    return (victim.row > 0 && aggressors.count({victim.bank, victim.row - 1})) ||
           aggressors.count({victim.bank, victim.row + 1});
}

}  // namespace detail

/// Every template cell in a row at distance exactly one (same bank) from an
/// aggressor flips. Cells outside mapped layers are dropped.
inline HammerResult hammer(const DramMap& map, const HammerTemplate& tmpl, const std::vector<RowId>& aggressor_rows) {
    for (const auto& r : aggressor_rows) {
        detail::check_row(map.geometry(), r);
    }
    const std::set<RowId> aggressors(aggressor_rows.begin(), aggressor_rows.end());
    HammerResult out;
    for (const auto& c : tmpl.cells) {
        if (!detail::adjacent(c.row_id(), aggressors)) {
            continue;
        }
        if (auto s = map.spec_of(c)) {
            out.realized.push_back(*s);
        }
    }
    return out;
}

struct Feasibility {
    FlipPlan achievable;
    std::vector<RowId> aggressors;  // sorted
    std::vector<BitFlipSpec> unreachable;
    std::vector<BitFlipSpec> collateral;  // flips the aggressors also cause that the plan did not ask for
};

/// Fewest aggressor rows such that every victim row has one at distance one.
/// Victims of one parity interact only with aggressors of the other, and
/// within a parity class the greedy "place just above the lowest uncovered
/// victim" rule is optimal.
inline std::vector<RowId> cover_rows(const DramGeometry& g, const std::set<RowId>& victims) {
    std::set<RowId> chosen;
    for (const auto& v : victims) {
        if (detail::adjacent(v, chosen)) {
            continue;
        }
        if (v.row + 1 < g.rows_per_bank) {
            chosen.insert({v.bank, v.row + 1});
        } else if (v.row > 0) {
            chosen.insert({v.bank, v.row - 1});
        } else {
            throw precondition_error("a bank with one row has no neighbour to hammer");
        }
    }
    return {chosen.begin(), chosen.end()};
}

/// Splits `plan` into flips the template can produce and flips it cannot,
/// and picks the aggressor rows that realize the achievable part.
inline Feasibility feasible_plan(const FlipPlan& plan, const DramMap& map, const HammerTemplate& tmpl) {
    Feasibility out;
    out.achievable.seed = plan.seed;
    std::set<RowId> victims;
    for (const auto& f : plan.flips) {
        const VulnerableCell c = map.cell_of(f);
        if (tmpl.contains(c) && map.geometry().rows_per_bank > 1) {
            out.achievable.flips.push_back(f);
            victims.insert(c.row_id());
        } else {
            out.unreachable.push_back(f);
        }
    }
    out.aggressors = cover_rows(map.geometry(), victims);
    const std::set<BitFlipSpec> wanted(out.achievable.flips.begin(), out.achievable.flips.end());
    for (const auto& s : hammer(map, tmpl, out.aggressors).realized) {
        if (!wanted.count(s)) {
            out.collateral.push_back(s);
        }
    }
    return out;
}

}  // namespace hammerlab
