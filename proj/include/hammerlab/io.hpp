// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hammerlab/bitflip.hpp"
#include "hammerlab/dataset.hpp"
#include "hammerlab/defenses.hpp"
#include "hammerlab/dram.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/tensor.hpp"

namespace hammerlab {

inline constexpr std::uint16_t kCheckpointVersion = 1;
inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr std::uint16_t kImageVersion = 1;

namespace io {

/// Little-endian byte sink.
class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    void magic(std::string_view m) { bytes(m.data(), m.size()); }
    template <typename U>
    void uint(U v) {
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            buf_.push_back(static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i)));
        }
    }
    void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
    void i32(std::int32_t v) { uint(static_cast<std::uint32_t>(v)); }

    const std::vector<std::uint8_t>& data() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian byte source; running off the end is a
/// format_error.
class Reader {
public:
    Reader(std::vector<std::uint8_t> data, std::string what) : buf_(std::move(data)), what_(std::move(what)) {}

    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) {
            throw format_error(what_ + ": truncated at byte " + std::to_string(pos_));
        }
    }
    void expect_magic(std::string_view m) {
        need(m.size());
        if (std::memcmp(buf_.data() + pos_, m.data(), m.size()) != 0) {
            throw format_error(what_ + ": bad magic, expected '" + std::string(m) + "'");
        }
        pos_ += m.size();
    }
    template <typename U>
    U uint() {
        need(sizeof(U));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
        }
        pos_ += sizeof(U);
        return static_cast<U>(v);
    }
    float f32() { return std::bit_cast<float>(uint<std::uint32_t>()); }
    std::int32_t i32() { return static_cast<std::int32_t>(uint<std::uint32_t>()); }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::vector<std::uint8_t> raw(std::size_t n) {
        need(n);
        std::vector<std::uint8_t> out(buf_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                      buf_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }
    std::size_t remaining() const { return buf_.size() - pos_; }
    void expect_end() const {
        if (remaining() != 0) {
            throw format_error(what_ + ": " + std::to_string(remaining()) + " unexpected trailing bytes");
        }
    }
    const std::string& what() const { return what_; }

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
    std::string what_;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        throw format_error("cannot open '" + p.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, const std::vector<std::uint8_t>& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw format_error("cannot write '" + p.string() + "'");
    }
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw format_error("write to '" + p.string() + "' failed");
    }
}

inline std::string read_text(const std::filesystem::path& p) {
    const auto b = read_file(p);
    return {b.begin(), b.end()};
}

inline void write_text(const std::filesystem::path& p, std::string_view s) {
    write_file(p, std::vector<std::uint8_t>(s.begin(), s.end()));
}

template <typename U>
U checked_narrow(std::size_t v, const char* what) {
    if (v > static_cast<std::size_t>(std::numeric_limits<U>::max())) {
        throw format_error(std::string(what) + " too large for the file format");
    }
    return static_cast<U>(v);
}

}  // namespace io

// ---------------------------------------------------------------------------
// Checkpoints: "MHCK", u16 version, config block, u32 tensor count, then per
// tensor: u16 name length, name, u8 dtype (0 f32, 1 i8), u8 rank, u32 dims,
// [f32 scale, i32 zero point if i8], raw little-endian elements.

struct Checkpoint {
    ModelConfig config;
    ParamRegistry params;
};

inline std::vector<std::uint8_t> encode_checkpoint(const ModelConfig& c, const ParamRegistry& reg) {
    io::Writer w;
    w.magic("MHCK");
    w.uint<std::uint16_t>(kCheckpointVersion);
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(c.arch));
    w.uint<std::uint8_t>(static_cast<std::uint8_t>(c.pooling));
    for (std::size_t v : {c.image_size, c.patch_size, c.channels, c.embed_dim, c.num_heads, c.depth, c.mlp_hidden,
                          c.head_in_features, c.num_classes}) {
        w.uint<std::uint32_t>(io::checked_narrow<std::uint32_t>(v, "config field"));
    }
    w.uint<std::uint64_t>(c.seed);
    w.uint<std::uint32_t>(io::checked_narrow<std::uint32_t>(reg.size(), "tensor count"));
    for (const auto& e : reg) {
        const Tensor& t = e.tensor;
        w.uint<std::uint16_t>(io::checked_narrow<std::uint16_t>(e.name.size(), "tensor name"));
        w.magic(e.name);
        w.uint<std::uint8_t>(t.dtype() == DType::f32 ? 0 : 1);
        w.uint<std::uint8_t>(io::checked_narrow<std::uint8_t>(t.rank(), "tensor rank"));
        for (std::size_t d : t.shape()) {
            w.uint<std::uint32_t>(io::checked_narrow<std::uint32_t>(d, "tensor dimension"));
        }
        if (t.dtype() == DType::f32) {
            for (float v : t.f32()) {
                w.f32(v);
            }
        } else {
            w.f32(t.quant()->scale);
            w.i32(t.quant()->zero_point);
            for (std::int8_t v : t.i8()) {
                w.uint<std::uint8_t>(std::bit_cast<std::uint8_t>(v));
            }
        }
    }
    return w.data();
}

/// Parses and validates a checkpoint: magic, version, and that the tensor
/// list matches the configured architecture name for name and shape for shape.
inline Checkpoint decode_checkpoint(std::vector<std::uint8_t> bytes, std::string what = "checkpoint") {
    io::Reader r(std::move(bytes), std::move(what));
    r.expect_magic("MHCK");
    const auto version = r.uint<std::uint16_t>();
    if (version != kCheckpointVersion) {
        throw format_error(r.what() + ": unsupported version " + std::to_string(version));
    }
    Checkpoint ck;
    ModelConfig& c = ck.config;
    const auto arch = r.uint<std::uint8_t>();
    const auto pooling = r.uint<std::uint8_t>();
    if (arch > 1 || pooling > 1) {
        throw format_error(r.what() + ": bad architecture or pooling tag");
    }
    c.arch = static_cast<Arch>(arch);
    c.pooling = static_cast<Pooling>(pooling);
    for (std::size_t* f : {&c.image_size, &c.patch_size, &c.channels, &c.embed_dim, &c.num_heads, &c.depth,
                           &c.mlp_hidden, &c.head_in_features, &c.num_classes}) {
        *f = r.uint<std::uint32_t>();
    }
    c.seed = r.uint<std::uint64_t>();
    try {
        c.validate();
    } catch (const config_error& e) {
        throw format_error(r.what() + ": invalid model config: " + e.what());
    }
    const auto layout = param_layout(c);
    const auto count = r.uint<std::uint32_t>();
    if (count != layout.size()) {
        throw format_error(r.what() + ": expected " + std::to_string(layout.size()) + " tensors, found " +
                           std::to_string(count));
    }
    for (const auto& spec : layout) {
        const auto name = r.str(r.uint<std::uint16_t>());
        if (name != spec.name) {
            throw format_error(r.what() + ": expected tensor '" + spec.name + "', found '" + name + "'");
        }
        const auto dtype = r.uint<std::uint8_t>();
        if (dtype > 1) {
            throw format_error(r.what() + ": bad dtype tag on '" + name + "'");
        }
        Shape shape(r.uint<std::uint8_t>());
        for (auto& d : shape) {
            d = r.uint<std::uint32_t>();
        }
        if (shape != spec.shape) {
            throw format_error(r.what() + ": shape mismatch on '" + name + "'");
        }
        const std::size_t n = shape_elements(shape);
        if (dtype == 0) {
            r.need(4 * n);
            std::vector<float> data(n);
            for (float& v : data) {
                v = r.f32();
            }
            ck.params.add(name, Tensor(shape, std::move(data)));
        } else {
            QuantParams q;
            q.scale = r.f32();
            q.zero_point = r.i32();
            if (q.zero_point < -128 || q.zero_point > 127) {
                throw format_error(r.what() + ": zero point out of range on '" + name + "'");
            }
            const auto raw = r.raw(n);
            std::vector<std::int8_t> data(n);
            for (std::size_t i = 0; i < n; ++i) {
                data[i] = std::bit_cast<std::int8_t>(raw[i]);
            }
            try {
                ck.params.add(name, Tensor(shape, std::move(data), q));
            } catch (const domain_error& e) {
                throw format_error(r.what() + ": bad quantization parameters on '" + name + "': " + e.what());
            }
        }
    }
    r.expect_end();
    return ck;
}

inline void save_checkpoint(const Model& m, const std::filesystem::path& p) {
    io::write_file(p, encode_checkpoint(m.config, m.params));
}
inline void save_checkpoint(const QuantizedModel& m, const std::filesystem::path& p) {
    io::write_file(p, encode_checkpoint(m.config, m.params));
}

inline Checkpoint read_checkpoint(const std::filesystem::path& p) { return decode_checkpoint(io::read_file(p), p.string()); }

inline bool is_quantized(const ParamRegistry& reg) {
    return std::any_of(reg.begin(), reg.end(), [](const auto& e) { return e.tensor.dtype() == DType::i8; });
}

/// An f32 checkpoint as a Model; format_error for a quantized one.
inline Model load_checkpoint(const std::filesystem::path& p) {
    Checkpoint ck = read_checkpoint(p);
    if (is_quantized(ck.params)) {
        throw format_error(p.string() + ": holds a quantized model");
    }
    return {ck.config, std::move(ck.params)};
}

inline QuantizedModel load_quantized_checkpoint(const std::filesystem::path& p) {
    Checkpoint ck = read_checkpoint(p);
    for (const auto& e : ck.params) {
        if (e.tensor.dtype() != DType::i8) {
            throw format_error(p.string() + ": tensor '" + e.name + "' is not quantized");
        }
    }
    return {ck.config, std::move(ck.params)};
}

// ---------------------------------------------------------------------------
// Datasets: "MHDS", u16 version, u32 N, H, W, C, u8 dtype (0 = u8),
// u16 num_classes, N*H*W*C pixel bytes, N u16 labels.
// Directory form: one subdirectory per class (sorted by name = class id),
// each holding "MHIM" image files: u16 version, u32 H, W, C, u8 dtype, pixels.

inline std::vector<std::uint8_t> encode_dataset(const Dataset& d) {
    d.validate();
    io::Writer w;
    w.magic("MHDS");
    w.uint<std::uint16_t>(kDatasetVersion);
    for (std::size_t v : {d.size(), d.height, d.width, d.channels}) {
        w.uint<std::uint32_t>(io::checked_narrow<std::uint32_t>(v, "dataset dimension"));
    }
    w.uint<std::uint8_t>(0);
    w.uint<std::uint16_t>(io::checked_narrow<std::uint16_t>(d.num_classes, "class count"));
    w.bytes(d.pixels.data(), d.pixels.size());
    for (std::uint32_t l : d.labels) {
        w.uint<std::uint16_t>(static_cast<std::uint16_t>(l));
    }
    return w.data();
}

inline Dataset decode_dataset(std::vector<std::uint8_t> bytes, std::string what = "dataset") {
    io::Reader r(std::move(bytes), std::move(what));
    r.expect_magic("MHDS");
    const auto version = r.uint<std::uint16_t>();
    if (version != kDatasetVersion) {
        throw format_error(r.what() + ": unsupported version " + std::to_string(version));
    }
    const std::size_t n = r.uint<std::uint32_t>();
    Dataset d;
    d.height = r.uint<std::uint32_t>();
    d.width = r.uint<std::uint32_t>();
    d.channels = r.uint<std::uint32_t>();
    if (r.uint<std::uint8_t>() != 0) {
        throw format_error(r.what() + ": only u8 pixels are supported");
    }
    d.num_classes = r.uint<std::uint16_t>();
    if (n == 0) {
        throw data_error(r.what() + ": dataset has no samples");
    }
    d.pixels = r.raw(n * d.image_elements());
    if (r.remaining() != 2 * n) {
        throw format_error(r.what() + ": label block holds " + std::to_string(r.remaining()) + " bytes, expected " +
                           std::to_string(2 * n));
    }
    d.labels.resize(n);
    for (auto& l : d.labels) {
        l = r.uint<std::uint16_t>();
    }
    d.validate();
    return d;
}

inline std::vector<std::uint8_t> encode_image(const Image& img) {
    io::Writer w;
    w.magic("MHIM");
    w.uint<std::uint16_t>(kImageVersion);
    for (std::size_t v : {img.height, img.width, img.channels}) {
        w.uint<std::uint32_t>(io::checked_narrow<std::uint32_t>(v, "image dimension"));
    }
    w.uint<std::uint8_t>(0);
    w.bytes(img.pixels.data(), img.pixels.size());
    return w.data();
}

inline Image decode_image(std::vector<std::uint8_t> bytes, std::string what = "image") {
    io::Reader r(std::move(bytes), std::move(what));
    r.expect_magic("MHIM");
    const auto version = r.uint<std::uint16_t>();
    if (version != kImageVersion) {
        throw format_error(r.what() + ": unsupported version " + std::to_string(version));
    }
    Image img;
    img.height = r.uint<std::uint32_t>();
    img.width = r.uint<std::uint32_t>();
    img.channels = r.uint<std::uint32_t>();
    if (r.uint<std::uint8_t>() != 0) {
        throw format_error(r.what() + ": only u8 pixels are supported");
    }
    img.pixels = r.raw(img.height * img.width * img.channels);
    r.expect_end();
    return img;
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& p) { io::write_file(p, encode_dataset(d)); }

/// Writes class directories "class_000", "class_001", ... of "NNNNNN.mhim" files.
inline void save_dataset_dir(const Dataset& d, const std::filesystem::path& root) {
    d.validate();
    namespace fs = std::filesystem;
    fs::create_directories(root);
    auto class_dir = [&root](std::size_t c) {
        char name[32];
        std::snprintf(name, sizeof name, "class_%03zu", c);
        return root / name;
    };
    for (std::size_t c = 0; c < d.num_classes; ++c) {
        fs::create_directories(class_dir(c));
    }
    for (std::size_t i = 0; i < d.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.mhim", i);
        io::write_file(class_dir(d.labels[i]) / name, encode_image(d.image(i)));
    }
}

inline Dataset load_dataset_dir(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    std::vector<fs::path> classes;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory()) {
            classes.push_back(e.path());
        }
    }
    std::sort(classes.begin(), classes.end());
    if (classes.empty()) {
        throw data_error(root.string() + ": no class subdirectories");
    }
    Dataset d;
    d.num_classes = classes.size();
    bool first = true;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(classes[c])) {
            if (e.is_regular_file()) {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
            const Image img = decode_image(io::read_file(f), f.string());
            if (first) {
                d.height = img.height;
                d.width = img.width;
                d.channels = img.channels;
                first = false;
            } else if (img.height != d.height || img.width != d.width || img.channels != d.channels) {
                throw data_error(f.string() + ": image dimensions differ from the rest of the dataset");
            }
            d.push_back(img, static_cast<std::uint32_t>(c));
        }
    }
    if (d.empty()) {
        throw data_error(root.string() + ": dataset has no samples");
    }
    d.validate();
    return d;
}

/// A raw MHDS file or a class-directory tree.
inline Dataset load_dataset(const std::filesystem::path& p) {
    if (std::filesystem::is_directory(p)) {
        return load_dataset_dir(p);
    }
    return decode_dataset(io::read_file(p), p.string());
}

// ---------------------------------------------------------------------------
// Flip plans: one "layer<TAB>index<TAB>bit" line per flip. Lines starting
// with '#' are comments; "# seed <u64>" records the generator seed.

inline std::string format_plan(const FlipPlan& plan) {
    std::string out;
    if (plan.seed) {
        out += "# seed " + std::to_string(*plan.seed) + "\n";
    }
    for (const auto& f : plan.flips) {
        out += f.layer + "\t" + std::to_string(f.index) + "\t" + std::to_string(f.bit) + "\n";
    }
    return out;
}

namespace io {

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        lines.emplace_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

template <typename U>
U parse_uint(std::string_view s, const std::string& where) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string_view::npos) {
        throw format_error(where + ": expected an unsigned integer, got '" + std::string(s) + "'");
    }
    try {
        const unsigned long long v = std::stoull(std::string(s));
        if (v > std::numeric_limits<U>::max()) {
            throw format_error(where + ": value out of range");
        }
        return static_cast<U>(v);
    } catch (const std::out_of_range&) {
        throw format_error(where + ": value out of range");
    }
}

}  // namespace io

inline FlipPlan parse_plan(std::string_view text) {
    FlipPlan plan;
    const auto lines = io::split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string& line = lines[n];
        const std::string where = "plan line " + std::to_string(n + 1);
        if (line.empty()) {
            continue;
        }
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string key, value;
            if (ss >> key >> value && key == "seed") {
                plan.seed = io::parse_uint<std::uint64_t>(value, where);
            }
            continue;
        }
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
        if (t2 == std::string::npos || line.find('\t', t2 + 1) != std::string::npos) {
            throw format_error(where + ": expected layer<TAB>index<TAB>bit");
        }
        const std::string layer = line.substr(0, t1);
        if (layer.empty()) {
            throw format_error(where + ": empty layer name");
        }
        const auto index = io::parse_uint<std::size_t>(std::string_view(line).substr(t1 + 1, t2 - t1 - 1), where);
        const auto bit = io::parse_uint<unsigned>(std::string_view(line).substr(t2 + 1), where);
        if (bit > 31) {
            throw format_error(where + ": bit position " + std::to_string(bit) + " outside [0, 31]");
        }
        plan.flips.push_back({layer, index, static_cast<int>(bit)});
    }
    return plan;
}

inline void save_plan(const FlipPlan& p, const std::filesystem::path& path) { io::write_text(path, format_plan(p)); }
inline FlipPlan load_plan(const std::filesystem::path& path) { return parse_plan(io::read_text(path)); }

// ---------------------------------------------------------------------------
// Hammer templates: optional "density <f> seed <u64>" header, then one
// "bank row byte_offset bit" line per vulnerable cell.

inline std::string format_template(const HammerTemplate& t) {
    std::string out;
    if (t.density && t.seed) {
        std::ostringstream h;
        h.precision(17);
        h << "density " << *t.density << " seed " << *t.seed << "\n";
        out += h.str();
    }
    for (const auto& c : t.cells) {
        out += std::to_string(c.bank) + " " + std::to_string(c.row) + " " + std::to_string(c.byte_offset) + " " +
               std::to_string(c.bit) + "\n";
    }
    return out;
}

inline HammerTemplate parse_template(std::string_view text) {
    HammerTemplate t;
    const auto lines = io::split_lines(text);
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const std::string where = "template line " + std::to_string(n + 1);
        std::istringstream ss(lines[n]);
        std::vector<std::string> tok;
        for (std::string s; ss >> s;) {
            tok.push_back(s);
        }
        if (tok.empty()) {
            continue;
        }
        if (tok[0] == "density") {
            if (n != 0 || tok.size() != 4 || tok[2] != "seed") {
                throw format_error(where + ": malformed header, expected 'density <f> seed <u64>'");
            }
            try {
                std::size_t used = 0;
                t.density = std::stod(tok[1], &used);
                if (used != tok[1].size()) {
                    throw std::invalid_argument("trailing");
                }
            } catch (const std::exception&) {
                throw format_error(where + ": bad density '" + tok[1] + "'");
            }
            t.seed = io::parse_uint<std::uint64_t>(tok[3], where);
            continue;
        }
        if (tok.size() != 4) {
            throw format_error(where + ": expected 'bank row byte_offset bit'");
        }
        VulnerableCell c{io::parse_uint<std::size_t>(tok[0], where), io::parse_uint<std::size_t>(tok[1], where),
                         io::parse_uint<std::size_t>(tok[2], where),
                         static_cast<int>(io::parse_uint<unsigned>(tok[3], where))};
        if (c.bit > 7) {
            throw format_error(where + ": bit_in_byte must lie in [0, 7]");
        }
        t.cells.push_back(c);
    }
    t.normalize();
    return t;
}

inline void save_template(const HammerTemplate& t, const std::filesystem::path& p) {
    io::write_text(p, format_template(t));
}
inline HammerTemplate load_template(const std::filesystem::path& p) { return parse_template(io::read_text(p)); }

}  // namespace hammerlab
