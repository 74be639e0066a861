// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hammerlab/campaign.hpp"
#include "hammerlab/dataset.hpp"
#include "hammerlab/dram.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/io.hpp"
#include "hammerlab/model.hpp"
#include "hammerlab/report.hpp"
#include "hammerlab/train.hpp"
#include "hammerlab/trigger.hpp"

namespace hammerlab {

/// A dataset file, or a synthetic generator.
struct DatasetSpec {
    std::string label;
    std::optional<std::filesystem::path> path;
    SynthKind kind = SynthKind::blobs;
    std::size_t n = 400;
    std::uint64_t seed = 1;
    SynthOptions options;
};

struct SweepSpec {
    std::vector<std::string> layers = {"head_fc", "block0_attn_qkv", "block0_mlp_fc1", "patch_embed"};
    SharedTemplate layer_template;
    std::vector<std::size_t> counts = {5, 10, 20, 50, 100};
    std::vector<std::pair<std::string, ModelConfig>> archs;
    std::vector<DatasetSpec> datasets;
    std::size_t count = 10;  // flips per trial for the arch and dataset axes
    double rate = 1e-3;      // flips per parameter for the quant axis
};

/// Everything one CLI run needs. Relative paths resolve against the config
/// file's directory.
struct CampaignConfig {
    Json echo;
    std::optional<std::filesystem::path> checkpoint;
    ModelConfig model;
    DatasetSpec dataset;
    double train_fraction = 0.8;
    std::uint64_t split_seed = 1;
    TrainConfig train;
    PlanRequest flips;
    std::optional<std::filesystem::path> plan_file;
    TriggerSpec trigger;
    std::optional<DramGeometry> geometry;
    std::optional<std::filesystem::path> template_file;
    SweepSpec sweep;
    std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
    std::optional<std::filesystem::path> output;
};

namespace config_detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

inline std::filesystem::path existing(const std::filesystem::path& base, const std::string& p) {
    auto path = resolve(base, p);
    if (!std::filesystem::exists(path)) {
        throw config_error("referenced file '" + path.string() + "' does not exist");
    }
    return path;
}

template <typename T>
void opt(const Json& j, const char* key, T& out) {
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

}  // namespace config_detail

inline ModelConfig parse_model_config(const Json& j, ModelConfig c = {}) {
    using config_detail::opt;
    if (j.contains("arch")) {
        c.arch = parse_arch(j.at("arch").get<std::string>());
    }
    if (j.contains("pooling")) {
        c.pooling = parse_pooling(j.at("pooling").get<std::string>());
    }
    opt(j, "image_size", c.image_size);
    opt(j, "patch_size", c.patch_size);
    opt(j, "channels", c.channels);
    opt(j, "embed_dim", c.embed_dim);
    opt(j, "num_heads", c.num_heads);
    opt(j, "depth", c.depth);
    opt(j, "mlp_hidden", c.mlp_hidden);
    if (c.arch == Arch::tiny_vit && !j.contains("head_in_features")) {
        c.head_in_features = c.embed_dim;
    }
    opt(j, "head_in_features", c.head_in_features);
    opt(j, "num_classes", c.num_classes);
    opt(j, "seed", c.seed);
    c.validate();
    return c;
}

inline DatasetSpec parse_dataset_spec(const Json& j, const std::filesystem::path& base) {
    using config_detail::opt;
    DatasetSpec d;
    if (j.contains("path")) {
        d.path = config_detail::existing(base, j.at("path").get<std::string>());
        d.label = d.path->filename().string();
    } else {
        if (j.contains("synth")) {
            d.kind = parse_synth_kind(j.at("synth").get<std::string>());
        }
        opt(j, "n", d.n);
        opt(j, "seed", d.seed);
        opt(j, "image_size", d.options.image_size);
        opt(j, "channels", d.options.channels);
        opt(j, "num_classes", d.options.num_classes);
        d.label = std::string(to_string(d.kind));
    }
    opt(j, "label", d.label);
    return d;
}

inline Dataset materialize(const DatasetSpec& d) {
    if (d.path) {
        return load_dataset(*d.path);
    }
    return synth_dataset(d.kind, d.n, d.seed, d.options);
}

inline BFATConfig parse_bfat(const Json& j) {
    using config_detail::opt;
    BFATConfig b;
    opt(j, "flip_prob", b.flip_prob);
    opt(j, "bits", b.bit_set);
    opt(j, "persistent", b.persistent);
    opt(j, "seed", b.seed);
    opt(j, "layers", b.layers);
    b.validate();
    return b;
}

inline TrainConfig parse_train_config(const Json& j) {
    using config_detail::opt;
    TrainConfig t;
    opt(j, "epochs", t.epochs);
    opt(j, "lr", t.lr);
    opt(j, "batch_size", t.batch_size);
    opt(j, "seed", t.seed);
    opt(j, "clip_norm", t.clip_norm);
    if (j.contains("bfat") && !j.at("bfat").is_null()) {
        t.bfat = parse_bfat(j.at("bfat"));
    }
    return t;
}

inline TriggerSpec parse_trigger(const Json& j) {
    using config_detail::opt;
    TriggerSpec t;
    opt(j, "size_px", t.size_px);
    if (j.contains("corner")) {
        t.corner = parse_corner(j.at("corner").get<std::string>());
    }
    int intensity = t.intensity;
    opt(j, "intensity", intensity);
    if (intensity < 0 || intensity > 255) {
        throw config_error("trigger intensity must lie in [0, 255]");
    }
    t.intensity = static_cast<std::uint8_t>(intensity);
    opt(j, "target_class", t.target_class);
    opt(j, "exclude_target_class", t.exclude_target_class);
    return t;
}

inline DramGeometry parse_geometry(const Json& j) {
    using config_detail::opt;
    DramGeometry g;
    opt(j, "row_size_bytes", g.row_size_bytes);
    opt(j, "rows_per_bank", g.rows_per_bank);
    opt(j, "banks", g.banks);
    g.validate();
    return g;
}

inline CampaignConfig parse_campaign_config(const Json& j, const std::filesystem::path& base = ".") {
    using config_detail::opt;
    if (!j.is_object()) {
        throw config_error("campaign config must be a JSON object");
    }
    try {
        CampaignConfig c;
        c.echo = j;
        if (j.contains("model")) {
            const Json& m = j.at("model");
            if (m.contains("checkpoint")) {
                c.checkpoint = config_detail::existing(base, m.at("checkpoint").get<std::string>());
            } else {
                c.model = parse_model_config(m);
            }
        }
        if (j.contains("dataset")) {
            c.dataset = parse_dataset_spec(j.at("dataset"), base);
        }
        if (j.contains("split")) {
            opt(j.at("split"), "train_fraction", c.train_fraction);
            opt(j.at("split"), "seed", c.split_seed);
        }
        if (j.contains("train")) {
            c.train = parse_train_config(j.at("train"));
        }
        if (j.contains("flips")) {
            const Json& f = j.at("flips");
            if (f.contains("strategy")) {
                c.flips.strategy = parse_plan_strategy(f.at("strategy").get<std::string>());
            }
            opt(f, "layer", c.flips.layer);
            opt(f, "count", c.flips.count);
            opt(f, "bits", c.flips.bits);
            opt(f, "indices", c.flips.indices);
            if (f.contains("plan")) {
                c.plan_file = config_detail::existing(base, f.at("plan").get<std::string>());
            }
        }
        if (j.contains("trigger")) {
            c.trigger = parse_trigger(j.at("trigger"));
        }
        if (j.contains("dram")) {
            const Json& d = j.at("dram");
            c.geometry = parse_geometry(d.value("geometry", Json::object()));
            if (d.contains("template")) {
                c.template_file = config_detail::existing(base, d.at("template").get<std::string>());
            }
        }
        if (j.contains("sweep")) {
            const Json& s = j.at("sweep");
            opt(s, "layers", c.sweep.layers);
            if (s.contains("template")) {
                opt(s.at("template"), "num_indices", c.sweep.layer_template.num_indices);
                opt(s.at("template"), "bits", c.sweep.layer_template.bits);
            }
            opt(s, "counts", c.sweep.counts);
            opt(s, "count", c.sweep.count);
            opt(s, "rate", c.sweep.rate);
            if (s.contains("archs")) {
                for (const auto& a : s.at("archs")) {
                    const ModelConfig mc = parse_model_config(a);
                    c.sweep.archs.emplace_back(a.value("label", std::string(to_string(mc.arch))), mc);
                }
            }
            if (s.contains("datasets")) {
                for (const auto& d : s.at("datasets")) {
                    c.sweep.datasets.push_back(parse_dataset_spec(d, base));
                }
            }
        }
        if (j.contains("seeds")) {
            c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        }
        if (c.seeds.empty()) {
            throw config_error("seeds must not be empty");
        }
        if (j.contains("output")) {
            c.output = config_detail::resolve(base, j.at("output").get<std::string>());
        }
        return c;
    } catch (const Json::exception& e) {
        throw config_error(std::string("malformed campaign config: ") + e.what());
    }
}

inline CampaignConfig load_campaign_config(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) {
        throw config_error("config file '" + p.string() + "' does not exist");
    }
    Json j;
    try {
        j = Json::parse(io::read_text(p));
    } catch (const Json::parse_error& e) {
        throw config_error("config '" + p.string() + "' is not valid JSON: " + e.what());
    }
    return parse_campaign_config(j, p.parent_path().empty() ? std::filesystem::path(".") : p.parent_path());
}

}  // namespace hammerlab
