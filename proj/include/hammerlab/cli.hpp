// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hammerlab/campaign.hpp"
#include "hammerlab/config.hpp"
#include "hammerlab/defenses.hpp"
#include "hammerlab/dram.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/io.hpp"
#include "hammerlab/metrics.hpp"
#include "hammerlab/report.hpp"
#include "hammerlab/train.hpp"
#include "hammerlab/trigger.hpp"

namespace hammerlab {

enum ExitCode : int {
    exit_ok = 0,
    exit_verify_failed = 1,
    exit_config = 2,
    exit_data = 3,
    exit_precondition = 4,
};

namespace cli {

/// "key=value,key=value" into pairs; config_error on malformed items.
inline std::vector<std::pair<std::string, std::string>> parse_kv(const std::string& spec) {
    std::vector<std::pair<std::string, std::string>> out;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) {
        if (item.empty()) {
            continue;
        }
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw config_error("expected key=value, got '" + item + "'");
        }
        out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
    return out;
}

inline std::uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const auto x = std::stoull(v, &used);
        if (used != v.size() || v.find('-') != std::string::npos) {
            throw std::invalid_argument(v);
        }
        return x;
    } catch (const std::exception&) {
        throw config_error("bad value '" + v + "' for " + key);
    }
}

inline double to_double(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return x;
    } catch (const std::exception&) {
        throw config_error("bad value '" + v + "' for " + key);
    }
}

/// size=4,corner=top_left,intensity=255,target=0,exclude=0
inline TriggerSpec parse_trigger_spec(const std::string& spec) {
    TriggerSpec t;
    for (const auto& [k, v] : parse_kv(spec)) {
        if (k == "size") {
            t.size_px = to_u64(v, k);
        } else if (k == "corner") {
            t.corner = parse_corner(v);
        } else if (k == "intensity") {
            const auto x = to_u64(v, k);
            if (x > 255) {
                throw config_error("intensity must lie in [0, 255]");
            }
            t.intensity = static_cast<std::uint8_t>(x);
        } else if (k == "target") {
            t.target_class = static_cast<std::uint32_t>(to_u64(v, k));
        } else if (k == "exclude") {
            t.exclude_target_class = to_u64(v, k) != 0;
        } else {
            throw config_error("unknown trigger key '" + k + "'");
        }
    }
    return t;
}

/// row=8192,rows=1024,banks=1
inline DramGeometry parse_geometry_spec(const std::string& spec) {
    DramGeometry g;
    for (const auto& [k, v] : parse_kv(spec)) {
        if (k == "row") {
            g.row_size_bytes = to_u64(v, k);
        } else if (k == "rows") {
            g.rows_per_bank = to_u64(v, k);
        } else if (k == "banks") {
            g.banks = to_u64(v, k);
        } else {
            throw config_error("unknown geometry key '" + k + "'");
        }
    }
    g.validate();
    return g;
}

inline NasWeights parse_weights(const std::string& spec) {
    std::vector<double> v;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ',');) {
        v.push_back(to_double(item, "--weights"));
    }
    if (v.size() != 3) {
        throw config_error("--weights expects alpha,beta,gamma");
    }
    NasWeights w;
    w.alpha = v[0];
    w.beta = v[1];
    w.gamma = v[2];
    return w;
}

inline void write_report(const Json& doc, const std::filesystem::path& p) { io::write_text(p, render_report(doc)); }

/// Splits the configured dataset, then loads the checkpoint or trains a fresh
/// model on the training part.
struct Prepared {
    Model model;
    Dataset train;
    Dataset test;
};

inline Prepared prepare(const CampaignConfig& c, const ModelConfig& mc, const DatasetSpec& ds) {
    auto [tr, te] = split_dataset(materialize(ds), c.train_fraction, c.split_seed);
    Model m;
    if (c.checkpoint) {
        m = load_checkpoint(*c.checkpoint);
    } else {
        m = init_model(mc);
        train(m, tr, c.train);
    }
    return {std::move(m), std::move(tr), std::move(te)};
}

inline int cmd_train(const std::filesystem::path& config, const std::filesystem::path& out_path,
                     const std::string& test_out, std::ostream& out) {
    const CampaignConfig c = load_campaign_config(config);
    auto [tr, te] = split_dataset(materialize(c.dataset), c.train_fraction, c.split_seed);
    Model m = init_model(c.model);
    const TrainHistory h = train(m, tr, c.train);
    save_checkpoint(m, out_path);
    out << "trained " << to_string(m.config.arch) << " (" << m.parameter_count() << " parameters)"
        << (c.train.bfat ? " with bit-flip-aware training" : "") << "\n";
    out << "final train accuracy " << h.train_accuracy.back() << ", test accuracy " << accuracy(m, te)
        << ", skipped steps " << h.skipped_steps << "\n";
    out << "checkpoint written to " << out_path.string() << "\n";
    if (!test_out.empty()) {
        save_dataset(te, test_out);
        out << "test split (" << te.size() << " images) written to " << test_out << "\n";
    }
    return exit_ok;
}

inline int cmd_attack(const std::filesystem::path& ckpt, const std::filesystem::path& plan_path,
                      const std::string& trigger, const std::filesystem::path& data,
                      const std::filesystem::path& report, std::ostream& out) {
    const Checkpoint ck = read_checkpoint(ckpt);
    const FlipPlan plan = load_plan(plan_path);
    const TriggerSpec spec = parse_trigger_spec(trigger);
    const Dataset test = load_dataset(data);
    EvalReport r;
    if (is_quantized(ck.params)) {
        r = run_attack(QuantizedModel{ck.config, ck.params}, test, plan, spec, plan.seed.value_or(0));
    } else {
        r = run_attack(Model{ck.config, ck.params}, test, plan, spec, plan.seed.value_or(0));
    }
    const Json echo{{"checkpoint", ckpt.string()},
                    {"plan", plan_path.string()},
                    {"trigger", trigger},
                    {"data", data.string()}};
    write_report(attack_report(r, echo), report);
    out << "clean_acc " << r.clean_acc << "  flip_acc " << r.flip_acc << "  delta_acc " << r.delta_acc
        << "  asr " << r.trigger_metric << "\n";
    return exit_ok;
}

inline int cmd_sweep(const std::string& axis_name, const std::filesystem::path& config,
                     const std::filesystem::path& report, std::ostream& out) {
    const SweepAxis axis = parse_sweep_axis(axis_name);
    const CampaignConfig c = load_campaign_config(config);
    SweepResult r;
    switch (axis) {
        case SweepAxis::layer: {
            const Prepared p = prepare(c, c.model, c.dataset);
            r = layer_sweep(p.model, p.test, c.sweep.layers,
                            shared_template_generator(p.model.params, c.sweep.layers, c.sweep.layer_template),
                            c.trigger, c.seeds);
            break;
        }
        case SweepAxis::n_flips: {
            const Prepared p = prepare(c, c.model, c.dataset);
            r = bitcount_sweep(p.model, p.test, c.sweep.counts, uniform_count_generator(c.flips.layer, c.flips.bits),
                               c.trigger, c.seeds);
            break;
        }
        case SweepAxis::architecture: {
            if (c.sweep.archs.empty()) {
                throw config_error("arch sweep needs sweep.archs");
            }
            std::vector<Scenario> sc;
            for (const auto& [label, mc] : c.sweep.archs) {
                CampaignConfig fresh = c;
                fresh.checkpoint.reset();
                Prepared p = prepare(fresh, mc, c.dataset);
                sc.push_back({label, std::move(p.model), std::move(p.test)});
            }
            r = scenario_sweep(axis, sc, c.sweep.count, uniform_count_generator(c.flips.layer, c.flips.bits),
                               c.trigger, c.seeds);
            break;
        }
        case SweepAxis::dataset: {
            if (c.sweep.datasets.empty()) {
                throw config_error("dataset sweep needs sweep.datasets");
            }
            std::vector<Scenario> sc;
            for (const auto& ds : c.sweep.datasets) {
                CampaignConfig fresh = c;
                fresh.checkpoint.reset();
                Prepared p = prepare(fresh, c.model, ds);
                sc.push_back({ds.label, std::move(p.model), std::move(p.test)});
            }
            r = scenario_sweep(axis, sc, c.sweep.count, uniform_count_generator(c.flips.layer, c.flips.bits),
                               c.trigger, c.seeds);
            break;
        }
        case SweepAxis::quantization: {
            const Prepared p = prepare(c, c.model, c.dataset);
            r = quantization_sweep(p.model, p.test, c.sweep.rate, c.trigger, c.seeds);
            break;
        }
    }
    write_report(sweep_report(r, c.echo), report);
    io::write_text(report.string() + ".csv", sweep_csv(r));
    for (const auto& p : r.points) {
        out << std::left << std::setw(20) << p.label << " mean flip_acc " << p.flip_acc.mean << "  mean delta_acc "
            << p.delta_acc.mean << "  mean asr " << p.trigger_metric.mean << "  (" << p.trials.size()
            << " trials)\n";
    }
    return exit_ok;
}

inline int cmd_dram(const std::filesystem::path& ckpt, const std::string& geometry,
                    const std::filesystem::path& tmpl_path, const std::filesystem::path& plan_path,
                    const std::string& base_row, std::ostream& out) {
    const Checkpoint ck = read_checkpoint(ckpt);
    const DramGeometry g = parse_geometry_spec(geometry);
    const DramMap map = map_model(ck.params, g, {0, static_cast<std::size_t>(to_u64(base_row, "--base-row"))});
    const HammerTemplate tmpl = load_template(tmpl_path);
    const FlipPlan plan = load_plan(plan_path);
    validate_plan(ck.params, plan);
    const Feasibility f = feasible_plan(plan, map, tmpl);
    out << "# achievable " << f.achievable.size() << "\n" << format_plan(f.achievable);
    out << "# unreachable " << f.unreachable.size() << "\n" << format_plan(FlipPlan{f.unreachable, std::nullopt});
    out << "# aggressors " << f.aggressors.size() << "\n";
    for (const auto& a : f.aggressors) {
        out << a.bank << " " << a.row << "\n";
    }
    out << "# collateral " << f.collateral.size() << "\n" << format_plan(FlipPlan{f.collateral, std::nullopt});
    return exit_ok;
}

inline int cmd_nas(const std::filesystem::path& candidates, const std::string& weights,
                   const std::filesystem::path& report, std::ostream& out) {
    NasWeights w = parse_weights(weights);
    const CampaignConfig c = load_campaign_config(candidates);
    std::vector<ModelConfig> configs;
    FlipProtocol proto;
    try {
        const Json& j = c.echo;
        if (!j.contains("candidates")) {
            throw config_error("candidates file needs a 'candidates' array");
        }
        for (const auto& m : j.at("candidates")) {
            configs.push_back(parse_model_config(m));
        }
        w.budget = j.value("budget", w.budget);
        if (j.contains("flip_protocol")) {
            const Json& p = j.at("flip_protocol");
            proto.count = p.value("count", proto.count);
            proto.trials = p.value("trials", proto.trials);
            proto.seed = p.value("seed", proto.seed);
        }
    } catch (const Json::exception& e) {
        throw config_error(std::string("malformed candidates file: ") + e.what());
    }
    w.validate();
    auto [tr, te] = split_dataset(materialize(c.dataset), c.train_fraction, c.split_seed);
    const auto ranked = nas_search(configs, tr, te, w, c.train, proto);
    write_report(nas_report(ranked, w, c.echo), report);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const ModelConfig& mc = ranked[i].config;
        out << i + 1 << ". " << to_string(mc.arch);
        if (mc.arch == Arch::tiny_vit) {
            out << " embed " << mc.embed_dim << " heads " << mc.num_heads;
        } else {
            out << " hidden " << mc.head_in_features;
        }
        out << "  l_nas " << ranked[i].l_nas << "  acc "
            << ranked[i].acc_clean << "  rr " << ranked[i].rr << "  c_eff " << ranked[i].c_eff << "\n";
    }
    return exit_ok;
}

inline int cmd_verify(const std::filesystem::path& report, std::ostream& out, std::ostream& err) {
    const VerifyResult v = verify_report(parse_report(io::read_text(report)));
    if (v.ok()) {
        out << "ok: " << v.checked << " identities hold\n";
        return exit_ok;
    }
    for (const auto& p : v.problems) {
        err << "mismatch: " << p << "\n";
    }
    return exit_verify_failed;
}

}  // namespace cli

/// Entry point of the command-line tool. Library errors map to exit codes:
/// config 2, data/format 3, precondition 4.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bit-flip attack and defense experiments on toy vision models"};
    app.require_subcommand(1);

    std::string config, out_path, ckpt, plan, trigger = "size=0", data, report, axis, geometry, tmpl, candidates,
                                                 weights, base_row = "0", test_out;

    auto* train = app.add_subcommand("train", "Train a model (plain or bit-flip-aware) and save a checkpoint");
    train->add_option("--config", config, "Campaign config (JSON)")->required();
    train->add_option("--out", out_path, "Checkpoint to write")->required();
    train->add_option("--test-out", test_out, "Also write the held-out split (MHDS)");

    auto* attack = app.add_subcommand("attack", "Apply a flip plan and report clean/flipped accuracy and ASR");
    attack->add_option("--ckpt", ckpt, "Checkpoint")->required();
    attack->add_option("--plan", plan, "Flip plan (TSV)")->required();
    attack->add_option("--trigger", trigger, "Trigger, e.g. size=4,corner=top_left,target=0");
    attack->add_option("--data", data, "Test dataset (MHDS file or class directory)")->required();
    attack->add_option("--report", report, "Report to write (JSON)")->required();

    auto* sweep = app.add_subcommand("sweep", "Run a sweep campaign");
    sweep->add_option("--axis", axis, "layer | nflips | arch | dataset | quant")->required();
    sweep->add_option("--config", config, "Campaign config (JSON)")->required();
    sweep->add_option("--report", report, "Report to write (JSON); a .csv table is written alongside")->required();

    auto* dram = app.add_subcommand("dram", "Partition a flip plan into achievable and unreachable flips");
    dram->add_option("--ckpt", ckpt, "Checkpoint")->required();
    dram->add_option("--geometry", geometry, "e.g. row=8192,rows=1024,banks=1")->required();
    dram->add_option("--template", tmpl, "Hammer template")->required();
    dram->add_option("--plan", plan, "Flip plan (TSV)")->required();
    dram->add_option("--base-row", base_row, "First row of the model in bank 0");

    auto* nas = app.add_subcommand("nas", "Score and rank candidate architectures");
    nas->add_option("--candidates", candidates, "Candidates file (JSON)")->required();
    nas->add_option("--weights", weights, "alpha,beta,gamma")->required();
    nas->add_option("--report", report, "Report to write (JSON)")->required();

    auto* verify = app.add_subcommand("verify", "Recompute the derived fields of a report");
    verify->add_option("--report", report, "Report to check")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return exit_config;
    }

    try {
        if (*train) return cli::cmd_train(config, out_path, test_out, out);
        if (*attack) return cli::cmd_attack(ckpt, plan, trigger, data, report, out);
        if (*sweep) return cli::cmd_sweep(axis, config, report, out);
        if (*dram) return cli::cmd_dram(ckpt, geometry, tmpl, plan, base_row, out);
        if (*nas) return cli::cmd_nas(candidates, weights, report, out);
        if (*verify) return cli::cmd_verify(report, out, err);
    } catch (const config_error& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const capacity_error& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const domain_error& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const precondition_error& e) {
        err << "precondition failed: " << e.what() << "\n";
        return exit_precondition;
    } catch (const error& e) {
        err << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return exit_data;
    }
    return exit_config;
}

}  // namespace hammerlab
