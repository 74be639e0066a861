// Copyright 2026 The hammerlab Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "hammerlab/campaign.hpp"
#include "hammerlab/defenses.hpp"
#include "hammerlab/error.hpp"
#include "hammerlab/metrics.hpp"
#include "hammerlab/stats.hpp"

namespace hammerlab {

using Json = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Json to_json(const EvalReport& r, const std::string& point) {
    Json j;
    j["point"] = point;
    j["seed"] = r.seed;
    j["n_flips"] = r.n_flips;
    j["clean_acc"] = r.clean_acc;
    j["flip_acc"] = r.flip_acc;
    j["trigger_metric"] = r.trigger_metric;
    j["delta_acc"] = r.delta_acc;
    j["rr"] = r.rr ? Json(*r.rr) : Json(nullptr);
    return j;
}

inline Json to_json(const Summary& s) { return Json{{"mean", s.mean}, {"min", s.min}, {"max", s.max}}; }

inline Json to_json(const SweepPoint& p) {
    Json j;
    j["point"] = p.label;
    j["trials"] = p.trials.size();
    j["clean_acc"] = to_json(p.clean_acc);
    j["flip_acc"] = to_json(p.flip_acc);
    j["trigger_metric"] = to_json(p.trigger_metric);
    j["delta_acc"] = to_json(p.delta_acc);
    j["rr"] = p.rr ? to_json(*p.rr) : Json(nullptr);
    return j;
}

/// Skeleton shared by every report: schema version, a timestamp line (the
/// only field that varies between identical runs), kind, config echo.
inline Json report_header(const std::string& kind, const Json& config) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["generated_at"] = utc_timestamp();
    j["kind"] = kind;
    j["config"] = config;
    return j;
}

inline Json sweep_report(const SweepResult& r, const Json& config) {
    Json j = report_header("sweep", config);
    j["axis"] = std::string(to_string(r.axis));
    j["trials"] = Json::array();
    j["aggregates"] = Json::array();
    for (const auto& p : r.points) {
        for (const auto& t : p.trials) {
            j["trials"].push_back(to_json(t, p.label));
        }
        j["aggregates"].push_back(to_json(p));
    }
    return j;
}

inline Json attack_report(const EvalReport& r, const Json& config) {
    Json j = report_header("attack", config);
    j["trials"] = Json::array({to_json(r, "attack")});
    j["aggregates"] = Json::array({to_json(make_point("attack", {r}))});
    return j;
}

inline Json nas_report(const std::vector<NasCandidateScore>& ranked, const NasWeights& w, const Json& config) {
    Json j = report_header("nas", config);
    j["weights"] = Json{{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"budget", w.budget}};
    j["candidates"] = Json::array();
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& s = ranked[i];
        j["candidates"].push_back(Json{{"rank", i + 1},
                                       {"arch", std::string(to_string(s.config.arch))},
                                       {"embed_dim", s.config.embed_dim},
                                       {"num_heads", s.config.num_heads},
                                       {"depth", s.config.depth},
                                       {"head_in_features", s.config.head_in_features},
                                       {"pooling", std::string(to_string(s.config.pooling))},
                                       {"acc_clean", s.acc_clean},
                                       {"acc_flip", s.acc_flip},
                                       {"rr", s.rr},
                                       {"c_eff", s.c_eff},
                                       {"l_nas", s.l_nas}});
    }
    return j;
}

inline std::string render_report(const Json& j) { return j.dump(2) + "\n"; }

/// One row per trial: point, seed, raw fields, derived fields.
inline std::string sweep_csv(const SweepResult& r) {
    std::string out = "axis,point,seed,n_flips,clean_acc,flip_acc,trigger_metric,delta_acc,rr\n";
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& p : r.points) {
        for (const auto& t : p.trials) {
            out += std::string(to_string(r.axis)) + "," + p.label + "," + std::to_string(t.seed) + "," +
                   std::to_string(t.n_flips) + "," + num(t.clean_acc) + "," + num(t.flip_acc) + "," +
                   num(t.trigger_metric) + "," + num(t.delta_acc) + "," + (t.rr ? num(*t.rr) : std::string()) + "\n";
        }
    }
    return out;
}

struct VerifyResult {
    std::vector<std::string> problems;
    std::size_t checked = 0;  // identities evaluated
    bool ok() const { return problems.empty(); }
};

namespace detail {

inline double num(const Json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) {
        throw format_error(std::string("report field '") + key + "' missing or not a number");
    }
    return j[key].get<double>();
}

}  // namespace detail

/// Recomputes every derived field from the raw ones: delta_acc and rr on each
/// trial, mean/min/max of each aggregate, rr and l_nas of each NAS candidate.
/// Comparisons are exact.
inline VerifyResult verify_report(const Json& j) {
    if (!j.is_object() || !j.contains("schema_version")) {
        throw format_error("not a report document");
    }
    if (j["schema_version"] != kReportSchemaVersion) {
        throw format_error("unsupported report schema_version " + j["schema_version"].dump());
    }
    VerifyResult v;
    auto check = [&v](bool ok, const std::string& what) {
        ++v.checked;
        if (!ok) {
            v.problems.push_back(what);
        }
    };

    std::map<std::string, std::vector<EvalReport>> by_point;
    if (j.contains("trials")) {
        for (const auto& t : j["trials"]) {
            const std::string where =
                "trial " + t.value("point", std::string("?")) + "/" + (t.contains("seed") ? t["seed"].dump() : "?");
            EvalReport r;
            r.clean_acc = detail::num(t, "clean_acc");
            r.flip_acc = detail::num(t, "flip_acc");
            r.trigger_metric = detail::num(t, "trigger_metric");
            r.delta_acc = detail::num(t, "delta_acc");
            for (double f : {r.clean_acc, r.flip_acc, r.trigger_metric}) {
                check(f >= 0.0 && f <= 1.0, where + ": fraction outside [0, 1]");
            }
            check(r.delta_acc == r.clean_acc - r.flip_acc, where + ": delta_acc != clean_acc - flip_acc");
            if (!t.contains("rr") || t["rr"].is_null()) {
                check(r.clean_acc == 0.0, where + ": rr missing although clean_acc > 0");
            } else {
                r.rr = detail::num(t, "rr");
                check(r.clean_acc > 0.0 && *r.rr == r.flip_acc / r.clean_acc, where + ": rr != flip_acc / clean_acc");
            }
            by_point[t.value("point", std::string())].push_back(r);
        }
    }
    if (j.contains("aggregates")) {
        for (const auto& a : j["aggregates"]) {
            const std::string point = a.value("point", std::string());
            const std::string where = "aggregate " + point;
            if (!by_point.count(point)) {
                check(false, where + ": no trials for this point");
                continue;
            }
            const SweepPoint p = make_point(point, by_point[point]);
            check(a.value("trials", std::size_t{0}) == p.trials.size(), where + ": trial count");
            auto same = [&](const char* key, const std::optional<Summary>& s) {
                if (!a.contains(key)) {
                    check(false, where + ": " + key + " missing");
                    return;
                }
                if (!s) {
                    check(a[key].is_null(), where + ": " + key + " should be null");
                    return;
                }
                check(a[key].is_object() && detail::num(a[key], "mean") == s->mean &&
                          detail::num(a[key], "min") == s->min && detail::num(a[key], "max") == s->max,
                      where + ": " + key + " summary does not match its trials");
            };
            same("clean_acc", p.clean_acc);
            same("flip_acc", p.flip_acc);
            same("trigger_metric", p.trigger_metric);
            same("delta_acc", p.delta_acc);
            same("rr", p.rr);
        }
    }
    if (j.contains("candidates")) {
        if (!j.contains("weights")) {
            throw format_error("NAS report without weights");
        }
        const auto& w = j["weights"];
        const double alpha = detail::num(w, "alpha"), beta = detail::num(w, "beta"), gamma = detail::num(w, "gamma");
        for (const auto& c : j["candidates"]) {
            const std::string where = "candidate " + (c.contains("rank") ? c["rank"].dump() : "?");
            const double acc = detail::num(c, "acc_clean"), flip = detail::num(c, "acc_flip");
            const double rr = detail::num(c, "rr"), ce = detail::num(c, "c_eff");
            check(acc > 0.0 && rr == flip / acc, where + ": rr != acc_flip / acc_clean");
            check(detail::num(c, "l_nas") == l_nas(alpha, beta, gamma, acc, rr, ce), where + ": l_nas identity");
        }
    }
    return v;
}

inline Json parse_report(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw format_error(std::string("report is not valid JSON: ") + e.what());
    }
}

}  // namespace hammerlab
