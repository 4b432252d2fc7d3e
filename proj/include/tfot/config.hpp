#pragma once

#include "tfot/core.hpp"
#include "tfot/lifecycle.hpp"
#include "tfot/metrics.hpp"
#include "tfot/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace tfot {

/// Malformed or invalid run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

inline constexpr int kSchemaVersion = 1;

struct MonteCarloConfig {
    int runs = 200;
    std::uint64_t master_seed = 1;
    int threads = 1;
    /// Wall-clock step timings make outputs run-dependent; disable for
    /// byte-reproducible artifacts.
    bool record_timing = true;
};

/// Everything needed for one Monte Carlo experiment.
///
/// On disk this is a JSON object:
///   schema_version  must be 1
///   scenario        {"type": "linear" | "nonlinear", ...parameters}
///   tracker         {"tau1", "tau2", "gamma", "T", "Ts", "Te", "max_escalations"}
///   monte_carlo     {"runs", "master_seed", "threads", "record_timing"}
///   ospa            {"c", "p"}
///   output_dir      string
/// Every key except schema_version is optional; unknown keys are rejected.
struct RunConfig {
    int schema_version = kSchemaVersion;
    ScenarioConfig scenario = LinearScenarioConfig{};
    TrackerConfig tracker;
    MonteCarloConfig monte_carlo;
    OspaConfig ospa;
    std::string output_dir = "out";
    /// Non-fatal findings from validation.
    std::vector<std::string> warnings;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : obj.items())
        if (!allowed.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

inline LinearScenarioConfig parse_linear(const json& j) {
    reject_unknown(j, "scenario",
                   {"type", "duration", "birth_k", "death_k", "birth_mean", "birth_std", "q_scale",
                    "detection_probability", "clutter_rate", "region_half_width", "meas_var"});
    LinearScenarioConfig c;
    read(j, "duration", c.duration, "scenario");
    read(j, "birth_k", c.birth_k, "scenario");
    read(j, "death_k", c.death_k, "scenario");
    read(j, "birth_mean", c.birth_mean, "scenario");
    read(j, "birth_std", c.birth_std, "scenario");
    read(j, "q_scale", c.q_scale, "scenario");
    read(j, "detection_probability", c.detection_probability, "scenario");
    read(j, "clutter_rate", c.clutter_rate, "scenario");
    read(j, "region_half_width", c.region_half_width, "scenario");
    std::array<double, 2> var{c.meas_cov.xx, c.meas_cov.yy};
    read(j, "meas_var", var, "scenario");
    c.meas_cov = Cov2::diag(var[0], var[1]);
    return c;
}

inline NonlinearScenarioConfig parse_nonlinear(const json& j) {
    reject_unknown(j, "scenario",
                   {"type", "duration", "lives", "square_birth_cov", "sigma_w", "sigma_u", "sigma_r", "sigma_theta",
                    "max_detection_probability", "clutter_rate", "clutter_radius", "debias"});
    NonlinearScenarioConfig c;
    read(j, "duration", c.duration, "scenario");
    if (j.contains("lives")) {
        if (!j.at("lives").is_array()) throw ConfigError("scenario.lives: expected an array");
        c.lives.clear();
        for (const auto& l : j.at("lives")) {
            reject_unknown(l, "scenario.lives[]", {"birth_k", "death_k", "mean", "cov_diag"});
            TargetLife life;
            read(l, "birth_k", life.birth_k, "scenario.lives[]");
            read(l, "death_k", life.death_k, "scenario.lives[]");
            read(l, "mean", life.mean, "scenario.lives[]");
            read(l, "cov_diag", life.cov_diag, "scenario.lives[]");
            c.lives.push_back(life);
        }
    }
    read(j, "square_birth_cov", c.square_birth_cov, "scenario");
    read(j, "sigma_w", c.sigma_w, "scenario");
    read(j, "sigma_u", c.sigma_u, "scenario");
    read(j, "sigma_r", c.sensor.sigma_r, "scenario");
    read(j, "sigma_theta", c.sensor.sigma_theta, "scenario");
    read(j, "max_detection_probability", c.max_detection_probability, "scenario");
    read(j, "clutter_rate", c.clutter_rate, "scenario");
    read(j, "clutter_radius", c.clutter_radius, "scenario");
    read(j, "debias", c.debias, "scenario");
    return c;
}

inline std::string locate(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Detection probability the scenario promises, used for the Ts <= T*pD check.
[[nodiscard]] inline double nominal_detection_probability(const ScenarioConfig& s) {
    if (const auto* l = std::get_if<LinearScenarioConfig>(&s)) return l->detection_probability;
    return std::get<NonlinearScenarioConfig>(s).max_detection_probability;
}

/// Checks every invariant; appends warnings for soft violations.
inline void validate(RunConfig& cfg) {
    if (cfg.schema_version != kSchemaVersion)
        throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
    if (cfg.monte_carlo.runs < 1) throw ConfigError("monte_carlo.runs must be >= 1");
    if (cfg.monte_carlo.threads < 1) throw ConfigError("monte_carlo.threads must be >= 1");
    const auto& t = cfg.tracker;
    if (t.min_cluster_size < t.gamma + 1)
        throw ConfigError("tracker.Ts (" + std::to_string(t.min_cluster_size) + ") must be >= gamma + 1 (" +
                          std::to_string(t.gamma + 1) + ")");
    try {
        t.validate();
        cfg.ospa.validate();
        std::visit([](const auto& s) { s.validate(); }, cfg.scenario);
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    const double pd = nominal_detection_probability(cfg.scenario);
    if (t.min_cluster_size > t.window * pd + 1e-12)
        cfg.warnings.push_back("tracker.Ts exceeds T * pD = " + std::to_string(t.window * pd) +
                               "; confirmation will often be late");
}

[[nodiscard]] inline RunConfig parse_config(const std::string& text) {
    using detail::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error at " + detail::locate(text, e.byte) + ": " + e.what());
    }
    detail::reject_unknown(j, "config", {"schema_version", "scenario", "tracker", "monte_carlo", "ospa", "output_dir"});
    if (!j.contains("schema_version")) throw ConfigError("config: missing schema_version");

    RunConfig cfg;
    detail::read(j, "schema_version", cfg.schema_version, "config");
    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        if (!s.is_object()) throw ConfigError("scenario: expected an object");
        const std::string type = s.value("type", std::string("linear"));
        if (type == "linear")
            cfg.scenario = detail::parse_linear(s);
        else if (type == "nonlinear")
            cfg.scenario = detail::parse_nonlinear(s);
        else
            throw ConfigError("scenario.type must be 'linear' or 'nonlinear'");
    }
    if (j.contains("tracker")) {
        const auto& t = j.at("tracker");
        detail::reject_unknown(t, "tracker", {"tau1", "tau2", "gamma", "T", "Ts", "Te", "max_escalations"});
        detail::read(t, "tau1", cfg.tracker.tau1, "tracker");
        detail::read(t, "tau2", cfg.tracker.tau2, "tracker");
        detail::read(t, "gamma", cfg.tracker.gamma, "tracker");
        detail::read(t, "T", cfg.tracker.window, "tracker");
        detail::read(t, "Ts", cfg.tracker.min_cluster_size, "tracker");
        detail::read(t, "Te", cfg.tracker.max_misses, "tracker");
        detail::read(t, "max_escalations", cfg.tracker.max_escalations, "tracker");
    }
    if (j.contains("monte_carlo")) {
        const auto& m = j.at("monte_carlo");
        detail::reject_unknown(m, "monte_carlo", {"runs", "master_seed", "threads", "record_timing"});
        detail::read(m, "runs", cfg.monte_carlo.runs, "monte_carlo");
        detail::read(m, "master_seed", cfg.monte_carlo.master_seed, "monte_carlo");
        detail::read(m, "threads", cfg.monte_carlo.threads, "monte_carlo");
        detail::read(m, "record_timing", cfg.monte_carlo.record_timing, "monte_carlo");
    }
    if (j.contains("ospa")) {
        const auto& o = j.at("ospa");
        detail::reject_unknown(o, "ospa", {"c", "p"});
        detail::read(o, "c", cfg.ospa.c, "ospa");
        detail::read(o, "p", cfg.ospa.p, "ospa");
    }
    detail::read(j, "output_dir", cfg.output_dir, "config");
    validate(cfg);
    return cfg;
}

[[nodiscard]] inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

}  // namespace tfot
