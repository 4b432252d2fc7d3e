#include "tfot/config.hpp"
#include "tfot/experiment.hpp"
#include "tfot/initiation.hpp"
#include "tfot/metrics.hpp"
#include "tfot/probbounds.hpp"
#include "tfot/records.hpp"
#include "tfot/simulator.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonFlags {
    std::string config;
    std::optional<int> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
    bool no_timing = false;
};

tfot::RunConfig resolve(const CommonFlags& f) {
    tfot::RunConfig cfg;
    if (!f.config.empty()) cfg = tfot::load_config(f.config);
    if (f.runs) cfg.monte_carlo.runs = *f.runs;
    if (f.seed) cfg.monte_carlo.master_seed = *f.seed;
    if (f.out) cfg.output_dir = *f.out;
    if (f.threads) cfg.monte_carlo.threads = *f.threads;
    if (f.no_timing) cfg.monte_carlo.record_timing = false;
    cfg.warnings.clear();
    tfot::validate(cfg);
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    return cfg;
}

void add_common(CLI::App* app, CommonFlags& f) {
    app->add_option("--config", f.config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--runs", f.runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
    app->add_option("--seed", f.seed, "master seed");
    app->add_option("--out", f.out, "output directory");
    app->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
}

std::string fmt(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw tfot::Error("cannot write '" + p.string() + "'");
    return f;
}

int cmd_simulate(const CommonFlags& flags) {
    const auto cfg = resolve(flags);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    for (int i = 0; i < cfg.monte_carlo.runs; ++i) {
        const auto sc = tfot::generate(cfg.scenario, tfot::derive_seed(cfg.monte_carlo.master_seed, i));
        char name[40];
        std::snprintf(name, sizeof name, "scenario_%05d.csv", i);
        auto f = open_out(dir / name);
        tfot::write_scenario(f, sc);
    }
    std::cout << "wrote " << cfg.monte_carlo.runs << " scenario file(s) to " << dir.string() << '\n';
    return 0;
}

int cmd_track(const CommonFlags& flags, const std::vector<std::string>& inputs) {
    const auto cfg = resolve(flags);
    const fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    int id = 0;
    for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw tfot::Error("cannot read '" + path + "'");
        const auto sc = tfot::read_scenario(in);
        const auto outputs = tfot::run_stream(sc.frames, cfg.tracker);
        const auto os = tfot::series(outputs, sc.truth, cfg.ospa);
        std::vector<tfot::RunRecord> records;
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            tfot::RunRecord r;
            r.run_id = id;
            r.k = outputs[i].k;
            if (const auto& t = sc.truth.at(r.k)) r.truth = t->position;
            r.estimate = outputs[i].estimate;
            r.ospa = os.ospa[i];
            r.event = outputs[i].event;
            records.push_back(r);
        }
        auto f = open_out(dir / ("track_" + fs::path(path).stem().string() + ".csv"));
        tfot::write_csv(f, records);
        ++id;
    }
    std::cout << "tracked " << id << " scenario file(s) into " << dir.string() << '\n';
    return 0;
}

int cmd_run(const CommonFlags& flags) {
    const auto cfg = resolve(flags);
    const auto summary = tfot::run_experiment(cfg);
    std::cout << "runs: " << summary.runs << " (failed " << summary.failed_runs << ")\n";
    for (const auto& f : summary.failures) std::cerr << "error: " << f << '\n';
    for (std::size_t i = 0; i < summary.confirmation.size(); ++i) {
        const auto& c = summary.confirmation[i];
        std::cout << "life " << i << ": confirmed " << c.observed << "/" << c.lives << ", mean latency "
                  << fmt(c.mean, 2) << " scans\n";
    }
    std::cout << "false tracks per run: " << fmt(summary.false_track_rate, 4) << '\n';
    if (cfg.monte_carlo.record_timing)
        std::cout << "step time: mean " << fmt(summary.timing.mean, 1) << " us, p95 " << fmt(summary.timing.p95, 1)
                  << " us\n";
    std::cout << "artifacts: " << cfg.output_dir << '\n';
    return summary.failed_runs == summary.runs ? kExitRuntime : 0;
}

// k,x,y rows; several rows may share a scan.
std::map<tfot::ScanIndex, std::vector<tfot::Position2>> read_point_sets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw tfot::Error("cannot read '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || tfot::detail::trim_cr(line) != "k,x,y")
        throw tfot::CsvError(path + ": line 1: expected header k,x,y");
    std::map<tfot::ScanIndex, std::vector<tfot::Position2>> sets;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = tfot::detail::trim_cr(line);
        if (text.empty()) continue;
        const auto f = tfot::detail::split(text);
        if (f.size() != 3) throw tfot::CsvError(path + ": line " + std::to_string(lineno) + ": expected 3 fields");
        const auto k = tfot::detail::parse_int<tfot::ScanIndex>(f[0], lineno);
        auto& s = sets[k];
        if (!f[1].empty() || !f[2].empty())
            s.push_back({tfot::detail::parse_double(f[1], lineno), tfot::detail::parse_double(f[2], lineno)});
    }
    return sets;
}

int cmd_ospa(const std::string& est_path, const std::string& truth_path, const tfot::OspaConfig& ocfg) {
    const auto est = read_point_sets(est_path);
    const auto truth = read_point_sets(truth_path);
    std::map<tfot::ScanIndex, int> scans;
    for (const auto& [k, v] : est) scans[k];
    for (const auto& [k, v] : truth) scans[k];
    std::cout << "k,ospa,localization,cardinality\n";
    const std::vector<tfot::Position2> none;
    for (const auto& [k, unused] : scans) {
        const auto e = est.find(k);
        const auto t = truth.find(k);
        const auto r = tfot::ospa_detail(e == est.end() ? none : e->second, t == truth.end() ? none : t->second, ocfg);
        std::cout << k << ',' << tfot::detail::format_double(r.value, 9) << ','
                  << tfot::detail::format_double(r.localization, 9) << ','
                  << tfot::detail::format_double(r.cardinality, 9) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tfot: trajectory-function-of-time detection and tracking"};
    app.require_subcommand(1);

    CommonFlags sim_flags;
    auto* sim = app.add_subcommand("simulate", "write scenario files");
    add_common(sim, sim_flags);

    CommonFlags track_flags;
    std::vector<std::string> track_inputs;
    auto* track = app.add_subcommand("track", "run the tracker over scenario files");
    add_common(track, track_flags);
    track->add_option("scenarios", track_inputs, "scenario files")->required()->check(CLI::ExistingFile);

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "end-to-end Monte Carlo experiment");
    add_common(run, run_flags);
    run->add_flag("--no-timing", run_flags.no_timing, "write step_micros as 0 for byte-reproducible output");

    std::string est_path;
    std::string truth_path;
    tfot::OspaConfig ocfg;
    auto* osp = app.add_subcommand("ospa", "per-scan OSPA between two k,x,y CSV files");
    osp->add_option("estimates", est_path)->required()->check(CLI::ExistingFile);
    osp->add_option("truth", truth_path)->required()->check(CLI::ExistingFile);
    osp->add_option("--c", ocfg.c, "cut-off");
    osp->add_option("--p", ocfg.p, "order");

    auto* bounds = app.add_subcommand("bounds", "clutter and confidence calculators");
    bounds->require_subcommand(1);
    int digits = -1;
    bounds->add_option("--digits", digits, "decimal places");

    std::optional<double> p1;
    std::optional<double> d_o;
    std::optional<double> area;
    double p_r = 0.95;
    double r_c = 0.0;
    int dim = 2;
    double tau = 3.0;
    double variance = 1.0;
    double a = 1.0;
    int ts = 4;
    int t_win = 10;

    auto* b_clutter = bounds->add_subcommand("clutter", "largest clutter rate for confidence p_r");
    b_clutter->add_option("--p1", p1, "single-point near probability");
    b_clutter->add_option("--d-o", d_o, "neighbourhood radius");
    b_clutter->add_option("--area", area, "surveillance area");
    b_clutter->add_option("--pr", p_r, "required confidence");
    auto* b_near = bounds->add_subcommand("near", "probability one clutter point is within d_o");
    b_near->add_option("--d-o", d_o)->required();
    b_near->add_option("--area", area)->required();
    auto* b_far = bounds->add_subcommand("far", "probability all clutter stays beyond d_o");
    b_far->add_option("--p1", p1);
    b_far->add_option("--d-o", d_o);
    b_far->add_option("--area", area);
    b_far->add_option("--rc", r_c, "clutter rate")->required();
    auto* b_gauss = bounds->add_subcommand("gauss", "Gaussian gate confidence");
    b_gauss->add_option("--dim", dim);
    b_gauss->add_option("--tau", tau);
    auto* b_vp = bounds->add_subcommand("vp", "Vysochanskii-Petunin lower bound");
    b_vp->add_option("--dim", dim);
    b_vp->add_option("--tau", tau);
    auto* b_cheb = bounds->add_subcommand("chebyshev", "Chebyshev tail bound");
    b_cheb->add_option("--variance", variance);
    b_cheb->add_option("--a", a);
    auto* b_pfa = bounds->add_subcommand("pfa", "false-alarm probability of Ts-of-T confirmation");
    b_pfa->add_option("--ts", ts);
    b_pfa->add_option("--T", t_win);
    b_pfa->add_option("--pr", p_r);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(sim_flags);
        if (*track) return cmd_track(track_flags, track_inputs);
        if (*run) return cmd_run(run_flags);
        if (*osp) return cmd_ospa(est_path, truth_path, ocfg);

        auto single_p1 = [&]() -> double {
            if (p1) return *p1;
            if (d_o && area) return tfot::near_prob(*d_o, *area);
            throw tfot::ConfigError("give --p1 or both --d-o and --area");
        };
        auto print = [&](double v, int dflt) {
            std::cout << fmt(v, digits >= 0 ? digits : dflt) << '\n';
            return 0;
        };
        if (*b_clutter) return print(tfot::max_clutter_rate_p1(single_p1(), p_r), 2);
        if (*b_near) return print(tfot::near_prob(*d_o, *area), 6);
        if (*b_far) return print(tfot::all_far_prob(single_p1(), r_c), 6);
        if (*b_gauss) return print(tfot::gaussian_confidence(dim, tau), 6);
        if (*b_vp) return print(tfot::vp_bound(dim, tau), 6);
        if (*b_cheb) return print(tfot::chebyshev_bound(variance, a), 6);
        if (*b_pfa) {
            std::cout << tfot::detail::format_double(tfot::false_alarm_prob(ts, t_win, p_r), 12) << '\n';
            return 0;
        }
    } catch (const tfot::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const tfot::DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitRuntime;
}
