#pragma once

#include "tfot/config.hpp"
#include "tfot/lifecycle.hpp"
#include "tfot/metrics.hpp"
#include "tfot/records.hpp"
#include "tfot/simulator.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace tfot {

/// splitmix64 finalizer.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for run `run` (0-based): splitmix64(master + (run + 1) * golden).
/// Depends on nothing but its arguments, so any run can be replayed alone.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run) {
    return splitmix64(master + (run + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Alive interval [first, last] of one target life.
struct LifeSpan {
    ScanIndex first = 0;
    ScanIndex last = 0;
};

/// Maximal runs of consecutive alive scans.
[[nodiscard]] inline std::vector<LifeSpan> life_spans(const GroundTruth& truth) {
    std::vector<LifeSpan> out;
    for (ScanIndex k = 1; k <= truth.duration(); ++k) {
        if (!truth.alive(k)) continue;
        if (!out.empty() && out.back().last == k - 1)
            out.back().last = k;
        else
            out.push_back({k, k});
    }
    return out;
}

/// Per-life latencies and false tracks extracted from one run.
struct RunOutcome {
    int run_id = 0;
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
    OspaSeries ospa;
    /// Scans from birth to the first confirmation inside each life; empty
    /// when the life was never confirmed.
    std::vector<std::optional<ScanIndex>> confirmation_latency;
    /// Scans from death to the first termination before the next birth.
    std::vector<std::optional<ScanIndex>> termination_latency;
    /// Confirmations while no target was alive.
    int false_tracks = 0;
    std::vector<double> step_micros;
    std::optional<std::string> error;
};

/// Fills latencies and false-track count from the records and truth.
inline void score_events(RunOutcome& out, const GroundTruth& truth) {
    const auto spans = life_spans(truth);
    out.confirmation_latency.assign(spans.size(), std::nullopt);
    out.termination_latency.assign(spans.size(), std::nullopt);
    for (const auto& r : out.records) {
        if (r.event == TrackEvent::confirmed && !truth.alive(r.k)) ++out.false_tracks;
        for (std::size_t i = 0; i < spans.size(); ++i) {
            const auto& s = spans[i];
            if (r.event == TrackEvent::confirmed && r.k >= s.first && r.k <= s.last && !out.confirmation_latency[i])
                out.confirmation_latency[i] = r.k - s.first;
            const ScanIndex next_birth = i + 1 < spans.size() ? spans[i + 1].first : truth.duration() + 1;
            if (r.event == TrackEvent::terminated && r.k > s.last && r.k < next_birth && !out.termination_latency[i])
                out.termination_latency[i] = r.k - s.last;
        }
    }
}

/// One complete run: simulate, track, score. Never throws; failures land in
/// `error`.
[[nodiscard]] inline RunOutcome run_once(const RunConfig& cfg, int run_id) {
    RunOutcome out;
    out.run_id = run_id;
    out.seed = derive_seed(cfg.monte_carlo.master_seed, static_cast<std::uint64_t>(run_id));
    try {
        const Scenario sc = generate(cfg.scenario, out.seed);
        Tracker tracker(cfg.tracker);
        std::vector<ScanOutput> outputs;
        outputs.reserve(sc.frames.size());
        for (const auto& frame : sc.frames) {
            const auto t0 = std::chrono::steady_clock::now();
            outputs.push_back(tracker.step(frame));
            const auto t1 = std::chrono::steady_clock::now();
            out.step_micros.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
        }
        out.ospa = series(outputs, sc.truth, cfg.ospa);
        out.records.reserve(outputs.size());
        for (std::size_t i = 0; i < outputs.size(); ++i) {
            RunRecord r;
            r.run_id = run_id;
            r.k = outputs[i].k;
            if (const auto& t = sc.truth.at(r.k)) r.truth = t->position;
            r.estimate = outputs[i].estimate;
            r.ospa = out.ospa.ospa[i];
            r.event = outputs[i].event;
            r.step_micros = cfg.monte_carlo.record_timing ? static_cast<std::int64_t>(out.step_micros[i]) : 0;
            out.records.push_back(r);
        }
        score_events(out, sc.truth);
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

/// Distribution summary of a latency sample.
struct LatencyStats {
    /// Lives scored.
    int lives = 0;
    /// Lives where the event happened at all.
    int observed = 0;
    double mean = 0.0;
    /// Histogram: counts[i] lives with latency i.
    std::vector<int> counts;

    /// Fraction of all lives with latency in [lo, hi].
    [[nodiscard]] double fraction_within(ScanIndex lo, ScanIndex hi) const {
        if (lives == 0) return 0.0;
        int n = 0;
        for (std::size_t i = 0; i < counts.size(); ++i)
            if (static_cast<ScanIndex>(i) >= lo && static_cast<ScanIndex>(i) <= hi) n += counts[i];
        return static_cast<double>(n) / lives;
    }
};

struct RunSummary {
    int runs = 0;
    int failed_runs = 0;
    std::vector<std::string> failures;
    OspaSeries mean_ospa;
    /// Indexed by life (first, second, ... alive interval).
    std::vector<LatencyStats> confirmation;
    std::vector<LatencyStats> termination;
    /// False confirmations per run.
    double false_track_rate = 0.0;
    /// Step timings in microseconds; zeros when timing is not recorded.
    TimingStats timing;
};

namespace detail {

inline void accumulate(std::vector<LatencyStats>& stats, std::size_t life, const std::optional<ScanIndex>& v) {
    if (stats.size() <= life) stats.resize(life + 1);
    auto& s = stats[life];
    ++s.lives;
    if (!v) return;
    ++s.observed;
    s.mean += static_cast<double>(*v);
    if (s.counts.size() <= static_cast<std::size_t>(*v)) s.counts.resize(static_cast<std::size_t>(*v) + 1, 0);
    ++s.counts[static_cast<std::size_t>(*v)];
}

}  // namespace detail

/// Ordered reduce over run outcomes (index order, independent of scheduling).
[[nodiscard]] inline RunSummary summarize(std::span<const RunOutcome> outcomes, bool with_timing) {
    RunSummary s;
    s.runs = static_cast<int>(outcomes.size());
    std::vector<OspaSeries> good;
    std::vector<double> timings;
    int false_tracks = 0;
    for (const auto& o : outcomes) {
        if (o.error) {
            ++s.failed_runs;
            s.failures.push_back("run " + std::to_string(o.run_id) + ": " + *o.error);
            continue;
        }
        good.push_back(o.ospa);
        for (std::size_t i = 0; i < o.confirmation_latency.size(); ++i)
            detail::accumulate(s.confirmation, i, o.confirmation_latency[i]);
        for (std::size_t i = 0; i < o.termination_latency.size(); ++i)
            detail::accumulate(s.termination, i, o.termination_latency[i]);
        false_tracks += o.false_tracks;
        if (with_timing) timings.insert(timings.end(), o.step_micros.begin(), o.step_micros.end());
    }
    for (auto* v : {&s.confirmation, &s.termination})
        for (auto& l : *v)
            if (l.observed > 0) l.mean /= l.observed;
    if (!good.empty()) {
        s.mean_ospa = average(good);
        s.false_track_rate = static_cast<double>(false_tracks) / static_cast<double>(good.size());
    }
    if (!timings.empty()) s.timing = timing_stats(timings);
    return s;
}

/// Runs every Monte Carlo replicate on `threads` workers. Output does not
/// depend on the thread count.
[[nodiscard]] inline std::vector<RunOutcome> run_batch(const RunConfig& cfg) {
    const int runs = cfg.monte_carlo.runs;
    std::vector<RunOutcome> outcomes(static_cast<std::size_t>(runs));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < runs; i = next++) outcomes[static_cast<std::size_t>(i)] = run_once(cfg, i);
    };
    const int n = std::max(1, std::min(cfg.monte_carlo.threads, runs));
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return outcomes;
}

[[nodiscard]] inline nlohmann::json to_json(const RunSummary& s, bool with_timing) {
    nlohmann::json j;
    j["runs"] = s.runs;
    j["failed_runs"] = s.failed_runs;
    j["failures"] = s.failures;
    auto lat = [](const std::vector<LatencyStats>& v) {
        auto arr = nlohmann::json::array();
        for (const auto& l : v)
            arr.push_back({{"lives", l.lives}, {"observed", l.observed}, {"mean", l.mean}, {"histogram", l.counts}});
        return arr;
    };
    j["confirmation_latency"] = lat(s.confirmation);
    j["termination_latency"] = lat(s.termination);
    j["false_track_rate"] = s.false_track_rate;
    j["mean_ospa"] = s.mean_ospa.ospa;
    if (with_timing) j["step_micros"] = {{"mean", s.timing.mean}, {"p95", s.timing.p95}};
    return j;
}

/// Per-run CSVs, the mean OSPA curve and summary.json under `dir`:
///   runs/run_00000.csv ...   run records
///   ospa_mean.csv            k,ospa,localization,cardinality
///   summary.json             RunSummary
inline void write_artifacts(const std::filesystem::path& dir, std::span<const RunOutcome> outcomes,
                            const RunSummary& summary, bool with_timing) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "runs");
    auto open = [](const fs::path& p) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error("cannot write '" + p.string() + "'");
        return f;
    };
    for (const auto& o : outcomes) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%05d.csv", o.run_id);
        auto f = open(dir / "runs" / name);
        write_csv(f, o.records);
    }
    {
        auto f = open(dir / "ospa_mean.csv");
        f << "k,ospa,localization,cardinality\n";
        const auto& m = summary.mean_ospa;
        for (std::size_t i = 0; i < m.size(); ++i)
            f << m.k[i] << ',' << detail::format_double(m.ospa[i], 9) << ','
              << detail::format_double(m.localization[i], 9) << ',' << detail::format_double(m.cardinality[i], 9)
              << '\n';
    }
    {
        auto f = open(dir / "summary.json");
        f << to_json(summary, with_timing).dump(2) << '\n';
    }
}

/// Full experiment: run the batch, reduce, persist under cfg.output_dir.
inline RunSummary run_experiment(const RunConfig& cfg) {
    const auto outcomes = run_batch(cfg);
    auto summary = summarize(outcomes, cfg.monte_carlo.record_timing);
    write_artifacts(cfg.output_dir, outcomes, summary, cfg.monte_carlo.record_timing);
    return summary;
}

}  // namespace tfot
