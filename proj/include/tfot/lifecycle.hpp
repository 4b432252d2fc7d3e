#pragma once

#include "tfot/core.hpp"
#include "tfot/initiation.hpp"
#include "tfot/maintenance.hpp"
#include "tfot/polyfit.hpp"

#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

namespace tfot {

/// Tracker parameters. Defaults are the recommended values.
struct TrackerConfig {
    double tau1 = 3.0;
    double tau2 = 5.0;
    int gamma = 1;
    /// Window length T.
    int window = 10;
    /// Ts: minimum cluster size for confirmation.
    int min_cluster_size = 4;
    /// Te: a track dies once its miss streak exceeds this.
    int max_misses = 4;
    std::optional<double> detection_probability;
    int max_escalations = 5;

    [[nodiscard]] InitiationConfig initiation() const {
        return {tau1, min_cluster_size, window, gamma, detection_probability, max_escalations};
    }
    [[nodiscard]] MaintenanceConfig maintenance() const { return {tau2, window, gamma}; }

    void validate() const {
        initiation().validate();
        maintenance().validate();
        if (max_misses < 0) throw DomainError("Te must be non-negative");
    }
};

enum class TrackEvent { none, confirmed, terminated, missed };

enum class TrackMode { searching, tracking };

struct ScanOutput {
    ScanIndex k = 0;
    std::optional<Position2> estimate;
    std::optional<Vec2> velocity;
    TrackEvent event = TrackEvent::none;
    /// On confirmation only: smoothed positions for the scans between the
    /// first cluster member and k (exclusive). Not part of the online output.
    std::vector<std::pair<ScanIndex, Position2>> backfill;
};

/// Single-target detect-and-track state machine. Feed one frame per scan in
/// increasing scan order; at most one track exists at a time.
class Tracker {
public:
    struct Searching {
        std::vector<MeasurementFrame> history;
    };
    struct Tracking {
        PolyTrajectory trajectory;
        TrackBuffer buffer;
    };

    explicit Tracker(TrackerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    [[nodiscard]] const TrackerConfig& config() const { return cfg_; }

    [[nodiscard]] TrackMode mode() const {
        return std::holds_alternative<Tracking>(state_) ? TrackMode::tracking : TrackMode::searching;
    }

    [[nodiscard]] const Tracking* tracking() const { return std::get_if<Tracking>(&state_); }
    [[nodiscard]] const Searching* searching() const { return std::get_if<Searching>(&state_); }

    ScanOutput step(const MeasurementFrame& frame) {
        frame.validate();
        if (last_k_ && frame.k <= *last_k_)
            throw ProtocolError("scan " + std::to_string(frame.k) + " does not follow scan " +
                                std::to_string(*last_k_));
        last_k_ = frame.k;
        if (auto* s = std::get_if<Searching>(&state_)) return search(*s, frame);
        return track(std::get<Tracking>(state_), frame);
    }

private:
    ScanOutput search(Searching& s, const MeasurementFrame& frame) {
        ScanOutput out{frame.k, {}, {}, TrackEvent::none, {}};
        s.history.push_back(frame);
        // keep enough scans for the escalation rounds in resolve_multiple
        const ScanIndex oldest = frame.k - (cfg_.window + cfg_.max_escalations) + 1;
        std::erase_if(s.history, [oldest](const MeasurementFrame& f) { return f.k < oldest; });

        auto cluster = cluster_window(s.history, cfg_.initiation());
        if (!cluster) return out;

        Tracking t;
        t.trajectory = seed_trajectory(*cluster, cfg_.gamma);
        t.buffer.accepted = cluster->members;
        t.buffer.miss_streak = static_cast<int>(frame.k - cluster->last_scan());
        for (ScanIndex k = cluster->first_scan(); k < frame.k; ++k)
            out.backfill.emplace_back(k, evaluate(t.trajectory, static_cast<double>(k)));
        out.estimate = evaluate(t.trajectory, static_cast<double>(frame.k));
        out.velocity = velocity(t.trajectory, static_cast<double>(frame.k));
        out.event = TrackEvent::confirmed;
        state_ = std::move(t);
        return out;
    }

    ScanOutput track(Tracking& t, const MeasurementFrame& frame) {
        ScanOutput out{frame.k, {}, {}, TrackEvent::none, {}};
        auto upd = update_track(std::move(t.buffer), std::move(t.trajectory), frame, cfg_.maintenance());
        if (upd.buffer.miss_streak > cfg_.max_misses) {
            // restart detection from scratch; nothing carries over
            out.event = TrackEvent::terminated;
            state_ = Searching{};
            return out;
        }
        t.buffer = std::move(upd.buffer);
        t.trajectory = std::move(upd.trajectory);
        out.estimate = evaluate(t.trajectory, static_cast<double>(frame.k));
        out.velocity = velocity(t.trajectory, static_cast<double>(frame.k));
        out.event = upd.accepted ? TrackEvent::none : TrackEvent::missed;
        return out;
    }

    TrackerConfig cfg_;
    std::optional<ScanIndex> last_k_;
    std::variant<Searching, Tracking> state_;
};

/// Runs a fresh tracker over a full scenario.
[[nodiscard]] inline std::vector<ScanOutput> run_stream(std::span<const MeasurementFrame> frames,
                                                        const TrackerConfig& cfg = {}) {
    Tracker tracker(cfg);
    std::vector<ScanOutput> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(tracker.step(f));
    return out;
}

[[nodiscard]] inline const char* to_string(TrackEvent e) {
    switch (e) {
        case TrackEvent::none: return "none";
        case TrackEvent::confirmed: return "confirmed";
        case TrackEvent::terminated: return "terminated";
        case TrackEvent::missed: return "missed";
    }
    return "none";
}

}  // namespace tfot
