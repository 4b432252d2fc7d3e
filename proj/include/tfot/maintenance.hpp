#pragma once

#include "tfot/core.hpp"
#include "tfot/polyfit.hpp"

#include <algorithm>
#include <optional>
#include <vector>

namespace tfot {

struct MaintenanceConfig {
    /// Mahalanobis gate separating a detection from a miss.
    double tau2 = 5.0;
    /// Fitting window: accepted measurements are kept over [max(1, k-T), k].
    int window = 10;
    int gamma = 1;

    void validate() const {
        if (!(tau2 > 0.0)) throw DomainError("tau2 must be positive");
        if (window < 1) throw DomainError("window length must be >= 1");
        if (gamma < 1) throw DomainError("gamma must be >= 1");
    }
};

/// Measurements accepted as target-originated inside the current window.
struct TrackBuffer {
    std::vector<Detection> accepted;
    int miss_streak = 0;
};

struct Candidate {
    Position2 position;
    Cov2 cov;
    std::size_t index = 0;
};

enum class GateResult { accepted, miss };

struct TrackUpdate {
    TrackBuffer buffer;
    PolyTrajectory trajectory;
    bool accepted = false;
    /// Set when a refit was impossible and the previous coefficients were kept.
    bool degraded = false;
};

/// First scan of the sliding window ending at k.
[[nodiscard]] constexpr ScanIndex window_start(ScanIndex k, int window) {
    return std::max<ScanIndex>(1, k - window);
}

[[nodiscard]] inline Position2 predict_position(const PolyTrajectory& traj, ScanIndex k_next) {
    return evaluate(traj, static_cast<double>(k_next));
}

/// Nearest frame point to the pseudo measurement in Euclidean distance.
/// Ties go to the lowest index.
[[nodiscard]] inline std::optional<Candidate> nearest_candidate(const MeasurementFrame& frame, Position2 pseudo) {
    std::optional<Candidate> best;
    double best_d = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        const double d = (frame.points[i] - pseudo).squared_norm();
        if (!best || d < best_d) {
            best = Candidate{frame.points[i], frame.cov(i), i};
            best_d = d;
        }
    }
    return best;
}

/// Accepts the candidate iff its squared Mahalanobis distance to the pseudo
/// measurement, under the candidate's own noise covariance, is within tau2^2.
[[nodiscard]] inline GateResult gate(const std::optional<Candidate>& candidate, Position2 pseudo, double tau2) {
    if (!candidate) return GateResult::miss;
    return mahalanobis_sq(candidate->position, pseudo, candidate->cov) <= tau2 * tau2 ? GateResult::accepted
                                                                                       : GateResult::miss;
}

/// One maintenance scan: predict, pick the nearest point, gate, then slide
/// the window and refit on acceptance. A miss coasts on the previous fit.
[[nodiscard]] inline TrackUpdate update_track(TrackBuffer buffer, PolyTrajectory traj, const MeasurementFrame& frame,
                                              const MaintenanceConfig& cfg) {
    if (!buffer.accepted.empty() && frame.k <= buffer.accepted.back().k)
        throw ProtocolError("frame scan is not after the last accepted scan");

    const Position2 pseudo = predict_position(traj, frame.k);
    const auto candidate = nearest_candidate(frame, pseudo);
    const bool accepted = gate(candidate, pseudo, cfg.tau2) == GateResult::accepted;

    const ScanIndex start = window_start(frame.k, cfg.window);
    std::erase_if(buffer.accepted, [start](const Detection& d) { return d.k < start; });

    TrackUpdate out{std::move(buffer), std::move(traj), accepted, false};
    if (!accepted) {
        ++out.buffer.miss_streak;
        return out;
    }

    out.buffer.miss_streak = 0;
    out.buffer.accepted.push_back({frame.k, candidate->position, candidate->cov});
    if (out.buffer.accepted.size() < static_cast<std::size_t>(cfg.gamma) + 1) {
        out.degraded = true;
        return out;
    }
    try {
        out.trajectory = fit_trajectory(out.buffer.accepted, cfg.gamma, start, start, frame.k);
    } catch (const IllConditionedError&) {
        out.degraded = true;
    } catch (const InsufficientDataError&) {
        out.degraded = true;
    }
    return out;
}

}  // namespace tfot
