#pragma once

#include "tfot/core.hpp"
#include "tfot/polyfit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace tfot {

/// Parameters of density-based track initiation.
struct InitiationConfig {
    /// Mahalanobis neighbourhood radius (unitless).
    double tau1 = 3.0;
    /// Minimum confirmed cluster size Ts.
    int min_cluster_size = 4;
    /// Clustering window length T in scans.
    int window = 10;
    int gamma = 1;
    /// When set, Ts is also checked against the expected detection count T*pD.
    std::optional<double> detection_probability;
    /// Cap on the Ts / window escalation rounds used to split rival clusters.
    int max_escalations = 5;

    void validate() const {
        if (!(tau1 > 0.0)) throw DomainError("tau1 must be positive");
        if (gamma < 1) throw DomainError("gamma must be >= 1");
        if (window < 1) throw DomainError("window length must be >= 1");
        if (min_cluster_size < gamma + 1)
            throw DomainError("Ts must be at least gamma + 1");
        if (min_cluster_size > window) throw DomainError("Ts must not exceed the window length");
        if (max_escalations < 0) throw DomainError("max_escalations must be non-negative");
    }

    /// Upper end of the admissible Ts range, Ts <= T * pD. True when no pD is known.
    [[nodiscard]] bool within_detection_bound() const {
        if (!detection_probability) return true;
        return min_cluster_size <= static_cast<double>(window) * *detection_probability + 1e-12;
    }
};

enum class Hypothesis {
    clutter,      ///< at least one measurement is clutter (H0)
    same_target,  ///< both measurements come from the target (H1)
};

/// Measurements confirmed as one target, at most one per scan, ordered by scan.
struct Cluster {
    std::vector<Detection> members;

    [[nodiscard]] std::size_t size() const { return members.size(); }
    [[nodiscard]] ScanIndex first_scan() const { return members.front().k; }
    [[nodiscard]] ScanIndex last_scan() const { return members.back().k; }
};

/// H1 iff the squared Mahalanobis distance is within tau1^2 (boundary inclusive).
[[nodiscard]] inline Hypothesis neighbor_test(Position2 yi, Position2 yj, const Cov2& sigma, double tau1) {
    return mahalanobis_sq(yi, yj, sigma) <= tau1 * tau1 ? Hypothesis::same_target : Hypothesis::clutter;
}

/// Covariance used to compare two measurements whose covariances differ.
[[nodiscard]] inline Cov2 pair_covariance(const Cov2& a, const Cov2& b) {
    return a == b ? a : 0.5 * (a + b);
}

/// Euclidean radius of the tau1 neighbourhood along the noisiest axis.
[[nodiscard]] inline double clustering_radius(double tau1, const Cov2& sigma) {
    return tau1 * std::sqrt(std::max(sigma.eigenvalues()[0], 0.0));
}

namespace detail {

struct DisjointSets {
    std::vector<std::size_t> parent;

    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

inline std::vector<Detection> collect(std::span<const MeasurementFrame> frames, ScanIndex first, ScanIndex last) {
    std::vector<Detection> out;
    for (const auto& f : frames) {
        if (f.k < first || f.k > last) continue;
        for (std::size_t i = 0; i < f.size(); ++i) out.push_back(f.detection(i));
    }
    return out;
}

}  // namespace detail

/// Connected components of the neighbour graph over `points`, where two
/// points are linked iff they come from different scans and pass
/// neighbor_test. Each component lists point indices in ascending order;
/// components are ordered by their smallest index.
[[nodiscard]] inline std::vector<std::vector<std::size_t>> neighbor_components(std::span<const Detection> points,
                                                                              double tau1) {
    detail::DisjointSets sets(points.size());
    for (std::size_t i = 0; i < points.size(); ++i)
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (points[i].k == points[j].k) continue;
            const Cov2 sigma = pair_covariance(points[i].cov, points[j].cov);
            if (neighbor_test(points[i].position, points[j].position, sigma, tau1) == Hypothesis::same_target)
                sets.unite(i, j);
        }
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < points.size(); ++i) groups[sets.find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    out.reserve(groups.size());
    for (auto& [root, members] : groups) out.push_back(std::move(members));
    return out;
}

/// Enforces one member per scan on a component: of several points sharing a
/// scan, the one nearest (Mahalanobis, own covariance) to the component
/// centroid is kept.
[[nodiscard]] inline Cluster enforce_point_target(std::span<const Detection> points,
                                                  std::span<const std::size_t> component) {
    Vec2 centroid;
    for (std::size_t i : component) centroid = centroid + points[i].position;
    centroid = (1.0 / static_cast<double>(component.size())) * centroid;

    std::map<ScanIndex, std::pair<double, std::size_t>> best;
    for (std::size_t i : component) {
        const double d = mahalanobis_sq(points[i].position, centroid, points[i].cov);
        auto [it, inserted] = best.try_emplace(points[i].k, d, i);
        if (!inserted && d < it->second.first) it->second = {d, i};
    }
    Cluster c;
    c.members.reserve(best.size());
    for (const auto& [k, entry] : best) c.members.push_back(points[entry.second]);
    return c;
}

/// All clusters of at least `min_size` members over scans [first, last].
[[nodiscard]] inline std::vector<Cluster> cluster_candidates(std::span<const MeasurementFrame> frames,
                                                             ScanIndex first, ScanIndex last, double tau1,
                                                             int min_size) {
    const auto points = detail::collect(frames, first, last);
    std::vector<Cluster> out;
    for (const auto& comp : neighbor_components(points, tau1)) {
        if (comp.size() < static_cast<std::size_t>(min_size)) continue;
        Cluster c = enforce_point_target(points, comp);
        if (c.size() >= static_cast<std::size_t>(min_size)) out.push_back(std::move(c));
    }
    return out;
}

/// Splits rival candidates by raising Ts and lengthening the window one scan
/// per round until at most one cluster survives. Returns nothing when the
/// rivals persist through every round, or when Ts would exceed the window the
/// available history can support.
[[nodiscard]] inline std::optional<Cluster> resolve_multiple(std::vector<Cluster> candidates,
                                                            std::span<const MeasurementFrame> history,
                                                            const InitiationConfig& cfg) {
    if (candidates.size() == 1) return std::move(candidates.front());
    if (candidates.empty() || history.empty()) return std::nullopt;

    const ScanIndex last = history.back().k;
    const ScanIndex earliest = std::max<ScanIndex>(history.front().k, 1);
    for (int round = 1; round <= cfg.max_escalations; ++round) {
        const int ts = cfg.min_cluster_size + round;
        const ScanIndex start = std::max(last - (cfg.window + round) + 1, earliest);
        if (ts > last - start + 1) return std::nullopt;
        candidates = cluster_candidates(history, start, last, cfg.tau1, ts);
        if (candidates.empty()) return std::nullopt;
        if (candidates.size() == 1) return std::move(candidates.front());
    }
    return std::nullopt;
}

/// Density-based detection over the last T scans of `history`. History may
/// extend further back; the extra scans are used only when rival clusters
/// have to be separated.
[[nodiscard]] inline std::optional<Cluster> cluster_window(std::span<const MeasurementFrame> history,
                                                          const InitiationConfig& cfg) {
    if (history.empty()) return std::nullopt;
    const ScanIndex last = history.back().k;
    const ScanIndex first = last - cfg.window + 1;
    auto candidates = cluster_candidates(history, first, last, cfg.tau1, cfg.min_cluster_size);
    if (candidates.empty()) return std::nullopt;
    return resolve_multiple(std::move(candidates), history, cfg);
}

/// Probability that clutter near a given point shows up in at least Ts of T
/// scans, when each scan is clutter-free around it with probability p_r.
[[nodiscard]] inline double false_alarm_prob(int ts, int t, double p_r) {
    if (!(p_r >= 0.0 && p_r <= 1.0)) throw DomainError("p_r must lie in [0, 1]");
    if (t < 0 || ts < 0 || ts > t) throw DomainError("need 0 <= Ts <= T");
    // pFA(Ts) = C(T,Ts) (1-p_r)^Ts p_r^(T-Ts) + pFA(Ts+1), pFA(T+1) = 0
    double tail = 0.0;
    for (int s = t; s >= ts; --s) {
        double binom = 1.0;
        for (int i = 1; i <= s; ++i) binom = binom * static_cast<double>(t - s + i) / static_cast<double>(i);
        tail += binom * std::pow(1.0 - p_r, s) * std::pow(p_r, t - s);
    }
    return std::min(tail, 1.0);
}

/// Initial trajectory: weighted LS over the cluster, epoch at its first scan.
[[nodiscard]] inline PolyTrajectory seed_trajectory(const Cluster& cluster, int gamma) {
    if (cluster.members.empty()) throw InsufficientDataError("empty cluster");
    return fit_trajectory(cluster.members, gamma, cluster.first_scan(), cluster.first_scan(),
                          cluster.last_scan());
}

}  // namespace tfot
