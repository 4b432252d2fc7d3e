#pragma once

#include "tfot/core.hpp"
#include "tfot/lifecycle.hpp"
#include "tfot/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace tfot {

struct OspaConfig {
    /// Cut-off distance in meters.
    double c = 1000.0;
    /// Order.
    double p = 2.0;

    void validate() const {
        if (!(c > 0.0)) throw DomainError("OSPA cut-off must be positive");
        if (!(p >= 1.0)) throw DomainError("OSPA order must be >= 1");
    }
};

/// OSPA distance with its localization and cardinality parts, each already
/// normalized by the larger set size and raised to 1/p.
struct OspaResult {
    double value = 0.0;
    double localization = 0.0;
    double cardinality = 0.0;
};

inline constexpr std::size_t kMaxOspaSetSize = 16;

/// OSPA between two finite point sets. Two empty sets are at distance 0.
///
/// The optimal assignment is found by dynamic programming over subsets of the
/// larger set, which is exact and limits set sizes to kMaxOspaSetSize.
[[nodiscard]] inline OspaResult ospa_detail(std::span<const Position2> est, std::span<const Position2> truth,
                                            const OspaConfig& cfg = {}) {
    cfg.validate();
    std::span<const Position2> small = est;
    std::span<const Position2> large = truth;
    if (small.size() > large.size()) std::swap(small, large);
    const std::size_t m = small.size();
    const std::size_t n = large.size();
    if (n == 0) return {};
    if (n > kMaxOspaSetSize) throw DomainError("OSPA set too large for exact assignment");

    auto cost = [&](std::size_t i, std::size_t j) {
        return std::pow(std::min((small[i] - large[j]).norm(), cfg.c), cfg.p);
    };
    // best[mask]: cheapest way to assign the first popcount(mask) small points to mask
    const std::size_t full = std::size_t{1} << n;
    std::vector<double> best(full, std::numeric_limits<double>::infinity());
    best[0] = 0.0;
    double d_loc = m == 0 ? 0.0 : std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < full; ++mask) {
        const double b = best[mask];
        if (!std::isfinite(b)) continue;
        const auto used = static_cast<std::size_t>(std::popcount(mask));
        if (used == m) {
            d_loc = std::min(d_loc, b);
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t bit = std::size_t{1} << j;
            if (mask & bit) continue;
            best[mask | bit] = std::min(best[mask | bit], b + cost(used, j));
        }
    }
    const double d_card = std::pow(cfg.c, cfg.p) * static_cast<double>(n - m);
    const double nn = static_cast<double>(n);
    return {std::pow((d_loc + d_card) / nn, 1.0 / cfg.p), std::pow(d_loc / nn, 1.0 / cfg.p),
            std::pow(d_card / nn, 1.0 / cfg.p)};
}

[[nodiscard]] inline double ospa(std::span<const Position2> est, std::span<const Position2> truth,
                                 const OspaConfig& cfg = {}) {
    return ospa_detail(est, truth, cfg).value;
}

/// Per-scan OSPA of one run, or the pointwise mean over several runs.
struct OspaSeries {
    std::vector<ScanIndex> k;
    std::vector<double> ospa;
    std::vector<double> localization;
    std::vector<double> cardinality;

    [[nodiscard]] std::size_t size() const { return k.size(); }

    /// Mean OSPA over scans first..last inclusive.
    [[nodiscard]] double mean_over(ScanIndex first, ScanIndex last) const {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < k.size(); ++i)
            if (k[i] >= first && k[i] <= last) {
                sum += ospa[i];
                ++n;
            }
        if (n == 0) throw ProtocolError("no scans in the requested range");
        return sum / static_cast<double>(n);
    }
};

/// OSPA between the tracker's estimate and the live truth at every scan.
[[nodiscard]] inline OspaSeries series(std::span<const ScanOutput> outputs, const GroundTruth& truth,
                                       const OspaConfig& cfg = {}) {
    if (static_cast<ScanIndex>(outputs.size()) != truth.duration())
        throw ProtocolError("tracker output and truth cover different scan ranges");
    OspaSeries s;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const ScanIndex k = static_cast<ScanIndex>(i) + 1;
        if (outputs[i].k != k) throw ProtocolError("tracker output is not aligned with truth scans");
        std::vector<Position2> est;
        std::vector<Position2> tru;
        if (outputs[i].estimate) est.push_back(*outputs[i].estimate);
        if (const auto& t = truth.at(k)) tru.push_back(t->position);
        const auto r = ospa_detail(est, tru, cfg);
        s.k.push_back(k);
        s.ospa.push_back(r.value);
        s.localization.push_back(r.localization);
        s.cardinality.push_back(r.cardinality);
    }
    return s;
}

/// Pointwise mean across runs, in run order.
[[nodiscard]] inline OspaSeries average(std::span<const OspaSeries> runs) {
    if (runs.empty()) throw ProtocolError("no series to average");
    OspaSeries out;
    out.k = runs.front().k;
    const std::size_t n = out.k.size();
    out.ospa.assign(n, 0.0);
    out.localization.assign(n, 0.0);
    out.cardinality.assign(n, 0.0);
    for (const auto& r : runs) {
        if (r.k != out.k) throw ProtocolError("series cover different scans");
        for (std::size_t i = 0; i < n; ++i) {
            out.ospa[i] += r.ospa[i];
            out.localization[i] += r.localization[i];
            out.cardinality[i] += r.cardinality[i];
        }
    }
    const double inv = 1.0 / static_cast<double>(runs.size());
    for (std::size_t i = 0; i < n; ++i) {
        out.ospa[i] *= inv;
        out.localization[i] *= inv;
        out.cardinality[i] *= inv;
    }
    return out;
}

struct TimingStats {
    double mean = 0.0;
    /// Nearest-rank 95th percentile.
    double p95 = 0.0;
};

[[nodiscard]] inline TimingStats timing_stats(std::span<const double> samples) {
    if (samples.empty()) throw DomainError("no timing samples");
    long double sum = 0.0L;
    for (double s : samples) sum += s;
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(sorted.size())));
    return {static_cast<double>(sum / static_cast<long double>(samples.size())),
            sorted[std::max<std::size_t>(rank, 1) - 1]};
}

}  // namespace tfot
