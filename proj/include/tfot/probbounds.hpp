#pragma once

#include "tfot/core.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tfot {

/// Chance that one uniform clutter point lands within d_o of a given point,
/// ignoring the region boundary.
[[nodiscard]] inline double near_prob(double d_o, double area) {
    if (d_o < 0.0 || !(area > 0.0)) throw DomainError("need d_o >= 0 and a positive area");
    const double disk = std::numbers::pi * d_o * d_o;
    if (disk > area) throw DomainError("neighbourhood larger than the surveillance area");
    return disk / area;
}

/// Chance that all r_c clutter points stay further than d_o: (1 - p1)^r_c.
[[nodiscard]] inline double all_far_prob(double p1, double r_c) {
    if (!(p1 >= 0.0 && p1 <= 1.0)) throw DomainError("p1 must lie in [0, 1]");
    if (r_c < 0.0) throw DomainError("clutter rate must be non-negative");
    return std::pow(1.0 - p1, r_c);
}

/// Largest clutter rate keeping a d_o neighbourhood clutter-free with
/// confidence p_r: log(p_r) / log(1 - p1).
[[nodiscard]] inline double max_clutter_rate_p1(double p1, double p_r) {
    if (!(p_r > 0.0 && p_r < 1.0)) throw DomainError("p_r must lie in (0, 1)");
    if (!(p1 > 0.0 && p1 < 1.0)) throw DomainError("p1 must lie in (0, 1)");
    return std::log(p_r) / std::log1p(-p1);
}

[[nodiscard]] inline double max_clutter_rate(double d_o, double area, double p_r) {
    const double p1 = near_prob(d_o, area);
    if (!(p1 > 0.0 && p1 < 1.0)) throw DomainError("degenerate clutter geometry");
    return max_clutter_rate_p1(p1, p_r);
}

/// Pr[(a-b)^T R^-1 (a-b) <= tau^2] for a D-dimensional Gaussian difference:
/// the chi-squared(D) CDF at tau^2, i.e. the regularized lower incomplete
/// gamma function P(D/2, tau^2/2).
[[nodiscard]] inline double gaussian_confidence(int dim, double tau) {
    if (dim < 1) throw DomainError("dimension must be >= 1");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (std::isinf(tau)) return 1.0;
    return boost::math::gamma_p(0.5 * dim, 0.5 * tau * tau);
}

/// Scalar Chebyshev bound Pr[|c| >= a] <= variance / a^2, clamped to 1.
[[nodiscard]] inline double chebyshev_bound(double variance, double a = 1.0) {
    if (variance < 0.0) throw DomainError("variance must be non-negative");
    if (!(a > 0.0)) throw DomainError("threshold must be positive");
    return std::min(1.0, variance / (a * a));
}

/// Vysochanskii-Petunin lower bound 1 - 4D / (9 tau^2) on the coverage of a
/// unimodal distribution, clamped to [0, 1].
[[nodiscard]] inline double vp_bound(int dim, double tau) {
    if (dim < 1) throw DomainError("dimension must be >= 1");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    return std::clamp(1.0 - 4.0 * dim / (9.0 * tau * tau), 0.0, 1.0);
}

/// Per-scan probability that no clutter falls inside the clustering
/// neighbourhood of radius d_o.
[[nodiscard]] inline double clutter_free_prob(double d_o, double area, double r_c) {
    return all_far_prob(near_prob(d_o, area), r_c);
}

/// A clutter neighbourhood problem: radius d_o in an area, clutter rate r_c,
/// required confidence p_r.
struct ClutterGeometry {
    double d_o = 0.0;
    double area = 0.0;
    double r_c = 0.0;
    double p_r = 0.95;

    void validate() const {
        if (!(d_o > 0.0) || !(area > 0.0)) throw DomainError("need d_o > 0 and a positive area");
        if (!(std::numbers::pi * d_o * d_o < area)) throw DomainError("neighbourhood must be smaller than the area");
        if (!(p_r > 0.0 && p_r < 1.0)) throw DomainError("p_r must lie in (0, 1)");
        if (r_c < 0.0) throw DomainError("clutter rate must be non-negative");
    }
    [[nodiscard]] double p1() const { return near_prob(d_o, area); }
    /// Confidence actually achieved at r_c.
    [[nodiscard]] double achieved_p_r() const { return clutter_free_prob(d_o, area, r_c); }
    [[nodiscard]] double rate_bound() const { return max_clutter_rate(d_o, area, p_r); }
    [[nodiscard]] bool satisfied() const { return r_c <= rate_bound(); }
};

}  // namespace tfot
