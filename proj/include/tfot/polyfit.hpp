#pragma once

#include "tfot/core.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace tfot {

/// Normal matrix of a weighted polynomial fit is too ill-conditioned to solve.
class SingularFitError : public IllConditionedError {
public:
    using IllConditionedError::IllConditionedError;
};

/// Per-dimension polynomial trajectory function of time.
///
/// Coefficients are stored relative to `epoch`: dimension d evaluates to
/// sum_j coeffs[d][j] * (t - epoch)^j. Keeping the epoch at the window start
/// keeps the Vandermonde system well conditioned late in a scenario.
struct PolyTrajectory {
    int gamma = 1;
    ScanIndex epoch = 0;
    std::array<std::vector<double>, 2> coeffs;
    /// (gamma+1)x(gamma+1) covariance of each dimension's coefficients.
    std::array<Matrix, 2> coeff_cov;
    ScanIndex window_start = 0;
    ScanIndex window_end = 0;
};

/// One scalar observation of a single position dimension.
struct FitSample {
    ScanIndex t = 0;
    double value = 0.0;
    /// Inverse variance, m^-2.
    double weight = 1.0;
};

/// Pins coefficient `order` (in the epoch frame) to `value`.
struct CoefficientConstraint {
    int order = 0;
    double value = 0.0;
};

struct WlsResult {
    std::vector<double> coeffs;
    Matrix cov;
};

/// Row i is [1, (t_i - epoch), ..., (t_i - epoch)^gamma].
[[nodiscard]] inline Matrix design_matrix(std::span<const ScanIndex> times, int gamma, ScanIndex epoch) {
    if (gamma < 0) throw DomainError("polynomial order must be non-negative");
    const auto cols = static_cast<std::size_t>(gamma) + 1;
    Matrix a(times.size(), cols);
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double dt = static_cast<double>(times[i] - epoch);
        double p = 1.0;
        for (std::size_t j = 0; j < cols; ++j) {
            a(i, j) = p;
            p *= dt;
        }
    }
    return a;
}

/// Weighted least-squares polynomial fit.
///
/// Returns the coefficients (A^T W A)^-1 A^T W y and their covariance
/// (A^T W A)^-1 with W = diag(weight). Constrained coefficients are moved to
/// the right-hand side; their covariance rows and columns are zero.
[[nodiscard]] inline WlsResult wls_fit(std::span<const FitSample> samples, int gamma, ScanIndex epoch,
                                       std::span<const CoefficientConstraint> fixed = {}) {
    if (gamma < 1) throw DomainError("polynomial order must be >= 1");
    const auto n = static_cast<std::size_t>(gamma) + 1;

    std::vector<bool> is_fixed(n, false);
    std::vector<double> fixed_value(n, 0.0);
    for (const auto& c : fixed) {
        if (c.order < 0 || static_cast<std::size_t>(c.order) >= n)
            throw DomainError("constraint order outside 0..gamma");
        is_fixed[c.order] = true;
        fixed_value[c.order] = c.value;
    }
    std::vector<std::size_t> free_cols;
    for (std::size_t j = 0; j < n; ++j)
        if (!is_fixed[j]) free_cols.push_back(j);

    std::set<ScanIndex> distinct;
    for (const auto& s : samples) {
        if (!(s.weight > 0.0)) throw DomainError("sample weight must be positive");
        distinct.insert(s.t);
    }
    if (distinct.size() < free_cols.size())
        throw InsufficientDataError("need " + std::to_string(free_cols.size()) +
                                    " distinct sample times, got " + std::to_string(distinct.size()));

    WlsResult out{std::vector<double>(fixed_value), Matrix(n, n)};
    if (free_cols.empty()) return out;

    const std::size_t m = free_cols.size();
    Matrix normal(m, m);
    std::vector<double> rhs(m, 0.0);
    std::vector<double> powers(n);
    for (const auto& s : samples) {
        const double dt = static_cast<double>(s.t - epoch);
        double p = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            powers[j] = p;
            p *= dt;
        }
        double residual = s.value;
        for (std::size_t j = 0; j < n; ++j)
            if (is_fixed[j]) residual -= fixed_value[j] * powers[j];
        for (std::size_t a = 0; a < m; ++a) {
            const double wa = s.weight * powers[free_cols[a]];
            rhs[a] += wa * residual;
            for (std::size_t b = 0; b < m; ++b) normal(a, b) += wa * powers[free_cols[b]];
        }
    }

    Matrix normal_inv;
    std::vector<double> sol;
    try {
        normal_inv = inverse_spd(normal);
        sol = solve_small_spd(normal, rhs);
    } catch (const IllConditionedError& e) {
        throw SingularFitError(std::string("singular polynomial fit: ") + e.what());
    }
    for (std::size_t a = 0; a < m; ++a) {
        out.coeffs[free_cols[a]] = sol[a];
        for (std::size_t b = 0; b < m; ++b) out.cov(free_cols[a], free_cols[b]) = normal_inv(a, b);
    }
    return out;
}

/// Horner evaluation of sum_j c_j dt^j.
[[nodiscard]] inline double polynomial_value(std::span<const double> coeffs, double dt) {
    double v = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) v = v * dt + *it;
    return v;
}

/// Value of the `order`-th time derivative of sum_j c_j dt^j.
[[nodiscard]] inline double polynomial_derivative(std::span<const double> coeffs, double dt, int order) {
    double v = 0.0;
    for (std::size_t j = coeffs.size(); j-- > static_cast<std::size_t>(order);) {
        double falling = 1.0;
        for (int r = 0; r < order; ++r) falling *= static_cast<double>(j - static_cast<std::size_t>(r));
        v = v * dt + falling * coeffs[j];
    }
    return v;
}

/// Position at real scan time t. Filtering at the window end, prediction beyond.
[[nodiscard]] inline Position2 evaluate(const PolyTrajectory& traj, double t) {
    const double dt = t - static_cast<double>(traj.epoch);
    return {polynomial_value(traj.coeffs[0], dt), polynomial_value(traj.coeffs[1], dt)};
}

[[nodiscard]] inline Vec2 velocity(const PolyTrajectory& traj, double t) {
    const double dt = t - static_cast<double>(traj.epoch);
    return {polynomial_derivative(traj.coeffs[0], dt, 1), polynomial_derivative(traj.coeffs[1], dt, 1)};
}

[[nodiscard]] inline Vec2 acceleration(const PolyTrajectory& traj, double t) {
    const double dt = t - static_cast<double>(traj.epoch);
    return {polynomial_derivative(traj.coeffs[0], dt, 2), polynomial_derivative(traj.coeffs[1], dt, 2)};
}

/// Weighted squared residual sum_i w_i (y_i - F(t_i))^2 of one dimension.
[[nodiscard]] inline double fit_cost(std::span<const double> coeffs, ScanIndex epoch,
                                     std::span<const FitSample> samples) {
    double cost = 0.0;
    for (const auto& s : samples) {
        const double r = s.value - polynomial_value(coeffs, static_cast<double>(s.t - epoch));
        cost += s.weight * r * r;
    }
    return cost;
}

[[nodiscard]] inline double fit_cost(const PolyTrajectory& traj, std::size_t dim,
                                     std::span<const FitSample> samples) {
    return fit_cost(traj.coeffs.at(dim), traj.epoch, samples);
}

/// Re-expresses epoch-relative coefficients about a new origin by binomial
/// expansion. `shift` is new_origin - old_origin.
[[nodiscard]] inline std::vector<double> shift_coefficients(std::span<const double> coeffs, double shift) {
    // p(t) = sum_j c_j (t - e)^j, rewritten in powers of (t - e - shift)
    const std::size_t n = coeffs.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double binom = 1.0;
        for (std::size_t m = 0; m <= j; ++m) {
            if (m > 0) binom = binom * static_cast<double>(j - m + 1) / static_cast<double>(m);
            out[m] += coeffs[j] * binom * std::pow(shift, static_cast<double>(j - m));
        }
    }
    return out;
}

/// Coefficients in absolute time, F(t) = sum_j a_j t^j, for reporting.
[[nodiscard]] inline std::array<std::vector<double>, 2> absolute_coefficients(const PolyTrajectory& traj) {
    const double shift = -static_cast<double>(traj.epoch);
    return {shift_coefficients(traj.coeffs[0], shift), shift_coefficients(traj.coeffs[1], shift)};
}

/// Fits both dimensions independently from position detections, weighting
/// each dimension by the inverse of its own noise variance. Cross-dimension
/// correlation is ignored.
[[nodiscard]] inline PolyTrajectory fit_trajectory(std::span<const Detection> points, int gamma, ScanIndex epoch,
                                                   ScanIndex window_start, ScanIndex window_end) {
    std::vector<FitSample> xs;
    std::vector<FitSample> ys;
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& p : points) {
        if (!(p.cov.xx > 0.0) || !(p.cov.yy > 0.0))
            throw IllConditionedError("measurement variance must be positive");
        xs.push_back({p.k, p.position.x, 1.0 / p.cov.xx});
        ys.push_back({p.k, p.position.y, 1.0 / p.cov.yy});
    }
    auto fx = wls_fit(xs, gamma, epoch);
    auto fy = wls_fit(ys, gamma, epoch);
    PolyTrajectory traj;
    traj.gamma = gamma;
    traj.epoch = epoch;
    traj.coeffs = {std::move(fx.coeffs), std::move(fy.coeffs)};
    traj.coeff_cov = {std::move(fx.cov), std::move(fy.cov)};
    traj.window_start = window_start;
    traj.window_end = window_end;
    return traj;
}

}  // namespace tfot
