#pragma once

#include "tfot/core.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace tfot {

/// Additive Gaussian noise on a direct position measurement.
struct PositionNoiseModel {
    Cov2 covariance = Cov2::diag(100.0, 100.0);
};

/// Independent Gaussian noise on range (m) and bearing (rad).
struct RangeBearingModel {
    double sigma_r = 10.0;
    double sigma_theta = std::numbers::pi / 90.0;
};

struct RangeBearing {
    double r = 0.0;
    double theta = 0.0;
};

/// Wraps an angle into (-pi, pi].
[[nodiscard]] inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(a + std::numbers::pi, two_pi);
    if (w <= 0.0) w += two_pi;
    return w - std::numbers::pi;
}

/// Draws truth + N(0, cov). A zero covariance returns truth exactly.
template <std::uniform_random_bit_generator Rng>
[[nodiscard]] Position2 measure_position(Position2 truth, const PositionNoiseModel& model, Rng& rng) {
    const Cov2& c = model.covariance;
    // 2x2 lower Cholesky, tolerant of PSD (zero-variance) axes
    const double l11 = std::sqrt(std::max(c.xx, 0.0));
    const double l21 = l11 > 0.0 ? c.yx / l11 : 0.0;
    const double l22 = std::sqrt(std::max(c.yy - l21 * l21, 0.0));
    std::normal_distribution<double> n01(0.0, 1.0);
    const double z1 = n01(rng);
    const double z2 = n01(rng);
    return {truth.x + l11 * z1, truth.y + l21 * z1 + l22 * z2};
}

/// Noise-free polar coordinates, bearing measured from the +x axis.
[[nodiscard]] inline RangeBearing to_range_bearing(Position2 p) {
    if (p.x == 0.0 && p.y == 0.0) throw DomainError("bearing undefined at the origin");
    return {p.norm(), std::atan2(p.y, p.x)};
}

template <std::uniform_random_bit_generator Rng>
[[nodiscard]] RangeBearing measure_range_bearing(Position2 truth, const RangeBearingModel& model, Rng& rng) {
    const RangeBearing exact = to_range_bearing(truth);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double nr = n01(rng);
    const double nt = n01(rng);
    return {exact.r + model.sigma_r * nr, wrap_angle(exact.theta + model.sigma_theta * nt)};
}

/// Measurement function of the range-bearing sensor evaluated at a position,
/// with zero-mean noise.
[[nodiscard]] inline RangeBearing pseudo_measurement(Position2 predicted, const RangeBearingModel&) {
    return to_range_bearing(predicted);
}

/// Identity measurement function of the position sensor.
[[nodiscard]] inline Position2 pseudo_measurement(Position2 predicted, const PositionNoiseModel&) {
    return predicted;
}

[[nodiscard]] inline Position2 convert_to_position(double r, double theta) {
    if (r < 0.0) throw DomainError("range must be non-negative");
    return {r * std::cos(theta), r * std::sin(theta)};
}

/// Multiplicative factor exp(+sigma_theta^2 / 2) that undoes the
/// exp(-sigma_theta^2 / 2) shrinkage of E[cos(theta + v)].
[[nodiscard]] inline double debias_factor(double sigma_theta) {
    if (sigma_theta < 0.0) throw DomainError("bearing standard deviation must be non-negative");
    return std::exp(0.5 * sigma_theta * sigma_theta);
}

/// First-order covariance J diag(sr^2, st^2) J^T of the converted position.
[[nodiscard]] inline Cov2 converted_covariance(double r, double theta, const RangeBearingModel& model) {
    if (!(r > 0.0)) throw DomainError("converted covariance needs a positive range");
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const double vr = model.sigma_r * model.sigma_r;
    const double vt = model.sigma_theta * model.sigma_theta * r * r;
    const double xx = c * c * vr + s * s * vt;
    const double yy = s * s * vr + c * c * vt;
    const double xy = c * s * (vr - vt);
    return Cov2::symmetric(xx, xy, yy);
}

/// A range-bearing measurement in the position domain, ready for clustering
/// and fitting.
[[nodiscard]] inline std::pair<Position2, Cov2> convert_measurement(const RangeBearing& z,
                                                                    const RangeBearingModel& model,
                                                                    bool debias = true) {
    const double scale = debias ? debias_factor(model.sigma_theta) : 1.0;
    const double r = std::max(z.r, 0.0);
    const Position2 p = scale * convert_to_position(r, z.theta);
    // keep the covariance invertible for returns folded onto the sensor
    const double r_cov = std::max(r, model.sigma_r);
    return {p, converted_covariance(r_cov, z.theta, model)};
}

}  // namespace tfot
