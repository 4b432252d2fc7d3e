#pragma once

#include "tfot/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace tfot::test {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline double gauss(Rng& rng, double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng); }

inline Position2 random_point(Rng& rng, double half_width) {
    return {uniform(rng, -half_width, half_width), uniform(rng, -half_width, half_width)};
}

/// Random SPD covariance with eigenvalues in [lo, hi] and random orientation.
inline Cov2 random_spd(Rng& rng, double lo = 1.0, double hi = 100.0) {
    const double a = uniform(rng, lo, hi);
    const double b = uniform(rng, lo, hi);
    const double t = uniform(rng, 0.0, 3.141592653589793);
    const double c = std::cos(t);
    const double s = std::sin(t);
    return Cov2::symmetric(a * c * c + b * s * s, (a - b) * c * s, a * s * s + b * c * c);
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace tfot::test
