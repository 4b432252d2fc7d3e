#pragma once

#include "tfot/core.hpp"
#include "tfot/measmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <variant>
#include <vector>

namespace tfot {

// ---- Target states ----

/// Nearly-constant-velocity state [px, vx, py, vy].
struct CvState {
    double px = 0.0;
    double vx = 0.0;
    double py = 0.0;
    double vy = 0.0;
};

/// Coordinated-turn state [px, vx, py, vy, omega] with omega in rad/s.
struct CtState {
    double px = 0.0;
    double vx = 0.0;
    double py = 0.0;
    double vy = 0.0;
    double omega = 0.0;
};

/// x' = F x + G u, u ~ N(0, q_scale I2), with unit sampling period.
template <std::uniform_random_bit_generator Rng>
[[nodiscard]] CvState cv_step(const CvState& s, double q_scale, Rng& rng) {
    std::normal_distribution<double> n01(0.0, 1.0);
    const double sd = std::sqrt(std::max(q_scale, 0.0));
    const double ux = sd * n01(rng);
    const double uy = sd * n01(rng);
    return {s.px + s.vx + 0.5 * ux, s.vx + ux, s.py + s.vy + 0.5 * uy, s.vy + uy};
}

/// Deterministic part of the coordinated-turn transition F(omega) x.
[[nodiscard]] inline CtState ct_transition(const CtState& s) {
    const double w = s.omega;
    double sw_w = 1.0;  // sin(w)/w
    double cw_w = 0.0;  // (1 - cos(w))/w
    if (std::abs(w) >= 1e-9) {
        sw_w = std::sin(w) / w;
        cw_w = (1.0 - std::cos(w)) / w;
    }
    const double c = std::cos(w);
    const double sn = std::sin(w);
    return {s.px + sw_w * s.vx - cw_w * s.vy, c * s.vx - sn * s.vy, s.py + cw_w * s.vx + sw_w * s.vy,
            sn * s.vx + c * s.vy, s.omega};
}

/// Draw from N(F(omega) x, diag(I2 (x) G, sigma_u^2)), where
/// G = sigma_w^2 [[1/4, 1/2], [1/2, 1]] couples each axis' position and velocity.
template <std::uniform_random_bit_generator Rng>
[[nodiscard]] CtState ct_step(const CtState& s, double sigma_w, double sigma_u, Rng& rng) {
    CtState n = ct_transition(s);
    std::normal_distribution<double> n01(0.0, 1.0);
    const double ax = sigma_w * n01(rng);
    const double ay = sigma_w * n01(rng);
    const double du = sigma_u * n01(rng);
    n.px += 0.5 * ax;
    n.vx += ax;
    n.py += 0.5 * ay;
    n.vy += ay;
    n.omega += du;
    return n;
}

// ---- Ground truth ----

struct TruthState {
    Position2 position;
    Vec2 velocity;
    std::optional<double> turn_rate;
};

/// Truth for scans 1..duration; empty outside target lives.
struct GroundTruth {
    std::vector<std::optional<TruthState>> states;

    [[nodiscard]] ScanIndex duration() const { return static_cast<ScanIndex>(states.size()); }

    [[nodiscard]] const std::optional<TruthState>& at(ScanIndex k) const {
        if (k < 1 || k > duration()) throw ProtocolError("scan outside the truth range");
        return states[static_cast<std::size_t>(k - 1)];
    }

    [[nodiscard]] bool alive(ScanIndex k) const { return at(k).has_value(); }
};

// ---- Scenario configuration ----

struct LinearScenarioConfig {
    ScanIndex duration = 100;
    ScanIndex birth_k = 10;
    ScanIndex death_k = 80;
    std::array<double, 4> birth_mean{-500.0, 10.0, -500.0, 10.0};
    /// Standard deviations of the birth state, i.e. the birth covariance is diag(birth_std)^2.
    std::array<double, 4> birth_std{100.0, 10.0, 100.0, 10.0};
    double q_scale = 1.0;
    double detection_probability = 0.95;
    double clutter_rate = 2.0;
    double region_half_width = 1000.0;
    Cov2 meas_cov = Cov2::diag(100.0, 100.0);

    void validate() const {
        if (!(1 <= birth_k && birth_k < death_k && death_k <= duration))
            throw DomainError("need 1 <= birth_k < death_k <= duration");
        if (!(detection_probability >= 0.0 && detection_probability <= 1.0))
            throw DomainError("detection probability must lie in [0, 1]");
        if (clutter_rate < 0.0) throw DomainError("clutter rate must be non-negative");
        if (q_scale < 0.0) throw DomainError("q_scale must be non-negative");
        if (!(region_half_width > 0.0)) throw DomainError("region must have positive size");
    }
};

struct TargetLife {
    ScanIndex birth_k = 0;
    ScanIndex death_k = 0;
    std::array<double, 5> mean{};
    /// Diagonal of the birth covariance as printed; see square_birth_cov.
    std::array<double, 5> cov_diag{};
};

struct NonlinearScenarioConfig {
    ScanIndex duration = 150;
    std::vector<TargetLife> lives{
        {10, 80, {100.0, 10.0, 100.0, 10.0, 0.01}, {100.0, 10.0, 100.0, 10.0, 0.01}},
        {90, 110, {500.0, 10.0, 500.0, 10.0, 0.01}, {100.0, 10.0, 100.0, 10.0, 0.01}},
    };
    /// Read cov_diag entries as standard deviations (squared on use) instead of variances.
    bool square_birth_cov = false;
    double sigma_w = 2.0;
    double sigma_u = std::numbers::pi / 180.0;
    RangeBearingModel sensor{};
    double max_detection_probability = 0.95;
    double clutter_rate = 2.0;
    double clutter_radius = 2000.0;
    bool debias = true;

    void validate() const {
        ScanIndex prev = 0;
        for (const auto& l : lives) {
            if (!(l.birth_k > prev && l.birth_k < l.death_k && l.death_k <= duration))
                throw DomainError("target lives must be ordered, disjoint and inside the scenario");
            prev = l.death_k;
        }
        if (!(max_detection_probability >= 0.0 && max_detection_probability <= 1.0))
            throw DomainError("detection probability must lie in [0, 1]");
        if (clutter_rate < 0.0) throw DomainError("clutter rate must be non-negative");
        if (!(sensor.sigma_r > 0.0 && sensor.sigma_theta > 0.0))
            throw DomainError("sensor standard deviations must be positive");
        if (!(clutter_radius > 0.0)) throw DomainError("clutter radius must be positive");
    }
};

using ScenarioConfig = std::variant<LinearScenarioConfig, NonlinearScenarioConfig>;

// ---- Detection and clutter ----

[[nodiscard]] inline double detection_probability(Position2, const LinearScenarioConfig& cfg) {
    return cfg.detection_probability;
}

/// p_max * N(mu; 0, s^2 I) / N(0; 0, s^2 I) with mu = (|px|, |py|) and s = 2000 m.
[[nodiscard]] inline double detection_probability(Position2 p, const NonlinearScenarioConfig& cfg) {
    constexpr double s2 = 2000.0 * 2000.0;
    return cfg.max_detection_probability * std::exp(-(p.x * p.x + p.y * p.y) / (2.0 * s2));
}

struct RectRegion {
    double x_min = -1000.0;
    double x_max = 1000.0;
    double y_min = -1000.0;
    double y_max = 1000.0;

    [[nodiscard]] double area() const { return (x_max - x_min) * (y_max - y_min); }
    [[nodiscard]] bool contains(Position2 p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }

    template <std::uniform_random_bit_generator Rng>
    [[nodiscard]] Position2 sample(Rng& rng) const {
        std::uniform_real_distribution<double> ux(x_min, x_max);
        std::uniform_real_distribution<double> uy(y_min, y_max);
        const double x = ux(rng);
        return {x, uy(rng)};
    }
};

/// Upper half disk {x^2 + y^2 <= R^2, y >= 0} centred on the sensor.
struct HalfDisk {
    double radius = 2000.0;

    [[nodiscard]] double area() const { return 0.5 * std::numbers::pi * radius * radius; }
    [[nodiscard]] bool contains(Position2 p) const {
        return p.y >= 0.0 && p.squared_norm() <= radius * radius * (1.0 + 1e-12);
    }

    template <std::uniform_random_bit_generator Rng>
    [[nodiscard]] Position2 sample(Rng& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double r = radius * std::sqrt(u(rng));
        const double phi = std::numbers::pi * u(rng);
        return {r * std::cos(phi), r * std::sin(phi)};
    }
};

/// Poisson(r_c) clutter points, uniform over the region.
template <typename Region, std::uniform_random_bit_generator Rng>
[[nodiscard]] std::vector<Position2> gen_clutter(const Region& region, double r_c, Rng& rng) {
    if (r_c < 0.0) throw DomainError("clutter rate must be non-negative");
    if (r_c == 0.0) return {};
    std::poisson_distribution<int> count(r_c);
    const int n = count(rng);
    std::vector<Position2> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(region.sample(rng));
    return out;
}

// ---- Scenario generation ----

struct Scenario {
    GroundTruth truth;
    /// One frame per scan 1..duration.
    std::vector<MeasurementFrame> frames;
};

namespace detail {

template <std::uniform_random_bit_generator Rng>
bool bernoulli(double p, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < p;
}

template <std::uniform_random_bit_generator Rng>
void shuffle_frame(MeasurementFrame& f, Rng& rng) {
    // covariances travel with their points
    std::vector<std::size_t> order(f.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    MeasurementFrame out{f.k, {}, {}};
    for (std::size_t i : order) {
        out.points.push_back(f.points[i]);
        if (f.covs.size() > 1) out.covs.push_back(f.covs[i]);
    }
    if (f.covs.size() <= 1) out.covs = f.covs;
    f = std::move(out);
}

}  // namespace detail

[[nodiscard]] inline Scenario generate(const LinearScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    const RectRegion region{-cfg.region_half_width, cfg.region_half_width, -cfg.region_half_width,
                            cfg.region_half_width};
    const PositionNoiseModel noise{cfg.meas_cov};

    Scenario sc;
    sc.truth.states.resize(static_cast<std::size_t>(cfg.duration));
    sc.frames.reserve(static_cast<std::size_t>(cfg.duration));
    CvState x;
    for (ScanIndex k = 1; k <= cfg.duration; ++k) {
        MeasurementFrame frame{k, {}, {cfg.meas_cov}};
        if (k >= cfg.birth_k && k <= cfg.death_k) {
            if (k == cfg.birth_k) {
                x = {cfg.birth_mean[0] + cfg.birth_std[0] * n01(rng), cfg.birth_mean[1] + cfg.birth_std[1] * n01(rng),
                     cfg.birth_mean[2] + cfg.birth_std[2] * n01(rng), cfg.birth_mean[3] + cfg.birth_std[3] * n01(rng)};
            } else {
                x = cv_step(x, cfg.q_scale, rng);
            }
            const Position2 p{x.px, x.py};
            sc.truth.states[static_cast<std::size_t>(k - 1)] = TruthState{p, {x.vx, x.vy}, std::nullopt};
            if (detail::bernoulli(detection_probability(p, cfg), rng))
                frame.points.push_back(measure_position(p, noise, rng));
        }
        for (const auto& c : gen_clutter(region, cfg.clutter_rate, rng)) frame.points.push_back(c);
        detail::shuffle_frame(frame, rng);
        sc.frames.push_back(std::move(frame));
    }
    return sc;
}

[[nodiscard]] inline Scenario generate(const NonlinearScenarioConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01(0.0, 1.0);
    const HalfDisk region{cfg.clutter_radius};

    Scenario sc;
    sc.truth.states.resize(static_cast<std::size_t>(cfg.duration));
    sc.frames.reserve(static_cast<std::size_t>(cfg.duration));
    CtState x;
    for (ScanIndex k = 1; k <= cfg.duration; ++k) {
        MeasurementFrame frame{k, {}, {}};
        const TargetLife* life = nullptr;
        for (const auto& l : cfg.lives)
            if (k >= l.birth_k && k <= l.death_k) life = &l;
        if (life) {
            if (k == life->birth_k) {
                std::array<double, 5> v{};
                for (std::size_t i = 0; i < 5; ++i) {
                    const double d = life->cov_diag[i];
                    const double sd = cfg.square_birth_cov ? d : std::sqrt(d);
                    v[i] = life->mean[i] + sd * n01(rng);
                }
                x = {v[0], v[1], v[2], v[3], v[4]};
            } else {
                x = ct_step(x, cfg.sigma_w, cfg.sigma_u, rng);
            }
            const Position2 p{x.px, x.py};
            sc.truth.states[static_cast<std::size_t>(k - 1)] = TruthState{p, {x.vx, x.vy}, x.omega};
            if (detail::bernoulli(detection_probability(p, cfg), rng) && !(p.x == 0.0 && p.y == 0.0)) {
                const auto [pos, cov] = convert_measurement(measure_range_bearing(p, cfg.sensor, rng), cfg.sensor,
                                                            cfg.debias);
                frame.points.push_back(pos);
                frame.covs.push_back(cov);
            }
        }
        for (const auto& c : gen_clutter(region, cfg.clutter_rate, rng)) {
            if (c.x == 0.0 && c.y == 0.0) continue;
            const auto [pos, cov] = convert_measurement(to_range_bearing(c), cfg.sensor, cfg.debias);
            frame.points.push_back(pos);
            frame.covs.push_back(cov);
        }
        detail::shuffle_frame(frame, rng);
        sc.frames.push_back(std::move(frame));
    }
    return sc;
}

[[nodiscard]] inline Scenario generate(const ScenarioConfig& cfg, std::uint64_t seed) {
    return std::visit([seed](const auto& c) { return generate(c, seed); }, cfg);
}

/// Largest norm of the second position difference over consecutive live
/// scans: a discrete stand-in for the bound on the trajectory's acceleration.
[[nodiscard]] inline double empirical_beta(const GroundTruth& truth) {
    std::optional<double> beta;
    for (ScanIndex k = 2; k < truth.duration(); ++k) {
        const auto& a = truth.at(k - 1);
        const auto& b = truth.at(k);
        const auto& c = truth.at(k + 1);
        if (!a || !b || !c) continue;
        const Vec2 d2 = c->position - 2.0 * b->position + a->position;
        beta = std::max(beta.value_or(0.0), d2.norm());
    }
    if (!beta) throw InsufficientDataError("need at least three consecutive truth scans");
    return *beta;
}

}  // namespace tfot
