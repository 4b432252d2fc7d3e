#include "support.hpp"
#include "tfot/simulator.hpp"

#include <numbers>

using namespace tfot;
using namespace tfot::test;

TEST(CvStep, DeterministicWithoutNoise) {
    Rng rng(50);
    CvState s{0, 10, 0, 10};
    const auto n = cv_step(s, 0.0, rng);
    EXPECT_EQ(n.px, 10.0);
    EXPECT_EQ(n.vx, 10.0);
    EXPECT_EQ(n.py, 10.0);
    EXPECT_EQ(n.vy, 10.0);
    CvState a{1, 3, -2, -4};
    double prev_x = a.px;
    for (int i = 0; i < 20; ++i) {
        a = cv_step(a, 0.0, rng);
        EXPECT_EQ(a.px - prev_x, 3.0);
        prev_x = a.px;
    }
}

TEST(CvStep, IncrementCovarianceMatchesNoiseGain) {
    Rng rng(51);
    const CvState s{0, 0, 0, 0};
    const double q = 4.0;
    const int n = 100000;
    double pp = 0, pv = 0, vv = 0, cross = 0;
    for (int i = 0; i < n; ++i) {
        const auto x = cv_step(s, q, rng);
        pp += x.px * x.px;
        pv += x.px * x.vx;
        vv += x.vx * x.vx;
        cross += x.px * x.py;
    }
    // G Q G^T per axis = q [[1/4, 1/2], [1/2, 1]]
    EXPECT_NEAR(pp / n, q * 0.25, 0.05 * q * 0.25);
    EXPECT_NEAR(pv / n, q * 0.5, 0.05 * q * 0.5);
    EXPECT_NEAR(vv / n, q, 0.05 * q);
    EXPECT_NEAR(cross / n, 0.0, 0.02);
}

TEST(CtTransition, QuarterTurn) {
    const CtState s{0, 1, 0, 0, std::numbers::pi / 2};
    const auto n = ct_transition(s);
    EXPECT_NEAR(n.px, 2 / std::numbers::pi, 1e-12);
    EXPECT_NEAR(n.vx, 0.0, 1e-12);
    EXPECT_NEAR(n.py, 2 / std::numbers::pi, 1e-12);
    EXPECT_NEAR(n.vy, 1.0, 1e-12);
    EXPECT_EQ(n.omega, s.omega);
    Rng rng(52);
    const auto m = ct_step(s, 0.0, 0.0, rng);
    EXPECT_NEAR(m.px, n.px, 1e-15);
}

TEST(CtTransition, SmallTurnLimitIsConstantVelocity) {
    Rng rng(53);
    const CtState s{5, 3, -7, 2, 0.0};
    const auto ct = ct_transition(s);
    const auto cv = cv_step(CvState{5, 3, -7, 2}, 0.0, rng);
    EXPECT_EQ(ct.px, cv.px);
    EXPECT_EQ(ct.vx, cv.vx);
    EXPECT_EQ(ct.py, cv.py);
    EXPECT_EQ(ct.vy, cv.vy);
    const auto tiny = ct_transition(CtState{5, 3, -7, 2, 1e-7});
    EXPECT_NEAR(tiny.px, cv.px, 1e-6);
    EXPECT_NEAR(tiny.py, cv.py, 1e-6);
}

TEST(CtTransitionProperty, PreservesSpeed) {
    Rng rng(54);
    for (int i = 0; i < 1000; ++i) {
        CtState s{uniform(rng, -100, 100), uniform(rng, -30, 30), uniform(rng, -100, 100), uniform(rng, -30, 30),
                  uniform(rng, -1, 1)};
        const auto n = ct_transition(s);
        EXPECT_NEAR(std::hypot(n.vx, n.vy), std::hypot(s.vx, s.vy), 1e-12 * std::max(1.0, std::hypot(s.vx, s.vy)));
    }
}

TEST(DetectionProbability, RadialForm) {
    NonlinearScenarioConfig cfg;
    cfg.max_detection_probability = 0.9;
    EXPECT_DOUBLE_EQ(detection_probability(Position2{0, 0}, cfg), 0.9);
    EXPECT_NEAR(detection_probability(Position2{2000, 2000}, cfg), 0.9 * std::exp(-1.0), 1e-15);
    Rng rng(55);
    for (int i = 0; i < 1000; ++i) {
        const auto a = random_point(rng, 3000);
        const auto b = random_point(rng, 3000);
        if (a.norm() <= b.norm()) {
            EXPECT_GE(detection_probability(a, cfg), detection_probability(b, cfg));
        } else {
            EXPECT_LE(detection_probability(a, cfg), detection_probability(b, cfg));
        }
    }
    LinearScenarioConfig lin;
    EXPECT_EQ(detection_probability(Position2{1e6, 0}, lin), lin.detection_probability);
}

TEST(GenClutter, ZeroRateIsEmpty) {
    Rng rng(56);
    for (int i = 0; i < 100; ++i) EXPECT_TRUE(gen_clutter(RectRegion{}, 0.0, rng).empty());
    EXPECT_THROW((void)gen_clutter(RectRegion{}, -1.0, rng), DomainError);
}

TEST(GenClutter, PoissonMeanCount) {
    Rng rng(57);
    const int scans = 100000;
    long total = 0;
    for (int i = 0; i < scans; ++i) total += static_cast<long>(gen_clutter(RectRegion{}, 5.0, rng).size());
    const double mean = static_cast<double>(total) / scans;
    EXPECT_GE(mean, 4.93);
    EXPECT_LE(mean, 5.07);
}

TEST(GenClutter, HalfDiskMembershipAndUniformity) {
    Rng rng(58);
    const HalfDisk d{2000};
    // four equal-area sectors: quarter angle ranges with equal radial share
    std::array<int, 4> counts{};
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const auto p = d.sample(rng);
        ASSERT_TRUE(d.contains(p));
        const bool inner = p.norm() < 2000 / std::sqrt(2.0);
        const bool left = p.x < 0;
        counts[(inner ? 0 : 2) + (left ? 1 : 0)]++;
    }
    double chi2 = 0;
    for (int c : counts) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
    EXPECT_LT(chi2, 11.345);  // chi-squared(3) at 1%
    const RectRegion r{};
    for (int i = 0; i < 1000; ++i) EXPECT_TRUE(r.contains(r.sample(rng)));
    EXPECT_DOUBLE_EQ(r.area(), 4e6);
}

TEST(Generate, SameSeedBitIdentical) {
    for (const ScenarioConfig& cfg : {ScenarioConfig{LinearScenarioConfig{}}, ScenarioConfig{NonlinearScenarioConfig{}}}) {
        const auto a = generate(cfg, 99);
        const auto b = generate(cfg, 99);
        ASSERT_EQ(a.frames.size(), b.frames.size());
        for (std::size_t i = 0; i < a.frames.size(); ++i) {
            EXPECT_EQ(a.frames[i].points, b.frames[i].points);
            EXPECT_EQ(a.frames[i].covs, b.frames[i].covs);
            EXPECT_EQ(a.truth.states[i].has_value(), b.truth.states[i].has_value());
            if (a.truth.states[i]) { EXPECT_EQ(a.truth.states[i]->position, b.truth.states[i]->position); }
        }
        const auto c = generate(cfg, 100);
        bool differs = false;
        for (std::size_t i = 0; i < a.frames.size(); ++i) differs |= a.frames[i].points != c.frames[i].points;
        EXPECT_TRUE(differs);
    }
}

TEST(Generate, PerfectSensorGivesOnePointPerLiveScan) {
    LinearScenarioConfig cfg;
    cfg.detection_probability = 1.0;
    cfg.clutter_rate = 0.0;
    const auto sc = generate(cfg, 3);
    ASSERT_EQ(sc.frames.size(), 100u);
    for (const auto& f : sc.frames) {
        EXPECT_NO_THROW(f.validate());
        if (sc.truth.alive(f.k)) {
            ASSERT_EQ(f.size(), 1u);
            EXPECT_LT((f.points[0] - sc.truth.at(f.k)->position).norm(), 60.0);
        } else {
            EXPECT_TRUE(f.empty());
        }
    }
}

TEST(Generate, TruthExistsExactlyDuringLives) {
    const auto lin = generate(LinearScenarioConfig{}, 4);
    for (ScanIndex k = 1; k <= 100; ++k) EXPECT_EQ(lin.truth.alive(k), k >= 10 && k <= 80) << k;
    const auto nl = generate(NonlinearScenarioConfig{}, 4);
    for (ScanIndex k = 1; k <= 150; ++k)
        EXPECT_EQ(nl.truth.alive(k), (k >= 10 && k <= 80) || (k >= 90 && k <= 110)) << k;
    EXPECT_TRUE(nl.truth.at(50)->turn_rate.has_value());
    EXPECT_FALSE(lin.truth.at(50)->turn_rate.has_value());
    EXPECT_THROW((void)lin.truth.at(0), ProtocolError);
    EXPECT_THROW((void)lin.truth.at(101), ProtocolError);
}

TEST(Generate, ClutterOnlyFramesArePoisson) {
    LinearScenarioConfig cfg;
    cfg.clutter_rate = 5.0;
    long total = 0;
    long total_sq = 0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto sc = generate(cfg, seed);
        for (const auto& f : sc.frames) {
            if (sc.truth.alive(f.k)) continue;
            total += static_cast<long>(f.size());
            total_sq += static_cast<long>(f.size() * f.size());
            ++n;
        }
    }
    const double mean = double(total) / n;
    const double var = double(total_sq) / n - mean * mean;
    EXPECT_NEAR(mean, 5.0, 4 * std::sqrt(5.0 / n));
    EXPECT_NEAR(var / mean, 1.0, 0.05);
}

TEST(Generate, NonlinearCovariancesGrowWithRange) {
    NonlinearScenarioConfig cfg;
    cfg.clutter_rate = 5.0;
    const auto sc = generate(cfg, 8);
    const double per = cfg.sensor.sigma_r * cfg.sensor.sigma_theta;
    for (const auto& f : sc.frames) {
        EXPECT_NO_THROW(f.validate());
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double r = std::max(f.points[i].norm() / debias_factor(cfg.sensor.sigma_theta), cfg.sensor.sigma_r);
            EXPECT_NEAR(f.cov(i).determinant(), r * r * per * per, 1e-6 * r * r * per * per);
        }
    }
}

TEST(Generate, ClutterIndependentOfTarget) {
    // clutter x coordinates in consecutive scans are uncorrelated
    LinearScenarioConfig cfg;
    cfg.clutter_rate = 3.0;
    double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
    int n = 0;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        const auto sc = generate(cfg, seed);
        for (std::size_t i = 1; i < 9; ++i) {
            if (sc.frames[i - 1].empty() || sc.frames[i].empty()) continue;
            const double a = sc.frames[i - 1].points[0].x;
            const double b = sc.frames[i].points[0].x;
            sx += a, sy += b, sxy += a * b, sxx += a * a, syy += b * b;
            ++n;
        }
    }
    const double corr = (sxy / n - sx / n * sy / n) /
                        std::sqrt((sxx / n - sx / n * sx / n) * (syy / n - sy / n * sy / n));
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(n));
}

TEST(Generate, BirthCovarianceReading) {
    // literal reading treats cov_diag as variances; the switch squares them
    NonlinearScenarioConfig cfg;
    cfg.lives = {{2, 3, {0, 0, 0, 0, 0}, {4, 0, 0, 0, 0}}};
    cfg.duration = 3;
    cfg.clutter_rate = 0.0;
    auto spread = [&](bool square) {
        cfg.square_birth_cov = square;
        double ss = 0;
        for (std::uint64_t seed = 0; seed < 4000; ++seed) {
            const double x = generate(cfg, seed).truth.at(2)->position.x;
            ss += x * x;
        }
        return ss / 4000;
    };
    EXPECT_NEAR(spread(false), 4.0, 0.4);
    EXPECT_NEAR(spread(true), 16.0, 1.6);
}

TEST(ScenarioConfig, Validation) {
    LinearScenarioConfig l;
    l.death_k = 5;
    EXPECT_THROW(l.validate(), DomainError);
    NonlinearScenarioConfig n;
    n.lives = {{10, 80, {}, {}}, {70, 100, {}, {}}};
    EXPECT_THROW(n.validate(), DomainError);
    n = {};
    n.sensor.sigma_r = 0;
    EXPECT_THROW(n.validate(), DomainError);
}

namespace {

GroundTruth from_positions(const std::vector<Position2>& ps) {
    GroundTruth t;
    for (const auto& p : ps) t.states.push_back(TruthState{p, {}, std::nullopt});
    return t;
}

}  // namespace

TEST(EmpiricalBeta, ConstantVelocityIsZero) {
    Rng rng(59);
    CvState s{-500, 8, 300, -4};
    std::vector<Position2> ps;
    for (int i = 0; i < 50; ++i) {
        ps.push_back({s.px, s.py});
        s = cv_step(s, 0.0, rng);
    }
    EXPECT_EQ(empirical_beta(from_positions(ps)), 0.0);
}

TEST(EmpiricalBeta, ConstantAccelerationNorm) {
    std::vector<Position2> ps;
    const Vec2 a{0.6, -0.8};
    for (int k = 0; k < 40; ++k) ps.push_back({3.0 + 2.0 * k + 0.5 * a.x * k * k, -1.0 + 0.5 * a.y * k * k});
    EXPECT_NEAR(empirical_beta(from_positions(ps)), 1.0, 1e-9);
}

TEST(EmpiricalBeta, CoordinatedTurnChord) {
    CtState s{0, 10, 0, 0, 0.1};
    std::vector<Position2> ps;
    for (int i = 0; i < 60; ++i) {
        ps.push_back({s.px, s.py});
        s = ct_transition(s);
    }
    const double beta = empirical_beta(from_positions(ps));
    // second difference of points on a circle of radius v/omega, one step apart
    const double exact = 4.0 * (10.0 / 0.1) * std::pow(std::sin(0.05), 2);
    EXPECT_NEAR(beta, exact, 1e-9);
    EXPECT_NEAR(beta, 10.0 * 2.0 * std::sin(0.05), 1e-3);
}

TEST(EmpiricalBeta, NeedsThreeConsecutiveScans) {
    GroundTruth t;
    t.states = {TruthState{}, std::nullopt, TruthState{}, TruthState{}};
    EXPECT_THROW((void)empirical_beta(t), InsufficientDataError);
    t.states.push_back(TruthState{{1, 0}, {}, std::nullopt});
    EXPECT_NEAR(empirical_beta(t), 1.0, 1e-15);
}
