#include "support.hpp"
#include "tfot/maintenance.hpp"
#include "tfot/measmodel.hpp"

using namespace tfot;
using namespace tfot::test;

namespace {

const Cov2 kSigma = Cov2::diag(100, 100);

PolyTrajectory line(double x0, double vx, double y0, double vy, ScanIndex epoch) {
    PolyTrajectory tr;
    tr.gamma = 1;
    tr.epoch = epoch;
    tr.coeffs = {std::vector<double>{x0, vx}, std::vector<double>{y0, vy}};
    return tr;
}

}  // namespace

TEST(PredictPosition, LinearExtrapolation) {
    std::vector<Detection> d{{1, {10, 0}, kSigma}, {2, {20, 0}, kSigma}};
    const auto tr = fit_trajectory(d, 1, 1, 1, 2);
    EXPECT_NEAR(predict_position(tr, 3).x, 30.0, 1e-9);
    const auto a = predict_position(tr, 7);
    const auto b = predict_position(tr, 8);
    EXPECT_NEAR(b.x - a.x, velocity(tr, 7).x, 1e-12);
}

TEST(PredictPosition, QuadraticMatchesDirectEvaluation) {
    Rng rng(30);
    for (int i = 0; i < 100; ++i) {
        PolyTrajectory tr;
        tr.gamma = 2;
        tr.epoch = uniform_int(rng, 1, 100);
        tr.coeffs = {std::vector<double>{uniform(rng, -500, 500), uniform(rng, -20, 20), uniform(rng, -1, 1)},
                     std::vector<double>{uniform(rng, -500, 500), uniform(rng, -20, 20), uniform(rng, -1, 1)}};
        const ScanIndex k = tr.epoch + uniform_int(rng, 0, 15);
        const double dt = static_cast<double>(k - tr.epoch);
        const double want = tr.coeffs[0][0] + tr.coeffs[0][1] * dt + tr.coeffs[0][2] * dt * dt;
        EXPECT_NEAR(predict_position(tr, k).x, want, 1e-10 * std::max(1.0, std::abs(want)));
    }
}

TEST(PseudoMeasurement, Models) {
    const Position2 p{123.0, -4.0};
    EXPECT_EQ(pseudo_measurement(p, PositionNoiseModel{}), p);
    const auto rb = pseudo_measurement(Position2{100, 0}, RangeBearingModel{});
    EXPECT_DOUBLE_EQ(rb.r, 100.0);
    EXPECT_DOUBLE_EQ(rb.theta, 0.0);
}

TEST(NearestCandidate, Examples) {
    MeasurementFrame f{1, {{0, 0}, {10, 10}}, {kSigma}};
    const auto c = nearest_candidate(f, {1, 1});
    ASSERT_TRUE(c);
    EXPECT_EQ(c->index, 0u);
    EXPECT_FALSE(nearest_candidate(MeasurementFrame{1, {}, {}}, {0, 0}));
    MeasurementFrame tie{1, {{1, 0}, {-1, 0}, {0, 1}}, {kSigma}};
    EXPECT_EQ(nearest_candidate(tie, {0, 0})->index, 0u);
}

TEST(NearestCandidateProperty, EuclideanEqualsMahalanobisForIsotropicNoise) {
    Rng rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const double var = uniform(rng, 1, 500);
        MeasurementFrame f{1, {}, {Cov2::diag(var, var)}};
        const int n = uniform_int(rng, 1, 12);
        for (int i = 0; i < n; ++i) f.points.push_back(random_point(rng, 1000));
        const auto pseudo = random_point(rng, 1000);
        std::size_t best = 0;
        for (std::size_t i = 1; i < f.size(); ++i)
            if (mahalanobis_sq(f.points[i], pseudo, f.cov(i)) < mahalanobis_sq(f.points[best], pseudo, f.cov(best)))
                best = i;
        EXPECT_EQ(nearest_candidate(f, pseudo)->index, best);
    }
}

TEST(Gate, Examples) {
    const Candidate at{{5, 5}, kSigma, 0};
    EXPECT_EQ(gate(at, {5, 5}, 5.0), GateResult::accepted);
    EXPECT_EQ(gate(Candidate{{50, 0}, kSigma, 0}, {0, 0}, 5.0), GateResult::accepted);  // 25 <= 25
    EXPECT_EQ(gate(Candidate{{51, 0}, kSigma, 0}, {0, 0}, 5.0), GateResult::miss);
    EXPECT_EQ(gate(std::nullopt, {0, 0}, 5.0), GateResult::miss);
    EXPECT_THROW((void)gate(Candidate{{1, 0}, Cov2::diag(1, 0), 0}, {0, 0}, 5.0), IllConditionedError);
}

TEST(UpdateTrack, NoiselessLineKeepsCoefficients) {
    auto tr = line(0, 10, 5, -2, 1);
    TrackBuffer buf;
    for (ScanIndex k = 1; k <= 4; ++k) buf.accepted.push_back({k, evaluate(tr, double(k)), kSigma});
    tr.window_end = 4;
    for (ScanIndex k = 5; k <= 40; ++k) {
        MeasurementFrame f{k, {evaluate(tr, double(k)), {900, 900}}, {kSigma}};
        auto u = update_track(buf, tr, f, MaintenanceConfig{});
        ASSERT_TRUE(u.accepted);
        EXPECT_FALSE(u.degraded);
        buf = u.buffer;
        tr = u.trajectory;
        const auto abs = absolute_coefficients(tr);
        EXPECT_NEAR(abs[0][0], -10.0, 1e-9);
        EXPECT_NEAR(abs[0][1], 10.0, 1e-9);
        EXPECT_NEAR(abs[1][0], 7.0, 1e-9);
        EXPECT_NEAR(abs[1][1], -2.0, 1e-9);
        EXPECT_EQ(tr.epoch, window_start(k, 10));
    }
}

TEST(UpdateTrack, MissCoastsOnPreviousFit) {
    auto tr = line(0, 10, 0, 0, 1);
    TrackBuffer buf;
    for (ScanIndex k = 1; k <= 5; ++k) buf.accepted.push_back({k, {10.0 * (k - 1) + (k % 2 ? 3 : -3), 0}, kSigma});
    tr = fit_trajectory(buf.accepted, 1, 1, 1, 5);
    const auto before = tr;
    MeasurementFrame empty{6, {}, {}};
    auto u = update_track(buf, tr, empty, MaintenanceConfig{});
    EXPECT_FALSE(u.accepted);
    EXPECT_EQ(u.buffer.miss_streak, 1);
    EXPECT_EQ(u.trajectory.coeffs, before.coeffs);
    EXPECT_EQ(u.trajectory.epoch, before.epoch);
    EXPECT_EQ(evaluate(u.trajectory, 6.0), predict_position(before, 6));
    // far-off clutter is a miss as well
    MeasurementFrame far{7, {{800, 800}}, {kSigma}};
    u = update_track(u.buffer, u.trajectory, far, MaintenanceConfig{});
    EXPECT_EQ(u.buffer.miss_streak, 2);
    // the next hit resets the streak
    MeasurementFrame hit{8, {evaluate(u.trajectory, 8.0)}, {kSigma}};
    u = update_track(u.buffer, u.trajectory, hit, MaintenanceConfig{});
    EXPECT_TRUE(u.accepted);
    EXPECT_EQ(u.buffer.miss_streak, 0);
}

TEST(UpdateTrack, WindowReplayMatchesBatchFit) {
    Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const auto truth = line(uniform(rng, -500, 500), uniform(rng, -15, 15), uniform(rng, -500, 500),
                                uniform(rng, -15, 15), 1);
        TrackBuffer buf;
        for (ScanIndex k = 1; k <= 4; ++k) buf.accepted.push_back({k, evaluate(truth, double(k)), kSigma});
        auto tr = fit_trajectory(buf.accepted, 1, 1, 1, 4);
        MaintenanceConfig cfg;
        for (ScanIndex k = 5; k <= 30; ++k) {
            MeasurementFrame f{k, {}, {kSigma}};
            if (uniform(rng, 0, 1) < 0.85) {
                const auto p = evaluate(truth, double(k));
                f.points.push_back({p.x + gauss(rng, 10), p.y + gauss(rng, 10)});
            }
            auto u = update_track(buf, tr, f, cfg);
            buf = u.buffer;
            tr = u.trajectory;
            // window discipline
            for (const auto& d : buf.accepted) {
                EXPECT_GE(d.k, window_start(k, cfg.window));
                EXPECT_LE(d.k, k);
            }
            EXPECT_LE(buf.accepted.size(), static_cast<std::size_t>(cfg.window) + 1);
            for (std::size_t i = 1; i < buf.accepted.size(); ++i) EXPECT_LT(buf.accepted[i - 1].k, buf.accepted[i].k);
            if (u.accepted) {
                const auto batch = fit_trajectory(buf.accepted, 1, window_start(k, cfg.window), 0, 0);
                for (int d = 0; d < 2; ++d)
                    for (int j = 0; j < 2; ++j)
                        EXPECT_NEAR(tr.coeffs[d][j], batch.coeffs[d][j], 1e-10 * std::max(1.0, std::abs(batch.coeffs[d][j])));
                EXPECT_EQ(buf.miss_streak, 0);
            }
        }
    }
}

TEST(UpdateTrack, DegradedWhenTooFewPointsRemain) {
    // last accepted point long ago: after sliding only the new point remains
    auto tr = line(0, 1, 0, 1, 1);
    TrackBuffer buf;
    buf.accepted = {{1, {0, 0}, kSigma}, {2, {1, 1}, kSigma}};
    MeasurementFrame f{30, {evaluate(tr, 30.0)}, {kSigma}};
    const auto u = update_track(buf, tr, f, MaintenanceConfig{});
    EXPECT_TRUE(u.accepted);
    EXPECT_TRUE(u.degraded);
    EXPECT_EQ(u.buffer.accepted.size(), 1u);
    EXPECT_EQ(u.trajectory.coeffs, tr.coeffs);
}

TEST(UpdateTrack, RejectsStaleScans) {
    const auto tr = line(0, 1, 0, 1, 1);
    TrackBuffer buf;
    buf.accepted = {{5, {4, 4}, kSigma}};
    EXPECT_THROW((void)update_track(buf, tr, MeasurementFrame{5, {}, {}}, MaintenanceConfig{}), ProtocolError);
}

TEST(UpdateTrack, ExactPolynomialTruthTrackedExactly) {
    // clutter-free, always detected, noiseless quadratic with gamma = 2
    PolyTrajectory truth;
    truth.gamma = 2;
    truth.epoch = 0;
    truth.coeffs = {std::vector<double>{-300, 4, 0.25}, std::vector<double>{100, -3, 0.1}};
    MaintenanceConfig cfg;
    cfg.gamma = 2;
    TrackBuffer buf;
    for (ScanIndex k = 1; k <= 3; ++k) buf.accepted.push_back({k, evaluate(truth, double(k)), kSigma});
    auto tr = fit_trajectory(buf.accepted, 2, 1, 1, 3);
    for (ScanIndex k = 4; k <= 60; ++k) {
        auto u = update_track(buf, tr, MeasurementFrame{k, {evaluate(truth, double(k))}, {kSigma}}, cfg);
        ASSERT_TRUE(u.accepted);
        buf = u.buffer;
        tr = u.trajectory;
        const auto e = evaluate(tr, double(k));
        const auto t = evaluate(truth, double(k));
        EXPECT_NEAR(e.x, t.x, 1e-9 * std::max(1.0, std::abs(t.x)));
        EXPECT_NEAR(e.y, t.y, 1e-9 * std::max(1.0, std::abs(t.y)));
    }
}

TEST(MaintenanceConfig, Validation) {
    MaintenanceConfig c;
    EXPECT_NO_THROW(c.validate());
    c.tau2 = 0;
    EXPECT_THROW(c.validate(), DomainError);
}

TEST(WindowStart, ClampsAtOne) {
    EXPECT_EQ(window_start(5, 10), 1);
    EXPECT_EQ(window_start(11, 10), 1);
    EXPECT_EQ(window_start(12, 10), 2);
}
