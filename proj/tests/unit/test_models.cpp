#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "trackjam/models.hpp"

using namespace trackjam;

namespace {

constexpr double kPi = std::numbers::pi;

SensingParams reference_sensing() {
    SensingParams s;
    s.max_level = PowerLevel::dbw(0.5);
    return s;
}

TargetDynamicsParams noiseless() {
    TargetDynamicsParams p;
    p.accel_noise_cov.setZero();
    return p;
}

}  // namespace

TEST(TargetStep, NoiselessConstantVelocity) {
    Rng rng(1);
    const TargetState x{{0, 0, 0}, {1, 0, 0}};
    const TargetState y = target_step(x, noiseless(), rng);
    EXPECT_EQ(y.position, Vec3(1, 0, 0));
    EXPECT_EQ(y.velocity, Vec3(1, 0, 0));
}

TEST(TargetStep, NoiselessStationary) {
    Rng rng(1);
    const TargetState x{{2, 2, 2}, {0, 0, 0}};
    const TargetState y = target_step(x, noiseless(), rng);
    EXPECT_EQ(y.position, Vec3(2, 2, 2));
    EXPECT_EQ(y.velocity, Vec3::Zero());
}

TEST(TargetStep, PositionIncrementCovarianceMonteCarlo) {
    TargetDynamicsParams p;
    p.accel_noise_cov = 0.5 * Mat3::Identity();
    p.dt = 1.0;
    Rng rng(2024);
    const TargetState x{{0, 0, 0}, {0, 0, 0}};
    constexpr int kDraws = 100'000;
    Mat3 sum = Mat3::Zero();
    Vec3 mean = Vec3::Zero();
    for (int k = 0; k < kDraws; ++k) {
        const Vec3 d = target_step(x, p, rng).position;
        mean += d;
        sum += d * d.transpose();
    }
    mean /= kDraws;
    const Mat3 cov = sum / kDraws - mean * mean.transpose();
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(cov(i, i), 0.125, 0.05 * 0.125);
        for (int j = 0; j < 3; ++j) {
            if (i != j) {
                EXPECT_NEAR(cov(i, j), 0.0, 0.005);
            }
        }
    }
}

TEST(AdmissibleControls, StraightUpAtZeroInclination) {
    ControlGrid g;
    g.radial_steps = {2.0};
    g.n_phi = 4;
    g.n_theta = 4;
    g.include_hover = false;
    const auto pts = admissible_controls(Vec3::Zero(), g);
    bool found = false;
    for (const Vec3& p : pts) {
        found = found || (p - Vec3(0, 0, 2)).norm() < 1e-12;
    }
    EXPECT_TRUE(found);
}

TEST(AdmissibleControls, DefaultGridCount) {
    ControlGrid g;
    g.radial_steps = {1, 3, 5};
    g.n_phi = 8;
    g.n_theta = 8;
    g.include_hover = true;
    const auto pts = admissible_controls(Vec3(10, 10, 10), g);
    EXPECT_EQ(pts.size(), 175u);
    EXPECT_EQ(g.size(), 175u);
    EXPECT_EQ(pts.back(), Vec3(10, 10, 10));
}

TEST(AdmissibleControls, Table1Counts) {
    ControlGrid small;
    small.radial_steps = {3.0};
    small.n_phi = 3;
    small.n_theta = 4;
    EXPECT_EQ(admissible_controls(Vec3::Zero(), small).size(), 11u);
    ControlGrid large;
    large.radial_steps = {1, 3, 5};
    large.n_phi = 4;
    large.n_theta = 8;
    EXPECT_EQ(admissible_controls(Vec3::Zero(), large).size(), 79u);
}

TEST(AdmissibleControls, UnitRadialStep) {
    ControlGrid g;
    g.radial_steps = {1.0};
    g.include_hover = false;
    for (const Vec3& p : admissible_controls(Vec3(3, 4, 5), g)) {
        EXPECT_NEAR((p - Vec3(3, 4, 5)).norm(), 1.0, 1e-9);
    }
}

TEST(AdmissibleControls, NoDuplicates) {
    ControlGrid g;
    const auto pts = admissible_controls(Vec3(1, 2, 3), g);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            ASSERT_GT((pts[i] - pts[j]).norm(), 1e-9);
        }
    }
}

TEST(PowerConversion, Examples) {
    EXPECT_NEAR(db_to_linear(-40.0), 1e-4, 1e-18);
    EXPECT_DOUBLE_EQ(db_to_linear(0.0), 1.0);
    for (double x : {-50.0, -7.0, 0.5}) {
        EXPECT_NEAR(linear_to_db(db_to_linear(x)), x, 1e-12);
    }
    EXPECT_TRUE(std::isinf(linear_to_db(0.0)));
    EXPECT_LT(linear_to_db(0.0), 0.0);
    EXPECT_EQ(PowerLevel::off().watts(), 0.0);
}

TEST(DetectionProb, InsideReferenceRangeAtMaxLevel) {
    const SensingParams s = reference_sensing();
    const Vec3 agent = Vec3::Zero();
    const Vec3 target(0, 0, 3);
    const SensingCone c = s.cone(agent, Vec3::UnitZ());
    EXPECT_EQ(detection_prob(target, agent, s.max_level, c, s), 0.95);
}

TEST(DetectionProb, OutsideConeIsZero) {
    const SensingParams s = reference_sensing();
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    EXPECT_EQ(detection_prob(Vec3(0, 0, -3), Vec3::Zero(), s.max_level, c, s), 0.0);
    EXPECT_EQ(detection_prob(Vec3(0, 0, 3), Vec3::Zero(), PowerLevel::off(), c, s), 0.0);
}

TEST(DetectionProb, PathLossBeyondReferenceRange) {
    const SensingParams s = reference_sensing();
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    EXPECT_NEAR(detection_prob(Vec3(0, 0, 12), Vec3::Zero(), s.max_level, c, s), 0.2375, 1e-15);
}

TEST(ReceivedPower, Examples) {
    const SensingParams s = reference_sensing();
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    const PowerLevel l = PowerLevel::dbw(0.5);
    EXPECT_NEAR(received_power(Vec3(0, 0, 2), Vec3::Zero(), l, c, s), std::pow(10.0, 0.05), 1e-12);
    EXPECT_NEAR(received_power(Vec3(0, 0, 2), Vec3::Zero(), l, c, s), 1.1220, 1e-4);
    EXPECT_EQ(received_power(Vec3(0, 0, -2), Vec3::Zero(), l, c, s), 0.0);
    EXPECT_NEAR(received_power(Vec3(0, 0, 12), Vec3::Zero(), l, c, s), std::pow(10.0, 0.05) / 4,
                1e-12);
    EXPECT_NEAR(received_power(Vec3(0, 0, 12), Vec3::Zero(), l, c, s), 0.2805, 1e-4);
}

TEST(ReceivedPower, ContinuousAtReferenceRange) {
    const SensingParams s = reference_sensing();
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    for (double dbw : {-50.0, -7.0, 0.5}) {
        const PowerLevel l = PowerLevel::dbw(dbw);
        const double at = received_power(Vec3(0, 0, s.r0), Vec3::Zero(), l, c, s);
        const double just_in = received_power(Vec3(0, 0, std::nextafter(s.r0, 0.0)),
                                              Vec3::Zero(), l, c, s);
        EXPECT_NEAR(at, l.watts(), 1e-12);
        EXPECT_NEAR(just_in, l.watts(), 1e-12);
    }
}

TEST(DetectionProb, MonotoneInRangeAndLevel) {
    const SensingParams s = reference_sensing();
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> r(0.1, 40.0);
    std::uniform_real_distribution<double> lvl(-60.0, 0.5);
    for (int k = 0; k < 10'000; ++k) {
        const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
        double a = r(gen), b = r(gen);
        if (a > b) {
            std::swap(a, b);
        }
        const PowerLevel l = PowerLevel::dbw(lvl(gen));
        ASSERT_GE(detection_prob(Vec3(0, 0, a), Vec3::Zero(), l, c, s),
                  detection_prob(Vec3(0, 0, b), Vec3::Zero(), l, c, s));
        double la = lvl(gen), lb = lvl(gen);
        if (la > lb) {
            std::swap(la, lb);
        }
        ASSERT_LE(detection_prob(Vec3(0, 0, a), Vec3::Zero(), PowerLevel::dbw(la), c, s),
                  detection_prob(Vec3(0, 0, a), Vec3::Zero(), PowerLevel::dbw(lb), c, s));
    }
}

TEST(DetectionProb, NormalizedDbDomain) {
    SensingParams s = reference_sensing();
    s.ratio_domain = DetectionRatioDomain::NormalizedDb;
    s.normalized_db_floor = -60.0;
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    const double expected = 0.95 * (-50.0 + 60.0) / (0.5 + 60.0);
    EXPECT_NEAR(detection_prob(Vec3(0, 0, 3), Vec3::Zero(), PowerLevel::dbw(-50.0), c, s),
                expected, 1e-12);
}

TEST(SensingParams, ClutterSpace) {
    const SensingParams s = reference_sensing();
    const double rho_max = 40.0 / std::cos(40.0 * kPi / 180.0);
    EXPECT_NEAR(s.max_range(), rho_max, 1e-9);
    EXPECT_NEAR(s.clutter_density(), 1.0 / (rho_max * 2 * kPi * kPi), 1e-15);
}

TEST(GenerateMeasurements, AbsentTargetNoClutterIsEmpty) {
    SensingParams s = reference_sensing();
    s.clutter_rate = 0.0;
    Rng rng(1);
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    EXPECT_TRUE(generate_measurements(std::nullopt, Vec3::Zero(), s.max_level, c, s, rng).empty());
}

TEST(GenerateMeasurements, CertainNoiselessDetection) {
    SensingParams s = reference_sensing();
    s.clutter_rate = 0.0;
    s.p_d_max = 1.0;
    s.meas_noise_cov.setZero();
    Rng rng(1);
    const Vec3 agent(1, 2, 3);
    const TargetState x{{2, 3, 5}, {0, 0, 0}};
    const SensingCone c = s.cone(agent, (x.position - agent).normalized());
    const auto scan = generate_measurements(x, agent, s.max_level, c, s, rng);
    ASSERT_EQ(scan.size(), 1u);
    const Measurement h = measure(x.position, agent);
    EXPECT_EQ(scan[0].rho, h.rho);
    EXPECT_EQ(scan[0].theta, h.theta);
    EXPECT_EQ(scan[0].phi, h.phi);
}

TEST(GenerateMeasurements, MeanCardinality) {
    SensingParams s = reference_sensing();
    s.p_d_max = 0.5;
    s.clutter_rate = 3.0;
    Rng rng(99);
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    const TargetState x{{0, 0, 3}, {0, 0, 0}};
    constexpr int kDraws = 100'000;
    double total = 0.0;
    for (int k = 0; k < kDraws; ++k) {
        const auto scan = generate_measurements(x, Vec3::Zero(), s.max_level, c, s, rng);
        total += static_cast<double>(scan.size());
        for (const Measurement& m : scan) {
            ASSERT_GE(m.rho, 0.0);
            ASSERT_GT(m.theta, -kPi);
            ASSERT_LE(m.theta, kPi);
            ASSERT_GE(m.phi, 0.0);
            ASSERT_LE(m.phi, kPi);
        }
    }
    EXPECT_NEAR(total / kDraws, 3.5, 0.05);
}

TEST(GenerateMeasurements, SeedReproducible) {
    const SensingParams s = reference_sensing();
    const SensingCone c = s.cone(Vec3::Zero(), Vec3::UnitZ());
    const TargetState x{{0, 1, 4}, {0, 0, 0}};
    Rng a(5), b(5);
    for (int k = 0; k < 100; ++k) {
        const auto sa = generate_measurements(x, Vec3::Zero(), s.max_level, c, s, a);
        const auto sb = generate_measurements(x, Vec3::Zero(), s.max_level, c, s, b);
        ASSERT_EQ(sa.size(), sb.size());
        for (std::size_t i = 0; i < sa.size(); ++i) {
            ASSERT_EQ(sa[i].rho, sb[i].rho);
            ASSERT_EQ(sa[i].theta, sb[i].theta);
            ASSERT_EQ(sa[i].phi, sb[i].phi);
        }
    }
}

TEST(NormalizeMeasurement, FoldsIntoRanges) {
    const Measurement m = normalize_measurement(-0.5, 3 * kPi / 2, -0.2);
    EXPECT_EQ(m.rho, 0.0);
    EXPECT_NEAR(m.theta, kPi / 2, 1e-12);
    EXPECT_NEAR(m.phi, 0.2, 1e-12);
    const Measurement n = normalize_measurement(2.0, 3 * kPi / 2, 0.3);
    EXPECT_NEAR(n.theta, -kPi / 2, 1e-12);
    EXPECT_NEAR(n.phi, 0.3, 1e-12);
}
