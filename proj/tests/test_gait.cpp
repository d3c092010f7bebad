#include <maggait/gait.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace maggait;

namespace {

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

FieldModel cone(double pitch) { return FieldModel(ConeFieldModel{pitch, 7.5e-3}); }

double cone_stride(double d, double theta, double alpha_max, int steps = 360,
                   const CycleOptions& opt = {}) {
    return simulate_cycle(RobotGeometry::with_foot_span(d), cone(theta), alpha_max, steps,
                          Vec3::Zero(), opt).stride;
}

// Calibrated once per process; bisection on full cycles is not free.
double calibrated_span() {
    static const double d = calibrate_foot_span(kDefaultStrideTarget, 66.0, 72.0);
    return d;
}

} // namespace

TEST(GaitParams, Validation) {
    EXPECT_NO_THROW(GaitParams{}.validate());
    EXPECT_THROW((GaitParams{181.0}).validate(), ArgumentError);
    EXPECT_THROW((GaitParams{72.0, 0.0}).validate(), ArgumentError);
    EXPECT_THROW((GaitParams{72.0, 1.2, Waveform::Triangular, 7}).validate(), ArgumentError);
    EXPECT_THROW((GaitParams{72.0, 1.2, Waveform::Triangular, 9}).validate(), ArgumentError);
    EXPECT_EQ(waveform_from_string("sinusoidal"), Waveform::Sinusoidal);
    EXPECT_THROW(waveform_from_string("square"), ArgumentError);
}

TEST(Waveform, TriangularVisitsTheExtremes) {
    EXPECT_DOUBLE_EQ(alpha_at_phase(72.0, Waveform::Triangular, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(alpha_at_phase(72.0, Waveform::Triangular, 0.25), 72.0);
    EXPECT_DOUBLE_EQ(alpha_at_phase(72.0, Waveform::Triangular, 0.5), 0.0);
    EXPECT_DOUBLE_EQ(alpha_at_phase(72.0, Waveform::Triangular, 0.75), -72.0);
    EXPECT_DOUBLE_EQ(alpha_at_phase(72.0, Waveform::Triangular, 1.25), 72.0);
    EXPECT_NEAR(alpha_at_phase(72.0, Waveform::Sinusoidal, 0.25), 72.0, 1e-12);
}

TEST(AnchorRule, RateSignSelectsTheFoot) {
    EXPECT_EQ(anchor_rule(+1), Anchor::FR);
    EXPECT_EQ(anchor_rule(-1), Anchor::FL);
    EXPECT_FALSE(anchor_rule(0).has_value());
}

TEST(AlignOrientation, ParallelFieldKeepsThePose) {
    const Quat prev(Eigen::AngleAxisd(0.4, Vec3(0.2, 1.0, -0.3).normalized()));
    const Vec3 B = 5e-3 * (prev * Vec3::UnitX());
    EXPECT_EQ(align_orientation(prev, B, Vec3::UnitX()).coeffs(), prev.coeffs());
}

TEST(AlignOrientation, BodyAxisFollowsAnyField) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
        const Quat prev(Eigen::AngleAxisd(3.0 * (i % 7) / 7.0, random_unit(rng)));
        const Vec3 B = 7e-3 * random_unit(rng);
        const Quat q = align_orientation(prev, B, Vec3::UnitX());
        EXPECT_NEAR(q.norm(), 1.0, 1e-12);
        EXPECT_LT(((q * Vec3::UnitX()) - B.normalized()).norm(), 1e-9);
    }
}

TEST(AlignOrientation, AntiparallelTurnsAboutTheVertical) {
    const Quat q = align_orientation(Quat::Identity(), Vec3(-1e-3, 0, 0), Vec3::UnitX());
    EXPECT_LT(((q * Vec3::UnitX()) - Vec3(-1, 0, 0)).norm(), 1e-12);
    EXPECT_LT(((q * Vec3::UnitY()) - Vec3::UnitY()).norm(), 1e-12);
    EXPECT_THROW(align_orientation(Quat::Identity(), Vec3::Zero(), Vec3::UnitX()), ArgumentError);
}

TEST(AlignOrientation, SmallStepsComposeLikeOneStep) {
    const Quat start = Quat::Identity();
    const Vec3 b0 = Vec3::UnitX();
    const Vec3 b2 = Quat(Eigen::AngleAxisd(0.02, Vec3(0, 0.6, 0.8))) * b0;
    const Vec3 b1 = Quat(Eigen::AngleAxisd(0.01, Vec3(0, 0.6, 0.8))) * b0;
    const Quat two = align_orientation(align_orientation(start, b1, b0), b2, b0);
    const Quat one = align_orientation(start, b2, b0);
    EXPECT_LT(two.angularDistance(one), 1e-6);
}

TEST(StepPose, UnchangedFieldLeavesTheStateAlone) {
    const RobotGeometry g;
    const Plane floor;
    const Vec3 B = cone(66.0).B(20.0, 0.0, Vec3::Zero());
    const RobotState s = place_on_surface(g, floor, B, Vec3::Zero(), Anchor::FR);
    const StepResult r = step_pose(s, B, Anchor::FR, g, floor);
    EXPECT_FALSE(r.anchor_switched);
    EXPECT_LT((r.state.reference_position - s.reference_position).norm(), 1e-15);
    EXPECT_LT(r.state.orientation.angularDistance(s.orientation), 1e-12);
}

TEST(StepPose, AnchoredFootStaysPutOverAHalfCycle) {
    const RobotGeometry g;
    const Plane floor;
    const FieldModel f = cone(66.0);
    RobotState s = place_on_surface(g, floor, f.B(0.0, 0.0, Vec3::Zero()), Vec3::Zero(), Anchor::FR);
    const Vec3 start = foot_world(s, g, Foot::FR);
    for (int i = 1; i <= 90; ++i) {
        const StepResult r = step_pose(s, f.B(72.0 * i / 90.0, 0.0, Vec3::Zero()), Anchor::FR, g, floor);
        s = r.state;
        EXPECT_FALSE(r.penetration);
        EXPECT_LT((foot_world(s, g, Foot::FR) - start).norm(), 1e-12);
        EXPECT_NEAR(s.orientation.norm(), 1.0, 1e-12);
    }
    EXPECT_LT((foot_world(s, g, Foot::FR) - start).norm(), 1e-9);
}

TEST(StepPose, AnchorSwitchRegistersTheNewFoot) {
    const RobotGeometry g;
    const Plane floor;
    const FieldModel f = cone(66.0);
    RobotState s = place_on_surface(g, floor, f.B(0.0, 0.0, Vec3::Zero()), Vec3::Zero(), Anchor::FR);
    s = step_pose(s, f.B(40.0, 0.0, Vec3::Zero()), Anchor::FR, g, floor).state;
    s.reference_position.y() += 3e-10; // drift the switch must remove
    const StepResult r = step_pose(s, f.B(35.0, 0.0, Vec3::Zero()), Anchor::FL, g, floor);
    EXPECT_TRUE(r.anchor_switched);
    EXPECT_NEAR(floor.height(foot_world(r.state, g, Foot::FL)), 0.0, 1e-15);
}

TEST(StepPose, ReportsPenetrationBeyondTolerance) {
    const RobotGeometry g;
    const Plane floor;
    RobotState s = place_on_surface(g, floor, Vec3(1, 0, 0), Vec3::Zero(), Anchor::NONE);
    s.reference_position.y() -= 0.5e-3;
    const StepResult r = step_pose(s, Vec3(1, 0, 0), Anchor::NONE, g, floor);
    EXPECT_TRUE(r.penetration);
    EXPECT_NEAR(r.max_penetration, 0.5e-3, 1e-12);
}

TEST(StrideEstimate, DegenerateInputs) {
    EXPECT_EQ(stride_estimate(1e-3, 66.0, 0.0), 0.0);
    EXPECT_EQ(stride_estimate(1e-3, 0.0, 72.0), 0.0);
    const double psi = std::atan(std::tan(deg2rad(66.0)) * std::sin(deg2rad(72.0)));
    EXPECT_DOUBLE_EQ(stride_estimate(1e-3, 66.0, 72.0), 2e-3 * std::sin(psi));
}

TEST(Calibration, SpanLandsInPlausibleBracketAndRoundTrips) {
    const double d = calibrated_span();
    EXPECT_GE(d, 0.7e-3);
    EXPECT_LE(d, 1.3e-3);
    EXPECT_NEAR(cone_stride(d, 66.0, 72.0), kDefaultStrideTarget, 1e-6);
    EXPECT_THROW(calibrate_foot_span(0.0, 66.0, 72.0), ArgumentError);
    EXPECT_THROW(calibrate_foot_span(50e-3, 66.0, 72.0), ArgumentError);
}

TEST(StrideSimulated, OneCycleAtTheOperatingPoint) {
    const CycleResult c = simulate_cycle(RobotGeometry::with_foot_span(calibrated_span()), cone(66.0),
                                         72.0, 360);
    EXPECT_NEAR(c.stride, 1.67e-3, 0.01e-3);
    EXPECT_LT(std::abs(c.lateral), 0.05 * c.stride);
    EXPECT_LT(c.max_anchor_drift, 1e-9);
    EXPECT_NEAR(c.displacement.y(), 0.0, 1e-9);
}

TEST(StrideSimulated, ClosedFormAgreesWithinTenPercent) {
    const double d = calibrated_span();
    for (double theta : {39.0, 50.0, 66.0}) {
        for (double a : {52.0, 72.0, 90.0}) {
            const double est = stride_estimate(d, theta, a);
            EXPECT_NEAR(cone_stride(d, theta, a), est, 0.1 * est) << theta << " " << a;
        }
    }
}

TEST(StrideSimulated, CharacterisationRangeOverAlpha) {
    const double d = calibrated_span();
    double prev = 0.0;
    for (double a : {52.0, 62.0, 72.0, 81.0, 90.0}) {
        const double s = cone_stride(d, 66.0, a);
        EXPECT_GE(s, 1.4e-3);
        EXPECT_LE(s, 1.9e-3);
        EXPECT_GE(s, prev);
        prev = s;
    }
}

TEST(StrideSimulated, NinetyDegreesIsSlightlyFasterThanSeventyTwo) {
    const double d = calibrated_span();
    const double gain = cone_stride(d, 66.0, 90.0) / cone_stride(d, 66.0, 72.0) - 1.0;
    EXPECT_NEAR(100.0 * gain, 1.8, 1.5);
}

TEST(StrideSimulated, ConvergedInStepCount) {
    const double d = calibrated_span();
    const double ref = cone_stride(d, 66.0, 72.0, 1440);
    for (int steps : {180, 360, 720}) EXPECT_NEAR(cone_stride(d, 66.0, 72.0, steps), ref, 1e-3 * ref);
    EXPECT_THROW(cone_stride(d, 66.0, 72.0, 6), ArgumentError);
}

TEST(StrideSimulated, MonotoneInAlphaAndPitch) {
    const double d = calibrated_span();
    double prev = -1.0;
    for (double a = 0.0; a <= 90.0; a += 7.5) {
        const double s = cone_stride(d, 66.0, a, 180);
        EXPECT_GE(s, prev - 1e-15) << a;
        prev = s;
    }
    prev = -1.0;
    for (double th = 30.0; th <= 66.0; th += 4.0) {
        const double s = cone_stride(d, th, 72.0, 180);
        EXPECT_GE(s, prev - 1e-15) << th;
        prev = s;
    }
}

TEST(StrideSimulated, WaveformDoesNotChangeTheStride) {
    const double d = calibrated_span();
    CycleOptions sine;
    sine.waveform = Waveform::Sinusoidal;
    EXPECT_NEAR(cone_stride(d, 66.0, 72.0, 360, sine), cone_stride(d, 66.0, 72.0), 1e-3 * kDefaultStrideTarget);
}

TEST(StrideSimulated, HeadingEquivariance) {
    const RobotGeometry g = RobotGeometry::with_foot_span(calibrated_span());
    const CycleResult base = simulate_cycle(g, cone(66.0), 72.0, 360);
    for (double beta : {30.0, -75.0, 160.0}) {
        CycleOptions opt;
        opt.beta = beta;
        const CycleResult turned = simulate_cycle(g, cone(66.0), 72.0, 360, Vec3::Zero(), opt);
        EXPECT_LT((turned.displacement - yaw_rotation(beta) * base.displacement).norm(), 1e-9);
    }
}

TEST(StrideSimulated, ReversedWaveformMirrorsAcrossTheHeading) {
    const RobotGeometry g = RobotGeometry::with_foot_span(calibrated_span());
    CycleOptions rev;
    rev.reverse = true;
    const CycleResult a = simulate_cycle(g, cone(66.0), 72.0, 360);
    const CycleResult b = simulate_cycle(g, cone(66.0), 72.0, 360, Vec3::Zero(), rev);
    EXPECT_NEAR(b.stride, a.stride, 1e-9);
    EXPECT_NEAR(b.lateral, -a.lateral, 1e-9);
}

TEST(StrideSimulated, HeightReturnsAfterACycle) {
    const RobotGeometry g = RobotGeometry::with_foot_span(calibrated_span());
    const Plane floor;
    const CycleResult c = simulate_cycle(g, cone(66.0), 72.0, 360);
    const RobotState start = place_on_surface(g, floor, cone(66.0).B(0.0, 0.0, Vec3::Zero()), Vec3::Zero());
    EXPECT_NEAR(floor.height(c.final_state.reference_position), floor.height(start.reference_position), 1e-9);
}

TEST(StrideSimulated, InfeasibleAnchoringReportsTheStep) {
    // Uniform cone field on a ceiling: nothing holds the robot up.
    CycleOptions opt;
    opt.gravity = Vec3(0, 9.81, 0);
    try {
        simulate_cycle(RobotGeometry{}, cone(66.0), 72.0, 360, Vec3::Zero(), opt);
        FAIL() << "expected SimulationError";
    } catch (const SimulationError& e) {
        EXPECT_EQ(e.step(), 1);
    }
}

TEST(StrideSimulated, RigFieldOperatingPlaneWalksForward) {
    RigConfig rig;
    const FieldModel f(RigFieldModel{rig});
    const CycleResult c = simulate_cycle(RobotGeometry::with_foot_span(calibrated_span()), f, 72.0, 180,
                                         rig.working_point());
    EXPECT_GT(c.stride, 0.0);
    EXPECT_LT(c.max_anchor_drift, 1e-9);
}

TEST(LoadFactor, LinearSlipModel) {
    EXPECT_DOUBLE_EQ(load_factor(0.0), 1.0);
    EXPECT_DOUBLE_EQ(load_factor(100e-6), 0.7);
    EXPECT_DOUBLE_EQ(load_factor(50e-6), 0.85);
    EXPECT_NEAR(2.0 * load_factor(50e-6), 1.7, 1e-12);
    EXPECT_EQ(load_factor(120e-6), 0.0);
    EXPECT_TRUE(over_capacity(120e-6));
    EXPECT_FALSE(over_capacity(100e-6));
    EXPECT_THROW(load_factor(-1e-6), ArgumentError);
}

TEST(Stability, OperatingPointIsQuiet) {
    EXPECT_FALSE(stability_check(GaitParams{}, 66.0).any());
    EXPECT_TRUE(stability_check(GaitParams{80.0}, 66.0).alpha_exceeds_72);
    EXPECT_TRUE(stability_check(GaitParams{}, 71.0).pitch_exceeds_70);
    EXPECT_TRUE(stability_check(GaitParams{72.0, 1.6}, 66.0).freq_exceeds_1p5);
    EXPECT_EQ(stability_check(GaitParams{80.0, 1.6}, 71.0).bits(), 7);
    StabilityThresholds t;
    t.alpha_max = 85.0;
    EXPECT_FALSE(stability_check(GaitParams{80.0}, 66.0, t).alpha_exceeds_72);
}
