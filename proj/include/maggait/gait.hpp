// Quasi-static pivot-walking kinematics.
//
// The body axis tracks the field direction with zero lag. While a foot is
// anchored the body roll is fixed by the contact: the lateral foot axis stays
// parallel to the surface, and the body pivots about the anchored foot.
#pragma once

#include "field_model.hpp"
#include "robot.hpp"

#include <optional>

namespace maggait {

enum class Waveform { Triangular, Sinusoidal };

inline std::string_view to_string(Waveform w) {
    return w == Waveform::Triangular ? "triangular" : "sinusoidal";
}

inline Waveform waveform_from_string(std::string_view s) {
    if (s == "triangular") return Waveform::Triangular;
    if (s == "sinusoidal") return Waveform::Sinusoidal;
    throw ArgumentError("unknown waveform '" + std::string(s) + "'");
}

struct GaitParams {
    double alpha_max = 72.0; // degrees
    double frequency = 1.2;  // Hz
    Waveform waveform = Waveform::Triangular;
    int steps_per_cycle = 360;

    void validate() const {
        require(alpha_max >= 0.0 && alpha_max <= 180.0, "alpha_max must be in [0, 180]");
        require(frequency > 0.0 && std::isfinite(frequency), "frequency must be positive");
        require(steps_per_cycle >= 8 && steps_per_cycle % 2 == 0,
                "steps_per_cycle must be even and >= 8");
    }
};

/// alpha over one cycle, phase in [0, 1): 0 -> +max -> 0 -> -max -> 0.
inline double alpha_at_phase(double alpha_max, Waveform w, double phase) {
    phase -= std::floor(phase);
    if (w == Waveform::Sinusoidal) return alpha_max * std::sin(2.0 * kPi * phase);
    if (phase < 0.25) return alpha_max * 4.0 * phase;
    if (phase < 0.75) return alpha_max * (2.0 - 4.0 * phase);
    return alpha_max * (4.0 * phase - 4.0);
}

inline double alpha_at_phase(const GaitParams& p, double phase) {
    return alpha_at_phase(p.alpha_max, p.waveform, phase);
}

struct StabilityThresholds {
    double alpha_max = 72.0; // degrees
    double pitch = 70.0;     // degrees
    double frequency = 1.5;  // Hz
};

struct StabilityFlags {
    bool alpha_exceeds_72 = false;
    bool pitch_exceeds_70 = false;
    bool freq_exceeds_1p5 = false;

    int bits() const {
        return (alpha_exceeds_72 ? 1 : 0) | (pitch_exceeds_70 ? 2 : 0) | (freq_exceeds_1p5 ? 4 : 0);
    }
    bool any() const { return bits() != 0; }
    bool operator==(const StabilityFlags&) const = default;
};

inline StabilityFlags stability_check(const GaitParams& params, double theta,
                                      const StabilityThresholds& t = {}) {
    return {params.alpha_max > t.alpha_max, theta > t.pitch, params.frequency > t.frequency};
}

/// Minimal rotation, composed with prev, that maps the world-frame body axis
/// onto B. Antiparallel input turns 180 deg about the world vertical made
/// perpendicular to the current axis.
inline Quat align_orientation(const Quat& prev, const Vec3& B, const Vec3& body_axis) {
    const double n = B.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw ArgumentError("cannot align to a zero field");
    const Vec3 b = B / n;
    const Vec3 a = (prev * body_axis).normalized();
    const Vec3 c = a.cross(b);
    const double s = c.norm();
    const double cosang = a.dot(b);
    if (s < 1e-15 && cosang > 0.0) return prev;
    Quat turn;
    if (cosang < 0.0 && s < 1e-9) {
        Vec3 axis = Vec3::UnitY() - Vec3::UnitY().dot(a) * a;
        if (axis.norm() < 1e-9) axis = Vec3::UnitZ() - Vec3::UnitZ().dot(a) * a;
        turn = axis_angle(axis, kPi);
    } else {
        turn = Quat(Eigen::AngleAxisd(std::atan2(s, cosang), c / s));
    }
    return (turn * prev).normalized();
}

/// Rolls q about its body axis so the lateral axis lies in the surface plane,
/// keeping the side closest to the current lateral direction.
inline Quat level_orientation(const Quat& q, const Vec3& body_axis, const Vec3& lateral_axis,
                              const Vec3& normal) {
    const Vec3 x = (q * body_axis).normalized();
    const Vec3 lat = q * lateral_axis;
    Vec3 target = x.cross(normal);
    if (target.norm() < 1e-9) return q; // body axis along the normal: roll is free
    target.normalize();
    if (target.dot(lat) < 0.0) target = -target;
    const Vec3 lat_perp = (lat - lat.dot(x) * x).normalized();
    const double ang = std::atan2(lat_perp.cross(target).dot(x), lat_perp.dot(target));
    if (ang == 0.0) return q;
    return (Quat(Eigen::AngleAxisd(ang, x)) * q).normalized();
}

/// +1 (alpha rising) anchors FR, -1 anchors FL, 0 holds (nullopt).
inline std::optional<Anchor> anchor_rule(int alpha_rate_sign) {
    if (alpha_rate_sign > 0) return Anchor::FR;
    if (alpha_rate_sign < 0) return Anchor::FL;
    return std::nullopt;
}

inline int rate_sign(double from, double to) { return (to > from) - (to < from); }

struct StepOptions {
    double clearance_tolerance = 0.2e-3; // allowed foot penetration [m]
    double load_factor = 1.0;            // in-plane slip multiplier
};

struct StepResult {
    RobotState state;
    bool anchor_switched = false;
    bool penetration = false;
    double max_penetration = 0.0; // deepest foot below the surface [m], >= 0
};

/// Re-orients the robot to B while the anchor point stays fixed in the world.
inline StepResult step_pose(const RobotState& state, const Vec3& B, Anchor anchor,
                            const RobotGeometry& g, const Plane& surface,
                            const StepOptions& opt = {}) {
    StepResult r;
    RobotState s = state;
    if (anchor != s.anchor) {
        r.anchor_switched = true;
        s.anchor = anchor;
        if (anchor != Anchor::NONE) {
            // Registration: the new anchor sits exactly on the surface.
            const double h = surface.height(anchor_world(s, g));
            s.reference_position -= h * surface.normal;
        }
    }
    const Vec3 pivot = anchor_world(s, g);
    Quat q = align_orientation(s.orientation, B, g.body_axis);
    if (anchor != Anchor::NONE) q = level_orientation(q, g.body_axis, g.lateral_axis(), surface.normal);
    Vec3 ref = pivot - q * g.anchor_offset(anchor);

    if (opt.load_factor != 1.0) {
        Vec3 delta = ref - s.reference_position;
        const Vec3 along_n = delta.dot(surface.normal) * surface.normal;
        ref = s.reference_position + along_n + opt.load_factor * (delta - along_n);
    }
    s.orientation = q;
    s.reference_position = ref;

    for (const auto& f : g.foot_offsets) {
        const double depth = -surface.height(s.to_world(f));
        r.max_penetration = std::max(r.max_penetration, depth);
    }
    r.penetration = r.max_penetration > opt.clearance_tolerance;
    r.state = s;
    return r;
}

/// Orientation aligned and levelled to B, with the FL/FR feet on the surface
/// below the point.
inline RobotState place_on_surface(const RobotGeometry& g, const Plane& surface, const Vec3& B,
                                   const Vec3& point, Anchor anchor = Anchor::FR) {
    // Start upright on the surface, facing the in-plane part of B, so a large
    // heading does not roll the robot onto its back.
    Quat upright = Quat::FromTwoVectors(Vec3::UnitY(), surface.normal);
    const Vec3 in_plane = B - B.dot(surface.normal) * surface.normal;
    if (in_plane.norm() > 1e-12 * B.norm()) {
        const Vec3 x = upright * g.body_axis;
        const double yaw = std::atan2(x.cross(in_plane).dot(surface.normal), x.dot(in_plane));
        upright = (Quat(Eigen::AngleAxisd(yaw, surface.normal)) * upright).normalized();
    }
    RobotState s;
    s.orientation = level_orientation(align_orientation(upright, B, g.body_axis),
                                      g.body_axis, g.lateral_axis(), surface.normal);
    s.reference_position = surface.project(point);
    s.anchor = anchor;
    const double h = surface.height(foot_world(s, g, anchor == Anchor::FL ? Foot::FL : Foot::FR));
    s.reference_position -= h * surface.normal;
    return s;
}

/// Closed-form chord: psi = atan(tan(theta) sin(alpha_max)), stride = 2 d sin(psi).
inline double stride_estimate(double d, double theta, double alpha_max) {
    const double psi = std::atan(std::tan(deg2rad(theta)) * std::sin(deg2rad(alpha_max)));
    return 2.0 * d * std::sin(psi);
}

struct CycleOptions {
    Waveform waveform = Waveform::Triangular;
    double beta = 0.0;
    bool reverse = false;            // run the alpha waveform with opposite sign
    std::optional<Vec3> gravity;     // enables the anchoring check
    double safety_factor = 1.0;
};

struct CycleResult {
    Vec3 displacement = Vec3::Zero(); // reference point, world
    double stride = 0.0;              // along the heading
    double lateral = 0.0;             // across the heading (+ right)
    double max_anchor_drift = 0.0;    // per-step anchored-point motion [m]
    RobotState final_state;
};

/// One full alpha cycle starting at alpha = 0 with the robot placed at start
/// on a horizontal plane through start.
inline CycleResult simulate_cycle(const RobotGeometry& g, const FieldModel& field,
                                  double alpha_max, int steps, const Vec3& start = Vec3::Zero(),
                                  const CycleOptions& opt = {}) {
    require(steps >= 8, "steps must be >= 8");
    const Plane surface{start, Vec3::UnitY()};
    const double sign = opt.reverse ? -1.0 : 1.0;
    auto alpha_of = [&](int i) {
        return sign * alpha_at_phase(alpha_max, opt.waveform, double(i) / double(steps));
    };
    const Anchor first = alpha_of(1) < alpha_of(0) ? Anchor::FL : Anchor::FR;
    RobotState s = place_on_surface(g, surface, field.B(0.0, opt.beta, start), start, first);
    const Vec3 origin = s.reference_position;

    CycleResult r;
    for (int i = 1; i <= steps; ++i) {
        const double a0 = alpha_of(i - 1), a1 = alpha_of(i);
        const Anchor anchor = anchor_rule(rate_sign(a0, a1)).value_or(s.anchor);
        const FieldSample fs = field.sample(a1, opt.beta, s.reference_position);
        if (opt.gravity) {
            const auto rep = anchoring_analysis(s, fs, g, *opt.gravity, &surface, opt.safety_factor);
            if (!rep.feasible) throw SimulationError("anchoring infeasible", i);
        }
        const Vec3 before = (anchor == s.anchor) ? anchor_world(s, g) : Vec3::Constant(NAN);
        const StepResult step = step_pose(s, fs.B, anchor, g, surface);
        s = step.state;
        if (!step.anchor_switched)
            r.max_anchor_drift = std::max(r.max_anchor_drift, (anchor_world(s, g) - before).norm());
    }
    const Vec3 heading = yaw_rotation(opt.beta) * Vec3::UnitX();
    const Vec3 right = yaw_rotation(opt.beta) * Vec3::UnitZ();
    r.displacement = s.reference_position - origin;
    r.stride = r.displacement.dot(heading);
    r.lateral = r.displacement.dot(right);
    r.final_state = s;
    return r;
}

/// Net displacement along the heading over one full alpha cycle [m].
inline double stride_simulated(const RobotGeometry& g, const FieldModel& field, double alpha_max,
                               int steps, const Vec3& start = Vec3::Zero(),
                               const CycleOptions& opt = {}) {
    return simulate_cycle(g, field, alpha_max, steps, start, opt).stride;
}

inline constexpr double kDefaultStrideTarget = 2.0e-3 / 1.2; // 2.0 mm/s at 1.2 Hz

/// Foot span d in [0.2, 3.0] mm for which stride_simulated hits the target.
inline double calibrate_foot_span(const RobotGeometry& base, const FieldModel& field,
                                  double target_stride, double alpha_max, int steps = 360,
                                  const Vec3& start = Vec3::Zero()) {
    require(target_stride > 0.0, "target stride must be positive");
    auto stride_for = [&](double d) {
        RobotGeometry g = base;
        g.set_foot_span(d);
        return stride_simulated(g, field, alpha_max, steps, start);
    };
    double lo = 0.2e-3, hi = 3.0e-3;
    const double s_lo = stride_for(lo), s_hi = stride_for(hi);
    if (!(s_lo <= target_stride && target_stride <= s_hi))
        throw ArgumentError("target stride unreachable for foot span in [0.2, 3.0] mm");
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (stride_for(mid) < target_stride)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double calibrate_foot_span(double target_stride, double theta, double alpha_max,
                                  int steps = 360) {
    return calibrate_foot_span(RobotGeometry{}, FieldModel(ConeFieldModel{theta, 7.5e-3}),
                               target_stride, alpha_max, steps);
}

struct LoadModel {
    double capacity = 100e-6;       // kg
    double reduction_at_capacity = 0.3;
};

/// Empirical slip factor: 1 at no cargo, linear down to 0.7 at capacity,
/// 0 (immobile) beyond capacity.
inline double load_factor(double cargo_mass, const LoadModel& m = {}) {
    require(cargo_mass >= 0.0, "cargo mass must be >= 0");
    if (cargo_mass > m.capacity * (1.0 + 1e-12)) return 0.0;
    return 1.0 - m.reduction_at_capacity * cargo_mass / m.capacity;
}

inline bool over_capacity(double cargo_mass, const LoadModel& m = {}) {
    return load_factor(cargo_mass, m) == 0.0;
}

} // namespace maggait
