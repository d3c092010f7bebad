// Millirobot rigid body: feet, capillary tip, dipole moment and load analyses.
#pragma once

#include "magnetostatics.hpp"

#include <limits>
#include <string_view>

namespace maggait {

inline constexpr double kStandardGravity = 9.81;

/// Infinite plane; the normal points into the half-space the robot lives in.
struct Plane {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitY();

    double height(const Vec3& p) const { return normal.dot(p - point); }
    Vec3 project(const Vec3& p) const { return p - height(p) * normal; }

    void validate() const {
        require(std::abs(normal.norm() - 1.0) <= 1e-12, "surface normal must be a unit vector");
    }
};

enum class Foot { FL = 0, FR = 1, RL = 2, RR = 3 };
enum class Anchor { FL, FR, TIP, NONE };

inline std::string_view to_string(Anchor a) {
    switch (a) {
    case Anchor::FL: return "FL";
    case Anchor::FR: return "FR";
    case Anchor::TIP: return "TIP";
    case Anchor::NONE: return "NONE";
    }
    return "NONE";
}

inline Anchor anchor_from_string(std::string_view s) {
    if (s == "FL") return Anchor::FL;
    if (s == "FR") return Anchor::FR;
    if (s == "TIP") return Anchor::TIP;
    if (s == "NONE") return Anchor::NONE;
    throw ArgumentError("unknown anchor '" + std::string(s) + "'");
}

/// The robot's own magnet: NdFeB N45 cylinder, OD 1 mm, height 1 mm.
inline Magnet robot_magnet(double Br = remanence::N45) {
    return Magnet{Cylinder{0.5e-3, 1.0e-3}, Br, Vec3::UnitZ(), {}};
}

struct RobotGeometry {
    // Body frame: +X along the magnet (nose), +Y up out of the chassis, +Z right.
    std::array<Vec3, 4> foot_offsets{};
    Vec3 body_axis = Vec3::UnitX();
    double moment_magnitude = dipole_moment_of(robot_magnet()).norm(); // A·m^2
    double body_mass = 25e-6;  // kg
    double cargo_mass = 0.0;   // kg
    Vec3 capillary_tip_offset{1.5e-3, -0.80e-3, 0.0};

    RobotGeometry() : RobotGeometry(with_foot_span(1.0e-3)) {}

    /// Default chassis with the given lateral FL-FR span d.
    static RobotGeometry with_foot_span(double d) {
        RobotGeometry g(0);
        const double x_front = -0.6e-3, x_rear = 0.6e-3, y = -0.75e-3;
        g.foot_offsets[int(Foot::FL)] = {x_front, y, -d / 2.0};
        g.foot_offsets[int(Foot::FR)] = {x_front, y, d / 2.0};
        g.foot_offsets[int(Foot::RL)] = {x_rear, y, -d / 2.0};
        g.foot_offsets[int(Foot::RR)] = {x_rear, y, d / 2.0};
        return g;
    }

    /// Moves FL/FR (and the rear pair) laterally to the span d, keeping their
    /// mid-line.
    void set_foot_span(double d) {
        require(d > 0.0, "foot span must be positive");
        for (Foot left : {Foot::FL, Foot::RL}) {
            Foot right = left == Foot::FL ? Foot::FR : Foot::RR;
            const double mid = 0.5 * (foot_offsets[int(left)].z() + foot_offsets[int(right)].z());
            foot_offsets[int(left)].z() = mid - d / 2.0;
            foot_offsets[int(right)].z() = mid + d / 2.0;
        }
    }

    double front_foot_span() const {
        return std::abs(foot_offsets[int(Foot::FL)].z() - foot_offsets[int(Foot::FR)].z());
    }

    /// Unit vector from FL to FR in the body frame.
    Vec3 lateral_axis() const {
        return (foot_offsets[int(Foot::FR)] - foot_offsets[int(Foot::FL)]).normalized();
    }

    Vec3 moment_body() const { return moment_magnitude * body_axis; }
    double total_mass() const { return body_mass + cargo_mass; }

    const Vec3& foot(Foot f) const { return foot_offsets[int(f)]; }

    /// Body-frame contact point of an anchor (NONE pivots about the body origin).
    Vec3 anchor_offset(Anchor a) const {
        switch (a) {
        case Anchor::FL: return foot(Foot::FL);
        case Anchor::FR: return foot(Foot::FR);
        case Anchor::TIP: return capillary_tip_offset;
        case Anchor::NONE: return Vec3::Zero();
        }
        return Vec3::Zero();
    }

    void validate() const {
        const double h = foot_offsets[0].y();
        for (const auto& f : foot_offsets) {
            require(all_finite(f), "foot offsets must be finite");
            require(std::abs(f.y() - h) <= 1e-15, "feet must share one body-frame height");
        }
        require(front_foot_span() > 0.0, "front foot span must be positive");
        require(std::abs(body_axis.norm() - 1.0) <= 1e-12, "body axis must be a unit vector");
        require(moment_magnitude >= 0.0, "moment magnitude must be >= 0");
        require(body_mass > 0.0, "body mass must be positive");
        require(cargo_mass >= 0.0, "cargo mass must be >= 0");
        require(all_finite(capillary_tip_offset), "capillary tip offset must be finite");
    }

private:
    explicit RobotGeometry(int) {}
};

struct RobotState {
    Vec3 reference_position = Vec3::Zero(); // body origin (magnet centre), world
    Quat orientation = Quat::Identity();    // body -> world
    Anchor anchor = Anchor::NONE;
    double time = 0.0;

    Vec3 to_world(const Vec3& body_offset) const {
        return reference_position + orientation * body_offset;
    }
};

inline Vec3 foot_world(const RobotState& s, const RobotGeometry& g, Foot f) {
    return s.to_world(g.foot(f));
}

inline Vec3 tip_world(const RobotState& s, const RobotGeometry& g) {
    return s.to_world(g.capillary_tip_offset);
}

inline Vec3 anchor_world(const RobotState& s, const RobotGeometry& g) {
    return s.to_world(g.anchor_offset(s.anchor));
}

inline Vec3 world_moment(const RobotState& s, const RobotGeometry& g) {
    return s.orientation * g.moment_body();
}

/// Gradient force on a dipole, F_i = sum_j m_j dB_j/dx_i [N].
inline Vec3 magnetic_force(const Vec3& moment, const Mat3& gradient) {
    return gradient.transpose() * moment;
}

inline Vec3 weight(const RobotGeometry& g, const Vec3& gravity) { return g.total_mass() * gravity; }

struct AnchoringReport {
    Vec3 force = Vec3::Zero();    // magnetic force [N]
    double normal_force = 0.0;    // magnetic force into the surface [N]
    double gravity_component = 0.0; // gravity load the anchor must resist [N]
    double ratio = 0.0;           // normal_force / gravity_component (inf when unloaded)
    bool feasible = false;
};

/// Compares the gradient force pressing the robot onto the surface with the
/// gravity load that would peel or slide it off. Gravity that presses the
/// robot onto the surface counts toward holding it there.
inline AnchoringReport anchoring_analysis(const RobotState& state, const FieldSample& sample,
                                          const RobotGeometry& g, const Vec3& gravity,
                                          const Plane* surface, double safety_factor = 1.0) {
    if (surface == nullptr) throw ArgumentError("anchoring analysis needs an active surface");
    AnchoringReport r;
    r.force = magnetic_force(world_moment(state, g), sample.gradient);
    const Vec3& n = surface->normal;
    r.normal_force = -r.force.dot(n);
    const Vec3 W = weight(g, gravity);
    const double w_n = W.dot(n);
    const Vec3 w_t = W - w_n * n;
    r.gravity_component = std::max(w_n, 0.0) + w_t.norm();
    const double pressing = std::max(-w_n, 0.0);
    if (r.gravity_component > 0.0) {
        r.ratio = r.normal_force / r.gravity_component;
    } else {
        r.ratio = r.normal_force > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    }
    r.feasible = (r.normal_force + pressing > 0.0) &&
                 (r.gravity_component == 0.0 || r.ratio >= safety_factor);
    return r;
}

} // namespace maggait
