// Steering: heading measurement and a waypoint follower that re-aims the rig
// yaw (beta) once per gait cycle.
#pragma once

#include "robot.hpp"

#include <vector>

namespace maggait {

namespace detail {

inline Vec3 surface_reference_axis(const Plane& surface) {
    Vec3 e1 = Vec3::UnitX() - Vec3::UnitX().dot(surface.normal) * surface.normal;
    if (e1.norm() < 1e-9) e1 = Vec3::UnitZ() - Vec3::UnitZ().dot(surface.normal) * surface.normal;
    return e1.normalized();
}

} // namespace detail

/// Azimuth [deg] of an in-plane direction, measured like beta (about the
/// surface normal, from the world X axis projected into the surface).
inline double azimuth_in_plane(const Vec3& direction, const Plane& surface) {
    const Vec3& n = surface.normal;
    const Vec3 v = direction - direction.dot(n) * n;
    if (v.norm() < 1e-9) throw ArgumentError("direction is perpendicular to the surface");
    const Vec3 e1 = detail::surface_reference_axis(surface);
    return rad2deg(std::atan2(n.dot(e1.cross(v)), e1.dot(v)));
}

inline double heading_of(const RobotState& state, const Plane& surface,
                         const Vec3& body_axis = Vec3::UnitX()) {
    return azimuth_in_plane(state.orientation * body_axis, surface);
}

struct WaypointPlan {
    std::vector<Vec2> points;      // (x, z) on the surface [m]
    double arrival_tolerance = 0.5e-3;
    double heading_tolerance = 5.0; // degrees

    void validate() const {
        require(!points.empty(), "waypoint plan is empty");
        require(arrival_tolerance > 0.0 && heading_tolerance > 0.0,
                "waypoint tolerances must be positive");
        for (std::size_t i = 1; i < points.size(); ++i) {
            require((points[i] - points[i - 1]).norm() > arrival_tolerance,
                    "consecutive waypoints must be farther apart than the arrival tolerance");
        }
    }
};

struct ControllerSettings {
    double slew_rate = 30.0;          // deg/s
    long long step_budget = 200000;   // steps allowed per waypoint
};

/// Plan cursor; part of the simulation state, not of the controller.
struct ControllerState {
    std::size_t cursor = 0;
    long long steps_on_leg = 0;
    Vec3 leg_start = Vec3::Zero();
    bool done = false;
    bool timed_out = false;
};

struct ControllerDecision {
    double beta = 0.0;   // commanded beta [deg]
    bool turning = false;
    bool done = false;
};

inline Vec3 waypoint_world(const WaypointPlan& plan, std::size_t i, const Plane& surface) {
    return surface.project(Vec3(plan.points[i].x(), 0.0, plan.points[i].y()));
}

/// Whether the reference point reached the current waypoint: inside the
/// arrival tolerance, or past the line through the waypoint normal to the leg.
inline bool waypoint_reached(const RobotState& state, const WaypointPlan& plan,
                             const ControllerState& cs, const Plane& surface) {
    const Vec3 target = waypoint_world(plan, cs.cursor, surface);
    const Vec3 here = surface.project(state.reference_position);
    const Vec3 to_target = target - here;
    if (to_target.norm() <= plan.arrival_tolerance) return true;
    const Vec3 leg = target - surface.project(cs.leg_start);
    return leg.norm() > plan.arrival_tolerance && to_target.dot(leg) <= 0.0;
}

/// Beta command at a cycle boundary: turn toward the waypoint bearing when the
/// heading error exceeds the tolerance, otherwise hold the current beta.
inline ControllerDecision waypoint_controller(const RobotState& state, const WaypointPlan& plan,
                                              const ControllerState& cs, const Plane& surface,
                                              double current_beta,
                                              const Vec3& body_axis = Vec3::UnitX()) {
    ControllerDecision d;
    d.beta = current_beta;
    if (cs.done || cs.cursor >= plan.points.size()) {
        d.done = true;
        return d;
    }
    const Vec3 target = waypoint_world(plan, cs.cursor, surface);
    const Vec3 here = surface.project(state.reference_position);
    if ((target - here).norm() <= plan.arrival_tolerance) return d;
    const double bearing = azimuth_in_plane(target - here, surface);
    const double error = normalize_degrees(bearing - heading_of(state, surface, body_axis));
    if (std::abs(error) > plan.heading_tolerance) {
        d.beta = current_beta + error;
        d.turning = true;
    }
    return d;
}

} // namespace maggait
