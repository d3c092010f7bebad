// Shared numeric types, constants and error types.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>

namespace maggait {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

/// Vacuum permeability [T·m/A].
inline constexpr double kMu0 = 4.0e-7 * kPi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Wraps an angle in degrees into (-180, 180].
inline double normalize_degrees(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180.0) r += 360.0;
    if (r > 180.0) r -= 360.0;
    return r;
}

inline Quat axis_angle(const Vec3& axis, double radians) {
    return Quat(Eigen::AngleAxisd(radians, axis.normalized()));
}

/// Rotation about the world vertical (+Y) by `deg` degrees.
inline Quat yaw_rotation(double deg) { return axis_angle(Vec3::UnitY(), deg2rad(deg)); }

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

// Error hierarchy. The CLI maps these onto its exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or unreadable configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid argument or domain violation (exit code 3).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Evaluation at a geometric singularity.
class SingularityError : public Error {
public:
    using Error::Error;
};

/// Runtime failure during a simulation (exit code 4).
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, long long step = -1)
        : Error(what), step_(step) {}
    long long step() const noexcept { return step_; }

private:
    long long step_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ArgumentError(msg);
}

} // namespace maggait
