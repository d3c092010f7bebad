// Analytic fields of uniformly magnetized permanent magnets.
//
// Cuboids use the closed-form charged-surface solution (two charged faces per
// magnetization component, arctan/log kernels). Cylinders are treated as point
// dipoles; in this project they are only ever field receivers (the robot magnet)
// or far-field sources.
#pragma once

#include "core.hpp"

#include <algorithm>
#include <array>
#include <span>
#include <variant>
#include <vector>

namespace maggait {

/// Remanence defaults per NdFeB grade [T].
namespace remanence {
inline constexpr double N45 = 1.35;
inline constexpr double N40 = 1.28;
} // namespace remanence

struct Cuboid {
    Vec3 half_lengths; // [m], magnet frame
};

struct Cylinder {
    double radius; // [m]
    double height; // [m], along the magnet-frame z axis
};

using MagnetShape = std::variant<Cuboid, Cylinder>;

struct Pose {
    Vec3 position = Vec3::Zero();
    Quat orientation = Quat::Identity(); // magnet frame -> world
};

struct Magnet {
    MagnetShape shape;
    double remanence = remanence::N45;           // Br [T]
    Vec3 magnetization_axis = Vec3::UnitZ();     // unit, magnet frame
    Pose pose;

    double volume() const {
        return std::visit(
            [](const auto& s) -> double {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Cuboid>)
                    return 8.0 * s.half_lengths.prod();
                else
                    return kPi * s.radius * s.radius * s.height;
            },
            shape);
    }

    bool is_cuboid() const { return std::holds_alternative<Cuboid>(shape); }

    /// Throws ArgumentError on a violated invariant.
    void validate() const {
        std::visit(
            [](const auto& s) {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Cuboid>) {
                    require((s.half_lengths.array() > 0.0).all(),
                            "cuboid half-lengths must be positive");
                } else {
                    require(s.radius > 0.0 && s.height > 0.0,
                            "cylinder radius and height must be positive");
                }
            },
            shape);
        require(remanence > 0.0, "remanence must be positive");
        require(std::abs(magnetization_axis.norm() - 1.0) <= 1e-12,
                "magnetization axis must be a unit vector");
        require(std::abs(pose.orientation.norm() - 1.0) <= 1e-12,
                "magnet orientation must be a unit quaternion");
    }

    Vec3 to_local(const Vec3& world_point) const {
        return pose.orientation.conjugate() * (world_point - pose.position);
    }

    bool contains(const Vec3& world_point) const {
        const Vec3 p = to_local(world_point);
        return std::visit(
            [&](const auto& s) -> bool {
                using S = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<S, Cuboid>)
                    return (p.cwiseAbs().array() < s.half_lengths.array()).all();
                else
                    return std::hypot(p.x(), p.y()) < s.radius &&
                           std::abs(p.z()) < 0.5 * s.height;
            },
            shape);
    }
};

/// Field and gradient at one point. gradient(i, j) = dB_i/dx_j.
struct FieldSample {
    Vec3 position = Vec3::Zero();
    Vec3 B = Vec3::Zero();
    Mat3 gradient = Mat3::Zero();
    bool inside_magnet = false; // gradient is unreliable when set
};

namespace detail {

inline constexpr double kSurfaceClearance = 1e-9;

// ln(R + V) without cancellation when V is large and negative.
inline double log_r_plus(double R, double V, double U, double W) {
    if (V >= 0.0) return std::log(R + V);
    return std::log((U * U + W * W) / (R - V));
}

// Unit-remanence field of a cuboid magnetized along its local +z axis.
inline Vec3 cuboid_kernel_z(const Vec3& h, const Vec3& p) {
    Vec3 acc = Vec3::Zero();
    for (int k = 0; k < 2; ++k) {
        const double face_sign = k == 0 ? 1.0 : -1.0; // +M on z=+c, -M on z=-c
        const double w = p.z() - face_sign * h.z();
        for (int i = 0; i < 2; ++i) {
            const double su = i == 0 ? 1.0 : -1.0;
            const double U = p.x() + su * h.x();
            for (int j = 0; j < 2; ++j) {
                const double sv = j == 0 ? 1.0 : -1.0;
                const double V = p.y() + sv * h.y();
                const double R = std::sqrt(U * U + V * V + w * w);
                const double s = face_sign * su * sv;
                acc.x() -= s * log_r_plus(R, V, U, w);
                acc.y() -= s * log_r_plus(R, U, V, w);
                acc.z() += s * std::atan(U * V / (w * R));
            }
        }
    }
    return acc / (4.0 * kPi);
}

// Pushes points that sit on (or within kSurfaceClearance of) a face plane of
// the box outward, so edge and corner terms stay finite.
inline Vec3 clear_of_surface(const Vec3& h, Vec3 p) {
    for (int k = 0; k < 3; ++k) {
        if (std::abs(std::abs(p[k]) - h[k]) < kSurfaceClearance) {
            const double sign = p[k] >= 0.0 ? 1.0 : -1.0;
            p[k] = sign * (h[k] + kSurfaceClearance);
        }
    }
    return p;
}

} // namespace detail

/// Field of a cuboid magnet in its own frame, for magnetization Br * axis.
inline Vec3 cuboid_field_local(const Vec3& half_lengths, double Br, const Vec3& axis,
                               const Vec3& local_point) {
    const Vec3 p = detail::clear_of_surface(half_lengths, local_point);
    Vec3 B = Vec3::Zero();
    // Linear in magnetization: evaluate each component with the axes permuted
    // so the component lies along local z.
    if (axis.z() != 0.0) {
        B += axis.z() * detail::cuboid_kernel_z(half_lengths, p);
    }
    if (axis.x() != 0.0) {
        // local (y, z, x) -> kernel (x', y', z')
        const Vec3 hp(half_lengths.y(), half_lengths.z(), half_lengths.x());
        const Vec3 pp(p.y(), p.z(), p.x());
        const Vec3 b = detail::cuboid_kernel_z(hp, pp);
        B += axis.x() * Vec3(b.z(), b.x(), b.y());
    }
    if (axis.y() != 0.0) {
        // local (z, x, y) -> kernel (x', y', z')
        const Vec3 hp(half_lengths.z(), half_lengths.x(), half_lengths.y());
        const Vec3 pp(p.z(), p.x(), p.y());
        const Vec3 b = detail::cuboid_kernel_z(hp, pp);
        B += axis.y() * Vec3(b.y(), b.z(), b.x());
    }
    B *= Br;
    if (!all_finite(B)) throw SingularityError("cuboid field is not finite at evaluation point");
    return B;
}

/// Closed-form field of a uniformly magnetized cuboid at a world point [T].
inline Vec3 cuboid_field(const Magnet& magnet, const Vec3& point) {
    const auto* box = std::get_if<Cuboid>(&magnet.shape);
    if (box == nullptr) throw ArgumentError("cuboid_field requires a cuboid magnet");
    const Vec3 local = magnet.to_local(point);
    const Vec3 b = cuboid_field_local(box->half_lengths, magnet.remanence,
                                      magnet.magnetization_axis, local);
    return magnet.pose.orientation * b;
}

/// Point-dipole field (mu0/4pi) (3 (m.r^) r^ - m) / r^3 [T].
inline Vec3 dipole_field(const Vec3& moment, const Vec3& source, const Vec3& point) {
    const Vec3 r = point - source;
    const double dist = r.norm();
    if (dist < 1e-15) throw SingularityError("dipole field evaluated at the source position");
    const Vec3 rhat = r / dist;
    return (kMu0 / (4.0 * kPi)) * (3.0 * moment.dot(rhat) * rhat - moment) /
           (dist * dist * dist);
}

/// Equivalent dipole moment (Br/mu0) V R axis [A·m^2].
inline Vec3 dipole_moment_of(const Magnet& magnet) {
    return (magnet.remanence / kMu0) * magnet.volume() *
           (magnet.pose.orientation * magnet.magnetization_axis);
}

/// Field of a single magnet: exact for cuboids, dipole for cylinders.
inline Vec3 magnet_field(const Magnet& magnet, const Vec3& point) {
    if (magnet.is_cuboid()) return cuboid_field(magnet, point);
    return dipole_field(dipole_moment_of(magnet), magnet.pose.position, point);
}

inline Vec3 summed_field(std::span<const Magnet> magnets, const Vec3& point) {
    Vec3 B = Vec3::Zero();
    for (const auto& m : magnets) B += magnet_field(m, point);
    return B;
}

inline constexpr double kDefaultGradientStep = 1e-4;

/// Superposed field of an assembly plus its gradient by fourth-order central
/// differences (five-point stencil) with step h.
inline FieldSample assembly_field(std::span<const Magnet> magnets, const Vec3& point,
                                  double h = kDefaultGradientStep) {
    require(h > 0.0, "gradient step must be positive");
    FieldSample s;
    s.position = point;
    s.B = summed_field(magnets, point);
    s.inside_magnet = std::any_of(magnets.begin(), magnets.end(),
                                  [&](const Magnet& m) { return m.contains(point); });
    for (int j = 0; j < 3; ++j) {
        Vec3 e = Vec3::Zero();
        e[j] = h;
        const Vec3 f1 = summed_field(magnets, point + e) - summed_field(magnets, point - e);
        const Vec3 f2 =
            summed_field(magnets, point + 2.0 * e) - summed_field(magnets, point - 2.0 * e);
        s.gradient.col(j) = (8.0 * f1 - f2) / (12.0 * h);
    }
    return s;
}

/// Magnitude-only convenience used by curve exports.
inline double gradient_norm(const FieldSample& s) { return s.gradient.norm(); }

} // namespace maggait
