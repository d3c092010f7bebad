// Three-magnet actuation rig: a static M1/M2 pair along X plus a spinning M3
// below the working volume. alpha spins M3 about X, beta yaws the whole rig.
#pragma once

#include "magnetostatics.hpp"

#include <functional>
#include <thread>

namespace maggait {

enum class WorkingPointSide { AwayFromM3, TowardM3 };

struct Box {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();

    static Box centered(const Vec3& center, const Vec3& size) {
        return {center - 0.5 * size, center + 0.5 * size};
    }
    Vec3 center() const { return 0.5 * (min + max); }
    Vec3 size() const { return max - min; }
    bool contains(const Vec3& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

/// Rig geometry. Magnet shapes, remanence and magnetization axes are taken from
/// m1..m3; their poses are overwritten by build_rig.
struct RigConfig {
    Magnet m1{Cuboid{Vec3(0.0195, 0.1106, 0.089) / 2.0}, remanence::N45, Vec3::UnitX(), {}};
    Magnet m2{Cuboid{Vec3(0.0195, 0.1106, 0.089) / 2.0}, remanence::N45, Vec3::UnitX(), {}};
    Magnet m3{Cuboid{Vec3::Constant(0.0508 / 2.0)}, remanence::N40, Vec3::UnitY(), {}};
    double center_distance = 0.484;  // W', M1-M2 centre to centre [m]
    double m3_offset = 0.136;        // D', M3 centre below the working-volume centre [m]
    Vec3 working_volume_size{0.035, 0.040, 0.035};
    double working_point_offset = 0.020; // vertical offset of the walking plane [m]
    WorkingPointSide working_point_side = WorkingPointSide::AwayFromM3;
    bool include_m3 = true;

    /// Robot operating point, unsteered frame.
    Vec3 working_point() const {
        const double sign = working_point_side == WorkingPointSide::AwayFromM3 ? 1.0 : -1.0;
        return {0.0, sign * working_point_offset, 0.0};
    }

    Box working_volume() const { return Box::centered(working_point(), working_volume_size); }

    void validate() const;
};

struct RigState {
    double alpha = 0.0; // degrees, M3 spin about X
    double beta = 0.0;  // degrees, rig yaw about Y

    double beta_normalized() const { return normalize_degrees(beta); }
};

struct ConeParameters {
    double pitch_theta = 0.0; // degrees
    double yaw_phi_max = 0.0; // degrees, at the alpha_max used for the fit
    double B_h = 0.0;         // tesla
    double B_r = 0.0;         // tesla
    bool flat = false;        // rotating component vanished
};

namespace detail {

inline std::array<Vec3, 3> box_axes(const Magnet& m) {
    const Mat3 R = m.pose.orientation.toRotationMatrix();
    return {R.col(0), R.col(1), R.col(2)};
}

inline Vec3 half_extent(const Magnet& m) {
    return std::visit(
        [](const auto& s) -> Vec3 {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Cuboid>)
                return s.half_lengths;
            else
                return Vec3(s.radius, s.radius, 0.5 * s.height);
        },
        m.shape);
}

// Separating-axis test for two oriented boxes (cylinders use their bounding box).
inline bool boxes_overlap(const Magnet& a, const Magnet& b) {
    const auto A = box_axes(a);
    const auto B = box_axes(b);
    const Vec3 ha = half_extent(a);
    const Vec3 hb = half_extent(b);
    const Vec3 t = b.pose.position - a.pose.position;
    auto separated = [&](const Vec3& axis) {
        const double n = axis.norm();
        if (n < 1e-12) return false;
        const Vec3 u = axis / n;
        double ra = 0.0, rb = 0.0;
        for (int i = 0; i < 3; ++i) {
            ra += ha[i] * std::abs(A[i].dot(u));
            rb += hb[i] * std::abs(B[i].dot(u));
        }
        return std::abs(t.dot(u)) >= ra + rb;
    };
    for (int i = 0; i < 3; ++i) {
        if (separated(A[i]) || separated(B[i])) return false;
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (separated(A[i].cross(B[j]))) return false;
        }
    }
    return true;
}

} // namespace detail

inline void RigConfig::validate() const {
    m1.validate();
    m2.validate();
    m3.validate();
    if (!(center_distance > 0.0) || !(m3_offset > 0.0))
        throw ConfigError("rig distances must be positive");
    if (!(working_point_offset >= 0.0)) throw ConfigError("working_point_offset must be >= 0");
    if (!(working_volume_size.array() > 0.0).all())
        throw ConfigError("working volume size must be positive");
    const Box wv = working_volume();
    const double m12_half = std::max(detail::half_extent(m1).x(), detail::half_extent(m2).x());
    if (center_distance / 2.0 - m12_half <= std::max(std::abs(wv.min.x()), std::abs(wv.max.x())))
        throw ConfigError("M1/M2 overlap the working volume");
    const double m3_half = detail::half_extent(m3).maxCoeff() * std::sqrt(3.0);
    if (include_m3 && -m3_offset + m3_half >= wv.min.y())
        throw ConfigError("M3 sweep overlaps the working volume");
}

/// Posed magnets for a rig state: {M1, M2, M3} (M3 omitted when disabled).
inline std::vector<Magnet> build_rig(const RigConfig& config, const RigState& state) {
    require(state.alpha >= -360.0 && state.alpha <= 360.0, "alpha out of range");
    const Quat yaw = yaw_rotation(state.beta);

    std::vector<Magnet> magnets;
    magnets.reserve(3);

    Magnet m1 = config.m1;
    m1.pose.position = yaw * Vec3(-config.center_distance / 2.0, 0.0, 0.0);
    m1.pose.orientation = (yaw * config.m1.pose.orientation).normalized();
    magnets.push_back(m1);

    Magnet m2 = config.m2;
    m2.pose.position = yaw * Vec3(config.center_distance / 2.0, 0.0, 0.0);
    m2.pose.orientation = (yaw * config.m2.pose.orientation).normalized();
    magnets.push_back(m2);

    if (config.include_m3) {
        // Positive alpha turns M3 clockwise seen from +X, so the field above
        // it swings toward +Z (the robot's right) as alpha grows.
        const Quat spin = axis_angle(Vec3::UnitX(), -deg2rad(state.alpha));
        Magnet m3 = config.m3;
        m3.pose.position = yaw * Vec3(0.0, -config.m3_offset, 0.0);
        m3.pose.orientation = (yaw * spin * config.m3.pose.orientation).normalized();
        magnets.push_back(m3);
    }

    for (std::size_t i = 0; i < magnets.size(); ++i) {
        for (std::size_t j = i + 1; j < magnets.size(); ++j) {
            if (detail::boxes_overlap(magnets[i], magnets[j]))
                throw ConfigError("rig magnets overlap");
        }
    }
    return magnets;
}

inline FieldSample rig_field(const RigConfig& config, const RigState& state, const Vec3& point,
                             double h = kDefaultGradientStep) {
    const auto magnets = build_rig(config, state);
    return assembly_field(magnets, point, h);
}

/// Field only, without the gradient stencil.
inline Vec3 rig_B(const RigConfig& config, const RigState& state, const Vec3& point) {
    const auto magnets = build_rig(config, state);
    return summed_field(magnets, point);
}

/// Elevation of B above the horizontal walking direction [deg].
inline double pitch_angle(const Vec3& B) {
    if (B.norm() < 1e-12) throw ArgumentError("field direction undefined for |B| < 1e-12 T");
    return rad2deg(std::atan2(B.y(), B.x()));
}

/// Elevation above the horizontal plane along the heading set by beta [deg].
inline double pitch_angle(const Vec3& B, double beta) {
    return pitch_angle(yaw_rotation(beta).conjugate() * B);
}

inline double yaw_phi_max(double pitch_theta, double alpha_max) {
    return rad2deg(std::atan(std::tan(deg2rad(pitch_theta)) * std::sin(deg2rad(alpha_max))));
}

inline constexpr int kConeFitSamples = 181;

/// Cone fit of a field that depends on alpha, sampled over [-90, 90] deg.
inline ConeParameters cone_parameters(const std::function<Vec3(double)>& field_of_alpha,
                                      double beta, double alpha_max = 72.0) {
    const Quat unyaw = yaw_rotation(beta).conjugate();
    // Unknowns (B_r, c_y, c_z) for B'_y = B_r cos a + c_y and B'_z = B_r sin a + c_z.
    Mat3 normal = Mat3::Zero();
    Vec3 rhs = Vec3::Zero();
    double bh_sum = 0.0;
    for (int i = 0; i < kConeFitSamples; ++i) {
        const double a = -90.0 + 180.0 * i / (kConeFitSamples - 1);
        const Vec3 b = unyaw * field_of_alpha(a);
        const double ca = std::cos(deg2rad(a));
        const double sa = std::sin(deg2rad(a));
        bh_sum += b.x();
        const Vec3 ry(ca, 1.0, 0.0);
        const Vec3 rz(sa, 0.0, 1.0);
        normal += ry * ry.transpose() + rz * rz.transpose();
        rhs += ry * b.y() + rz * b.z();
    }
    const Vec3 sol = normal.ldlt().solve(rhs);

    ConeParameters cone;
    cone.B_h = bh_sum / kConeFitSamples;
    cone.B_r = sol.x();
    const double scale = std::max(std::abs(cone.B_h), std::abs(cone.B_r));
    cone.flat = std::abs(cone.B_r) <= 1e-9 * std::max(scale, 1e-12) || std::abs(cone.B_r) < 1e-15;
    if (cone.flat) {
        cone.B_r = 0.0;
        cone.pitch_theta = 0.0;
        cone.yaw_phi_max = 0.0;
        return cone;
    }
    cone.pitch_theta = rad2deg(std::atan2(cone.B_r, cone.B_h));
    cone.yaw_phi_max = yaw_phi_max(cone.pitch_theta, alpha_max);
    return cone;
}

inline ConeParameters cone_parameters(const RigConfig& config, double beta, const Vec3& point,
                                      double alpha_max = 72.0) {
    return cone_parameters(
        [&](double a) { return rig_B(config, RigState{a, beta}, point); }, beta, alpha_max);
}

/// Samples on a regular grid, x-major then y then z.
inline std::vector<FieldSample> sample_grid(const RigConfig& config, const RigState& state,
                                            const Box& box, const std::array<int, 3>& resolution,
                                            unsigned threads = 0) {
    for (int n : resolution) require(n >= 2, "grid resolution must be >= 2 per axis");
    require((box.max.array() > box.min.array()).all(), "grid box is empty");

    const auto magnets = build_rig(config, state);
    const std::size_t nx = resolution[0], ny = resolution[1], nz = resolution[2];
    const std::size_t total = nx * ny * nz;
    std::vector<FieldSample> out(total);

    auto point_at = [&](std::size_t idx) {
        const std::size_t i = idx / (ny * nz);
        const std::size_t j = (idx / nz) % ny;
        const std::size_t k = idx % nz;
        const Vec3 f(double(i) / double(nx - 1), double(j) / double(ny - 1),
                     double(k) / double(nz - 1));
        return Vec3(box.min.array() + f.array() * box.size().array());
    };
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t idx = begin; idx < end; ++idx)
            out[idx] = assembly_field(magnets, point_at(idx));
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));
    if (threads <= 1) {
        work(0, total);
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (total + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
        const std::size_t b = t * chunk;
        const std::size_t e = std::min(total, b + chunk);
        if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
    return out;
}

} // namespace maggait
