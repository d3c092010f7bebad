// CSV and JSON exports. Every number goes through fmt() so files are
// byte-stable across runs: %.12g, "nan"/"inf" for non-finite values.
#pragma once

#include "config.hpp"

#include <cstdio>
#include <ostream>

namespace maggait {

inline std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0"; // folds -0
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline const char* kFieldCsvHeader =
    "x_m,y_m,z_m,Bx_T,By_T,Bz_T,B_T,"
    "dBx_dx_T_per_m,dBx_dy_T_per_m,dBx_dz_T_per_m,"
    "dBy_dx_T_per_m,dBy_dy_T_per_m,dBy_dz_T_per_m,"
    "dBz_dx_T_per_m,dBz_dy_T_per_m,dBz_dz_T_per_m,grad_norm_T_per_m,inside_magnet";

inline void write_field_row(std::ostream& os, const FieldSample& s) {
    os << fmt(s.position.x()) << ',' << fmt(s.position.y()) << ',' << fmt(s.position.z()) << ','
       << fmt(s.B.x()) << ',' << fmt(s.B.y()) << ',' << fmt(s.B.z()) << ',' << fmt(s.B.norm());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) os << ',' << fmt(s.gradient(i, j));
    os << ',' << fmt(s.gradient.norm()) << ',' << (s.inside_magnet ? 1 : 0) << '\n';
}

inline void write_field_csv(std::ostream& os, const std::vector<FieldSample>& samples) {
    os << kFieldCsvHeader << '\n';
    for (const auto& s : samples) write_field_row(os, s);
}

/// One row per alpha: alpha_deg followed by the field columns.
inline void write_alpha_field_csv(std::ostream& os, const std::vector<double>& alphas,
                                  const std::vector<FieldSample>& samples) {
    os << "alpha_deg," << kFieldCsvHeader << '\n';
    for (std::size_t i = 0; i < samples.size(); ++i) {
        os << fmt(alphas[i]) << ',';
        write_field_row(os, samples[i]);
    }
}

inline const char* kTrajectoryCsvHeader =
    "t_s,x_m,y_m,z_m,qw,qx,qy,qz,alpha_deg,beta_deg,anchor,flags,phase,dose";

/// flags bits: 1 alpha_max > 72, 2 pitch > 70, 4 frequency > 1.5 Hz,
/// 8 foot penetration, 16 immobile (over capacity).
inline int sample_flag_bits(const Sample& s) {
    return s.flags.bits() | (s.penetration ? 8 : 0) | (s.immobile ? 16 : 0);
}

inline void write_trajectory_row(std::ostream& os, const Sample& s) {
    const auto& p = s.state.reference_position;
    const auto& q = s.state.orientation;
    os << fmt(s.time) << ',' << fmt(p.x()) << ',' << fmt(p.y()) << ',' << fmt(p.z()) << ','
       << fmt(q.w()) << ',' << fmt(q.x()) << ',' << fmt(q.y()) << ',' << fmt(q.z()) << ','
       << fmt(s.alpha) << ',' << fmt(s.beta) << ',' << to_string(s.state.anchor) << ','
       << sample_flag_bits(s) << ',' << to_string(s.phase) << ',' << fmt(s.dose) << '\n';
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<Sample>& samples) {
    os << kTrajectoryCsvHeader << '\n';
    for (const auto& s : samples) write_trajectory_row(os, s);
}

inline json event_to_json(const Event& e) {
    return {{"step", e.step}, {"t", e.time}, {"type", e.type}, {"detail", e.detail},
            {"value", json_number(e.value)}};
}

inline json trajectory_summary_json(const Trajectory& t) {
    json events = json::array();
    for (const auto& e : t.events) events.push_back(event_to_json(e));
    json transitions = json::array();
    for (const auto& tr : t.deployment.transitions)
        transitions.push_back({{"phase", std::string(to_string(tr.phase))}, {"step", tr.step}, {"t", tr.time}});
    json j;
    j["events"] = events;
    j["deployment"] = {
        {"transitions", transitions},
        {"dose_released", t.deployment.dose_released},
        {"tip_contact_alpha",
         t.deployment.tip_contact_alpha ? json(*t.deployment.tip_contact_alpha) : json(nullptr)},
        {"failed", t.deployment.failed},
    };
    if (t.anchoring.steps_checked > 0) {
        j["anchoring"] = {
            {"steps_checked", t.anchoring.steps_checked},
            {"feasible_all", t.anchoring.feasible_all},
            {"min_ratio", json_number(t.anchoring.min_ratio)},
            {"mean_ratio", json_number(t.anchoring.mean_ratio)},
            {"min_normal_force_N", json_number(t.anchoring.min_normal_force)},
            {"mean_normal_force_N", json_number(t.anchoring.mean_normal_force)},
            {"gravity_component_N", t.anchoring.gravity_component},
        };
    } else {
        j["anchoring"] = nullptr;
    }
    j["truncated"] = t.truncated;
    j["pitch_theta_deg"] = t.pitch_theta;
    j["samples"] = t.samples.size();
    if (!t.samples.empty()) {
        const Vec3 d = t.samples.back().state.reference_position -
                       t.samples.front().state.reference_position;
        j["net_displacement_m"] = cfg::to_json(d);
    }
    return j;
}

inline std::string sweep_x_header(SweepKind k) {
    switch (k) {
    case SweepKind::Alpha: return "alpha_max_deg";
    case SweepKind::Pitch: return "plane_y_mm";
    case SweepKind::Frequency: return "frequency_hz";
    case SweepKind::Load: return "cargo_mg";
    }
    return "x";
}

/// x is written in the sweep's input units (deg, mm, Hz, mg).
inline void write_sweep_csv(std::ostream& os, SweepKind kind, const std::vector<SweepRow>& rows) {
    const double scale = kind == SweepKind::Pitch ? 1e3 : kind == SweepKind::Load ? 1e6 : 1.0;
    os << sweep_x_header(kind) << ",stride_mm,speed_mm_per_s,pitch_deg,flags,immobile\n";
    for (const auto& r : rows) {
        os << fmt(r.x * scale) << ',' << fmt(r.stride * 1e3) << ',' << fmt(r.speed * 1e3) << ','
           << fmt(r.pitch) << ',' << r.flags.bits() << ',' << (r.immobile ? 1 : 0) << '\n';
    }
}

} // namespace maggait
