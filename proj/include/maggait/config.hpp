// JSON configuration: rig, robot, gait and scenario files.
//
// All lengths in meters, masses in kilograms, times in seconds, fields in
// tesla, angles in degrees. Missing keys keep their defaults. Scenario files
// are merge-patched over a base configuration before parsing.
#pragma once

#include "scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace maggait {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace cfg {

inline Vec3 vec3(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(std::string(what) + " must be [x, y, z]");
    Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
    if (!all_finite(v)) throw ConfigError(std::string(what) + " must be finite");
    return v;
}

inline json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

inline void read_vec(const json& j, const char* key, Vec3& out) {
    if (j.contains(key) && !j.at(key).is_null()) out = vec3(j.at(key), key);
}

inline json magnet_to_json(const Magnet& m) {
    json j;
    if (const auto* c = std::get_if<Cuboid>(&m.shape)) {
        j["shape"] = "cuboid";
        j["size"] = to_json(2.0 * c->half_lengths);
    } else {
        const auto& cy = std::get<Cylinder>(m.shape);
        j["shape"] = "cylinder";
        j["radius"] = cy.radius;
        j["height"] = cy.height;
    }
    j["remanence"] = m.remanence;
    j["magnetization_axis"] = to_json(m.magnetization_axis);
    return j;
}

inline void magnet_from_json(const json& j, Magnet& m) {
    const std::string shape =
        j.value("shape", std::holds_alternative<Cuboid>(m.shape) ? "cuboid" : "cylinder");
    if (shape == "cuboid") {
        Vec3 size = std::holds_alternative<Cuboid>(m.shape)
                        ? Vec3(2.0 * std::get<Cuboid>(m.shape).half_lengths)
                        : Vec3::Constant(0.01);
        read_vec(j, "size", size);
        m.shape = Cuboid{size / 2.0};
    } else if (shape == "cylinder") {
        Cylinder c{0.5e-3, 1e-3};
        if (const auto* old = std::get_if<Cylinder>(&m.shape)) c = *old;
        read(j, "radius", c.radius);
        read(j, "height", c.height);
        m.shape = c;
    } else {
        throw ConfigError("unknown magnet shape '" + shape + "'");
    }
    read(j, "remanence", m.remanence);
    read_vec(j, "magnetization_axis", m.magnetization_axis);
    if (m.magnetization_axis.norm() > 0.0) m.magnetization_axis.normalize();
}

} // namespace cfg

inline json rig_to_json(const RigConfig& c) {
    return {
        {"m1", cfg::magnet_to_json(c.m1)},
        {"m2", cfg::magnet_to_json(c.m2)},
        {"m3", cfg::magnet_to_json(c.m3)},
        {"center_distance", c.center_distance},
        {"m3_offset", c.m3_offset},
        {"working_volume", cfg::to_json(c.working_volume_size)},
        {"working_point_offset", c.working_point_offset},
        {"working_point_side",
         c.working_point_side == WorkingPointSide::AwayFromM3 ? "away_from_m3" : "toward_m3"},
        {"include_m3", c.include_m3},
    };
}

inline RigConfig rig_from_json(const json& j, RigConfig c = {}) {
    if (j.contains("m1")) cfg::magnet_from_json(j["m1"], c.m1);
    if (j.contains("m2")) cfg::magnet_from_json(j["m2"], c.m2);
    if (j.contains("m3")) cfg::magnet_from_json(j["m3"], c.m3);
    cfg::read(j, "center_distance", c.center_distance);
    cfg::read(j, "m3_offset", c.m3_offset);
    cfg::read_vec(j, "working_volume", c.working_volume_size);
    cfg::read(j, "working_point_offset", c.working_point_offset);
    if (j.contains("working_point_side")) {
        const std::string side = j["working_point_side"].get<std::string>();
        if (side == "away_from_m3")
            c.working_point_side = WorkingPointSide::AwayFromM3;
        else if (side == "toward_m3")
            c.working_point_side = WorkingPointSide::TowardM3;
        else
            throw ConfigError("working_point_side must be away_from_m3 or toward_m3");
    }
    cfg::read(j, "include_m3", c.include_m3);
    c.validate();
    return c;
}

inline json robot_to_json(const RobotGeometry& g) {
    return {
        {"foot_offsets",
         {{"FL", cfg::to_json(g.foot(Foot::FL))},
          {"FR", cfg::to_json(g.foot(Foot::FR))},
          {"RL", cfg::to_json(g.foot(Foot::RL))},
          {"RR", cfg::to_json(g.foot(Foot::RR))}}},
        {"body_axis", cfg::to_json(g.body_axis)},
        {"moment_magnitude", g.moment_magnitude},
        {"body_mass", g.body_mass},
        {"cargo_mass", g.cargo_mass},
        {"capillary_tip_offset", cfg::to_json(g.capillary_tip_offset)},
    };
}

struct CalibrationTarget {
    double target_stride = kDefaultStrideTarget;
    double pitch = 66.0;
    double alpha_max = 72.0;
};

/// Parses a robot section. foot_span may be a number or "calibrate".
inline RobotGeometry robot_from_json(const json& j, const CalibrationTarget& cal = {},
                                     int steps_per_cycle = 360) {
    RobotGeometry g;
    if (j.contains("foot_offsets")) {
        const json& f = j["foot_offsets"];
        for (auto [name, foot] : {std::pair{"FL", Foot::FL}, std::pair{"FR", Foot::FR},
                                  std::pair{"RL", Foot::RL}, std::pair{"RR", Foot::RR}}) {
            if (f.contains(name)) g.foot_offsets[int(foot)] = cfg::vec3(f[name], name);
        }
    }
    cfg::read_vec(j, "body_axis", g.body_axis);
    if (j.contains("magnet")) {
        Magnet m = robot_magnet();
        cfg::magnet_from_json(j["magnet"], m);
        g.moment_magnitude = dipole_moment_of(m).norm();
    }
    cfg::read(j, "moment_magnitude", g.moment_magnitude);
    cfg::read(j, "body_mass", g.body_mass);
    cfg::read(j, "cargo_mass", g.cargo_mass);
    cfg::read_vec(j, "capillary_tip_offset", g.capillary_tip_offset);
    if (j.contains("foot_span")) {
        const json& s = j["foot_span"];
        if (s.is_string()) {
            if (s.get<std::string>() != "calibrate")
                throw ConfigError("foot_span must be a number or \"calibrate\"");
            g.validate();
            const double d =
                calibrate_foot_span(g, FieldModel(ConeFieldModel{cal.pitch, 7.5e-3}),
                                    cal.target_stride, cal.alpha_max, steps_per_cycle);
            g.set_foot_span(d);
        } else {
            g.set_foot_span(s.get<double>());
        }
    }
    g.validate();
    return g;
}

inline json gait_to_json(const GaitParams& p) {
    return {{"alpha_max", p.alpha_max},
            {"frequency", p.frequency},
            {"waveform", std::string(to_string(p.waveform))},
            {"steps_per_cycle", p.steps_per_cycle}};
}

inline GaitParams gait_from_json(const json& j, GaitParams p = {}) {
    cfg::read(j, "alpha_max", p.alpha_max);
    cfg::read(j, "frequency", p.frequency);
    if (j.contains("waveform")) p.waveform = waveform_from_string(j["waveform"].get<std::string>());
    cfg::read(j, "steps_per_cycle", p.steps_per_cycle);
    p.validate();
    return p;
}

inline json field_model_to_json(const FieldModel& f) {
    if (const auto* c = f.cone())
        return {{"type", "cone"}, {"pitch", c->pitch}, {"magnitude", c->magnitude}};
    return {{"type", "rig"}};
}

// ---------------------------------------------------------------------------
// Commands (shared by scenario schedules and the teleop protocol)

inline json command_to_json(const Command& cmd) {
    return std::visit(
        [](const auto& c) -> json {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, SetBeta>) {
                return {{"type", "set_beta"}, {"degrees", c.degrees}, {"rate", c.rate}};
            } else if constexpr (std::is_same_v<C, SetGait>) {
                json j = {{"type", "set_gait"}};
                if (c.alpha_max) j["alpha_max"] = *c.alpha_max;
                if (c.frequency) j["frequency"] = *c.frequency;
                if (c.waveform) j["waveform"] = std::string(to_string(*c.waveform));
                return j;
            } else {
                return {{"type", "set_mode"}, {"mode", std::string(to_string(c.mode))}};
            }
        },
        cmd);
}

namespace cfg {

inline double number(const json& j, const char* key) {
    if (!j.contains(key)) throw ArgumentError(std::string("missing field '") + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ArgumentError(std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ArgumentError(std::string("field '") + key + "' must be finite");
    return d;
}

inline std::optional<double> opt_number(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return number(j, key);
}

} // namespace cfg

/// Throws ArgumentError on malformed or unknown commands.
inline Command command_from_json(const json& j) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw ArgumentError("command needs a string 'type'");
    const std::string type = j["type"].get<std::string>();
    if (type == "set_beta") {
        SetBeta c;
        c.degrees = cfg::number(j, "degrees");
        c.rate = cfg::opt_number(j, "rate").value_or(0.0);
        if (c.rate < 0.0) throw ArgumentError("set_beta rate must be >= 0");
        return c;
    }
    if (type == "set_gait") {
        SetGait c;
        c.alpha_max = cfg::opt_number(j, "alpha_max");
        c.frequency = cfg::opt_number(j, "frequency");
        if (j.contains("waveform") && !j["waveform"].is_null()) {
            if (!j["waveform"].is_string()) throw ArgumentError("waveform must be a string");
            c.waveform = waveform_from_string(j["waveform"].get<std::string>());
        }
        if (!c.alpha_max && !c.frequency && !c.waveform)
            throw ArgumentError("set_gait needs alpha_max, frequency or waveform");
        return c;
    }
    if (type == "set_mode") {
        if (!j.contains("mode") || !j["mode"].is_string())
            throw ArgumentError("set_mode needs a string 'mode'");
        return SetMode{mode_from_string(j["mode"].get<std::string>())};
    }
    throw ArgumentError("unknown command type '" + type + "'");
}

// ---------------------------------------------------------------------------
// Full configuration and scenarios

/// Built-in base configuration. foot_span is calibrated at load time.
inline json default_config() {
    return {
        {"rig", rig_to_json(RigConfig{})},
        {"robot", {{"foot_span", "calibrate"}}},
        {"gait", gait_to_json(GaitParams{})},
        {"stability", {{"alpha_max", 72.0}, {"pitch", 70.0}, {"frequency", 1.5}}},
        {"load", {{"capacity", 100e-6}, {"reduction_at_capacity", 0.3}}},
        {"deployment", {{"dwell", 20.0}}},
        {"calibration",
         {{"target_stride", kDefaultStrideTarget}, {"pitch", 66.0}, {"alpha_max", 72.0}}},
        {"field_model", {{"type", "cone"}, {"pitch", 66.0}, {"magnitude", 7.5e-3}}},
    };
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

/// Base config with the file at path (if any) merge-patched on top.
inline json load_config(const std::string& path = "") {
    json c = default_config();
    if (!path.empty()) c.merge_patch(read_json_file(path));
    return c;
}

struct ParsedConfig {
    RigConfig rig;
    RobotGeometry robot;
    GaitParams gait;
    StabilityThresholds stability;
    LoadModel load;
    DeploymentSettings deployment;
    CalibrationTarget calibration;
    FieldModel field;
};

inline ParsedConfig parse_config(const json& j) {
    try {
        ParsedConfig p;
        if (j.contains("rig")) p.rig = rig_from_json(j["rig"]);
        if (j.contains("gait")) p.gait = gait_from_json(j["gait"]);
        if (j.contains("calibration")) {
            const json& c = j["calibration"];
            cfg::read(c, "target_stride", p.calibration.target_stride);
            cfg::read(c, "pitch", p.calibration.pitch);
            cfg::read(c, "alpha_max", p.calibration.alpha_max);
        }
        p.robot = robot_from_json(j.value("robot", json::object()), p.calibration,
                                  p.gait.steps_per_cycle);
        if (j.contains("stability")) {
            const json& s = j["stability"];
            cfg::read(s, "alpha_max", p.stability.alpha_max);
            cfg::read(s, "pitch", p.stability.pitch);
            cfg::read(s, "frequency", p.stability.frequency);
        }
        if (j.contains("load")) {
            cfg::read(j["load"], "capacity", p.load.capacity);
            cfg::read(j["load"], "reduction_at_capacity", p.load.reduction_at_capacity);
        }
        if (j.contains("deployment")) {
            const json& d = j["deployment"];
            cfg::read(d, "dwell", p.deployment.dwell);
            if (d.contains("alpha_rate") && !d["alpha_rate"].is_null())
                p.deployment.alpha_rate = d["alpha_rate"].get<double>();
            if (d.contains("trigger_time") && !d["trigger_time"].is_null())
                p.deployment.trigger_time = d["trigger_time"].get<double>();
        }
        const json fm = j.value("field_model", json{{"type", "cone"}});
        const std::string type = fm.value("type", "cone");
        if (type == "cone") {
            ConeFieldModel c;
            cfg::read(fm, "pitch", c.pitch);
            cfg::read(fm, "magnitude", c.magnitude);
            p.field = FieldModel(c);
        } else if (type == "rig") {
            p.field = FieldModel(RigFieldModel{p.rig});
        } else {
            throw ConfigError("field_model.type must be cone or rig");
        }
        return p;
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
}

/// Fully explicit JSON for a scenario; from_json(to_json(s)) reproduces s.
inline json scenario_to_json(const Scenario& s) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["resolved"] = true;
    j["id"] = s.id;
    j["description"] = s.description;
    j["field_model"] = field_model_to_json(s.field);
    if (const auto* rig = s.field.rig()) j["rig"] = rig_to_json(rig->config);
    j["robot"] = robot_to_json(s.robot);
    j["gait"] = gait_to_json(s.gait);
    j["stability"] = {{"alpha_max", s.stability.alpha_max},
                      {"pitch", s.stability.pitch},
                      {"frequency", s.stability.frequency}};
    j["load"] = {{"capacity", s.load.capacity},
                 {"reduction_at_capacity", s.load.reduction_at_capacity}};
    j["surface"] = {{"point", cfg::to_json(s.surface.point)},
                    {"normal", cfg::to_json(s.surface.normal)}};
    j["gravity"] = cfg::to_json(s.gravity);
    j["start"] = cfg::to_json(s.start);
    j["beta"] = s.beta;
    j["duration"] = s.duration;
    j["dt"] = s.time_step();
    json sched = json::array();
    for (const auto& c : s.schedule) sched.push_back({{"step", c.step}, {"command", command_to_json(c.command)}});
    j["schedule"] = sched;
    json dep = {{"dwell", s.deployment.dwell}};
    dep["alpha_rate"] = s.deployment.alpha_rate ? json(*s.deployment.alpha_rate) : json(nullptr);
    dep["trigger_time"] = s.deployment.trigger_time ? json(*s.deployment.trigger_time) : json(nullptr);
    j["deployment"] = dep;
    j["check_anchoring"] = s.check_anchoring;
    j["safety_factor"] = s.safety_factor;
    j["clearance_tolerance"] = s.clearance_tolerance;
    if (s.waypoints) {
        json pts = json::array();
        for (const auto& p : s.waypoints->points) pts.push_back({p.x(), p.y()});
        j["waypoints"] = {{"points", pts},
                          {"arrival_tolerance", s.waypoints->arrival_tolerance},
                          {"heading_tolerance", s.waypoints->heading_tolerance}};
    } else {
        j["waypoints"] = nullptr;
    }
    j["controller"] = {{"slew_rate", s.controller.slew_rate},
                       {"step_budget", s.controller.step_budget}};
    return j;
}

/// Scenario from a document that has been merged over a base config.
inline Scenario scenario_from_json(const json& j) {
    ParsedConfig p = parse_config(j);
    try {
        Scenario s;
        s.id = j.value("id", "scenario");
        s.description = j.value("description", "");
        s.field = p.field;
        s.robot = p.robot;
        s.gait = p.gait;
        s.stability = p.stability;
        s.load = p.load;
        s.deployment = p.deployment;
        s.start = s.field.is_rig() ? p.rig.working_point() : Vec3::Zero();
        cfg::read_vec(j, "start", s.start);
        s.surface = Plane{s.start, Vec3::UnitY()};
        if (j.contains("surface")) {
            cfg::read_vec(j["surface"], "point", s.surface.point);
            cfg::read_vec(j["surface"], "normal", s.surface.normal);
            if (s.surface.normal.norm() == 0.0) throw ConfigError("surface normal is zero");
            s.surface.normal.normalize();
        }
        cfg::read_vec(j, "gravity", s.gravity);
        cfg::read(j, "beta", s.beta);
        cfg::read(j, "duration", s.duration);
        if (j.contains("dt") && !j["dt"].is_null()) s.dt = j["dt"].get<double>();
        if (j.contains("schedule")) {
            for (const json& e : j["schedule"]) {
                ScheduledCommand c;
                if (e.contains("step"))
                    c.step = e["step"].get<long long>();
                else if (e.contains("t"))
                    c.step = s.step_at(e["t"].get<double>());
                else
                    throw ConfigError("schedule entry needs 'step' or 't'");
                try {
                    c.command = command_from_json(e.at("command"));
                } catch (const ArgumentError& err) {
                    throw ConfigError(std::string("schedule: ") + err.what());
                }
                s.schedule.push_back(c);
            }
        }
        cfg::read(j, "check_anchoring", s.check_anchoring);
        cfg::read(j, "safety_factor", s.safety_factor);
        cfg::read(j, "clearance_tolerance", s.clearance_tolerance);
        if (j.contains("waypoints") && !j["waypoints"].is_null()) {
            const json& w = j["waypoints"];
            WaypointPlan plan;
            const json& pts = w.is_array() ? w : w.at("points");
            for (const json& pt : pts) {
                if (!pt.is_array() || pt.size() != 2) throw ConfigError("waypoints are [x, z] pairs");
                plan.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
            }
            if (w.is_object()) {
                cfg::read(w, "arrival_tolerance", plan.arrival_tolerance);
                cfg::read(w, "heading_tolerance", plan.heading_tolerance);
            }
            s.waypoints = plan;
        }
        if (j.contains("controller")) {
            cfg::read(j["controller"], "slew_rate", s.controller.slew_rate);
            cfg::read(j["controller"], "step_budget", s.controller.step_budget);
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(e.what());
    } catch (const ArgumentError& e) {
        throw ConfigError(e.what());
    }
}

/// Scenario document merged over a base config. Resolved documents (as
/// written by scenario_to_json) are taken as they are.
inline Scenario scenario_from_document(const json& doc, const json& base = default_config()) {
    if (doc.is_object() && doc.value("resolved", false)) return scenario_from_json(doc);
    json merged = base;
    merged.merge_patch(doc);
    return scenario_from_json(merged);
}

inline Scenario load_scenario(const std::string& path, const json& base = default_config()) {
    return scenario_from_document(read_json_file(path), base);
}

} // namespace maggait
