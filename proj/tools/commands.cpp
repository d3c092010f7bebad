#include "commands.hpp"

#include "manifest.hpp"
#include "server.hpp"

#include <CLI11.hpp>
#include <boost/system/system_error.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace maggait::cli {

namespace fs = std::filesystem;

namespace {

double parse_number(const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw ArgumentError("'" + s + "' is not a number");
    }
    if (pos != s.size() || !std::isfinite(v)) throw ArgumentError("'" + s + "' is not a finite number");
    return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, sep)) out.push_back(part);
    if (!text.empty() && text.back() == sep) out.emplace_back();
    return out;
}

std::vector<double> parse_list(const std::string& text, std::size_t n, const char* what) {
    const auto parts = split(text, ',');
    if (parts.size() != n)
        throw ArgumentError(std::string(what) + " needs " + std::to_string(n) + " comma-separated values");
    std::vector<double> out;
    for (const auto& p : parts) out.push_back(parse_number(p));
    return out;
}

Vec3 to_vec3(const std::vector<double>& v, std::size_t at = 0) { return {v[at], v[at + 1], v[at + 2]}; }

std::array<int, 3> to_resolution(const std::vector<double>& v, std::size_t at = 0) {
    std::array<int, 3> r{};
    for (int i = 0; i < 3; ++i) {
        const double x = v[at + std::size_t(i)];
        if (x != std::floor(x) || x < 2 || x > 1e6) throw ArgumentError("grid resolution must be integers >= 2");
        r[i] = int(x);
    }
    return r;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error("cannot write '" + path.string() + "'");
}

fs::path prepare_out_dir(const std::string& dir) {
    if (dir.empty()) throw ArgumentError("--out is required");
    fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (!fs::is_directory(p)) throw Error("cannot create output directory '" + dir + "'");
    return p;
}

double sweep_scale(SweepKind k) {
    switch (k) {
    case SweepKind::Pitch: return 1e-3; // mm -> m
    case SweepKind::Load: return 1e-6;  // mg -> kg
    default: return 1.0;
    }
}

// Robot section with a numeric foot span, so loading it never calibrates.
json fixed_span_robot(json robot) {
    if (robot.contains("foot_span") && robot["foot_span"].is_string()) robot["foot_span"] = 1.0e-3;
    return robot;
}

json fixed_span_robot_config(json config) {
    if (config.contains("robot")) config["robot"] = fixed_span_robot(config["robot"]);
    return config;
}

std::vector<std::string> run_field(const json& req, const fs::path& dir) {
    const RigConfig rig = rig_from_json(req.at("rig"));
    rig.validate();
    const RigState state{req.at("alpha").get<double>(), req.at("beta").get<double>()};
    std::ofstream out(dir / "field.csv", std::ios::binary);
    if (req.at("mode") == "alpha_sweep") {
        const auto alphas = req.at("alphas").get<std::vector<double>>();
        const Vec3 p = cfg::vec3(req.at("point"), "point");
        std::vector<FieldSample> samples;
        for (double a : alphas) samples.push_back(rig_field(rig, RigState{a, state.beta}, p));
        write_alpha_field_csv(out, alphas, samples);
    } else {
        const auto b = req.at("box").get<std::vector<double>>();
        const auto r = req.at("resolution").get<std::vector<int>>();
        if (b.size() != 6 || r.size() != 3) throw ArgumentError("grid needs a 6-value box and 3 resolutions");
        const Box box{to_vec3(b, 0), to_vec3(b, 3)};
        write_field_csv(out, sample_grid(rig, state, box, {r[0], r[1], r[2]}));
    }
    if (!out) throw Error("cannot write field.csv");
    return {"field.csv"};
}

std::vector<std::string> run_sweep(const json& req, const fs::path& dir) {
    const SweepKind kind = sweep_kind_from_string(req.at("kind").get<std::string>());
    const Scenario base = scenario_from_json(req.at("scenario"));
    const auto rows = characterization_sweep(kind, req.at("values").get<std::vector<double>>(), base,
                                             req.at("cycles").get<int>());
    std::ofstream out(dir / "sweep.csv", std::ios::binary);
    write_sweep_csv(out, kind, rows);
    if (!out) throw Error("cannot write sweep.csv");
    return {"sweep.csv"};
}

std::vector<std::string> run_sim(const json& req, const fs::path& dir) {
    const Scenario sc = scenario_from_json(req.at("scenario"));
    const Trajectory t = sc.check_anchoring && sc.gravity.dot(sc.surface.normal) > -1e-9 * sc.gravity.norm()
                             ? climb_scenario(sc)
                             : simulate(sc);
    {
        std::ofstream out(dir / "trajectory.csv", std::ios::binary);
        write_trajectory_csv(out, t.samples);
        if (!out) throw Error("cannot write trajectory.csv");
    }
    json summary = trajectory_summary_json(t);
    summary["scenario"] = sc.id;
    summary["schema_version"] = kSchemaVersion;
    write_text(dir / "events.json", summary.dump(2) + "\n");
    return {"trajectory.csv", "events.json"};
}

std::vector<std::string> run_calibrate(const json& req, const fs::path& dir) {
    const RobotGeometry base = robot_from_json(req.at("robot"));
    ConeFieldModel cone;
    cone.pitch = req.at("pitch").get<double>();
    const FieldModel field(cone);
    const double target = req.at("target_stride").get<double>();
    const double amax = req.at("alpha_max").get<double>();
    const int steps = req.at("steps").get<int>();
    require(target > 0.0, "target stride must be positive");
    const double d = calibrate_foot_span(base, field, target, amax, steps);
    RobotGeometry g = base;
    g.set_foot_span(d);
    json robot = robot_to_json(g);
    robot["foot_span"] = d;
    const json doc = {{"schema_version", kSchemaVersion},
                      {"target_stride", target},
                      {"pitch", cone.pitch},
                      {"alpha_max", amax},
                      {"stride", stride_simulated(g, field, amax, steps)},
                      {"robot", robot}};
    write_text(dir / "calibration.json", doc.dump(2) + "\n");
    return {"calibration.json"};
}

} // namespace

std::vector<double> parse_range(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3) throw ArgumentError("range must be start:stop:step");
        const double a = parse_number(parts[0]), b = parse_number(parts[1]), s = parse_number(parts[2]);
        if (!(s > 0.0)) throw ArgumentError("range step must be positive");
        if (b < a) throw ArgumentError("range '" + text + "' is empty");
        const auto n = static_cast<long long>(std::floor((b - a) / s + 1e-9));
        if (n > 100000) throw ArgumentError("range has too many points");
        for (long long i = 0; i <= n; ++i) out.push_back(a + double(i) * s);
    } else {
        for (const auto& p : split(text, ','))
            if (!p.empty()) out.push_back(parse_number(p));
    }
    if (out.empty()) throw ArgumentError("range '" + text + "' is empty");
    return out;
}

fs::path bundled_scenario_dir() {
    if (const char* env = std::getenv("MAGGAIT_SCENARIOS"); env && *env) return env;
    return fs::path(MAGGAIT_SOURCE_DIR) / "scenarios";
}

fs::path resolve_scenario_path(const std::string& name) {
    if (fs::is_regular_file(name)) return name;
    std::string id = name;
    if (id.size() > 5 && id.ends_with(".json")) id.resize(id.size() - 5);
    if (valid_scenario_id(id)) {
        const fs::path p = bundled_scenario_dir() / (id + ".json");
        if (fs::is_regular_file(p)) return p;
    }
    throw ConfigError("cannot find scenario '" + name + "'");
}

std::vector<std::string> execute(const std::string& command, const json& request, const fs::path& dir) {
    try {
        if (command == "field") return run_field(request, dir);
        if (command == "sweep") return run_sweep(request, dir);
        if (command == "sim") return run_sim(request, dir);
        if (command == "calibrate") return run_calibrate(request, dir);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("request: ") + e.what());
    }
    throw ArgumentError("unknown command '" + command + "'");
}

namespace {

struct Options {
    std::string config_path;
    std::string out;
    // field
    double alpha = 0.0, beta = 0.0;
    std::string grid, box, resolution = "5", alpha_range, point;
    // sweep
    std::string kind, range, scenario;
    int cycles = 2;
    // calibrate
    std::optional<double> target_stride_mm, pitch, alpha_max;
    int steps = 0;
    bool write = false;
    // serve
    std::string host = "127.0.0.1", scenario_dir, static_dir;
    int port = 8080;
    double telemetry_hz = 30.0;
    std::size_t trace_length = 512;
    // replay
    std::string replay_dir;
};

json base_config(const Options& o) { return load_config(o.config_path); }

void finish(const std::string& command, const std::vector<std::string>& argv, const json& request,
            const fs::path& dir) {
    const auto outputs = execute(command, request, dir);
    write_manifest(dir, command, argv, request, outputs);
    for (const auto& f : outputs) std::cout << "wrote " << (dir / f).string() << '\n';
}

int cmd_field(const Options& o, const std::vector<std::string>& argv) {
    const ParsedConfig cfgd = parse_config(fixed_span_robot_config(base_config(o)));
    json req = {{"rig", rig_to_json(cfgd.rig)}, {"alpha", o.alpha}, {"beta", o.beta}};
    if (!o.alpha_range.empty()) {
        req["mode"] = "alpha_sweep";
        req["alphas"] = parse_range(o.alpha_range);
        const Vec3 p = o.point.empty() ? cfgd.rig.working_point() : to_vec3(parse_list(o.point, 3, "--point"));
        req["point"] = cfg::to_json(p);
    } else {
        Box box = cfgd.rig.working_volume();
        std::array<int, 3> res{};
        if (!o.grid.empty()) {
            const auto v = parse_list(o.grid, 9, "--grid");
            box = Box{to_vec3(v, 0), to_vec3(v, 3)};
            res = to_resolution(v, 6);
        } else {
            if (!o.box.empty()) {
                const auto v = parse_list(o.box, 6, "--box");
                box = Box{to_vec3(v, 0), to_vec3(v, 3)};
            }
            const auto parts = split(o.resolution, ',');
            std::vector<double> r;
            for (const auto& p : parts) r.push_back(parse_number(p));
            if (r.size() == 1) r = {r[0], r[0], r[0]};
            if (r.size() != 3) throw ArgumentError("--resolution takes one or three integers");
            res = to_resolution(r);
        }
        if (!(box.max.array() > box.min.array()).all()) throw ArgumentError("grid box is empty");
        req["mode"] = "grid";
        req["box"] = {box.min.x(), box.min.y(), box.min.z(), box.max.x(), box.max.y(), box.max.z()};
        req["resolution"] = res;
    }
    finish("field", argv, req, prepare_out_dir(o.out));
    return kOk;
}

int cmd_sweep(const Options& o, const std::vector<std::string>& argv) {
    const SweepKind kind = sweep_kind_from_string(o.kind);
    std::vector<double> xs = parse_range(o.range);
    for (double& x : xs) x *= sweep_scale(kind);
    if (o.cycles < 1) throw ArgumentError("--cycles must be >= 1");
    const json config = base_config(o);
    Scenario base = o.scenario.empty() ? scenario_from_json(config)
                                       : load_scenario(resolve_scenario_path(o.scenario).string(), config);
    if (kind == SweepKind::Pitch && !base.field.is_rig())
        base.field = FieldModel(RigFieldModel{parse_config(fixed_span_robot_config(config)).rig});
    const json req = {{"kind", std::string(to_string(kind))},
                      {"values", xs},
                      {"cycles", o.cycles},
                      {"scenario", scenario_to_json(base)}};
    finish("sweep", argv, req, prepare_out_dir(o.out));
    return kOk;
}

int cmd_sim(const Options& o, const std::vector<std::string>& argv) {
    const Scenario sc = load_scenario(resolve_scenario_path(o.scenario).string(), base_config(o));
    const json req = {{"scenario", scenario_to_json(sc)}};
    const fs::path dir = prepare_out_dir(o.out);
    finish("sim", argv, req, dir);
    const json summary = read_json_file((dir / "events.json").string());
    if (summary.contains("net_displacement_m")) {
        const Vec3 d = cfg::vec3(summary["net_displacement_m"], "net_displacement_m");
        std::cout << "net displacement " << fmt(d.norm() * 1e3) << " mm over " << fmt(sc.duration) << " s\n";
    }
    if (!summary["deployment"]["tip_contact_alpha"].is_null())
        std::cout << "tip contact at alpha " << fmt(summary["deployment"]["tip_contact_alpha"].get<double>())
                  << " deg, dose " << fmt(summary["deployment"]["dose_released"].get<double>()) << '\n';
    if (!summary["anchoring"].is_null())
        std::cout << "anchoring min ratio " << fmt(summary["anchoring"]["min_ratio"].get<double>())
                  << ", feasible at every step: " << (summary["anchoring"]["feasible_all"].get<bool>() ? "yes" : "no")
                  << '\n';
    if (summary["truncated"].get<bool>()) std::cout << "run truncated\n";
    return kOk;
}

int cmd_calibrate(const Options& o, const std::vector<std::string>& argv) {
    const json config = base_config(o);
    const json robot = fixed_span_robot(config.value("robot", json::object()));
    json resolved = config;
    resolved["robot"] = robot;
    const ParsedConfig p = parse_config(resolved);
    const json req = {{"robot", robot},
                      {"target_stride", o.target_stride_mm ? *o.target_stride_mm * 1e-3 : p.calibration.target_stride},
                      {"pitch", o.pitch.value_or(p.calibration.pitch)},
                      {"alpha_max", o.alpha_max.value_or(p.calibration.alpha_max)},
                      {"steps", o.steps > 0 ? o.steps : p.gait.steps_per_cycle}};
    fs::path dir;
    if (!o.out.empty()) {
        dir = prepare_out_dir(o.out);
    } else {
        dir = fs::temp_directory_path() / ("maggait-calibrate-" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
    }
    execute("calibrate", req, dir);
    const json doc = read_json_file((dir / "calibration.json").string());
    if (!o.out.empty()) {
        write_manifest(dir, "calibrate", argv, req, {"calibration.json"});
    } else {
        fs::remove_all(dir);
    }
    const json section = {{"robot", doc["robot"]}};
    std::cout << section.dump(2) << '\n';
    std::cerr << "foot span " << fmt(doc["robot"]["foot_span"].get<double>() * 1e3) << " mm, stride "
              << fmt(doc["stride"].get<double>() * 1e3) << " mm/cycle\n";
    if (o.write) {
        if (o.config_path.empty()) throw ArgumentError("--write needs --config (or MAGGAIT_CONFIG)");
        json file = read_json_file(o.config_path);
        file["robot"] = doc["robot"];
        write_text(o.config_path, file.dump(2) + "\n");
        std::cerr << "updated " << o.config_path << '\n';
    }
    return kOk;
}

int cmd_serve(const Options& o) {
    if (o.port < 0 || o.port > 65535) throw ArgumentError("--port must be in [0, 65535]");
    if (!(o.telemetry_hz > 0.0 && o.telemetry_hz <= 1000.0)) throw ArgumentError("--telemetry-hz must be in (0, 1000]");
    if (o.trace_length < 1) throw ArgumentError("--trace-length must be >= 1");
    ServerOptions so;
    so.host = o.host;
    so.port = static_cast<unsigned short>(o.port);
    so.scenario_dir = o.scenario_dir.empty() ? bundled_scenario_dir() : fs::path(o.scenario_dir);
    so.static_dir = o.static_dir;
    so.teleop.telemetry_hz = o.telemetry_hz;
    so.teleop.trace_length = o.trace_length;
    so.base_config = base_config(o);
    so.handle_signals = true;
    TeleopServer server(so);
    unsigned short port = 0;
    try {
        port = server.bind();
    } catch (const boost::system::system_error& e) {
        std::cerr << "error: cannot bind " << o.host << ':' << o.port << ": " << e.code().message() << '\n';
        return kRuntimeError;
    }
    std::cout << "listening on http://" << o.host << ':' << port << std::endl;
    server.run();
    std::cout << "stopped" << std::endl;
    return kOk;
}

int cmd_replay(const Options& o) {
    const fs::path dir(o.replay_dir);
    const json manifest = read_json_file((dir / "manifest.json").string());
    const std::string command = manifest.at("command").get<std::string>();
    const fs::path tmp = fs::temp_directory_path() / ("maggait-replay-" + std::to_string(std::random_device{}()));
    fs::create_directories(tmp);
    bool ok = true;
    try {
        const auto outputs = execute(command, manifest.at("request"), tmp);
        const json& digests = manifest.at("outputs");
        for (const auto& name : outputs) {
            const std::string got = sha256_file(tmp / name);
            const bool match = digests.contains(name) && digests[name].get<std::string>() == got;
            ok = ok && match;
            std::cout << (match ? "match    " : "MISMATCH ") << name << ' ' << got << '\n';
        }
        if (outputs.size() != digests.size()) ok = false;
    } catch (...) {
        fs::remove_all(tmp);
        throw;
    }
    fs::remove_all(tmp);
    return ok ? kOk : kRuntimeError;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"Magnetic millirobot gait simulator and teleop service", "maggait"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options o;
    app.add_option("-c,--config", o.config_path, "Config JSON merged over the built-in defaults")
        ->envname("MAGGAIT_CONFIG");

    auto* field = app.add_subcommand("field", "Export rig field samples (T, T/m, m) to field.csv");
    field->add_option("--alpha", o.alpha, "M3 rotation alpha [deg]");
    field->add_option("--beta", o.beta, "Rig yaw beta [deg]");
    field->add_option("--grid", o.grid, "Box and resolution: xmin,ymin,zmin,xmax,ymax,zmax,nx,ny,nz [m]");
    field->add_option("--box", o.box, "Grid box xmin,ymin,zmin,xmax,ymax,zmax [m] (default: working volume)");
    field->add_option("--resolution", o.resolution, "Points per axis: n or nx,ny,nz (>= 2)");
    field->add_option("--alpha-range", o.alpha_range, "Sweep alpha at --point instead: start:stop:step [deg]");
    field->add_option("--point", o.point, "Sample point x,y,z [m] (default: working point)");
    field->add_option("-o,--out", o.out, "Output directory")->required();

    auto* sweep = app.add_subcommand("sweep", "Characterization sweep to sweep.csv");
    sweep->add_option("kind", o.kind, "alpha | pitch | frequency | load")->required();
    sweep->add_option("range", o.range, "start:stop:step or a comma list (deg, mm, Hz, mg)")->required();
    sweep->add_option("--scenario", o.scenario, "Base scenario (default: the config itself)");
    sweep->add_option("--cycles", o.cycles, "Gait cycles per point");
    sweep->add_option("-o,--out", o.out, "Output directory")->required();

    auto* sim = app.add_subcommand("sim", "Run a scenario to trajectory.csv and events.json");
    sim->add_option("scenario", o.scenario, "Scenario file or bundled scenario id")->required();
    sim->add_option("-o,--out", o.out, "Output directory")->required();

    auto* cal = app.add_subcommand("calibrate", "Calibrate the front foot span to a target stride");
    cal->add_option("--target-stride", o.target_stride_mm, "Target stride [mm/cycle]");
    cal->add_option("--pitch", o.pitch, "Cone pitch theta [deg]");
    cal->add_option("--alpha-max", o.alpha_max, "Gait amplitude [deg]");
    cal->add_option("--steps", o.steps, "Steps per cycle");
    cal->add_flag("--write", o.write, "Write the robot section back into --config");
    cal->add_option("-o,--out", o.out, "Also write calibration.json and a manifest here");

    auto* serve = app.add_subcommand("serve", "Run the teleop service");
    serve->add_option("--host", o.host, "Bind address");
    serve->add_option("-p,--port", o.port, "Port (0 picks a free one)");
    serve->add_option("--scenarios", o.scenario_dir, "Scenario directory (default: bundled)");
    serve->add_option("--static", o.static_dir, "Serve UI assets from this directory");
    serve->add_option("--telemetry-hz", o.telemetry_hz, "State broadcast rate");
    serve->add_option("--trace-length", o.trace_length, "Positions kept in the state trace");

    auto* replay = app.add_subcommand("replay", "Re-run an output directory from its manifest and compare digests");
    replay->add_option("dir", o.replay_dir, "Output directory with manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kArgumentError;
    }

    const std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (*field) return cmd_field(o, args);
        if (*sweep) return cmd_sweep(o, args);
        if (*sim) return cmd_sim(o, args);
        if (*cal) return cmd_calibrate(o, args);
        if (*serve) return cmd_serve(o);
        if (*replay) return cmd_replay(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ArgumentError& e) {
        std::cerr << "argument error: " << e.what() << '\n';
        return kArgumentError;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kArgumentError;
}

} // namespace maggait::cli
