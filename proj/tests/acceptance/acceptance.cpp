// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.
#include "commands.hpp"

#include <maggait/maggait.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <unistd.h>

using namespace maggait;
namespace fs = std::filesystem;

namespace {

const std::string kScenarios = std::string(MAGGAIT_SOURCE_DIR) + "/scenarios/";

// Collects failed sub-checks of one criterion and the measured values.
struct Check {
    std::vector<std::string> failures;
    std::ostringstream notes;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    template <class T>
    void note(const std::string& key, const T& value) {
        notes << (notes.tellp() > 0 ? ", " : "") << key << '=' << value;
    }
};

int g_failed = 0;

void criterion(const std::string& name, const std::function<void(Check&)>& body) {
    Check c;
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    if (!ok) ++g_failed;
    std::cout << (ok ? "PASS " : "FAIL ") << name << " (" << c.notes.str() << ")";
    for (const auto& f : c.failures) std::cout << "\n     - " << f;
    std::cout << std::endl;
}

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

double calibrated_span() {
    static const double d = calibrate_foot_span(kDefaultStrideTarget, 66.0, 72.0);
    return d;
}

FieldModel cone(double pitch) { return FieldModel(ConeFieldModel{pitch, 7.5e-3}); }

double cone_stride(double d, double theta, double alpha_max) {
    return simulate_cycle(RobotGeometry::with_foot_span(d), cone(theta), alpha_max, 360).stride;
}

const Scenario& default_scenario() {
    static const Scenario s = scenario_from_document(json::object());
    return s;
}

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Vec3 random_in(std::mt19937_64& rng, const Box& box) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return Vec3(box.min.array() + Vec3(u(rng), u(rng), u(rng)).array() * box.size().array());
}

std::string csv_of(const std::vector<Sample>& samples) {
    std::ostringstream os;
    write_trajectory_csv(os, samples);
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void center_field(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const RigConfig rig;
    const double B = rig_field(rig, {}, rig.working_point()).B.norm();
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.note("|B|_mT", num(B * 1e3));
    c.note("runtime_s", num(seconds, 2));
    c.expect(std::abs(B - 7.5e-3) <= 0.2 * 7.5e-3, "|B| outside 7.5 mT +- 20%");
    c.expect(seconds < 1.0, "runtime >= 1 s");
}

void alpha_shape(Check& c) {
    const RigConfig rig;
    const Vec3 p = rig.working_point();
    std::vector<Vec3> B;
    for (int a = -75; a <= 75; ++a) B.push_back(rig_B(rig, {double(a), 0.0}, p));
    const int n = int(B.size()), mid = n / 2;
    double peak = 0.0, bx_min = 1e9, bx_max = -1e9, bx_mean = 0.0;
    for (const Vec3& b : B) {
        peak = std::max(peak, b.norm());
        bx_min = std::min(bx_min, b.x());
        bx_max = std::max(bx_max, b.x());
        bx_mean += b.x() / n;
    }
    double rx = 0.0, ry = 0.0, rz = 0.0;
    for (int i = 0; i <= mid; ++i) {
        const Vec3& lo = B[mid - i];
        const Vec3& hi = B[mid + i];
        rx = std::max(rx, std::abs(hi.x() - lo.x()));
        ry = std::max(ry, std::abs(hi.y() - lo.y()));
        rz = std::max(rz, std::abs(hi.z() + lo.z()));
    }
    const double variation = (bx_max - bx_min) / std::abs(bx_mean);
    c.note("Bx_variation", num(variation));
    c.note("even_x_resid", num(rx / peak));
    c.note("even_y_resid", num(ry / peak));
    c.note("odd_z_resid", num(rz / peak));
    c.expect(variation < 0.15, "Bx varies by >= 15% of its mean");
    c.expect(rx / peak < 0.02, "Bx not even");
    c.expect(ry / peak < 0.02, "By not even");
    c.expect(rz / peak < 0.02, "Bz not odd");
}

void axis_decay(Check& c) {
    const RigConfig rig;
    const Vec3 wp = rig.working_point();
    // M3 sits on -Y, so "away from M3" is +Y.
    double prev_B = 1e9, prev_G = 1e9;
    bool mono = true;
    for (int i = 0; i <= 16; ++i) {
        const FieldSample s = rig_field(rig, {}, wp + Vec3(0, 0.0025 * i, 0));
        mono = mono && s.B.norm() < prev_B && s.gradient.norm() < prev_G;
        prev_B = s.B.norm();
        prev_G = s.gradient.norm();
    }
    const double G = rig_field(rig, {}, wp).gradient.norm();
    c.note("|grad B|_T_per_m", num(G));
    c.note("monotone_to_y_mm", num((wp.y() + 0.04) * 1e3));
    c.expect(mono, "|B| or |grad B| not strictly decreasing away from M3");
    c.expect(G >= 0.03 && G <= 0.3, "gradient outside [0.03, 0.3] T/m");
}

void pitch_range(Check& c) {
    const RigConfig rig;
    std::vector<double> pitch;
    std::string list;
    for (double y : {0.020, 0.010, 0.0, -0.010, -0.020}) {
        pitch.push_back(cone_parameters(rig, 0.0, Vec3(0, y, 0)).pitch_theta);
        list += (list.empty() ? "" : "/") + num(pitch.back(), 3);
    }
    c.note("pitch_deg(y=+20..-20mm)", list);
    for (std::size_t i = 1; i < pitch.size(); ++i) c.expect(pitch[i] > pitch[i - 1], "pitch not increasing toward M3");
    c.expect(std::abs(pitch.front() - 39.0) <= 8.0, "far-plane pitch not 39 +- 8 deg");
    c.expect(std::abs(pitch.back() - 66.0) <= 8.0, "near-plane pitch not 66 +- 8 deg");
}

void stride_band(Check& c) {
    const double d = calibrated_span();
    c.note("d_mm", num(d * 1e3));
    std::vector<double> s;
    std::string list;
    for (double a : {52.0, 62.0, 72.0, 81.0, 90.0}) {
        s.push_back(cone_stride(d, 66.0, a));
        list += (list.empty() ? "" : "/") + num(s.back() * 1e3);
        c.expect(s.back() >= 1.4e-3 && s.back() <= 1.9e-3, "stride at alpha " + num(a) + " outside [1.4, 1.9] mm");
    }
    for (std::size_t i = 1; i < s.size(); ++i) c.expect(s[i] >= s[i - 1], "stride not monotone in alpha_max");
    const double gain = 100.0 * (s[4] / s[2] - 1.0);
    c.note("stride_mm(52..90)", list);
    c.note("gain_90_vs_72_pct", num(gain, 3));
    c.expect(std::abs(gain - 1.8) <= 1.5, "90 vs 72 gain not 1.8 +- 1.5 %");
}

void estimator_agreement(Check& c) {
    const double d = calibrated_span();
    double worst = 0.0;
    for (double theta = 39.0; theta <= 66.0; theta += 4.5) {
        for (double a = 40.0; a <= 90.0; a += 10.0) {
            const double est = stride_estimate(d, theta, a);
            const double sim = cone_stride(d, theta, a);
            worst = std::max(worst, std::abs(sim - est) / est);
        }
    }
    c.note("worst_rel_error", num(worst));
    c.expect(worst <= 0.10, "estimate and simulation differ by more than 10%");
}

void speed_frequency(Check& c) {
    const std::vector<double> fs{0.4, 0.6, 0.8, 1.0, 1.2};
    const auto rows = characterization_sweep(SweepKind::Frequency, fs, default_scenario());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto& r : rows) {
        sxy += r.x * r.speed;
        sxx += r.x * r.x;
        syy += r.speed * r.speed;
    }
    const double k = sxy / sxx;
    double ss_res = 0.0;
    for (const auto& r : rows) ss_res += std::pow(r.speed - k * r.x, 2);
    // Uncentered R^2, the usual definition for a fit through the origin.
    const double r2 = 1.0 - ss_res / syy;
    const double v12 = rows.back().speed;
    c.note("R2", num(r2, 10));
    c.note("v(1.2Hz)_mm_s", num(v12 * 1e3));
    c.expect(r2 > 0.999, "R^2 <= 0.999");
    c.expect(std::abs(v12 - 2.0e-3) <= 0.2e-3, "v(1.2 Hz) not 2.0 mm/s +- 10%");
}

void load_curve(Check& c) {
    const auto rows = characterization_sweep(SweepKind::Load, {0.0, 100e-6, 101e-6, 150e-6}, default_scenario());
    c.note("v(0)_mm_s", num(rows[0].speed * 1e3));
    c.note("v(100mg)_mm_s", num(rows[1].speed * 1e3));
    c.expect(std::abs(rows[0].speed - 2.0e-3) <= 0.05 * 2.0e-3, "v(0) not 2.0 mm/s +- 5%");
    c.expect(std::abs(rows[1].speed - 1.4e-3) <= 0.05 * 1.4e-3, "v(100 mg) not 1.4 mm/s +- 5%");
    c.expect(!rows[1].immobile, "100 mg flagged immobile");
    c.expect(rows[2].immobile && rows[3].immobile, "cargo > 100 mg not flagged immobile");
    c.expect(rows[2].speed == 0.0 && rows[3].speed == 0.0, "immobile robot still moves");
}

void deployment(Check& c) {
    const Scenario s = load_scenario(kScenarios + "deploy_phantom.json");
    const Trajectory t = simulate(s);
    const auto& log = t.deployment;
    c.expect(log.tip_contact_alpha.has_value(), "no tip contact");
    if (log.tip_contact_alpha) {
        c.note("tip_contact_alpha_deg", num(*log.tip_contact_alpha));
        c.expect(*log.tip_contact_alpha >= 85.0 && *log.tip_contact_alpha <= 95.0, "tip contact outside [85, 95] deg");
    }
    std::vector<Phase> seq;
    for (const auto& tr : log.transitions) seq.push_back(tr.phase);
    const std::vector<Phase> expected{Phase::Walking, Phase::Flipping, Phase::TipContact,
                                      Phase::Injecting, Phase::Recovering, Phase::Walking};
    c.expect(seq == expected, "phase order differs from WALKING FLIPPING TIP_CONTACT INJECTING RECOVERING WALKING");
    c.expect(!log.failed, "deployment failed");
    c.note("dose", num(log.dose_released));
    c.expect(std::abs(log.dose_released - 1.0) < 1e-12, "full dwell did not release the whole dose");

    // Cut short mid-injection: the dose is the elapsed fraction of the dwell.
    Scenario cut = s;
    cut.duration = 15.0;
    const Trajectory p = simulate(cut);
    const auto& tr = p.deployment.transitions;
    c.expect(!tr.empty() && tr.back().phase == Phase::Injecting, "short run did not end while injecting");
    if (!tr.empty() && tr.back().phase == Phase::Injecting) {
        const double expected_dose = (p.samples.back().time - tr.back().time) / s.deployment.dwell;
        c.note("partial_dose", num(p.deployment.dose_released));
        c.note("dwell_fraction", num(expected_dose));
        c.expect(std::abs(p.deployment.dose_released - expected_dose) < 1e-9, "partial dose != dwell fraction");
    }

    // Walking commands during injection are refused.
    Simulator sim(s);
    c.expect(sim.apply(SetMode{Mode::Deploy}).ok, "deploy refused while walking");
    while (sim.phase() != Phase::Injecting && !sim.terminated() && sim.time() < s.duration) sim.step();
    c.expect(sim.phase() == Phase::Injecting, "simulator never reached INJECTING");
    c.expect(!sim.apply(SetMode{Mode::Walk}).ok, "walk accepted during injection");
}

void climb(Check& c) {
    const Scenario s = load_scenario(kScenarios + "climb_wall.json");
    const Trajectory t = climb_scenario(s);
    const AnchoringSummary& a = t.anchoring;
    c.note("min_normal_force_mN", num(a.min_normal_force * 1e3));
    c.note("mean_normal_force_mN", num(a.mean_normal_force * 1e3));
    c.note("min_ratio", num(a.min_ratio));
    c.note("mean_ratio", num(a.mean_ratio));
    c.note("reference_force_mN", "0.24");
    c.note("reference_ratio", "3");
    c.note("force_discrepancy_pct", num(100.0 * (a.mean_normal_force / 0.24e-3 - 1.0), 3));
    c.note("ratio_discrepancy_pct", num(100.0 * (a.mean_ratio / 3.0 - 1.0), 3));
    c.expect(!t.truncated, "climb truncated");
    c.expect(a.steps_checked == static_cast<long long>(t.samples.size()), "not every step was checked");
    c.expect(a.min_normal_force > 0.0, "normal anchoring force not positive at every step");
    c.expect(a.feasible_all, "anchoring infeasible at some step");

    // Decay with distance from M3, at alpha = 0 on walls parallel to the bundled one.
    const RigConfig rig = s.field.rig()->config;
    double prev = 1e9;
    bool decays = true;
    for (double y = -0.040; y <= 0.0201; y += 0.010) {
        const Plane wall{Vec3(0, y, 0), Vec3::UnitY()};
        const RobotState st = place_on_surface(s.robot, wall, rig_B(rig, {}, wall.point), wall.point);
        const AnchoringReport r =
            anchoring_analysis(st, rig_field(rig, {}, wall.point), s.robot, s.gravity, &wall, s.safety_factor);
        decays = decays && r.normal_force < prev;
        prev = r.normal_force;
    }
    c.expect(decays, "normal force does not decay away from M3");

    // Linear in the robot moment.
    const Plane& wall = s.surface;
    const RobotState st = place_on_surface(s.robot, wall, rig_B(rig, {}, s.start), s.start);
    const FieldSample fs = rig_field(rig, {}, s.start);
    RobotGeometry doubled = s.robot;
    doubled.moment_magnitude *= 2.0;
    const double f1 = anchoring_analysis(st, fs, s.robot, s.gravity, &wall).normal_force;
    const double f2 = anchoring_analysis(st, fs, doubled, s.gravity, &wall).normal_force;
    c.note("force_ratio_2x_moment", num(f2 / f1, 12));
    c.expect(std::abs(f2 / f1 - 2.0) < 1e-9, "force not linear in the moment");
}

void field_properties(Check& c) {
    const RigConfig rig;
    const Box box = rig.working_volume();
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> ang(-180.0, 180.0);
    double div = 0.0, curl = 0.0, sup = 0.0, equi = 0.0, drift = 0.0, far_worst = 0.0;
    bool far_converges = true;
    for (int i = 0; i < 100; ++i) {
        const RigState st{ang(rng) / 2.0, ang(rng)};
        const auto magnets = build_rig(rig, st);
        const Vec3 p = random_in(rng, box);
        const FieldSample s = assembly_field(magnets, p);
        const double gn = s.gradient.norm();
        div = std::max(div, std::abs(s.gradient.trace()) / gn);
        curl = std::max(curl, (s.gradient - s.gradient.transpose()).norm() / gn);

        const std::vector<Magnet> a{magnets[0], magnets[1]}, b{magnets[2]};
        const FieldSample sa = assembly_field(a, p), sb = assembly_field(b, p);
        sup = std::max(sup, (s.B - sa.B - sb.B).norm() / s.B.norm());

        const double beta = ang(rng);
        const Quat R = yaw_rotation(beta);
        const Vec3 B0 = rig_B(rig, {st.alpha, 0.0}, p);
        const Vec3 B1 = rig_B(rig, {st.alpha, beta}, R * p);
        equi = std::max(equi, (B1 - R * B0).norm() / B0.norm());

        const Magnet& m = magnets[i % 3];
        const Vec3 dir = random_unit(rng);
        const double L = 2.0 * std::get<Cuboid>(m.shape).half_lengths.norm();
        double prev = 1e9;
        for (double ratio : {5.0, 10.0, 20.0, 40.0}) {
            const Vec3 q = m.pose.position + dir * ratio * L;
            const Vec3 D = dipole_field(dipole_moment_of(m), m.pose.position, q);
            const double err = (cuboid_field(m, q) - D).norm() / D.norm();
            far_converges = far_converges && err < prev;
            prev = err;
        }
        far_worst = std::max(far_worst, prev);

        CycleOptions opt;
        opt.beta = ang(rng);
        std::uniform_real_distribution<double> theta(39.0, 66.0), amax(40.0, 90.0);
        const CycleResult cyc = simulate_cycle(RobotGeometry::with_foot_span(calibrated_span()), cone(theta(rng)),
                                               amax(rng), 120, Vec3::Zero(), opt);
        drift = std::max(drift, cyc.max_anchor_drift);
    }
    c.note("div", num(div, 2));
    c.note("curl", num(curl, 2));
    c.note("superposition", num(sup, 2));
    c.note("far_field_err_at_40L", num(far_worst, 2));
    c.note("beta_equivariance", num(equi, 2));
    c.note("anchor_drift_m", num(drift, 2));
    c.expect(div < 1e-6, "divergence >= 1e-6 relative");
    c.expect(curl < 1e-6, "curl >= 1e-6 relative");
    c.expect(sup < 1e-14, "superposition not exact");
    c.expect(far_converges && far_worst < 2e-3, "far field does not converge to the dipole");
    c.expect(equi < 1e-10, "beta equivariance >= 1e-10");
    c.expect(drift < 1e-9, "anchored foot drifts >= 1e-9 m");
}

void determinism(Check& c) {
    // A teleop session drives straight_walk with a handful of commands.
    TeleopSettings settings;
    settings.record = true;
    Session session("straight_walk", load_scenario(kScenarios + "straight_walk.json"), settings);
    session.attach(1);
    const auto send = [&](const json& m) { session.handle(1, m.dump()); };
    const auto ticks = [&](int n) {
        for (int i = 0; i < n; ++i) session.tick(1.0 / 30.0);
    };
    ticks(31);
    send({{"type", "set_beta"}, {"degrees", 35}, {"rate", 20}});
    ticks(47);
    send({{"type", "set_gait"}, {"alpha_max", 60}, {"frequency", 0.9}});
    ticks(40);
    send({{"type", "set_mode"}, {"mode", "pause"}});
    ticks(9);
    send({{"type", "set_mode"}, {"mode", "walk"}});
    send({{"type", "set_beta"}, {"degrees", -20}});
    ticks(33);
    const std::string live = csv_of(session.samples());

    // The command log replayed through the batch sim command.
    const fs::path dir = fs::temp_directory_path() / ("maggait-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    const json request = {{"scenario", scenario_to_json(session.replay_scenario())}};
    cli::execute("sim", request, dir);
    const std::string batch = slurp(dir / "trajectory.csv");
    // Twice, for run-to-run stability.
    cli::execute("sim", request, dir);
    const std::string again = slurp(dir / "trajectory.csv");
    fs::remove_all(dir);

    c.note("commands", session.command_log().size());
    c.note("samples", session.samples().size());
    c.note("bytes", live.size());
    c.expect(live == batch, "teleop trajectory and replayed sim differ");
    c.expect(batch == again, "sim output differs between runs");
}

void waypoint_square(Check& c) {
    const Scenario s = load_scenario(kScenarios + "waypoint_square.json");
    const Trajectory t = simulate(s);
    const bool complete = std::any_of(t.events.begin(), t.events.end(),
                                      [](const Event& e) { return e.type == "plan_complete"; });
    const Vec3 gap = s.surface.project(t.samples.back().state.reference_position) -
                     s.surface.project(t.samples.front().state.reference_position);
    c.note("closure_mm", num(gap.norm() * 1e3));
    c.note("time_s", num(t.samples.back().time));
    c.expect(complete, "plan not completed");
    c.expect(gap.norm() < 2e-3, "square does not close within 2 mm");
}

} // namespace

int main() {
    std::cout << "maggait " << kVersion << " acceptance" << std::endl;
    criterion("center-field", center_field);
    criterion("alpha-sweep-shape", alpha_shape);
    criterion("axis-decay-and-gradient", axis_decay);
    criterion("pitch-range", pitch_range);
    criterion("stride-band", stride_band);
    criterion("estimator-agreement", estimator_agreement);
    criterion("speed-frequency-law", speed_frequency);
    criterion("load-curve", load_curve);
    criterion("deployment", deployment);
    criterion("climb-feasibility", climb);
    criterion("field-properties", field_properties);
    criterion("determinism", determinism);
    criterion("waypoint-square", waypoint_square);
    std::cout << (g_failed == 0 ? "all criteria passed" : std::to_string(g_failed) + " criteria failed") << std::endl;
    return g_failed == 0 ? 0 : 1;
}
