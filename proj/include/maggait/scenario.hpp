// Fixed-timestep scenario runner: walking loop, deployment flip sequence,
// waypoint following, sweeps and anchoring checks.
#pragma once

#include "control.hpp"
#include "gait.hpp"

#include <deque>
#include <map>

namespace maggait {

enum class Mode { Walk, Deploy, Pause };
enum class Phase { Walking, Flipping, TipContact, Injecting, Recovering };

inline std::string_view to_string(Mode m) {
    switch (m) {
    case Mode::Walk: return "walk";
    case Mode::Deploy: return "deploy";
    case Mode::Pause: return "pause";
    }
    return "walk";
}

inline Mode mode_from_string(std::string_view s) {
    if (s == "walk") return Mode::Walk;
    if (s == "deploy") return Mode::Deploy;
    if (s == "pause") return Mode::Pause;
    throw ArgumentError("unknown mode '" + std::string(s) + "'");
}

inline std::string_view to_string(Phase p) {
    switch (p) {
    case Phase::Walking: return "WALKING";
    case Phase::Flipping: return "FLIPPING";
    case Phase::TipContact: return "TIP_CONTACT";
    case Phase::Injecting: return "INJECTING";
    case Phase::Recovering: return "RECOVERING";
    }
    return "WALKING";
}

// Commands. Each takes effect at the next step boundary.
struct SetBeta {
    double degrees = 0.0;
    double rate = 0.0; // deg/s; 0 jumps immediately
    bool operator==(const SetBeta&) const = default;
};
struct SetGait {
    std::optional<double> alpha_max;
    std::optional<double> frequency;
    std::optional<Waveform> waveform;
    bool operator==(const SetGait&) const = default;
};
struct SetMode {
    Mode mode = Mode::Walk;
    bool operator==(const SetMode&) const = default;
};
using Command = std::variant<SetBeta, SetGait, SetMode>;

struct ScheduledCommand {
    long long step = 0;
    Command command;
};

struct DeploymentSettings {
    double dwell = 20.0;               // s
    std::optional<double> alpha_rate;  // deg/s; default is the walking rate 4 alpha_max f
    std::optional<double> trigger_time; // s
};

struct Scenario {
    std::string id = "scenario";
    std::string description;
    FieldModel field;
    RobotGeometry robot;
    GaitParams gait;
    StabilityThresholds stability;
    LoadModel load;
    Plane surface;
    Vec3 gravity{0.0, -kStandardGravity, 0.0};
    Vec3 start = Vec3::Zero(); // robot placed on the surface below this point
    double beta = 0.0;         // initial rig yaw [deg]
    double duration = 10.0;    // s
    std::optional<double> dt;  // s; default 1/(f steps_per_cycle)
    std::vector<ScheduledCommand> schedule;
    DeploymentSettings deployment;
    bool check_anchoring = false;
    double safety_factor = 1.0;
    double clearance_tolerance = 0.2e-3;
    std::optional<WaypointPlan> waypoints;
    ControllerSettings controller;

    double time_step() const {
        return dt ? *dt : 1.0 / (gait.frequency * gait.steps_per_cycle);
    }
    long long step_count() const {
        return static_cast<long long>(std::floor(duration / time_step() + 1e-9));
    }
    long long step_at(double t) const { return std::llround(t / time_step()); }

    void validate() const {
        gait.validate();
        robot.validate();
        surface.validate();
        require(all_finite(gravity) && all_finite(start), "gravity and start must be finite");
        require(time_step() > 0.0 && std::isfinite(time_step()), "dt must be positive");
        require(duration >= 0.0 && std::isfinite(duration), "duration must be >= 0");
        require(deployment.dwell >= 0.0, "dwell must be >= 0");
        if (deployment.alpha_rate) require(*deployment.alpha_rate > 0.0, "alpha rate must be > 0");
        require(safety_factor > 0.0, "safety factor must be positive");
        if (waypoints) waypoints->validate();
        if (const auto* rig = field.rig()) rig->config.validate();
        if (const auto* cone = field.cone())
            require(cone->magnitude > 0.0, "cone field magnitude must be positive");
    }
};

struct Event {
    long long step = 0;
    double time = 0.0;
    std::string type;
    std::string detail;
    double value = std::numeric_limits<double>::quiet_NaN();
};

struct Sample {
    long long step = 0;
    double time = 0.0;
    RobotState state;
    double alpha = 0.0;
    double beta = 0.0;
    StabilityFlags flags;
    Phase phase = Phase::Walking;
    double dose = 0.0;
    bool penetration = false;
    bool immobile = false;
};

struct PhaseTransition {
    Phase phase;
    long long step;
    double time;
};

struct DeploymentLog {
    std::vector<PhaseTransition> transitions;
    double dose_released = 0.0;
    std::optional<double> tip_contact_alpha;
    bool failed = false;
};

struct AnchoringSummary {
    long long steps_checked = 0;
    bool feasible_all = true;
    double min_ratio = std::numeric_limits<double>::infinity();
    double mean_ratio = 0.0;
    double min_normal_force = std::numeric_limits<double>::infinity();
    double mean_normal_force = 0.0;
    double gravity_component = 0.0;
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<Event> events;
    DeploymentLog deployment;
    AnchoringSummary anchoring;
    bool truncated = false;
    double pitch_theta = 0.0; // cone pitch at the start position [deg]
};

struct CommandResult {
    bool ok = true;
    std::string reason;
};

class Simulator {
public:
    explicit Simulator(Scenario scenario) : sc_(std::move(scenario)) {
        sc_.validate();
        dt_ = sc_.time_step();
        gait_ = sc_.gait;
        beta_ = sc_.beta;
        beta_target_ = sc_.beta;
        const ConeParameters cone = sc_.field.cone_at(sc_.beta, sc_.start, gait_.alpha_max);
        theta_ = cone.pitch_theta;
        load_factor_ = load_factor(sc_.robot.cargo_mass, sc_.load);
        immobile_ = load_factor_ == 0.0;

        state_ = place_on_surface(sc_.robot, sc_.surface, sc_.field.B(0.0, beta_, sc_.start),
                                  sc_.start, Anchor::FR);
        if (sc_.waypoints) {
            ctrl_.leg_start = state_.reference_position;
            if (waypoint_reached(state_, *sc_.waypoints, ctrl_, sc_.surface)) advance_waypoint();
            if (!ctrl_.done) reaim();
        }
        record_transition(Phase::Walking);
        flags_ = stability_check(gait_, theta_, sc_.stability);
        if (immobile_) push_event("immobile", "cargo exceeds load capacity", sc_.robot.cargo_mass);
        last_ = make_sample(false);
        samples_.push_back(last_);
        if (sc_.check_anchoring &&
            !check_anchoring(sc_.field.sample(alpha_, beta_, state_.reference_position))) {
            terminated_ = true;
            truncated_ = true;
        }
        window_.emplace_back(0.0, state_.reference_position);
    }

    const Scenario& scenario() const { return sc_; }
    const Sample& current() const { return last_; }
    long long step_index() const { return step_; }
    double dt() const { return dt_; }
    double time() const { return double(step_) * dt_; }
    bool terminated() const { return terminated_; }
    Phase phase() const { return phase_; }
    bool paused() const { return paused_; }
    const GaitParams& gait() const { return gait_; }
    double pitch_theta() const { return theta_; }
    const std::vector<ScheduledCommand>& command_log() const { return log_; }
    const DeploymentLog& deployment_log() const { return deploy_log_; }
    const ControllerState& controller_state() const { return ctrl_; }

    /// Applies a command at the current step boundary.
    CommandResult apply(const Command& cmd) {
        CommandResult r = std::visit([&](const auto& c) { return apply_one(c); }, cmd);
        if (r.ok) log_.push_back({step_, cmd});
        return r;
    }

    void step() {
        if (terminated_) return;
        const long long next = step_ + 1;
        const double prev_alpha = alpha_;
        Anchor anchor = state_.anchor;
        advance_beta();
        advance_alpha(prev_alpha, anchor);

        const FieldSample fs = sc_.check_anchoring
                                   ? sc_.field.sample(alpha_, beta_, state_.reference_position)
                                   : FieldSample{state_.reference_position,
                                                 sc_.field.B(alpha_, beta_, state_.reference_position),
                                                 Mat3::Zero(), false};
        step_ = next;
        if (sc_.check_anchoring && !check_anchoring(fs)) {
            terminated_ = true;
            truncated_ = true;
            return;
        }

        StepOptions opt;
        opt.clearance_tolerance = sc_.clearance_tolerance;
        opt.load_factor = phase_ == Phase::Walking ? load_factor_ : 1.0;
        const Anchor before = state_.anchor;
        StepResult r = step_pose(state_, fs.B, anchor, sc_.robot, sc_.surface, opt);
        state_ = r.state;
        state_.time = time();
        if (r.anchor_switched && before != Anchor::NONE)
            push_event("anchor_switch",
                       std::string(to_string(before)) + "->" + std::string(to_string(anchor)),
                       alpha_);
        if (r.penetration && !penetrating_)
            push_event("penetration", "foot below clearance tolerance", r.max_penetration);
        penetrating_ = r.penetration;

        after_step();
        update_controller();

        const StabilityFlags f = stability_check(gait_, theta_, sc_.stability);
        if (!(f == flags_)) {
            push_event("flags", std::to_string(f.bits()), double(f.bits()));
            flags_ = f;
        }
        last_ = make_sample(r.penetration);
        samples_.push_back(last_);
        update_speed_window();
    }

    /// Trailing one-cycle in-plane speed [m/s].
    double speed_estimate() const {
        if (window_.size() < 2) return 0.0;
        const auto& a = window_.front();
        const auto& b = window_.back();
        const double span = b.first - a.first;
        if (span <= 0.0) return 0.0;
        const Vec3 d = b.second - a.second;
        const Vec3 in_plane = d - d.dot(sc_.surface.normal) * sc_.surface.normal;
        return in_plane.norm() / span;
    }

    Trajectory take_trajectory() {
        Trajectory t;
        t.samples = std::move(samples_);
        t.events = std::move(events_);
        t.deployment = deploy_log_;
        t.anchoring = anchoring_;
        if (anchoring_.steps_checked > 0) {
            t.anchoring.mean_ratio = ratio_sum_ / double(anchoring_.steps_checked);
            t.anchoring.mean_normal_force = force_sum_ / double(anchoring_.steps_checked);
        }
        t.truncated = truncated_;
        t.pitch_theta = theta_;
        samples_.clear();
        events_.clear();
        return t;
    }

    /// Samples recorded since construction (or the last take_trajectory).
    const std::vector<Sample>& samples() const { return samples_; }
    const std::vector<Event>& events() const { return events_; }

    /// Drops stored samples except the latest (long-running sessions).
    void trim_history() {
        if (samples_.size() > 1) samples_.erase(samples_.begin(), samples_.end() - 1);
    }

private:
    CommandResult apply_one(const SetBeta& c) {
        if (!std::isfinite(c.degrees) || !(c.rate >= 0.0) || !std::isfinite(c.rate))
            return {false, "set_beta needs finite degrees and a rate >= 0"};
        beta_target_ = c.degrees;
        beta_rate_ = c.rate;
        if (c.rate == 0.0) beta_ = c.degrees;
        return {};
    }

    CommandResult apply_one(const SetGait& c) {
        GaitParams g = gait_;
        if (c.alpha_max) g.alpha_max = *c.alpha_max;
        if (c.frequency) g.frequency = *c.frequency;
        if (c.waveform) g.waveform = *c.waveform;
        try {
            g.validate();
        } catch (const ArgumentError& e) {
            return {false, e.what()};
        }
        // Keep alpha continuous: move to the point of the new waveform with the
        // same alpha on the same slope.
        if (phase_ == Phase::Walking && g.alpha_max != gait_.alpha_max && g.alpha_max > 0.0) {
            const double frac = phase_acc_ - std::floor(phase_acc_);
            const bool rising = frac < 0.25 || frac >= 0.75;
            const double ratio = std::clamp(alpha_ / g.alpha_max, -1.0, 1.0);
            const double base = g.waveform == Waveform::Triangular
                                    ? ratio / 4.0
                                    : std::asin(ratio) / (2.0 * kPi);
            const double p = rising ? (base >= 0.0 ? base : 1.0 + base) : 0.5 - base;
            phase_acc_ = std::floor(phase_acc_) + p;
            alpha_ = alpha_at_phase(g, p);
        }
        gait_ = g;
        return {};
    }

    CommandResult apply_one(const SetMode& c) {
        switch (c.mode) {
        case Mode::Pause:
            paused_ = true;
            return {};
        case Mode::Walk:
            if (phase_ != Phase::Walking)
                return {false, "deployment in progress (" + std::string(to_string(phase_)) + ")"};
            if (ctrl_.done && sc_.waypoints) return {false, "waypoint plan finished"};
            paused_ = false;
            return {};
        case Mode::Deploy:
            if (phase_ == Phase::Walking) {
                paused_ = false;
                set_phase(Phase::Flipping);
                return {};
            }
            if (paused_) {
                paused_ = false;
                return {};
            }
            return {false, "deployment already in progress"};
        }
        return {false, "unknown mode"};
    }

    // Advances the cycle phase by one step; snaps onto the 1/steps_per_cycle
    // lattice to keep waveform extrema exact.
    double next_phase() const {
        double p = phase_acc_ + gait_.frequency * dt_;
        const double n = gait_.steps_per_cycle;
        const double snapped = std::round(p * n);
        if (std::abs(p * n - snapped) < 1e-9) p = snapped / n;
        return p;
    }

    double deploy_rate() const {
        return sc_.deployment.alpha_rate.value_or(4.0 * gait_.alpha_max * gait_.frequency);
    }

    void advance_beta() {
        if (beta_ == beta_target_) return;
        const double step = beta_rate_ * dt_;
        const double diff = beta_target_ - beta_;
        beta_ = std::abs(diff) <= step ? beta_target_ : beta_ + std::copysign(step, diff);
    }

    void advance_alpha(double prev_alpha, Anchor& anchor) {
        if (paused_) return;
        switch (phase_) {
        case Phase::Walking: {
            const double p = next_phase();
            cycle_wrapped_ = std::floor(p) > std::floor(phase_acc_);
            phase_acc_ = p;
            alpha_ = alpha_at_phase(gait_, p);
            break;
        }
        case Phase::Flipping:
        case Phase::TipContact:
            alpha_ = std::min(180.0, alpha_ + deploy_rate() * dt_);
            break;
        case Phase::Injecting:
            break;
        case Phase::Recovering:
            alpha_ = std::max(gait_.alpha_max, alpha_ - deploy_rate() * dt_);
            break;
        }
        if (phase_ == Phase::TipContact || phase_ == Phase::Injecting) {
            anchor = Anchor::TIP;
        } else if (phase_ == Phase::Recovering && state_.anchor == Anchor::TIP) {
            anchor = Anchor::TIP;
        } else {
            anchor = anchor_rule(rate_sign(prev_alpha, alpha_)).value_or(state_.anchor);
        }
    }

    void after_step() {
        const RobotGeometry& g = sc_.robot;
        switch (phase_) {
        case Phase::Walking:
            break;
        case Phase::Flipping:
            if (sc_.surface.height(tip_world(state_, g)) <= 0.0) {
                deploy_log_.tip_contact_alpha = alpha_;
                push_event("tip_contact", "capillary tip reached the surface", alpha_);
                set_phase(Phase::TipContact);
                register_anchor(Anchor::TIP);
            } else if (alpha_ >= 180.0) {
                deploy_log_.failed = true;
                push_event("deployment_failure", "tip never reached the surface", alpha_);
                terminated_ = true;
            }
            break;
        case Phase::TipContact:
            if (alpha_ >= 180.0) {
                injecting_elapsed_ = 0.0;
                set_phase(Phase::Injecting);
                if (sc_.deployment.dwell == 0.0) set_phase(Phase::Recovering);
            }
            break;
        case Phase::Injecting:
            if (!paused_) {
                injecting_elapsed_ += dt_;
                dose_ = std::min(1.0, injecting_elapsed_ / sc_.deployment.dwell);
                deploy_log_.dose_released = dose_;
                if (injecting_elapsed_ >= sc_.deployment.dwell - 1e-12) set_phase(Phase::Recovering);
            }
            break;
        case Phase::Recovering: {
            if (state_.anchor == Anchor::TIP) {
                const double hl = sc_.surface.height(foot_world(state_, g, Foot::FL));
                const double hr = sc_.surface.height(foot_world(state_, g, Foot::FR));
                if (std::min(hl, hr) <= 0.0) {
                    push_event("feet_contact", "feet back on the surface", alpha_);
                    register_anchor(Anchor::FL);
                }
            }
            if (alpha_ <= gait_.alpha_max) {
                if (state_.anchor == Anchor::TIP) {
                    push_event("feet_contact", "feet registered at the end of recovery", alpha_);
                    register_anchor(Anchor::FL);
                }
                set_phase(Phase::Walking);
                phase_acc_ = 0.25;
            }
            break;
        }
        }
    }

    // Moves the robot so the given anchor sits on the surface and makes it active.
    void register_anchor(Anchor a) {
        const Anchor prev = state_.anchor;
        state_.anchor = a;
        const double h = sc_.surface.height(anchor_world(state_, sc_.robot));
        state_.reference_position -= h * sc_.surface.normal;
        push_event("anchor_switch",
                   std::string(to_string(prev)) + "->" + std::string(to_string(a)), alpha_);
    }

    void set_phase(Phase p) {
        phase_ = p;
        record_transition(p);
        push_event("phase", std::string(to_string(p)), alpha_);
    }

    void record_transition(Phase p) { deploy_log_.transitions.push_back({p, step_, time()}); }

    bool check_anchoring(const FieldSample& fs) {
        const AnchoringReport rep = anchoring_analysis(state_, fs, sc_.robot, sc_.gravity,
                                                       &sc_.surface, sc_.safety_factor);
        anchoring_.steps_checked += 1;
        anchoring_.gravity_component = rep.gravity_component;
        anchoring_.min_normal_force = std::min(anchoring_.min_normal_force, rep.normal_force);
        anchoring_.min_ratio = std::min(anchoring_.min_ratio, rep.ratio);
        ratio_sum_ += rep.ratio;
        force_sum_ += rep.normal_force;
        if (!rep.feasible) {
            anchoring_.feasible_all = false;
            push_event("anchoring_infeasible", "normal force ratio below safety factor", rep.ratio);
        }
        return rep.feasible;
    }

    void reaim() {
        const ControllerDecision d = waypoint_controller(state_, *sc_.waypoints, ctrl_, sc_.surface,
                                                         beta_target_, sc_.robot.body_axis);
        if (d.done) return;
        if (d.beta != beta_target_) {
            beta_target_ = d.beta;
            beta_rate_ = sc_.controller.slew_rate;
        }
    }

    void advance_waypoint() {
        push_event("waypoint_reached", std::to_string(ctrl_.cursor), double(ctrl_.cursor));
        ctrl_.cursor += 1;
        ctrl_.steps_on_leg = 0;
        ctrl_.leg_start = state_.reference_position;
        if (ctrl_.cursor >= sc_.waypoints->points.size()) {
            ctrl_.done = true;
            paused_ = true;
            push_event("plan_complete", "", double(ctrl_.cursor));
        }
    }

    void update_controller() {
        if (!sc_.waypoints || ctrl_.done) return;
        ctrl_.steps_on_leg += 1;
        if (waypoint_reached(state_, *sc_.waypoints, ctrl_, sc_.surface)) {
            advance_waypoint();
            if (ctrl_.done) return;
        }
        if (ctrl_.steps_on_leg > sc_.controller.step_budget) {
            ctrl_.done = true;
            ctrl_.timed_out = true;
            paused_ = true;
            push_event("controller_timeout", std::to_string(ctrl_.cursor), double(ctrl_.cursor));
            return;
        }
        if (phase_ == Phase::Walking && cycle_wrapped_) reaim();
        cycle_wrapped_ = false;
    }

    void update_speed_window() {
        window_.emplace_back(time(), state_.reference_position);
        const double cycle = 1.0 / gait_.frequency;
        while (window_.size() > 2 && window_.back().first - window_[1].first >= cycle - 1e-12)
            window_.pop_front();
    }

    Sample make_sample(bool penetration) const {
        Sample s;
        s.step = step_;
        s.time = time();
        s.state = state_;
        s.state.time = s.time;
        s.alpha = alpha_;
        s.beta = beta_;
        s.flags = flags_;
        s.phase = phase_;
        s.dose = dose_;
        s.penetration = penetration;
        s.immobile = immobile_;
        return s;
    }

    void push_event(std::string type, std::string detail, double value) {
        events_.push_back({step_, time(), std::move(type), std::move(detail), value});
    }

    Scenario sc_;
    double dt_ = 0.0;
    GaitParams gait_;
    double theta_ = 0.0;
    double load_factor_ = 1.0;
    bool immobile_ = false;
    RobotState state_;
    long long step_ = 0;
    double alpha_ = 0.0;
    double beta_ = 0.0;
    double beta_target_ = 0.0;
    double beta_rate_ = 0.0;
    double phase_acc_ = 0.0;
    bool cycle_wrapped_ = false;
    Phase phase_ = Phase::Walking;
    bool paused_ = false;
    double injecting_elapsed_ = 0.0;
    double dose_ = 0.0;
    bool penetrating_ = false;
    bool terminated_ = false;
    bool truncated_ = false;
    StabilityFlags flags_;
    ControllerState ctrl_;
    DeploymentLog deploy_log_;
    AnchoringSummary anchoring_;
    double ratio_sum_ = 0.0;
    double force_sum_ = 0.0;
    Sample last_;
    std::vector<Sample> samples_;
    std::vector<Event> events_;
    std::vector<ScheduledCommand> log_;
    std::deque<std::pair<double, Vec3>> window_;
};

/// Runs a scenario to its duration, applying the schedule (and the deployment
/// trigger) at step boundaries. Rejected scheduled commands become events.
inline Trajectory simulate(const Scenario& scenario) {
    Simulator sim(scenario);
    std::multimap<long long, Command> pending;
    for (const auto& c : scenario.schedule) pending.emplace(c.step, c.command);
    if (scenario.deployment.trigger_time)
        pending.emplace(scenario.step_at(*scenario.deployment.trigger_time), SetMode{Mode::Deploy});
    std::vector<Event> rejected;
    const long long n = scenario.step_count();
    auto apply_due = [&](long long k) {
        auto [lo, hi] = pending.equal_range(k);
        for (auto it = lo; it != hi; ++it) {
            const CommandResult r = sim.apply(it->second);
            if (!r.ok) rejected.push_back({k, double(k) * sim.dt(), "command_rejected", r.reason});
        }
    };
    for (long long k = 0; k < n && !sim.terminated(); ++k) {
        apply_due(k);
        sim.step();
    }
    Trajectory t = sim.take_trajectory();
    if (!rejected.empty()) {
        t.events.insert(t.events.end(), rejected.begin(), rejected.end());
        std::stable_sort(t.events.begin(), t.events.end(),
                         [](const Event& a, const Event& b) { return a.step < b.step; });
    }
    return t;
}

inline Trajectory run_deployment(Scenario scenario, double trigger_time) {
    require(trigger_time >= 0.0 && trigger_time <= scenario.duration,
            "trigger time must lie within the scenario");
    scenario.deployment.trigger_time = trigger_time;
    return simulate(scenario);
}

/// Walls need gravity perpendicular to the normal, ceilings antiparallel.
inline Trajectory climb_scenario(Scenario scenario) {
    const Vec3 g = scenario.gravity.normalized();
    const double c = g.dot(scenario.surface.normal);
    require(scenario.gravity.norm() > 0.0 && (std::abs(c) < 1e-9 || c > 1.0 - 1e-9),
            "climb scenario needs a vertical wall or an inverted ceiling");
    scenario.check_anchoring = true;
    return simulate(scenario);
}

enum class SweepKind { Alpha, Pitch, Frequency, Load };

inline std::string_view to_string(SweepKind k) {
    switch (k) {
    case SweepKind::Alpha: return "alpha";
    case SweepKind::Pitch: return "pitch";
    case SweepKind::Frequency: return "frequency";
    case SweepKind::Load: return "load";
    }
    return "alpha";
}

inline SweepKind sweep_kind_from_string(std::string_view s) {
    if (s == "alpha") return SweepKind::Alpha;
    if (s == "pitch") return SweepKind::Pitch;
    if (s == "frequency") return SweepKind::Frequency;
    if (s == "load") return SweepKind::Load;
    throw ArgumentError("unknown sweep kind '" + std::string(s) + "'");
}

struct SweepRow {
    double x = 0.0;
    double stride = 0.0; // m per cycle
    double speed = 0.0;  // m/s
    double pitch = 0.0;  // cone pitch [deg]
    StabilityFlags flags;
    bool immobile = false;
};

/// Sweep x units: alpha [deg], pitch [walking-plane offset along Y, m],
/// frequency [Hz], load [kg]. Each point runs the simulator over `cycles`
/// whole cycles of the base scenario with the swept parameter replaced.
inline std::vector<SweepRow> characterization_sweep(SweepKind kind, const std::vector<double>& xs,
                                                    const Scenario& base, int cycles = 2) {
    require(!xs.empty(), "sweep range is empty");
    require(cycles >= 1, "sweep needs at least one cycle");
    std::vector<SweepRow> rows(xs.size());
    auto run_point = [&](std::size_t i) {
        Scenario sc = base;
        sc.schedule.clear();
        sc.deployment.trigger_time.reset();
        sc.waypoints.reset();
        sc.dt.reset();
        const double x = xs[i];
        switch (kind) {
        case SweepKind::Alpha: sc.gait.alpha_max = x; break;
        case SweepKind::Frequency: sc.gait.frequency = x; break;
        case SweepKind::Load: sc.robot.cargo_mass = x; break;
        case SweepKind::Pitch: {
            const auto* rig = sc.field.rig();
            require(rig != nullptr, "pitch sweep needs the rig field model");
            RigFieldModel moved = *rig;
            moved.config.working_point_side = WorkingPointSide::AwayFromM3;
            moved.config.working_point_offset = 0.0;
            sc.field = FieldModel(moved);
            sc.start = Vec3(0.0, x, 0.0);
            sc.surface = Plane{sc.start, Vec3::UnitY()};
            break;
        }
        }
        sc.duration = double(cycles) / sc.gait.frequency;
        sc.dt = 1.0 / (sc.gait.frequency * sc.gait.steps_per_cycle);
        const Trajectory t = simulate(sc);
        const Vec3 heading = yaw_rotation(sc.beta) * Vec3::UnitX();
        const Vec3 d = t.samples.back().state.reference_position - t.samples.front().state.reference_position;
        SweepRow row;
        row.x = x;
        row.stride = d.dot(heading) / double(cycles);
        row.speed = row.stride * sc.gait.frequency;
        row.pitch = t.pitch_theta;
        row.flags = stability_check(sc.gait, t.pitch_theta, sc.stability);
        row.immobile = load_factor(sc.robot.cargo_mass, sc.load) == 0.0;
        rows[i] = row;
    };
    for (std::size_t i = 0; i < xs.size(); ++i) run_point(i);
    return rows;
}

} // namespace maggait
