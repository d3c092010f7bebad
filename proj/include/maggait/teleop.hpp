// Teleoperation session: a Simulator advanced in scaled wall-clock time,
// driven by JSON messages from connected clients. Transport-agnostic; the
// WebSocket server in tools/ feeds it.
//
// Client -> server: set_beta, set_gait, set_mode, reset, set_time_scale
// (each with a "seq"), plus release/claim for the driver role.
// Server -> client: hello, ack, error, state.
#pragma once

#include "io.hpp"

#include <functional>

namespace maggait {

struct TeleopSettings {
    double telemetry_hz = 30.0;
    std::size_t trace_length = 512;
    double max_time_scale = 20.0;
    bool record = false; // keep every sample (replay checks); otherwise only the latest
};

struct Outgoing {
    int connection;
    json message;
};

using ScenarioResolver = std::function<Scenario(const std::string&)>;

class Session {
public:
    Session(std::string scenario_id, Scenario scenario, TeleopSettings settings = {},
            ScenarioResolver resolver = {})
        : id_(std::move(scenario_id)), settings_(settings), resolver_(std::move(resolver)),
          scenario_(std::move(scenario)), sim_(std::make_unique<Simulator>(scenario_)) {
        push_trace();
    }

    const std::string& scenario_id() const { return id_; }
    const Simulator& simulator() const { return *sim_; }
    double time_scale() const { return time_scale_; }
    const std::deque<Vec3>& trace() const { return trace_; }
    const TeleopSettings& settings() const { return settings_; }
    std::optional<int> driver() const { return driver_; }

    /// Registers a connection; the first one (or the first after a release)
    /// becomes the driver. Returns the hello message.
    json attach(int connection) {
        connections_.push_back(connection);
        const bool drives = !driver_.has_value();
        if (drives) driver_ = connection;
        return hello(drives ? "driver" : "viewer");
    }

    void detach(int connection) {
        std::erase(connections_, connection);
        if (driver_ == connection) driver_.reset();
        std::erase_if(inbox_, [&](const auto& m) { return m.first == connection; });
    }

    const std::vector<int>& connections() const { return connections_; }

    /// Queues a raw client message; it is handled at the next tick boundary.
    void enqueue(int connection, const std::string& text) { inbox_.emplace_back(connection, text); }

    /// Handles one message immediately (between steps). Returns the reply.
    json handle(int connection, const std::string& text) {
        json msg;
        try {
            msg = json::parse(text);
        } catch (const json::exception& e) {
            return error_reply(nullptr, std::string("malformed JSON: ") + e.what());
        }
        if (!msg.is_object()) return error_reply(nullptr, "message must be a JSON object");
        const json seq = msg.contains("seq") ? msg["seq"] : json(nullptr);
        if (!msg.contains("type") || !msg["type"].is_string())
            return error_reply(seq, "message needs a string 'type'");
        const std::string type = msg["type"].get<std::string>();

        if (type == "release") {
            if (driver_ != connection) return error_reply(seq, "not the driver");
            driver_.reset();
            return ack(seq, {{"role", "viewer"}});
        }
        if (type == "claim") {
            if (driver_ && driver_ != connection) return error_reply(seq, "driver role is taken");
            driver_ = connection;
            return ack(seq, {{"role", "driver"}});
        }
        if (driver_ != connection) return error_reply(seq, "viewer connections cannot send commands");

        try {
            if (type == "set_time_scale") {
                const double f = cfg::number(msg, "factor");
                if (f < 0.0 || f > settings_.max_time_scale)
                    return error_reply(seq, "factor must be in [0, " + fmt(settings_.max_time_scale) + "]");
                time_scale_ = f;
                return ack(seq);
            }
            if (type == "reset") {
                const std::string next = msg.value("scenario", id_);
                if (!msg.contains("scenario") || next == id_) {
                    restart(scenario_);
                } else {
                    if (!resolver_) return error_reply(seq, "no scenario registry");
                    Scenario sc = resolver_(next);
                    id_ = next;
                    restart(std::move(sc));
                }
                return ack(seq, {{"scenario", id_}});
            }
            const Command cmd = command_from_json(msg);
            const CommandResult r = sim_->apply(cmd);
            if (!r.ok) return error_reply(seq, r.reason);
            return ack(seq);
        } catch (const Error& e) {
            return error_reply(seq, e.what());
        }
    }

    /// Advances by wall_dt x time_scale of simulated time after handling the
    /// queued messages. Returns the replies to send.
    std::vector<Outgoing> tick(double wall_dt) {
        std::vector<Outgoing> out;
        auto inbox = std::move(inbox_);
        inbox_.clear();
        for (const auto& [conn, text] : inbox) out.push_back({conn, handle(conn, text)});
        advance(wall_dt);
        return out;
    }

    /// Steps owed for wall_dt; the remainder carries to the next call.
    long long advance(double wall_dt) {
        require(wall_dt >= 0.0, "wall_dt must be >= 0");
        debt_ += wall_dt * time_scale_;
        const double dt = sim_->dt();
        long long n = 0;
        while (debt_ >= dt - 1e-15 && !sim_->terminated()) {
            sim_->step();
            debt_ -= dt;
            ++n;
        }
        if (sim_->terminated()) debt_ = 0.0;
        if (!settings_.record) sim_->trim_history();
        push_trace();
        return n;
    }

    json state() const {
        const Sample& s = sim_->current();
        const auto& p = s.state.reference_position;
        const auto& q = s.state.orientation;
        json trace = json::array();
        for (const auto& t : trace_) trace.push_back(cfg::to_json(t));
        double heading = 0.0;
        try {
            heading = heading_of(s.state, sim_->scenario().surface, sim_->scenario().robot.body_axis);
        } catch (const ArgumentError&) {
            heading = s.beta;
        }
        return {
            {"type", "state"},
            {"schema_version", kSchemaVersion},
            {"scenario", id_},
            {"time", s.time},
            {"step", s.step},
            {"position", cfg::to_json(p)},
            {"orientation", {q.w(), q.x(), q.y(), q.z()}},
            {"heading", heading},
            {"alpha", s.alpha},
            {"beta", s.beta},
            {"anchor", std::string(to_string(s.state.anchor))},
            {"pitch_theta", sim_->pitch_theta()},
            {"speed", sim_->speed_estimate()},
            {"flags",
             {{"alpha_exceeds_72", s.flags.alpha_exceeds_72},
              {"pitch_exceeds_70", s.flags.pitch_exceeds_70},
              {"freq_exceeds_1p5", s.flags.freq_exceeds_1p5}}},
            {"gait", gait_to_json(sim_->gait())},
            {"phase", std::string(to_string(s.phase))},
            {"dose", s.dose},
            {"paused", sim_->paused()},
            {"time_scale", time_scale_},
            {"terminal", sim_->terminated()},
            {"trace", trace},
        };
    }

    json hello(const std::string& role) const {
        json manifest = scenario_to_json(scenario_);
        manifest.erase("schedule");
        return {{"type", "hello"},
                {"schema_version", kSchemaVersion},
                {"role", role},
                {"scenario", id_},
                {"telemetry_hz", settings_.telemetry_hz},
                {"trace_length", settings_.trace_length},
                {"max_time_scale", settings_.max_time_scale},
                {"manifest", manifest}};
    }

    /// Accepted commands keyed by step, for replay through simulate().
    const std::vector<ScheduledCommand>& command_log() const { return sim_->command_log(); }

    /// The scenario with the command log as its schedule and the duration
    /// covering every step taken so far.
    Scenario replay_scenario() const {
        Scenario sc = scenario_;
        sc.schedule = sim_->command_log();
        sc.dt = sim_->dt();
        sc.duration = double(sim_->step_index()) * sim_->dt();
        return sc;
    }

    /// Recorded samples (complete only with settings.record).
    const std::vector<Sample>& samples() const { return sim_->samples(); }

private:
    json ack(const json& seq, json extra = json::object()) const {
        json j = {{"type", "ack"}, {"schema_version", kSchemaVersion}, {"seq", seq}};
        j.update(extra);
        return j;
    }

    json error_reply(const json& seq, const std::string& reason) const {
        return {{"type", "error"}, {"schema_version", kSchemaVersion}, {"seq", seq}, {"reason", reason}};
    }

    void restart(Scenario sc) {
        scenario_ = std::move(sc);
        sim_ = std::make_unique<Simulator>(scenario_);
        debt_ = 0.0;
        trace_.clear();
        push_trace();
    }

    void push_trace() {
        trace_.push_back(sim_->current().state.reference_position);
        while (trace_.size() > settings_.trace_length) trace_.pop_front();
    }

    std::string id_;
    TeleopSettings settings_;
    ScenarioResolver resolver_;
    Scenario scenario_;
    std::unique_ptr<Simulator> sim_;
    double time_scale_ = 1.0;
    double debt_ = 0.0;
    std::deque<Vec3> trace_;
    std::optional<int> driver_;
    std::vector<int> connections_;
    std::vector<std::pair<int, std::string>> inbox_;
};

} // namespace maggait
