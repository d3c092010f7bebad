// HTTP + WebSocket front end for teleop sessions (Boost.Beast, one thread).
//   GET /healthz            liveness
//   GET /scenarios          bundled scenario ids and descriptions
//   WS  /session?scenario=  one Session per scenario id, shared by its clients
#pragma once

#include <maggait/maggait.hpp>

#include <filesystem>
#include <memory>

namespace maggait::cli {

struct ScenarioEntry {
    std::string id;
    std::string description;
    std::filesystem::path path;
};

/// *.json files in dir, sorted by id (file stem).
std::vector<ScenarioEntry> list_scenarios(const std::filesystem::path& dir);

/// Ids are restricted to [A-Za-z0-9_-] so they cannot escape the directory.
bool valid_scenario_id(const std::string& id);

struct ServerOptions {
    std::string host = "127.0.0.1";
    unsigned short port = 8080; // 0 picks a free port
    std::filesystem::path scenario_dir;
    std::filesystem::path static_dir; // empty: no static files
    TeleopSettings teleop;
    json base_config = default_config();
    bool handle_signals = false; // stop on SIGINT/SIGTERM
};

class TeleopServer {
public:
    explicit TeleopServer(ServerOptions options);
    ~TeleopServer();
    TeleopServer(const TeleopServer&) = delete;
    TeleopServer& operator=(const TeleopServer&) = delete;

    /// Opens the listening socket and returns the bound port. Throws
    /// boost::system::system_error when the address is unavailable.
    unsigned short bind();

    /// Serves until stop() (or a signal when handle_signals is set).
    void run();

    /// Safe to call from any thread.
    void stop();

    struct Impl; // connection classes in server.cpp need the definition

private:
    std::unique_ptr<Impl> impl_;
};

} // namespace maggait::cli
