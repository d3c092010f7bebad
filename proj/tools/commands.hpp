// maggait command line: field, sweep, sim, calibrate, serve, replay.
// Exit codes: 0 ok, 2 config error, 3 argument error, 4 runtime or bind error.
#pragma once

#include <maggait/maggait.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace maggait::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kArgumentError = 3, kRuntimeError = 4 };

/// "start:stop:step" (inclusive, step > 0) or a comma list. Empty ranges
/// throw ArgumentError.
std::vector<double> parse_range(const std::string& text);

/// Directory holding the bundled scenarios (MAGGAIT_SCENARIOS overrides).
std::filesystem::path bundled_scenario_dir();

/// A scenario given as a path, or as the id of a bundled scenario.
std::filesystem::path resolve_scenario_path(const std::string& name);

/// Runs a fully resolved request (as stored in a manifest) and writes its
/// outputs into dir. Returns the output file names.
std::vector<std::string> execute(const std::string& command, const json& request,
                                 const std::filesystem::path& dir);

int run(int argc, char** argv);

} // namespace maggait::cli
