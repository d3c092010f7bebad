// Run manifests: resolved request, timestamp and SHA-256 digests of outputs.
#pragma once

#include <maggait/maggait.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace maggait::cli {

std::string sha256_file(const std::filesystem::path& path);

std::string utc_timestamp();

/// Writes manifest.json into dir. outputs are file names relative to dir.
void write_manifest(const std::filesystem::path& dir, const std::string& command,
                    const std::vector<std::string>& argv, const json& request,
                    const std::vector<std::string>& outputs);

} // namespace maggait::cli
