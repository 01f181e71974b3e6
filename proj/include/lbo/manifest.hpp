#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace lbo {

inline constexpr const char* kToolVersion = "0.1.0";

/// 64-bit FNV-1a of the compact JSON dump. Object keys are stored sorted, so
/// the hash does not depend on key order in the source document.
std::string config_hash(const nlohmann::json& config);

struct RunManifest {
    std::string command;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    nlohmann::json config = nlohmann::json::object();
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    nlohmann::json timings = nlohmann::json::object(); ///< named phase durations
    int exit_code = 0;

    nlohmann::json to_json() const;
    /// Writes `<dir>/manifest_<command>.json`.
    std::filesystem::path write(const std::filesystem::path& dir) const;
};

} // namespace lbo
