#include <lbo/manifest.hpp>

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace lbo {

std::string config_hash(const nlohmann::json& config)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json RunManifest::to_json() const
{
    return {{"command", command},       {"inputs", inputs},
            {"outputs", outputs},       {"config", config},
            {"config_hash", config_hash(config)},
            {"seed", seed},             {"tool_version", kToolVersion},
            {"wall_time", {{"total_seconds", wall_seconds}, {"phases", timings}}},
            {"exit_code", exit_code}};
}

std::filesystem::path RunManifest::write(const std::filesystem::path& dir) const
{
    std::filesystem::create_directories(dir);
    const auto path = dir / ("manifest_" + command + ".json");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json().dump(2) << '\n';
    return path;
}

} // namespace lbo
