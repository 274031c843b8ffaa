#pragma once

#include "wattless/analyzer.hpp"
#include "wattless/energy.hpp"
#include "wattless/optimizer.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace wattless {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum class BackendMode { rules, remote };

struct BackendConfig {
    BackendMode mode = BackendMode::rules;
    std::string remote_endpoint;
    /// Name of the environment variable holding the bearer credential.
    std::string auth_token_env_var;
    double timeout_seconds = 30;
    bool fallback_to_rules = true;

    /// Throws ConfigError when remote mode lacks an endpoint.
    void validate() const;
};

struct ServerConfig {
    std::string bind_address = "127.0.0.1";
    int port = 8080;
    std::uint64_t max_body_bytes = 50ull * 1024 * 1024;
    double session_ttl_seconds = 3600;
    std::size_t threads = 8;
};

struct AppConfig {
    AnalyzerConfig analyzer;
    PipelineConfig pipeline; // its analyzer and energy fields mirror the sections
    EnergyModelParams energy;
    BackendConfig backend;
    ServerConfig server;
};

/// JSON document with optional sections analyzer, pipeline, energy, backend
/// and server. Absent keys keep their defaults; unknown keys are errors.
AppConfig parse_config(std::string_view json_text);
AppConfig load_config(const std::filesystem::path& path);
/// Full configuration with every key, in the parse_config format.
std::string config_to_json(const AppConfig& cfg);

} // namespace wattless
