#include "wattless/config.hpp"

#include <json.hpp>

#include <set>

namespace wattless {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& section, const std::set<std::string>& allowed)
{
    if (!obj.is_object()) {
        throw ConfigError("section " + section + " must be an object");
    }
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) {
            throw ConfigError("unknown key " + section + "." + k);
        }
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section)
{
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for " + section + "." + key);
    }
}

CodecRatios read_ratios(const json& j, const std::string& section, CodecRatios r)
{
    check_keys(j, section, {"jpeg", "png", "gif"});
    read(j, "jpeg", r.jpeg, section);
    read(j, "png", r.png, section);
    read(j, "gif", r.gif, section);
    for (double v : {r.jpeg, r.png, r.gif}) {
        if (!(v > 0 && v <= 1)) {
            throw ConfigError(section + " ratios must lie in (0, 1]");
        }
    }
    return r;
}

json ratios_json(const CodecRatios& r)
{
    return {{"jpeg", r.jpeg}, {"png", r.png}, {"gif", r.gif}};
}

std::string mode_name(BackendMode m)
{
    return m == BackendMode::rules ? "rules" : "remote";
}

} // namespace

void BackendConfig::validate() const
{
    if (mode == BackendMode::remote && remote_endpoint.empty()) {
        throw ConfigError("remote backend mode requires backend.remote_endpoint");
    }
    if (!(timeout_seconds > 0)) {
        throw ConfigError("backend.timeout_seconds must be positive");
    }
}

AppConfig parse_config(std::string_view json_text)
{
    json root = json::parse(json_text, nullptr, false, true);
    if (root.is_discarded()) {
        throw ConfigError("config is not valid JSON");
    }
    check_keys(root, "config", {"analyzer", "pipeline", "energy", "backend", "server"});
    AppConfig cfg;

    if (root.contains("analyzer")) {
        const json& a = root["analyzer"];
        const std::string s = "analyzer";
        check_keys(a, s, {"oversized_image_bytes", "fold_images", "dom_op_patterns", "bloat_ratio", "codec_ratios", "enabled"});
        read(a, "oversized_image_bytes", cfg.analyzer.oversized_image_bytes, s);
        read(a, "fold_images", cfg.analyzer.fold_images, s);
        read(a, "dom_op_patterns", cfg.analyzer.dom_op_patterns, s);
        read(a, "bloat_ratio", cfg.analyzer.bloat_ratio, s);
        if (a.contains("codec_ratios")) {
            cfg.analyzer.codec_ratios = read_ratios(a["codec_ratios"], "analyzer.codec_ratios", cfg.analyzer.codec_ratios);
        }
        if (a.contains("enabled")) {
            const json& e = a["enabled"];
            std::set<std::string> names;
            for (FindingKind k : all_finding_kinds()) {
                names.insert(std::string(to_string(k)));
            }
            check_keys(e, "analyzer.enabled", names);
            for (const auto& [k, v] : e.items()) {
                if (!v.is_boolean()) {
                    throw ConfigError("analyzer.enabled." + k + " must be a boolean");
                }
                FindingKind kind = finding_kind_from_string(k);
                if (v.get<bool>()) {
                    cfg.analyzer.enabled.insert(kind);
                } else {
                    cfg.analyzer.enabled.erase(kind);
                }
            }
        }
    }

    if (root.contains("energy")) {
        const json& e = root["energy"];
        const std::string s = "energy";
        check_keys(e, s, {"intensity_kwh_per_gb", "segment_shares", "cpu_joules_per_dom_op", "carbon_g_per_kwh"});
        read(e, "intensity_kwh_per_gb", cfg.energy.intensity_kwh_per_gb, s);
        read(e, "segment_shares", cfg.energy.segment_shares, s);
        read(e, "cpu_joules_per_dom_op", cfg.energy.cpu_joules_per_dom_op, s);
        read(e, "carbon_g_per_kwh", cfg.energy.carbon_g_per_kwh, s);
    }
    try {
        cfg.energy.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& err) {
        throw ConfigError(err.what());
    }

    if (root.contains("pipeline")) {
        const json& p = root["pipeline"];
        const std::string s = "pipeline";
        check_keys(p, s, {"enabled", "strip_console", "energy_gating", "fold_images", "critical_elements", "codec_ratios",
                          "font_glyph_coverage", "font_ratio_floor"});
        if (p.contains("enabled")) {
            const json& e = p["enabled"];
            std::set<std::string> names;
            for (TransformKind k : all_transform_kinds()) {
                names.insert(std::string(to_string(k)));
            }
            check_keys(e, "pipeline.enabled", names);
            for (const auto& [k, v] : e.items()) {
                if (!v.is_boolean()) {
                    throw ConfigError("pipeline.enabled." + k + " must be a boolean");
                }
                TransformKind kind = transform_kind_from_string(k);
                if (v.get<bool>()) {
                    cfg.pipeline.enabled.insert(kind);
                } else {
                    cfg.pipeline.enabled.erase(kind);
                }
            }
        }
        read(p, "strip_console", cfg.pipeline.strip_console, s);
        read(p, "energy_gating", cfg.pipeline.energy_gating, s);
        read(p, "fold_images", cfg.pipeline.fold_images, s);
        read(p, "critical_elements", cfg.pipeline.critical_elements, s);
        if (p.contains("codec_ratios")) {
            cfg.pipeline.codec_ratios = read_ratios(p["codec_ratios"], "pipeline.codec_ratios", cfg.pipeline.codec_ratios);
        }
        read(p, "font_glyph_coverage", cfg.pipeline.font_glyph_coverage, s);
        read(p, "font_ratio_floor", cfg.pipeline.font_ratio_floor, s);
        if (cfg.pipeline.critical_elements < 1) {
            throw ConfigError("pipeline.critical_elements must be at least 1");
        }
        if (!(cfg.pipeline.font_glyph_coverage > 0) || !(cfg.pipeline.font_ratio_floor > 0 && cfg.pipeline.font_ratio_floor <= 1)) {
            throw ConfigError("pipeline font projection parameters are out of range");
        }
    }
    cfg.pipeline.analyzer = cfg.analyzer;
    cfg.pipeline.energy = cfg.energy;

    if (root.contains("backend")) {
        const json& b = root["backend"];
        const std::string s = "backend";
        if (b.is_object() && (b.contains("auth_token") || b.contains("token") || b.contains("api_key"))) {
            throw ConfigError("credentials are read from the environment variable named by backend.auth_token_env_var");
        }
        check_keys(b, s, {"mode", "remote_endpoint", "auth_token_env_var", "timeout_seconds", "fallback_to_rules"});
        std::string mode = "rules";
        read(b, "mode", mode, s);
        if (mode == "rules") {
            cfg.backend.mode = BackendMode::rules;
        } else if (mode == "remote") {
            cfg.backend.mode = BackendMode::remote;
        } else {
            throw ConfigError("backend.mode must be rules or remote");
        }
        read(b, "remote_endpoint", cfg.backend.remote_endpoint, s);
        read(b, "auth_token_env_var", cfg.backend.auth_token_env_var, s);
        read(b, "timeout_seconds", cfg.backend.timeout_seconds, s);
        read(b, "fallback_to_rules", cfg.backend.fallback_to_rules, s);
    }
    cfg.backend.validate();

    if (root.contains("server")) {
        const json& v = root["server"];
        const std::string s = "server";
        check_keys(v, s, {"bind_address", "port", "max_body_bytes", "session_ttl_seconds", "threads"});
        read(v, "bind_address", cfg.server.bind_address, s);
        read(v, "port", cfg.server.port, s);
        read(v, "max_body_bytes", cfg.server.max_body_bytes, s);
        read(v, "session_ttl_seconds", cfg.server.session_ttl_seconds, s);
        read(v, "threads", cfg.server.threads, s);
        if (cfg.server.port < 0 || cfg.server.port > 65535) {
            throw ConfigError("server.port out of range");
        }
        if (!(cfg.server.session_ttl_seconds > 0) || cfg.server.threads == 0 || cfg.server.max_body_bytes == 0) {
            throw ConfigError("server limits must be positive");
        }
    }
    return cfg;
}

AppConfig load_config(const std::filesystem::path& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text);
}

std::string config_to_json(const AppConfig& cfg)
{
    json analyzer_enabled = json::object();
    for (FindingKind k : all_finding_kinds()) {
        analyzer_enabled[std::string(to_string(k))] = cfg.analyzer.enabled.count(k) > 0;
    }
    json pipeline_enabled = json::object();
    for (TransformKind k : all_transform_kinds()) {
        pipeline_enabled[std::string(to_string(k))] = cfg.pipeline.enabled.count(k) > 0;
    }
    json j{
        {"analyzer",
         {{"oversized_image_bytes", cfg.analyzer.oversized_image_bytes},
          {"fold_images", cfg.analyzer.fold_images},
          {"dom_op_patterns", cfg.analyzer.dom_op_patterns},
          {"bloat_ratio", cfg.analyzer.bloat_ratio},
          {"codec_ratios", ratios_json(cfg.analyzer.codec_ratios)},
          {"enabled", analyzer_enabled}}},
        {"pipeline",
         {{"enabled", pipeline_enabled},
          {"strip_console", cfg.pipeline.strip_console},
          {"energy_gating", cfg.pipeline.energy_gating},
          {"fold_images", cfg.pipeline.fold_images},
          {"critical_elements", cfg.pipeline.critical_elements},
          {"codec_ratios", ratios_json(cfg.pipeline.codec_ratios)},
          {"font_glyph_coverage", cfg.pipeline.font_glyph_coverage},
          {"font_ratio_floor", cfg.pipeline.font_ratio_floor}}},
        {"energy",
         {{"intensity_kwh_per_gb", cfg.energy.intensity_kwh_per_gb},
          {"segment_shares", cfg.energy.segment_shares},
          {"cpu_joules_per_dom_op", cfg.energy.cpu_joules_per_dom_op},
          {"carbon_g_per_kwh", cfg.energy.carbon_g_per_kwh}}},
        {"backend",
         {{"mode", mode_name(cfg.backend.mode)},
          {"remote_endpoint", cfg.backend.remote_endpoint},
          {"auth_token_env_var", cfg.backend.auth_token_env_var},
          {"timeout_seconds", cfg.backend.timeout_seconds},
          {"fallback_to_rules", cfg.backend.fallback_to_rules}}},
        {"server",
         {{"bind_address", cfg.server.bind_address},
          {"port", cfg.server.port},
          {"max_body_bytes", cfg.server.max_body_bytes},
          {"session_ttl_seconds", cfg.server.session_ttl_seconds},
          {"threads", cfg.server.threads}}},
    };
    return j.dump(2) + "\n";
}

} // namespace wattless
