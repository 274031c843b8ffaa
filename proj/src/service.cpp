#include "wattless/service.hpp"

#include "wattless/css.hpp"
#include "wattless/html.hpp"
#include "wattless/script.hpp"
#include "wattless/svg.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <random>
#include <set>

namespace wattless {

using nlohmann::json;

namespace {

class RequestError : public Error {
public:
    RequestError(int status, std::string message) : Error(std::move(message)), status(status) {}
    int status;
};

HttpResponse reply(int status, const json& body)
{
    return {status, body.dump(), "application/json"};
}

HttpResponse error_reply(int status, const std::string& message, const json& extra = json::object())
{
    json j = extra;
    j["error"] = message;
    return reply(status, j);
}

json parse_body(const std::string& body)
{
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw RequestError(400, "request body must be a JSON object");
    }
    return j;
}

std::string new_token()
{
    std::random_device rd;
    std::string out;
    static const char hex[] = "0123456789abcdef";
    for (int i = 0; i < 4; ++i) {
        std::uint32_t v = rd();
        for (int k = 0; k < 8; ++k) {
            out += hex[(v >> (4 * k)) & 0xf];
        }
    }
    return out; // 128 bits
}

/// Root-relative asset path; rejects remote URLs and escapes.
std::string normalize_url(const std::string& url)
{
    std::string u = url;
    while (u.rfind("./", 0) == 0) {
        u.erase(0, 2);
    }
    while (!u.empty() && u[0] == '/') {
        u.erase(0, 1);
    }
    if (u.empty() || u.find("://") != std::string::npos || u.find('\\') != std::string::npos) {
        throw RequestError(400, "asset url must be a relative path: " + url);
    }
    std::size_t start = 0;
    while (start <= u.size()) {
        std::size_t slash = u.find('/', start);
        std::string seg = u.substr(start, slash == std::string::npos ? std::string::npos : slash - start);
        if (seg.empty() || seg == "." || seg == "..") {
            throw RequestError(400, "asset url must not contain empty, . or .. segments: " + url);
        }
        if (slash == std::string::npos) {
            break;
        }
        start = slash + 1;
    }
    return u;
}

struct UploadedAsset {
    std::string id;
    std::optional<AssetClass> cls;
    std::optional<std::string> payload;
    std::uint64_t declared_bytes = 0;
};

std::vector<UploadedAsset> read_assets(const json& body)
{
    if (!body.contains("assets") || !body["assets"].is_array()) {
        throw RequestError(400, "request needs an assets array");
    }
    std::vector<UploadedAsset> out;
    std::set<std::string> seen;
    for (const auto& a : body["assets"]) {
        if (!a.is_object() || !a.contains("url") || !a["url"].is_string()) {
            throw RequestError(400, "each asset needs a url");
        }
        UploadedAsset u;
        u.id = normalize_url(a["url"].get<std::string>());
        if (!seen.insert(u.id).second) {
            throw RequestError(400, "duplicate asset url: " + u.id);
        }
        if (a.contains("class")) {
            try {
                u.cls = asset_class_from_string(a["class"].get<std::string>());
            } catch (const std::exception&) {
                throw RequestError(400, "unknown asset class for " + u.id);
            }
        }
        int forms = a.contains("text") + a.contains("base64") + a.contains("bytes");
        if (forms != 1) {
            throw RequestError(400, "asset " + u.id + " needs exactly one of text, base64 or bytes");
        }
        try {
            if (a.contains("text")) {
                u.payload = a["text"].get<std::string>();
            } else if (a.contains("base64")) {
                u.payload = base64_decode(a["base64"].get<std::string>());
            } else {
                u.declared_bytes = a["bytes"].get<std::uint64_t>();
            }
        } catch (const json::exception&) {
            throw RequestError(400, "malformed payload for asset " + u.id);
        } catch (const Error& e) {
            throw RequestError(400, std::string("malformed payload for asset ") + u.id + ": " + e.what());
        }
        out.push_back(std::move(u));
    }
    return out;
}

AssetClass class_of(const UploadedAsset& u)
{
    if (u.cls) {
        return *u.cls;
    }
    return classify_asset(u.id, u.payload ? std::string_view(*u.payload) : std::string_view());
}

json estimate_json(const EnergyEstimate& e)
{
    return {{"bytes", e.bytes},
            {"dom_ops", e.dom_ops},
            {"transfer_j", e.transfer_joules},
            {"cpu_j", e.cpu_joules},
            {"total_j", e.total_joules},
            {"segments", e.per_segment_joules}};
}

json savings_json(const SavingsReport& s, const EnergyModelParams& p)
{
    return {{"before_j", s.before.total_joules},
            {"after_j", s.after.total_joules},
            {"delta_j", s.delta_joules},
            {"delta_pct", s.delta_percent},
            {"carbon_before_g", estimate_carbon(s.before, p)},
            {"carbon_after_g", estimate_carbon(s.after, p)},
            {"before", estimate_json(s.before)},
            {"after", estimate_json(s.after)}};
}

json patchset_json(const PatchSet& p)
{
    json hunks = json::array();
    for (const auto& h : p.hunks) {
        hunks.push_back({{"id", h.id},
                         {"old_start", h.old_start},
                         {"old_len", h.old_len},
                         {"new_start", h.new_start},
                         {"new_len", h.new_len},
                         {"state", std::string(to_string(h.state))}});
    }
    return {{"asset", p.asset_id}, {"original_digest", p.original_digest}, {"hunks", hunks}, {"patch", render_patch(p)}};
}

EnergyEstimate snippets_energy(const std::vector<Snippet>& s, const PipelineConfig& cfg)
{
    std::uint64_t bytes = 0;
    std::size_t ops = 0;
    for (const auto& x : s) {
        bytes += x.text.size();
        if (x.cls == AssetClass::script) {
            ops += script::count_dom_ops(x.text, cfg.analyzer.dom_op_patterns);
        } else if (x.cls == AssetClass::html) {
            for (const auto& src : script_sources(bundle_from_files({{"index.html", x.text}}))) {
                ops += script::count_dom_ops(src.text, cfg.analyzer.dom_op_patterns);
            }
        }
    }
    return estimate_energy(bytes, ops, cfg.energy);
}

std::set<std::string> remote_targets(const SiteBundle& b)
{
    std::set<std::string> out;
    for (const auto& r : b.references) {
        if (!resolve_reference(r.from, r.raw).local) {
            out.insert(r.target);
        }
    }
    return out;
}

std::vector<Snippet> text_snippets(const SiteBundle& b)
{
    std::vector<Snippet> out;
    for (const auto& a : b.assets) {
        if (!a.external && is_text_class(a.cls)) {
            out.push_back({a.id, a.cls, a.payload});
        }
    }
    return out;
}

/// Validates a reply against the request and returns the merged assets.
std::vector<Snippet> merge_reply(const std::vector<Snippet>& request, const std::vector<Snippet>& reply)
{
    std::map<std::string, const Snippet*> by_url;
    for (const auto& r : reply) {
        if (!by_url.emplace(r.url, &r).second) {
            throw BackendFailure(BackendFailure::Kind::malformed, "backend returned " + r.url + " twice");
        }
    }
    std::vector<Snippet> out;
    std::size_t used = 0;
    for (const auto& s : request) {
        auto it = by_url.find(s.url);
        if (it == by_url.end()) {
            out.push_back(s);
            continue;
        }
        ++used;
        Snippet after{s.url, s.cls, it->second->text};
        if (auto why = validate_backend_output(s, after)) {
            throw BackendFailure(BackendFailure::Kind::validation, s.url + ": " + *why);
        }
        out.push_back(std::move(after));
    }
    if (used != by_url.size()) {
        throw BackendFailure(BackendFailure::Kind::malformed, "backend returned an asset that was not sent");
    }
    return out;
}

std::string config_hints(const PipelineConfig& cfg)
{
    json enabled = json::array();
    for (TransformKind k : all_transform_kinds()) {
        if (cfg.enabled.count(k)) {
            enabled.push_back(std::string(to_string(k)));
        }
    }
    return json{{"enabled", enabled}, {"strip_console", cfg.strip_console}, {"fold_images", cfg.fold_images}}.dump();
}

} // namespace

double steady_clock_seconds()
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

BackendFailure::BackendFailure(Kind kind, std::string message) : Error(std::move(message)), kind_(kind) {}

std::string_view to_string(BackendFailure::Kind k)
{
    switch (k) {
    case BackendFailure::Kind::transport: return "transport";
    case BackendFailure::Kind::timeout: return "timeout";
    case BackendFailure::Kind::status: return "status";
    case BackendFailure::Kind::malformed: return "malformed";
    case BackendFailure::Kind::validation: return "validation";
    }
    return "transport";
}

std::vector<std::string> external_references(const Snippet& s)
{
    Asset a{s.url, s.cls, s.url, s.text.size(), s.text, false};
    std::set<std::string> out;
    for (const auto& raw : extract_references(a)) {
        ResolvedRef r = resolve_reference(s.url, raw);
        if (!r.id.empty() && !r.local) {
            out.insert(r.id);
        }
    }
    return {out.begin(), out.end()};
}

std::optional<std::string> validate_backend_output(const Snippet& before, const Snippet& after)
{
    switch (after.cls) {
    case AssetClass::html: {
        auto dom = html::parse_html(after.text);
        if (!html::check_invariants(dom)) {
            return "html does not parse to a valid tree";
        }
        if (!html::find_first(dom, "html") && html::find_first(html::parse_html(before.text), "html")) {
            return "html document lost its root element";
        }
        break;
    }
    case AssetClass::css:
        if (css::parse_css(after.text).unparsed.size() > css::parse_css(before.text).unparsed.size()) {
            return "stylesheet gained unparseable content";
        }
        break;
    case AssetClass::script:
        if (!script::well_formed(after.text)) {
            return "script has an unterminated literal or comment";
        }
        break;
    case AssetClass::svg:
        if (!svg::well_formed(after.text)) {
            return "svg is not well-formed";
        }
        break;
    default: break;
    }
    auto old_refs = external_references(before);
    for (const auto& r : external_references(after)) {
        if (!std::binary_search(old_refs.begin(), old_refs.end(), r)) {
            return "adds external reference " + r;
        }
    }
    return std::nullopt;
}

std::vector<Snippet> call_remote_backend(const std::vector<Snippet>& assets, const BackendConfig& cfg,
                                         const std::string& config_hints_json)
{
    cfg.validate();
    const std::string& ep = cfg.remote_endpoint;
    std::size_t scheme = ep.find("://");
    if (scheme == std::string::npos) {
        throw BackendFailure(BackendFailure::Kind::transport, "endpoint needs a scheme: " + ep);
    }
    std::size_t slash = ep.find('/', scheme + 3);
    std::string origin = ep.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : ep.substr(slash);

    json req_assets = json::array();
    for (const auto& a : assets) {
        req_assets.push_back({{"class", std::string(to_string(a.cls))}, {"url", a.url}, {"text", a.text}});
    }
    json hints = json::parse(config_hints_json, nullptr, false);
    json request{{"assets", req_assets}, {"config_hints", hints.is_discarded() ? json::object() : hints}};

    httplib::Client client(origin);
    auto secs = static_cast<time_t>(cfg.timeout_seconds);
    auto usecs = static_cast<time_t>((cfg.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    if (!cfg.auth_token_env_var.empty()) {
        const char* token = std::getenv(cfg.auth_token_env_var.c_str());
        if (token == nullptr) {
            throw BackendFailure(BackendFailure::Kind::transport,
                                 "credential variable " + cfg.auth_token_env_var + " is not set");
        }
        client.set_bearer_token_auth(token);
    }
    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, request.dump(), "application/json");
    if (!res) {
        double waited = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || waited >= cfg.timeout_seconds * 0.95) {
            throw BackendFailure(BackendFailure::Kind::timeout, "backend did not answer within the timeout");
        }
        throw BackendFailure(BackendFailure::Kind::transport, "backend request failed: " + httplib::to_string(err));
    }
    if (res->status < 200 || res->status >= 300) {
        throw BackendFailure(BackendFailure::Kind::status,
                             "backend answered " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    json body = json::parse(res->body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("assets") || !body["assets"].is_array()) {
        throw BackendFailure(BackendFailure::Kind::malformed, "backend reply lacks an assets array");
    }
    std::vector<Snippet> reply;
    for (const auto& a : body["assets"]) {
        if (!a.is_object() || !a.contains("url") || !a["url"].is_string() || !a.contains("text") || !a["text"].is_string()) {
            throw BackendFailure(BackendFailure::Kind::malformed, "backend asset needs url and text strings");
        }
        reply.push_back({a["url"].get<std::string>(), AssetClass::other, a["text"].get<std::string>()});
    }
    return merge_reply(assets, reply);
}

Service::Service(AppConfig cfg, Clock clock) : cfg_(std::move(cfg)), clock_(std::move(clock))
{
    cfg_.backend.validate();
}

void Service::set_remote_backend(std::function<std::vector<Snippet>(const std::vector<Snippet>&)> fn)
{
    remote_override_ = std::move(fn);
}

std::vector<Snippet> Service::remote(const std::vector<Snippet>& assets)
{
    if (remote_override_) {
        return merge_reply(assets, remote_override_(assets));
    }
    return call_remote_backend(assets, cfg_.backend, config_hints(cfg_.pipeline));
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body)
{
    try {
        if (body.size() > cfg_.server.max_body_bytes) {
            return error_reply(413, "payload exceeds " + std::to_string(cfg_.server.max_body_bytes) + " bytes");
        }
        std::string p = path.substr(0, path.find('?'));
        const std::string sessions = "/v1/sessions/";
        if (p == "/v1/health") {
            return method == "GET" ? health() : error_reply(405, "method not allowed");
        }
        if (p == "/v1/optimize" || p == "/v1/estimate" || p == "/v1/diff") {
            if (method != "POST") {
                return error_reply(405, "method not allowed");
            }
            return p == "/v1/optimize" ? optimize(body) : p == "/v1/estimate" ? estimate(body) : diff(body);
        }
        if (p.rfind(sessions, 0) == 0) {
            std::string rest = p.substr(sessions.size());
            std::size_t slash = rest.find('/');
            std::string id = rest.substr(0, slash);
            std::string tail = slash == std::string::npos ? "" : rest.substr(slash);
            if (!id.empty() && tail.empty()) {
                return method == "GET" ? get_session(id) : error_reply(405, "method not allowed");
            }
            if (!id.empty() && tail == "/apply") {
                return method == "POST" ? apply(id, body) : error_reply(405, "method not allowed");
            }
        }
        return error_reply(404, "no route for " + p);
    } catch (const RequestError& e) {
        return error_reply(e.status, e.what());
    } catch (const BundleError& e) {
        return error_reply(400, e.what());
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
}

HttpResponse Service::health()
{
    return reply(200, {{"status", "ok"},
                       {"backend", cfg_.backend.mode == BackendMode::rules ? "rules" : "remote"},
                       {"sessions", session_count()}});
}

HttpResponse Service::optimize(const std::string& body)
{
    json req = parse_body(body);
    auto uploads = read_assets(req);
    if (uploads.empty()) {
        throw RequestError(400, "assets must not be empty");
    }
    auto session = std::make_shared<ReviewSession>();
    session->backend = cfg_.backend.mode == BackendMode::rules ? "rules" : "remote";
    std::string backend_error;
    std::string backend_error_kind;
    bool bundle_mode = std::any_of(uploads.begin(), uploads.end(),
                                   [](const UploadedAsset& u) { return class_of(u) == AssetClass::html; });
    json findings = json::array();
    json transformations = json::array();

    if (bundle_mode) {
        std::map<std::string, std::string> files;
        std::map<std::string, std::uint64_t> declared;
        for (const auto& u : uploads) {
            if (u.payload) {
                files[u.id] = *u.payload;
            } else {
                declared[u.id] = u.declared_bytes;
            }
        }
        LoadOptions opts;
        if (req.contains("entry")) {
            opts.entry_name = normalize_url(req["entry"].get<std::string>());
        }
        SiteBundle original = bundle_from_files(files, opts, declared);
        SiteBundle optimized;
        bool done = false;
        if (cfg_.backend.mode == BackendMode::remote) {
            try {
                auto before = text_snippets(original);
                auto after = remote(before);
                optimized = original;
                for (const auto& s : after) {
                    Asset* a = optimized.find(s.url);
                    a->payload = s.text;
                    a->bytes = s.text.size();
                }
                relink(optimized);
                optimized.validate();
                auto old_remote = remote_targets(original);
                for (const auto& t : remote_targets(optimized)) {
                    if (!old_remote.count(t)) {
                        throw BackendFailure(BackendFailure::Kind::validation, "adds external reference " + t);
                    }
                }
                done = true;
            } catch (const BackendFailure& e) {
                backend_error = e.what();
                backend_error_kind = std::string(to_string(e.kind()));
            } catch (const BundleError& e) {
                backend_error = e.what();
                backend_error_kind = "validation";
            }
            if (!done && !cfg_.backend.fallback_to_rules) {
                return error_reply(502, "remote backend failed", {{"detail", backend_error}, {"kind", backend_error_kind}});
            }
            session->fallback_used = !done;
        }
        if (!done) {
            PipelineResult r = run_pipeline(original, cfg_.pipeline);
            optimized = std::move(r.bundle);
            for (const auto& f : r.findings) {
                findings.push_back({{"kind", std::string(to_string(f.kind))},
                                    {"asset", f.asset_id},
                                    {"node_path", f.locator.node_path},
                                    {"projected_bytes_saved", f.projected_bytes_saved},
                                    {"note", f.note}});
            }
            for (const auto& rec : r.log.records) {
                transformations.push_back({{"kind", std::string(to_string(rec.kind))},
                                           {"asset", rec.asset_id},
                                           {"bytes_before", rec.bytes_before},
                                           {"bytes_after", rec.bytes_after},
                                           {"accepted", rec.accepted},
                                           {"note", rec.note}});
            }
        }
        const auto& patterns = cfg_.pipeline.analyzer.dom_op_patterns;
        session->savings = compute_savings(bundle_energy(original, cfg_.pipeline.energy, patterns),
                                           bundle_energy(optimized, cfg_.pipeline.energy, patterns));
        session->entry = original.entry;
        for (const auto& s : text_snippets(original)) {
            session->original[s.url] = s.text;
            session->classes[s.url] = s.cls;
        }
        for (const auto& s : text_snippets(optimized)) {
            session->optimized[s.url] = s.text;
            session->classes.emplace(s.url, s.cls);
        }
    } else {
        std::vector<Snippet> before;
        for (const auto& u : uploads) {
            if (!u.payload) {
                throw RequestError(400, "snippet " + u.id + " needs text");
            }
            before.push_back({u.id, class_of(u), *u.payload});
        }
        std::vector<Snippet> after;
        bool done = false;
        if (cfg_.backend.mode == BackendMode::remote) {
            try {
                after = remote(before);
                done = true;
            } catch (const BackendFailure& e) {
                backend_error = e.what();
                backend_error_kind = std::string(to_string(e.kind()));
            }
            if (!done && !cfg_.backend.fallback_to_rules) {
                return error_reply(502, "remote backend failed", {{"detail", backend_error}, {"kind", backend_error_kind}});
            }
            session->fallback_used = !done;
        }
        if (!done) {
            after = optimize_snippets(before, cfg_.pipeline);
        }
        session->snippet_mode = true;
        session->savings = compute_savings(snippets_energy(before, cfg_.pipeline), snippets_energy(after, cfg_.pipeline));
        for (const auto& s : before) {
            session->original[s.url] = s.text;
            session->classes[s.url] = s.cls;
        }
        for (const auto& s : after) {
            session->optimized[s.url] = s.text;
        }
    }

    std::set<std::string> ids;
    for (const auto& [k, v] : session->original) {
        ids.insert(k);
    }
    for (const auto& [k, v] : session->optimized) {
        ids.insert(k);
    }
    for (const auto& id : ids) {
        std::string& a = session->original[id];
        std::string& b = session->optimized[id];
        if (a != b) {
            session->patchsets.emplace(id, unified_diff(a, b, 3, id));
        }
    }

    session->id = new_token();
    session->created_at = clock_();
    session->ttl_seconds = cfg_.server.session_ttl_seconds;
    json patchsets = json::array();
    for (const auto& [id, p] : session->patchsets) {
        patchsets.push_back(patchset_json(p));
    }
    json out{{"session_id", session->id},
             {"mode", session->snippet_mode ? "snippets" : "bundle"},
             {"backend", session->backend},
             {"fallback_used", session->fallback_used},
             {"savings", savings_json(session->savings, cfg_.pipeline.energy)},
             {"patchsets", patchsets},
             {"findings", findings},
             {"transformations", transformations},
             {"ttl_seconds", session->ttl_seconds}};
    if (!backend_error.empty()) {
        out["backend_error"] = {{"kind", backend_error_kind}, {"detail", backend_error}};
    }
    {
        std::lock_guard lock(store_mutex_);
        purge_expired_locked();
        sessions_[session->id] = session;
    }
    return reply(200, out);
}

void Service::purge_expired_locked()
{
    double now = clock_();
    for (auto it = sessions_.begin(); it != sessions_.end();) {
        if (now - it->second->created_at >= it->second->ttl_seconds) {
            it = sessions_.erase(it);
        } else {
            ++it;
        }
    }
}

std::size_t Service::session_count()
{
    std::lock_guard lock(store_mutex_);
    purge_expired_locked();
    return sessions_.size();
}

std::shared_ptr<ReviewSession> Service::find_session(const std::string& id)
{
    std::lock_guard lock(store_mutex_);
    purge_expired_locked();
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

HttpResponse Service::get_session(const std::string& id)
{
    auto s = find_session(id);
    if (!s) {
        return error_reply(404, "unknown or expired session");
    }
    std::lock_guard lock(s->mutex);
    json patchsets = json::array();
    for (const auto& [asset, p] : s->patchsets) {
        patchsets.push_back(patchset_json(p));
    }
    return reply(200, {{"session_id", s->id},
                       {"mode", s->snippet_mode ? "snippets" : "bundle"},
                       {"backend", s->backend},
                       {"fallback_used", s->fallback_used},
                       {"finalized", s->finalized},
                       {"expires_in_seconds", std::max(0.0, s->created_at + s->ttl_seconds - clock_())},
                       {"savings", savings_json(s->savings, cfg_.pipeline.energy)},
                       {"patchsets", patchsets}});
}

HttpResponse Service::apply(const std::string& id, const std::string& body)
{
    auto s = find_session(id);
    if (!s) {
        return error_reply(404, "unknown or expired session");
    }
    json req = parse_body(body);
    json decisions = req.value("decisions", json::object());
    if (!decisions.is_object()) {
        throw RequestError(400, "decisions must be an object");
    }
    bool flat = !decisions.empty() && std::all_of(decisions.begin(), decisions.end(), [](const json& v) { return v.is_string(); });
    if (flat) {
        if (s->patchsets.size() != 1) {
            throw RequestError(400, "flat decisions need a session with exactly one patched asset");
        }
        decisions = json{{s->patchsets.begin()->first, decisions}};
    }
    for (const auto& [asset, d] : decisions.items()) {
        if (!s->patchsets.count(asset)) {
            throw RequestError(400, "no patch for asset " + asset);
        }
        if (!d.is_object()) {
            throw RequestError(400, "decisions for " + asset + " must map hunk ids to accepted or rejected");
        }
    }
    json digests = req.value("digests", json::object());

    std::lock_guard lock(s->mutex);
    json missing = json::array();
    std::map<std::string, std::string> result = s->original;
    std::size_t accepted = 0;
    for (auto& [asset, stored] : s->patchsets) {
        PatchSet p = stored;
        if (digests.contains(asset) && digests[asset] != p.original_digest) {
            return error_reply(409, "patch digest mismatch for " + asset);
        }
        json d = decisions.contains(asset) ? decisions[asset] : json::object();
        for (const auto& [hid, state] : d.items()) {
            std::size_t n = 0;
            try {
                n = std::stoul(hid);
            } catch (const std::exception&) {
                throw RequestError(400, "hunk ids are positive integers: " + hid);
            }
            if (!state.is_string() || (state != "accepted" && state != "rejected")) {
                throw RequestError(400, "decision for " + asset + " hunk " + hid + " must be accepted or rejected");
            }
            try {
                p.set_state(n, hunk_state_from_string(state.get<std::string>()));
            } catch (const DiffError&) {
                throw RequestError(400, "no hunk " + hid + " in " + asset);
            }
        }
        for (auto& h : p.hunks) {
            if (h.state == HunkState::pending) {
                h.state = HunkState::rejected;
                missing.push_back({{"asset", asset}, {"hunk", h.id}});
            }
            accepted += h.state == HunkState::accepted;
        }
        try {
            result[asset] = apply_selected(s->original.at(asset), p).text;
        } catch (const DiffError& e) {
            return error_reply(409, e.what(), {{"hunk", e.hunk_id()}});
        }
        stored = p;
    }
    s->finalized = true;
    json assets = json::array();
    for (const auto& [asset, text] : result) {
        if (text.empty() && s->original.at(asset).empty()) {
            continue;
        }
        auto cls = s->classes.count(asset) ? s->classes.at(asset) : AssetClass::other;
        assets.push_back({{"url", asset}, {"class", std::string(to_string(cls))}, {"text", text}});
    }
    return reply(200, {{"session_id", s->id},
                       {"finalized", true},
                       {"accepted_hunks", accepted},
                       {"missing_decisions", missing},
                       {"assets", assets}});
}

HttpResponse Service::estimate(const std::string& body)
{
    json req = parse_body(body);
    EnergyEstimate e;
    if (req.contains("assets")) {
        auto uploads = read_assets(req);
        bool bundle_mode = std::any_of(uploads.begin(), uploads.end(),
                                       [](const UploadedAsset& u) { return class_of(u) == AssetClass::html; });
        if (bundle_mode) {
            std::map<std::string, std::string> files;
            std::map<std::string, std::uint64_t> declared;
            for (const auto& u : uploads) {
                if (u.payload) {
                    files[u.id] = *u.payload;
                } else {
                    declared[u.id] = u.declared_bytes;
                }
            }
            e = bundle_energy(bundle_from_files(files, {}, declared), cfg_.pipeline.energy, cfg_.pipeline.analyzer.dom_op_patterns);
        } else {
            std::vector<Snippet> snips;
            for (const auto& u : uploads) {
                if (!u.payload) {
                    throw RequestError(400, "snippet " + u.id + " needs text");
                }
                snips.push_back({u.id, class_of(u), *u.payload});
            }
            e = snippets_energy(snips, cfg_.pipeline);
        }
    } else if (req.contains("bytes")) {
        try {
            e = estimate_energy(req["bytes"].get<std::uint64_t>(), req.value("dom_ops", std::size_t{0}), cfg_.pipeline.energy);
        } catch (const json::exception&) {
            throw RequestError(400, "bytes and dom_ops must be non-negative integers");
        }
    } else {
        throw RequestError(400, "estimate needs assets or bytes");
    }
    json out = estimate_json(e);
    out["carbon_g"] = estimate_carbon(e, cfg_.pipeline.energy);
    return reply(200, out);
}

HttpResponse Service::diff(const std::string& body)
{
    json req = parse_body(body);
    if (!req.contains("a") || !req.contains("b") || !req["a"].is_string() || !req["b"].is_string()) {
        throw RequestError(400, "diff needs string fields a and b");
    }
    std::size_t context = 3;
    std::string asset;
    try {
        context = req.value("context", std::size_t{3});
        asset = req.value("asset_id", std::string());
    } catch (const json::exception&) {
        throw RequestError(400, "context must be a non-negative integer");
    }
    PatchSet p = unified_diff(req["a"].get<std::string>(), req["b"].get<std::string>(), context, asset);
    json out = patchset_json(p);
    out["removed_lines"] = p.removed_lines();
    out["inserted_lines"] = p.inserted_lines();
    return reply(200, out);
}

struct HttpServer::Impl {
    explicit Impl(Service& s) : service(s) {}
    Service& service;
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service))
{
    auto& svr = impl_->server;
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        HttpResponse r = impl_->service.handle(req.method, req.path, req.body);
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    svr.Get(".*", handler);
    svr.Post(".*", handler);
    svr.Put(".*", handler);
    svr.Delete(".*", handler);
    svr.set_payload_max_length(service.config().server.max_body_bytes);
    std::size_t threads = service.config().server.threads;
    svr.new_task_queue = [threads] { return new httplib::ThreadPool(threads); };
}

HttpServer::~HttpServer()
{
    stop();
}

int HttpServer::start(const std::string& host, int port)
{
    auto& svr = impl_->server;
    int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
    impl_->thread = std::thread([&svr] { svr.listen_after_bind(); });
    svr.wait_until_ready();
    return bound;
}

void HttpServer::run(const std::string& host, int port)
{
    if (!impl_->server.listen(host, port)) {
        throw IoError("cannot listen on " + host + ":" + std::to_string(port));
    }
}

void HttpServer::stop()
{
    if (impl_->server.is_running()) {
        impl_->server.stop();
    }
    if (impl_->thread.joinable()) {
        impl_->thread.join();
    }
}

} // namespace wattless
