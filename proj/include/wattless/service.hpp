#pragma once

#include "wattless/config.hpp"
#include "wattless/diffpatch.hpp"
#include "wattless/optimizer.hpp"

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace wattless {

/// Seconds on an arbitrary monotonic axis; injectable for expiry tests.
using Clock = std::function<double()>;
double steady_clock_seconds();

class BackendFailure : public Error {
public:
    enum class Kind { transport, timeout, status, malformed, validation };
    BackendFailure(Kind kind, std::string message);
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};
std::string_view to_string(BackendFailure::Kind k);

/// Distinct remote (non-local) reference targets of a text asset.
std::vector<std::string> external_references(const Snippet& s);

/// Safety gate for backend output: the new text parses in its class and
/// names no remote reference the old text lacked. Returns the rejection
/// reason, or nullopt when the output is acceptable.
std::optional<std::string> validate_backend_output(const Snippet& before, const Snippet& after);

/// POST {endpoint} {assets:[{class,url,text}], config_hints} expecting
/// {assets:[{url,text}]}. Assets absent from the reply are unchanged.
/// Throws BackendFailure; the result is already validated.
std::vector<Snippet> call_remote_backend(const std::vector<Snippet>& assets, const BackendConfig& cfg,
                                         const std::string& config_hints_json = "{}");

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct ReviewSession {
    std::string id;
    bool snippet_mode = false;
    std::string entry;
    /// Text assets before and after optimization, "" when absent on one side.
    std::map<std::string, std::string> original;
    std::map<std::string, std::string> optimized;
    std::map<std::string, AssetClass> classes;
    std::map<std::string, PatchSet> patchsets; // assets whose text changed
    SavingsReport savings;
    std::string backend;
    bool fallback_used = false;
    double created_at = 0;
    double ttl_seconds = 3600;
    bool finalized = false;
    std::mutex mutex; // held for apply
};

/// Request handling independent of any transport.
class Service {
public:
    explicit Service(AppConfig cfg, Clock clock = steady_clock_seconds);

    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body);

    const AppConfig& config() const { return cfg_; }
    /// Live sessions after dropping expired ones.
    std::size_t session_count();
    /// Test hook: replaces the remote call.
    void set_remote_backend(std::function<std::vector<Snippet>(const std::vector<Snippet>&)> fn);

private:
    HttpResponse optimize(const std::string& body);
    HttpResponse apply(const std::string& id, const std::string& body);
    HttpResponse get_session(const std::string& id);
    HttpResponse estimate(const std::string& body);
    HttpResponse diff(const std::string& body);
    HttpResponse health();

    std::shared_ptr<ReviewSession> find_session(const std::string& id);
    void purge_expired_locked();
    std::vector<Snippet> remote(const std::vector<Snippet>& assets);

    AppConfig cfg_;
    Clock clock_;
    std::mutex store_mutex_;
    std::map<std::string, std::shared_ptr<ReviewSession>> sessions_;
    std::function<std::vector<Snippet>(const std::vector<Snippet>&)> remote_override_;
};

/// httplib transport around a Service.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds to host:port (port 0 picks a free port) and serves on a
    /// background thread. Returns the bound port.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace wattless
