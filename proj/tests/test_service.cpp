#include "support/service_support.hpp"

#include "wattless/util.hpp"

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <regex>
#include <thread>

using namespace wattless;
using namespace wattless::testing;
using nlohmann::json;
namespace fs = std::filesystem;


TEST(ServiceRules, OptimizeOverHttpMatchesLibraryOnEveryFixture)
{
    AppConfig cfg;
    Service service(cfg);
    HttpServer server(service);
    int port = server.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    for (const auto& name : fixture_names()) {
        SCOPED_TRACE(name);
        auto res = client.Post("/v1/optimize", fixture_request(name).dump(), "application/json");
        ASSERT_TRUE(res);
        ASSERT_EQ(res->status, 200) << res->body;
        json body = json::parse(res->body);
        Expected e = library_result(name, cfg);
        EXPECT_EQ(patch_texts(body), rendered(e.patches));
        EXPECT_EQ(body["savings"]["before_j"].get<double>(), e.savings.before.total_joules);
        EXPECT_EQ(body["savings"]["after_j"].get<double>(), e.savings.after.total_joules);
        EXPECT_EQ(body["savings"]["delta_j"].get<double>(), e.savings.delta_joules);
        EXPECT_EQ(body["savings"]["delta_pct"].get<double>(), e.savings.delta_percent);
        EXPECT_EQ(body["mode"], "bundle");
        EXPECT_EQ(body["backend"], "rules");
        EXPECT_FALSE(body["fallback_used"].get<bool>());
    }
    server.stop();
}

TEST(ServiceRules, PatchsetDigestsAndHunksMatchRenderedPatch)
{
    Service service(AppConfig{});
    json body = post(service, "/v1/optimize", fixture_request("basic"));
    ASSERT_FALSE(body["patchsets"].empty());
    for (const auto& p : body["patchsets"]) {
        PatchSet parsed = parse_patch(p["patch"].get<std::string>());
        EXPECT_EQ(parsed.original_digest, p["original_digest"]);
        ASSERT_EQ(parsed.hunks.size(), p["hunks"].size());
        for (std::size_t i = 0; i < parsed.hunks.size(); ++i) {
            EXPECT_EQ(p["hunks"][i]["id"], parsed.hunks[i].id);
            EXPECT_EQ(p["hunks"][i]["state"], "pending");
        }
    }
}

TEST(ServiceApply, AcceptAllRejectAllAndMixedMatchLibrary)
{
    AppConfig cfg;
    Service service(cfg);
    Expected e = library_result("basic", cfg);
    ASSERT_FALSE(e.patches.empty());

    auto decide = [&](auto pick) {
        json decisions = json::object();
        for (const auto& [asset, p] : e.patches) {
            for (const auto& h : p.hunks) {
                decisions[asset][std::to_string(h.id)] = pick(h.id) ? "accepted" : "rejected";
            }
        }
        return json{{"decisions", decisions}};
    };
    auto expected_for = [&](auto pick) {
        auto out = e.original;
        for (const auto& [asset, p] : e.patches) {
            PatchSet q = p;
            for (auto& h : q.hunks) {
                h.state = pick(h.id) ? HunkState::accepted : HunkState::rejected;
            }
            out[asset] = apply_selected(e.original.count(asset) ? e.original.at(asset) : "", q).text;
        }
        return nonempty(out);
    };

    auto all = [](std::size_t) { return true; };
    auto none = [](std::size_t) { return false; };
    auto odd = [](std::size_t id) { return id % 2 == 1; };
    for (int which = 0; which < 3; ++which) {
        SCOPED_TRACE(which);
        std::string sid = post(service, "/v1/optimize", fixture_request("basic"))["session_id"];
        json req = which == 0 ? decide(all) : which == 1 ? decide(none) : decide(odd);
        json res = post(service, "/v1/sessions/" + sid + "/apply", req);
        ASSERT_TRUE(res.contains("assets")) << res.dump();
        auto got = output_assets(res);
        if (which == 0) {
            EXPECT_EQ(got, nonempty(e.optimized));
        } else if (which == 1) {
            EXPECT_EQ(got, nonempty(e.original));
        } else {
            EXPECT_EQ(got, expected_for(odd));
        }
        EXPECT_TRUE(res["missing_decisions"].empty());
    }
}

TEST(ServiceApply, IdempotentAndFinalizes)
{
    Service service(AppConfig{});
    json opt = post(service, "/v1/optimize", fixture_request("scripts"));
    std::string sid = opt["session_id"];
    json req = {{"decisions", json::object()}};
    for (const auto& p : opt["patchsets"]) {
        for (const auto& h : p["hunks"]) {
            req["decisions"][p["asset"].get<std::string>()][std::to_string(h["id"].get<int>())] = "accepted";
        }
    }
    json first = post(service, "/v1/sessions/" + sid + "/apply", req);
    json second = post(service, "/v1/sessions/" + sid + "/apply", req);
    EXPECT_EQ(first, second);
    EXPECT_TRUE(parse(service.handle("GET", "/v1/sessions/" + sid, ""))["finalized"].get<bool>());
}

TEST(ServiceApply, MissingDecisionsAreRejectedAndFlagged)
{
    AppConfig cfg;
    Service service(cfg);
    std::string sid = post(service, "/v1/optimize", fixture_request("basic"))["session_id"];
    json res = post(service, "/v1/sessions/" + sid + "/apply", json{{"decisions", json::object()}});
    Expected e = library_result("basic", cfg);
    EXPECT_EQ(output_assets(res), nonempty(e.original));
    std::size_t hunks = 0;
    for (const auto& [k, p] : e.patches) {
        hunks += p.hunks.size();
    }
    EXPECT_EQ(res["missing_decisions"].size(), hunks);
    EXPECT_EQ(res["accepted_hunks"], 0);
}

TEST(ServiceApply, FlatDecisionsForSingleAsset)
{
    Service service(AppConfig{});
    json snippet = {{"assets", json::array({{{"url", "a.css"}, {"text", "/* note */\na { color: red; }\n"}}})}};
    json opt = post(service, "/v1/optimize", snippet);
    ASSERT_EQ(opt["patchsets"].size(), 1u);
    json res = post(service, "/v1/sessions/" + opt["session_id"].get<std::string>() + "/apply",
                    json{{"decisions", {{"1", "accepted"}}}});
    EXPECT_EQ(output_assets(res).at("a.css"), "a{color:red}");
}

TEST(ServiceApply, ErrorStatuses)
{
    double now = 1000;
    AppConfig cfg;
    cfg.server.session_ttl_seconds = 60;
    Service service(cfg, [&now] { return now; });
    json opt = post(service, "/v1/optimize", fixture_request("basic"));
    std::string sid = opt["session_id"];
    std::string asset = opt["patchsets"][0]["asset"];

    json bad_digest = {{"decisions", json::object()}, {"digests", {{asset, std::string(64, '0')}}}};
    EXPECT_EQ(service.handle("POST", "/v1/sessions/" + sid + "/apply", bad_digest.dump()).status, 409);
    json good_digest = {{"decisions", json::object()}, {"digests", {{asset, opt["patchsets"][0]["original_digest"]}}}};
    EXPECT_EQ(service.handle("POST", "/v1/sessions/" + sid + "/apply", good_digest.dump()).status, 200);

    EXPECT_EQ(service.handle("POST", "/v1/sessions/" + sid + "/apply", R"({"decisions":{"nope.css":{}}})").status, 400);
    EXPECT_EQ(service.handle("POST", "/v1/sessions/" + sid + "/apply",
                             json{{"decisions", {{asset, {{"999", "accepted"}}}}}}.dump()).status, 400);
    EXPECT_EQ(service.handle("POST", "/v1/sessions/" + sid + "/apply",
                             json{{"decisions", {{asset, {{"1", "maybe"}}}}}}.dump()).status, 400);
    EXPECT_EQ(service.handle("POST", "/v1/sessions/" + sid + "/apply", "not json").status, 400);
    EXPECT_EQ(service.handle("POST", "/v1/sessions/deadbeef/apply", "{}").status, 404);
    EXPECT_EQ(service.handle("GET", "/v1/sessions/deadbeef", "").status, 404);

    EXPECT_EQ(service.session_count(), 1u);
    now += 59;
    EXPECT_EQ(service.handle("GET", "/v1/sessions/" + sid, "").status, 200);
    now += 1;
    EXPECT_EQ(service.handle("GET", "/v1/sessions/" + sid, "").status, 404);
    EXPECT_EQ(service.handle("POST", "/v1/sessions/" + sid + "/apply", "{}").status, 404);
    EXPECT_EQ(service.session_count(), 0u);
}

TEST(ServiceApply, ConcurrentAppliesOnOneSessionAreConsistent)
{
    AppConfig cfg;
    Service service(cfg);
    json opt = post(service, "/v1/optimize", fixture_request("basic"));
    std::string sid = opt["session_id"];
    Expected e = library_result("basic", cfg);
    std::atomic<int> mismatches{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            bool accept = t % 2 == 0;
            json req = {{"decisions", json::object()}};
            for (const auto& [asset, p] : e.patches) {
                for (const auto& h : p.hunks) {
                    req["decisions"][asset][std::to_string(h.id)] = accept ? "accepted" : "rejected";
                }
            }
            for (int i = 0; i < 5; ++i) {
                json res = post(service, "/v1/sessions/" + sid + "/apply", req);
                if (output_assets(res) != nonempty(accept ? e.optimized : e.original)) {
                    ++mismatches;
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    EXPECT_EQ(mismatches.load(), 0);
}

TEST(ServiceSnippets, OneCommentGivesOneHunkAndPositiveSavings)
{
    Service service(AppConfig{});
    json req = {{"assets", json::array({{{"url", "site.css"}, {"class", "css"},
                                         {"text", "a {\n  color: red;\n}\n/* a long explanatory comment */\n"}}})}};
    json res = post(service, "/v1/optimize", req);
    EXPECT_EQ(res["mode"], "snippets");
    ASSERT_EQ(res["patchsets"].size(), 1u);
    EXPECT_EQ(res["patchsets"][0]["hunks"].size(), 1u);
    EXPECT_GT(res["savings"]["delta_j"].get<double>(), 0.0);
}

TEST(ServiceSnippets, UnchangedSnippetHasNoPatch)
{
    Service service(AppConfig{});
    json res = post(service, "/v1/optimize", json{{"assets", json::array({{{"url", "x.txt"}, {"text", "hello\n"}}})}});
    EXPECT_TRUE(res["patchsets"].empty());
    EXPECT_EQ(res["savings"]["delta_j"].get<double>(), 0.0);
}

TEST(ServiceRequests, ValidationAndLimits)
{
    AppConfig cfg;
    cfg.server.max_body_bytes = 1024;
    Service service(cfg);
    EXPECT_EQ(service.handle("POST", "/v1/optimize", std::string(2048, ' ')).status, 413);
    EXPECT_EQ(service.handle("POST", "/v1/optimize", "{}").status, 400);
    EXPECT_EQ(service.handle("POST", "/v1/optimize", R"({"assets":[]})").status, 400);
    for (std::string url : {"../x.css", "https://cdn.example/x.css", "a\\b.css", "a//b.css"}) {
        SCOPED_TRACE(url);
        json req = {{"assets", json::array({{{"url", url}, {"text", "a{}"}}})}};
        EXPECT_EQ(service.handle("POST", "/v1/optimize", req.dump()).status, 400);
    }
    json dup = {{"assets", json::array({{{"url", "a.css"}, {"text", ""}}, {{"url", "./a.css"}, {"text", ""}}})}};
    EXPECT_EQ(service.handle("POST", "/v1/optimize", dup.dump()).status, 400);
    json two_forms = {{"assets", json::array({{{"url", "a.css"}, {"text", ""}, {"bytes", 3}}})}};
    EXPECT_EQ(service.handle("POST", "/v1/optimize", two_forms.dump()).status, 400);
    json bad_b64 = {{"assets", json::array({{{"url", "a.png"}, {"base64", "!!!"}}})}};
    EXPECT_EQ(service.handle("POST", "/v1/optimize", bad_b64.dump()).status, 400);
    EXPECT_EQ(service.handle("GET", "/v1/optimize", "").status, 405);
    EXPECT_EQ(service.handle("GET", "/v1/nothing", "").status, 404);
    json health = parse(service.handle("GET", "/v1/health", ""));
    EXPECT_EQ(health["status"], "ok");
}

TEST(ServiceRequests, OversizeBodyRejectedOverHttp)
{
    AppConfig cfg;
    cfg.server.max_body_bytes = 4096;
    Service service(cfg);
    HttpServer server(service);
    int port = server.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/v1/optimize", std::string(8192, ' '), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 413);
}

TEST(ServiceEstimate, BytesAssetsAndDiff)
{
    Service service(AppConfig{});
    json e = post(service, "/v1/estimate", json{{"bytes", 1000000000ull}});
    EXPECT_DOUBLE_EQ(e["total_j"].get<double>(), 2.916e6);
    json b = post(service, "/v1/estimate", fixture_request("basic"));
    EXPECT_EQ(b["total_j"].get<double>(), bundle_energy(load_fixture("basic")).total_joules);
    EXPECT_EQ(service.handle("POST", "/v1/estimate", "{}").status, 400);

    json d = post(service, "/v1/diff", json{{"a", "x\ny\n"}, {"b", "x\nz\n"}, {"asset_id", "f.txt"}});
    EXPECT_EQ(d["patch"], render_patch(unified_diff("x\ny\n", "x\nz\n", 3, "f.txt")));
    EXPECT_EQ(d["removed_lines"], 1);
    EXPECT_EQ(d["inserted_lines"], 1);
    EXPECT_EQ(service.handle("POST", "/v1/diff", R"({"a":1})").status, 400);
}

TEST(ServiceRemote, EchoBackendYieldsNoSavings)
{
    StubBackend stub(editing_stub([](const std::string&, const std::string& t) { return t; }));
    Service service(remote_config(stub.endpoint()));
    json res = post(service, "/v1/optimize", fixture_request("basic"));
    EXPECT_EQ(res["backend"], "remote");
    EXPECT_FALSE(res["fallback_used"].get<bool>());
    EXPECT_TRUE(res["patchsets"].empty());
    EXPECT_EQ(res["savings"]["delta_j"].get<double>(), 0.0);
}

TEST(ServiceRemote, CommentStrippingBackendSavesEnergy)
{
    StubBackend stub(editing_stub([](const std::string& cls, const std::string& t) {
        return cls == "css" ? std::regex_replace(t, std::regex(R"(/\*[^*]*\*+(?:[^/*][^*]*\*+)*/)"), "") : t;
    }));
    Service service(remote_config(stub.endpoint()));
    json req = {{"assets", json::array({{{"url", "s.css"}, {"text", "/* header comment */\na { color: red; }\n"}}})}};
    json res = post(service, "/v1/optimize", req);
    EXPECT_FALSE(res["fallback_used"].get<bool>());
    EXPECT_GT(res["savings"]["delta_j"].get<double>(), 0.0);
    ASSERT_EQ(res["patchsets"].size(), 1u);
    json applied = post(service, "/v1/sessions/" + res["session_id"].get<std::string>() + "/apply",
                        json{{"decisions", {{"1", "accepted"}}}});
    EXPECT_EQ(output_assets(applied).at("s.css"), "\na { color: red; }\n");
}

TEST(ServiceRemote, GateRejectsAddedExternalScript)
{
    auto evil = editing_stub([](const std::string& cls, const std::string& t) {
        if (cls != "html") {
            return t;
        }
        std::string out = t;
        out.insert(out.find("</head>"), "<script src=\"https://evil.example/x.js\"></script>");
        return out;
    });
    StubBackend stub(evil);
    AppConfig rules;
    Expected e = library_result("basic", rules);

    Service with_fallback(remote_config(stub.endpoint(), true));
    json res = post(with_fallback, "/v1/optimize", fixture_request("basic"));
    EXPECT_TRUE(res["fallback_used"].get<bool>());
    EXPECT_EQ(res["backend_error"]["kind"], "validation");
    EXPECT_EQ(patch_texts(res), rendered(e.patches));
    EXPECT_EQ(res["savings"]["delta_j"].get<double>(), e.savings.delta_joules);

    Service strict(remote_config(stub.endpoint(), false));
    HttpResponse r = strict.handle("POST", "/v1/optimize", fixture_request("basic").dump());
    EXPECT_EQ(r.status, 502);
    EXPECT_EQ(parse(r)["kind"], "validation");
    EXPECT_EQ(strict.session_count(), 0u);
}

TEST(ServiceRemote, UnreachableBackendFallsBackToRules)
{
    // Bound then closed without listen, so connections are refused.
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    int port = ntohs(addr.sin_port);
    ::close(fd);
    AppConfig cfg = remote_config("http://127.0.0.1:" + std::to_string(port) + "/optimize");
    Service service(cfg);
    json res = post(service, "/v1/optimize", fixture_request("basic"));
    EXPECT_TRUE(res["fallback_used"].get<bool>());
    EXPECT_EQ(res["backend_error"]["kind"], "transport");
    EXPECT_EQ(patch_texts(res), rendered(library_result("basic", AppConfig{}).patches));
}

TEST(ServiceRemote, FailureKindsAreDistinct)
{
    std::vector<Snippet> assets = {{"a.css", AssetClass::css, "a { color: red; }"}};
    auto kind_of = [&](const BackendConfig& cfg) {
        try {
            call_remote_backend(assets, cfg);
        } catch (const BackendFailure& f) {
            return std::string(to_string(f.kind()));
        }
        return std::string("ok");
    };
    StubBackend slow([](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1500));
        res.set_content(R"({"assets":[]})", "application/json");
    });
    StubBackend failing([](const httplib::Request&, httplib::Response& res) {
        res.status = 503;
        res.set_content("busy", "text/plain");
    });
    StubBackend garbled([](const httplib::Request&, httplib::Response& res) { res.set_content("nope", "text/plain"); });
    StubBackend stranger([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"assets":[{"url":"other.css","text":""}]})", "application/json");
    });
    StubBackend broken([](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"assets":[{"url":"a.css","text":"a { content: \"open"}]})", "application/json");
    });

    BackendConfig cfg = remote_config("").backend;
    cfg.timeout_seconds = 0.3;
    cfg.remote_endpoint = slow.endpoint();
    EXPECT_EQ(kind_of(cfg), "timeout");
    cfg.timeout_seconds = 5;
    cfg.remote_endpoint = failing.endpoint();
    EXPECT_EQ(kind_of(cfg), "status");
    cfg.remote_endpoint = garbled.endpoint();
    EXPECT_EQ(kind_of(cfg), "malformed");
    cfg.remote_endpoint = stranger.endpoint();
    EXPECT_EQ(kind_of(cfg), "malformed");
    cfg.remote_endpoint = broken.endpoint();
    EXPECT_EQ(kind_of(cfg), "validation");
}

TEST(ServiceRemote, BearerTokenComesFromEnvironment)
{
    std::string seen;
    std::mutex m;
    StubBackend stub([&](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(m);
        seen = req.get_header_value("Authorization");
        res.set_content(R"({"assets":[]})", "application/json");
    });
    BackendConfig cfg = remote_config(stub.endpoint()).backend;
    cfg.auth_token_env_var = "WATTLESS_TEST_BACKEND_TOKEN";
    ::unsetenv("WATTLESS_TEST_BACKEND_TOKEN");
    try {
        call_remote_backend({}, cfg);
        FAIL() << "expected a missing-credential failure";
    } catch (const BackendFailure& f) {
        EXPECT_EQ(f.kind(), BackendFailure::Kind::transport);
    }
    ::setenv("WATTLESS_TEST_BACKEND_TOKEN", "s3cret", 1);
    call_remote_backend({}, cfg);
    ::unsetenv("WATTLESS_TEST_BACKEND_TOKEN");
    std::lock_guard lock(m);
    EXPECT_EQ(seen, "Bearer s3cret");
}

TEST(ServiceRemote, OverrideHookIsGatedToo)
{
    Service service(remote_config("http://127.0.0.1:9/unused", true));
    service.set_remote_backend([](const std::vector<Snippet>& in) {
        std::vector<Snippet> out = in;
        for (auto& s : out) {
            if (s.cls == AssetClass::css) {
                s.text += "\n@import url(https://evil.example/x.css);";
            }
        }
        return out;
    });
    json req = {{"assets", json::array({{{"url", "s.css"}, {"text", "a { color: red; }\n"}}})}};
    json res = post(service, "/v1/optimize", req);
    EXPECT_TRUE(res["fallback_used"].get<bool>());
    EXPECT_EQ(res["backend_error"]["kind"], "validation");
}

TEST(ValidationGate, PerClassChecks)
{
    auto check = [](AssetClass c, const std::string& a, const std::string& b) {
        return validate_backend_output({"x", c, a}, {"x", c, b});
    };
    EXPECT_FALSE(check(AssetClass::css, "a { color: red; }", "a{color:red}"));
    EXPECT_TRUE(check(AssetClass::css, "a { color: red; }", "a { color: red; } }}}"));
    EXPECT_FALSE(check(AssetClass::script, "var a = 1;", "var a=1;"));
    EXPECT_TRUE(check(AssetClass::script, "var a = 1;", "var a = '1;"));
    EXPECT_TRUE(check(AssetClass::svg, "<svg></svg>", "<svg><g></svg>"));
    EXPECT_TRUE(check(AssetClass::html, "<html><body></body></html>",
                      "<html><body><img src=\"http://t.example/p.gif\"></body></html>"));
    EXPECT_FALSE(check(AssetClass::html, "<html><body><img src=\"http://t.example/p.gif\"></body></html>",
                       "<html><body><img src=\"http://t.example/p.gif\" loading=\"lazy\"></body></html>"));
    EXPECT_FALSE(check(AssetClass::html, "<html><body></body></html>", "<html><body><img src=\"local.png\"></body></html>"));
    EXPECT_EQ(external_references({"i.html", AssetClass::html,
                                    "<script src=\"https://a.example/x.js\"></script><img src=\"y.png\">"}),
              std::vector<std::string>{"https://a.example/x.js"});
}

TEST(ServiceHttp, ReviewFlowRejectingOneOfTwoHunks)
{
    std::string html = "<html>\n<head><title>t</title></head>\n<body>\n";
    for (int i = 0; i < 3; ++i) {
        html += "<img src=\"a" + std::to_string(i) + ".png\">\n";
    }
    html += "<img src=\"b1.png\">\n";
    for (int i = 0; i < 10; ++i) {
        html += "<p>paragraph " + std::to_string(i) + "</p>\n";
    }
    html += "<img src=\"b2.png\">\n</body>\n</html>\n";
    json assets = json::array({{{"url", "index.html"}, {"text", html}}});
    for (const char* img : {"a0.png", "a1.png", "a2.png", "b1.png", "b2.png"}) {
        assets.push_back({{"url", img}, {"bytes", 4000}});
    }

    AppConfig cfg;
    cfg.pipeline.enabled = {TransformKind::lazy_image};
    Service service(cfg);
    HttpServer server(service);
    int port = server.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    auto res = client.Post("/v1/optimize", json{{"assets", assets}}.dump(), "application/json");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200) << res->body;
    json opt = json::parse(res->body);
    ASSERT_EQ(opt["patchsets"].size(), 1u);
    PatchSet p = parse_patch(opt["patchsets"][0]["patch"].get<std::string>());
    ASSERT_EQ(p.hunks.size(), 2u);

    std::string sid = opt["session_id"];
    auto applied = client.Post("/v1/sessions/" + sid + "/apply",
                               json{{"decisions", {{"1", "rejected"}, {"2", "accepted"}}}}.dump(), "application/json");
    ASSERT_TRUE(applied);
    ASSERT_EQ(applied->status, 200) << applied->body;
    p.set_state(1, HunkState::rejected);
    p.set_state(2, HunkState::accepted);
    std::string got = output_assets(json::parse(applied->body)).at("index.html");
    EXPECT_EQ(got, apply_selected(html, p).text);
    EXPECT_EQ(got.find("b1.png\" loading"), std::string::npos);
    EXPECT_NE(got.find("b2.png\" loading=\"lazy\""), std::string::npos);
    auto session = client.Get("/v1/sessions/" + sid);
    ASSERT_TRUE(session);
    EXPECT_EQ(json::parse(session->body)["savings"], opt["savings"]);
    server.stop();
}
