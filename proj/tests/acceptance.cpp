// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.

#include "support/diff_properties.hpp"
#include "support/fixtures.hpp"
#include "support/safety.hpp"
#include "support/service_support.hpp"
#include "support/temp_dir.hpp"
#include "support/welch_reference.hpp"

#include "wattless/bench.hpp"
#include "wattless/energy.hpp"
#include "wattless/stats.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

using namespace wattless;
using namespace wattless::testing;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

struct CommandResult {
    int status = -1;
    std::string out;
};

CommandResult run(const std::string& args)
{
    std::string cmd = std::string(WATTLESS_CLI) + " " + args + " 2>&1";
    CommandResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) {
        return r;
    }
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.out.append(buf.data(), n);
    }
    int st = ::pclose(pipe);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string fmt(double v, int digits = 2)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    os << v;
    return os.str();
}

bool near(double a, double b, double tol)
{
    return std::fabs(a - b) <= tol;
}

int failures = 0;

void report(const std::string& name, const Outcome& o, const std::string& summary)
{
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << summary;
    if (!o.detail.empty()) {
        std::cout << " [" << o.detail << "]";
    }
    std::cout << std::endl;
}

/// Generates the shipped corpus and benchmarks it through the CLI.
json corpus_report(Outcome& o, double& seconds)
{
    static TempDir dir;
    std::string corpus = (dir.path() / "corpus").string();
    auto t0 = std::chrono::steady_clock::now();
    auto gen = run("gen-corpus " + corpus + " --pages 30 --seed 1");
    auto bench = run("bench " + corpus + " --json");
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.require(gen.status == 0, "gen-corpus exited " + std::to_string(gen.status));
    o.require(bench.status == 0, "bench exited " + std::to_string(bench.status));
    json j = json::parse(bench.out, nullptr, false);
    if (j.is_discarded()) {
        o.require(false, "bench output is not JSON");
        return json::object();
    }
    return j;
}

void benchmark_criteria()
{
    Outcome o;
    double seconds = 0;
    json j = corpus_report(o, seconds);
    json s = j.value("summary", json::object());
    std::size_t pages = j.value("pages", json::array()).size();
    std::size_t eligible = 0;
    for (const auto& p : j.value("pages", json::array())) {
        eligible += p.value("eligible", false);
    }
    double mean = s.value("mean_savings_pct", 0.0);
    double improved = s.value("frac_improved", 0.0);
    double above = s.value("frac_above_10pct", 0.0);
    o.require(pages == 30 && eligible == 30, std::to_string(eligible) + "/" + std::to_string(pages) + " pages eligible");
    o.require(j.value("failures", json::array()).empty(), "some bundles failed");
    o.require(mean >= 10, "mean below 10%");
    o.require(improved >= 0.9, "fewer than 90% improved");
    o.require(above >= 0.6, "fewer than 60% above 10%");
    o.require(seconds < 60, "runtime not under 60 s");
    std::string ci = s.contains("ci95") && s["ci95"].is_array()
                       ? "[" + fmt(s["ci95"][0].get<double>()) + ", " + fmt(s["ci95"][1].get<double>()) + "]"
                       : "n/a";
    report("benchmark", o,
           "n=" + std::to_string(eligible) + " mean=" + fmt(mean) + "% ci95=" + ci + " improved=" + fmt(100 * improved, 1)
               + "% above10=" + fmt(100 * above, 1) + "% runtime=" + fmt(seconds) + "s");

    Outcome m;
    double transfer = s.value("median_transfer_reduction_pct", 0.0);
    double code = s.value("median_code_reduction_pct", 0.0);
    m.require(o.detail.find("exited") == std::string::npos && !s.empty(), "no benchmark report");
    m.require(transfer >= 5, "median transfer reduction below 5%");
    m.require(code >= 5, "median code reduction below 5%");
    report("transfer-and-code-size", m, "median transfer=" + fmt(transfer) + "% median code=" + fmt(code) + "%");
}

void breakeven_criterion()
{
    Outcome o;
    auto range = [&](const std::string& args) {
        auto r = run("breakeven " + args + " --json");
        o.require(r.status == 0, "breakeven " + args + " exited " + std::to_string(r.status));
        json j = json::parse(r.out, nullptr, false);
        if (j.is_discarded()) {
            o.require(false, "breakeven output is not JSON");
            return std::pair{json::array({0.0, 0.0}), json::array({0.0, 0.0})};
        }
        return std::pair{j["frontend_kwh"], j["views"]};
    };
    auto [k11, v11] = range("--overhead-kwh 1.1 --rate 0.13..0.16 --per-view-wh 50");
    auto [k06, v06] = range("--overhead-kwh 0.6 --rate 0.13..0.16 --per-view-wh 50");
    auto [k45, v45] = range("--frontend-kwh 4..5 --per-view-wh 50");
    o.require(near(k11[0].get<double>(), 6.88, 0.01) && near(k11[1].get<double>(), 8.46, 0.01), "1.1 kWh range off");
    o.require(near(k06[0].get<double>(), 3.75, 0.01) && near(k06[1].get<double>(), 4.62, 0.01), "0.6 kWh range off");
    o.require(v45[0].get<double>() == 80000.0 && v45[1].get<double>() == 100000.0, "view range not exact");
    report("breakeven", o,
           "1.1 kWh -> " + fmt(k11[0].get<double>(), 3) + ".." + fmt(k11[1].get<double>(), 3) + " kWh; 0.6 kWh -> "
               + fmt(k06[0].get<double>(), 3) + ".." + fmt(k06[1].get<double>(), 3) + " kWh; 4..5 kWh -> "
               + fmt(v45[0].get<double>(), 0) + ".." + fmt(v45[1].get<double>(), 0) + " views");
}

void diff_criterion()
{
    Outcome o;
    int multi = 0;
    auto rt = roundtrip_violations(1000);
    auto cp = composability_violations(200, multi);
    auto rp = render_parse_violations(200);
    o.require(rt.empty(), std::to_string(rt.size()) + " roundtrip failures" + (rt.empty() ? "" : ", first " + rt[0]));
    o.require(cp.empty(), std::to_string(cp.size()) + " composability failures");
    o.require(multi > 50, "too few multi-hunk cases");
    o.require(rp.empty(), std::to_string(rp.size()) + " render/parse failures");
    report("diff-patch-properties", o,
           "1000 roundtrip pairs, 200 composability cases (" + std::to_string(multi) + " multi-hunk), 200 render/parse cases");
}

void safety_criterion()
{
    Outcome o;
    std::size_t checks = 0;
    for (const auto& name : fixture_names()) {
        SiteBundle b = load_fixture(name);
        for (const auto& [prop, v] :
             std::vector<std::pair<std::string, SafetyViolations>>{{"idempotence", idempotence_violations(b)},
                                                                   {"html-structure", html_structure_violations(b)},
                                                                   {"css-equivalence", css_equivalence_violations(b)},
                                                                   {"script-tokens", script_token_violations(b)},
                                                                   {"removed-rules", removed_rule_violations(b)},
                                                                   {"order", order_violations(b)}}) {
            ++checks;
            for (const auto& msg : v) {
                o.require(false, name + " " + prop + ": " + msg);
            }
        }
    }
    report("optimizer-safety", o,
           std::to_string(fixture_names().size()) + " fixtures x 6 properties (" + std::to_string(checks) + " checks)");
}

void stats_criterion()
{
    Outcome o;
    double worst = 0;
    for (const auto& [x, y] : welch_sample_pairs(50)) {
        auto got = stats::welch_t_test(x, y);
        auto ref = reference_welch(x, y);
        worst = std::max({worst, std::fabs(got.t - static_cast<double>(ref.t)), std::fabs(got.df - static_cast<double>(ref.df)),
                          std::fabs(got.p_two_sided - ref.p)});
    }
    o.require(worst <= 1e-9, "welch deviates by " + std::to_string(worst));
    std::vector<PageResult> rs(3);
    for (std::size_t i = 0; i < 3; ++i) {
        rs[i].eligible = true;
        rs[i].savings_pct = 10 + 2 * static_cast<double>(i);
    }
    auto s = summarize(rs);
    o.require(s.has_ci && near(s.ci95_low, 7.03, 0.01) && near(s.ci95_high, 16.97, 0.01), "CI of {10,12,14} off");
    std::ostringstream dev;
    dev << worst;
    report("statistics", o,
           "50 Welch pairs max deviation " + dev.str() + "; CI {10,12,14}% = (" + fmt(s.ci95_low) + ", " + fmt(s.ci95_high) + ")");
}

void energy_criterion()
{
    Outcome o;
    double e = estimate_energy(1000000000ull, 0).total_joules;
    o.require(e == 2.916e6, "1e9 bytes gave " + std::to_string(e));
    std::mt19937_64 rng(99);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t a = rng() % 100000000;
        std::uint64_t b = rng() % 100000000;
        std::size_t oa = rng() % 1000;
        std::size_t ob = rng() % 1000;
        double sum = estimate_energy(a + b, oa + ob).total_joules;
        double parts = estimate_energy(a, oa).total_joules + estimate_energy(b, ob).total_joules;
        bad += !(std::fabs(sum - parts) <= 1e-9 * std::max(1.0, sum));
        bad += estimate_energy(a + 1, oa).total_joules <= estimate_energy(a, oa).total_joules;
        bad += estimate_energy(a, oa + 1).total_joules <= estimate_energy(a, oa).total_joules;
    }
    o.require(bad == 0, std::to_string(bad) + " linearity/monotonicity violations");
    report("energy-model", o, "1e9 bytes = " + fmt(e, 1) + " J; 1000 linearity and monotonicity cases");
}

void service_criterion()
{
    Outcome o;
    AppConfig cfg;
    Service service(cfg);
    HttpServer server(service);
    int port = server.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    std::size_t compared = 0;
    for (const auto& name : fixture_names()) {
        auto res = client.Post("/v1/optimize", fixture_request(name).dump(), "application/json");
        if (!res || res->status != 200) {
            o.require(false, name + ": optimize request failed");
            continue;
        }
        json body = json::parse(res->body);
        Expected e = library_result(name, cfg);
        bool same = patch_texts(body) == rendered(e.patches)
                 && body["savings"]["before_j"].get<double>() == e.savings.before.total_joules
                 && body["savings"]["after_j"].get<double>() == e.savings.after.total_joules
                 && body["savings"]["delta_j"].get<double>() == e.savings.delta_joules
                 && body["savings"]["delta_pct"].get<double>() == e.savings.delta_percent;
        o.require(same, name + ": service output differs from library");
        ++compared;
    }
    server.stop();
    o.require(compared >= 10, "fewer than 10 fixtures compared");

    StubBackend evil(editing_stub([](const std::string& cls, const std::string& t) {
        if (cls != "html") {
            return t;
        }
        std::string out = t;
        out.insert(out.find("</head>"), "<script src=\"https://evil.example/x.js\"></script>");
        return out;
    }));
    Service strict(remote_config(evil.endpoint(), false));
    HttpResponse r = strict.handle("POST", "/v1/optimize", fixture_request("basic").dump());
    bool rejected = r.status == 502 && json::parse(r.body).value("kind", "") == "validation";
    o.require(rejected, "gate accepted an added external script (status " + std::to_string(r.status) + ")");
    report("service-equivalence", o,
           std::to_string(compared) + " fixtures byte-identical over HTTP; added external script rejected with status "
               + std::to_string(r.status) + "; no UI target built");
}

} // namespace

int main()
{
    benchmark_criteria();
    breakeven_criterion();
    diff_criterion();
    safety_criterion();
    stats_criterion();
    energy_criterion();
    service_criterion();
    std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
