#include "wattless/analyzer.hpp"
#include "wattless/bench.hpp"
#include "wattless/config.hpp"
#include "wattless/corpus.hpp"
#include "wattless/diffpatch.hpp"
#include "wattless/energy.hpp"
#include "wattless/optimizer.hpp"
#include "wattless/service.hpp"
#include "wattless/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <set>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wattless;

namespace {

struct EnergyFlags {
    std::optional<double> intensity;
    std::optional<double> cpu_per_op;
    std::optional<double> carbon;
};

void add_common(CLI::App* sub, std::string& config_path, EnergyFlags& e)
{
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--intensity-kwh-per-gb", e.intensity, "Transfer energy intensity");
    sub->add_option("--cpu-j-per-dom-op", e.cpu_per_op, "CPU joules per DOM operation");
    sub->add_option("--carbon-g-per-kwh", e.carbon, "Grid carbon intensity");
}

/// Flags override the file; the pipeline copy mirrors the energy section.
AppConfig resolve_config(const std::string& path, const EnergyFlags& e)
{
    AppConfig cfg = path.empty() ? AppConfig{} : load_config(path);
    for (EnergyModelParams* p : {&cfg.energy, &cfg.pipeline.energy}) {
        if (e.intensity) {
            p->intensity_kwh_per_gb = *e.intensity;
        }
        if (e.cpu_per_op) {
            p->cpu_joules_per_dom_op = *e.cpu_per_op;
        }
        if (e.carbon) {
            p->carbon_g_per_kwh = *e.carbon;
        }
    }
    cfg.energy.validate();
    return cfg;
}

json estimate_json(const EnergyEstimate& e, const EnergyModelParams& p)
{
    return {{"bytes", e.bytes},          {"dom_ops", e.dom_ops},
            {"transfer_j", e.transfer_joules}, {"cpu_j", e.cpu_joules},
            {"total_j", e.total_joules}, {"segments", e.per_segment_joules},
            {"carbon_g", estimate_carbon(e, p)}};
}

int cmd_analyze(const fs::path& dir, const AppConfig& cfg, bool as_json)
{
    SiteBundle b = load_bundle(dir);
    auto findings = detect_findings(b, cfg.pipeline.analyzer);
    std::size_t ops = count_bundle_dom_ops(b, cfg.pipeline.analyzer.dom_op_patterns);
    WeightReport w = bundle_weight(b, ops);
    EnergyEstimate e = estimate_energy(w, cfg.pipeline.energy);
    bool eligible = is_benchmark_eligible(w);
    if (as_json) {
        json f = json::array();
        for (const auto& x : findings) {
            json item{{"kind", std::string(to_string(x.kind))},
                      {"asset", x.asset_id},
                      {"node_path", x.locator.node_path},
                      {"projected_bytes_saved", x.projected_bytes_saved},
                      {"note", x.note}};
            if (x.locator.span) {
                item["span"] = {x.locator.span->offset, x.locator.span->length};
            }
            f.push_back(item);
        }
        json classes = json::object();
        for (const auto& [c, n] : w.per_class_bytes) {
            classes[std::string(to_string(c))] = n;
        }
        std::cout << json{{"entry", b.entry},
                          {"assets", w.asset_count},
                          {"bytes", w.total_bytes},
                          {"class_bytes", classes},
                          {"dom_ops", ops},
                          {"eligible", eligible},
                          {"energy", estimate_json(e, cfg.pipeline.energy)},
                          {"findings", f}}
                         .dump(2)
                  << "\n";
        return 0;
    }
    std::printf("entry       %s\n", b.entry.c_str());
    std::printf("assets      %zu (%llu bytes)\n", w.asset_count, static_cast<unsigned long long>(w.total_bytes));
    for (const auto& [c, n] : w.per_class_bytes) {
        std::printf("  %-9s %llu\n", std::string(to_string(c)).c_str(), static_cast<unsigned long long>(n));
    }
    std::printf("dom ops     %zu\n", ops);
    std::printf("energy      %.3f J (transfer %.3f J, cpu %.3f J)\n", e.total_joules, e.transfer_joules, e.cpu_joules);
    std::printf("carbon      %.6f g\n", estimate_carbon(e, cfg.pipeline.energy));
    std::printf("eligible    %s\n", eligible ? "yes" : "no");
    std::printf("findings    %zu\n", findings.size());
    for (const auto& x : findings) {
        std::string where = x.locator.node_path;
        if (x.locator.span) {
            where += (where.empty() ? "@" : " @") + std::to_string(x.locator.span->offset) + "+"
                   + std::to_string(x.locator.span->length);
        }
        std::printf("  %-22s %-28s %-30s %10llu  %s\n", std::string(to_string(x.kind)).c_str(), x.asset_id.c_str(),
                    where.c_str(), static_cast<unsigned long long>(x.projected_bytes_saved), x.note.c_str());
    }
    return 0;
}

std::map<std::string, std::string> texts(const SiteBundle& b)
{
    std::map<std::string, std::string> out;
    for (const auto& a : b.assets) {
        if (!a.external && is_text_class(a.cls)) {
            out[a.id] = a.payload;
        }
    }
    return out;
}

std::string patch_between(const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b,
                          std::size_t context, std::size_t* changed = nullptr)
{
    std::set<std::string> ids;
    for (const auto& [k, v] : a) {
        ids.insert(k);
    }
    for (const auto& [k, v] : b) {
        ids.insert(k);
    }
    std::string out;
    std::size_t n = 0;
    for (const auto& id : ids) {
        std::string x = a.count(id) ? a.at(id) : "";
        std::string y = b.count(id) ? b.at(id) : "";
        if (x != y) {
            out += render_patch(unified_diff(x, y, context, id));
            ++n;
        }
    }
    if (changed) {
        *changed = n;
    }
    return out;
}

int cmd_optimize(const fs::path& dir, const fs::path& out, const std::string& patch_out, const AppConfig& cfg,
                 bool as_json)
{
    if (fs::exists(out) && fs::equivalent(dir, out)) {
        throw Error("output directory must differ from the input");
    }
    SiteBundle b = load_bundle(dir);
    PipelineResult r = run_pipeline(b, cfg.pipeline);
    const auto& pat = cfg.pipeline.analyzer.dom_op_patterns;
    SavingsReport s = compute_savings(bundle_energy(b, cfg.pipeline.energy, pat), bundle_energy(r.bundle, cfg.pipeline.energy, pat));
    write_bundle(r.bundle, out);
    if (!patch_out.empty()) {
        write_file(patch_out, patch_between(texts(b), texts(r.bundle), 3));
    }
    if (as_json) {
        json log = json::array();
        for (const auto& rec : r.log.records) {
            log.push_back({{"kind", std::string(to_string(rec.kind))},
                           {"asset", rec.asset_id},
                           {"bytes_before", rec.bytes_before},
                           {"bytes_after", rec.bytes_after},
                           {"accepted", rec.accepted},
                           {"note", rec.note}});
        }
        std::cout << json{{"output", out.string()},
                          {"before", estimate_json(s.before, cfg.pipeline.energy)},
                          {"after", estimate_json(s.after, cfg.pipeline.energy)},
                          {"delta_j", s.delta_joules},
                          {"delta_pct", s.delta_percent},
                          {"transformations", log}}
                         .dump(2)
                  << "\n";
        return 0;
    }
    for (const auto& rec : r.log.records) {
        std::printf("%-8s %-22s %-30s %9llu -> %9llu  %s\n", rec.accepted ? "accepted" : "rejected",
                    std::string(to_string(rec.kind)).c_str(), rec.asset_id.c_str(),
                    static_cast<unsigned long long>(rec.bytes_before), static_cast<unsigned long long>(rec.bytes_after),
                    rec.note.c_str());
    }
    std::printf("energy %.3f J -> %.3f J (saved %.3f J, %.2f%%)\n", s.before.total_joules, s.after.total_joules,
                s.delta_joules, s.delta_percent);
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
}

std::map<std::string, std::string> text_files(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) {
            continue;
        }
        std::string rel = fs::relative(e.path(), root).generic_string();
        std::string data = read_file(e.path());
        if (is_text_class(classify_asset(rel, data))) {
            out[rel] = std::move(data);
        }
    }
    return out;
}

int cmd_diff(const fs::path& a, const fs::path& b, std::size_t context, bool exit_code)
{
    std::size_t changed = 0;
    std::string patch;
    if (fs::is_directory(a) && fs::is_directory(b)) {
        patch = patch_between(text_files(a), text_files(b), context, &changed);
    } else if (fs::is_regular_file(a) && fs::is_regular_file(b)) {
        PatchSet p = unified_diff(read_file(a), read_file(b), context, b.filename().generic_string());
        changed = p.hunks.empty() ? 0 : 1;
        patch = render_patch(p);
    } else {
        throw Error("diff needs two files or two directories");
    }
    std::cout << patch;
    return exit_code && changed > 0 ? 1 : 0;
}

BenchConfig bench_config(const AppConfig& cfg, std::size_t workers)
{
    BenchConfig b;
    b.pipeline = cfg.pipeline;
    b.workers = workers;
    return b;
}

int cmd_bench(const fs::path& corpus, const AppConfig& cfg, std::size_t workers, bool as_json, const std::string& out)
{
    auto t0 = std::chrono::steady_clock::now();
    CorpusRun run = run_corpus(corpus, bench_config(cfg, workers));
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    BenchReport report = make_report(std::move(run), secs);
    std::string j = report_json(report);
    if (!out.empty()) {
        write_file(out, j + "\n");
    }
    std::cout << (as_json ? j + "\n" : render_table(report));
    return 0;
}

int cmd_dataset(const fs::path& corpus, const fs::path& out, const AppConfig& cfg, std::size_t workers)
{
    BenchConfig b = bench_config(cfg, workers);
    CorpusRun run = run_corpus(corpus, b);
    std::size_t n = build_dataset(run.results, corpus, out, b);
    std::printf("wrote %zu pairs to %s\n", n, out.string().c_str());
    return 0;
}

std::pair<double, double> parse_range(const std::string& s)
{
    auto num = [&](const std::string& t) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(t, &used);
        } catch (const std::exception&) {
            used = std::string::npos;
        }
        if (used != t.size()) {
            throw Error("expected a number or a range a..b, got " + s);
        }
        return v;
    };
    std::size_t dots = s.find("..");
    if (dots == std::string::npos) {
        double v = num(s);
        return {v, v};
    }
    return {num(s.substr(0, dots)), num(s.substr(dots + 2))};
}

int cmd_breakeven(const std::optional<double>& overhead, const std::string& rate, const std::string& frontend,
                  double per_view, bool as_json)
{
    if (overhead.has_value() == !frontend.empty()) {
        throw Error("give either --overhead-kwh with --rate, or --frontend-kwh");
    }
    std::vector<BreakevenReport> points;
    if (overhead) {
        if (rate.empty()) {
            throw Error("--overhead-kwh needs --rate");
        }
        auto [lo, hi] = parse_range(rate);
        // Higher rates repay sooner, so the rate range maps onto a reversed energy range.
        for (double r : {std::max(lo, hi), std::min(lo, hi)}) {
            points.push_back(breakeven(*overhead, r, per_view));
            if (lo == hi) {
                break;
            }
        }
    } else {
        auto [lo, hi] = parse_range(frontend);
        for (double k : {std::min(lo, hi), std::max(lo, hi)}) {
            if (k <= 0) {
                throw Error("--frontend-kwh must be positive");
            }
            points.push_back(breakeven(k, 1.0, per_view));
            if (lo == hi) {
                break;
            }
        }
    }
    const BreakevenReport& first = points.front();
    const BreakevenReport& last = points.back();
    if (as_json) {
        json pts = json::array();
        for (const auto& p : points) {
            pts.push_back({{"overhead_kwh", p.overhead_kwh},
                           {"reduction_rate", p.reduction_rate},
                           {"breakeven_frontend_kwh", p.breakeven_frontend_kwh},
                           {"per_view_wh", p.per_view_wh},
                           {"breakeven_views", p.breakeven_views}});
        }
        std::cout << json{{"points", pts},
                          {"frontend_kwh", {first.breakeven_frontend_kwh, last.breakeven_frontend_kwh}},
                          {"views", {first.breakeven_views, last.breakeven_views}}}
                         .dump(2)
                  << "\n";
        return 0;
    }
    for (const auto& p : points) {
        if (overhead) {
            std::printf("overhead %.6g kWh at rate %.6g: breakeven %.6g kWh, %.6g views\n", p.overhead_kwh,
                        p.reduction_rate, p.breakeven_frontend_kwh, p.breakeven_views);
        } else {
            std::printf("%.6g kWh: %.6g views\n", p.breakeven_frontend_kwh, p.breakeven_views);
        }
    }
    std::printf("range %.6g..%.6g kWh, %.6g..%.6g views at %.6g Wh per 1000 views\n", first.breakeven_frontend_kwh,
                last.breakeven_frontend_kwh, first.breakeven_views, last.breakeven_views, per_view);
    return 0;
}

int cmd_serve(const AppConfig& base, const std::optional<std::string>& host, const std::optional<int>& port)
{
    AppConfig cfg = base;
    if (host) {
        cfg.server.bind_address = *host;
    }
    if (port) {
        cfg.server.port = *port;
    }
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    // Blocked before any thread starts so only sigwait below sees them.
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    Service service(cfg);
    HttpServer server(service);
    int bound = server.start(cfg.server.bind_address, cfg.server.port);
    std::printf("listening on http://%s:%d (backend %s)\n", cfg.server.bind_address.c_str(), bound,
                cfg.backend.mode == BackendMode::rules ? "rules" : "remote");
    std::fflush(stdout);
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Energy-aware static site optimizer"};
    app.require_subcommand(1);
    std::string config_path;
    EnergyFlags energy;
    bool as_json = false;
    std::size_t workers = 0;
    std::function<int()> action;

    fs::path dir;
    auto* analyze = app.add_subcommand("analyze", "Report findings, weight and energy of a bundle");
    analyze->add_option("dir", dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    analyze->add_flag("--json", as_json, "JSON output");
    add_common(analyze, config_path, energy);
    analyze->callback([&] { action = [&] { return cmd_analyze(dir, resolve_config(config_path, energy), as_json); }; });

    fs::path out;
    std::string patch_out;
    auto* optimize = app.add_subcommand("optimize", "Run the rule pipeline and write the optimized bundle");
    optimize->add_option("dir", dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    optimize->add_option("-o,--output", out, "Output directory")->required();
    optimize->add_option("--patch", patch_out, "Also write a unified diff of the text assets");
    optimize->add_flag("--json", as_json, "JSON output");
    add_common(optimize, config_path, energy);
    optimize->callback([&] {
        action = [&] { return cmd_optimize(dir, out, patch_out, resolve_config(config_path, energy), as_json); };
    });

    fs::path a;
    fs::path b;
    std::size_t context = 3;
    bool exit_code = false;
    auto* diff = app.add_subcommand("diff", "Unified diff of two files or two bundle directories");
    diff->add_option("a", a, "Original")->required()->check(CLI::ExistingPath);
    diff->add_option("b", b, "Modified")->required()->check(CLI::ExistingPath);
    diff->add_option("-U,--context", context, "Context lines");
    diff->add_flag("--exit-code", exit_code, "Exit with 1 when the inputs differ");
    diff->callback([&] { action = [&] { return cmd_diff(a, b, context, exit_code); }; });

    fs::path corpus;
    std::string report_out;
    auto* bench = app.add_subcommand("bench", "Benchmark every bundle of a corpus");
    bench->add_option("corpus", corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
    bench->add_flag("--json", as_json, "JSON report on stdout");
    bench->add_option("-o,--output", report_out, "Also write the JSON report to a file");
    bench->add_option("-j,--workers", workers, "Worker threads (0 = hardware concurrency)");
    add_common(bench, config_path, energy);
    bench->callback([&] {
        action = [&] { return cmd_bench(corpus, resolve_config(config_path, energy), workers, as_json, report_out); };
    });

    auto* dataset = app.add_subcommand("dataset", "Write before/after training pairs of improved pages");
    dataset->add_option("corpus", corpus, "Corpus directory")->required()->check(CLI::ExistingDirectory);
    dataset->add_option("-o,--output", out, "JSON Lines output file")->required();
    dataset->add_option("-j,--workers", workers, "Worker threads (0 = hardware concurrency)");
    add_common(dataset, config_path, energy);
    dataset->callback([&] { action = [&] { return cmd_dataset(corpus, out, resolve_config(config_path, energy), workers); }; });

    std::optional<double> overhead;
    std::string rate;
    std::string frontend;
    double per_view = 50.0;
    auto* be = app.add_subcommand("breakeven", "Frontend energy and page views that repay an optimizer overhead");
    be->add_option("--overhead-kwh", overhead, "One-time optimizer overhead in kWh");
    be->add_option("--rate", rate, "Reduction rate as a fraction, or a range a..b");
    be->add_option("--frontend-kwh", frontend, "Convert frontend energy (or a range a..b) to page views");
    be->add_option("--per-view-wh", per_view, "Wh per 1000 page views");
    be->add_flag("--json", as_json, "JSON output");
    be->callback([&] { action = [&] { return cmd_breakeven(overhead, rate, frontend, per_view, as_json); }; });

    std::optional<std::string> host;
    std::optional<int> port;
    auto* serve = app.add_subcommand("serve", "Run the HTTP service until SIGINT or SIGTERM");
    serve->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    serve->add_option("--host", host, "Bind address (overrides the config)");
    serve->add_option("--port", port, "Port, 0 for any free port (overrides the config)");
    serve->callback([&] { action = [&] { return cmd_serve(resolve_config(config_path, {}), host, port); }; });

    std::size_t pages = 30;
    std::uint64_t seed = 1;
    auto* gen = app.add_subcommand("gen-corpus", "Generate the seeded synthetic benchmark corpus");
    gen->add_option("dir", out, "Output directory")->required();
    gen->add_option("--pages", pages, "Number of pages");
    gen->add_option("--seed", seed, "Generator seed");
    gen->callback([&] {
        action = [&] {
            CorpusSpec spec;
            spec.pages = pages;
            spec.seed = seed;
            auto written = generate_corpus(out, spec);
            std::printf("wrote %zu pages to %s\n", written.size(), out.string().c_str());
            return 0;
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        return action();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "wattless: error: %s\n", e.what());
        return 2;
    }
}
