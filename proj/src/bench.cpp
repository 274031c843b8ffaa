#include "wattless/bench.hpp"

#include "wattless/energy.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>

namespace wattless {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool has_html(const fs::path& dir)
{
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file()) {
            auto ext = to_lower(e.path().extension().string());
            if (ext == ".html" || ext == ".htm") {
                return true;
            }
        }
    }
    return false;
}

double pct_reduction(std::uint64_t before, std::uint64_t after)
{
    if (before == 0) {
        return 0;
    }
    return (static_cast<double>(before) - static_cast<double>(after)) / static_cast<double>(before) * 100.0;
}

json summary_json(const BenchmarkSummary& s)
{
    json j{{"n", s.n},
           {"mean_savings_pct", s.mean_savings_pct},
           {"sd_savings_pct", s.sd_savings_pct},
           {"frac_improved", s.frac_improved},
           {"frac_above_10pct", s.frac_above_10pct},
           {"median_transfer_reduction_pct", s.median_transfer_reduction_pct},
           {"median_code_reduction_pct", s.median_code_reduction_pct}};
    j["ci95"] = s.has_ci ? json::array({s.ci95_low, s.ci95_high}) : json(nullptr);
    return j;
}

json snapshot_json(const BundleSnapshot& s)
{
    json assets = json::object();
    for (const auto& [id, text] : s.assets) {
        assets[id] = text;
    }
    return json{{"entry", s.entry}, {"assets", assets}};
}

BundleSnapshot snapshot_from(const json& j)
{
    BundleSnapshot s;
    s.entry = j.at("entry").get<std::string>();
    for (const auto& [id, text] : j.at("assets").items()) {
        s.assets[id] = text.get<std::string>();
    }
    return s;
}

std::string fixed(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::string pad(std::string s, std::size_t width, bool left = false)
{
    if (s.size() >= width) {
        return s;
    }
    std::string fill(width - s.size(), ' ');
    return left ? s + fill : fill + s;
}

} // namespace

double PageResult::transfer_reduction_pct() const
{
    return pct_reduction(transfer_bytes_before, transfer_bytes_after);
}

double PageResult::code_reduction_pct() const
{
    return pct_reduction(code_bytes_before, code_bytes_after);
}

CorpusListing list_corpus(const fs::path& corpus)
{
    CorpusListing out;
    if (!fs::is_directory(corpus)) {
        throw IoError("corpus is not a directory: " + corpus.string());
    }
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(corpus)) {
        if (e.is_directory()) {
            dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
        std::string name = d.filename().string();
        if (has_html(d)) {
            out.bundles.push_back(name);
            continue;
        }
        std::vector<fs::path> inner;
        bool only_dirs = true;
        for (const auto& e : fs::directory_iterator(d)) {
            if (e.is_directory()) {
                inner.push_back(e.path());
            } else {
                only_dirs = false;
            }
        }
        std::sort(inner.begin(), inner.end());
        bool group = only_dirs && !inner.empty()
            && std::all_of(inner.begin(), inner.end(), [](const fs::path& p) { return has_html(p); });
        if (group) {
            for (const auto& p : inner) {
                out.bundles.push_back(name + "/" + p.filename().string());
            }
        } else {
            out.failures.push_back({name, "no entry html in " + d.string()});
        }
    }
    return out;
}

PageResult benchmark_bundle(const std::string& bundle_id, const SiteBundle& bundle, const BenchConfig& cfg)
{
    PageResult r;
    r.bundle_id = bundle_id;
    if (auto slash = bundle_id.find('/'); slash != std::string::npos) {
        r.group = bundle_id.substr(0, slash);
    }
    const auto& patterns = cfg.pipeline.analyzer.dom_op_patterns;
    r.dom_ops = count_bundle_dom_ops(bundle, patterns);
    WeightReport before = bundle_weight(bundle, r.dom_ops);
    r.eligible = is_benchmark_eligible(before, cfg.eligibility);

    PipelineResult out = run_pipeline(bundle, cfg.pipeline);
    WeightReport after = bundle_weight(out.bundle, count_bundle_dom_ops(out.bundle, patterns));
    auto e_before = estimate_energy(before, cfg.pipeline.energy);
    auto e_after = estimate_energy(after, cfg.pipeline.energy);
    auto savings = compute_savings(e_before, e_after);
    r.energy_before_j = e_before.total_joules;
    r.energy_after_j = e_after.total_joules;
    r.savings_j = savings.delta_joules;
    r.savings_pct = savings.delta_percent;
    r.transfer_bytes_before = before.total_bytes;
    r.transfer_bytes_after = after.total_bytes;
    r.code_bytes_before = before.code_bytes();
    r.code_bytes_after = after.code_bytes();

    for (TransformKind k : all_transform_kinds()) {
        TransformSummary s;
        s.kind = std::string(to_string(k));
        for (const auto& rec : out.log.records) {
            if (rec.kind != k) {
                continue;
            }
            ++s.records;
            if (rec.accepted) {
                ++s.accepted;
                s.bytes_saved += static_cast<std::int64_t>(rec.bytes_before) - static_cast<std::int64_t>(rec.bytes_after);
            }
        }
        if (s.records > 0) {
            r.transformations.push_back(s);
        }
    }
    for (const auto& rec : out.log.records) {
        std::string k(to_string(rec.kind));
        if (rec.accepted && std::find(r.accepted_kinds.begin(), r.accepted_kinds.end(), k) == r.accepted_kinds.end()) {
            r.accepted_kinds.push_back(k);
        }
    }
    return r;
}

CorpusRun run_corpus(const fs::path& corpus, const BenchConfig& cfg)
{
    CorpusListing listing = list_corpus(corpus);
    const std::size_t n = listing.bundles.size();
    std::vector<std::optional<PageResult>> slots(n);
    std::vector<std::optional<FailedBundle>> failed(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            const std::string& id = listing.bundles[i];
            try {
                SiteBundle b = load_bundle(corpus / id);
                slots[i] = benchmark_bundle(id, b, cfg);
            } catch (const std::exception& e) {
                failed[i] = FailedBundle{id, e.what()};
            }
        }
    };
    std::size_t workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) {
        pool.emplace_back(work);
    }
    work();
    for (auto& t : pool) {
        t.join();
    }
    CorpusRun run;
    run.failures = std::move(listing.failures);
    for (std::size_t i = 0; i < n; ++i) {
        if (slots[i]) {
            run.results.push_back(std::move(*slots[i]));
        } else if (failed[i]) {
            run.failures.push_back(std::move(*failed[i]));
        }
    }
    std::sort(run.results.begin(), run.results.end(),
              [](const PageResult& a, const PageResult& b) { return a.bundle_id < b.bundle_id; });
    std::sort(run.failures.begin(), run.failures.end(),
              [](const FailedBundle& a, const FailedBundle& b) { return a.bundle_id < b.bundle_id; });
    return run;
}

BenchmarkSummary summarize(const std::vector<PageResult>& results)
{
    BenchmarkSummary s;
    s.n = results.size();
    if (results.empty()) {
        return s;
    }
    std::vector<double> pct;
    std::vector<double> transfer;
    std::vector<double> code;
    std::size_t improved = 0;
    std::size_t above = 0;
    for (const auto& r : results) {
        pct.push_back(r.savings_pct);
        transfer.push_back(r.transfer_reduction_pct());
        code.push_back(r.code_reduction_pct());
        improved += r.savings_pct > 0;
        above += r.savings_pct > 10;
    }
    // sorted input makes the floating-point sums independent of result order
    std::sort(pct.begin(), pct.end());
    s.mean_savings_pct = stats::mean(pct);
    s.sd_savings_pct = stats::sample_sd(pct);
    s.ci95_low = s.ci95_high = s.mean_savings_pct;
    if (s.n >= 2) {
        s.has_ci = true;
        double half = stats::student_t_quantile(0.975, static_cast<double>(s.n - 1)) * s.sd_savings_pct
            / std::sqrt(static_cast<double>(s.n));
        s.ci95_low = s.mean_savings_pct - half;
        s.ci95_high = s.mean_savings_pct + half;
    }
    s.frac_improved = static_cast<double>(improved) / static_cast<double>(s.n);
    s.frac_above_10pct = static_cast<double>(above) / static_cast<double>(s.n);
    s.median_transfer_reduction_pct = stats::lower_median(transfer);
    s.median_code_reduction_pct = stats::lower_median(code);
    return s;
}

BenchReport make_report(CorpusRun run, double runtime_seconds)
{
    BenchReport rep;
    rep.runtime_seconds = runtime_seconds;
    std::vector<PageResult> eligible;
    std::map<std::string, std::vector<PageResult>> by_group;
    for (const auto& r : run.results) {
        if (!r.eligible) {
            rep.ineligible.push_back(r.bundle_id);
            continue;
        }
        eligible.push_back(r);
        if (!r.group.empty()) {
            by_group[r.group].push_back(r);
        }
    }
    rep.summary = summarize(eligible);
    for (const auto& [g, rs] : by_group) {
        rep.groups.push_back({g, summarize(rs)});
    }
    if (by_group.size() >= 2) {
        auto it = by_group.begin();
        const auto& a = it->second;
        const auto& b = (++it)->second;
        if (a.size() >= 2 && b.size() >= 2) {
            std::vector<double> x;
            std::vector<double> y;
            for (const auto& r : a) {
                x.push_back(r.savings_pct);
            }
            for (const auto& r : b) {
                y.push_back(r.savings_pct);
            }
            rep.group_test = stats::welch_t_test(x, y);
        }
    }
    rep.run = std::move(run);
    return rep;
}

std::string report_json(const BenchReport& rep)
{
    json pages = json::array();
    for (const auto& r : rep.run.results) {
        json t = json::array();
        for (const auto& s : r.transformations) {
            t.push_back({{"kind", s.kind}, {"records", s.records}, {"accepted", s.accepted}, {"bytes_saved", s.bytes_saved}});
        }
        pages.push_back({{"bundle_id", r.bundle_id},
                         {"eligible", r.eligible},
                         {"energy_before_j", r.energy_before_j},
                         {"energy_after_j", r.energy_after_j},
                         {"savings_j", r.savings_j},
                         {"savings_pct", r.savings_pct},
                         {"transfer_bytes_before", r.transfer_bytes_before},
                         {"transfer_bytes_after", r.transfer_bytes_after},
                         {"code_bytes_before", r.code_bytes_before},
                         {"code_bytes_after", r.code_bytes_after},
                         {"dom_ops", r.dom_ops},
                         {"transformations", t}});
    }
    json failures = json::array();
    for (const auto& f : rep.run.failures) {
        failures.push_back({{"bundle_id", f.bundle_id}, {"error", f.error}});
    }
    json j{{"summary", summary_json(rep.summary)},
           {"pages", pages},
           {"failures", failures},
           {"ineligible", rep.ineligible},
           {"runtime_seconds", rep.runtime_seconds}};
    if (!rep.groups.empty()) {
        json groups = json::object();
        for (const auto& g : rep.groups) {
            groups[g.group] = summary_json(g.summary);
        }
        j["groups"] = groups;
    }
    if (rep.group_test) {
        j["group_welch"] = {{"t", rep.group_test->t},
                            {"df", rep.group_test->df},
                            {"p_two_sided", rep.group_test->p_two_sided},
                            {"degenerate", rep.group_test->degenerate}};
    }
    return j.dump(2);
}

std::string render_table(const BenchReport& rep)
{
    const auto& s = rep.summary;
    std::ostringstream o;
    auto row = [&](const std::string& k, const std::string& v) { o << pad(k, 32, true) << pad(v, 20) << "\n"; };
    row("n", std::to_string(s.n));
    row("mean_savings_pct", fixed(s.mean_savings_pct, 2));
    row("sd_savings_pct", fixed(s.sd_savings_pct, 2));
    row("ci95", s.has_ci ? "[" + fixed(s.ci95_low, 2) + ", " + fixed(s.ci95_high, 2) + "]" : "n/a");
    row("frac_improved", fixed(s.frac_improved, 3));
    row("frac_above_10pct", fixed(s.frac_above_10pct, 3));
    row("median_transfer_reduction_pct", fixed(s.median_transfer_reduction_pct, 2));
    row("median_code_reduction_pct", fixed(s.median_code_reduction_pct, 2));
    row("ineligible", std::to_string(rep.ineligible.size()));
    row("failed", std::to_string(rep.run.failures.size()));
    for (const auto& g : rep.groups) {
        o << pad("group " + g.group, 32, true)
          << pad("M=" + fixed(g.summary.mean_savings_pct, 1) + "% SD=" + fixed(g.summary.sd_savings_pct, 1) + "%", 20)
          << "  n=" << g.summary.n << "\n";
    }
    if (rep.group_test) {
        row("welch t", fixed(rep.group_test->t, 3));
        row("welch df", fixed(rep.group_test->df, 2));
        row("welch p", fixed(rep.group_test->p_two_sided, 3));
    }
    o << "\n"
      << pad("bundle", 24, true) << pad("elig", 5) << pad("before_j", 12) << pad("after_j", 12) << pad("saved_%", 9)
      << pad("xfer_%", 9) << pad("code_%", 9) << "\n";
    for (const auto& r : rep.run.results) {
        o << pad(r.bundle_id, 24, true) << pad(r.eligible ? "yes" : "no", 5) << pad(fixed(r.energy_before_j, 2), 12)
          << pad(fixed(r.energy_after_j, 2), 12) << pad(fixed(r.savings_pct, 2), 9)
          << pad(fixed(r.transfer_reduction_pct(), 2), 9) << pad(fixed(r.code_reduction_pct(), 2), 9) << "\n";
    }
    for (const auto& f : rep.run.failures) {
        o << pad(f.bundle_id, 24, true) << " FAILED: " << f.error << "\n";
    }
    return o.str();
}

BundleSnapshot snapshot(const SiteBundle& b)
{
    BundleSnapshot s;
    s.entry = b.entry;
    for (const auto& a : b.assets) {
        if (!a.external && is_text_class(a.cls)) {
            s.assets[a.id] = a.payload;
        }
    }
    return s;
}

std::string serialize_pair(const TrainingPair& pair)
{
    json j{{"original", snapshot_json(pair.original)},
           {"optimized", snapshot_json(pair.optimized)},
           {"transformation_kinds", pair.transformation_kinds},
           {"energy_before_j", pair.energy_before_j},
           {"energy_after_j", pair.energy_after_j}};
    return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

TrainingPair parse_pair(std::string_view line)
{
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed dataset record: ") + e.what());
    }
    if (!j.is_object() || j.size() != 5) {
        throw Error("dataset record must hold exactly five fields");
    }
    try {
        TrainingPair p;
        p.original = snapshot_from(j.at("original"));
        p.optimized = snapshot_from(j.at("optimized"));
        p.transformation_kinds = j.at("transformation_kinds").get<std::vector<std::string>>();
        p.energy_before_j = j.at("energy_before_j").get<double>();
        p.energy_after_j = j.at("energy_after_j").get<double>();
        return p;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed dataset record: ") + e.what());
    }
}

std::size_t build_dataset(const std::vector<PageResult>& results, const fs::path& corpus, const fs::path& out,
                          const BenchConfig& cfg)
{
    std::string data;
    std::size_t count = 0;
    for (const auto& r : results) {
        if (!(r.energy_after_j < r.energy_before_j)) {
            continue;
        }
        SiteBundle b = load_bundle(corpus / r.bundle_id);
        PipelineResult opt = run_pipeline(b, cfg.pipeline);
        TrainingPair p;
        p.original = snapshot(b);
        p.optimized = snapshot(opt.bundle);
        p.transformation_kinds = r.accepted_kinds;
        p.energy_before_j = r.energy_before_j;
        p.energy_after_j = r.energy_after_j;
        data += serialize_pair(p);
        data += '\n';
        ++count;
    }
    write_file(out, data);
    return count;
}

} // namespace wattless
