#include "wattless/bench.hpp"
#include "wattless/corpus.hpp"

#include "support/fixtures.hpp"
#include "support/temp_dir.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <random>

using namespace wattless;
using namespace wattless::testing;
namespace fs = std::filesystem;

namespace {

PageResult result(double pct, std::uint64_t xfer_before = 100, std::uint64_t xfer_after = 90)
{
    PageResult r;
    r.eligible = true;
    r.savings_pct = pct;
    r.energy_before_j = 100;
    r.energy_after_j = 100 - pct;
    r.savings_j = pct;
    r.transfer_bytes_before = xfer_before;
    r.transfer_bytes_after = xfer_after;
    r.code_bytes_before = 50;
    r.code_bytes_after = 40;
    return r;
}

void copy_fixture(const std::string& name, const fs::path& to)
{
    fs::copy(fixture_root() / name, to, fs::copy_options::recursive);
}

std::string read_all(const fs::path& p)
{
    return read_file(p);
}

std::vector<std::string> nlohmann_fields(const std::string& line)
{
    std::vector<std::string> keys;
    auto j = nlohmann::json::parse(line);
    for (const auto& [k, v] : j.items()) {
        keys.push_back(k);
    }
    return keys;
}

} // namespace

TEST(Summarize, AllTenPercent)
{
    auto s = summarize({result(10), result(10), result(10)});
    EXPECT_EQ(s.n, 3u);
    EXPECT_DOUBLE_EQ(s.mean_savings_pct, 10);
    EXPECT_EQ(s.sd_savings_pct, 0);
    EXPECT_TRUE(s.has_ci);
    EXPECT_DOUBLE_EQ(s.ci95_low, 10);
    EXPECT_DOUBLE_EQ(s.ci95_high, 10);
    EXPECT_EQ(s.frac_above_10pct, 0); // strictly above
    EXPECT_EQ(s.frac_improved, 1);
}

TEST(Summarize, HandComputedInterval)
{
    auto s = summarize({result(10), result(12), result(14)});
    EXPECT_DOUBLE_EQ(s.mean_savings_pct, 12);
    EXPECT_DOUBLE_EQ(s.sd_savings_pct, 2);
    EXPECT_NEAR(s.ci95_low, 7.031724576560909, 1e-9);
    EXPECT_NEAR(s.ci95_high, 16.968275423439092, 1e-9);
    EXPECT_NEAR(s.ci95_low, 7.03, 0.01);
    EXPECT_NEAR(s.ci95_high, 16.97, 0.01);
}

TEST(Summarize, SmallAndEmpty)
{
    auto one = summarize({result(5)});
    EXPECT_FALSE(one.has_ci);
    EXPECT_EQ(one.ci95_low, 5);
    EXPECT_EQ(one.sd_savings_pct, 0);
    auto none = summarize({});
    EXPECT_EQ(none.n, 0u);
    EXPECT_FALSE(none.has_ci);
}

TEST(Summarize, LowerMedianAndFractions)
{
    auto s = summarize({result(-1, 100, 99), result(0, 100, 96), result(11, 100, 80), result(20, 100, 70)});
    EXPECT_DOUBLE_EQ(s.median_transfer_reduction_pct, 4); // sorted {1, 4, 20, 30}
    EXPECT_DOUBLE_EQ(s.frac_improved, 0.5);
    EXPECT_DOUBLE_EQ(s.frac_above_10pct, 0.5);
    EXPECT_DOUBLE_EQ(s.median_code_reduction_pct, 20);
}

TEST(Summarize, PermutationInvariantProperty)
{
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> d(-5, 40);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<PageResult> rs;
        for (int i = 0; i < 2 + rep; ++i) {
            rs.push_back(result(d(rng), 1000, 1000 - rng() % 500));
        }
        auto a = summarize(rs);
        std::shuffle(rs.begin(), rs.end(), rng);
        auto b = summarize(rs);
        EXPECT_EQ(a.mean_savings_pct, b.mean_savings_pct);
        EXPECT_EQ(a.sd_savings_pct, b.sd_savings_pct);
        EXPECT_EQ(a.ci95_low, b.ci95_low);
        EXPECT_EQ(a.median_transfer_reduction_pct, b.median_transfer_reduction_pct);
        EXPECT_LE(a.ci95_low, a.mean_savings_pct);
        EXPECT_GE(a.ci95_high, a.mean_savings_pct);
        EXPECT_GE(a.frac_improved, 0);
        EXPECT_LE(a.frac_improved, 1);
    }
}

TEST(Corpus, EmptyCorpus)
{
    TempDir dir;
    auto run = run_corpus(dir.path());
    EXPECT_TRUE(run.results.empty());
    EXPECT_TRUE(run.failures.empty());
    EXPECT_THROW(run_corpus(dir.path() / "missing"), IoError);
}

TEST(Corpus, FailedBundleListedNotDropped)
{
    TempDir dir;
    copy_fixture("basic", dir.path() / "a");
    copy_fixture("text", dir.path() / "b");
    fs::create_directories(dir.path() / "c");
    write_file(dir.path() / "c" / "one.html", "<p>1</p>");
    write_file(dir.path() / "c" / "two.html", "<p>2</p>");
    fs::create_directories(dir.path() / "d" / "assets");
    write_file(dir.path() / "d" / "notes.txt", "not a page");
    auto run = run_corpus(dir.path());
    ASSERT_EQ(run.results.size(), 2u);
    EXPECT_EQ(run.results[0].bundle_id, "a");
    EXPECT_EQ(run.results[1].bundle_id, "b");
    ASSERT_EQ(run.failures.size(), 2u);
    EXPECT_EQ(run.failures[0].bundle_id, "c");
    EXPECT_NE(run.failures[0].error.find("ambiguous"), std::string::npos);
    EXPECT_EQ(run.failures[1].bundle_id, "d");
    auto rep = make_report(run);
    EXPECT_NE(render_table(rep).find("FAILED"), std::string::npos);
}

TEST(Corpus, PageResultConsistency)
{
    TempDir dir;
    for (const auto& name : fixture_names()) {
        copy_fixture(name, dir.path() / name);
    }
    auto run = run_corpus(dir.path());
    EXPECT_EQ(run.results.size(), fixture_names().size());
    for (const auto& r : run.results) {
        EXPECT_NEAR(r.savings_j, r.energy_before_j - r.energy_after_j, 1e-9);
        EXPECT_NEAR(r.savings_pct, r.savings_j / r.energy_before_j * 100, 1e-9);
        EXPECT_LE(r.code_bytes_before, r.transfer_bytes_before);
        EXPECT_LE(r.code_bytes_after, r.transfer_bytes_after);
        EXPECT_FALSE(r.eligible) << r.bundle_id; // fixtures are small
    }
    auto rep = make_report(run);
    EXPECT_EQ(rep.ineligible.size(), run.results.size());
    EXPECT_EQ(rep.summary.n, 0u);
}

TEST(Corpus, SchedulingDoesNotChangeResults)
{
    TempDir dir;
    CorpusSpec spec;
    spec.pages = 6;
    generate_corpus(dir.path(), spec);
    BenchConfig one;
    one.workers = 1;
    BenchConfig many;
    many.workers = 4;
    auto a = make_report(run_corpus(dir.path(), one));
    auto b = make_report(run_corpus(dir.path(), many));
    EXPECT_EQ(report_json(a), report_json(b));
}

TEST(Generator, DeterministicAndEligible)
{
    TempDir a;
    TempDir b;
    CorpusSpec spec;
    spec.pages = 5;
    auto pa = generate_corpus(a.path(), spec);
    generate_corpus(b.path(), spec);
    ASSERT_EQ(pa.size(), 5u);
    EXPECT_EQ(pa[0].filename(), "page-01");
    for (const auto& p : pa) {
        for (const auto& e : fs::recursive_directory_iterator(p)) {
            if (e.is_regular_file()) {
                auto rel = fs::relative(e.path(), a.path());
                EXPECT_EQ(read_all(e.path()), read_all(b.path() / rel)) << rel;
            }
        }
        auto bundle = load_bundle(p);
        auto w = bundle_weight(bundle, count_bundle_dom_ops(bundle));
        EXPECT_TRUE(is_benchmark_eligible(w)) << p << " " << w.total_bytes << " " << w.dom_ops;
    }
    CorpusSpec other = spec;
    other.seed = 2;
    TempDir c;
    generate_corpus(c.path(), other);
    EXPECT_NE(read_all(a.path() / "page-01" / "index.html"), read_all(c.path() / "page-01" / "index.html"));
}

TEST(Generator, KnobsChangeInefficiency)
{
    TempDir lean;
    TempDir heavy;
    CorpusSpec a;
    a.pages = 3;
    a.optimized_every = 0;
    a.unused_rules = {0, 0};
    a.comment_density = {0, 0};
    a.legacy_image_share = {0, 0};
    CorpusSpec b = a;
    b.unused_rules = {40, 40};
    b.comment_density = {0.5, 0.5};
    b.legacy_image_share = {1, 1};
    generate_corpus(lean.path(), a);
    generate_corpus(heavy.path(), b);
    auto sl = summarize(run_corpus(lean.path()).results);
    auto sh = summarize(run_corpus(heavy.path()).results);
    EXPECT_GT(sh.mean_savings_pct, sl.mean_savings_pct + 20);
}

TEST(Report, GroupsShowPerSubCorpusShape)
{
    CorpusRun run;
    std::vector<double> human{2, 10, 25, 11.5, 9};
    std::vector<double> generated{1, 30, 20, 15.4, 10};
    for (std::size_t i = 0; i < human.size(); ++i) {
        auto r = result(human[i]);
        r.bundle_id = "human/p" + std::to_string(i);
        r.group = "human";
        run.results.push_back(r);
        auto g = result(generated[i]);
        g.bundle_id = "llm/p" + std::to_string(i);
        g.group = "llm";
        run.results.push_back(g);
    }
    auto rep = make_report(run);
    ASSERT_EQ(rep.groups.size(), 2u);
    ASSERT_TRUE(rep.group_test.has_value());
    auto expect = stats::welch_t_test(human, generated);
    EXPECT_DOUBLE_EQ(rep.group_test->p_two_sided, expect.p_two_sided);
    auto table = render_table(rep);
    EXPECT_NE(table.find("group human"), std::string::npos);
    EXPECT_NE(table.find("M=11.5% SD=8.4%"), std::string::npos) << table;
    EXPECT_NE(table.find("welch p"), std::string::npos);
    auto j = report_json(rep);
    EXPECT_NE(j.find("\"group_welch\""), std::string::npos);
}

TEST(Report, GroupMomentsRendering)
{
    // two groups whose moments are M=15.4 SD=13.4 and M=11.5 SD=9.8
    auto sample = [](double m, double sd) {
        double h = sd * std::sqrt(2.0) / 2.0; // two points at m +- h have sample sd = sd
        return std::vector<double>{m - h, m + h};
    };
    CorpusRun run;
    for (auto [group, m, sd] : {std::tuple{"generated", 15.4, 13.4}, std::tuple{"curated", 11.5, 9.8}}) {
        int i = 0;
        for (double v : sample(m, sd)) {
            auto r = result(v);
            r.group = group;
            r.bundle_id = std::string(group) + "/" + std::to_string(i++);
            run.results.push_back(r);
        }
    }
    auto table = render_table(make_report(run));
    EXPECT_NE(table.find("M=15.4% SD=13.4%"), std::string::npos) << table;
    EXPECT_NE(table.find("M=11.5% SD=9.8%"), std::string::npos) << table;
}

TEST(Dataset, OnlyImprovedRecords)
{
    TempDir dir;
    copy_fixture("basic", dir.path() / "improved");
    copy_fixture("minified", dir.path() / "flat");
    auto run = run_corpus(dir.path());
    ASSERT_EQ(run.results.size(), 2u);
    // a fabricated regression must be filtered by the energy test alone
    run.results.push_back(run.results[0]);
    run.results.back().energy_after_j = run.results.back().energy_before_j + 1;
    auto out = dir.path() / "pairs.jsonl";
    std::size_t n = build_dataset(run.results, dir.path(), out);
    std::string text = read_all(out);
    std::size_t lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
    EXPECT_EQ(n, lines);
    ASSERT_EQ(n, 1u);
    EXPECT_EQ(text.find("\n\n"), std::string::npos);
    EXPECT_EQ(text.back(), '\n');
    auto pair = parse_pair(text.substr(0, text.size() - 1));
    EXPECT_LT(pair.energy_after_j, pair.energy_before_j);
    EXPECT_EQ(pair.original.entry, "index.html");
    EXPECT_EQ(pair.original.assets.at("style.css"), read_all(fixture_root() / "basic" / "style.css"));
    EXPECT_NE(pair.optimized.assets.at("style.css"), pair.original.assets.at("style.css"));
    EXPECT_NE(std::find(pair.transformation_kinds.begin(), pair.transformation_kinds.end(), "minify_css"),
              pair.transformation_kinds.end());
}

TEST(Dataset, EmptyResultsWriteEmptyFile)
{
    TempDir dir;
    auto out = dir.path() / "empty.jsonl";
    EXPECT_EQ(build_dataset({}, dir.path(), out), 0u);
    EXPECT_TRUE(fs::exists(out));
    EXPECT_EQ(fs::file_size(out), 0u);
}

TEST(Dataset, RecordFieldsExactAndRoundTrip)
{
    for (const auto& name : fixture_names()) {
        auto b = load_fixture(name);
        auto r = run_pipeline(b);
        TrainingPair p;
        p.original = snapshot(b);
        p.optimized = snapshot(r.bundle);
        p.transformation_kinds = {"minify_css", "lazy_image"};
        p.energy_before_j = bundle_energy(b).total_joules;
        p.energy_after_j = bundle_energy(r.bundle).total_joules;
        std::string line = serialize_pair(p);
        EXPECT_EQ(line.find('\n'), std::string::npos);
        EXPECT_EQ(parse_pair(line), p) << name;
        auto j = nlohmann_fields(line);
        EXPECT_EQ(j, (std::vector<std::string>{"energy_after_j", "energy_before_j", "optimized", "original",
                                               "transformation_kinds"}));
    }
    EXPECT_THROW(parse_pair("{\"original\":1}"), Error);
    EXPECT_THROW(parse_pair("not json"), Error);
}
