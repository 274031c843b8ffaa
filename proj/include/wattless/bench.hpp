#pragma once

#include "wattless/bundle.hpp"
#include "wattless/optimizer.hpp"
#include "wattless/stats.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wattless {

/// Per-kind totals of one transformation log.
struct TransformSummary {
    std::string kind;
    std::size_t records = 0;
    std::size_t accepted = 0;
    std::int64_t bytes_saved = 0; // accepted records only

    friend bool operator==(const TransformSummary&, const TransformSummary&) = default;
};

struct PageResult {
    std::string bundle_id; // path relative to the corpus root
    std::string group;     // first path component of nested ids, else empty
    bool eligible = false;
    double energy_before_j = 0;
    double energy_after_j = 0;
    double savings_j = 0;
    double savings_pct = 0;
    std::uint64_t transfer_bytes_before = 0;
    std::uint64_t transfer_bytes_after = 0;
    std::uint64_t code_bytes_before = 0;
    std::uint64_t code_bytes_after = 0;
    std::size_t dom_ops = 0;
    std::vector<TransformSummary> transformations;
    /// Accepted kinds in pipeline order.
    std::vector<std::string> accepted_kinds;

    double transfer_reduction_pct() const;
    double code_reduction_pct() const;
};

struct FailedBundle {
    std::string bundle_id;
    std::string error;
};

struct CorpusRun {
    std::vector<PageResult> results; // sorted by bundle_id
    std::vector<FailedBundle> failures;
};

struct BenchConfig {
    PipelineConfig pipeline;
    EligibilityThresholds eligibility;
    /// Worker threads; 0 picks the hardware concurrency.
    std::size_t workers = 0;
};

/// Bundle directories under `corpus`: every directory holding an .html file
/// at top level. A directory without one is a group when it only contains
/// bundle directories, otherwise it is reported as a failed bundle.
struct CorpusListing {
    std::vector<std::string> bundles;
    std::vector<FailedBundle> failures;
};
CorpusListing list_corpus(const std::filesystem::path& corpus);

PageResult benchmark_bundle(const std::string& bundle_id, const SiteBundle& bundle, const BenchConfig& cfg = {});

CorpusRun run_corpus(const std::filesystem::path& corpus, const BenchConfig& cfg = {});

struct BenchmarkSummary {
    std::size_t n = 0;
    double mean_savings_pct = 0;
    double sd_savings_pct = 0;
    /// False for n < 2; the interval then collapses to the mean.
    bool has_ci = false;
    double ci95_low = 0;
    double ci95_high = 0;
    double frac_improved = 0;     // savings_pct > 0
    double frac_above_10pct = 0;  // savings_pct > 10
    double median_transfer_reduction_pct = 0;
    double median_code_reduction_pct = 0;
};

/// Sample statistics with a Student-t interval; medians are lower medians.
BenchmarkSummary summarize(const std::vector<PageResult>& results);

struct GroupSummary {
    std::string group;
    BenchmarkSummary summary;
};

struct BenchReport {
    CorpusRun run;
    BenchmarkSummary summary; // eligible pages only
    std::vector<std::string> ineligible;
    std::vector<GroupSummary> groups; // eligible pages per group, when groups exist
    /// Savings of the first two groups compared, when both have n >= 2.
    std::optional<stats::WelchResult> group_test;
    double runtime_seconds = 0;
};

BenchReport make_report(CorpusRun run, double runtime_seconds = 0);

std::string report_json(const BenchReport& report);
/// Fixed-width summary table followed by one row per page.
std::string render_table(const BenchReport& report);

/// Text assets of a bundle keyed by id.
struct BundleSnapshot {
    std::string entry;
    std::map<std::string, std::string> assets;

    friend bool operator==(const BundleSnapshot&, const BundleSnapshot&) = default;
};
BundleSnapshot snapshot(const SiteBundle& b);

struct TrainingPair {
    BundleSnapshot original;
    BundleSnapshot optimized;
    std::vector<std::string> transformation_kinds;
    double energy_before_j = 0;
    double energy_after_j = 0;

    friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

/// One JSON object without a line break.
std::string serialize_pair(const TrainingPair& pair);
TrainingPair parse_pair(std::string_view line);

/// Re-runs the pipeline on each improved page of `results` and writes one
/// line per pair. Returns the number of lines written.
std::size_t build_dataset(const std::vector<PageResult>& results, const std::filesystem::path& corpus,
                          const std::filesystem::path& out, const BenchConfig& cfg = {});

} // namespace wattless
