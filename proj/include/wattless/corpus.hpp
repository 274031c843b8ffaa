#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wattless {

/// Inclusive integer range sampled uniformly per page.
struct IntRange {
    int lo = 0;
    int hi = 0;
};

/// Inclusive real range sampled uniformly per page.
struct RealRange {
    double lo = 0;
    double hi = 0;
};

/// Inefficiency knobs of the synthetic page generator.
struct CorpusSpec {
    std::size_t pages = 30;
    std::uint64_t seed = 1;
    /// Pages are padded with a hero image until they exceed this.
    std::uint64_t min_page_bytes = 620 * 1024;
    /// Every n-th page (1-based index divisible by n) is already optimized; 0 disables.
    std::size_t optimized_every = 15;
    /// Probability per page that an image is stored in a legacy format.
    RealRange legacy_image_share{0.0, 0.45};
    /// Fraction of rules and statements preceded by a comment.
    RealRange comment_density{0.05, 0.40};
    IntRange used_rules{20, 80};
    IntRange unused_rules{0, 40};
    IntRange images{4, 14};
    IntRange image_kib{15, 120};
    IntRange blocking_scripts{0, 3};
    IntRange dom_ops{10, 60};
    IntRange console_statements{0, 6};
    double font_probability = 0.5;
    double unused_font_probability = 0.2;
};

/// Writes `spec.pages` bundles named page-01, page-02, ... under `out`.
/// Output depends only on the spec. Returns the page directories.
std::vector<std::filesystem::path> generate_corpus(const std::filesystem::path& out, const CorpusSpec& spec = {});

} // namespace wattless
