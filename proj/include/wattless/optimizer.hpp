#pragma once

#include "wattless/analyzer.hpp"
#include "wattless/bundle.hpp"
#include "wattless/energy.hpp"
#include "wattless/html.hpp"

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wattless {

enum class TransformKind {
    minify_html,
    minify_css,
    strip_unused_css,
    minify_script,
    strip_console,
    optimize_svg,
    defer_script,
    lazy_image,
    image_conversion_plan,
    font_subset_plan,
    inline_critical_css,
};

std::string_view to_string(TransformKind k);
TransformKind transform_kind_from_string(std::string_view s);
const std::vector<TransformKind>& all_transform_kinds();

/// Kinds that change document structure rather than bytes; kept without
/// an energy improvement.
bool is_structure_only(TransformKind k);

struct TransformationRecord {
    TransformKind kind = TransformKind::minify_html;
    std::string asset_id;
    /// Bytes of every asset the step touched (target, rewritten referrers,
    /// added and dropped assets), before and after.
    std::uint64_t bytes_before = 0;
    std::uint64_t bytes_after = 0;
    std::map<std::string, std::string> detail;
    bool accepted = false;
    std::string note;
};

struct TransformationLog {
    std::vector<TransformationRecord> records;
    std::uint64_t total_bytes_before = 0;
    std::uint64_t total_bytes_after = 0;

    /// total_bytes_after == total_bytes_before - sum of accepted deltas.
    bool consistent() const;
};

/// Optional real codec plug-ins; the default is deterministic projection.
struct CodecHooks {
    std::function<std::optional<std::string>(const Asset& image)> encode_avif;
    std::function<std::optional<std::string>(const Asset& font, const std::u32string& characters)> subset_font;
};

struct PipelineConfig {
    std::set<TransformKind> enabled = default_enabled();
    bool strip_console = true;
    /// Reject byte-changing steps that do not lower estimated energy.
    bool energy_gating = true;
    std::size_t fold_images = 3;        // K
    std::size_t critical_elements = 10; // M
    CodecRatios codec_ratios;
    double font_glyph_coverage = 220.0;
    double font_ratio_floor = 0.05;
    AnalyzerConfig analyzer;
    EnergyModelParams energy;
    CodecHooks hooks;

    /// Every kind except inline_critical_css.
    static std::set<TransformKind> default_enabled();
};

/// Removes the spans of unused_css_rule and unused_font findings that name
/// `asset_id`, deduplicated and merged. Returns nullopt for a span beyond
/// the text.
std::optional<std::string> strip_unused_css(std::string_view text, const std::vector<Finding>& findings,
                                            std::string_view asset_id);
std::optional<std::string> strip_spans(std::string_view text, std::vector<css::Span> spans);

/// Adds `defer` to blocking external head scripts whose deferral keeps
/// execution order: no classic blocking script may follow them, and none
/// of their sources may call document.write. Returns the src of each
/// deferred script.
std::vector<std::string> defer_scripts(html::DomTree& doc, const SiteBundle* bundle = nullptr);

/// Adds loading="lazy" to every img after the first `fold` lacking a
/// loading attribute. Returns the src of each changed image.
std::vector<std::string> lazy_images(html::DomTree& doc, std::size_t fold);

/// Distinct code points in document text nodes (script and style content
/// excluded, entities decoded, \t \n \r \f excluded).
std::u32string document_characters(const html::DomTree& doc);

/// Projected bytes of an AVIF re-encode, or nullopt for other formats.
std::optional<std::uint64_t> projected_image_bytes(const Asset& image, const CodecRatios& ratios);

/// ceil(bytes * max(floor, min(1, distinct / coverage))).
std::uint64_t projected_font_bytes(std::uint64_t bytes, std::size_t distinct_chars, double coverage = 220.0,
                                   double floor = 0.05);

/// Exact deferred-stylesheet markup for `href`.
std::string deferred_stylesheet_link(std::string_view href);

/// Result of one pipeline run.
struct PipelineResult {
    SiteBundle bundle;
    TransformationLog log;
    std::vector<Finding> findings;
};

PipelineResult run_pipeline(const SiteBundle& b, const PipelineConfig& cfg = {});

/// Estimated energy of a bundle as loaded (bytes + static DOM-op count).
EnergyEstimate bundle_energy(const SiteBundle& b, const EnergyModelParams& p = {},
                             const std::vector<std::string>& patterns = script::default_dom_op_patterns());

/// Text snippets without an entry document, each minified by its class.
struct Snippet {
    std::string url;
    AssetClass cls = AssetClass::other;
    std::string text;
};

std::vector<Snippet> optimize_snippets(const std::vector<Snippet>& snippets, const PipelineConfig& cfg = {});

} // namespace wattless
