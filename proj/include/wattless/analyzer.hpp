#pragma once

#include "wattless/bundle.hpp"
#include "wattless/css.hpp"
#include "wattless/html.hpp"
#include "wattless/script.hpp"

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace wattless {

enum class FindingKind {
    oversized_image,
    missing_lazy_loading,
    blocking_script,
    unused_css_rule,
    console_logging,
    unused_font,
    bloated_svg,
    uncompressed_text,
};

std::string_view to_string(FindingKind k);
FindingKind finding_kind_from_string(std::string_view s);
const std::vector<FindingKind>& all_finding_kinds();

/// Where a finding applies: a byte span into the asset payload, a node path
/// into the entry document (for example `/html[1]/body[1]/img[4]`), or both.
struct Locator {
    std::optional<css::Span> span;
    std::string node_path;
};

struct Finding {
    FindingKind kind = FindingKind::unused_css_rule;
    std::string asset_id;
    Locator locator;
    std::uint64_t projected_bytes_saved = 0;
    std::string note;
};

/// Projected size ratio of an AVIF re-encode by source format.
struct CodecRatios {
    double jpeg = 0.50;
    double png = 0.30;
    double gif = 0.40;

    std::optional<double> ratio(ImageFormat source) const;
};

struct AnalyzerConfig {
    std::uint64_t oversized_image_bytes = 100 * 1024;
    std::size_t fold_images = 3;
    std::vector<std::string> dom_op_patterns = script::default_dom_op_patterns();
    /// Minimum fraction a minified projection must save to report bloat.
    double bloat_ratio = 0.10;
    CodecRatios codec_ratios;
    std::set<FindingKind> enabled{all_finding_kinds().begin(), all_finding_kinds().end()};
};

/// A stylesheet as seen by the analyzer: an external asset, or the text
/// of an inline `<style>` element located at `base` within the entry.
struct SheetSource {
    std::string asset_id;
    std::size_t base = 0;
    std::string_view text;
};

/// Local stylesheets reachable from the entry plus inline `<style>` blocks.
std::vector<SheetSource> stylesheet_sources(const SiteBundle& b);

/// Local script assets plus inline classic scripts of the entry.
std::vector<SheetSource> script_sources(const SiteBundle& b);

/// DOM-affecting operations across every script of the bundle.
std::size_t count_bundle_dom_ops(const SiteBundle& b, const std::vector<std::string>& patterns);
std::size_t count_bundle_dom_ops(const SiteBundle& b);

/// Class and id tokens that occur in script string literals; selectors that
/// name one of them may match elements created at runtime.
std::set<std::string> script_string_names(const SiteBundle& b);

/// Rules whose every selector matches no element of the entry document.
/// Spans are relative to the payload of the named asset.
std::vector<Finding> find_unused_css(const SiteBundle& b);

std::vector<Finding> detect_findings(const SiteBundle& b, const AnalyzerConfig& cfg = {});

} // namespace wattless
