#pragma once

#include "wattless/util.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattless {

enum class AssetClass { html, css, script, image, font, svg, other };

std::string_view to_string(AssetClass c);
AssetClass asset_class_from_string(std::string_view s);

/// Text classes carry a textual payload; the rest are opaque bytes.
bool is_text_class(AssetClass c);

struct Asset {
    std::string id; // root-relative normalized path, or the absolute URL for remote assets
    AssetClass cls = AssetClass::other;
    std::string url; // reference string as first discovered in the referring document
    std::uint64_t bytes = 0;
    std::string payload;
    /// Referenced but not locally present; `bytes` comes from the sidecar manifest.
    bool external = false;
};

/// One edge of the reference graph: `from` refers to `target` as `raw`.
struct Reference {
    std::string from;
    std::string raw;
    std::string target;

    friend bool operator==(const Reference&, const Reference&) = default;
    friend auto operator<=>(const Reference&, const Reference&) = default;
};

class BundleError : public Error {
public:
    using Error::Error;
};

struct SiteBundle {
    std::string entry;
    std::vector<Asset> assets; // entry first, then discovery order
    std::vector<Reference> references;

    const Asset* find(std::string_view id) const;
    Asset* find(std::string_view id);
    const Asset& entry_asset() const;
    Asset& entry_asset();

    /// Throws BundleError when an invariant does not hold.
    void validate() const;
};

struct WeightReport {
    std::uint64_t total_bytes = 0;
    std::map<AssetClass, std::uint64_t> per_class_bytes;
    std::size_t dom_ops = 0;
    std::size_t asset_count = 0;

    std::uint64_t class_bytes(AssetClass c) const;
    /// html + css + script bytes.
    std::uint64_t code_bytes() const;
};

struct LoadOptions {
    std::optional<std::string> entry_name;
};

inline constexpr std::string_view sidecar_manifest_name = "bundle.manifest.json";

SiteBundle load_bundle(const std::filesystem::path& root, const LoadOptions& options = {});

/// Same walk over an in-memory file map keyed by root-relative path. Sizes
/// of referenced files that are absent come from `external_bytes` or a
/// sidecar manifest entry in `files`.
SiteBundle bundle_from_files(const std::map<std::string, std::string>& files, const LoadOptions& options = {},
                             const std::map<std::string, std::uint64_t>& external_bytes = {});

WeightReport bundle_weight(const SiteBundle& bundle, std::size_t dom_ops);

struct EligibilityThresholds {
    std::uint64_t min_total_bytes = 600 * 1024; // strictly greater than
    std::size_t min_dom_ops = 10;               // at least
};

bool is_benchmark_eligible(const WeightReport& w, const EligibilityThresholds& t = {});

/// Writes into a staging directory and swaps it into place, so an existing
/// `out` is either fully replaced or left untouched.
void write_bundle(const SiteBundle& bundle, const std::filesystem::path& out);

/// Same entry, same asset set by id with equal class/external/bytes/payload,
/// and the same reference graph.
bool structurally_equal(const SiteBundle& a, const SiteBundle& b);

/// Class from extension first, then content sniffing.
AssetClass classify_asset(std::string_view path, std::string_view payload);

enum class ImageFormat { jpeg, png, gif, webp, avif, bmp, ico, svg, unknown };
std::string_view to_string(ImageFormat f);
ImageFormat image_format(const Asset& asset);

/// Raw reference strings in a document or stylesheet, document order.
std::vector<std::string> extract_references(const Asset& asset);

/// Resolves `raw` as referenced from asset `from_id`. Returns the target id and
/// whether it names a local (root-relative) path. Empty id means "not an asset"
/// (data: URIs, fragments, javascript: links).
struct ResolvedRef {
    std::string id;
    bool local = false;
};
ResolvedRef resolve_reference(std::string_view from_id, std::string_view raw);

/// Recomputes the reference graph from current payloads and drops assets that
/// are no longer reachable from the entry. New targets without an asset become
/// external assets of 0 bytes.
void relink(SiteBundle& bundle);

/// Path of `target_id` relative to the directory of `from_id`.
std::string relative_reference(std::string_view from_id, std::string_view target_id);

} // namespace wattless
