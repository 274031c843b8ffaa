#include "wattless/bundle.hpp"

#include "wattless/css.hpp"
#include "wattless/html.hpp"

#include <json.hpp>

#include <algorithm>
#include <deque>
#include <functional>
#include <random>
#include <set>

namespace fs = std::filesystem;

namespace wattless {

namespace {

struct ClassName {
    AssetClass cls;
    std::string_view name;
};

constexpr ClassName class_names[] = {
    {AssetClass::html, "html"},   {AssetClass::css, "css"}, {AssetClass::script, "script"},
    {AssetClass::image, "image"}, {AssetClass::font, "font"}, {AssetClass::svg, "svg"},
    {AssetClass::other, "other"},
};

std::string extension_of(std::string_view path)
{
    std::size_t cut = path.find_first_of("?#");
    if (cut != std::string_view::npos) {
        path = path.substr(0, cut);
    }
    std::size_t slash = path.find_last_of('/');
    std::size_t dot = path.find_last_of('.');
    if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash)) {
        return {};
    }
    return to_lower(path.substr(dot + 1));
}

bool starts_with_bytes(std::string_view s, std::string_view magic)
{
    return s.size() >= magic.size() && s.substr(0, magic.size()) == magic;
}

ImageFormat sniff_image(std::string_view p)
{
    using namespace std::string_view_literals;
    if (starts_with_bytes(p, "\x89PNG"sv)) {
        return ImageFormat::png;
    }
    if (starts_with_bytes(p, "\xFF\xD8\xFF"sv)) {
        return ImageFormat::jpeg;
    }
    if (starts_with_bytes(p, "GIF8"sv)) {
        return ImageFormat::gif;
    }
    if (p.size() >= 12 && p.substr(0, 4) == "RIFF" && p.substr(8, 4) == "WEBP") {
        return ImageFormat::webp;
    }
    if (p.size() >= 12 && p.substr(4, 4) == "ftyp" && (p.substr(8, 4) == "avif" || p.substr(8, 4) == "avis")) {
        return ImageFormat::avif;
    }
    if (starts_with_bytes(p, "BM"sv)) {
        return ImageFormat::bmp;
    }
    if (starts_with_bytes(p, "\0\0\1\0"sv)) {
        return ImageFormat::ico;
    }
    return ImageFormat::unknown;
}

ImageFormat format_from_extension(std::string_view ext)
{
    if (ext == "jpg" || ext == "jpeg" || ext == "jfif") {
        return ImageFormat::jpeg;
    }
    if (ext == "png") {
        return ImageFormat::png;
    }
    if (ext == "gif") {
        return ImageFormat::gif;
    }
    if (ext == "webp") {
        return ImageFormat::webp;
    }
    if (ext == "avif") {
        return ImageFormat::avif;
    }
    if (ext == "bmp") {
        return ImageFormat::bmp;
    }
    if (ext == "ico") {
        return ImageFormat::ico;
    }
    if (ext == "svg") {
        return ImageFormat::svg;
    }
    return ImageFormat::unknown;
}

bool has_scheme(std::string_view raw)
{
    if (raw.starts_with("//")) {
        return true;
    }
    std::size_t colon = raw.find(':');
    if (colon == std::string_view::npos || colon == 0) {
        return false;
    }
    for (std::size_t i = 0; i < colon; ++i) {
        char c = raw[i];
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (i > 0 && ((c >= '0' && c <= '9') || c == '+'
                                                                                    || c == '-' || c == '.'));
        if (!ok) {
            return false;
        }
    }
    return true;
}

std::string percent_decode(std::string_view s)
{
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1]))
            && std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
            out.push_back(static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16)));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

std::string dirname_of(std::string_view id)
{
    std::size_t slash = id.find_last_of('/');
    return slash == std::string_view::npos ? std::string{} : std::string(id.substr(0, slash));
}

void add_srcset(std::string_view v, std::vector<std::string>& out)
{
    std::size_t i = 0;
    while (i < v.size()) {
        while (i < v.size() && (is_space(v[i]) || v[i] == ',')) {
            ++i;
        }
        std::size_t start = i;
        while (i < v.size() && !is_space(v[i])) {
            ++i;
        }
        std::string_view url = v.substr(start, i - start);
        // a trailing comma belongs to the separator, not the URL
        while (!url.empty() && url.back() == ',') {
            url.remove_suffix(1);
        }
        if (!url.empty()) {
            out.emplace_back(url);
        }
        while (i < v.size() && v[i] != ',') {
            ++i;
        }
    }
}

bool link_rel_is_asset(std::string_view rel)
{
    static constexpr std::string_view kinds[] = {"stylesheet", "icon", "preload", "modulepreload",
                                                 "prefetch", "manifest", "apple-touch-icon"};
    for (auto tok : split_ws(rel)) {
        for (auto k : kinds) {
            if (iequals(tok, k)) {
                return true;
            }
        }
    }
    return false;
}

std::vector<std::string> html_references(std::string_view text)
{
    std::vector<std::string> out;
    auto dom = html::parse_html(text);
    auto add = [&](std::string_view raw) {
        std::string v = html::decode_entities(trim(raw));
        if (!v.empty()) {
            out.push_back(std::move(v));
        }
    };
    html::for_each_element(dom, [&](const html::Node& el) {
        const std::string& t = el.tag;
        if (t == "link") {
            if (link_rel_is_asset(el.attribute_value("rel")) && el.has_attribute("href")) {
                add(el.attribute_value("href"));
            }
        } else if (t == "script" || t == "audio" || t == "track" || t == "embed" || t == "iframe") {
            if (t != "iframe" && el.has_attribute("src")) {
                add(el.attribute_value("src"));
            }
        } else if (t == "img" || t == "source") {
            if (el.has_attribute("src")) {
                add(el.attribute_value("src"));
            }
            if (el.has_attribute("srcset")) {
                std::vector<std::string> s;
                add_srcset(html::decode_entities(el.attribute_value("srcset")), s);
                out.insert(out.end(), s.begin(), s.end());
            }
        } else if (t == "video") {
            if (el.has_attribute("src")) {
                add(el.attribute_value("src"));
            }
            if (el.has_attribute("poster")) {
                add(el.attribute_value("poster"));
            }
        } else if (t == "input") {
            if (iequals(el.attribute_value("type"), "image") && el.has_attribute("src")) {
                add(el.attribute_value("src"));
            }
        } else if (t == "object") {
            if (el.has_attribute("data")) {
                add(el.attribute_value("data"));
            }
        } else if (t == "style") {
            for (const auto& c : el.children) {
                if (c.kind == html::NodeKind::text) {
                    for (auto& u : css::find_urls(c.text)) {
                        add(u.url);
                    }
                }
            }
        }
        if (el.has_attribute("style")) {
            for (auto& u : css::find_urls(html::decode_entities(el.attribute_value("style")))) {
                add(u.url);
            }
        }
    });
    return out;
}

std::string random_suffix()
{
    std::random_device rd;
    std::uniform_int_distribution<unsigned> dist(0, 0xffffff);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06x", dist(rd));
    return buf;
}

} // namespace

std::string_view to_string(AssetClass c)
{
    for (const auto& cn : class_names) {
        if (cn.cls == c) {
            return cn.name;
        }
    }
    return "other";
}

AssetClass asset_class_from_string(std::string_view s)
{
    for (const auto& cn : class_names) {
        if (cn.name == s) {
            return cn.cls;
        }
    }
    throw Error("unknown asset class: " + std::string(s));
}

bool is_text_class(AssetClass c)
{
    return c == AssetClass::html || c == AssetClass::css || c == AssetClass::script || c == AssetClass::svg;
}

std::string_view to_string(ImageFormat f)
{
    switch (f) {
    case ImageFormat::jpeg:
        return "jpeg";
    case ImageFormat::png:
        return "png";
    case ImageFormat::gif:
        return "gif";
    case ImageFormat::webp:
        return "webp";
    case ImageFormat::avif:
        return "avif";
    case ImageFormat::bmp:
        return "bmp";
    case ImageFormat::ico:
        return "ico";
    case ImageFormat::svg:
        return "svg";
    case ImageFormat::unknown:
        break;
    }
    return "unknown";
}

const Asset* SiteBundle::find(std::string_view id) const
{
    for (const auto& a : assets) {
        if (a.id == id) {
            return &a;
        }
    }
    return nullptr;
}

Asset* SiteBundle::find(std::string_view id)
{
    return const_cast<Asset*>(std::as_const(*this).find(id));
}

const Asset& SiteBundle::entry_asset() const
{
    const Asset* a = find(entry);
    if (a == nullptr) {
        throw BundleError("bundle has no entry asset");
    }
    return *a;
}

Asset& SiteBundle::entry_asset()
{
    return const_cast<Asset&>(std::as_const(*this).entry_asset());
}

void SiteBundle::validate() const
{
    const Asset& e = entry_asset();
    if (e.cls != AssetClass::html || e.external) {
        throw BundleError("entry must be a local html asset");
    }
    std::set<std::string> ids;
    for (const auto& a : assets) {
        if (!ids.insert(a.id).second) {
            throw BundleError("duplicate asset id: " + a.id);
        }
        if (!a.external && a.bytes != a.payload.size()) {
            throw BundleError("byte count does not match payload: " + a.id);
        }
        if (a.external && !a.payload.empty()) {
            throw BundleError("external asset carries a payload: " + a.id);
        }
    }
    for (const auto& r : references) {
        if (!ids.count(r.from) || !ids.count(r.target)) {
            throw BundleError("reference to unknown asset: " + r.raw);
        }
    }
}

std::uint64_t WeightReport::class_bytes(AssetClass c) const
{
    auto it = per_class_bytes.find(c);
    return it == per_class_bytes.end() ? 0 : it->second;
}

std::uint64_t WeightReport::code_bytes() const
{
    return class_bytes(AssetClass::html) + class_bytes(AssetClass::css) + class_bytes(AssetClass::script);
}

AssetClass classify_asset(std::string_view path, std::string_view payload)
{
    std::string ext = extension_of(path);
    if (ext == "html" || ext == "htm" || ext == "xhtml") {
        return AssetClass::html;
    }
    if (ext == "css") {
        return AssetClass::css;
    }
    if (ext == "js" || ext == "mjs" || ext == "cjs") {
        return AssetClass::script;
    }
    if (ext == "svg") {
        return AssetClass::svg;
    }
    if (ext == "woff" || ext == "woff2" || ext == "ttf" || ext == "otf" || ext == "eot") {
        return AssetClass::font;
    }
    if (format_from_extension(ext) != ImageFormat::unknown) {
        return AssetClass::image;
    }
    std::string_view head = payload.substr(0, std::min<std::size_t>(payload.size(), 1024));
    if (head.starts_with("\xEF\xBB\xBF")) {
        head.remove_prefix(3);
    }
    std::string_view t = trim(head);
    if (istarts_with(t, "<!doctype html") || istarts_with(t, "<html")) {
        return AssetClass::html;
    }
    if (istarts_with(t, "<svg") || (istarts_with(t, "<?xml") && t.find("<svg") != std::string_view::npos)) {
        return AssetClass::svg;
    }
    if (sniff_image(payload) != ImageFormat::unknown) {
        return AssetClass::image;
    }
    if (payload.starts_with("wOFF") || payload.starts_with("wOF2") || payload.starts_with("OTTO")
        || payload.starts_with(std::string_view("\0\1\0\0", 4))) {
        return AssetClass::font;
    }
    return AssetClass::other;
}

ImageFormat image_format(const Asset& asset)
{
    ImageFormat f = format_from_extension(extension_of(asset.id));
    if (f != ImageFormat::unknown) {
        return f;
    }
    return sniff_image(asset.payload);
}

std::vector<std::string> extract_references(const Asset& asset)
{
    if (asset.external) {
        return {};
    }
    if (asset.cls == AssetClass::html) {
        return html_references(asset.payload);
    }
    if (asset.cls == AssetClass::css) {
        std::vector<std::string> out;
        for (auto& u : css::find_urls(asset.payload)) {
            std::string v(trim(u.url));
            if (!v.empty()) {
                out.push_back(std::move(v));
            }
        }
        return out;
    }
    return {};
}

ResolvedRef resolve_reference(std::string_view from_id, std::string_view raw)
{
    raw = trim(raw);
    if (raw.empty() || raw.front() == '#' || istarts_with(raw, "data:") || istarts_with(raw, "javascript:")
        || istarts_with(raw, "mailto:") || istarts_with(raw, "tel:") || istarts_with(raw, "about:")
        || istarts_with(raw, "blob:")) {
        return {};
    }
    if (has_scheme(raw)) {
        return {std::string(raw), false};
    }
    std::string_view path = raw.substr(0, std::min(raw.find_first_of("?#"), raw.size()));
    std::string base;
    if (path.starts_with("/")) {
        path.remove_prefix(1);
    } else {
        base = dirname_of(from_id);
    }
    std::string decoded = percent_decode(path);
    std::vector<std::string> segs;
    auto push = [&](std::string_view seg) -> bool {
        if (seg.empty() || seg == ".") {
            return true;
        }
        if (seg == "..") {
            if (segs.empty()) {
                return false;
            }
            segs.pop_back();
            return true;
        }
        segs.emplace_back(seg);
        return true;
    };
    for (const std::string* part : {&base, &decoded}) {
        std::string_view s = *part;
        std::size_t i = 0;
        while (i <= s.size()) {
            std::size_t j = std::min(s.find('/', i), s.size());
            if (!push(s.substr(i, j - i))) {
                return {std::string(raw), false}; // escapes the bundle root
            }
            i = j + 1;
        }
    }
    if (segs.empty()) {
        return {};
    }
    std::string id;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        if (i) {
            id += '/';
        }
        id += segs[i];
    }
    return {id, true};
}

std::string relative_reference(std::string_view from_id, std::string_view target_id)
{
    std::string from_dir = dirname_of(from_id);
    if (from_dir.empty()) {
        return std::string(target_id);
    }
    std::vector<std::string_view> a;
    std::vector<std::string_view> b;
    auto split = [](std::string_view s, std::vector<std::string_view>& out) {
        std::size_t i = 0;
        while (i <= s.size()) {
            std::size_t j = std::min(s.find('/', i), s.size());
            out.push_back(s.substr(i, j - i));
            i = j + 1;
        }
    };
    split(from_dir, a);
    split(target_id, b);
    std::size_t common = 0;
    while (common < a.size() && common + 1 < b.size() && a[common] == b[common]) {
        ++common;
    }
    std::string out;
    for (std::size_t i = common; i < a.size(); ++i) {
        out += "../";
    }
    for (std::size_t i = common; i < b.size(); ++i) {
        out += b[i];
        if (i + 1 < b.size()) {
            out += '/';
        }
    }
    return out;
}

namespace {

using FileReader = std::function<std::optional<std::string>(const std::string& id)>;

std::map<std::string, std::uint64_t> parse_sidecar(std::string_view text, const std::string& where)
{
    std::map<std::string, std::uint64_t> out;
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw BundleError("malformed sidecar manifest: " + where);
    }
    for (auto& [k, v] : j.items()) {
        if (v.is_number_unsigned() || v.is_number_integer()) {
            out[k] = v.get<std::uint64_t>();
        }
    }
    return out;
}

std::string choose_entry(std::vector<std::string> candidates, const std::string& where)
{
    if (candidates.empty()) {
        throw BundleError("no entry html in " + where);
    }
    std::sort(candidates.begin(), candidates.end());
    if (candidates.size() > 1) {
        throw BundleError("ambiguous entry in " + where + ": " + candidates[0] + ", " + candidates[1]);
    }
    return candidates.front();
}

/// Reference-graph walk shared by the directory and in-memory loaders.
SiteBundle assemble(const std::string& entry_name, std::string entry_payload,
                    const std::map<std::string, std::uint64_t>& sidecar, const FileReader& read)
{
    SiteBundle b;
    Asset entry;
    entry.id = entry_name;
    entry.url = entry_name;
    entry.cls = AssetClass::html;
    entry.payload = std::move(entry_payload);
    entry.bytes = entry.payload.size();
    b.entry = entry.id;
    b.assets.push_back(std::move(entry));

    std::deque<std::string> queue{b.entry};
    while (!queue.empty()) {
        std::string from = queue.front();
        queue.pop_front();
        std::vector<std::string> refs = extract_references(*b.find(from));
        for (const auto& raw : refs) {
            ResolvedRef r = resolve_reference(from, raw);
            if (r.id.empty()) {
                continue;
            }
            b.references.push_back({from, raw, r.id});
            if (b.find(r.id) != nullptr) {
                continue;
            }
            Asset a;
            a.id = r.id;
            a.url = raw;
            std::optional<std::string> data;
            if (r.local && r.id != sidecar_manifest_name) {
                data = read(r.id);
            }
            if (data) {
                a.payload = std::move(*data);
                a.bytes = a.payload.size();
                a.cls = classify_asset(r.id, a.payload);
                if (a.cls == AssetClass::html) {
                    a.cls = AssetClass::other; // only the entry is a document
                }
                queue.push_back(a.id);
            } else {
                a.external = true;
                a.cls = classify_asset(r.id, {});
                if (auto it = sidecar.find(raw); it != sidecar.end()) {
                    a.bytes = it->second;
                } else if (auto it2 = sidecar.find(r.id); it2 != sidecar.end()) {
                    a.bytes = it2->second;
                }
            }
            b.assets.push_back(std::move(a));
        }
    }
    std::sort(b.references.begin(), b.references.end());
    b.references.erase(std::unique(b.references.begin(), b.references.end()), b.references.end());
    b.validate();
    return b;
}

} // namespace

SiteBundle load_bundle(const fs::path& root, const LoadOptions& options)
{
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw BundleError("not a directory: " + root.string());
    }
    std::string entry_name;
    if (options.entry_name) {
        entry_name = *options.entry_name;
        if (!fs::is_regular_file(root / entry_name)) {
            throw BundleError("entry not found: " + (root / entry_name).string());
        }
    } else {
        std::vector<std::string> candidates;
        for (const auto& de : fs::directory_iterator(root)) {
            if (de.is_regular_file() && to_lower(de.path().extension().string()) == ".html") {
                candidates.push_back(de.path().filename().string());
            }
        }
        entry_name = choose_entry(std::move(candidates), root.string());
    }
    std::map<std::string, std::uint64_t> sidecar;
    if (fs::path p = root / sidecar_manifest_name; fs::exists(p)) {
        sidecar = parse_sidecar(read_file(p), p.string());
    }
    return assemble(entry_name, read_file(root / entry_name), sidecar, [&](const std::string& id) -> std::optional<std::string> {
        std::error_code e;
        fs::path p = root / fs::path(id);
        if (!fs::is_regular_file(p, e)) {
            return std::nullopt;
        }
        return read_file(p);
    });
}

SiteBundle bundle_from_files(const std::map<std::string, std::string>& files, const LoadOptions& options,
                             const std::map<std::string, std::uint64_t>& external_bytes)
{
    std::string entry_name;
    if (options.entry_name) {
        entry_name = *options.entry_name;
        if (!files.count(entry_name)) {
            throw BundleError("entry not found: " + entry_name);
        }
    } else {
        std::vector<std::string> candidates;
        for (const auto& [id, data] : files) {
            if (id.find('/') == std::string::npos && to_lower(fs::path(id).extension().string()) == ".html") {
                candidates.push_back(id);
            }
        }
        entry_name = choose_entry(std::move(candidates), "upload");
    }
    std::map<std::string, std::uint64_t> sidecar = external_bytes;
    if (auto it = files.find(std::string(sidecar_manifest_name)); it != files.end()) {
        for (const auto& [k, v] : parse_sidecar(it->second, "upload")) {
            sidecar.emplace(k, v);
        }
    }
    return assemble(entry_name, files.at(entry_name), sidecar, [&](const std::string& id) -> std::optional<std::string> {
        auto it = files.find(id);
        if (it == files.end()) {
            return std::nullopt;
        }
        return it->second;
    });
}

WeightReport bundle_weight(const SiteBundle& b, std::size_t dom_ops)
{
    WeightReport w;
    w.dom_ops = dom_ops;
    w.asset_count = b.assets.size();
    for (const auto& a : b.assets) {
        w.per_class_bytes[a.cls] += a.bytes;
        w.total_bytes += a.bytes;
    }
    return w;
}

bool is_benchmark_eligible(const WeightReport& w, const EligibilityThresholds& t)
{
    return w.total_bytes > t.min_total_bytes && w.dom_ops >= t.min_dom_ops;
}

void write_bundle(const SiteBundle& b, const fs::path& out)
{
    b.validate();
    fs::path target = fs::absolute(out);
    fs::path parent = target.parent_path();
    fs::path staging = parent / (target.filename().string() + ".staging-" + random_suffix());
    std::error_code ec;
    try {
        fs::create_directories(parent);
        fs::create_directory(staging);
        nlohmann::json sidecar = nlohmann::json::object();
        for (const auto& a : b.assets) {
            if (a.external) {
                sidecar[a.id] = a.bytes;
                continue;
            }
            fs::path p = staging / fs::path(a.id);
            fs::create_directories(p.parent_path());
            write_file(p, a.payload);
        }
        if (!sidecar.empty()) {
            write_file(staging / sidecar_manifest_name, sidecar.dump(2) + "\n");
        }
        if (fs::exists(target)) {
            fs::path backup = parent / (target.filename().string() + ".old-" + random_suffix());
            fs::rename(target, backup);
            try {
                fs::rename(staging, target);
            } catch (...) {
                fs::rename(backup, target, ec);
                throw;
            }
            fs::remove_all(backup, ec);
        } else {
            fs::rename(staging, target);
        }
    } catch (const fs::filesystem_error& e) {
        fs::remove_all(staging, ec);
        throw IoError(std::string("cannot write bundle: ") + e.what());
    } catch (const IoError&) {
        fs::remove_all(staging, ec);
        throw;
    }
}

bool structurally_equal(const SiteBundle& a, const SiteBundle& b)
{
    if (a.entry != b.entry || a.assets.size() != b.assets.size() || a.references != b.references) {
        return false;
    }
    for (const auto& x : a.assets) {
        const Asset* y = b.find(x.id);
        if (y == nullptr || y->cls != x.cls || y->external != x.external || y->bytes != x.bytes
            || y->payload != x.payload) {
            return false;
        }
    }
    return true;
}

void relink(SiteBundle& b)
{
    std::vector<Reference> refs;
    std::set<std::string> reachable{b.entry};
    std::deque<std::string> queue{b.entry};
    std::vector<Asset> added;
    while (!queue.empty()) {
        std::string from = queue.front();
        queue.pop_front();
        const Asset* src = b.find(from);
        if (src == nullptr) {
            for (const auto& a : added) {
                if (a.id == from) {
                    src = &a;
                }
            }
        }
        if (src == nullptr) {
            continue;
        }
        for (const auto& raw : extract_references(*src)) {
            ResolvedRef r = resolve_reference(from, raw);
            if (r.id.empty()) {
                continue;
            }
            refs.push_back({from, raw, r.id});
            if (!reachable.insert(r.id).second) {
                continue;
            }
            if (b.find(r.id) == nullptr) {
                Asset a;
                a.id = r.id;
                a.url = raw;
                a.external = true;
                a.cls = classify_asset(r.id, {});
                added.push_back(std::move(a));
            } else {
                queue.push_back(r.id);
            }
        }
    }
    std::vector<Asset> kept;
    for (auto& a : b.assets) {
        if (reachable.count(a.id)) {
            kept.push_back(std::move(a));
        }
    }
    for (auto& a : added) {
        kept.push_back(std::move(a));
    }
    b.assets = std::move(kept);
    std::sort(refs.begin(), refs.end());
    refs.erase(std::unique(refs.begin(), refs.end()), refs.end());
    b.references = std::move(refs);
}

} // namespace wattless
