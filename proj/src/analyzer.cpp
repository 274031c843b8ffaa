#include "wattless/analyzer.hpp"

#include "wattless/minify.hpp"
#include "wattless/script.hpp"
#include "wattless/svg.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace wattless {

namespace {

struct KindName {
    FindingKind kind;
    std::string_view name;
};

constexpr KindName kind_names[] = {
    {FindingKind::oversized_image, "oversized_image"},
    {FindingKind::missing_lazy_loading, "missing_lazy_loading"},
    {FindingKind::blocking_script, "blocking_script"},
    {FindingKind::unused_css_rule, "unused_css_rule"},
    {FindingKind::console_logging, "console_logging"},
    {FindingKind::unused_font, "unused_font"},
    {FindingKind::bloated_svg, "bloated_svg"},
    {FindingKind::uncompressed_text, "uncompressed_text"},
};

struct Located {
    const html::Node* node;
    std::string path;
    std::vector<const html::Node*> ancestors;
};

void walk_paths(const html::Node& n, const std::string& prefix, std::vector<const html::Node*>& stack,
                std::vector<Located>& out)
{
    std::map<std::string, int> seen;
    for (const auto& c : n.children) {
        if (!c.is_element()) {
            continue;
        }
        std::string path = prefix + "/" + c.tag + "[" + std::to_string(++seen[c.tag]) + "]";
        out.push_back({&c, path, stack});
        stack.push_back(&c);
        walk_paths(c, path, stack, out);
        stack.pop_back();
    }
}

std::vector<Located> located_elements(const html::Node& dom)
{
    std::vector<Located> out;
    std::vector<const html::Node*> stack;
    walk_paths(dom, "", stack, out);
    return out;
}

bool classic_script_type(std::string_view type)
{
    std::string t = to_lower(trim(type));
    return t.empty() || t == "text/javascript" || t == "application/javascript" || t == "module"
        || t == "text/ecmascript" || t == "application/ecmascript";
}

const html::Node* raw_text_child(const html::Node& el)
{
    for (const auto& c : el.children) {
        if (c.kind == html::NodeKind::text) {
            return &c;
        }
    }
    return nullptr;
}

bool inside(const Located& l, std::string_view tag)
{
    return std::any_of(l.ancestors.begin(), l.ancestors.end(), [&](const html::Node* a) { return a->tag == tag; });
}

Locator node_locator(const Located& l)
{
    Locator loc;
    loc.node_path = l.path;
    std::size_t len = l.node->raw_open.empty() ? html::format_start_tag(*l.node).size() : l.node->raw_open.size();
    loc.span = css::Span{l.node->source_offset, len};
    return loc;
}

std::uint64_t projected_avif_bytes(std::uint64_t bytes, double ratio)
{
    return static_cast<std::uint64_t>(std::ceil(static_cast<double>(bytes) * ratio));
}

bool selector_named_in_scripts(const css::SelectorAst& sel, const std::set<std::string>& names)
{
    for (const auto& c : sel.compounds) {
        if (c.id && names.count(*c.id)) {
            return true;
        }
        for (const auto& cls : c.classes) {
            if (names.count(cls)) {
                return true;
            }
        }
    }
    return false;
}

void add_name_tokens(std::string_view text, std::set<std::string>& out)
{
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            out.insert(cur);
            cur.clear();
        }
    };
    for (char c : text) {
        bool word = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'
            || static_cast<unsigned char>(c) >= 0x80;
        if (word) {
            cur.push_back(c);
        } else {
            flush();
        }
    }
    flush();
}

std::vector<std::string> script_string_literals(const SiteBundle& b)
{
    std::vector<std::string> out;
    for (const auto& src : script_sources(b)) {
        for (const auto& t : script::tokenize(src.text)) {
            if (t.kind == script::TokenKind::string || t.kind == script::TokenKind::template_part) {
                out.emplace_back(t.text);
            }
        }
    }
    const Asset& entry = b.entry_asset();
    html::for_each_element(html::parse_html(entry.payload), [&](const html::Node& el) {
        for (const auto& a : el.attributes) {
            if (a.name.size() > 2 && a.name.starts_with("on")) {
                out.push_back(html::decode_entities(a.value));
            }
        }
    });
    return out;
}

} // namespace

std::string_view to_string(FindingKind k)
{
    for (const auto& kn : kind_names) {
        if (kn.kind == k) {
            return kn.name;
        }
    }
    return "unknown";
}

FindingKind finding_kind_from_string(std::string_view s)
{
    for (const auto& kn : kind_names) {
        if (kn.name == s) {
            return kn.kind;
        }
    }
    throw Error("unknown finding kind: " + std::string(s));
}

const std::vector<FindingKind>& all_finding_kinds()
{
    static const std::vector<FindingKind> kinds = [] {
        std::vector<FindingKind> v;
        for (const auto& kn : kind_names) {
            v.push_back(kn.kind);
        }
        return v;
    }();
    return kinds;
}

std::optional<double> CodecRatios::ratio(ImageFormat source) const
{
    switch (source) {
    case ImageFormat::jpeg:
        return jpeg;
    case ImageFormat::png:
        return png;
    case ImageFormat::gif:
        return gif;
    default:
        return std::nullopt;
    }
}

std::vector<SheetSource> stylesheet_sources(const SiteBundle& b)
{
    std::vector<SheetSource> out;
    for (const auto& a : b.assets) {
        if (a.cls == AssetClass::css && !a.external) {
            out.push_back({a.id, 0, a.payload});
        }
    }
    const Asset& entry = b.entry_asset();
    auto dom = html::parse_html(entry.payload);
    html::for_each_element(dom, [&](const html::Node& el) {
        if (el.tag == "style") {
            if (const html::Node* t = raw_text_child(el)) {
                out.push_back({entry.id, t->source_offset,
                               std::string_view(entry.payload).substr(t->source_offset, t->text.size())});
            }
        }
    });
    return out;
}

std::vector<SheetSource> script_sources(const SiteBundle& b)
{
    std::vector<SheetSource> out;
    for (const auto& a : b.assets) {
        if (a.cls == AssetClass::script && !a.external) {
            out.push_back({a.id, 0, a.payload});
        }
    }
    const Asset& entry = b.entry_asset();
    auto dom = html::parse_html(entry.payload);
    html::for_each_element(dom, [&](const html::Node& el) {
        if (el.tag == "script" && !el.has_attribute("src") && classic_script_type(el.attribute_value("type"))) {
            if (const html::Node* t = raw_text_child(el)) {
                out.push_back({entry.id, t->source_offset,
                               std::string_view(entry.payload).substr(t->source_offset, t->text.size())});
            }
        }
    });
    return out;
}

std::size_t count_bundle_dom_ops(const SiteBundle& b, const std::vector<std::string>& patterns)
{
    std::size_t n = 0;
    for (const auto& s : script_sources(b)) {
        n += script::count_dom_ops(s.text, patterns);
    }
    return n;
}

std::size_t count_bundle_dom_ops(const SiteBundle& b)
{
    return count_bundle_dom_ops(b, script::default_dom_op_patterns());
}

std::set<std::string> script_string_names(const SiteBundle& b)
{
    std::set<std::string> names;
    for (const auto& lit : script_string_literals(b)) {
        add_name_tokens(lit, names);
    }
    return names;
}

std::vector<Finding> find_unused_css(const SiteBundle& b)
{
    std::vector<Finding> out;
    auto dom = html::parse_html(b.entry_asset().payload);
    auto names = script_string_names(b);
    for (const auto& src : stylesheet_sources(b)) {
        auto sheet = css::parse_css(src.text);
        for (const css::CssRule* rule : sheet.rules()) {
            if (!rule->matchable) {
                continue;
            }
            bool unused = std::all_of(rule->selectors.begin(), rule->selectors.end(), [&](const css::SelectorAst& s) {
                if (s.assume_matches || selector_named_in_scripts(s, names)) {
                    return false;
                }
                return css::match_selector(s, dom).count == 0;
            });
            if (!unused) {
                continue;
            }
            Finding f;
            f.kind = FindingKind::unused_css_rule;
            f.asset_id = src.asset_id;
            f.locator.span = css::Span{src.base + rule->source_span.offset, rule->source_span.length};
            f.projected_bytes_saved = rule->source_span.length;
            std::string sel;
            for (const auto& s : rule->selectors) {
                sel += (sel.empty() ? "" : ",") + s.text;
            }
            f.note = "no element matches " + sel;
            out.push_back(std::move(f));
        }
    }
    return out;
}

namespace {

void find_unused_fonts(const SiteBundle& b, const std::vector<Finding>& unused_rules, std::vector<Finding>& out)
{
    std::set<std::pair<std::string, std::size_t>> dead;
    for (const auto& f : unused_rules) {
        dead.insert({f.asset_id, f.locator.span->offset});
    }
    std::set<std::string> used_families;
    auto note_value = [&](const css::Declaration& d) {
        std::string p = to_lower(d.property);
        if (p == "font-family" || p == "font") {
            for (auto& fam : css::font_families(d.value)) {
                used_families.insert(fam);
            }
        }
    };
    struct Face {
        std::string asset_id;
        css::Span span;
        std::string family;
        std::vector<std::string> targets;
    };
    std::vector<Face> faces;
    for (const auto& src : stylesheet_sources(b)) {
        auto sheet = css::parse_css(src.text);
        for (const css::CssRule* rule : sheet.rules()) {
            if (dead.count({src.asset_id, src.base + rule->source_span.offset})) {
                continue;
            }
            for (const auto& d : rule->declarations) {
                note_value(d);
            }
        }
        for (const css::Item* ff : sheet.font_faces()) {
            Face face;
            face.asset_id = src.asset_id;
            face.span = css::Span{src.base + ff->span.offset, ff->span.length};
            for (const auto& d : ff->declarations) {
                if (iequals(d.property, "font-family")) {
                    auto fams = css::font_families(d.value);
                    if (!fams.empty()) {
                        face.family = fams.front();
                    }
                }
            }
            std::string_view block = src.text.substr(ff->span.offset, ff->span.length);
            std::string from = src.asset_id;
            for (const auto& u : css::find_urls(block)) {
                auto r = resolve_reference(from, u.url);
                if (!r.id.empty()) {
                    face.targets.push_back(r.id);
                }
            }
            if (!face.family.empty()) {
                faces.push_back(std::move(face));
            }
        }
    }
    const Asset& entry = b.entry_asset();
    html::for_each_element(html::parse_html(entry.payload), [&](const html::Node& el) {
        if (el.has_attribute("style")) {
            auto sheet = css::parse_css("x{" + html::decode_entities(el.attribute_value("style")) + "}");
            for (const css::CssRule* r : sheet.rules()) {
                for (const auto& d : r->declarations) {
                    note_value(d);
                }
            }
        }
    });
    std::string literals;
    for (const auto& lit : script_string_literals(b)) {
        literals += to_lower(lit);
        literals += '\n';
    }
    auto is_used = [&](const Face& f) {
        return used_families.count(f.family) || literals.find(f.family) != std::string::npos;
    };
    std::set<std::string> live_targets;
    for (const auto& f : faces) {
        if (is_used(f)) {
            live_targets.insert(f.targets.begin(), f.targets.end());
        }
    }
    for (const auto& f : faces) {
        if (is_used(f)) {
            continue;
        }
        Finding finding;
        finding.kind = FindingKind::unused_font;
        finding.asset_id = f.asset_id;
        finding.locator.span = f.span;
        finding.projected_bytes_saved = f.span.length;
        std::set<std::string> counted;
        for (const auto& t : f.targets) {
            const Asset* a = b.find(t);
            if (a != nullptr && !live_targets.count(t) && counted.insert(t).second) {
                finding.projected_bytes_saved += a->bytes;
            }
        }
        finding.note = "font family '" + f.family + "' is never used";
        out.push_back(std::move(finding));
    }
}

} // namespace

std::vector<Finding> detect_findings(const SiteBundle& b, const AnalyzerConfig& cfg)
{
    std::vector<Finding> out;
    auto on = [&](FindingKind k) { return cfg.enabled.count(k) > 0; };
    const Asset& entry = b.entry_asset();
    auto dom = html::parse_html(entry.payload);
    auto elements = located_elements(dom);

    std::map<std::string, const Located*> first_ref;
    for (const auto& l : elements) {
        for (const char* attr : {"src", "href", "data", "poster"}) {
            if (l.node->has_attribute(attr)) {
                auto r = resolve_reference(entry.id, html::decode_entities(l.node->attribute_value(attr)));
                if (!r.id.empty()) {
                    first_ref.emplace(r.id, &l);
                }
            }
        }
    }

    if (on(FindingKind::oversized_image)) {
        for (const auto& a : b.assets) {
            if (a.cls != AssetClass::image) {
                continue;
            }
            ImageFormat fmt = image_format(a);
            bool modern = fmt == ImageFormat::avif || fmt == ImageFormat::webp || fmt == ImageFormat::svg;
            if (modern && a.bytes <= cfg.oversized_image_bytes) {
                continue;
            }
            Finding f;
            f.kind = FindingKind::oversized_image;
            f.asset_id = a.id;
            if (!a.external) {
                f.locator.span = css::Span{0, static_cast<std::size_t>(a.bytes)};
            }
            if (auto it = first_ref.find(a.id); it != first_ref.end()) {
                f.locator.node_path = it->second->path;
            }
            if (auto ratio = cfg.codec_ratios.ratio(fmt)) {
                f.projected_bytes_saved = a.bytes - std::min(a.bytes, projected_avif_bytes(a.bytes, *ratio));
            }
            f.note = std::string(to_string(fmt)) + " image of " + std::to_string(a.bytes) + " bytes";
            out.push_back(std::move(f));
        }
    }

    if (on(FindingKind::missing_lazy_loading)) {
        std::size_t index = 0;
        for (const auto& l : elements) {
            if (!l.node->is("img")) {
                continue;
            }
            if (index++ < cfg.fold_images) {
                continue;
            }
            if (iequals(trim(l.node->attribute_value("loading")), "lazy")) {
                continue;
            }
            Finding f;
            f.kind = FindingKind::missing_lazy_loading;
            f.asset_id = entry.id;
            f.locator = node_locator(l);
            auto r = resolve_reference(entry.id, html::decode_entities(l.node->attribute_value("src")));
            if (const Asset* img = r.id.empty() ? nullptr : b.find(r.id)) {
                f.projected_bytes_saved = img->bytes;
            }
            f.note = "image " + std::to_string(index) + " is below the fold and loads eagerly";
            out.push_back(std::move(f));
        }
    }

    if (on(FindingKind::blocking_script)) {
        for (const auto& l : elements) {
            const html::Node& el = *l.node;
            if (!el.is("script") || !el.has_attribute("src") || !inside(l, "head")) {
                continue;
            }
            if (el.has_attribute("defer") || el.has_attribute("async")
                || iequals(trim(el.attribute_value("type")), "module")) {
                continue;
            }
            Finding f;
            f.kind = FindingKind::blocking_script;
            f.asset_id = entry.id;
            f.locator = node_locator(l);
            f.note = "render-blocking script " + std::string(el.attribute_value("src"));
            out.push_back(std::move(f));
        }
    }

    std::vector<Finding> unused_rules = find_unused_css(b);
    if (on(FindingKind::unused_font)) {
        find_unused_fonts(b, unused_rules, out);
    }
    if (on(FindingKind::unused_css_rule)) {
        out.insert(out.end(), unused_rules.begin(), unused_rules.end());
    }

    if (on(FindingKind::console_logging)) {
        for (const auto& src : script_sources(b)) {
            auto tokens = script::tokenize(src.text);
            for (const auto& cs : script::find_console_statements(tokens)) {
                Finding f;
                f.kind = FindingKind::console_logging;
                f.asset_id = src.asset_id;
                f.locator.span = css::Span{src.base + cs.offset, cs.length};
                f.projected_bytes_saved = cs.length;
                f.note = "console statement";
                out.push_back(std::move(f));
            }
        }
    }

    for (const auto& a : b.assets) {
        if (a.external) {
            continue;
        }
        if (a.cls == AssetClass::svg && on(FindingKind::bloated_svg)) {
            auto opt = svg::optimize_svg(a.payload);
            if (opt && static_cast<double>(a.bytes - opt->size()) > cfg.bloat_ratio * static_cast<double>(a.bytes)) {
                Finding f;
                f.kind = FindingKind::bloated_svg;
                f.asset_id = a.id;
                f.locator.span = css::Span{0, static_cast<std::size_t>(a.bytes)};
                f.projected_bytes_saved = a.bytes - opt->size();
                f.note = "svg markup can shrink by " + std::to_string(f.projected_bytes_saved) + " bytes";
                out.push_back(std::move(f));
            }
        }
        if ((a.cls == AssetClass::css || a.cls == AssetClass::script) && on(FindingKind::uncompressed_text)) {
            std::string min = a.cls == AssetClass::css ? minify_css(a.payload) : minify_script(a.payload, false);
            if (static_cast<double>(a.bytes - min.size()) > cfg.bloat_ratio * static_cast<double>(a.bytes)) {
                Finding f;
                f.kind = FindingKind::uncompressed_text;
                f.asset_id = a.id;
                f.locator.span = css::Span{0, static_cast<std::size_t>(a.bytes)};
                f.projected_bytes_saved = a.bytes - min.size();
                f.note = "unminified " + std::string(to_string(a.cls));
                out.push_back(std::move(f));
            }
        }
    }

    std::stable_sort(out.begin(), out.end(), [](const Finding& x, const Finding& y) {
        std::size_t ox = x.locator.span ? x.locator.span->offset : 0;
        std::size_t oy = y.locator.span ? y.locator.span->offset : 0;
        return std::tie(x.asset_id, ox, x.kind, x.locator.node_path) < std::tie(y.asset_id, oy, y.kind, y.locator.node_path);
    });
    return out;
}

} // namespace wattless
