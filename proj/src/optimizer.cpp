#include "wattless/optimizer.hpp"

#include "wattless/minify.hpp"
#include "wattless/script.hpp"
#include "wattless/svg.hpp"

#include <algorithm>
#include <cmath>

namespace wattless {

namespace {

struct KindName {
    TransformKind kind;
    std::string_view name;
};

constexpr KindName kind_names[] = {
    {TransformKind::minify_html, "minify_html"},
    {TransformKind::minify_css, "minify_css"},
    {TransformKind::strip_unused_css, "strip_unused_css"},
    {TransformKind::minify_script, "minify_script"},
    {TransformKind::strip_console, "strip_console"},
    {TransformKind::optimize_svg, "optimize_svg"},
    {TransformKind::defer_script, "defer_script"},
    {TransformKind::lazy_image, "lazy_image"},
    {TransformKind::image_conversion_plan, "image_conversion_plan"},
    {TransformKind::font_subset_plan, "font_subset_plan"},
    {TransformKind::inline_critical_css, "inline_critical_css"},
};

bool classic_script(const html::Node& el)
{
    std::string t = to_lower(trim(el.attribute_value("type")));
    return t.empty() || t == "text/javascript" || t == "application/javascript" || t == "text/ecmascript"
        || t == "application/ecmascript";
}

bool module_script(const html::Node& el)
{
    return iequals(trim(el.attribute_value("type")), "module");
}

std::string last_segment(std::string_view id)
{
    std::size_t s = id.find_last_of('/');
    return std::string(s == std::string_view::npos ? id : id.substr(s + 1));
}

std::string with_extension(std::string_view id, std::string_view ext)
{
    std::size_t slash = id.find_last_of('/');
    std::size_t dot = id.find_last_of('.');
    if (dot == std::string_view::npos || (slash != std::string_view::npos && dot < slash)) {
        return std::string(id) + std::string(ext);
    }
    return std::string(id.substr(0, dot)) + std::string(ext);
}

/// The reference `raw` (which resolves to old_id from `from`) rewritten to new_id.
std::string rewrite_raw(std::string_view raw, std::string_view from, std::string_view old_id,
                        std::string_view new_id)
{
    std::size_t cut = std::min(raw.find_first_of("?#"), raw.size());
    std::string_view path = raw.substr(0, cut);
    std::string_view suffix = raw.substr(cut);
    std::string old_name = last_segment(old_id);
    if (path.ends_with(old_name)) {
        std::string out(path.substr(0, path.size() - old_name.size()));
        out += last_segment(new_id);
        out += suffix;
        if (resolve_reference(from, out).id == new_id) {
            return out;
        }
    }
    return relative_reference(from, new_id) + std::string(suffix);
}

/// Rewrites url() references to old_id inside CSS text.
bool retarget_css(std::string& text, std::string_view from, std::string_view old_id, std::string_view new_id)
{
    auto urls = css::find_urls(text);
    bool changed = false;
    for (auto it = urls.rbegin(); it != urls.rend(); ++it) {
        if (resolve_reference(from, it->url).id == old_id) {
            text.replace(it->span.offset, it->span.length, rewrite_raw(it->url, from, old_id, new_id));
            changed = true;
        }
    }
    return changed;
}

std::string retarget_srcset(std::string_view value, std::string_view from, std::string_view old_id,
                            std::string_view new_id)
{
    std::string out;
    std::size_t i = 0;
    while (i < value.size()) {
        std::size_t start = i;
        while (i < value.size() && (is_space(value[i]) || value[i] == ',')) {
            ++i;
        }
        out.append(value.substr(start, i - start));
        std::size_t u = i;
        while (i < value.size() && !is_space(value[i])) {
            ++i;
        }
        std::string_view url = value.substr(u, i - u);
        std::string_view trailing;
        while (!url.empty() && url.back() == ',') {
            url.remove_suffix(1);
            trailing = value.substr(u + url.size(), i - u - url.size());
        }
        if (!url.empty() && resolve_reference(from, url).id == old_id) {
            out += rewrite_raw(url, from, old_id, new_id);
        } else {
            out.append(url);
        }
        out.append(trailing);
        std::size_t d = i;
        while (i < value.size() && value[i] != ',') {
            ++i;
        }
        out.append(value.substr(d, i - d));
    }
    return out;
}

bool retarget_html(html::Node& node, std::string_view from, std::string_view old_id, std::string_view new_id)
{
    bool changed = false;
    for (auto& c : node.children) {
        if (c.kind != html::NodeKind::element) {
            continue;
        }
        for (const char* name : {"src", "href", "poster", "data"}) {
            const html::Attribute* a = c.attribute(name);
            if (a == nullptr || a->value.find('&') != std::string::npos) {
                continue;
            }
            std::string raw(trim(a->value));
            if (!raw.empty() && resolve_reference(from, raw).id == old_id) {
                c.set_attribute(name, rewrite_raw(raw, from, old_id, new_id));
                changed = true;
            }
        }
        if (const html::Attribute* a = c.attribute("srcset"); a != nullptr && a->value.find('&') == std::string::npos) {
            std::string v = retarget_srcset(a->value, from, old_id, new_id);
            if (v != a->value) {
                c.set_attribute("srcset", v);
                changed = true;
            }
        }
        if (const html::Attribute* a = c.attribute("style"); a != nullptr && a->value.find('&') == std::string::npos) {
            std::string v = a->value;
            if (retarget_css(v, from, old_id, new_id)) {
                c.set_attribute("style", v);
                changed = true;
            }
        }
        if (c.tag == "style") {
            for (auto& t : c.children) {
                if (t.kind == html::NodeKind::text) {
                    changed = retarget_css(t.text, from, old_id, new_id) || changed;
                }
            }
        }
        changed = retarget_html(c, from, old_id, new_id) || changed;
    }
    return changed;
}

/// Points every reference to old_id at new_id; returns false if one remains.
bool retarget(SiteBundle& b, const std::string& old_id, const std::string& new_id)
{
    for (auto& a : b.assets) {
        if (a.external) {
            continue;
        }
        if (a.id == b.entry) {
            auto dom = html::parse_html(a.payload);
            if (retarget_html(dom, a.id, old_id, new_id)) {
                a.payload = html::serialize(dom);
                a.bytes = a.payload.size();
            }
        } else if (a.cls == AssetClass::css) {
            if (retarget_css(a.payload, a.id, old_id, new_id)) {
                a.bytes = a.payload.size();
            }
        }
    }
    relink(b);
    return b.find(old_id) == nullptr;
}

void set_payload(Asset& a, std::string text)
{
    a.payload = std::move(text);
    a.bytes = a.payload.size();
}

/// Applies `fn` to the text of each inline element selected by `pick`.
template <typename Pick, typename Fn>
bool edit_inline_text(Asset& entry, Pick pick, Fn fn)
{
    auto dom = html::parse_html(entry.payload);
    bool changed = false;
    html::for_each_element(dom, [&](html::Node& el) {
        if (!pick(el)) {
            return;
        }
        for (auto& c : el.children) {
            if (c.kind == html::NodeKind::text) {
                std::string out = fn(c.text);
                if (out != c.text) {
                    c.text = std::move(out);
                    changed = true;
                }
            }
        }
    });
    if (changed) {
        set_payload(entry, html::serialize(dom));
    }
    return changed;
}

bool is_inline_classic_script(const html::Node& el)
{
    return el.tag == "script" && !el.has_attribute("src") && classic_script(el);
}

/// Mutation of a candidate bundle; returns a note when the step is skipped.
using Mutation = std::function<std::optional<std::string>(SiteBundle&, std::map<std::string, std::string>&)>;

class Runner {
public:
    Runner(const SiteBundle& b, const PipelineConfig& cfg) : b_(b), cfg_(cfg)
    {
        dom_ops_ = count_bundle_dom_ops(b_, cfg_.analyzer.dom_op_patterns);
        log_.total_bytes_before = bundle_weight(b_, 0).total_bytes;
    }

    bool enabled(TransformKind k) const { return cfg_.enabled.count(k) > 0; }

    void step(TransformKind kind, const std::string& target, const Mutation& mutate)
    {
        TransformationRecord rec;
        rec.kind = kind;
        rec.asset_id = target;
        SiteBundle cand = b_;
        std::optional<std::string> skipped;
        try {
            skipped = mutate(cand, rec.detail);
            if (!skipped) {
                relink(cand);
                cand.validate();
            }
        } catch (const std::exception& e) {
            skipped = std::string("error: ") + e.what();
        }
        if (skipped) {
            const Asset* a = b_.find(target);
            rec.bytes_before = rec.bytes_after = a ? a->bytes : 0;
            rec.note = "skipped: " + *skipped;
            log_.records.push_back(std::move(rec));
            return;
        }
        std::vector<std::string> affected;
        for (const auto& a : b_.assets) {
            const Asset* c = cand.find(a.id);
            if (c == nullptr || c->bytes != a.bytes || c->payload != a.payload || c->external != a.external) {
                affected.push_back(a.id);
                rec.bytes_before += a.bytes;
                if (c != nullptr) {
                    rec.bytes_after += c->bytes;
                }
            }
        }
        for (const auto& c : cand.assets) {
            if (b_.find(c.id) == nullptr) {
                affected.push_back(c.id);
                rec.bytes_after += c.bytes;
            }
        }
        if (affected.empty() && cand.references == b_.references) {
            rec.note = "rejected: no change";
            log_.records.push_back(std::move(rec));
            return;
        }
        std::string list;
        for (const auto& id : affected) {
            list += (list.empty() ? "" : ",") + id;
        }
        rec.detail["affected"] = list;
        std::size_t ops_after = dom_ops_;
        if (kind == TransformKind::minify_script || kind == TransformKind::strip_console) {
            ops_after = count_bundle_dom_ops(cand, cfg_.analyzer.dom_op_patterns);
        }
        std::uint64_t total = bundle_weight(b_, 0).total_bytes;
        std::uint64_t total_after = total - rec.bytes_before + rec.bytes_after;
        double e_before = estimate_energy(total, dom_ops_, cfg_.energy).total_joules;
        double e_after = estimate_energy(total_after, ops_after, cfg_.energy).total_joules;
        rec.detail["energy_before_j"] = format_double(e_before);
        rec.detail["energy_after_j"] = format_double(e_after);
        if (is_structure_only(kind)) {
            rec.accepted = true;
            rec.note = "accepted: structure-only";
        } else if (!cfg_.energy_gating || e_after < e_before) {
            rec.accepted = true;
            rec.note = cfg_.energy_gating ? "accepted: lowers estimated energy" : "accepted: gating disabled";
        } else {
            rec.note = "rejected: no estimated energy reduction";
        }
        if (rec.accepted) {
            b_ = std::move(cand);
            dom_ops_ = ops_after;
        }
        log_.records.push_back(std::move(rec));
    }

    SiteBundle& bundle() { return b_; }
    const PipelineConfig& cfg() const { return cfg_; }

    PipelineResult finish(std::vector<Finding> findings)
    {
        log_.total_bytes_after = bundle_weight(b_, 0).total_bytes;
        return {std::move(b_), std::move(log_), std::move(findings)};
    }

private:
    static std::string format_double(double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    SiteBundle b_;
    const PipelineConfig& cfg_;
    TransformationLog log_;
    std::size_t dom_ops_ = 0;
};

void stage_strip_unused(Runner& r, const std::vector<Finding>& findings)
{
    std::set<std::string> targets;
    for (const auto& f : findings) {
        if (f.kind == FindingKind::unused_css_rule || f.kind == FindingKind::unused_font) {
            targets.insert(f.asset_id);
        }
    }
    for (const auto& id : targets) {
        r.step(TransformKind::strip_unused_css, id, [&](SiteBundle& b, auto& detail) -> std::optional<std::string> {
            Asset* a = b.find(id);
            if (a == nullptr) {
                return "asset missing";
            }
            auto out = strip_unused_css(a->payload, findings, id);
            if (!out) {
                return "stale span";
            }
            std::size_t rules = 0;
            std::size_t fonts = 0;
            for (const auto& f : findings) {
                if (f.asset_id == id) {
                    rules += f.kind == FindingKind::unused_css_rule;
                    fonts += f.kind == FindingKind::unused_font;
                }
            }
            detail["rules_removed"] = std::to_string(rules);
            detail["font_faces_removed"] = std::to_string(fonts);
            set_payload(*a, std::move(*out));
            return std::nullopt;
        });
    }
}

void stage_minify_css(Runner& r)
{
    std::vector<std::string> ids;
    for (const auto& a : r.bundle().assets) {
        if (a.cls == AssetClass::css && !a.external) {
            ids.push_back(a.id);
        }
    }
    for (const auto& id : ids) {
        r.step(TransformKind::minify_css, id, [&](SiteBundle& b, auto&) -> std::optional<std::string> {
            Asset* a = b.find(id);
            set_payload(*a, minify_css(a->payload));
            return std::nullopt;
        });
    }
    std::string entry = r.bundle().entry;
    bool has_inline = html::find_first(html::parse_html(r.bundle().entry_asset().payload), "style") != nullptr;
    if (has_inline) {
        r.step(TransformKind::minify_css, entry, [&](SiteBundle& b, auto& detail) -> std::optional<std::string> {
            detail["scope"] = "inline style";
            edit_inline_text(
                b.entry_asset(), [](const html::Node& el) { return el.tag == "style"; },
                [](const std::string& t) { return minify_css(t); });
            return std::nullopt;
        });
    }
}

void stage_scripts(Runner& r)
{
    const PipelineConfig& cfg = r.cfg();
    std::vector<std::string> ids;
    for (const auto& a : r.bundle().assets) {
        if (a.cls == AssetClass::script && !a.external) {
            ids.push_back(a.id);
        }
    }
    bool inline_scripts = false;
    html::for_each_element(html::parse_html(r.bundle().entry_asset().payload),
                           [&](const html::Node& el) { inline_scripts = inline_scripts || is_inline_classic_script(el); });
    if (inline_scripts) {
        ids.push_back(r.bundle().entry);
    }
    auto transform = [&](SiteBundle& b, const std::string& id, const std::function<std::string(const std::string&)>& fn) {
        Asset* a = b.find(id);
        if (id == b.entry) {
            edit_inline_text(*a, is_inline_classic_script, fn);
        } else {
            set_payload(*a, fn(a->payload));
        }
    };
    for (const auto& id : ids) {
        if (cfg.strip_console && r.enabled(TransformKind::strip_console)) {
            r.step(TransformKind::strip_console, id, [&](SiteBundle& b, auto& detail) -> std::optional<std::string> {
                std::size_t removed = 0;
                transform(b, id, [&](const std::string& text) {
                    auto tokens = script::tokenize(text);
                    std::vector<css::Span> spans;
                    for (const auto& cs : script::find_console_statements(tokens)) {
                        spans.push_back({cs.offset, cs.length});
                    }
                    removed += spans.size();
                    return strip_spans(text, spans).value_or(text);
                });
                detail["statements_removed"] = std::to_string(removed);
                return std::nullopt;
            });
        }
        if (r.enabled(TransformKind::minify_script)) {
            r.step(TransformKind::minify_script, id, [&](SiteBundle& b, auto&) -> std::optional<std::string> {
                transform(b, id, [](const std::string& text) { return minify_script(text, false); });
                return std::nullopt;
            });
        }
    }
}

void stage_svg(Runner& r)
{
    std::vector<std::string> ids;
    for (const auto& a : r.bundle().assets) {
        if (a.cls == AssetClass::svg && !a.external) {
            ids.push_back(a.id);
        }
    }
    for (const auto& id : ids) {
        r.step(TransformKind::optimize_svg, id, [&](SiteBundle& b, auto&) -> std::optional<std::string> {
            Asset* a = b.find(id);
            auto out = svg::optimize_svg(a->payload);
            if (!out) {
                return "unparseable svg";
            }
            set_payload(*a, std::move(*out));
            return std::nullopt;
        });
    }
}

std::string free_id(const SiteBundle& b, const std::string& preferred, const std::string& fallback)
{
    return b.find(preferred) == nullptr ? preferred : fallback;
}

void stage_images(Runner& r, const std::vector<Finding>& findings)
{
    const PipelineConfig& cfg = r.cfg();
    std::vector<std::string> ids;
    for (const auto& f : findings) {
        if (f.kind != FindingKind::oversized_image) {
            continue;
        }
        const Asset* a = r.bundle().find(f.asset_id);
        if (a != nullptr && !a->external && projected_image_bytes(*a, cfg.codec_ratios)) {
            ids.push_back(a->id);
        }
    }
    for (const auto& id : ids) {
        r.step(TransformKind::image_conversion_plan, id, [&](SiteBundle& b, auto& detail) -> std::optional<std::string> {
            const Asset* old = b.find(id);
            if (old == nullptr) {
                return "asset missing";
            }
            Asset next;
            next.id = free_id(b, with_extension(id, ".avif"), id + ".avif");
            next.cls = AssetClass::image;
            ImageFormat fmt = image_format(*old);
            detail["source_format"] = std::string(to_string(fmt));
            detail["target"] = next.id;
            std::optional<std::string> encoded;
            if (cfg.hooks.encode_avif) {
                encoded = cfg.hooks.encode_avif(*old);
            }
            if (encoded) {
                next.payload = std::move(*encoded);
                next.bytes = next.payload.size();
                detail["projected"] = "false";
            } else {
                next.external = true;
                next.bytes = *projected_image_bytes(*old, cfg.codec_ratios);
                detail["projected"] = "true";
                detail["ratio"] = std::to_string(*cfg.codec_ratios.ratio(fmt));
            }
            next.url = next.id;
            b.assets.push_back(next);
            if (!retarget(b, id, next.id)) {
                return "a reference could not be rewritten";
            }
            if (!encoded) {
                b.find(next.id)->bytes = next.bytes;
            }
            return std::nullopt;
        });
    }
}

void stage_fonts(Runner& r)
{
    const PipelineConfig& cfg = r.cfg();
    std::u32string chars = document_characters(html::parse_html(r.bundle().entry_asset().payload));
    std::vector<std::string> ids;
    for (const auto& a : r.bundle().assets) {
        if (a.cls == AssetClass::font && !a.external) {
            ids.push_back(a.id);
        }
    }
    for (const auto& id : ids) {
        r.step(TransformKind::font_subset_plan, id, [&](SiteBundle& b, auto& detail) -> std::optional<std::string> {
            const Asset* old = b.find(id);
            std::uint64_t projected =
                projected_font_bytes(old->bytes, chars.size(), cfg.font_glyph_coverage, cfg.font_ratio_floor);
            if (projected >= old->bytes) {
                return "subset would not be smaller";
            }
            std::string ext = old->id.substr(std::min(old->id.find_last_of('.'), old->id.size()));
            Asset next;
            next.id = free_id(b, with_extension(id, ".subset" + ext), id + ".subset" + ext);
            next.cls = AssetClass::font;
            detail["distinct_characters"] = std::to_string(chars.size());
            detail["target"] = next.id;
            std::optional<std::string> encoded;
            if (cfg.hooks.subset_font) {
                encoded = cfg.hooks.subset_font(*old, chars);
            }
            if (encoded) {
                next.payload = std::move(*encoded);
                next.bytes = next.payload.size();
                detail["projected"] = "false";
            } else {
                next.external = true;
                next.bytes = projected;
                detail["projected"] = "true";
            }
            next.url = next.id;
            b.assets.push_back(next);
            if (!retarget(b, id, next.id)) {
                return "a reference could not be rewritten";
            }
            if (!encoded) {
                b.find(next.id)->bytes = next.bytes;
            }
            return std::nullopt;
        });
    }
}

void stage_structure(Runner& r)
{
    const PipelineConfig& cfg = r.cfg();
    std::string entry = r.bundle().entry;
    if (r.enabled(TransformKind::defer_script)) {
        auto dom = html::parse_html(r.bundle().entry_asset().payload);
        auto srcs = defer_scripts(dom, &r.bundle());
        for (std::size_t i = 0; i < srcs.size(); ++i) {
            r.step(TransformKind::defer_script, entry, [&, i](SiteBundle& b, auto& detail) -> std::optional<std::string> {
                // one script per record, in document order
                auto fresh = html::parse_html(b.entry_asset().payload);
                std::string src = srcs[i];
                bool done = false;
                html::for_each_element(fresh, [&](html::Node& el) {
                    if (!done && el.is("script") && el.attribute_value("src") == src && !el.has_attribute("defer")) {
                        el.set_attribute("defer", "");
                        el.attributes.back().has_value = false;
                        el.raw_open.clear();
                        done = true;
                    }
                });
                if (!done) {
                    return "script not found";
                }
                detail["script"] = src;
                set_payload(b.entry_asset(), html::serialize(fresh));
                return std::nullopt;
            });
        }
    }
    if (r.enabled(TransformKind::lazy_image)) {
        auto dom = html::parse_html(r.bundle().entry_asset().payload);
        std::size_t count = lazy_images(dom, cfg.fold_images).size();
        for (std::size_t i = 0; i < count; ++i) {
            r.step(TransformKind::lazy_image, entry, [&](SiteBundle& b, auto& detail) -> std::optional<std::string> {
                auto d = html::parse_html(b.entry_asset().payload);
                std::size_t index = 0;
                std::string src;
                html::for_each_element(d, [&](html::Node& el) {
                    if (!el.is("img")) {
                        return;
                    }
                    if (index++ >= cfg.fold_images && src.empty() && !el.has_attribute("loading")) {
                        el.set_attribute("loading", "lazy");
                        src = std::string(el.attribute_value("src"));
                        if (src.empty()) {
                            src = "(no src)";
                        }
                    }
                });
                if (src.empty()) {
                    return "no image left";
                }
                detail["image"] = src;
                set_payload(b.entry_asset(), html::serialize(d));
                return std::nullopt;
            });
        }
    }
}

bool is_stylesheet_link(const html::Node& el)
{
    if (!el.is("link") || !el.has_attribute("href")) {
        return false;
    }
    for (auto tok : split_ws(el.attribute_value("rel"))) {
        if (iequals(tok, "stylesheet")) {
            return true;
        }
    }
    return false;
}

void stage_critical_css(Runner& r)
{
    const PipelineConfig& cfg = r.cfg();
    std::string entry = r.bundle().entry;
    r.step(TransformKind::inline_critical_css, entry, [&](SiteBundle& b, auto& detail) -> std::optional<std::string> {
        auto dom = html::parse_html(b.entry_asset().payload);
        html::Node* head = html::find_first(dom, "head");
        const html::Node* body = html::find_first(std::as_const(dom), "body");
        if (head == nullptr || body == nullptr) {
            return "no head or body";
        }
        std::vector<const html::Node*> first;
        std::vector<std::vector<const html::Node*>> first_ancestors;
        std::vector<const html::Node*> stack;
        std::function<void(const html::Node&)> walk = [&](const html::Node& n) {
            for (const auto& c : n.children) {
                if (first.size() >= cfg.critical_elements) {
                    return;
                }
                if (!c.is_element()) {
                    continue;
                }
                first.push_back(&c);
                first_ancestors.push_back(stack);
                stack.push_back(&c);
                walk(c);
                stack.pop_back();
            }
        };
        // ancestors of body elements include the body and its own ancestors
        std::vector<const html::Node*> body_path;
        std::function<bool(const html::Node&)> find_path = [&](const html::Node& n) {
            if (&n == body) {
                return true;
            }
            for (const auto& c : n.children) {
                if (c.is_element()) {
                    body_path.push_back(&c);
                    if (find_path(c)) {
                        return true;
                    }
                    body_path.pop_back();
                }
            }
            return false;
        };
        find_path(dom);
        stack = body_path;
        walk(*body);
        std::string critical;
        std::vector<const html::Node*> links;
        html::for_each_element(std::as_const(dom), [&](const html::Node& el) {
            if (is_stylesheet_link(el)) {
                links.push_back(&el);
            }
        });
        if (links.empty()) {
            return "no linked stylesheet";
        }
        for (const html::Node* link : links) {
            if (iequals(link->attribute_value("media"), "print") && link->has_attribute("onload")) {
                return "stylesheets already deferred";
            }
        }
        std::size_t inlined = 0;
        for (const html::Node* link : links) {
            auto rr = resolve_reference(b.entry, html::decode_entities(link->attribute_value("href")));
            const Asset* sheet = rr.id.empty() ? nullptr : b.find(rr.id);
            if (sheet == nullptr || sheet->external) {
                continue;
            }
            auto parsed = css::parse_css(sheet->payload);
            for (const auto& item : parsed.items) {
                if (item.kind != css::ItemKind::style_rule) {
                    continue;
                }
                bool hit = false;
                for (const auto& sel : item.rule.selectors) {
                    for (std::size_t k = 0; k < first.size() && !hit && !sel.assume_matches; ++k) {
                        hit = css::matches(sel, first_ancestors[k], *first[k]);
                    }
                }
                if (hit) {
                    critical += sheet->payload.substr(item.span.offset, item.span.length);
                    ++inlined;
                }
            }
        }
        if (inlined == 0) {
            return "no rule matches the first elements";
        }
        detail["rules_inlined"] = std::to_string(inlined);
        std::string html_text = html::serialize(dom);
        // swap links from the end so earlier offsets stay valid
        std::vector<std::pair<std::size_t, std::size_t>> spans;
        std::vector<std::string> repl;
        for (const html::Node* link : links) {
            spans.push_back({link->source_offset, link->raw_open.size()});
            repl.push_back(deferred_stylesheet_link(link->attribute_value("href")));
        }
        for (std::size_t k = spans.size(); k-- > 0;) {
            if (spans[k].second == 0) {
                return "link without source text";
            }
            html_text.replace(spans[k].first, spans[k].second, repl[k]);
        }
        auto dom2 = html::parse_html(html_text);
        html::Node* head2 = html::find_first(dom2, "head");
        html::Node style;
        style.kind = html::NodeKind::element;
        style.tag = "style";
        html::Node text;
        text.kind = html::NodeKind::text;
        text.text = critical;
        style.children.push_back(std::move(text));
        style.close = html::Close::explicit_tag;
        head2->children.push_back(std::move(style));
        set_payload(b.entry_asset(), html::serialize(dom2));
        return std::nullopt;
    });
}

void stage_minify_html(Runner& r)
{
    std::string entry = r.bundle().entry;
    r.step(TransformKind::minify_html, entry, [&](SiteBundle& b, auto&) -> std::optional<std::string> {
        set_payload(b.entry_asset(), minify_html(std::string_view(b.entry_asset().payload)));
        return std::nullopt;
    });
}

void collect_characters(const html::Node& n, std::set<char32_t>& out)
{
    for (const auto& c : n.children) {
        if (c.kind == html::NodeKind::text) {
            for (char32_t cp : utf8_decode(html::decode_entities(c.text))) {
                if (cp != U'\t' && cp != U'\n' && cp != U'\r' && cp != U'\f') {
                    out.insert(cp);
                }
            }
        } else if (c.kind == html::NodeKind::element && c.tag != "script" && c.tag != "style") {
            collect_characters(c, out);
        }
    }
}

} // namespace

std::string_view to_string(TransformKind k)
{
    for (const auto& kn : kind_names) {
        if (kn.kind == k) {
            return kn.name;
        }
    }
    return "unknown";
}

TransformKind transform_kind_from_string(std::string_view s)
{
    for (const auto& kn : kind_names) {
        if (kn.name == s) {
            return kn.kind;
        }
    }
    throw Error("unknown transformation kind: " + std::string(s));
}

const std::vector<TransformKind>& all_transform_kinds()
{
    static const std::vector<TransformKind> kinds = [] {
        std::vector<TransformKind> v;
        for (const auto& kn : kind_names) {
            v.push_back(kn.kind);
        }
        return v;
    }();
    return kinds;
}

bool is_structure_only(TransformKind k)
{
    return k == TransformKind::defer_script || k == TransformKind::lazy_image || k == TransformKind::inline_critical_css;
}

bool TransformationLog::consistent() const
{
    std::int64_t expected = static_cast<std::int64_t>(total_bytes_before);
    for (const auto& r : records) {
        if (r.accepted) {
            expected -= static_cast<std::int64_t>(r.bytes_before) - static_cast<std::int64_t>(r.bytes_after);
        }
    }
    return expected == static_cast<std::int64_t>(total_bytes_after);
}

std::set<TransformKind> PipelineConfig::default_enabled()
{
    std::set<TransformKind> s(all_transform_kinds().begin(), all_transform_kinds().end());
    s.erase(TransformKind::inline_critical_css);
    return s;
}

std::optional<std::string> strip_spans(std::string_view text, std::vector<css::Span> spans)
{
    for (const auto& s : spans) {
        if (s.offset > text.size() || s.length > text.size() - s.offset) {
            return std::nullopt;
        }
    }
    std::sort(spans.begin(), spans.end());
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    for (const auto& s : spans) {
        if (s.end() <= pos) {
            continue;
        }
        std::size_t start = std::max(pos, s.offset);
        out.append(text.substr(pos, start - pos));
        pos = s.end();
    }
    out.append(text.substr(pos));
    return out;
}

std::optional<std::string> strip_unused_css(std::string_view text, const std::vector<Finding>& findings,
                                            std::string_view asset_id)
{
    std::vector<css::Span> spans;
    for (const auto& f : findings) {
        if ((f.kind == FindingKind::unused_css_rule || f.kind == FindingKind::unused_font) && f.asset_id == asset_id
            && f.locator.span) {
            spans.push_back(*f.locator.span);
        }
    }
    return strip_spans(text, std::move(spans));
}

std::vector<std::string> defer_scripts(html::DomTree& doc, const SiteBundle* bundle)
{
    struct Entry {
        html::Node* node;
        bool in_head;
    };
    std::vector<Entry> scripts;
    std::function<void(html::Node&, bool)> walk = [&](html::Node& n, bool in_head) {
        for (auto& c : n.children) {
            if (!c.is_element()) {
                continue;
            }
            if (c.tag == "script") {
                scripts.push_back({&c, in_head});
            }
            walk(c, in_head || c.tag == "head");
        }
    };
    walk(doc, false);
    auto writes_document = [&](const html::Node& el) {
        if (bundle == nullptr) {
            return false;
        }
        auto r = resolve_reference(bundle->entry, html::decode_entities(el.attribute_value("src")));
        const Asset* a = r.id.empty() ? nullptr : bundle->find(r.id);
        return a != nullptr && a->payload.find("document.write") != std::string::npos;
    };
    std::vector<html::Node*> marked;
    bool tail_safe = true;
    for (std::size_t i = scripts.size(); i-- > 0;) {
        html::Node& el = *scripts[i].node;
        bool external = el.has_attribute("src");
        if (!external) {
            if (classic_script(el)) {
                tail_safe = false;
            }
            continue;
        }
        if (el.has_attribute("defer") || el.has_attribute("async") || module_script(el) || !classic_script(el)) {
            continue;
        }
        if (scripts[i].in_head && tail_safe && !writes_document(el)) {
            marked.push_back(&el);
        } else {
            tail_safe = false;
        }
    }
    std::reverse(marked.begin(), marked.end());
    std::vector<std::string> out;
    for (html::Node* el : marked) {
        el->set_attribute("defer", "");
        el->attributes.back().has_value = false;
        el->raw_open.clear();
        out.emplace_back(el->attribute_value("src"));
    }
    return out;
}

std::vector<std::string> lazy_images(html::DomTree& doc, std::size_t fold)
{
    std::vector<std::string> out;
    std::size_t index = 0;
    html::for_each_element(doc, [&](html::Node& el) {
        if (!el.is("img")) {
            return;
        }
        if (index++ < fold || el.has_attribute("loading")) {
            return;
        }
        el.set_attribute("loading", "lazy");
        out.emplace_back(el.attribute_value("src"));
    });
    return out;
}

std::u32string document_characters(const html::DomTree& doc)
{
    std::set<char32_t> set;
    collect_characters(doc, set);
    return std::u32string(set.begin(), set.end());
}

std::optional<std::uint64_t> projected_image_bytes(const Asset& image, const CodecRatios& ratios)
{
    if (image.cls != AssetClass::image) {
        return std::nullopt;
    }
    auto ratio = ratios.ratio(image_format(image));
    if (!ratio) {
        return std::nullopt;
    }
    return static_cast<std::uint64_t>(std::ceil(static_cast<double>(image.bytes) * *ratio));
}

std::uint64_t projected_font_bytes(std::uint64_t bytes, std::size_t distinct_chars, double coverage, double floor)
{
    double ratio = std::max(floor, std::min(1.0, static_cast<double>(distinct_chars) / coverage));
    return static_cast<std::uint64_t>(std::ceil(static_cast<double>(bytes) * ratio));
}

std::string deferred_stylesheet_link(std::string_view href)
{
    return "<link rel=\"stylesheet\" href=\"" + std::string(href) + "\" media=\"print\" onload=\"this.media='all'\">";
}

EnergyEstimate bundle_energy(const SiteBundle& b, const EnergyModelParams& p, const std::vector<std::string>& patterns)
{
    return estimate_energy(bundle_weight(b, count_bundle_dom_ops(b, patterns)), p);
}

PipelineResult run_pipeline(const SiteBundle& b, const PipelineConfig& cfg)
{
    Runner r(b, cfg);
    AnalyzerConfig acfg = cfg.analyzer;
    acfg.fold_images = cfg.fold_images;
    acfg.codec_ratios = cfg.codec_ratios;
    std::vector<Finding> findings = detect_findings(r.bundle(), acfg);
    if (r.enabled(TransformKind::strip_unused_css)) {
        stage_strip_unused(r, findings);
    }
    if (r.enabled(TransformKind::minify_css)) {
        stage_minify_css(r);
    }
    if (r.enabled(TransformKind::minify_script) || r.enabled(TransformKind::strip_console)) {
        stage_scripts(r);
    }
    if (r.enabled(TransformKind::optimize_svg)) {
        stage_svg(r);
    }
    if (r.enabled(TransformKind::image_conversion_plan)) {
        stage_images(r, findings);
    }
    if (r.enabled(TransformKind::font_subset_plan)) {
        stage_fonts(r);
    }
    stage_structure(r);
    if (r.enabled(TransformKind::inline_critical_css)) {
        stage_critical_css(r);
    }
    if (r.enabled(TransformKind::minify_html)) {
        stage_minify_html(r);
    }
    return r.finish(std::move(findings));
}

std::vector<Snippet> optimize_snippets(const std::vector<Snippet>& snippets, const PipelineConfig& cfg)
{
    std::vector<Snippet> out;
    for (const auto& s : snippets) {
        Snippet o = s;
        switch (s.cls) {
        case AssetClass::html:
            if (cfg.enabled.count(TransformKind::minify_html)) {
                o.text = minify_html(std::string_view(s.text));
            }
            break;
        case AssetClass::css:
            if (cfg.enabled.count(TransformKind::minify_css)) {
                o.text = minify_css(s.text);
            }
            break;
        case AssetClass::script: {
            bool strip = cfg.strip_console && cfg.enabled.count(TransformKind::strip_console);
            if (cfg.enabled.count(TransformKind::minify_script)) {
                o.text = minify_script(s.text, strip);
            } else if (strip) {
                auto tokens = script::tokenize(s.text);
                std::vector<css::Span> spans;
                for (const auto& cs : script::find_console_statements(tokens)) {
                    spans.push_back({cs.offset, cs.length});
                }
                o.text = strip_spans(s.text, spans).value_or(s.text);
            }
            break;
        }
        case AssetClass::svg:
            if (cfg.enabled.count(TransformKind::optimize_svg)) {
                o.text = svg::optimize_svg(s.text).value_or(s.text);
            }
            break;
        default:
            break;
        }
        out.push_back(std::move(o));
    }
    return out;
}

} // namespace wattless
