#include "wattless/minify.hpp"

#include "wattless/css.hpp"
#include "wattless/script.hpp"
#include "wattless/util.hpp"

#include <algorithm>

namespace wattless {

namespace {

bool preserves_whitespace(std::string_view tag)
{
    return tag == "pre" || tag == "textarea" || tag == "script" || tag == "style" || tag == "xmp"
        || tag == "plaintext" || tag == "listing";
}

bool conditional_comment(const html::Node& n)
{
    return n.kind == html::NodeKind::comment && n.text.starts_with("[if");
}

bool attributes_equal(const html::Node& a, const html::Node& b)
{
    if (a.attributes.size() != b.attributes.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.attributes.size(); ++i) {
        const auto& x = a.attributes[i];
        const auto& y = b.attributes[i];
        if (x.name != y.name || x.value != y.value || x.has_value != y.has_value) {
            return false;
        }
    }
    return true;
}

/// Start tag with whitespace runs outside quotes collapsed, kept only when it
/// re-parses to the same attributes.
std::string compact_start_tag(const html::Node& el)
{
    const std::string& raw = el.raw_open;
    std::string out;
    out.reserve(raw.size());
    char quote = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char c = raw[i];
        if (quote != 0) {
            out.push_back(c);
            if (c == quote) {
                quote = 0;
            }
            continue;
        }
        if ((c == '"' || c == '\'') && !out.empty() && out.back() == '=') {
            quote = c;
            out.push_back(c);
            continue;
        }
        if (is_space(c)) {
            std::size_t j = i;
            while (j < raw.size() && is_space(raw[j])) {
                ++j;
            }
            char next = j < raw.size() ? raw[j] : '\0';
            char prev = out.empty() ? '\0' : out.back();
            bool drop = next == '>' && (prev == '"' || prev == '\'');
            drop = drop || next == '=' || prev == '=';
            if (!drop) {
                out.push_back(' ');
            }
            i = j - 1;
            continue;
        }
        out.push_back(c);
    }
    if (out.size() >= raw.size()) {
        return raw;
    }
    auto probe = html::parse_html(out);
    if (probe.children.empty() || !probe.children[0].is(el.tag) || !attributes_equal(probe.children[0], el)
        || probe.children[0].self_closing != el.self_closing) {
        return raw;
    }
    return out;
}

void minify_children(html::Node& node, bool preserve)
{
    std::vector<html::Node> kept;
    kept.reserve(node.children.size());
    for (auto& c : node.children) {
        if (c.kind == html::NodeKind::comment && !conditional_comment(c)) {
            continue;
        }
        if (c.kind == html::NodeKind::text && !kept.empty() && kept.back().kind == html::NodeKind::text) {
            kept.back().text += c.text;
            continue;
        }
        kept.push_back(std::move(c));
    }
    node.children = std::move(kept);
    for (auto& c : node.children) {
        if (c.kind == html::NodeKind::text) {
            if (!preserve) {
                c.text = collapse_ws(c.text);
            }
        } else if (c.kind == html::NodeKind::element) {
            if (!c.raw_open.empty()) {
                c.raw_open = compact_start_tag(c);
            }
            minify_children(c, preserve || preserves_whitespace(c.tag));
        }
    }
}

void flatten(const html::Node& n, bool collapse, std::vector<const html::Node*>& elements,
             std::vector<std::string>& texts)
{
    std::string run;
    for (const auto& c : n.children) {
        if (c.kind == html::NodeKind::text) {
            run += c.text;
        } else if (c.kind == html::NodeKind::element || c.kind == html::NodeKind::markup) {
            texts.push_back(collapse ? collapse_ws(run) : run);
            run.clear();
            elements.push_back(&c);
        }
    }
    texts.push_back(collapse ? collapse_ws(run) : run);
}

void emit_items(const std::vector<css::Item>& items, std::string_view src, std::string& out);

void emit_declarations(const std::vector<css::Declaration>& decls, std::string& out)
{
    for (std::size_t i = 0; i < decls.size(); ++i) {
        if (i) {
            out += ';';
        }
        out += decls[i].property;
        out += ':';
        out += css::shorten_hex_colors(decls[i].value);
        if (decls[i].important) {
            out += "!important";
        }
    }
}

void emit_items(const std::vector<css::Item>& items, std::string_view src, std::string& out)
{
    for (const auto& it : items) {
        switch (it.kind) {
        case css::ItemKind::unparsed:
            out.append(src.substr(it.span.offset, it.span.length));
            break;
        case css::ItemKind::style_rule: {
            for (std::size_t i = 0; i < it.rule.selectors.size(); ++i) {
                if (i) {
                    out += ',';
                }
                out += it.rule.selectors[i].text;
            }
            out += '{';
            emit_declarations(it.rule.declarations, out);
            out += '}';
            break;
        }
        case css::ItemKind::at_rule: {
            out += '@';
            out += it.at_name;
            if (!it.prelude.empty()) {
                bool glue = it.prelude.front() == '"' || it.prelude.front() == '\'';
                if (!glue) {
                    out += ' ';
                }
                out += it.prelude;
            }
            switch (it.block) {
            case css::AtBlock::statement:
                out += ';';
                break;
            case css::AtBlock::rules:
                out += '{';
                emit_items(it.children, src, out);
                out += '}';
                break;
            case css::AtBlock::declarations:
                out += '{';
                emit_declarations(it.declarations, out);
                out += '}';
                break;
            case css::AtBlock::opaque:
                out += '{';
                out.append(src.substr(it.body.offset, it.body.length));
                out += '}';
                break;
            }
            break;
        }
        }
    }
}

} // namespace

bool same_structure(const html::Node& a, const html::Node& b)
{
    if (a.kind != b.kind) {
        return false;
    }
    if (a.kind == html::NodeKind::markup) {
        return a.text == b.text;
    }
    if (a.kind == html::NodeKind::element && (a.tag != b.tag || !attributes_equal(a, b))) {
        return false;
    }
    std::vector<const html::Node*> ea;
    std::vector<const html::Node*> eb;
    std::vector<std::string> ta;
    std::vector<std::string> tb;
    bool collapse = !(a.kind == html::NodeKind::element && preserves_whitespace(a.tag));
    flatten(a, collapse, ea, ta);
    flatten(b, collapse, eb, tb);
    if (ea.size() != eb.size() || ta != tb) {
        return false;
    }
    for (std::size_t i = 0; i < ea.size(); ++i) {
        if (!same_structure(*ea[i], *eb[i])) {
            return false;
        }
    }
    return true;
}

std::string minify_html(const html::DomTree& doc)
{
    html::DomTree copy = doc;
    minify_children(copy, false);
    std::string out = html::serialize(copy);
    std::string original = html::serialize(doc);
    if (out.size() >= original.size() || !same_structure(html::parse_html(out), html::parse_html(original))) {
        return original;
    }
    return out;
}

std::string minify_html(std::string_view text)
{
    return minify_html(html::parse_html(text));
}

std::string minify_css(std::string_view text)
{
    css::Stylesheet sheet = css::parse_css(text);
    std::string out;
    out.reserve(text.size());
    emit_items(sheet.items, text, out);
    if (out.size() > text.size() || !css::equivalent(css::parse_css(out), sheet)) {
        return std::string(text);
    }
    return out;
}

std::vector<std::string> script_token_texts(std::string_view text, bool strip_console)
{
    auto tokens = script::tokenize(text);
    std::vector<bool> removed(tokens.size(), false);
    if (strip_console) {
        for (const auto& cs : script::find_console_statements(tokens)) {
            std::fill(removed.begin() + static_cast<std::ptrdiff_t>(cs.begin),
                      removed.begin() + static_cast<std::ptrdiff_t>(cs.end), true);
        }
    }
    std::vector<std::string> out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!removed[i] && tokens[i].significant()) {
            out.emplace_back(tokens[i].text);
        }
    }
    return out;
}

std::string minify_script(std::string_view text, bool strip_console)
{
    std::string out = script::minify(text, strip_console);
    if (out.size() <= text.size() && script_token_texts(out, false) == script_token_texts(text, strip_console)) {
        return out;
    }
    if (strip_console) {
        return minify_script(text, false);
    }
    return std::string(text);
}

} // namespace wattless
