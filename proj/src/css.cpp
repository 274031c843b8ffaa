#include "wattless/css.hpp"

#include "wattless/util.hpp"

#include <algorithm>

namespace wattless::css {

namespace {

constexpr std::size_t npos = std::string_view::npos;

bool is_ident_char(char c)
{
    auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_'
        || u >= 0x80;
}

bool is_hex(char c)
{
    return (c >= '0' && c <= '9') || (ascii_lower(c) >= 'a' && ascii_lower(c) <= 'f');
}

// True at an unquoted `url(` token.
bool at_unquoted_url(std::string_view s, std::size_t i)
{
    if (i + 4 > s.size() || !iequals(s.substr(i, 4), "url(")) {
        return false;
    }
    if (i > 0 && is_ident_char(s[i - 1])) {
        return false;
    }
    std::size_t j = i + 4;
    while (j < s.size() && is_space(s[j])) {
        ++j;
    }
    return j >= s.size() || (s[j] != '"' && s[j] != '\'');
}

// If a comment, string, escape or unquoted url starts at i, returns the index after
// it; otherwise returns i.
std::size_t skip_special(std::string_view s, std::size_t i)
{
    if (i >= s.size()) {
        return i;
    }
    char c = s[i];
    if (c == '/' && i + 1 < s.size() && s[i + 1] == '*') {
        std::size_t end = s.find("*/", i + 2);
        return end == npos ? s.size() : end + 2;
    }
    if (c == '"' || c == '\'') {
        std::size_t j = i + 1;
        while (j < s.size()) {
            if (s[j] == '\\') {
                j += 2;
                continue;
            }
            if (s[j] == c) {
                return j + 1;
            }
            if (s[j] == '\n') {
                return j; // bad string ends at the newline
            }
            ++j;
        }
        return s.size();
    }
    if (c == '\\') {
        return std::min(i + 2, s.size());
    }
    if ((c == 'u' || c == 'U') && at_unquoted_url(s, i)) {
        std::size_t j = i + 4;
        while (j < s.size() && s[j] != ')') {
            if (s[j] == '\\') {
                ++j;
            }
            ++j;
        }
        return std::min(j + 1, s.size());
    }
    return i;
}

bool is_comment_at(std::string_view s, std::size_t i)
{
    return i + 1 < s.size() && s[i] == '/' && s[i + 1] == '*';
}

std::size_t skip_ws_comments(std::string_view s, std::size_t i)
{
    while (i < s.size()) {
        if (is_space(s[i])) {
            ++i;
        } else if (is_comment_at(s, i)) {
            i = skip_special(s, i);
        } else {
            break;
        }
    }
    return i;
}

// First index of any char in `stops` at paren/bracket depth 0, or s.size().
std::size_t scan_to(std::string_view s, std::size_t i, std::string_view stops)
{
    int depth = 0;
    while (i < s.size()) {
        std::size_t k = skip_special(s, i);
        if (k != i) {
            i = k;
            continue;
        }
        char c = s[i];
        if (c == '(' || c == '[') {
            ++depth;
        } else if ((c == ')' || c == ']') && depth > 0) {
            --depth;
        } else if (depth == 0 && stops.find(c) != npos) {
            return i;
        }
        ++i;
    }
    return s.size();
}

// Index of the '}' matching the '{' at `open`, or npos.
std::size_t matching_brace(std::string_view s, std::size_t open)
{
    int depth = 0;
    std::size_t i = open;
    while (i < s.size()) {
        std::size_t k = skip_special(s, i);
        if (k != i) {
            i = k;
            continue;
        }
        if (s[i] == '{') {
            ++depth;
        } else if (s[i] == '}') {
            if (--depth == 0) {
                return i;
            }
        }
        ++i;
    }
    return npos;
}

// Splits at top-level occurrences of `sep` (outside strings, comments, parens).
std::vector<std::pair<std::size_t, std::size_t>> split_top(std::string_view s, char sep)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t start = 0;
    std::size_t i = 0;
    while (true) {
        std::size_t j = scan_to(s, i, std::string_view(&sep, 1));
        out.emplace_back(start, j - start);
        if (j >= s.size()) {
            break;
        }
        start = i = j + 1;
    }
    return out;
}

// Collapses whitespace (comments count as whitespace); `tight` lists chars around
// which whitespace is dropped entirely.
std::string normalize(std::string_view raw, std::string_view tight_before, std::string_view tight_after)
{
    std::string out;
    bool pending = false;
    std::size_t i = 0;
    auto emit_pending = [&](char next) {
        if (pending && !out.empty() && tight_after.find(out.back()) == npos && tight_before.find(next) == npos) {
            out.push_back(' ');
        }
        pending = false;
    };
    while (i < raw.size()) {
        char c = raw[i];
        if (is_space(c) || is_comment_at(raw, i)) {
            pending = true;
            i = is_space(c) ? i + 1 : skip_special(raw, i);
            continue;
        }
        std::size_t k = skip_special(raw, i);
        if (k != i) {
            emit_pending(c);
            out.append(raw.substr(i, k - i));
            i = k;
            continue;
        }
        emit_pending(c);
        out.push_back(c);
        ++i;
    }
    return out;
}

std::string normalize_selector(std::string_view raw)
{
    return normalize(raw, ",>+~)", ",>+~(");
}

std::string normalize_prelude(std::string_view raw)
{
    return normalize(raw, ",)", ",(");
}

std::vector<Declaration> parse_declarations(std::string_view body)
{
    std::vector<Declaration> out;
    for (auto [off, len] : split_top(body, ';')) {
        std::string_view piece = body.substr(off, len);
        std::size_t colon = scan_to(piece, 0, ":");
        if (colon >= piece.size()) {
            continue;
        }
        std::string prop = normalize(piece.substr(0, colon), "", "");
        if (prop.empty()) {
            continue;
        }
        std::string value = normalize_value(piece.substr(colon + 1));
        Declaration d;
        d.property = std::move(prop);
        // trailing !important
        std::string_view v = value;
        if (v.size() >= 9 && iequals(v.substr(v.size() - 9), "important")) {
            std::string_view head = trim(v.substr(0, v.size() - 9));
            if (!head.empty() && head.back() == '!') {
                d.important = true;
                v = trim(head.substr(0, head.size() - 1));
            }
        }
        d.value = std::string(v);
        out.push_back(std::move(d));
    }
    return out;
}

AtBlock classify_at_rule(std::string_view name)
{
    static constexpr std::string_view rule_blocks[] = {"media", "supports", "document", "-moz-document",
                                                       "layer", "container", "scope", "starting-style"};
    static constexpr std::string_view decl_blocks[] = {"font-face", "page", "counter-style", "property",
                                                       "viewport", "-ms-viewport", "font-palette-values"};
    for (auto n : rule_blocks) {
        if (name == n) {
            return AtBlock::rules;
        }
    }
    if (name.size() >= 9 && name.substr(name.size() - 9) == "keyframes") {
        return AtBlock::rules;
    }
    for (auto n : decl_blocks) {
        if (name == n) {
            return AtBlock::declarations;
        }
    }
    return AtBlock::opaque;
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    std::size_t parse_items(std::size_t pos, bool nested, bool matchable, std::vector<Item>& out,
                            std::vector<Span>& unparsed)
    {
        const std::size_t n = s_.size();
        while (true) {
            pos = skip_ws_comments(s_, pos);
            if (pos >= n) {
                return n;
            }
            if (s_[pos] == '}') {
                if (nested) {
                    return pos;
                }
                add_unparsed(out, unparsed, pos, 1);
                ++pos;
                continue;
            }
            std::size_t start = pos;
            if (s_[pos] == '@') {
                pos = parse_at_rule(start, matchable, out, unparsed);
            } else {
                pos = parse_style_rule(start, matchable, out, unparsed);
            }
        }
    }

private:
    void add_unparsed(std::vector<Item>& out, std::vector<Span>& unparsed, std::size_t off, std::size_t len)
    {
        Item it;
        it.kind = ItemKind::unparsed;
        it.span = {off, len};
        out.push_back(std::move(it));
        unparsed.push_back({off, len});
    }

    std::size_t parse_at_rule(std::size_t start, bool matchable, std::vector<Item>& out,
                              std::vector<Span>& unparsed)
    {
        const std::size_t n = s_.size();
        std::size_t p = start + 1;
        while (p < n && is_ident_char(s_[p])) {
            ++p;
        }
        std::string name = to_lower(s_.substr(start + 1, p - start - 1));
        std::size_t j = scan_to(s_, p, "{;}");
        if (j >= n) {
            add_unparsed(out, unparsed, start, n - start);
            return n;
        }
        if (s_[j] == '}') {
            add_unparsed(out, unparsed, start, j - start);
            return j;
        }
        Item it;
        it.kind = ItemKind::at_rule;
        it.at_name = name;
        it.prelude = normalize_prelude(s_.substr(p, j - p));
        if (s_[j] == ';') {
            it.block = AtBlock::statement;
            it.span = {start, j + 1 - start};
            out.push_back(std::move(it));
            return j + 1;
        }
        it.block = classify_at_rule(name);
        if (it.block == AtBlock::rules) {
            bool child_matchable = matchable && name.find("keyframes") == std::string::npos;
            std::vector<Span> child_unparsed;
            std::size_t k = parse_items(j + 1, true, child_matchable, it.children, child_unparsed);
            if (k >= n) {
                add_unparsed(out, unparsed, start, n - start);
                return n;
            }
            unparsed.insert(unparsed.end(), child_unparsed.begin(), child_unparsed.end());
            it.span = {start, k + 1 - start};
            it.body = {j + 1, k - j - 1};
            out.push_back(std::move(it));
            return k + 1;
        }
        std::size_t k = matching_brace(s_, j);
        if (k == npos) {
            add_unparsed(out, unparsed, start, n - start);
            return n;
        }
        it.body = {j + 1, k - j - 1};
        std::string_view body = s_.substr(j + 1, k - j - 1);
        if (it.block == AtBlock::declarations) {
            if (scan_to(body, 0, "{") < body.size()) {
                it.block = AtBlock::opaque;
            } else {
                it.declarations = parse_declarations(body);
            }
        }
        it.span = {start, k + 1 - start};
        out.push_back(std::move(it));
        return k + 1;
    }

    std::size_t parse_style_rule(std::size_t start, bool matchable, std::vector<Item>& out,
                                 std::vector<Span>& unparsed)
    {
        const std::size_t n = s_.size();
        std::size_t j = scan_to(s_, start, "{}");
        if (j >= n) {
            add_unparsed(out, unparsed, start, n - start);
            return n;
        }
        if (s_[j] == '}') {
            add_unparsed(out, unparsed, start, j - start);
            return j;
        }
        std::size_t k = matching_brace(s_, j);
        if (k == npos) {
            add_unparsed(out, unparsed, start, n - start);
            return n;
        }
        std::string_view prelude = s_.substr(start, j - start);
        std::string_view body = s_.substr(j + 1, k - j - 1);
        bool ok = scan_to(body, 0, "{") >= body.size() && scan_to(prelude, 0, ";") >= prelude.size();
        CssRule rule;
        if (ok) {
            for (auto [off, len] : split_top(prelude, ',')) {
                std::string text = normalize_selector(prelude.substr(off, len));
                if (text.empty()) {
                    ok = false;
                    break;
                }
                rule.selectors.push_back(parse_selector(text));
            }
        }
        if (!ok) {
            add_unparsed(out, unparsed, start, k + 1 - start);
            return k + 1;
        }
        rule.declarations = parse_declarations(body);
        rule.source_span = {start, k + 1 - start};
        rule.matchable = matchable;
        Item it;
        it.kind = ItemKind::style_rule;
        it.span = rule.source_span;
        it.rule = std::move(rule);
        out.push_back(std::move(it));
        return k + 1;
    }

    std::string_view s_;
};

void collect_rules(const std::vector<Item>& items, std::vector<const CssRule*>& out)
{
    for (const auto& it : items) {
        if (it.kind == ItemKind::style_rule) {
            out.push_back(&it.rule);
        } else if (it.kind == ItemKind::at_rule) {
            collect_rules(it.children, out);
        }
    }
}

void collect_font_faces(const std::vector<Item>& items, std::vector<const Item*>& out)
{
    for (const auto& it : items) {
        if (it.kind == ItemKind::at_rule) {
            if (it.at_name == "font-face") {
                out.push_back(&it);
            }
            collect_font_faces(it.children, out);
        }
    }
}

std::string read_ident(std::string_view s, std::size_t& i, bool& escaped)
{
    std::size_t start = i;
    while (i < s.size()) {
        if (s[i] == '\\') {
            escaped = true;
            i = std::min(i + 2, s.size());
            continue;
        }
        if (!is_ident_char(s[i])) {
            break;
        }
        ++i;
    }
    return std::string(s.substr(start, i - start));
}

bool is_combinator_char(char c)
{
    return c == ' ' || c == '>' || c == '+' || c == '~';
}

bool decls_equivalent(const std::vector<Declaration>& a, const std::vector<Declaration>& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!iequals(a[i].property, b[i].property) || a[i].important != b[i].important
            || canonical_value(a[i].value) != canonical_value(b[i].value)) {
            return false;
        }
    }
    return true;
}

bool items_equivalent(const std::vector<Item>& a, const std::vector<Item>& b)
{
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Item& x = a[i];
        const Item& y = b[i];
        if (x.kind != y.kind) {
            return false;
        }
        switch (x.kind) {
        case ItemKind::unparsed:
            break;
        case ItemKind::style_rule: {
            if (x.rule.selectors.size() != y.rule.selectors.size() || x.rule.matchable != y.rule.matchable) {
                return false;
            }
            for (std::size_t k = 0; k < x.rule.selectors.size(); ++k) {
                if (x.rule.selectors[k].text != y.rule.selectors[k].text) {
                    return false;
                }
            }
            if (!decls_equivalent(x.rule.declarations, y.rule.declarations)) {
                return false;
            }
            break;
        }
        case ItemKind::at_rule:
            if (x.at_name != y.at_name || x.block != y.block
                || normalize_prelude(x.prelude) != normalize_prelude(y.prelude)
                || !decls_equivalent(x.declarations, y.declarations) || !items_equivalent(x.children, y.children)) {
                return false;
            }
            break;
        }
    }
    return true;
}

} // namespace

std::vector<const CssRule*> Stylesheet::rules() const
{
    std::vector<const CssRule*> out;
    collect_rules(items, out);
    return out;
}

std::vector<const Item*> Stylesheet::font_faces() const
{
    std::vector<const Item*> out;
    collect_font_faces(items, out);
    return out;
}

Stylesheet parse_css(std::string_view text)
{
    Stylesheet sheet;
    Parser(text).parse_items(0, false, true, sheet.items, sheet.unparsed);
    std::sort(sheet.unparsed.begin(), sheet.unparsed.end());
    return sheet;
}

SelectorAst parse_selector(std::string_view raw)
{
    SelectorAst sel;
    std::string text = normalize_selector(raw);
    sel.text = text;
    std::string_view s = sel.text;
    std::size_t i = 0;
    bool unsupported = false;
    while (i < s.size()) {
        Compound c;
        bool any = false;
        while (i < s.size() && !is_combinator_char(s[i])) {
            char ch = s[i];
            bool escaped = false;
            if (ch == '*') {
                c.tag = "*";
                ++i;
            } else if (ch == '#' || ch == '.') {
                ++i;
                std::string ident = read_ident(s, i, escaped);
                if (ident.empty() || escaped) {
                    c.unsupported.push_back(std::string(1, ch) + ident);
                } else if (ch == '#') {
                    if (c.id && *c.id != ident) {
                        c.unsupported.push_back("#" + ident); // two ids never both match
                    }
                    c.id = ident;
                } else {
                    c.classes.push_back(ident);
                }
            } else if (ch == '[') {
                std::size_t j = scan_to(s, i + 1, "]");
                j = std::min(j + 1, s.size());
                c.unsupported.emplace_back(s.substr(i, j - i));
                i = j;
            } else if (ch == ':') {
                std::size_t j = i + 1;
                if (j < s.size() && s[j] == ':') {
                    ++j;
                }
                read_ident(s, j, escaped);
                if (j < s.size() && s[j] == '(') {
                    j = scan_to(s, j + 1, ")");
                    j = std::min(j + 1, s.size());
                }
                if (j == i + 1) {
                    ++j;
                }
                c.unsupported.emplace_back(s.substr(i, j - i));
                i = j;
            } else if (is_ident_char(ch) || ch == '\\') {
                std::size_t j = i;
                std::string ident = read_ident(s, j, escaped);
                if (any || escaped) {
                    c.unsupported.emplace_back(s.substr(i, j - i));
                } else {
                    c.tag = to_lower(ident);
                }
                i = j;
            } else {
                c.unsupported.emplace_back(1, ch);
                ++i;
            }
            any = true;
        }
        if (!any) {
            c.unsupported.emplace_back("");
        }
        if (!c.unsupported.empty()) {
            unsupported = true;
        }
        sel.compounds.push_back(std::move(c));
        if (i >= s.size()) {
            break;
        }
        // combinator
        Combinator comb = Combinator::descendant;
        if (s[i] == ' ') {
            ++i;
        }
        if (i < s.size() && (s[i] == '>' || s[i] == '+' || s[i] == '~')) {
            comb = s[i] == '>' ? Combinator::child : s[i] == '+' ? Combinator::next_sibling
                                                                  : Combinator::subsequent_sibling;
            ++i;
            if (i < s.size() && s[i] == ' ') {
                ++i;
            }
        }
        if (comb != Combinator::descendant) {
            unsupported = true;
        }
        sel.combinators.push_back(comb);
        if (i >= s.size()) {
            sel.compounds.push_back(Compound{std::nullopt, std::nullopt, {}, {""}});
            unsupported = true;
        }
    }
    if (sel.compounds.empty()) {
        unsupported = true;
    }
    sel.assume_matches = unsupported;
    return sel;
}

std::string normalize_value(std::string_view raw)
{
    return normalize(raw, ",)", ",(");
}

std::string shorten_hex_colors(std::string_view v)
{
    std::string out;
    out.reserve(v.size());
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t k = skip_special(v, i);
        if (k != i) {
            out.append(v.substr(i, k - i));
            i = k;
            continue;
        }
        if (v[i] == '#' && (i == 0 || !is_ident_char(v[i - 1])) && i + 7 <= v.size()) {
            bool six = true;
            for (std::size_t d = 1; d <= 6; ++d) {
                six = six && is_hex(v[i + d]);
            }
            bool boundary = i + 7 == v.size() || !is_ident_char(v[i + 7]);
            if (six && boundary) {
                std::string_view h = v.substr(i + 1, 6);
                if (ascii_lower(h[0]) == ascii_lower(h[1]) && ascii_lower(h[2]) == ascii_lower(h[3])
                    && ascii_lower(h[4]) == ascii_lower(h[5])) {
                    out.push_back('#');
                    out.push_back(ascii_lower(h[0]));
                    out.push_back(ascii_lower(h[2]));
                    out.push_back(ascii_lower(h[4]));
                    i += 7;
                    continue;
                }
            }
        }
        out.push_back(v[i]);
        ++i;
    }
    return out;
}

std::string canonical_value(std::string_view raw)
{
    std::string v = shorten_hex_colors(normalize_value(raw));
    // lowercase remaining hex colors
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t k = skip_special(v, i);
        if (k != i) {
            i = k - 1;
            continue;
        }
        if (v[i] == '#' && (i == 0 || !is_ident_char(v[i - 1]))) {
            std::size_t j = i + 1;
            while (j < v.size() && is_hex(v[j])) {
                ++j;
            }
            if ((j - i - 1 == 3 || j - i - 1 == 6 || j - i - 1 == 4 || j - i - 1 == 8)
                && (j == v.size() || !is_ident_char(v[j]))) {
                for (std::size_t d = i + 1; d < j; ++d) {
                    v[d] = ascii_lower(v[d]);
                }
            }
            i = j - 1;
        }
    }
    return v;
}

bool matches_compound(const Compound& c, const html::Node& el)
{
    if (!el.is_element()) {
        return false;
    }
    if (c.tag && *c.tag != "*" && *c.tag != el.tag) {
        return false;
    }
    if (c.id && el.attribute_value("id") != *c.id) {
        return false;
    }
    if (!c.classes.empty()) {
        auto have = split_ws(el.attribute_value("class"));
        for (const auto& cls : c.classes) {
            if (std::find(have.begin(), have.end(), cls) == have.end()) {
                return false;
            }
        }
    }
    return true;
}

bool matches(const SelectorAst& sel, const std::vector<const html::Node*>& ancestors, const html::Node& el)
{
    if (sel.compounds.empty() || !matches_compound(sel.compounds.back(), el)) {
        return false;
    }
    // Descendant-only chains: the nearest matching ancestor is always a valid choice.
    std::size_t limit = ancestors.size();
    for (std::size_t ci = sel.compounds.size() - 1; ci-- > 0;) {
        bool found = false;
        while (limit > 0) {
            --limit;
            if (matches_compound(sel.compounds[ci], *ancestors[limit])) {
                found = true;
                break;
            }
        }
        if (!found) {
            return false;
        }
    }
    return true;
}

MatchResult match_selector(const SelectorAst& sel, const html::DomTree& dom)
{
    MatchResult r;
    if (sel.assume_matches) {
        r.assume_matches = true;
        return r;
    }
    std::vector<const html::Node*> ancestors;
    auto walk = [&](auto&& self, const html::Node& n) -> void {
        bool el = n.is_element();
        if (el && matches(sel, ancestors, n)) {
            ++r.count;
        }
        if (el) {
            ancestors.push_back(&n);
        }
        for (const auto& c : n.children) {
            self(self, c);
        }
        if (el) {
            ancestors.pop_back();
        }
    };
    walk(walk, dom);
    return r;
}

std::vector<UrlRef> find_urls(std::string_view s)
{
    std::vector<UrlRef> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (is_comment_at(s, i) || s[i] == '"' || s[i] == '\'') {
            i = skip_special(s, i);
            continue;
        }
        if ((s[i] == 'u' || s[i] == 'U') && i + 4 <= s.size() && iequals(s.substr(i, 4), "url(")
            && (i == 0 || !is_ident_char(s[i - 1]))) {
            std::size_t j = i + 4;
            while (j < s.size() && is_space(s[j])) {
                ++j;
            }
            if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
                std::size_t end = skip_special(s, j);
                std::size_t inner_end = end > j + 1 && s[end - 1] == s[j] ? end - 1 : end;
                out.push_back({std::string(s.substr(j + 1, inner_end - j - 1)), {j + 1, inner_end - j - 1}});
                i = end;
            } else {
                std::size_t end = s.find(')', j);
                if (end == npos) {
                    end = s.size();
                }
                std::size_t e = end;
                while (e > j && is_space(s[e - 1])) {
                    --e;
                }
                out.push_back({std::string(s.substr(j, e - j)), {j, e - j}});
                i = end;
            }
            continue;
        }
        if (s[i] == '@' && i + 7 <= s.size() && iequals(s.substr(i, 7), "@import")) {
            std::size_t j = skip_ws_comments(s, i + 7);
            if (j < s.size() && (s[j] == '"' || s[j] == '\'')) {
                std::size_t end = skip_special(s, j);
                std::size_t inner_end = end > j + 1 && s[end - 1] == s[j] ? end - 1 : end;
                out.push_back({std::string(s.substr(j + 1, inner_end - j - 1)), {j + 1, inner_end - j - 1}});
                i = end;
                continue;
            }
            i = j;
            continue;
        }
        ++i;
    }
    return out;
}

std::vector<std::string> font_families(std::string_view value)
{
    std::vector<std::string> out;
    std::string v = normalize_value(value);
    auto parts = split_top(v, ',');
    for (std::size_t p = 0; p < parts.size(); ++p) {
        std::string_view piece = trim(std::string_view(v).substr(parts[p].first, parts[p].second));
        if (p == 0) {
            // `font` shorthand: the family list follows the size token.
            std::size_t last_size_end = npos;
            std::size_t i = 0;
            while (i < piece.size()) {
                std::size_t k = skip_special(piece, i);
                if (k != i) {
                    i = k;
                    continue;
                }
                if (piece[i] == ' ') {
                    ++i;
                    continue;
                }
                std::size_t start = i;
                while (i < piece.size() && piece[i] != ' ' && piece[i] != '"' && piece[i] != '\'') {
                    ++i;
                }
                std::string_view tok = piece.substr(start, i - start);
                if (!tok.empty() && ((tok[0] >= '0' && tok[0] <= '9') || tok[0] == '.')) {
                    last_size_end = i;
                }
            }
            if (last_size_end != npos) {
                piece = trim(piece.substr(last_size_end));
            }
        }
        if (piece.size() >= 2 && (piece.front() == '"' || piece.front() == '\'') && piece.back() == piece.front()) {
            piece = piece.substr(1, piece.size() - 2);
        }
        std::string name = to_lower(trim(piece));
        if (!name.empty()) {
            out.push_back(std::move(name));
        }
    }
    return out;
}

bool equivalent(const Stylesheet& a, const Stylesheet& b)
{
    return items_equivalent(a.items, b.items);
}

} // namespace wattless::css
