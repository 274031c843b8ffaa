#include "wattless/svg.hpp"

#include "wattless/util.hpp"

#include <set>

namespace wattless::svg {

namespace {

bool name_start(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == ':'
        || static_cast<unsigned char>(c) >= 0x80;
}

bool name_char(char c)
{
    return name_start(c) || (c >= '0' && c <= '9') || c == '-' || c == '.';
}

class Parser {
public:
    explicit Parser(std::string_view s) : s_(s) {}

    std::optional<XmlNode> run()
    {
        XmlNode doc;
        doc.kind = XmlKind::document;
        if (s_.starts_with("\xEF\xBB\xBF")) {
            doc.children.push_back({XmlKind::text, {}, {}, {}, std::string(s_.substr(0, 3)), false});
            i_ = 3;
        }
        bool root_seen = false;
        while (i_ < s_.size()) {
            if (s_[i_] != '<') {
                std::size_t j = s_.find('<', i_);
                std::string_view t = s_.substr(i_, (j == std::string_view::npos ? s_.size() : j) - i_);
                if (!trim(t).empty()) {
                    return std::nullopt;
                }
                doc.children.push_back({XmlKind::text, {}, {}, {}, std::string(t), false});
                i_ += t.size();
                continue;
            }
            if (starts("<?") || starts("<!--") || starts("<!DOCTYPE") || starts("<!doctype")) {
                auto n = misc();
                if (!n) {
                    return std::nullopt;
                }
                doc.children.push_back(std::move(*n));
                continue;
            }
            if (root_seen) {
                return std::nullopt;
            }
            auto el = element(0);
            if (!el) {
                return std::nullopt;
            }
            doc.children.push_back(std::move(*el));
            root_seen = true;
        }
        if (!root_seen) {
            return std::nullopt;
        }
        return doc;
    }

private:
    bool starts(std::string_view p) const { return s_.substr(i_).starts_with(p); }

    std::optional<XmlNode> misc()
    {
        XmlNode n;
        std::size_t start = i_;
        std::size_t end;
        if (starts("<?")) {
            n.kind = XmlKind::instruction;
            end = s_.find("?>", i_ + 2);
            if (end == std::string_view::npos) {
                return std::nullopt;
            }
            end += 2;
        } else if (starts("<!--")) {
            n.kind = XmlKind::comment;
            end = s_.find("-->", i_ + 4);
            if (end == std::string_view::npos) {
                return std::nullopt;
            }
            end += 3;
        } else if (starts("<![CDATA[")) {
            n.kind = XmlKind::cdata;
            end = s_.find("]]>", i_ + 9);
            if (end == std::string_view::npos) {
                return std::nullopt;
            }
            end += 3;
        } else {
            n.kind = XmlKind::doctype;
            int depth = 0;
            end = i_ + 2;
            for (; end < s_.size(); ++end) {
                if (s_[end] == '[') {
                    ++depth;
                } else if (s_[end] == ']') {
                    --depth;
                } else if (s_[end] == '>' && depth <= 0) {
                    break;
                }
            }
            if (end >= s_.size()) {
                return std::nullopt;
            }
            ++end;
        }
        n.text = std::string(s_.substr(start, end - start));
        i_ = end;
        return n;
    }

    std::optional<std::string> name()
    {
        if (i_ >= s_.size() || !name_start(s_[i_])) {
            return std::nullopt;
        }
        std::size_t start = i_;
        while (i_ < s_.size() && name_char(s_[i_])) {
            ++i_;
        }
        return std::string(s_.substr(start, i_ - start));
    }

    void skip_ws()
    {
        while (i_ < s_.size() && is_space(s_[i_])) {
            ++i_;
        }
    }

    std::optional<XmlNode> element(int depth)
    {
        if (depth > 512) {
            return std::nullopt;
        }
        ++i_; // '<'
        XmlNode el;
        auto n = name();
        if (!n) {
            return std::nullopt;
        }
        el.name = *n;
        std::set<std::string> seen;
        for (;;) {
            std::size_t before = i_;
            skip_ws();
            if (i_ >= s_.size()) {
                return std::nullopt;
            }
            if (starts("/>")) {
                i_ += 2;
                el.self_closing = true;
                return el;
            }
            if (s_[i_] == '>') {
                ++i_;
                break;
            }
            if (i_ == before) {
                return std::nullopt; // attributes must be separated by whitespace
            }
            auto an = name();
            if (!an || !seen.insert(*an).second) {
                return std::nullopt;
            }
            skip_ws();
            if (i_ >= s_.size() || s_[i_] != '=') {
                return std::nullopt;
            }
            ++i_;
            skip_ws();
            if (i_ >= s_.size() || (s_[i_] != '"' && s_[i_] != '\'')) {
                return std::nullopt;
            }
            char q = s_[i_++];
            std::size_t end = s_.find(q, i_);
            if (end == std::string_view::npos) {
                return std::nullopt;
            }
            std::string_view v = s_.substr(i_, end - i_);
            if (v.find('<') != std::string_view::npos) {
                return std::nullopt;
            }
            el.attributes.push_back({*an, std::string(v), q});
            i_ = end + 1;
        }
        for (;;) {
            if (i_ >= s_.size()) {
                return std::nullopt;
            }
            if (s_[i_] != '<') {
                std::size_t j = s_.find('<', i_);
                if (j == std::string_view::npos) {
                    return std::nullopt;
                }
                el.children.push_back({XmlKind::text, {}, {}, {}, std::string(s_.substr(i_, j - i_)), false});
                i_ = j;
                continue;
            }
            if (starts("</")) {
                i_ += 2;
                auto en = name();
                if (!en || *en != el.name) {
                    return std::nullopt;
                }
                skip_ws();
                if (i_ >= s_.size() || s_[i_] != '>') {
                    return std::nullopt;
                }
                ++i_;
                return el;
            }
            if (starts("<?") || starts("<!--") || starts("<![CDATA[")) {
                auto m = misc();
                if (!m) {
                    return std::nullopt;
                }
                el.children.push_back(std::move(*m));
                continue;
            }
            auto child = element(depth + 1);
            if (!child) {
                return std::nullopt;
            }
            el.children.push_back(std::move(*child));
        }
    }

    std::string_view s_;
    std::size_t i_ = 0;
};

constexpr std::string_view editor_prefixes[] = {"sodipodi", "inkscape", "sketch", "serif"};

constexpr std::string_view geometry_attributes[] = {
    "d",  "points", "x",  "y",  "x1", "y1",    "x2",      "y2",        "cx",          "cy",
    "r",  "rx",     "ry", "fx", "fy", "dx",    "dy",      "width",     "height",      "viewBox",
    "transform", "stroke-width", "gradientTransform", "patternTransform"};

constexpr std::string_view text_elements[] = {"text", "tspan", "textPath", "title", "desc", "style", "script"};

std::string_view prefix_of(std::string_view name)
{
    std::size_t c = name.find(':');
    return c == std::string_view::npos ? std::string_view{} : name.substr(0, c);
}

template <std::size_t N>
bool contains(const std::string_view (&set)[N], std::string_view v)
{
    for (auto s : set) {
        if (s == v) {
            return true;
        }
    }
    return false;
}

bool editor_name(std::string_view name)
{
    std::string_view p = prefix_of(name);
    if (p == "xmlns") {
        return contains(editor_prefixes, name.substr(6));
    }
    return !p.empty() && contains(editor_prefixes, p);
}

void prune(XmlNode& node, bool keep_space)
{
    std::vector<XmlNode> kept;
    for (auto& c : node.children) {
        if (c.kind == XmlKind::comment) {
            continue;
        }
        if (c.kind == XmlKind::element && (c.name == "metadata" || editor_name(c.name))) {
            continue;
        }
        if (c.kind == XmlKind::text && trim(c.text).empty() && !c.text.starts_with("\xEF\xBB\xBF")) {
            if (!keep_space) {
                continue;
            }
            c.text = " ";
        }
        kept.push_back(std::move(c));
    }
    node.children = std::move(kept);
    if (node.kind == XmlKind::element) {
        std::vector<XmlAttribute> attrs;
        for (auto& a : node.attributes) {
            if (editor_name(a.name)) {
                continue;
            }
            if (contains(geometry_attributes, a.name)) {
                a.value = round_numbers(a.value);
            }
            attrs.push_back(std::move(a));
        }
        node.attributes = std::move(attrs);
    }
    for (auto& c : node.children) {
        if (c.kind == XmlKind::element) {
            prune(c, contains(text_elements, c.name));
        }
    }
}

void used_prefixes(const XmlNode& n, std::set<std::string>& out)
{
    if (n.kind == XmlKind::element) {
        out.emplace(prefix_of(n.name));
        for (const auto& a : n.attributes) {
            std::string_view p = prefix_of(a.name);
            if (p != "xmlns") {
                out.emplace(p);
            }
        }
    }
    for (const auto& c : n.children) {
        used_prefixes(c, out);
    }
}

void drop_unused_namespaces(XmlNode& n, const std::set<std::string>& used)
{
    if (n.kind == XmlKind::element) {
        std::erase_if(n.attributes, [&](const XmlAttribute& a) {
            return a.name.starts_with("xmlns:") && !used.count(a.name.substr(6));
        });
    }
    for (auto& c : n.children) {
        drop_unused_namespaces(c, used);
    }
}

bool is_digit(char c)
{
    return c >= '0' && c <= '9';
}

} // namespace

const XmlAttribute* XmlNode::attribute(std::string_view n) const
{
    for (const auto& a : attributes) {
        if (a.name == n) {
            return &a;
        }
    }
    return nullptr;
}

std::optional<XmlNode> parse_xml(std::string_view text)
{
    return Parser(text).run();
}

bool well_formed(std::string_view text)
{
    return parse_xml(text).has_value();
}

std::string serialize(const XmlNode& node)
{
    std::string out;
    switch (node.kind) {
    case XmlKind::document:
        for (const auto& c : node.children) {
            out += serialize(c);
        }
        break;
    case XmlKind::text:
    case XmlKind::comment:
    case XmlKind::instruction:
    case XmlKind::cdata:
    case XmlKind::doctype:
        out = node.text;
        break;
    case XmlKind::element:
        out = "<" + node.name;
        for (const auto& a : node.attributes) {
            out += ' ';
            out += a.name;
            out += '=';
            out += a.quote;
            out += a.value;
            out += a.quote;
        }
        if (node.self_closing && node.children.empty()) {
            out += "/>";
            break;
        }
        out += '>';
        for (const auto& c : node.children) {
            out += serialize(c);
        }
        out += "</" + node.name + ">";
        break;
    }
    return out;
}

std::string round_numbers(std::string_view v, int decimals)
{
    std::string out;
    std::size_t i = 0;
    while (i < v.size()) {
        char c = v[i];
        bool starts_number = is_digit(c) || (c == '.' && i + 1 < v.size() && is_digit(v[i + 1]));
        if (!starts_number) {
            out.push_back(c);
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < v.size() && is_digit(v[i])) {
            ++i;
        }
        std::string_view int_part = v.substr(start, i - start);
        std::string_view frac;
        if (i < v.size() && v[i] == '.') {
            std::size_t f = ++i;
            while (i < v.size() && is_digit(v[i])) {
                ++i;
            }
            frac = v.substr(f, i - f);
        }
        bool exponent = i < v.size() && (v[i] == 'e' || v[i] == 'E')
            && ((i + 1 < v.size() && is_digit(v[i + 1]))
                || (i + 2 < v.size() && (v[i + 1] == '-' || v[i + 1] == '+') && is_digit(v[i + 2])));
        if (exponent) {
            i += 2;
            while (i < v.size() && is_digit(v[i])) {
                ++i;
            }
            out.append(v.substr(start, i - start));
            continue;
        }
        if (static_cast<int>(frac.size()) <= decimals) {
            out.append(v.substr(start, i - start));
            continue;
        }
        std::string digits = std::string(int_part) + std::string(frac.substr(0, static_cast<std::size_t>(decimals)));
        bool round_up = frac[static_cast<std::size_t>(decimals)] >= '5';
        if (round_up) {
            std::size_t k = digits.size();
            while (k > 0) {
                --k;
                if (digits[k] == '9') {
                    digits[k] = '0';
                } else {
                    ++digits[k];
                    break;
                }
                if (k == 0) {
                    digits.insert(digits.begin(), '1');
                    break;
                }
            }
            if (digits.empty()) {
                digits = "1";
            }
        }
        std::size_t int_len = digits.size() - static_cast<std::size_t>(decimals);
        std::string ip = digits.substr(0, int_len);
        std::string fp = digits.substr(int_len);
        while (!fp.empty() && fp.back() == '0') {
            fp.pop_back();
        }
        std::string num = ip;
        if (!int_part.empty() && num.empty()) {
            num = "0";
        }
        if (!fp.empty()) {
            num += '.';
            num += fp;
        } else if (num.empty()) {
            num = "0";
        }
        out += num;
        if (num.find('.') == std::string::npos && i < v.size() && v[i] == '.') {
            out += ' '; // keep the following fraction a separate number
        }
    }
    return out;
}

std::optional<std::string> optimize_svg(std::string_view text)
{
    auto doc = parse_xml(text);
    if (!doc) {
        return std::nullopt;
    }
    prune(*doc, false);
    std::set<std::string> used;
    used_prefixes(*doc, used);
    drop_unused_namespaces(*doc, used);
    std::string out = serialize(*doc);
    if (out.size() > text.size()) {
        return std::string(text);
    }
    return out;
}

} // namespace wattless::svg
