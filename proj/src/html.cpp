#include "wattless/html.hpp"

#include "wattless/util.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>

namespace wattless::html {

namespace {

constexpr std::size_t max_depth = 512;

template <std::size_t N>
bool in_set(std::string_view tag, const std::string_view (&set)[N])
{
    return std::find(std::begin(set), std::end(set), tag) != std::end(set);
}

constexpr std::string_view void_tags[] = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr", "basefont", "keygen"};

constexpr std::string_view raw_text_tags[] = {
    "script", "style", "textarea", "title", "xmp", "noembed", "noframes", "plaintext"};

// Start tags that close an open <p>.
constexpr std::string_view closes_p[] = {
    "address", "article", "aside", "blockquote", "center", "details", "dialog", "dir",
    "div", "dl", "fieldset", "figcaption", "figure", "footer", "form", "h1",
    "h2", "h3", "h4", "h5", "h6", "header", "hgroup", "hr",
    "main", "menu", "nav", "ol", "p", "pre", "section", "table",
    "ul", "li"};

// Elements that bound the search for an open <p> to close.
constexpr std::string_view p_scope_boundary[] = {
    "applet", "caption", "html", "table", "td", "th", "marquee", "object", "template", "button", "svg"};

constexpr std::string_view headings[] = {"h1", "h2", "h3", "h4", "h5", "h6"};

bool is_name_start(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_tag_name_char(char c)
{
    return !is_space(c) && c != '/' && c != '>' && c != '\0';
}

bool looks_binary(std::string_view text)
{
    if (text.find('\0') != std::string_view::npos) {
        return true;
    }
    std::size_t control = 0;
    for (char ch : text) {
        auto c = static_cast<unsigned char>(ch);
        if (c < 0x20 && c != '\t' && c != '\n' && c != '\r' && c != '\f') {
            ++control;
        }
    }
    return !text.empty() && control * 10 > text.size();
}

struct StartTag {
    std::string name;
    std::vector<Attribute> attributes;
    bool self_closing = false;
    std::size_t end = 0; // one past '>'
};

// Parses a start tag at `pos` (pointing at '<'). Returns false if no '>' closes it.
bool parse_start_tag(std::string_view s, std::size_t pos, StartTag& out)
{
    std::size_t i = pos + 1;
    std::size_t name_start = i;
    while (i < s.size() && is_tag_name_char(s[i])) {
        ++i;
    }
    out.name = to_lower(s.substr(name_start, i - name_start));
    out.attributes.clear();
    out.self_closing = false;
    while (true) {
        while (i < s.size() && is_space(s[i])) {
            ++i;
        }
        if (i >= s.size()) {
            return false;
        }
        if (s[i] == '>') {
            out.end = i + 1;
            return true;
        }
        if (s[i] == '/') {
            if (i + 1 < s.size() && s[i + 1] == '>') {
                out.self_closing = true;
                out.end = i + 2;
                return true;
            }
            ++i;
            continue;
        }
        std::size_t an = i;
        ++i; // the first character may be '=' per the tokenizer rules
        while (i < s.size() && !is_space(s[i]) && s[i] != '/' && s[i] != '>' && s[i] != '=') {
            ++i;
        }
        Attribute attr;
        attr.name = to_lower(s.substr(an, i - an));
        std::size_t j = i;
        while (j < s.size() && is_space(s[j])) {
            ++j;
        }
        if (j < s.size() && s[j] == '=') {
            ++j;
            while (j < s.size() && is_space(s[j])) {
                ++j;
            }
            if (j >= s.size()) {
                return false;
            }
            if (s[j] == '"' || s[j] == '\'') {
                char q = s[j];
                std::size_t close = s.find(q, j + 1);
                if (close == std::string_view::npos) {
                    return false;
                }
                attr.value = std::string(s.substr(j + 1, close - j - 1));
                attr.quote = q;
                i = close + 1;
            } else {
                std::size_t vs = j;
                while (j < s.size() && !is_space(s[j]) && s[j] != '>') {
                    ++j;
                }
                attr.value = std::string(s.substr(vs, j - vs));
                attr.quote = 0;
                i = j;
            }
        } else {
            attr.has_value = false;
            attr.value.clear();
            attr.quote = 0;
        }
        bool dup = std::any_of(out.attributes.begin(), out.attributes.end(),
                               [&](const Attribute& a) { return a.name == attr.name; });
        if (!dup) {
            out.attributes.push_back(std::move(attr));
        }
    }
}

// Finds the end tag `</tag` (case-insensitive) terminating raw text content.
std::size_t find_raw_end(std::string_view s, std::size_t from, std::string_view tag)
{
    std::size_t i = from;
    while (true) {
        i = s.find("</", i);
        if (i == std::string_view::npos) {
            return i;
        }
        std::size_t n = i + 2;
        if (n + tag.size() <= s.size() && iequals(s.substr(n, tag.size()), tag)) {
            std::size_t after = n + tag.size();
            if (after >= s.size() || is_space(s[after]) || s[after] == '/' || s[after] == '>') {
                return i;
            }
        }
        i += 2;
    }
}

class TreeBuilder {
public:
    explicit TreeBuilder(std::string_view src) : src_(src)
    {
        root_.kind = NodeKind::document;
        stack_.push_back(&root_);
    }

    DomTree build()
    {
        std::size_t i = 0;
        std::size_t text_start = 0;
        auto flush_text = [&](std::size_t upto) {
            if (upto > text_start) {
                append_text(text_start, src_.substr(text_start, upto - text_start));
            }
        };
        while (i < src_.size()) {
            if (src_[i] != '<') {
                i = std::min(src_.find('<', i), src_.size());
                continue;
            }
            std::size_t consumed = try_markup(i, flush_text);
            if (consumed == 0) {
                ++i; // literal '<'
                continue;
            }
            i = consumed;
            text_start = i;
        }
        flush_text(src_.size());
        // Whatever is still open at EOF is implicitly closed.
        for (std::size_t k = 1; k < stack_.size(); ++k) {
            stack_[k]->close = Close::implied;
        }
        return std::move(root_);
    }

private:
    Node& top() { return *stack_.back(); }

    bool in_foreign() const
    {
        return std::any_of(stack_.begin(), stack_.end(),
                           [](const Node* n) { return n->is("svg") || n->is("math"); });
    }

    void append_text(std::size_t offset, std::string_view text)
    {
        auto& kids = top().children;
        if (!kids.empty() && kids.back().kind == NodeKind::text) {
            kids.back().text.append(text);
            return;
        }
        Node n;
        n.kind = NodeKind::text;
        n.text = std::string(text);
        n.source_offset = offset;
        kids.push_back(std::move(n));
    }

    void append_raw(NodeKind kind, std::size_t offset, std::string_view raw, std::string_view body)
    {
        Node n;
        n.kind = kind;
        n.raw_open = std::string(raw);
        n.text = std::string(body);
        n.source_offset = offset;
        n.close = Close::none;
        top().children.push_back(std::move(n));
    }

    // Pops elements above and including stack_[idx] (idx >= 1), marking them implied.
    void pop_to(std::size_t idx)
    {
        for (std::size_t k = stack_.size() - 1; k >= idx; --k) {
            stack_[k]->close = Close::implied;
            stack_.pop_back();
            if (k == idx) {
                break;
            }
        }
    }

    // Index of the nearest open element named `tag` before a boundary, or 0.
    template <typename Boundary>
    std::size_t find_open(std::string_view tag, Boundary&& is_boundary) const
    {
        for (std::size_t k = stack_.size() - 1; k >= 1; --k) {
            if (stack_[k]->tag == tag) {
                return k;
            }
            if (is_boundary(stack_[k]->tag)) {
                return 0;
            }
        }
        return 0;
    }

    void apply_implied_closes(const std::string& tag)
    {
        if (in_foreign()) {
            return;
        }
        if (in_set(tag, closes_p)) {
            std::size_t p = find_open("p", [](std::string_view t) { return in_set(t, p_scope_boundary); });
            if (p != 0) {
                pop_to(p);
            }
        }
        if (tag == "li") {
            std::size_t li = find_open("li", [](std::string_view t) { return t == "ul" || t == "ol" || t == "menu"; });
            if (li != 0) {
                pop_to(li);
            }
        } else if (tag == "dt" || tag == "dd") {
            for (std::size_t k = stack_.size() - 1; k >= 1; --k) {
                const auto& t = stack_[k]->tag;
                if (t == "dt" || t == "dd") {
                    pop_to(k);
                    break;
                }
                if (t == "dl") {
                    break;
                }
            }
        } else if (tag == "option" || tag == "optgroup") {
            if (top().is("option")) {
                pop_to(stack_.size() - 1);
            }
            if (tag == "optgroup" && top().is("optgroup")) {
                pop_to(stack_.size() - 1);
            }
        } else if (tag == "tr") {
            close_table_cells({"tr", "td", "th"}, {"table", "tbody", "thead", "tfoot"});
        } else if (tag == "td" || tag == "th") {
            close_table_cells({"td", "th"}, {"tr", "table"});
        } else if (tag == "tbody" || tag == "thead" || tag == "tfoot") {
            close_table_cells({"tbody", "thead", "tfoot", "tr", "td", "th"}, {"table"});
        } else if (tag == "body") {
            std::size_t head = find_open("head", [](std::string_view) { return false; });
            if (head != 0) {
                pop_to(head);
            }
        } else if (in_set(tag, headings)) {
            if (stack_.size() > 1 && in_set(std::string_view(top().tag), headings)) {
                pop_to(stack_.size() - 1);
            }
        } else if (tag == "a") {
            std::size_t a = find_open("a", [](std::string_view t) { return t == "table" || t == "button"; });
            if (a != 0) {
                pop_to(a);
            }
        }
    }

    void close_table_cells(std::initializer_list<std::string_view> closable,
                           std::initializer_list<std::string_view> boundary)
    {
        for (std::size_t k = stack_.size() - 1; k >= 1; --k) {
            const auto& t = stack_[k]->tag;
            if (std::find(boundary.begin(), boundary.end(), t) != boundary.end()) {
                return;
            }
            if (std::find(closable.begin(), closable.end(), t) != closable.end()) {
                // close the outermost closable run directly under the boundary
                std::size_t j = k;
                while (j > 1 && std::find(closable.begin(), closable.end(), stack_[j - 1]->tag) != closable.end()) {
                    --j;
                }
                pop_to(j);
                return;
            }
        }
    }

    // Handles markup at `i`. Returns the position after it, or 0 if '<' is literal text.
    template <typename Flush>
    std::size_t try_markup(std::size_t i, Flush& flush_text)
    {
        std::string_view s = src_;
        if (s.compare(i, 4, "<!--") == 0) {
            flush_text(i);
            std::size_t end = s.find("-->", i + 4);
            std::size_t stop = end == std::string_view::npos ? s.size() : end + 3;
            std::string_view body = end == std::string_view::npos ? s.substr(i + 4) : s.substr(i + 4, end - i - 4);
            Node n;
            n.kind = NodeKind::comment;
            n.raw_open = std::string(s.substr(i, stop - i));
            n.text = std::string(body);
            n.source_offset = i;
            n.close = Close::none;
            top().children.push_back(std::move(n));
            return stop;
        }
        if (i + 1 < s.size() && (s[i + 1] == '!' || s[i + 1] == '?')) {
            flush_text(i);
            std::size_t end;
            if (s.compare(i, 9, "<![CDATA[") == 0) {
                end = s.find("]]>", i);
                end = end == std::string_view::npos ? s.size() : end + 3;
            } else {
                end = s.find('>', i);
                end = end == std::string_view::npos ? s.size() : end + 1;
            }
            append_raw(NodeKind::markup, i, s.substr(i, end - i), s.substr(i, end - i));
            return end;
        }
        if (i + 2 < s.size() && s[i + 1] == '/' && is_name_start(s[i + 2])) {
            std::size_t end = s.find('>', i);
            if (end == std::string_view::npos) {
                return 0;
            }
            std::size_t n = i + 2;
            while (n < end && is_tag_name_char(s[n])) {
                ++n;
            }
            flush_text(i);
            std::string tag = to_lower(s.substr(i + 2, n - i - 2));
            std::string_view raw = s.substr(i, end + 1 - i);
            handle_end_tag(tag, raw, i);
            return end + 1;
        }
        if (i + 1 < s.size() && is_name_start(s[i + 1])) {
            StartTag st;
            if (!parse_start_tag(s, i, st)) {
                return 0;
            }
            flush_text(i);
            return handle_start_tag(st, i);
        }
        return 0;
    }

    void handle_end_tag(const std::string& tag, std::string_view raw, std::size_t offset)
    {
        if (!is_void_element(tag)) {
            for (std::size_t k = stack_.size() - 1; k >= 1; --k) {
                if (stack_[k]->tag == tag) {
                    for (std::size_t j = stack_.size() - 1; j > k; --j) {
                        stack_[j]->close = Close::implied;
                    }
                    stack_[k]->close = Close::explicit_tag;
                    stack_[k]->raw_close = std::string(raw);
                    stack_.resize(k);
                    return;
                }
            }
        }
        append_raw(NodeKind::markup, offset, raw, raw);
    }

    std::size_t handle_start_tag(StartTag& st, std::size_t offset)
    {
        apply_implied_closes(st.name);
        Node n;
        n.kind = NodeKind::element;
        n.tag = st.name;
        n.attributes = std::move(st.attributes);
        n.raw_open = std::string(src_.substr(offset, st.end - offset));
        n.self_closing = st.self_closing;
        n.source_offset = offset;
        std::size_t next = st.end;

        bool foreign = in_foreign() || n.tag == "svg" || n.tag == "math";
        bool childless = is_void_element(n.tag) || (st.self_closing && foreign) || stack_.size() > max_depth;
        if (childless) {
            n.close = Close::none;
            top().children.push_back(std::move(n));
            return next;
        }
        if (is_raw_text_element(n.tag) && !foreign) {
            std::size_t end = find_raw_end(src_, next, n.tag);
            std::size_t body_end = end == std::string_view::npos ? src_.size() : end;
            if (body_end > next) {
                Node t;
                t.kind = NodeKind::text;
                t.text = std::string(src_.substr(next, body_end - next));
                t.source_offset = next;
                n.children.push_back(std::move(t));
            }
            if (end == std::string_view::npos) {
                n.close = Close::implied;
                next = src_.size();
            } else {
                std::size_t gt = src_.find('>', end);
                std::size_t stop = gt == std::string_view::npos ? src_.size() : gt + 1;
                n.close = Close::explicit_tag;
                n.raw_close = std::string(src_.substr(end, stop - end));
                next = stop;
            }
            top().children.push_back(std::move(n));
            return next;
        }
        top().children.push_back(std::move(n));
        stack_.push_back(&top().children.back());
        return next;
    }

    std::string_view src_;
    Node root_;
    std::vector<Node*> stack_;
};

void serialize_into(const Node& n, std::string& out)
{
    switch (n.kind) {
    case NodeKind::document:
        for (const auto& c : n.children) {
            serialize_into(c, out);
        }
        return;
    case NodeKind::text:
        out += n.text;
        return;
    case NodeKind::comment:
        if (!n.raw_open.empty()) {
            out += n.raw_open;
        } else {
            out += "<!--";
            out += n.text;
            out += "-->";
        }
        return;
    case NodeKind::markup:
        out += n.raw_open.empty() ? n.text : n.raw_open;
        return;
    case NodeKind::element:
        out += n.raw_open.empty() ? format_start_tag(n) : n.raw_open;
        for (const auto& c : n.children) {
            serialize_into(c, out);
        }
        if (n.close == Close::explicit_tag) {
            if (n.raw_close.empty()) {
                out += "</";
                out += n.tag;
                out += '>';
            } else {
                out += n.raw_close;
            }
        }
        return;
    }
}

template <typename NodeT, typename Fn>
void walk_elements(NodeT& n, Fn& fn)
{
    if (n.kind == NodeKind::element) {
        fn(n);
    }
    for (auto& c : n.children) {
        walk_elements(c, fn);
    }
}

template <typename NodeT>
NodeT* find_first_impl(NodeT& n, std::string_view tag)
{
    if (n.is(tag)) {
        return &n;
    }
    for (auto& c : n.children) {
        if (auto* hit = find_first_impl(c, tag)) {
            return hit;
        }
    }
    return nullptr;
}

void text_content_into(const Node& n, std::string& out)
{
    if (n.kind == NodeKind::text) {
        out += n.text;
        return;
    }
    if (n.is("script") || n.is("style")) {
        return;
    }
    for (const auto& c : n.children) {
        text_content_into(c, out);
    }
}

void append_utf8(std::string& out, std::uint32_t cp)
{
    if (cp == 0 || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
        cp = 0xfffd;
    }
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

bool check_node(const Node& n)
{
    if (n.kind != NodeKind::element) {
        if (n.kind != NodeKind::document && !n.children.empty()) {
            return false;
        }
    } else {
        if (n.tag.empty()) {
            return false;
        }
        if (is_void_element(n.tag) && !n.children.empty()) {
            return false;
        }
        for (std::size_t i = 0; i < n.attributes.size(); ++i) {
            for (std::size_t j = i + 1; j < n.attributes.size(); ++j) {
                if (n.attributes[i].name == n.attributes[j].name) {
                    return false;
                }
            }
        }
    }
    return std::all_of(n.children.begin(), n.children.end(), check_node);
}

} // namespace

const Attribute* Node::attribute(std::string_view name) const
{
    for (const auto& a : attributes) {
        if (a.name == name) {
            return &a;
        }
    }
    return nullptr;
}

std::string_view Node::attribute_value(std::string_view name) const
{
    const Attribute* a = attribute(name);
    return a ? std::string_view(a->value) : std::string_view{};
}

void Node::set_attribute(std::string_view name, std::string value)
{
    for (auto& a : attributes) {
        if (a.name == name) {
            a.value = std::move(value);
            a.has_value = true;
            if (a.quote == 0) {
                a.quote = '"';
            }
            raw_open.clear();
            return;
        }
    }
    Attribute a;
    a.name = std::string(name);
    a.value = std::move(value);
    attributes.push_back(std::move(a));
    raw_open.clear();
}

void Node::remove_attribute(std::string_view name)
{
    auto it = std::remove_if(attributes.begin(), attributes.end(),
                             [&](const Attribute& a) { return a.name == name; });
    if (it != attributes.end()) {
        attributes.erase(it, attributes.end());
        raw_open.clear();
    }
}

bool is_void_element(std::string_view tag)
{
    return in_set(tag, void_tags);
}

bool is_raw_text_element(std::string_view tag)
{
    return in_set(tag, raw_text_tags);
}

DomTree parse_html(std::string_view text)
{
    if (looks_binary(text)) {
        Node root;
        root.kind = NodeKind::document;
        Node t;
        t.kind = NodeKind::text;
        t.text = std::string(text);
        root.children.push_back(std::move(t));
        return root;
    }
    return TreeBuilder(text).build();
}

std::string serialize(const Node& node)
{
    std::string out;
    serialize_into(node, out);
    return out;
}

std::string format_start_tag(const Node& element)
{
    std::string out = "<" + element.tag;
    for (const auto& a : element.attributes) {
        out += ' ';
        out += a.name;
        if (a.has_value) {
            out += '=';
            char q = a.quote;
            // An unquoted value that no longer fits the unquoted syntax gets quoted.
            if (q == 0 && (a.value.empty() || a.value.find_first_of(" \t\n\r\f\"'=<>`") != std::string::npos)) {
                q = a.value.find('"') == std::string::npos ? '"' : '\'';
            }
            if (q != 0) {
                out += q;
            }
            out += a.value;
            if (q != 0) {
                out += q;
            }
        }
    }
    out += element.self_closing ? "/>" : ">";
    return out;
}

void for_each_element(const Node& root, const std::function<void(const Node&)>& fn)
{
    walk_elements(root, fn);
}

void for_each_element(Node& root, const std::function<void(Node&)>& fn)
{
    walk_elements(root, fn);
}

std::vector<const Node*> elements_in_order(const Node& root)
{
    std::vector<const Node*> out;
    for_each_element(root, [&](const Node& n) { out.push_back(&n); });
    return out;
}

const Node* find_first(const Node& root, std::string_view tag)
{
    return find_first_impl(root, tag);
}

Node* find_first(Node& root, std::string_view tag)
{
    return find_first_impl(root, tag);
}

std::string text_content(const Node& root)
{
    std::string out;
    text_content_into(root, out);
    return out;
}

std::string decode_entities(std::string_view raw)
{
    struct Named {
        std::string_view name;
        std::uint32_t cp;
    };
    static constexpr std::array<Named, 9> named{{{"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'},
                                                 {"apos", '\''}, {"nbsp", 0xa0}, {"copy", 0xa9},
                                                 {"mdash", 0x2014}, {"hellip", 0x2026}}};
    std::string out;
    out.reserve(raw.size());
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw[i] != '&') {
            out.push_back(raw[i++]);
            continue;
        }
        std::size_t semi = raw.find(';', i);
        if (semi == std::string_view::npos || semi - i > 12) {
            out.push_back(raw[i++]);
            continue;
        }
        std::string_view ent = raw.substr(i + 1, semi - i - 1);
        bool done = false;
        if (!ent.empty() && ent[0] == '#') {
            std::uint32_t cp = 0;
            bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
            std::string_view digits = ent.substr(hex ? 2 : 1);
            bool ok = !digits.empty();
            for (char c : digits) {
                int v = -1;
                if (c >= '0' && c <= '9') {
                    v = c - '0';
                } else if (hex && ascii_lower(c) >= 'a' && ascii_lower(c) <= 'f') {
                    v = ascii_lower(c) - 'a' + 10;
                }
                if (v < 0 || cp > 0x10ffff) {
                    ok = false;
                    break;
                }
                cp = cp * (hex ? 16u : 10u) + static_cast<std::uint32_t>(v);
            }
            if (ok) {
                append_utf8(out, cp);
                done = true;
            }
        } else {
            for (const auto& n : named) {
                if (n.name == ent) {
                    append_utf8(out, n.cp);
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            i = semi + 1;
        } else {
            out.push_back(raw[i++]);
        }
    }
    return out;
}

std::vector<std::string> class_list(const Node& element)
{
    std::vector<std::string> out;
    for (auto tok : split_ws(element.attribute_value("class"))) {
        out.emplace_back(tok);
    }
    return out;
}

bool check_invariants(const Node& root)
{
    return check_node(root);
}

} // namespace wattless::html
