#include "wattless/script.hpp"

#include <algorithm>
#include <array>

namespace wattless::script {

namespace {

constexpr std::string_view punctuators[] = {
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=", "=>", "==", "!=", "<=", ">=",
    "&&", "||", "??", "?.", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "**", "<<",
    ">>", "{", "}", "(", ")", "[", "]", ";", ",", "<", ">", "+", "-", "*", "%", "&", "|"};

constexpr std::string_view regex_keywords[] = {
    "return", "typeof", "case", "do", "else", "in", "instanceof", "new", "void", "delete", "throw", "yield",
    "await", "of"};

// Two-character sequences that would fuse into a different token when two
// tokens are written without a space.
constexpr std::string_view fusing_pairs[] = {
    "==", "!=", "<=", ">=", "&&", "||", "??", "?.", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "**", "<<", ">>", "=>", "..", "//", "/*", "*/", "<!", "->", "!-", ".."};

bool is_ws(char c)
{
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

bool is_ident_start(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c == '\\'
        || static_cast<unsigned char>(c) >= 0x80;
}

bool is_ident_part(char c)
{
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

bool is_digit(char c)
{
    return c >= '0' && c <= '9';
}

bool is_word_char(char c)
{
    return is_ident_part(c) || c == '#';
}

class Lexer {
public:
    explicit Lexer(std::string_view s) : s_(s) {}

    std::vector<Token> run()
    {
        std::vector<Token> out;
        std::size_t i = 0;
        while (i < s_.size()) {
            std::size_t start = i;
            TokenKind kind = lex_one(i);
            Token t{kind, s_.substr(start, i - start), start};
            if (t.significant()) {
                prev_ = t;
                has_prev_ = true;
            }
            out.push_back(t);
        }
        return out;
    }

    bool clean() const { return clean_; }

private:
    bool regex_allowed() const
    {
        if (!has_prev_) {
            return true;
        }
        switch (prev_.kind) {
        case TokenKind::punctuator:
            return prev_.text != ")" && prev_.text != "]";
        case TokenKind::identifier:
            return std::find(std::begin(regex_keywords), std::end(regex_keywords), prev_.text) != std::end(regex_keywords);
        default:
            return false;
        }
    }

    // Scans a template piece starting at `i` (at '`' or at the '}' that resumes it).
    void scan_template(std::size_t& i)
    {
        ++i;
        while (i < s_.size()) {
            char c = s_[i];
            if (c == '\\') {
                i += 2;
                continue;
            }
            if (c == '`') {
                ++i;
                return;
            }
            if (c == '$' && i + 1 < s_.size() && s_[i + 1] == '{') {
                i += 2;
                templates_.push_back(brace_depth_);
                ++brace_depth_;
                return;
            }
            ++i;
        }
        i = s_.size();
        clean_ = false;
    }

    TokenKind lex_one(std::size_t& i)
    {
        const std::size_t n = s_.size();
        char c = s_[i];
        if (is_ws(c)) {
            while (i < n && is_ws(s_[i])) {
                ++i;
            }
            return TokenKind::whitespace;
        }
        if (c == '/' && i + 1 < n && s_[i + 1] == '/') {
            std::size_t e = s_.find('\n', i);
            i = e == std::string_view::npos ? n : e;
            return TokenKind::line_comment;
        }
        if (c == '/' && i + 1 < n && s_[i + 1] == '*') {
            std::size_t e = s_.find("*/", i + 2);
            if (e == std::string_view::npos) {
                clean_ = false;
                i = n;
            } else {
                i = e + 2;
            }
            return TokenKind::block_comment;
        }
        if (c == '"' || c == '\'') {
            std::size_t j = i + 1;
            while (j < n && s_[j] != c && s_[j] != '\n') {
                j += s_[j] == '\\' ? 2 : 1;
            }
            if (j < n && s_[j] == c) {
                i = j + 1;
            } else {
                clean_ = false;
                i = std::min(j, n);
            }
            return TokenKind::string;
        }
        if (c == '`') {
            scan_template(i);
            return TokenKind::template_part;
        }
        if (c == '}' && !templates_.empty() && brace_depth_ - 1 == templates_.back()) {
            templates_.pop_back();
            --brace_depth_;
            scan_template(i);
            return TokenKind::template_part;
        }
        if (c == '/' && regex_allowed()) {
            std::size_t j = i + 1;
            bool in_class = false;
            bool ok = false;
            while (j < n && s_[j] != '\n') {
                char d = s_[j];
                if (d == '\\') {
                    j += 2;
                    continue;
                }
                if (d == '[') {
                    in_class = true;
                } else if (d == ']') {
                    in_class = false;
                } else if (d == '/' && !in_class) {
                    ok = true;
                    break;
                }
                ++j;
            }
            if (ok) {
                i = j + 1;
                while (i < n && is_ident_part(s_[i])) {
                    ++i;
                }
                return TokenKind::regex;
            }
        }
        if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(s_[i + 1]))) {
            std::size_t j = i;
            if (c == '0' && j + 1 < n && std::string_view("xXbBoO").find(s_[j + 1]) != std::string_view::npos) {
                j += 2;
                while (j < n && (is_ident_part(s_[j]))) {
                    ++j;
                }
            } else {
                while (j < n && (is_digit(s_[j]) || s_[j] == '_')) {
                    ++j;
                }
                if (j < n && s_[j] == '.') {
                    ++j;
                    while (j < n && (is_digit(s_[j]) || s_[j] == '_')) {
                        ++j;
                    }
                }
                if (j < n && (s_[j] == 'e' || s_[j] == 'E')) {
                    std::size_t k = j + 1;
                    if (k < n && (s_[k] == '+' || s_[k] == '-')) {
                        ++k;
                    }
                    if (k < n && is_digit(s_[k])) {
                        j = k;
                        while (j < n && is_digit(s_[j])) {
                            ++j;
                        }
                    }
                }
                while (j < n && is_ident_part(s_[j])) {
                    ++j;
                }
            }
            i = j;
            return TokenKind::number;
        }
        if (is_ident_start(c) || (c == '#' && i + 1 < n && is_ident_start(s_[i + 1]))) {
            std::size_t j = i + 1;
            while (j < n) {
                if (s_[j] == '\\') {
                    j += 2;
                    continue;
                }
                if (!is_ident_part(s_[j])) {
                    break;
                }
                ++j;
            }
            i = std::min(j, n);
            return TokenKind::identifier;
        }
        for (auto p : punctuators) {
            if (s_.compare(i, p.size(), p) == 0) {
                if (p == "?." && i + 2 < n && is_digit(s_[i + 2])) {
                    continue;
                }
                if (p == "{") {
                    ++brace_depth_;
                } else if (p == "}") {
                    --brace_depth_;
                }
                i += p.size();
                return TokenKind::punctuator;
            }
        }
        ++i; // any other single character (=, !, ?, ., :, ~, ^, /, @, ...)
        return TokenKind::punctuator;
    }

    std::string_view s_;
    Token prev_{TokenKind::whitespace, {}, 0};
    bool has_prev_ = false;
    bool clean_ = true;
    int brace_depth_ = 0;
    std::vector<int> templates_;
};

bool need_space(const Token& prev, const Token& next)
{
    char a = prev.text.back();
    char b = next.text.front();
    if (is_word_char(a) && is_word_char(b)) {
        return true;
    }
    if (prev.kind == TokenKind::regex && is_ident_part(b)) {
        return true;
    }
    if (prev.kind == TokenKind::number && b == '.') {
        return true;
    }
    char pair[2] = {a, b};
    std::string_view pv(pair, 2);
    return std::find(std::begin(fusing_pairs), std::end(fusing_pairs), pv) != std::end(fusing_pairs);
}

bool newline_droppable(const Token& prev, const Token& next)
{
    if (prev.kind == TokenKind::punctuator && (prev.text == ";" || prev.text == "{" || prev.text == ",")) {
        return true;
    }
    return next.kind == TokenKind::punctuator && next.text == "}";
}

bool is_assignment_op(std::string_view p)
{
    static constexpr std::string_view ops[] = {
        "=", "+=", "-=", "*=", "/=", "%=", "**=", "<<=", ">>=", ">>>=", "&=", "|=", "^=", "&&=", "||=", "?\?=",
        "++", "--"};
    return std::find(std::begin(ops), std::end(ops), p) != std::end(ops);
}

} // namespace

bool Token::has_newline() const
{
    return (kind == TokenKind::whitespace || kind == TokenKind::block_comment)
        && text.find_first_of("\n\r") != std::string_view::npos;
}

std::vector<Token> tokenize(std::string_view src)
{
    return Lexer(src).run();
}

std::vector<Token> significant_tokens(std::string_view src)
{
    auto all = tokenize(src);
    std::vector<Token> out;
    std::copy_if(all.begin(), all.end(), std::back_inserter(out), [](const Token& t) { return t.significant(); });
    return out;
}

bool well_formed(std::string_view src)
{
    Lexer lx(src);
    lx.run();
    return lx.clean();
}

std::vector<std::string> default_dom_op_patterns()
{
    return {"createElement", "appendChild",      "removeChild",  "insertBefore",
            "innerHTML=",    "outerHTML=",       "setAttribute", "querySelector",
            "querySelectorAll", "getElementById", "classList.",  "insertAdjacentHTML"};
}

std::size_t count_dom_ops(std::string_view src, const std::vector<std::string>& patterns)
{
    struct Pattern {
        std::string_view name;
        char suffix;
    };
    std::vector<Pattern> ps;
    for (const auto& p : patterns) {
        std::string_view v = p;
        v = v.substr(0, v.find_last_not_of(' ') + 1);
        char suffix = 0;
        if (!v.empty() && (v.back() == '=' || v.back() == '.')) {
            suffix = v.back();
            v.remove_suffix(1);
            v = v.substr(0, v.find_last_not_of(' ') + 1);
        }
        ps.push_back({v, suffix});
    }
    auto toks = significant_tokens(src);
    std::size_t count = 0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].kind != TokenKind::identifier) {
            continue;
        }
        for (const auto& p : ps) {
            if (toks[i].text != p.name) {
                continue;
            }
            if (p.suffix == 0) {
                ++count;
            } else if (i + 1 < toks.size()) {
                const Token& nx = toks[i + 1];
                if (p.suffix == '=' && (nx.is_punct("=") || nx.is_punct("+="))) {
                    ++count;
                } else if (p.suffix == '.' && (nx.is_punct(".") || nx.is_punct("?."))) {
                    ++count;
                }
            }
        }
    }
    return count;
}

std::size_t count_dom_ops(std::string_view src)
{
    static const auto defaults = default_dom_op_patterns();
    return count_dom_ops(src, defaults);
}

std::vector<ConsoleStatement> find_console_statements(const std::vector<Token>& tokens)
{
    std::vector<std::size_t> sig;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].significant()) {
            sig.push_back(i);
        }
    }
    std::vector<ConsoleStatement> out;
    for (std::size_t p = 0; p + 3 < sig.size(); ++p) {
        const Token& t = tokens[sig[p]];
        if (t.kind != TokenKind::identifier || t.text != "console") {
            continue;
        }
        if (p > 0) {
            const Token& prev = tokens[sig[p - 1]];
            if (!(prev.is_punct(";") || prev.is_punct("{") || prev.is_punct("}"))) {
                continue;
            }
        }
        if (!tokens[sig[p + 1]].is_punct(".") || tokens[sig[p + 2]].kind != TokenKind::identifier
            || !tokens[sig[p + 3]].is_punct("(")) {
            continue;
        }
        int depth = 0;
        std::size_t q = p + 3;
        bool safe = true;
        for (; q < sig.size(); ++q) {
            const Token& a = tokens[sig[q]];
            if (a.is_punct("(") || a.is_punct("[") || a.is_punct("{")) {
                ++depth;
            } else if (a.is_punct(")") || a.is_punct("]") || a.is_punct("}")) {
                if (--depth == 0) {
                    break;
                }
            } else if (a.kind == TokenKind::template_part) {
                // `${ ... }` pieces open or close an expression
                if (a.text.size() >= 2 && a.text.substr(a.text.size() - 2) == "${") {
                    ++depth;
                }
                if (a.text.front() == '}') {
                    --depth;
                }
            } else if (a.kind == TokenKind::punctuator && is_assignment_op(a.text)) {
                safe = false;
            } else if (a.kind == TokenKind::identifier && (a.text == "await" || a.text == "yield")) {
                safe = false;
            }
        }
        if (q >= sig.size() || !safe) {
            continue;
        }
        std::size_t close = sig[q];
        std::size_t end = close + 1;
        if (q + 1 < sig.size()) {
            const Token& nx = tokens[sig[q + 1]];
            if (nx.is_punct(";")) {
                end = sig[q + 1] + 1;
            } else if (!nx.is_punct("}")) {
                bool newline = false;
                for (std::size_t k = close + 1; k < sig[q + 1]; ++k) {
                    newline = newline || tokens[k].has_newline();
                }
                if (!newline) {
                    continue;
                }
            }
        }
        ConsoleStatement cs;
        cs.begin = sig[p];
        cs.end = end;
        cs.offset = t.offset;
        cs.length = tokens[end - 1].offset + tokens[end - 1].text.size() - t.offset;
        out.push_back(cs);
        while (p + 1 < sig.size() && sig[p + 1] < end) {
            ++p;
        }
    }
    return out;
}

std::string minify(std::string_view src, bool strip_console)
{
    auto tokens = tokenize(src);
    std::vector<bool> removed(tokens.size(), false);
    if (strip_console) {
        for (const auto& cs : find_console_statements(tokens)) {
            std::fill(removed.begin() + static_cast<std::ptrdiff_t>(cs.begin),
                      removed.begin() + static_cast<std::ptrdiff_t>(cs.end), true);
        }
    }
    enum class Pending { none, space, newline };
    std::string out;
    out.reserve(src.size());
    Pending pending = Pending::none;
    const Token* prev = nullptr;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        if (removed[i] || !t.significant()) {
            if (!removed[i] && t.has_newline()) {
                pending = Pending::newline;
            } else if (pending == Pending::none) {
                pending = Pending::space;
            }
            continue;
        }
        if (prev != nullptr) {
            if (pending == Pending::newline && !newline_droppable(*prev, t)) {
                out.push_back('\n');
            } else if (pending != Pending::none && need_space(*prev, t)) {
                out.push_back(' ');
            }
        }
        out.append(t.text);
        prev = &t;
        pending = Pending::none;
    }
    return out;
}

} // namespace wattless::script
