#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace wattless::script {

enum class TokenKind {
    identifier, // also keywords and #private names
    number,
    string,
    template_part, // a literal piece of a template string, delimiters included
    regex,
    punctuator,
    line_comment,
    block_comment,
    whitespace,
};

struct Token {
    TokenKind kind;
    std::string_view text;
    std::size_t offset = 0;

    bool significant() const
    {
        return kind != TokenKind::whitespace && kind != TokenKind::line_comment
            && kind != TokenKind::block_comment;
    }
    /// Whitespace or block comment spanning a line break.
    bool has_newline() const;
    bool is_punct(std::string_view p) const { return kind == TokenKind::punctuator && text == p; }
};

/// Lossless lexical scan: concatenating all token texts yields the input.
/// Unterminated literals run to end of input.
std::vector<Token> tokenize(std::string_view src);

/// Significant tokens only (no whitespace or comments).
std::vector<Token> significant_tokens(std::string_view src);

/// Pattern forms: `name` (identifier), `name=` (assigned), `name.` (member access).
std::vector<std::string> default_dom_op_patterns();

/// Counts DOM-affecting operations outside comments and string literals.
std::size_t count_dom_ops(std::string_view src, const std::vector<std::string>& patterns);
std::size_t count_dom_ops(std::string_view src);

struct ConsoleStatement {
    std::size_t begin = 0; // token index of `console`
    std::size_t end = 0;   // one past the last removed token
    std::size_t offset = 0;
    std::size_t length = 0;
};

/// `console.<name>(...)` statements in statement position, without
/// side-effecting arguments.
std::vector<ConsoleStatement> find_console_statements(const std::vector<Token>& tokens);

/// Conservative minification: comments dropped, whitespace collapsed, no renaming.
std::string minify(std::string_view src, bool strip_console);

/// True when every string, template, regex and block comment is terminated.
bool well_formed(std::string_view src);

} // namespace wattless::script
