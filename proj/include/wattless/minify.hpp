#pragma once

#include "wattless/html.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace wattless {

/// Drops comments (conditional comments excepted), merges the text around
/// them and collapses whitespace runs in text outside pre, textarea, script
/// and style. Start tags with redundant whitespace are regenerated.
/// Falls back to the unmodified serialization if the result would not
/// re-parse to the same structure.
std::string minify_html(const html::DomTree& doc);
std::string minify_html(std::string_view text);

/// Same element tree (tags, attribute sets, child order) and equal text
/// modulo whitespace collapse; comments ignored.
bool same_structure(const html::Node& a, const html::Node& b);

/// Regenerates the sheet from its parse: comments and redundant whitespace
/// removed, trailing semicolons dropped, doubled-nibble hex colors
/// shortened. Unparsed spans are copied verbatim. Returns the input when
/// the output would not parse to an equivalent sheet.
std::string minify_css(std::string_view text);

/// Conservative script minification. The significant token stream is
/// preserved apart from stripped console statements; returns the input
/// when that cannot be guaranteed.
std::string minify_script(std::string_view text, bool strip_console);

/// Significant token texts of `text` minus stripped console statements.
std::vector<std::string> script_token_texts(std::string_view text, bool strip_console);

} // namespace wattless
