#pragma once

#include "wattless/html.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattless::css {

struct Span {
    std::size_t offset = 0;
    std::size_t length = 0;

    std::size_t end() const { return offset + length; }
    friend bool operator==(const Span&, const Span&) = default;
    friend auto operator<=>(const Span&, const Span&) = default;
};

enum class Combinator { descendant, child, next_sibling, subsequent_sibling };

struct Compound {
    std::optional<std::string> tag; // lowercased, "*" for universal
    std::optional<std::string> id;
    std::vector<std::string> classes;
    std::vector<std::string> unsupported; // raw pseudo/attribute/escape fragments
};

struct SelectorAst {
    std::vector<Compound> compounds;
    std::vector<Combinator> combinators; // combinators[i] joins compounds[i] and compounds[i + 1]
    std::string text;                    // canonical text
    bool assume_matches = false;
};

struct Declaration {
    std::string property;
    std::string value; // comments removed, whitespace normalized, without !important
    bool important = false;
};

struct CssRule {
    std::vector<SelectorAst> selectors;
    std::vector<Declaration> declarations;
    Span source_span;
    /// False for keyframe selectors, which never match elements.
    bool matchable = true;
};

enum class ItemKind { style_rule, at_rule, unparsed };

enum class AtBlock {
    statement,    // `@import ...;`
    rules,        // nested rule list (@media, @supports, @keyframes ...)
    declarations, // @font-face, @page ...
    opaque,       // unknown block, kept verbatim
};

struct Item {
    ItemKind kind = ItemKind::style_rule;
    Span span;
    CssRule rule;             // style_rule
    std::string at_name;      // at_rule, lowercased, without '@'
    std::string prelude;      // at_rule, whitespace normalized
    AtBlock block = AtBlock::statement;
    std::vector<Item> children;            // AtBlock::rules
    std::vector<Declaration> declarations; // AtBlock::declarations
    Span body;                             // AtBlock::opaque: text between braces
};

struct Stylesheet {
    std::vector<Item> items;
    std::vector<Span> unparsed; // every unparsed span, document order

    /// Style rules in document order, including those nested in at-rules.
    std::vector<const CssRule*> rules() const;
    /// @font-face blocks in document order.
    std::vector<const Item*> font_faces() const;
};

/// Tolerant stylesheet parse: malformed parts become unparsed spans.
Stylesheet parse_css(std::string_view text);

SelectorAst parse_selector(std::string_view text);

/// Whitespace/comma normalization of a value, comments removed, strings kept.
std::string normalize_value(std::string_view raw);

/// normalize_value plus lowercase 3-digit shortening of hex colors.
std::string canonical_value(std::string_view raw);

/// Shortens `#aabbcc` to `#abc` outside strings and url() tokens.
std::string shorten_hex_colors(std::string_view value);

struct MatchResult {
    std::size_t count = 0;
    bool assume_matches = false;
};

/// Counts elements matching `selector`. Only tag, #id, .class and the
/// descendant combinator are evaluated; anything else assumes a match.
MatchResult match_selector(const SelectorAst& selector, const html::DomTree& dom);

bool matches(const SelectorAst& selector, const std::vector<const html::Node*>& ancestors, const html::Node& element);

/// Compound-level test against one element.
bool matches_compound(const Compound& compound, const html::Node& element);

/// url() and @import references, raw as written.
struct UrlRef {
    std::string url;
    Span span; // span of the url text itself within the stylesheet
};
std::vector<UrlRef> find_urls(std::string_view text);

/// Font family names from a font-family or font value, lowercased, unquoted.
std::vector<std::string> font_families(std::string_view value);

/// True when the two sheets hold the same rule and declaration sequence.
bool equivalent(const Stylesheet& a, const Stylesheet& b);

} // namespace wattless::css
