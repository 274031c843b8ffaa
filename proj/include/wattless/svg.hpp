#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wattless::svg {

struct XmlAttribute {
    std::string name;
    std::string value; // raw, entities not decoded
    char quote = '"';
};

enum class XmlKind { document, element, text, comment, instruction, cdata, doctype };

struct XmlNode {
    XmlKind kind = XmlKind::element;
    std::string name;
    std::vector<XmlAttribute> attributes;
    std::vector<XmlNode> children;
    std::string text; // raw text, or the full source of comment/instruction/cdata/doctype
    bool self_closing = false;

    const XmlAttribute* attribute(std::string_view n) const;
};

/// Strict enough to reject mismatched tags, unquoted or duplicate attributes
/// and stray `<`; returns nullopt for anything that is not well-formed.
std::optional<XmlNode> parse_xml(std::string_view text);

/// Well-formed with exactly one root element.
bool well_formed(std::string_view text);

std::string serialize(const XmlNode& node);

/// Rounds decimal numbers with more than `decimals` fraction digits
/// (half up on the decimal string); exponent forms are left as written.
std::string round_numbers(std::string_view value, int decimals = 3);

/// Drops comments, metadata and editor-namespace content, unused namespace
/// declarations and insignificant whitespace; rounds geometry numbers to 3
/// decimals. Returns nullopt when the input does not parse.
std::optional<std::string> optimize_svg(std::string_view text);

} // namespace wattless::svg
