#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace wattless::html {

enum class NodeKind {
    document,
    element,
    text,
    comment,
    /// Doctype, processing instruction, CDATA or a stray end tag, kept verbatim.
    markup,
};

struct Attribute {
    std::string name;  // lowercased
    std::string value; // raw source text, entities not decoded
    bool has_value = true;
    char quote = '"'; // '"', '\'' or 0 for unquoted
};

enum class Close {
    explicit_tag, // an end tag is serialized (raw_close, or a generated one)
    implied,      // auto-closed by the tree builder, nothing serialized
    none,         // void or self-closing element
};

/// One node of a tolerant, source-preserving DOM.
///
/// Untouched nodes serialize from their raw source text, so
/// `serialize(parse_html(x)) == x` for every input. Editing attributes
/// through set_attribute() drops the raw start tag and it is regenerated.
struct Node {
    NodeKind kind = NodeKind::element;
    std::string tag; // lowercased element name
    std::vector<Attribute> attributes;
    std::vector<Node> children;
    std::string text; // text, comment body or markup content
    std::string raw_open;
    std::string raw_close;
    Close close = Close::explicit_tag;
    bool self_closing = false;
    std::size_t source_offset = 0;

    bool is_element() const { return kind == NodeKind::element; }
    bool is(std::string_view name) const { return kind == NodeKind::element && tag == name; }

    const Attribute* attribute(std::string_view name) const;
    bool has_attribute(std::string_view name) const { return attribute(name) != nullptr; }
    /// Raw attribute value, or empty when absent.
    std::string_view attribute_value(std::string_view name) const;
    void set_attribute(std::string_view name, std::string value);
    void remove_attribute(std::string_view name);
};

using DomTree = Node;

bool is_void_element(std::string_view tag);

/// Elements whose content is a single raw text run (no markup inside).
bool is_raw_text_element(std::string_view tag);

/// Tolerant HTML parse. Never throws; binary input yields a single text node.
DomTree parse_html(std::string_view text);

std::string serialize(const Node& node);

/// Regenerates a start tag from the node's tag and attributes.
std::string format_start_tag(const Node& element);

/// Preorder walk over element nodes, document order.
void for_each_element(const Node& root, const std::function<void(const Node&)>& fn);
void for_each_element(Node& root, const std::function<void(Node&)>& fn);

/// Elements in document order (pointers into `root`).
std::vector<const Node*> elements_in_order(const Node& root);

/// First element with the given tag, or nullptr.
const Node* find_first(const Node& root, std::string_view tag);
Node* find_first(Node& root, std::string_view tag);

/// Concatenated raw text of all text nodes, skipping script and style content.
std::string text_content(const Node& root);

/// Decodes the common named and numeric character references.
std::string decode_entities(std::string_view raw);

/// Class attribute tokens of an element.
std::vector<std::string> class_list(const Node& element);

/// Checks the structural invariants: unique attribute names, childless void
/// elements, element tags non-empty. Returns false on the first violation.
bool check_invariants(const Node& root);

} // namespace wattless::html
