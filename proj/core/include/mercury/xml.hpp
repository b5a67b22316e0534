#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mercury::xml {

struct Attribute {
    std::string ns;
    std::string local;
    std::string prefix;
    std::string value;
};

struct Element;

/// Either a text run or a child element.
struct Node {
    std::string text;
    std::unique_ptr<Element> element;

    bool is_element() const noexcept { return element != nullptr; }
};

/// Namespace-aware element. Names are stored expanded (namespace URI plus
/// local name); the source prefix is kept only so serialization looks like
/// the input.
struct Element {
    std::string ns;
    std::string local;
    std::string prefix;
    std::vector<Attribute> attributes;
    std::vector<Node> children;

    bool is(std::string_view ns_uri, std::string_view name) const noexcept { return ns == ns_uri && local == name; }

    /// Unqualified attribute lookup.
    std::optional<std::string> attribute(std::string_view name) const;

    const Element* first_child(std::string_view ns_uri, std::string_view name) const;
    std::vector<const Element*> children_named(std::string_view ns_uri, std::string_view name) const;
    std::vector<const Element*> child_elements() const;

    /// Concatenated text of this element and all descendants.
    std::string text() const;
};

/// Parses a complete document. Throws XmlParseError (with byte offset) on
/// non-well-formed input. External entities are never loaded.
std::unique_ptr<Element> parse(std::string_view document);

/// Serializes an element subtree as a standalone fragment, declaring every
/// namespace prefix it uses on the outermost element that needs it. Output is
/// a pure function of the tree.
std::string serialize(const Element& element);

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

/// Minimal append-only XML builder. Namespace declarations are written by the
/// caller as ordinary attributes.
class Writer {
public:
    Writer& declaration();
    Writer& open(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes = {});
    Writer& close();
    /// <name attrs>text</name>
    Writer& leaf(std::string_view name, std::string_view text,
                 const std::vector<std::pair<std::string, std::string>>& attributes = {});
    Writer& text(std::string_view text);
    /// Appends an already-serialized fragment verbatim.
    Writer& raw(std::string_view fragment);

    const std::string& str() const noexcept { return out_; }
    std::string take() { return std::move(out_); }

private:
    void start_tag(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes);

    std::string out_;
    std::vector<std::string> open_;
};

} // namespace mercury::xml
