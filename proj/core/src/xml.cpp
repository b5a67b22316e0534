#include "mercury/xml.hpp"

#include <algorithm>

#include <expat.h>

#include "mercury/error.hpp"

namespace mercury::xml {

namespace {

constexpr char kSep = '\x01';
constexpr std::string_view kXmlNamespace = "http://www.w3.org/XML/1998/namespace";

// Expat reports namespaced names as "uri\1local\1prefix", "uri\1local" or
// plain "local".
void split_name(const char* raw, std::string& ns, std::string& local, std::string& prefix) {
    std::string_view s(raw);
    auto first = s.find(kSep);
    if (first == std::string_view::npos) {
        local.assign(s);
        return;
    }
    ns.assign(s.substr(0, first));
    auto rest = s.substr(first + 1);
    auto second = rest.find(kSep);
    if (second == std::string_view::npos) {
        local.assign(rest);
    } else {
        local.assign(rest.substr(0, second));
        prefix.assign(rest.substr(second + 1));
    }
}

struct Builder {
    std::unique_ptr<Element> root;
    std::vector<Element*> stack;

    static void on_start(void* user, const XML_Char* name, const XML_Char** atts) {
        auto* self = static_cast<Builder*>(user);
        auto element = std::make_unique<Element>();
        split_name(name, element->ns, element->local, element->prefix);
        for (int i = 0; atts[i] != nullptr; i += 2) {
            Attribute a;
            split_name(atts[i], a.ns, a.local, a.prefix);
            a.value = atts[i + 1];
            element->attributes.push_back(std::move(a));
        }
        Element* raw = element.get();
        if (self->stack.empty()) {
            self->root = std::move(element);
        } else {
            Node node;
            node.element = std::move(element);
            self->stack.back()->children.push_back(std::move(node));
        }
        self->stack.push_back(raw);
    }

    static void on_end(void* user, const XML_Char*) { static_cast<Builder*>(user)->stack.pop_back(); }

    static void on_text(void* user, const XML_Char* s, int len) {
        auto* self = static_cast<Builder*>(user);
        if (self->stack.empty()) return;
        auto& children = self->stack.back()->children;
        if (!children.empty() && !children.back().is_element()) {
            children.back().text.append(s, static_cast<std::size_t>(len));
        } else {
            Node node;
            node.text.assign(s, static_cast<std::size_t>(len));
            children.push_back(std::move(node));
        }
    }
};

struct ParserHandle {
    XML_Parser parser;
    ParserHandle() : parser(XML_ParserCreateNS("UTF-8", kSep)) {}
    ~ParserHandle() {
        if (parser) XML_ParserFree(parser);
    }
    ParserHandle(const ParserHandle&) = delete;
    ParserHandle& operator=(const ParserHandle&) = delete;
};

struct Binding {
    std::string prefix;
    std::string uri;
};

const std::string* lookup(const std::vector<Binding>& scope, std::string_view prefix) {
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
        if (it->prefix == prefix) return &it->uri;
    }
    return nullptr;
}

bool bound_to(const std::vector<Binding>& scope, std::string_view prefix, std::string_view uri) {
    const std::string* found = lookup(scope, prefix);
    if (found) return *found == uri;
    return prefix.empty() && uri.empty();
}

void write_element(const Element& e, std::vector<Binding>& scope, std::string& out) {
    std::vector<Binding> declared;
    auto need = [&](const std::string& prefix, const std::string& uri) {
        for (const auto& d : declared) {
            if (d.prefix == prefix) return;
        }
        if (!bound_to(scope, prefix, uri)) declared.push_back({prefix, uri});
    };

    need(e.ns.empty() ? std::string{} : e.prefix, e.ns);
    for (const auto& a : e.attributes) {
        if (!a.ns.empty() && a.ns != kXmlNamespace) need(a.prefix, a.ns);
    }

    std::string qname = e.prefix.empty() || e.ns.empty() ? e.local : e.prefix + ":" + e.local;
    out += '<';
    out += qname;
    for (const auto& d : declared) {
        out += d.prefix.empty() ? " xmlns=\"" : " xmlns:" + d.prefix + "=\"";
        out += escape_attribute(d.uri);
        out += '"';
    }
    for (const auto& a : e.attributes) {
        out += ' ';
        if (a.ns == kXmlNamespace) {
            out += "xml:";
        } else if (!a.ns.empty()) {
            out += a.prefix + ":";
        }
        out += a.local;
        out += "=\"";
        out += escape_attribute(a.value);
        out += '"';
    }
    if (e.children.empty()) {
        out += "/>";
        return;
    }
    out += '>';
    std::size_t mark = scope.size();
    scope.insert(scope.end(), declared.begin(), declared.end());
    for (const auto& child : e.children) {
        if (child.is_element()) {
            write_element(*child.element, scope, out);
        } else {
            out += escape_text(child.text);
        }
    }
    scope.resize(mark);
    out += "</";
    out += qname;
    out += '>';
}

void collect_text(const Element& e, std::string& out) {
    for (const auto& child : e.children) {
        if (child.is_element()) {
            collect_text(*child.element, out);
        } else {
            out += child.text;
        }
    }
}

} // namespace

std::optional<std::string> Element::attribute(std::string_view name) const {
    for (const auto& a : attributes) {
        if (a.ns.empty() && a.local == name) return a.value;
    }
    return std::nullopt;
}

const Element* Element::first_child(std::string_view ns_uri, std::string_view name) const {
    for (const auto& c : children) {
        if (c.is_element() && c.element->is(ns_uri, name)) return c.element.get();
    }
    return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view ns_uri, std::string_view name) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
        if (c.is_element() && c.element->is(ns_uri, name)) out.push_back(c.element.get());
    }
    return out;
}

std::vector<const Element*> Element::child_elements() const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
        if (c.is_element()) out.push_back(c.element.get());
    }
    return out;
}

std::string Element::text() const {
    std::string out;
    collect_text(*this, out);
    return out;
}

std::unique_ptr<Element> parse(std::string_view document) {
    ParserHandle handle;
    if (!handle.parser) throw XmlParseError(0, "cannot allocate XML parser");
    Builder builder;
    XML_SetUserData(handle.parser, &builder);
    XML_SetReturnNSTriplet(handle.parser, 1);
    XML_SetElementHandler(handle.parser, &Builder::on_start, &Builder::on_end);
    XML_SetCharacterDataHandler(handle.parser, &Builder::on_text);
    XML_SetParamEntityParsing(handle.parser, XML_PARAM_ENTITY_PARSING_NEVER);

    constexpr std::size_t kChunk = std::size_t{1} << 24;
    std::size_t pos = 0;
    do {
        std::size_t n = std::min(kChunk, document.size() - pos);
        bool last = pos + n == document.size();
        if (XML_Parse(handle.parser, document.data() + pos, static_cast<int>(n), last ? 1 : 0) == XML_STATUS_ERROR) {
            auto index = XML_GetCurrentByteIndex(handle.parser);
            throw XmlParseError(index < 0 ? 0 : static_cast<std::size_t>(index),
                                XML_ErrorString(XML_GetErrorCode(handle.parser)));
        }
        pos += n;
    } while (pos < document.size());

    if (!builder.root) throw XmlParseError(document.size(), "no root element");
    return std::move(builder.root);
}

std::string serialize(const Element& element) {
    // The sentinel forces an explicit default-namespace declaration (possibly
    // xmlns="") on the outermost element, so the fragment means the same thing
    // wherever it is embedded.
    std::vector<Binding> scope{{"", std::string(1, kSep)}};
    std::string out;
    write_element(element, scope, out);
    return out;
}

std::string escape_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '\r': out += "&#13;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string escape_attribute(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\t': out += "&#9;"; break;
            case '\n': out += "&#10;"; break;
            case '\r': out += "&#13;"; break;
            default: out += c;
        }
    }
    return out;
}

Writer& Writer::declaration() {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    return *this;
}

void Writer::start_tag(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes) {
    out_ += '<';
    out_ += name;
    for (const auto& [k, v] : attributes) {
        out_ += ' ';
        out_ += k;
        out_ += "=\"";
        out_ += escape_attribute(v);
        out_ += '"';
    }
}

Writer& Writer::open(std::string_view name, const std::vector<std::pair<std::string, std::string>>& attributes) {
    start_tag(name, attributes);
    out_ += '>';
    open_.emplace_back(name);
    return *this;
}

Writer& Writer::close() {
    out_ += "</";
    out_ += open_.back();
    out_ += '>';
    open_.pop_back();
    return *this;
}

Writer& Writer::leaf(std::string_view name, std::string_view content,
                     const std::vector<std::pair<std::string, std::string>>& attributes) {
    start_tag(name, attributes);
    if (content.empty()) {
        out_ += "/>";
        return *this;
    }
    out_ += '>';
    out_ += escape_text(content);
    out_ += "</";
    out_ += name;
    out_ += '>';
    return *this;
}

Writer& Writer::text(std::string_view content) {
    out_ += escape_text(content);
    return *this;
}

Writer& Writer::raw(std::string_view fragment) {
    out_ += fragment;
    return *this;
}

} // namespace mercury::xml
