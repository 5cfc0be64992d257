#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// Small XML reader/writer helpers, enough for the link-structure documents.
// Names are kept as written (prefix:local); namespace declarations are
// ordinary attributes.
namespace archgraph::xml {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t offset, const std::string& message);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::string text;  // character data directly inside this element

  const std::string* attribute(std::string_view attr) const;
  const Element* child(std::string_view child_name) const;
  std::vector<const Element*> children_named(std::string_view child_name) const;
};

// Parses one document (optional prolog, one root element). Rejects
// mismatched tags, bad references and trailing content.
Element parse(std::string_view document);

// Drops characters XML 1.0 cannot carry (C0 controls other than tab, LF
// and CR) and replaces malformed UTF-8 with U+FFFD.
std::string sanitize(std::string_view s);

// Escapes after sanitizing. CR is written as a character reference so it
// survives parsing; attributes also escape tab and LF.
std::string escape_text(std::string_view s);
std::string escape_attribute(std::string_view s);

}  // namespace archgraph::xml
