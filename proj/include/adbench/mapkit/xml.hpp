#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adbench::xml {

// Small DOM for attribute-style XML (the OpenDRIVE subset uses no text
// content). Keeps the source line of every element for error reporting.
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;
  int line = 0;

  const std::string* attribute(std::string_view key) const;
  std::string attribute_or(std::string_view key, std::string fallback) const;
  // Throws a parse error naming the attribute and line when missing or not a
  // number.
  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;

  const Node* child(std::string_view child_name) const;
  std::vector<const Node*> children_named(std::string_view child_name) const;
};

// Parses a document and returns the root element. Throws ErrorKind::Parse
// with a line number on malformed input. Supports declarations, comments,
// CDATA, self-closing tags and the five predefined entities.
Node parse_document(std::string_view text);

}  // namespace adbench::xml
