#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace aenet::xml {

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_, const std::string& msg)
      : std::runtime_error("xml parse error at line " + std::to_string(line_) + ": " + msg),
        line(line_) {}
};

struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;
  std::string text;
  int line = 0;

  const std::string* attribute(std::string_view key) const;
  /// First direct child with the given element name, or null.
  const Node* child(std::string_view name) const;
};

/// Parses one document and returns its root element. Handles declarations,
/// comments, CDATA, the five predefined entities and numeric references.
/// Throws ParseError with a line number on malformed input.
Node parse_document(std::string_view text);

}  // namespace aenet::xml
