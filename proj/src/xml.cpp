#include "aenet/xml.hpp"

#include <cctype>

namespace aenet::xml {

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes)
    if (k == key) return &v;
  return nullptr;
}

const Node* Node::child(std::string_view name_) const {
  for (const auto& c : children)
    if (c.name == name_) return &c;
  return nullptr;
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Node run() {
    skip_misc();
    if (eof()) throw ParseError(line_, "document has no root element");
    Node root = element();
    skip_misc();
    if (!eof()) throw ParseError(line_, "trailing content after root element");
    return root;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  bool starts_with(std::string_view prefix) const {
    return s_.compare(pos_, prefix.size(), prefix) == 0;
  }

  char advance() {
    char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void expect(char c, const char* what) {
    if (eof() || peek() != c) throw ParseError(line_, std::string("expected ") + what);
    advance();
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  void skip_until(std::string_view terminator, const char* what) {
    while (!eof() && !starts_with(terminator)) advance();
    if (eof()) throw ParseError(line_, std::string("unterminated ") + what);
    for (std::size_t i = 0; i < terminator.size(); ++i) advance();
  }

  // whitespace, comments, processing instructions, doctype
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<!--"))
        skip_until("-->", "comment");
      else if (starts_with("<?"))
        skip_until("?>", "processing instruction");
      else if (starts_with("<!DOCTYPE") || starts_with("<!doctype"))
        skip_until(">", "doctype");
      else
        return;
    }
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == ':';
  }

  std::string name() {
    if (eof() || !name_char(peek())) throw ParseError(line_, "expected a name");
    std::string out;
    while (!eof() && name_char(peek())) out.push_back(advance());
    return out;
  }

  std::string decode_entity() {
    // positioned after '&'
    std::string ent;
    while (!eof() && peek() != ';') {
      ent.push_back(advance());
      if (ent.size() > 10) throw ParseError(line_, "unterminated entity");
    }
    expect(';', "';'");
    if (ent == "lt") return "<";
    if (ent == "gt") return ">";
    if (ent == "amp") return "&";
    if (ent == "quot") return "\"";
    if (ent == "apos") return "'";
    if (!ent.empty() && ent[0] == '#') {
      const bool hex = ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X');
      const long code = std::strtol(ent.c_str() + (hex ? 2 : 1), nullptr, hex ? 16 : 10);
      if (code <= 0 || code > 0x10ffff) throw ParseError(line_, "bad character reference");
      // encode as UTF-8
      std::string out;
      const unsigned long cp = static_cast<unsigned long>(code);
      if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
      } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
      }
      return out;
    }
    throw ParseError(line_, "unknown entity &" + ent + ";");
  }

  std::string quoted_value() {
    if (eof() || (peek() != '"' && peek() != '\''))
      throw ParseError(line_, "expected a quoted attribute value");
    const char quote = advance();
    std::string out;
    while (!eof() && peek() != quote) {
      if (peek() == '&') {
        advance();
        out += decode_entity();
      } else {
        out.push_back(advance());
      }
    }
    if (eof()) throw ParseError(line_, "unterminated attribute value");
    advance();
    return out;
  }

  Node element() {
    expect('<', "'<'");
    Node node;
    node.line = line_;
    node.name = name();
    for (;;) {
      skip_ws();
      if (eof()) throw ParseError(line_, "unterminated start tag <" + node.name);
      if (peek() == '/') {
        advance();
        expect('>', "'>' after '/'");
        return node;  // self-closing
      }
      if (peek() == '>') {
        advance();
        break;
      }
      std::string key = name();
      skip_ws();
      expect('=', "'=' in attribute");
      skip_ws();
      node.attributes.emplace_back(std::move(key), quoted_value());
    }
    content(node);
    return node;
  }

  void content(Node& node) {
    for (;;) {
      if (eof()) throw ParseError(line_, "missing closing tag for <" + node.name + ">");
      if (starts_with("<!--")) {
        skip_until("-->", "comment");
      } else if (starts_with("<![CDATA[")) {
        for (int i = 0; i < 9; ++i) advance();
        while (!eof() && !starts_with("]]>")) node.text.push_back(advance());
        skip_until("]]>", "CDATA section");
      } else if (starts_with("</")) {
        advance();
        advance();
        const std::string closing = name();
        if (closing != node.name)
          throw ParseError(line_, "mismatched closing tag </" + closing + "> for <" +
                                      node.name + ">");
        skip_ws();
        expect('>', "'>' in closing tag");
        return;
      } else if (peek() == '<') {
        node.children.push_back(element());
      } else if (peek() == '&') {
        advance();
        node.text += decode_entity();
      } else {
        node.text.push_back(advance());
      }
    }
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

Node parse_document(std::string_view text) { return Parser(text).run(); }

}  // namespace aenet::xml
