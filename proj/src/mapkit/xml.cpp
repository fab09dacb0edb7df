#include "adbench/mapkit/xml.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

#include "adbench/error.hpp"

namespace adbench::xml {

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  bool starts_with(std::string_view s) const { return text_.substr(pos_).starts_with(s); }
  int line() const { return line_; }

  char take() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && !done(); ++i) take();
  }

  void skip_whitespace() {
    while (!done() && std::isspace(static_cast<unsigned char>(peek()))) take();
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::Parse, what + " at line " + std::to_string(line_));
  }

  // Skips until the delimiter (inclusive); error on EOF.
  void skip_until(std::string_view delim, const std::string& context) {
    while (!done()) {
      if (starts_with(delim)) {
        advance(delim.size());
        return;
      }
      take();
    }
    fail("unterminated " + context);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

bool is_name_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':';
}

bool is_name_char(char c) {
  return is_name_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '.';
}

std::string read_name(Cursor& cur) {
  if (cur.done() || !is_name_start(cur.peek())) cur.fail("expected a name");
  std::string name;
  while (!cur.done() && is_name_char(cur.peek())) name.push_back(cur.take());
  return name;
}

std::string decode_entities(Cursor& cur, const std::string& raw) {
  if (raw.find('&') == std::string::npos) return raw;
  std::string out;
  out.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] != '&') {
      out.push_back(raw[i]);
      continue;
    }
    const auto end = raw.find(';', i);
    if (end == std::string::npos) cur.fail("unterminated entity");
    const std::string_view ent(raw.data() + i + 1, end - i - 1);
    if (ent == "amp") out.push_back('&');
    else if (ent == "lt") out.push_back('<');
    else if (ent == "gt") out.push_back('>');
    else if (ent == "quot") out.push_back('"');
    else if (ent == "apos") out.push_back('\'');
    else cur.fail("unknown entity &" + std::string(ent) + ";");
    i = end;
  }
  return out;
}

std::string read_attribute_value(Cursor& cur) {
  if (cur.done() || (cur.peek() != '"' && cur.peek() != '\'')) {
    cur.fail("expected quoted attribute value");
  }
  const char quote = cur.take();
  std::string raw;
  while (!cur.done() && cur.peek() != quote) {
    if (cur.peek() == '<') cur.fail("'<' inside attribute value");
    raw.push_back(cur.take());
  }
  if (cur.done()) cur.fail("unterminated attribute value");
  cur.take();  // closing quote
  return decode_entities(cur, raw);
}

// Skips comments, processing instructions and doctype-style declarations.
// Returns true when anything was consumed.
bool skip_misc(Cursor& cur) {
  if (cur.starts_with("<!--")) {
    cur.advance(4);
    cur.skip_until("-->", "comment");
    return true;
  }
  if (cur.starts_with("<![CDATA[")) {
    cur.advance(9);
    cur.skip_until("]]>", "CDATA section");
    return true;
  }
  if (cur.starts_with("<?")) {
    cur.advance(2);
    cur.skip_until("?>", "processing instruction");
    return true;
  }
  if (cur.starts_with("<!")) {
    cur.advance(2);
    cur.skip_until(">", "declaration");
    return true;
  }
  return false;
}

Node parse_element(Cursor& cur);

// Parses attributes and children after the element name.
void parse_element_body(Cursor& cur, Node& node) {
  while (true) {
    cur.skip_whitespace();
    if (cur.done()) cur.fail("unterminated element <" + node.name + ">");
    if (cur.peek() == '/') {
      cur.take();
      if (cur.done() || cur.peek() != '>') cur.fail("expected '>' after '/'");
      cur.take();
      return;  // self-closing
    }
    if (cur.peek() == '>') {
      cur.take();
      break;  // open tag done, children follow
    }
    const std::string key = read_name(cur);
    cur.skip_whitespace();
    if (cur.done() || cur.peek() != '=') cur.fail("expected '=' after attribute " + key);
    cur.take();
    cur.skip_whitespace();
    node.attributes.emplace_back(key, read_attribute_value(cur));
  }

  // Children and closing tag. Text content is skipped.
  while (true) {
    if (cur.done()) cur.fail("missing closing tag for <" + node.name + ">");
    if (cur.peek() != '<') {
      cur.take();
      continue;
    }
    if (skip_misc(cur)) continue;
    if (cur.starts_with("</")) {
      cur.advance(2);
      const std::string closing = read_name(cur);
      if (closing != node.name) {
        cur.fail("mismatched closing tag </" + closing + "> for <" + node.name + ">");
      }
      cur.skip_whitespace();
      if (cur.done() || cur.peek() != '>') cur.fail("expected '>' in closing tag");
      cur.take();
      return;
    }
    node.children.push_back(parse_element(cur));
  }
}

Node parse_element(Cursor& cur) {
  if (cur.done() || cur.peek() != '<') cur.fail("expected '<'");
  Node node;
  node.line = cur.line();
  cur.take();
  node.name = read_name(cur);
  parse_element_body(cur, node);
  return node;
}

}  // namespace

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::string Node::attribute_or(std::string_view key, std::string fallback) const {
  const std::string* v = attribute(key);
  return v ? *v : std::move(fallback);
}

double Node::number(std::string_view key) const {
  const std::string* v = attribute(key);
  if (!v) {
    throw Error(ErrorKind::Parse, "missing attribute '" + std::string(key) + "' on <" + name +
                                      "> at line " + std::to_string(line));
  }
  char* end = nullptr;
  const double value = std::strtod(v->c_str(), &end);
  if (end == v->c_str() || *end != '\0') {
    throw Error(ErrorKind::Parse, "attribute '" + std::string(key) + "'=\"" + *v +
                                      "\" is not a number at line " + std::to_string(line));
  }
  return value;
}

double Node::number_or(std::string_view key, double fallback) const {
  return attribute(key) ? number(key) : fallback;
}

const Node* Node::child(std::string_view child_name) const {
  for (const Node& c : children) {
    if (c.name == child_name) return &c;
  }
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view child_name) const {
  std::vector<const Node*> out;
  for (const Node& c : children) {
    if (c.name == child_name) out.push_back(&c);
  }
  return out;
}

Node parse_document(std::string_view text) {
  // Strip a UTF-8 BOM if present.
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  Cursor cur(text);
  while (true) {
    cur.skip_whitespace();
    if (cur.done()) cur.fail("document has no root element");
    if (cur.peek() != '<') cur.fail("expected markup");
    if (!skip_misc(cur)) break;
  }
  Node root = parse_element(cur);
  cur.skip_whitespace();
  while (!cur.done()) {
    if (!skip_misc(cur)) cur.fail("content after root element");
    cur.skip_whitespace();
  }
  return root;
}

}  // namespace adbench::xml
