#include "toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "hapsnav/error.hpp"

namespace hapsnav::toml {

Value Value::table() { return Value{std::make_shared<Table>(), 0}; }
Value Value::array() { return Value{std::make_shared<Array>(), 0}; }

std::string type_name(const Value& v) {
  if (v.is_bool()) return "boolean";
  if (v.is_int()) return "integer";
  if (v.is_float()) return "float";
  if (v.is_string()) return "string";
  if (v.is_array()) return "array";
  return "table";
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Table run() {
    Table root;
    Table* current = &root;
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        const bool array_of_tables = s_.substr(pos_, 2) == "[[";
        pos_ += array_of_tables ? 2 : 1;
        skip_inline_ws();
        std::vector<std::string> path = parse_key_path();
        skip_inline_ws();
        expect(']');
        if (array_of_tables) expect(']');
        end_of_line();
        current = array_of_tables ? &open_array_table(root, path) : &open_table(root, path);
      } else {
        std::vector<std::string> path = parse_key_path();
        skip_inline_ws();
        expect('=');
        skip_inline_ws();
        Value v = parse_value();
        assign(*current, path, std::move(v));
        end_of_line();
      }
    }
    return root;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_) + ": " + msg);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }
  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }
  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') get();
    }
  }
  void skip_ws_comments_newlines() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (peek() == '\r') get();
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
  }

  std::string parse_simple_key() {
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string key;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-')) {
      key.push_back(get());
    }
    if (key.empty()) fail("expected a key");
    return key;
  }
  std::vector<std::string> parse_key_path() {
    std::vector<std::string> path{parse_simple_key()};
    skip_inline_ws();
    while (peek() == '.') {
      get();
      skip_inline_ws();
      path.push_back(parse_simple_key());
      skip_inline_ws();
    }
    return path;
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) fail("unterminated escape");
        c = get();
        switch (c) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case 'r': out.push_back('\r'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unsupported escape \\") + c);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }
  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '\'') break;
      out.push_back(c);
    }
    return out;
  }

  Value parse_value() {
    const int line = line_;
    Value v;
    const char c = peek();
    if (c == '"') {
      v.data = parse_basic_string();
    } else if (c == '\'') {
      v.data = parse_literal_string();
    } else if (c == '[') {
      v = parse_array();
    } else if (c == '{') {
      v = parse_inline_table();
    } else if (s_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.data = true;
    } else if (s_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.data = false;
    } else {
      v = parse_number();
    }
    v.line = line;
    return v;
  }

  Value parse_number() {
    std::string tok;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' ||
                      peek() == '-' || peek() == '.' || peek() == '_')) {
      const char c = get();
      if (c != '_') tok.push_back(c);
    }
    if (tok.empty()) fail("expected a value");
    Value v;
    std::string_view body = tok;
    const bool neg = !body.empty() && body[0] == '-';
    if (!body.empty() && (body[0] == '+' || body[0] == '-')) body.remove_prefix(1);
    if (body == "inf") {
      v.data = neg ? -std::numeric_limits<double>::infinity()
                   : std::numeric_limits<double>::infinity();
      return v;
    }
    if (body == "nan") {
      v.data = std::numeric_limits<double>::quiet_NaN();
      return v;
    }
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (is_float) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || p != last) fail("invalid float '" + tok + "'");
      v.data = d;
    } else {
      std::int64_t i = 0;
      auto [p, ec] = std::from_chars(first, last, i);
      if (ec != std::errc() || p != last) fail("invalid value '" + tok + "'");
      v.data = i;
    }
    return v;
  }

  Value parse_array() {
    expect('[');
    Value v = Value::array();
    while (true) {
      skip_ws_comments_newlines();
      if (peek() == ']') {
        get();
        break;
      }
      v.as_array().push_back(parse_value());
      skip_ws_comments_newlines();
      if (peek() == ',') {
        get();
      } else if (peek() == ']') {
        get();
        break;
      } else {
        fail("expected ',' or ']' in array");
      }
    }
    return v;
  }

  Value parse_inline_table() {
    expect('{');
    Value v = Value::table();
    skip_inline_ws();
    if (peek() == '}') {
      get();
      return v;
    }
    while (true) {
      skip_inline_ws();
      std::vector<std::string> path = parse_key_path();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      assign(v.as_table(), path, parse_value());
      skip_inline_ws();
      if (peek() == ',') {
        get();
      } else if (peek() == '}') {
        get();
        break;
      } else {
        fail("expected ',' or '}' in inline table");
      }
    }
    return v;
  }

  Table& descend(Table& t, const std::string& key) {
    auto it = t.find(key);
    if (it == t.end()) {
      Value v = Value::table();
      v.line = line_;
      it = t.emplace(key, std::move(v)).first;
    }
    if (it->second.is_table()) return it->second.as_table();
    if (it->second.is_array() && !it->second.as_array().empty() &&
        it->second.as_array().back().is_table()) {
      return it->second.as_array().back().as_table();
    }
    fail("key '" + key + "' is not a table");
  }

  Table& open_table(Table& root, const std::vector<std::string>& path) {
    Table* t = &root;
    for (const auto& k : path) t = &descend(*t, k);
    return *t;
  }

  Table& open_array_table(Table& root, const std::vector<std::string>& path) {
    Table* t = &root;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) t = &descend(*t, path[i]);
    auto it = t->find(path.back());
    if (it == t->end()) it = t->emplace(path.back(), Value::array()).first;
    if (!it->second.is_array()) fail("key '" + path.back() + "' is not an array of tables");
    Value entry = Value::table();
    entry.line = line_;
    it->second.as_array().push_back(std::move(entry));
    return it->second.as_array().back().as_table();
  }

  void assign(Table& t, const std::vector<std::string>& path, Value v) {
    Table* cur = &t;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) cur = &descend(*cur, path[i]);
    if (cur->count(path.back()) != 0) fail("duplicate key '" + path.back() + "'");
    cur->emplace(path.back(), std::move(v));
  }
};

}  // namespace

Table parse(std::string_view text) { return Parser(text).run(); }

}  // namespace hapsnav::toml
