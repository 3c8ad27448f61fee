#include "weavesim/config_text.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "weavesim/common.hpp"

namespace weavesim::config {
namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Table run() {
    Table table;
    while (true) {
      skip_blank_and_comments();
      if (at_end()) break;
      int key_line = line_;
      std::string key = parse_key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      Value v = parse_value();
      v.line = key_line;
      skip_inline_space();
      if (!at_end() && peek() == '#') skip_to_eol();
      if (!at_end() && peek() != '\n' && peek() != '\r') fail("trailing characters after value");
      if (table.count(key)) fail("duplicate key '" + key + "'", key_line);
      table.emplace(std::move(key), std::move(v));
    }
    return table;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  char get() {
    char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  [[noreturn]] void fail(const std::string& what, int line = -1) const {
    throw ValidationError("config line " + std::to_string(line < 0 ? line_ : line) + ": " + what);
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_to_eol() {
    while (!at_end() && peek() != '\n') ++pos_;
  }
  void skip_blank_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (c == '#') {
        skip_to_eol();
      } else {
        break;
      }
    }
  }
  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  std::string parse_key() {
    if (peek() == '[') fail("tables are not supported; use flat keys");
    std::string key;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        key.push_back(c);
        ++pos_;
      } else {
        break;
      }
    }
    if (key.empty()) fail("expected a key");
    return key;
  }

  Value parse_value() {
    if (at_end()) fail("missing value");
    char c = peek();
    Value v;
    if (c == '"') {
      v.data = parse_string();
    } else if (c == '[') {
      v.data = parse_array();
    } else if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.data = true;
    } else if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.data = false;
    } else {
      v.data = parse_number();
    }
    return v;
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) fail("unterminated escape");
        char e = get();
        switch (e) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          case '"': out.push_back('"'); break;
          case '\\': out.push_back('\\'); break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      } else {
        out.push_back(c);
      }
    }
    return out;
  }

  double parse_number() {
    std::string token;
    while (!at_end()) {
      char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-' ||
          c == '_') {
        if (c != '_') token.push_back(c);
        ++pos_;
      } else {
        break;
      }
    }
    if (!token.empty() && token.front() == '+') token.erase(0, 1);
    if (token.empty()) fail("expected a value");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(value)) {
      fail("invalid number '" + token + "'");
    }
    return value;
  }

  Array parse_array() {
    expect('[');
    Array items;
    while (true) {
      skip_blank_and_comments();
      if (at_end()) fail("unterminated array");
      if (peek() == ']') {
        get();
        break;
      }
      Value item = parse_value();
      item.line = line_;
      items.push_back(std::move(item));
      skip_blank_and_comments();
      if (at_end()) fail("unterminated array");
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
    return items;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace

Table parse(std::string_view text) { return Parser(text).run(); }

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace weavesim::config
