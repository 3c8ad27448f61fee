#pragma once

// Reader/writer for the flat TOML subset used by scenario files:
//   key = value        # comment
// where value is a number, a "string", true/false, or a (possibly nested,
// possibly multi-line) array of values. Tables are not supported.

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace weavesim::config {

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<bool, double, std::string, Array> data;
  int line = 0;

  bool is_number() const { return std::holds_alternative<double>(data); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }
};

using Table = std::map<std::string, Value, std::less<>>;

// Throws ValidationError naming the line on malformed input or duplicate keys.
Table parse(std::string_view text);

std::string format_number(double v);
std::string quote(std::string_view s);

}  // namespace weavesim::config
