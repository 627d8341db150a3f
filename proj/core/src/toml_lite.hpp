#pragma once

// Minimal reader for the TOML subset used by scenario files: tables,
// dotted tables, arrays of tables, inline tables, arrays, basic and literal
// strings, integers, floats and booleans. Dates/times and multi-line
// strings are not supported.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hapsnav::toml {

struct Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
  std::variant<bool, std::int64_t, double, std::string, std::shared_ptr<Array>,
               std::shared_ptr<Table>>
      data;
  int line = 0;

  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_float() const { return std::holds_alternative<double>(data); }
  bool is_number() const { return is_int() || is_float(); }
  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_array() const { return std::holds_alternative<std::shared_ptr<Array>>(data); }
  bool is_table() const { return std::holds_alternative<std::shared_ptr<Table>>(data); }

  double as_number() const {
    return is_int() ? static_cast<double>(std::get<std::int64_t>(data)) : std::get<double>(data);
  }
  const std::string& as_string() const { return std::get<std::string>(data); }
  const Array& as_array() const { return *std::get<std::shared_ptr<Array>>(data); }
  const Table& as_table() const { return *std::get<std::shared_ptr<Table>>(data); }
  Array& as_array() { return *std::get<std::shared_ptr<Array>>(data); }
  Table& as_table() { return *std::get<std::shared_ptr<Table>>(data); }

  static Value table();
  static Value array();
};

/// Throws hapsnav::Error(ConfigError) with a line number on syntax errors.
Table parse(std::string_view text);

std::string type_name(const Value& v);

}  // namespace hapsnav::toml
