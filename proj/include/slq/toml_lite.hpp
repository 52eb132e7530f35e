#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace slq::toml {

struct Value;
using Array = std::vector<Value>;
/// Insertion-ordered key/value list.
using Table = std::vector<std::pair<std::string, Value>>;

struct Value {
    std::variant<double, bool, std::string, Array, Table> data;
    bool integral = false;
    int line = 0;
    int column = 0;

    bool is_number() const { return std::holds_alternative<double>(data); }
    bool is_bool() const { return std::holds_alternative<bool>(data); }
    bool is_string() const { return std::holds_alternative<std::string>(data); }
    bool is_array() const { return std::holds_alternative<Array>(data); }
    bool is_table() const { return std::holds_alternative<Table>(data); }

    double as_number() const { return std::get<double>(data); }
    bool as_bool() const { return std::get<bool>(data); }
    const std::string& as_string() const { return std::get<std::string>(data); }
    const Array& as_array() const { return std::get<Array>(data); }
    const Table& as_table() const { return std::get<Table>(data); }

    std::string where() const;
};

const Value* find(const Table& t, std::string_view key);

/// Parses the subset of TOML used by problem files: [table] and [[array-of-tables]]
/// headers, key = value pairs, basic strings, numbers, booleans, arrays (may span
/// lines) and inline tables. Throws Error(ParseError) with line and column.
Table parse(std::string_view text, const std::string& source_name = "<input>");

}  // namespace slq::toml
