#include "slq/toml_lite.hpp"

#include "slq/errors.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace slq::toml {

std::string Value::where() const
{
    return "line " + std::to_string(line) + ", column " + std::to_string(column);
}

const Value* find(const Table& t, std::string_view key)
{
    for (const auto& [k, v] : t) {
        if (k == key) return &v;
    }
    return nullptr;
}

namespace {

class Reader {
public:
    Reader(std::string_view text, std::string name) : text_(text), name_(std::move(name)) {}

    Table document()
    {
        Table root;
        Table* current = &root;
        while (true) {
            skip_blank_lines();
            if (at_end()) break;
            if (peek() == '[') {
                current = header(root);
            } else {
                key_value(*current);
            }
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorCode::ParseError, "config",
                    name_ + ":" + std::to_string(line_) + ":" + std::to_string(column()) + ": " + what);
    }

    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    int column() const { return static_cast<int>(pos_ - line_start_) + 1; }

    void advance()
    {
        if (peek() == '\n') {
            ++line_;
            line_start_ = pos_ + 1;
        }
        ++pos_;
    }

    void skip_spaces()
    {
        while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }

    void skip_comment()
    {
        if (peek() == '#') {
            while (!at_end() && peek() != '\n') advance();
        }
    }

    void skip_blank_lines()
    {
        while (true) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n') {
                advance();
                continue;
            }
            break;
        }
    }

    // Whitespace, comments and newlines inside arrays.
    void skip_any()
    {
        while (true) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n') {
                advance();
                continue;
            }
            break;
        }
    }

    void end_of_line()
    {
        skip_spaces();
        skip_comment();
        if (at_end()) return;
        if (peek() != '\n') fail("expected end of line, found '" + std::string(1, peek()) + "'");
        advance();
    }

    std::string bare_key()
    {
        skip_spaces();
        if (peek() == '"') return basic_string();
        const std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
            advance();
        }
        if (pos_ == start) fail("expected a key");
        return std::string(text_.substr(start, pos_ - start));
    }

    Table* header(Table& root)
    {
        advance();
        const bool array = peek() == '[';
        if (array) advance();
        const std::string name = bare_key();
        skip_spaces();
        if (peek() != ']') fail("expected ']'");
        advance();
        if (array) {
            if (peek() != ']') fail("expected ']]'");
            advance();
        }
        Value* slot = nullptr;
        for (auto& [k, v] : root) {
            if (k == name) slot = &v;
        }
        if (array) {
            if (!slot) {
                root.emplace_back(name, Value{Array{}, false, line_, 1});
                slot = &root.back().second;
            } else if (!slot->is_array()) {
                fail("'" + name + "' is not an array of tables");
            }
            auto& arr = std::get<Array>(slot->data);
            arr.push_back(Value{Table{}, false, line_, 1});
            return &std::get<Table>(arr.back().data);
        }
        if (slot) fail("table [" + name + "] defined twice");
        root.emplace_back(name, Value{Table{}, false, line_, 1});
        return &std::get<Table>(root.back().second.data);
    }

    void key_value(Table& table)
    {
        const std::string key = bare_key();
        for (const auto& kv : table) {
            if (kv.first == key) fail("duplicate key '" + key + "'");
        }
        skip_spaces();
        if (peek() != '=') fail("expected '=' after key '" + key + "'");
        advance();
        skip_spaces();
        table.emplace_back(key, value());
    }

    Value value()
    {
        Value v;
        v.line = line_;
        v.column = column();
        const char c = peek();
        if (c == '"') {
            v.data = basic_string();
        } else if (c == '[') {
            v.data = array();
        } else if (c == '{') {
            v.data = inline_table();
        } else if (text_.substr(pos_, 4) == "true") {
            for (int i = 0; i < 4; ++i) advance();
            v.data = true;
        } else if (text_.substr(pos_, 5) == "false") {
            for (int i = 0; i < 5; ++i) advance();
            v.data = false;
        } else {
            v.data = number(v.integral);
        }
        return v;
    }

    std::string basic_string()
    {
        advance();
        std::string out;
        while (true) {
            if (at_end() || peek() == '\n') fail("unterminated string");
            const char c = peek();
            advance();
            if (c == '"') break;
            if (c == '\\') {
                const char e = peek();
                advance();
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape '\\") + e + "'");
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    double number(bool& integral)
    {
        std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                             peek() == '.' || peek() == '_')) {
            advance();
        }
        std::string token(text_.substr(start, pos_ - start));
        std::erase(token, '_');
        if (token.empty()) fail("expected a value");
        std::string_view body = token;
        if (body.front() == '+') body.remove_prefix(1);
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
        if (ec != std::errc() || ptr != body.data() + body.size() || !std::isfinite(value)) {
            pos_ = start;
            fail("invalid number '" + token + "'");
        }
        integral = token.find_first_of(".eE") == std::string::npos;
        return value;
    }

    Array array()
    {
        advance();
        Array out;
        while (true) {
            skip_any();
            if (peek() == ']') {
                advance();
                break;
            }
            out.push_back(value());
            skip_any();
            if (peek() == ',') {
                advance();
                continue;
            }
            if (peek() == ']') {
                advance();
                break;
            }
            fail("expected ',' or ']' in array");
        }
        return out;
    }

    Table inline_table()
    {
        advance();
        Table out;
        skip_spaces();
        if (peek() == '}') {
            advance();
            return out;
        }
        while (true) {
            skip_spaces();
            key_value(out);
            skip_spaces();
            if (peek() == ',') {
                advance();
                continue;
            }
            if (peek() == '}') {
                advance();
                break;
            }
            fail("expected ',' or '}' in inline table");
        }
        return out;
    }

    std::string_view text_;
    std::string name_;
    std::size_t pos_ = 0;
    std::size_t line_start_ = 0;
    int line_ = 1;
};

}  // namespace

Table parse(std::string_view text, const std::string& source_name)
{
    return Reader(text, source_name).document();
}

}  // namespace slq::toml
