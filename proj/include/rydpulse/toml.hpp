#pragma once

// Minimal TOML-subset reader for config and pulse parameter files. Supports
// comments, [section] and [a.b] headers, dotted keys, basic and literal
// strings, booleans, integers, floats (inf/nan included), arrays (nesting and
// newlines allowed), and inline tables. Datetimes and [[arrays of tables]]
// are not part of the config surface and are rejected with a clear message.
// Errors throw ConfigError with a 1-based line number.

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "rydpulse/common.hpp"

namespace rydpulse::toml {

class Value;
using Table = std::map<std::string, Value>;
using Array = std::vector<Value>;

class Value {
  public:
    enum class Kind { boolean, integer, floating, string, array, table };

    Value() : kind_(Kind::table), tab_(std::make_shared<Table>()) {}
    static Value of(bool b) { return Value(Kind::boolean, b ? 1 : 0, 0.0, {}); }
    static Value of(std::int64_t i) {
        return Value(Kind::integer, i, static_cast<double>(i), {});
    }
    static Value of(double f) { return Value(Kind::floating, 0, f, {}); }
    static Value of(std::string s) { return Value(Kind::string, 0, 0.0, std::move(s)); }
    static Value of(Array a) {
        Value v(Kind::array, 0, 0.0, {});
        v.arr_ = std::make_shared<Array>(std::move(a));
        return v;
    }
    static Value of(Table t) {
        Value v(Kind::table, 0, 0.0, {});
        v.tab_ = std::make_shared<Table>(std::move(t));
        return v;
    }

    Kind kind() const { return kind_; }
    bool is_number() const { return kind_ == Kind::integer || kind_ == Kind::floating; }

    bool as_bool() const {
        require(Kind::boolean, "boolean");
        return int_ != 0;
    }
    std::int64_t as_int() const {
        require(Kind::integer, "integer");
        return int_;
    }
    // integers promote, so "gamma = 0" reads back as 0.0
    double as_float() const {
        if (kind_ == Kind::integer) return static_cast<double>(int_);
        require(Kind::floating, "float");
        return float_;
    }
    const std::string& as_string() const {
        require(Kind::string, "string");
        return str_;
    }
    const Array& as_array() const {
        require(Kind::array, "array");
        return *arr_;
    }
    const Table& as_table() const {
        require(Kind::table, "table");
        return *tab_;
    }
    Table& as_table() {
        require(Kind::table, "table");
        return *tab_;
    }

  private:
    Value(Kind k, std::int64_t i, double f, std::string s)
        : kind_(k), int_(i), float_(f), str_(std::move(s)) {}
    void require(Kind k, const char* name) const {
        if (kind_ != k)
            throw ConfigError(std::string("config value is not a ") + name);
    }

    Kind kind_;
    std::int64_t int_ = 0;
    double float_ = 0.0;
    std::string str_;
    std::shared_ptr<Array> arr_;
    std::shared_ptr<Table> tab_;
};

namespace detail {

class Parser {
  public:
    explicit Parser(std::string_view src) : src_(src) {}

    Table parse() {
        Table root;
        Table* current = &root;
        for (;;) {
            skip_trivia(true);
            if (eof()) break;
            const int at = line_;
            if (peek() == '[') {
                if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '[')
                    fail("arrays of tables are not supported");
                ++pos_;
                const auto path = key_path();
                skip_ws();
                expect(']');
                end_of_line();
                current = descend(root, path, at);
            } else {
                const auto path = key_path();
                skip_ws();
                expect('=');
                skip_ws();
                Value v = value();
                end_of_line();
                assign(*current, path, std::move(v), at);
            }
        }
        return root;
    }

  private:
    // key-conflict diagnostics point at the statement's first line, not
    // wherever the value finished (multiline arrays, consumed newlines)
    [[noreturn]] void fail_at(int line, const std::string& msg) const {
        throw ConfigError("toml parse error (line " + std::to_string(line) + "): " + msg);
    }
    [[noreturn]] void fail(const std::string& msg) const { fail_at(line_, msg); }
    bool eof() const { return pos_ >= src_.size(); }
    char peek() const { return src_[pos_]; }
    char take() {
        const char c = src_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }
    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        take();
    }
    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
    }
    // whitespace, comments, and (optionally) newlines
    void skip_trivia(bool newlines) {
        for (;;) {
            skip_ws();
            if (eof()) return;
            if (peek() == '#') {
                while (!eof() && peek() != '\n') ++pos_;
                continue;
            }
            if (newlines && (peek() == '\n' || peek() == '\r')) {
                take();
                continue;
            }
            return;
        }
    }
    void end_of_line() {
        skip_ws();
        if (eof()) return;
        if (peek() == '#') {
            while (!eof() && peek() != '\n') ++pos_;
            return;
        }
        if (peek() == '\r') {
            take();
            if (!eof() && peek() == '\n') take();
            return;
        }
        if (peek() == '\n') {
            take();
            return;
        }
        fail("unexpected trailing characters");
    }

    static bool bare_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    }
    std::string key_part() {
        if (!eof() && (peek() == '"' || peek() == '\'')) return string_value();
        std::string k;
        while (!eof() && bare_char(peek())) k += take();
        if (k.empty()) fail("expected a key");
        return k;
    }
    std::vector<std::string> key_path() {
        std::vector<std::string> path{key_part()};
        skip_ws();
        while (!eof() && peek() == '.') {
            take();
            skip_ws();
            path.push_back(key_part());
            skip_ws();
        }
        return path;
    }

    Table* descend(Table& root, const std::vector<std::string>& path, int at_line) {
        Table* t = &root;
        for (const auto& k : path) {
            auto it = t->find(k);
            if (it == t->end()) it = t->emplace(k, Value()).first;
            else if (it->second.kind() != Value::Kind::table)
                fail_at(at_line, "'" + k + "' is already a non-table value");
            t = &it->second.as_table();
        }
        return t;
    }
    void assign(Table& tab, const std::vector<std::string>& path, Value v, int at_line) {
        Table* t = &tab;
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            t = descend(*t, {path[i]}, at_line);
        if (t->count(path.back()))
            fail_at(at_line, "duplicate key '" + path.back() + "'");
        t->emplace(path.back(), std::move(v));
    }

    std::string string_value() {
        const char quote = take();
        std::string out;
        for (;;) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = take();
            if (c == quote) break;
            if (quote == '"' && c == '\\') {
                if (eof()) fail("unterminated escape");
                const char e = take();
                switch (e) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case 'r': out += '\r'; break;
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

    Value value() {
        if (eof()) fail("expected a value");
        const char c = peek();
        if (c == '"' || c == '\'') return Value::of(string_value());
        if (c == '[') return array_value();
        if (c == '{') return inline_table();
        return scalar();
    }

    Value array_value() {
        take();  // '['
        Array out;
        for (;;) {
            skip_trivia(true);
            if (eof()) fail("unterminated array");
            if (peek() == ']') {
                take();
                break;
            }
            out.push_back(value());
            skip_trivia(true);
            if (!eof() && peek() == ',') {
                take();
                continue;
            }
            if (!eof() && peek() == ']') {
                take();
                break;
            }
            fail("expected ',' or ']' in array");
        }
        return Value::of(std::move(out));
    }

    Value inline_table() {
        take();  // '{'
        Table out;
        skip_ws();
        if (!eof() && peek() == '}') {
            take();
            return Value::of(std::move(out));
        }
        for (;;) {
            skip_ws();
            const int at = line_;
            const auto path = key_path();
            skip_ws();
            expect('=');
            skip_ws();
            assign(out, path, value(), at);
            skip_ws();
            if (!eof() && peek() == ',') {
                take();
                continue;
            }
            expect('}');
            break;
        }
        return Value::of(std::move(out));
    }

    Value scalar() {
        std::string tok;
        while (!eof()) {
            const char c = peek();
            if (c == ',' || c == ']' || c == '}' || c == '\n' || c == '\r' || c == '#')
                break;
            tok += take();
        }
        while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t')) tok.pop_back();
        if (tok.empty()) fail("expected a value");
        if (tok == "true") return Value::of(true);
        if (tok == "false") return Value::of(false);

        std::string digits;
        digits.reserve(tok.size());
        for (const char c : tok) {
            if (c == '_') continue;  // TOML digit separators
            digits += c;
        }
        bool integral = !digits.empty();
        for (std::size_t i = 0; i < digits.size(); ++i) {
            const char c = digits[i];
            if (i == 0 && (c == '+' || c == '-')) {
                if (digits.size() == 1) integral = false;
                continue;
            }
            if (!std::isdigit(static_cast<unsigned char>(c))) {
                integral = false;
                break;
            }
        }
        errno = 0;
        char* end = nullptr;
        if (integral) {
            const long long v = std::strtoll(digits.c_str(), &end, 10);
            if (errno == 0 && end && *end == '\0')
                return Value::of(static_cast<std::int64_t>(v));
        }
        const double f = std::strtod(digits.c_str(), &end);
        if (end && *end == '\0' && end != digits.c_str()) return Value::of(f);
        fail("cannot parse value '" + tok + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
};

}  // namespace detail

inline Table parse(std::string_view text) { return detail::Parser(text).parse(); }

// Lookup helpers. get_* throw ConfigError naming the key; the *_or forms
// return the fallback when the key is absent (not when it has the wrong type).
inline const Value* find(const Table& t, const std::string& key) {
    const auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}
inline const Value& get(const Table& t, const std::string& key) {
    const Value* v = find(t, key);
    if (!v) throw ConfigError("missing config key '" + key + "'");
    return *v;
}
inline double get_float(const Table& t, const std::string& key) {
    try {
        return get(t, key).as_float();
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "' must be a number");
    }
}
inline double get_float_or(const Table& t, const std::string& key, double fallback) {
    const Value* v = find(t, key);
    return v ? get_float(t, key) : fallback;
}
inline std::int64_t get_int(const Table& t, const std::string& key) {
    try {
        return get(t, key).as_int();
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "' must be an integer");
    }
}
inline std::int64_t get_int_or(const Table& t, const std::string& key,
                               std::int64_t fallback) {
    const Value* v = find(t, key);
    return v ? get_int(t, key) : fallback;
}
inline std::string get_string(const Table& t, const std::string& key) {
    try {
        return get(t, key).as_string();
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "' must be a string");
    }
}
inline std::string get_string_or(const Table& t, const std::string& key,
                                 std::string fallback) {
    const Value* v = find(t, key);
    return v ? get_string(t, key) : fallback;
}
inline bool get_bool_or(const Table& t, const std::string& key, bool fallback) {
    const Value* v = find(t, key);
    if (!v) return fallback;
    try {
        return v->as_bool();
    } catch (const ConfigError&) {
        throw ConfigError("config key '" + key + "' must be a boolean");
    }
}

}  // namespace rydpulse::toml
