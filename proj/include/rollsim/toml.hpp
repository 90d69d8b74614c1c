#pragma once

// Line-oriented parser for the configuration subset of TOML the scenario
// files use: `[table]` and `[[table array]]` headers, bare keys, strings
// with the common escapes, integers, floats, booleans, and single-line
// arrays of scalars. Anything outside the subset fails loudly with the
// offending line number.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rollsim {

struct TomlError : std::runtime_error {
    std::size_t line;
    TomlError(std::size_t ln, const std::string& msg)
        : std::runtime_error("line " + std::to_string(ln) + ": " + msg), line(ln) {}
};

struct TomlValue {
    enum class Kind : std::uint8_t { Str, Int, Float, Bool, Array };
    Kind kind = Kind::Str;
    std::string str;
    std::int64_t i = 0;
    double f = 0.0;
    bool b = false;
    std::vector<TomlValue> arr;

    // floats accept integer literals so "tolerance = 1" reads naturally
    double as_float() const { return kind == Kind::Int ? static_cast<double>(i) : f; }
};

using TomlTable = std::map<std::string, TomlValue>;

struct TomlDoc {
    TomlTable root;
    std::map<std::string, TomlTable> tables;
    std::map<std::string, std::vector<TomlTable>> table_arrays;
};

namespace detail {

struct TomlCursor {
    std::string_view s;
    std::size_t pos = 0;
    std::size_t line;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    void skip_ws() {
        while (!done() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw TomlError(line, msg); }
};

inline bool bare_key_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '-';
}

inline std::string parse_bare_key(TomlCursor& c) {
    std::size_t start = c.pos;
    while (!c.done() && bare_key_char(c.peek())) ++c.pos;
    if (c.pos == start) c.fail("expected a key");
    return std::string(c.s.substr(start, c.pos - start));
}

inline TomlValue parse_value(TomlCursor& c, bool inside_array = false);

inline TomlValue parse_string(TomlCursor& c) {
    ++c.pos;  // opening quote
    std::string out;
    while (true) {
        if (c.done()) c.fail("unterminated string");
        char ch = c.s[c.pos++];
        if (ch == '"') break;
        if (ch != '\\') {
            out.push_back(ch);
            continue;
        }
        if (c.done()) c.fail("dangling escape");
        char esc = c.s[c.pos++];
        switch (esc) {
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            default: c.fail(std::string("unsupported escape \\") + esc);
        }
    }
    TomlValue v;
    v.kind = TomlValue::Kind::Str;
    v.str = std::move(out);
    return v;
}

inline TomlValue parse_number(TomlCursor& c) {
    std::size_t start = c.pos;
    bool is_float = false;
    if (!c.done() && (c.peek() == '-' || c.peek() == '+')) ++c.pos;
    while (!c.done()) {
        char ch = c.peek();
        if (ch >= '0' && ch <= '9') {
            ++c.pos;
        } else if (ch == '.' || ch == 'e' || ch == 'E') {
            is_float = true;
            ++c.pos;
            if (!c.done() && (c.peek() == '-' || c.peek() == '+')) ++c.pos;
        } else if (ch == '_') {
            ++c.pos;
        } else {
            break;
        }
    }
    std::string text(c.s.substr(start, c.pos - start));
    std::erase(text, '_');
    if (text.empty() || text == "-" || text == "+") c.fail("malformed number");
    TomlValue v;
    try {
        if (is_float) {
            v.kind = TomlValue::Kind::Float;
            v.f = std::stod(text);
        } else {
            v.kind = TomlValue::Kind::Int;
            v.i = std::stoll(text);
        }
    } catch (const std::exception&) {
        c.fail("malformed number '" + text + "'");
    }
    return v;
}

inline TomlValue parse_value(TomlCursor& c, bool inside_array) {
    c.skip_ws();
    if (c.done()) c.fail("expected a value");
    char ch = c.peek();
    if (ch == '"') return parse_string(c);
    if (ch == '[') {
        if (inside_array) c.fail("nested arrays are not supported");
        ++c.pos;
        TomlValue v;
        v.kind = TomlValue::Kind::Array;
        c.skip_ws();
        while (!c.done() && c.peek() != ']') {
            v.arr.push_back(parse_value(c, true));
            if (!v.arr.empty() && v.arr.front().kind != v.arr.back().kind)
                c.fail("arrays must be homogeneous");
            c.skip_ws();
            if (!c.done() && c.peek() == ',') {
                ++c.pos;
                c.skip_ws();
            } else {
                break;
            }
        }
        if (c.done() || c.peek() != ']') c.fail("unterminated array");
        ++c.pos;
        return v;
    }
    if (c.s.substr(c.pos, 4) == "true" &&
        (c.pos + 4 >= c.s.size() || !bare_key_char(c.s[c.pos + 4]))) {
        c.pos += 4;
        TomlValue v;
        v.kind = TomlValue::Kind::Bool;
        v.b = true;
        return v;
    }
    if (c.s.substr(c.pos, 5) == "false" &&
        (c.pos + 5 >= c.s.size() || !bare_key_char(c.s[c.pos + 5]))) {
        c.pos += 5;
        TomlValue v;
        v.kind = TomlValue::Kind::Bool;
        v.b = false;
        return v;
    }
    if (ch == '-' || ch == '+' || (ch >= '0' && ch <= '9')) return parse_number(c);
    c.fail("unrecognized value");
}

inline void expect_line_end(TomlCursor& c) {
    c.skip_ws();
    if (c.done() || c.peek() == '#') return;
    c.fail("trailing characters after value");
}

}  // namespace detail

inline TomlDoc parse_toml(std::string_view text) {
    TomlDoc doc;
    TomlTable* current = &doc.root;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        detail::TomlCursor c{line, 0, line_no};
        c.skip_ws();
        if (c.done() || c.peek() == '#') continue;

        if (c.peek() == '[') {
            ++c.pos;
            bool is_array = !c.done() && c.peek() == '[';
            if (is_array) ++c.pos;
            std::string name = detail::parse_bare_key(c);
            if (c.done() || c.peek() != ']') c.fail("unterminated table header");
            ++c.pos;
            if (is_array) {
                if (c.done() || c.peek() != ']') c.fail("unterminated table-array header");
                ++c.pos;
            }
            detail::expect_line_end(c);
            if (is_array) {
                doc.table_arrays[name].emplace_back();
                current = &doc.table_arrays[name].back();
            } else {
                if (doc.tables.contains(name)) c.fail("table '" + name + "' redefined");
                current = &doc.tables[name];
            }
            continue;
        }

        std::string key = detail::parse_bare_key(c);
        c.skip_ws();
        if (c.done() || c.peek() != '=') c.fail("expected '=' after key '" + key + "'");
        ++c.pos;
        TomlValue v = detail::parse_value(c);
        detail::expect_line_end(c);
        if (!current->emplace(std::move(key), std::move(v)).second)
            c.fail("duplicate key");
    }
    return doc;
}

inline const TomlValue* toml_find(const TomlTable& t, const std::string& key) {
    auto it = t.find(key);
    return it == t.end() ? nullptr : &it->second;
}

}  // namespace rollsim
