#ifndef AOC_CONFIG_HPP
#define AOC_CONFIG_HPP

// Small TOML subset: [section] headers, key = value lines, # comments.
// Values: double, integer, bool, "string", [arrays], {inline tables}.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "aoc/distribution.hpp"
#include "aoc/errors.hpp"

namespace aoc::config {

struct Pos {
  std::string file;
  std::size_t line = 0, col = 0;
  std::string str() const { return file + ":" + std::to_string(line) + ":" + std::to_string(col); }
};

struct Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

struct Value {
  std::variant<double, std::int64_t, bool, std::string, std::shared_ptr<Array>, std::shared_ptr<Table>> v;
  Pos pos;
  Pos key_pos;  // where the owning key starts, for keyed values

  bool is_number() const { return std::holds_alternative<double>(v) || std::holds_alternative<std::int64_t>(v); }
  const char* type_name() const {
    switch (v.index()) {
      case 0: return "float";
      case 1: return "integer";
      case 2: return "bool";
      case 3: return "string";
      case 4: return "array";
      default: return "table";
    }
  }
};

[[noreturn]] inline void fail(const Pos& p, const std::string& msg) { throw ConfigError(p.str() + ": " + msg); }

namespace detail {

class Parser {
 public:
  Parser(std::string text, std::string file) : s_(std::move(text)), file_(std::move(file)) {}

  std::map<std::string, Table> parse(std::map<std::string, Pos>& section_pos) {
    std::map<std::string, Table> doc;
    std::string section;
    doc[section];
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        const Pos at = pos();
        ++i_;
        ++col_;
        section = ident();
        while (!eof() && peek() == '.') {
          adv();
          section += "." + ident();
        }
        expect(']');
        end_of_line();
        if (section_pos.count(section)) fail(at, "duplicate section [" + section + "]");
        section_pos[section] = at;
        doc[section];
        continue;
      }
      const Pos at = pos();
      std::string key = ident();
      skip_ws();
      expect('=');
      skip_ws();
      Value val = value();
      val.key_pos = at;
      end_of_line();
      auto& tbl = doc[section];
      if (tbl.count(key)) fail(at, "duplicate key '" + key + "'");
      tbl.emplace(std::move(key), std::move(val));
    }
    return doc;
  }

 private:
  bool eof() const { return i_ >= s_.size(); }
  char peek() const { return s_[i_]; }
  Pos pos() const { return Pos{file_, line_, col_}; }
  void adv() {
    if (s_[i_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++i_;
  }
  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) adv();
  }
  void skip_comment() {
    if (!eof() && peek() == '#')
      while (!eof() && peek() != '\n') adv();
  }
  void skip_blank_lines() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r'))
        adv();
      else
        break;
    }
  }
  // whitespace, newlines and comments inside brackets
  void skip_space_nl() {
    while (!eof()) {
      skip_ws();
      skip_comment();
      if (!eof() && (peek() == '\n' || peek() == '\r'))
        adv();
      else
        break;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (eof()) return;
    if (peek() == '\r') adv();
    if (eof()) return;
    if (peek() != '\n') fail(pos(), std::string("unexpected '") + peek() + "' after value");
    adv();
  }
  void expect(char c) {
    if (eof()) fail(pos(), std::string("expected '") + c + "' but reached end of input");
    if (peek() != c) fail(pos(), std::string("expected '") + c + "', found '" + peek() + "'");
    adv();
  }
  std::string ident() {
    skip_ws();
    const Pos at = pos();
    std::string out;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
      out += peek();
      adv();
    }
    if (out.empty()) fail(at, eof() ? "expected a key" : std::string("expected a key, found '") + peek() + "'");
    return out;
  }

  Value value() {
    if (eof()) fail(pos(), "expected a value");
    Value out;
    out.pos = pos();
    const char c = peek();
    if (c == '"') {
      adv();
      std::string str;
      while (true) {
        if (eof() || peek() == '\n') fail(out.pos, "unterminated string");
        if (peek() == '"') break;
        if (peek() == '\\') {
          adv();
          if (eof()) fail(out.pos, "unterminated string");
          const char e = peek();
          if (e == 'n')
            str += '\n';
          else if (e == 't')
            str += '\t';
          else if (e == '"' || e == '\\')
            str += e;
          else
            fail(pos(), std::string("unknown escape '\\") + e + "'");
          adv();
          continue;
        }
        str += peek();
        adv();
      }
      adv();
      out.v = std::move(str);
    } else if (c == '[') {
      adv();
      auto arr = std::make_shared<Array>();
      skip_space_nl();
      while (!eof() && peek() != ']') {
        arr->push_back(value());
        skip_space_nl();
        if (!eof() && peek() == ',') {
          adv();
          skip_space_nl();
        } else {
          break;
        }
      }
      expect(']');
      out.v = std::move(arr);
    } else if (c == '{') {
      adv();
      auto tbl = std::make_shared<Table>();
      skip_ws();
      while (!eof() && peek() != '}') {
        const Pos at = pos();
        std::string key = ident();
        skip_ws();
        expect('=');
        skip_ws();
        Value v = value();
        v.key_pos = at;
        if (tbl->count(key)) fail(at, "duplicate key '" + key + "'");
        tbl->emplace(std::move(key), std::move(v));
        skip_ws();
        if (!eof() && peek() == ',') {
          adv();
          skip_ws();
        } else {
          break;
        }
      }
      expect('}');
      out.v = std::move(tbl);
    } else {
      std::string tok;
      while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) && peek() != ',' && peek() != ']' &&
             peek() != '}' && peek() != '#') {
        tok += peek();
        adv();
      }
      if (tok.empty()) fail(out.pos, std::string("unexpected '") + c + "'");
      if (tok == "true" || tok == "false") {
        out.v = tok == "true";
      } else if (tok == "inf" || tok == "+inf") {
        out.v = std::numeric_limits<double>::infinity();
      } else {
        std::string clean;
        for (char ch : tok)
          if (ch != '_') clean += ch;
        const bool looks_float = clean.find_first_of(".eE") != std::string::npos;
        const char* b = clean.data();
        const char* e = b + clean.size();
        if (!clean.empty() && *b == '+') ++b;
        if (looks_float) {
          double d = 0;
          auto [p, ec] = std::from_chars(b, e, d);
          if (ec != std::errc() || p != e) fail(out.pos, "invalid number '" + tok + "'");
          out.v = d;
        } else {
          std::int64_t n = 0;
          auto [p, ec] = std::from_chars(b, e, n);
          if (ec != std::errc() || p != e) fail(out.pos, "invalid value '" + tok + "'");
          out.v = n;
        }
      }
    }
    return out;
  }

  std::string s_;
  std::string file_;
  std::size_t i_ = 0, line_ = 1, col_ = 1;
};

}  // namespace detail

/// Parsed document with typed, tracked lookups. finish() rejects keys and
/// sections that no getter asked for.
class Document {
 public:
  static Document parse(const std::string& text, const std::string& file = "<config>") {
    Document d;
    d.file_ = file;
    d.text_ = text;
    detail::Parser p(text, file);
    d.sections_ = p.parse(d.section_pos_);
    return d;
  }

  static Document load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  const std::string& text() const { return text_; }
  const std::string& file() const { return file_; }

  bool has_section(const std::string& s) const {
    auto it = sections_.find(s);
    return it != sections_.end() && (s.empty() || section_pos_.count(s));
  }
  bool has(const std::string& s, const std::string& k) const {
    auto it = sections_.find(s);
    return it != sections_.end() && it->second.count(k);
  }
  const Value* find(const std::string& s, const std::string& k) const {
    used_sections_.insert(s);
    auto it = sections_.find(s);
    if (it == sections_.end()) return nullptr;
    auto jt = it->second.find(k);
    if (jt == it->second.end()) return nullptr;
    used_.insert(s + "\x1f" + k);
    return &jt->second;
  }

  double number(const std::string& s, const std::string& k, std::optional<double> def = std::nullopt) const {
    const Value* v = find(s, k);
    if (!v) return def ? *def : missing(s, k);
    return as_number(*v, k);
  }
  std::uint64_t count(const std::string& s, const std::string& k, std::optional<std::uint64_t> def = std::nullopt) const {
    const Value* v = find(s, k);
    if (!v) return def ? *def : static_cast<std::uint64_t>(missing(s, k));
    return as_count(*v, k);
  }
  bool boolean(const std::string& s, const std::string& k, std::optional<bool> def = std::nullopt) const {
    const Value* v = find(s, k);
    if (!v) return def ? *def : missing(s, k) != 0.0;
    if (auto* b = std::get_if<bool>(&v->v)) return *b;
    fail(v->pos, "'" + k + "' must be a bool, got " + v->type_name());
  }
  std::string string(const std::string& s, const std::string& k,
                     std::optional<std::string> def = std::nullopt) const {
    const Value* v = find(s, k);
    if (!v) {
      if (def) return *def;
      missing(s, k);
    }
    if (auto* str = std::get_if<std::string>(&v->v)) return *str;
    fail(v->pos, "'" + k + "' must be a string, got " + v->type_name());
  }
  /// A number or an array of numbers; a scalar becomes a one-element grid.
  std::vector<double> numbers(const std::string& s, const std::string& k,
                              std::optional<std::vector<double>> def = std::nullopt) const {
    const Value* v = find(s, k);
    if (!v) {
      if (def) return *def;
      missing(s, k);
    }
    std::vector<double> out;
    if (auto* arr = std::get_if<std::shared_ptr<Array>>(&v->v)) {
      for (const auto& e : **arr) out.push_back(as_number(e, k));
      if (out.empty()) fail(v->pos, "'" + k + "' must be non-empty");
    } else {
      out.push_back(as_number(*v, k));
    }
    return out;
  }
  std::vector<std::string> strings(const std::string& s, const std::string& k,
                                   std::optional<std::vector<std::string>> def = std::nullopt) const {
    const Value* v = find(s, k);
    if (!v) {
      if (def) return *def;
      missing(s, k);
    }
    std::vector<std::string> out;
    auto one = [&](const Value& e) {
      if (auto* str = std::get_if<std::string>(&e.v)) return *str;
      fail(e.pos, "'" + k + "' entries must be strings, got " + e.type_name());
    };
    if (auto* arr = std::get_if<std::shared_ptr<Array>>(&v->v)) {
      for (const auto& e : **arr) out.push_back(one(e));
      if (out.empty()) fail(v->pos, "'" + k + "' must be non-empty");
    } else {
      out.push_back(one(*v));
    }
    return out;
  }
  DistributionSpec distribution(const std::string& s, const std::string& k,
                                std::optional<DistributionSpec> def = std::nullopt) const {
    const Value* v = find(s, k);
    if (!v) {
      if (def) return *def;
      missing(s, k);
    }
    return as_distribution(*v, k);
  }

  static DistributionSpec as_distribution(const Value& v, const std::string& k) {
    auto* tp = std::get_if<std::shared_ptr<Table>>(&v.v);
    if (!tp) fail(v.pos, "'" + k + "' must be a table like {kind = \"exp\", rate = 1.0}");
    const Table& t = **tp;
    std::set<std::string> seen;
    auto get = [&](const char* name) -> const Value& {
      auto it = t.find(name);
      if (it == t.end()) fail(v.pos, "'" + k + "' is missing field '" + name + "'");
      seen.insert(name);
      return it->second;
    };
    auto list = [&](const char* name) {
      const Value& e = get(name);
      auto* arr = std::get_if<std::shared_ptr<Array>>(&e.v);
      if (!arr) fail(e.pos, std::string("'") + name + "' must be an array");
      std::vector<double> out;
      for (const auto& x : **arr) out.push_back(as_number(x, name));
      return out;
    };
    const Value& kindv = get("kind");
    auto* kind = std::get_if<std::string>(&kindv.v);
    if (!kind) fail(kindv.pos, "'kind' must be a string");
    DistributionSpec spec;
    if (*kind == "exp") {
      spec = Exponential{as_number(get("rate"), "rate")};
    } else if (*kind == "det") {
      spec = Deterministic{as_number(get("value"), "value")};
    } else if (*kind == "gamma") {
      spec = Gamma{as_number(get("shape"), "shape"), as_number(get("rate"), "rate")};
    } else if (*kind == "uniform") {
      spec = Uniform{as_number(get("lo"), "lo"), as_number(get("hi"), "hi")};
    } else if (*kind == "hyperexp") {
      spec = Hyperexponential{list("weights"), list("rates")};
    } else {
      fail(kindv.pos, "unknown distribution kind '" + *kind + "' (exp, det, gamma, uniform, hyperexp)");
    }
    for (const auto& [name, val] : t)
      if (!seen.count(name)) fail(val.key_pos, "unknown field '" + name + "' for kind '" + *kind + "'");
    try {
      validate(spec);
    } catch (const ConfigError& e) {
      fail(v.pos, e.what());
    }
    return spec;
  }

  /// Throws on the first key or section that was never looked up.
  void finish() const {
    for (const auto& [s, tbl] : sections_) {
      if (!s.empty() && !used_sections_.count(s)) fail(section_pos_.at(s), "unknown section [" + s + "]");
      for (const auto& [k, v] : tbl)
        if (!used_.count(s + "\x1f" + k))
          fail(v.key_pos, "unknown key '" + k + "'" + (s.empty() ? std::string() : " in [" + s + "]"));
    }
  }

  [[noreturn]] void error_at(const std::string& s, const std::string& k, const std::string& msg) const {
    if (const Value* v = find(s, k)) fail(v->pos, msg);
    throw ConfigError(file_ + ": " + msg);
  }

 private:
  [[noreturn]] double missing(const std::string& s, const std::string& k) const {
    throw ConfigError(file_ + ": missing required key '" + k + "'" + (s.empty() ? std::string() : " in [" + s + "]"));
  }
  static double as_number(const Value& v, const std::string& k) {
    if (auto* d = std::get_if<double>(&v.v)) return *d;
    if (auto* n = std::get_if<std::int64_t>(&v.v)) return static_cast<double>(*n);
    fail(v.pos, "'" + k + "' must be a number, got " + v.type_name());
  }
  static std::uint64_t as_count(const Value& v, const std::string& k) {
    if (auto* n = std::get_if<std::int64_t>(&v.v)) {
      if (*n < 0) fail(v.pos, "'" + k + "' must be >= 0");
      return static_cast<std::uint64_t>(*n);
    }
    if (auto* d = std::get_if<double>(&v.v)) {
      if (*d >= 0 && *d == std::floor(*d) && *d < 1.8e19) return static_cast<std::uint64_t>(*d);
    }
    fail(v.pos, "'" + k + "' must be a non-negative integer");
  }

  std::string file_;
  std::string text_;
  std::map<std::string, Table> sections_;
  std::map<std::string, Pos> section_pos_;
  mutable std::set<std::string> used_;
  mutable std::set<std::string> used_sections_;
};

}  // namespace aoc::config

#endif  // AOC_CONFIG_HPP
