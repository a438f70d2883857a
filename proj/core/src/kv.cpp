#include "audiolm/kv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "audiolm/errors.hpp"

namespace audiolm::kv {

std::string_view trim(std::string_view text) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!text.empty() && is_space(text.front())) text.remove_prefix(1);
  while (!text.empty() && is_space(text.back())) text.remove_suffix(1);
  return text;
}

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(text.substr(start));
      break;
    }
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec == std::errc() && res.ptr == text.data() + text.size()) return value;
  // "500e9" style: accept when exactly integral and representable.
  const auto d = parse_double(text);
  if (!d || !std::isfinite(*d) || std::floor(*d) != *d ||
      std::fabs(*d) > 9.0e18) {
    return std::nullopt;
  }
  return static_cast<std::int64_t>(*d);
}

Document Document::parse(std::string_view text) {
  Document doc;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError(line_no, "", "expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "", "empty key");
    if (doc.contains(key)) {
      throw ParseError(line_no, std::string(key), "duplicate key");
    }
    doc.entries_.push_back(
        {std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return doc;
}

Document Document::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Document::set(std::string key, std::string value) {
  for (auto& e : entries_) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  entries_.push_back({std::move(key), std::move(value), 0});
}

void Document::set(std::string key, double value) {
  set(std::move(key), format_double(value));
}

void Document::set_int(std::string key, std::int64_t value) {
  set(std::move(key), std::to_string(value));
}

bool Document::contains(std::string_view key) const { return find(key) != nullptr; }

const Entry* Document::find(std::string_view key) const {
  for (const auto& e : entries_) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

const std::string& Document::get(std::string_view key) const {
  const auto* e = find(key);
  if (e == nullptr) throw ParseError(0, std::string(key), "missing key");
  return e->value;
}

double Document::get_double(std::string_view key) const {
  const auto* e = find(key);
  if (e == nullptr) throw ParseError(0, std::string(key), "missing key");
  const auto v = parse_double(e->value);
  if (!v) throw ParseError(e->line, e->key, "not a number: '" + e->value + "'");
  return *v;
}

std::optional<double> Document::get_double_opt(std::string_view key) const {
  if (!contains(key)) return std::nullopt;
  return get_double(key);
}

std::int64_t Document::get_int(std::string_view key) const {
  const auto* e = find(key);
  if (e == nullptr) throw ParseError(0, std::string(key), "missing key");
  const auto v = parse_int(e->value);
  if (!v) throw ParseError(e->line, e->key, "not an integer: '" + e->value + "'");
  return *v;
}

std::uint64_t Document::get_uint(std::string_view key) const {
  const auto* e = find(key);
  if (e == nullptr) throw ParseError(0, std::string(key), "missing key");
  const auto text = trim(e->value);
  std::uint64_t value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError(e->line, e->key, "not an unsigned integer: '" + e->value + "'");
  }
  return value;
}

std::string Document::str() const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.key;
    out += " = ";
    out += e.value;
    out += '\n';
  }
  return out;
}

void Document::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << str();
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace audiolm::kv
