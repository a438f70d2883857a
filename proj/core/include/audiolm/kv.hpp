#pragma once

// Line-oriented `key = value` text files. Used for vocab layouts, mixture
// specs, fit reports and optimizer configs so that every artifact the
// toolkit writes is diffable and human-editable.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace audiolm::kv {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

// Ordered collection; duplicate keys are rejected on parse.
class Document {
 public:
  Document() = default;

  // Blank lines and lines starting with '#' are ignored. Keys and values are
  // trimmed of surrounding whitespace. Throws ParseError.
  static Document parse(std::string_view text);
  static Document load(const std::string& path);

  void set(std::string key, std::string value);
  void set(std::string key, double value);
  void set_int(std::string key, std::int64_t value);

  bool contains(std::string_view key) const;
  const Entry* find(std::string_view key) const;

  // Typed getters throw ParseError naming the key and its line.
  const std::string& get(std::string_view key) const;
  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  std::optional<double> get_double_opt(std::string_view key) const;

  const std::vector<Entry>& entries() const { return entries_; }

  std::string str() const;
  void save(const std::string& path) const;

 private:
  std::vector<Entry> entries_;
};

// Shortest decimal representation that round-trips through strtod.
std::string format_double(double value);

// Strict numeric parsing of a whole token (no trailing garbage). Accepts
// scientific notation for integers too ("500e9") as long as it is integral.
std::optional<double> parse_double(std::string_view text);
std::optional<std::int64_t> parse_int(std::string_view text);

std::string_view trim(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);

}  // namespace audiolm::kv
