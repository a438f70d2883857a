#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "audiolm/vocab.hpp"

namespace audiolm {

struct Utterance {
  std::vector<TokenId> text_ids;
  CodeMatrix codes;
  std::optional<double> duration_s;

  // Seconds of audio, derived from the frame count when not supplied.
  double duration() const {
    return duration_s.value_or(static_cast<double>(codes.frames()) / kCodecFrameRateHz);
  }
};

struct Document {
  std::string doc_id;
  std::string source;
  std::vector<Utterance> utterances;
};

// Throws ValidationError when a document breaks a corpus invariant: no
// utterances, text ids outside the text region, bad codes, or a duration
// that disagrees with the frame count by more than one frame.
void validate_document(const Document& doc, const VocabLayout& layout);

// Lazy reader over a JSON-lines manifest. Each nonblank line is one document:
//
//   {"doc_id": "...", "source": "...",
//    "utterances": [{"text_ids": [..], "codes": [[c0..c7], ...],
//                    "duration_s": 1.28}]}
//
// `duration_s` is optional. Errors carry the 1-based line number.
class ManifestReader {
 public:
  ManifestReader(std::istream& in, const VocabLayout& layout);

  // Next document, or nullopt at end of input. Throws ParseError for
  // malformed records and ValidationError (prefixed with the line) for
  // out-of-range ids or codes.
  std::optional<Document> next();

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  const VocabLayout& layout_;
  std::size_t line_ = 0;
};

// Parses one manifest line; exposed for tests and tools.
Document parse_manifest_line(std::string_view line, const VocabLayout& layout,
                             std::size_t line_no = 0);

// Reads a whole manifest.
std::vector<Document> read_manifest(std::istream& in, const VocabLayout& layout);
std::vector<Document> read_manifest_file(const std::string& path, const VocabLayout& layout);

// Serialization used by tests and fixture generators; parse(serialize(d)) == d.
std::string manifest_line(const Document& doc);

struct SourceStats {
  std::string source;
  std::uint64_t documents = 0;
  std::uint64_t audio_tokens = 0;
  std::uint64_t text_tokens = 0;
  // Both renderings (text-first and audio-first), framing included.
  std::uint64_t interleaved_tokens = 0;

  SourceStats& operator+=(const SourceStats& other);
  friend bool operator==(const SourceStats&, const SourceStats&) = default;
};

// Framing ids emitted by one rendering of `doc`: four delimiters per
// utterance plus begin_of_text and end_of_text.
std::uint64_t framing_tokens(const Document& doc);

SourceStats count_tokens(const Document& doc, const VocabLayout& layout);

// Per-source accumulation; merge order does not matter.
class TokenAccounting {
 public:
  void add(const Document& doc, const VocabLayout& layout);
  void merge(const TokenAccounting& other);
  const std::map<std::string, SourceStats>& by_source() const { return stats_; }
  SourceStats total() const;

 private:
  std::map<std::string, SourceStats> stats_;
};

}  // namespace audiolm
