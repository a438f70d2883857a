#include "audiolm/corpus.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "audiolm/errors.hpp"

namespace audiolm {

namespace {

using json = nlohmann::json;

std::string with_line(std::size_t line_no, const std::string& what) {
  return line_no > 0 ? "line " + std::to_string(line_no) + ": " + what : what;
}

const json& require(const json& obj, const char* field, std::size_t line_no) {
  const auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(line_no, field, "missing");
  return *it;
}

// Integer value that may be out of range for the layout; range checks happen
// in validate_document so the error names the violated bound.
std::int64_t as_integer(const json& v, std::size_t line_no, const char* field) {
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    return u > static_cast<std::uint64_t>(INT64_MAX) ? INT64_MAX
                                                     : static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  throw ParseError(line_no, field, "expected an integer, got " + std::string(v.type_name()));
}

std::uint32_t checked_code(std::int64_t v, std::size_t line_no, std::size_t frame,
                           std::size_t codebook, const VocabLayout& layout) {
  if (v < 0 || v >= static_cast<std::int64_t>(layout.codebook_size())) {
    throw ValidationError(with_line(
        line_no, "code " + std::to_string(v) + " at frame " + std::to_string(frame) +
                     ", codebook " + std::to_string(codebook) +
                     " is not below codebook_size " + std::to_string(layout.codebook_size())));
  }
  return static_cast<std::uint32_t>(v);
}

Utterance parse_utterance(const json& u, const VocabLayout& layout, std::size_t line_no) {
  if (!u.is_object()) throw ParseError(line_no, "utterances", "entries must be objects");
  Utterance out;

  const auto& text = require(u, "text_ids", line_no);
  if (!text.is_array()) throw ParseError(line_no, "text_ids", "expected an array");
  out.text_ids.reserve(text.size());
  for (const auto& t : text) {
    const auto id = as_integer(t, line_no, "text_ids");
    if (id < 0 || id >= static_cast<std::int64_t>(layout.text_size())) {
      throw ValidationError(with_line(line_no, "text id " + std::to_string(id) +
                                                   " is not below text_size " +
                                                   std::to_string(layout.text_size())));
    }
    out.text_ids.push_back(static_cast<TokenId>(id));
  }

  const auto& codes = require(u, "codes", line_no);
  if (!codes.is_array()) throw ParseError(line_no, "codes", "expected an array of frames");
  const auto frames = codes.size();
  const auto width = layout.num_codebooks();
  std::vector<std::uint32_t> data;
  data.reserve(frames * width);
  for (std::size_t f = 0; f < frames; ++f) {
    const auto& row = codes[f];
    if (!row.is_array()) throw ParseError(line_no, "codes", "frames must be arrays");
    if (row.size() != width) {
      throw ValidationError(with_line(
          line_no, "frame " + std::to_string(f) + " has " + std::to_string(row.size()) +
                       " codes, expected num_codebooks = " + std::to_string(width)));
    }
    for (std::size_t c = 0; c < width; ++c) {
      data.push_back(checked_code(as_integer(row[c], line_no, "codes"), line_no, f, c, layout));
    }
  }
  out.codes = CodeMatrix(frames, width, std::move(data));

  if (const auto it = u.find("duration_s"); it != u.end() && !it->is_null()) {
    if (!it->is_number()) throw ParseError(line_no, "duration_s", "expected a number");
    out.duration_s = it->get<double>();
  }
  return out;
}

}  // namespace

void validate_document(const Document& doc, const VocabLayout& layout) {
  if (doc.utterances.empty()) {
    throw ValidationError("document '" + doc.doc_id + "' has no utterances");
  }
  for (std::size_t i = 0; i < doc.utterances.size(); ++i) {
    const auto& u = doc.utterances[i];
    for (const auto id : u.text_ids) {
      if (id >= layout.text_size()) {
        throw ValidationError("document '" + doc.doc_id + "', utterance " +
                              std::to_string(i) + ": text id " + std::to_string(id) +
                              " is not below text_size " + std::to_string(layout.text_size()));
      }
    }
    validate_codes(u.codes, layout);
    if (u.duration_s) {
      const double implied_frames = *u.duration_s * kCodecFrameRateHz;
      if (!std::isfinite(implied_frames) ||
          std::fabs(implied_frames - static_cast<double>(u.codes.frames())) > 1.0) {
        throw ValidationError("document '" + doc.doc_id + "', utterance " +
                              std::to_string(i) + ": duration_s " +
                              std::to_string(*u.duration_s) + " disagrees with " +
                              std::to_string(u.codes.frames()) + " frames");
      }
    }
  }
}

Document parse_manifest_line(std::string_view line, const VocabLayout& layout,
                             std::size_t line_no) {
  json record;
  try {
    record = json::parse(line.begin(), line.end());
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, "", std::string("invalid JSON: ") + e.what());
  }
  if (!record.is_object()) throw ParseError(line_no, "", "record must be a JSON object");

  Document doc;
  const auto& id = require(record, "doc_id", line_no);
  if (!id.is_string()) throw ParseError(line_no, "doc_id", "expected a string");
  doc.doc_id = id.get<std::string>();
  const auto& source = require(record, "source", line_no);
  if (!source.is_string()) throw ParseError(line_no, "source", "expected a string");
  doc.source = source.get<std::string>();

  const auto& utts = require(record, "utterances", line_no);
  if (!utts.is_array()) throw ParseError(line_no, "utterances", "expected an array");
  doc.utterances.reserve(utts.size());
  for (const auto& u : utts) doc.utterances.push_back(parse_utterance(u, layout, line_no));

  try {
    validate_document(doc, layout);
  } catch (const ValidationError& e) {
    throw ValidationError(with_line(line_no, e.what()));
  }
  return doc;
}

ManifestReader::ManifestReader(std::istream& in, const VocabLayout& layout)
    : in_(in), layout_(layout) {}

std::optional<Document> ManifestReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return parse_manifest_line(line, layout_, line_);
  }
  return std::nullopt;
}

std::vector<Document> read_manifest(std::istream& in, const VocabLayout& layout) {
  std::vector<Document> docs;
  ManifestReader reader(in, layout);
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

std::vector<Document> read_manifest_file(const std::string& path, const VocabLayout& layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open manifest '" + path + "'");
  return read_manifest(in, layout);
}

std::string manifest_line(const Document& doc) {
  json utts = json::array();
  for (const auto& u : doc.utterances) {
    json rows = json::array();
    for (std::size_t f = 0; f < u.codes.frames(); ++f) {
      const auto row = u.codes.row(f);
      rows.push_back(json(std::vector<std::uint32_t>(row.begin(), row.end())));
    }
    json item = {{"text_ids", u.text_ids}, {"codes", std::move(rows)}};
    if (u.duration_s) item["duration_s"] = *u.duration_s;
    utts.push_back(std::move(item));
  }
  json record = {{"doc_id", doc.doc_id}, {"source", doc.source}, {"utterances", std::move(utts)}};
  return record.dump();
}

SourceStats& SourceStats::operator+=(const SourceStats& other) {
  documents += other.documents;
  audio_tokens += other.audio_tokens;
  text_tokens += other.text_tokens;
  interleaved_tokens += other.interleaved_tokens;
  return *this;
}

std::uint64_t framing_tokens(const Document& doc) { return 4 * doc.utterances.size() + 2; }

SourceStats count_tokens(const Document& doc, const VocabLayout& layout) {
  SourceStats stats;
  stats.source = doc.source;
  stats.documents = 1;
  for (const auto& u : doc.utterances) {
    stats.audio_tokens += u.codes.frames() * layout.num_codebooks();
    stats.text_tokens += u.text_ids.size();
  }
  stats.interleaved_tokens = 2 * (stats.audio_tokens + stats.text_tokens + framing_tokens(doc));
  return stats;
}

void TokenAccounting::add(const Document& doc, const VocabLayout& layout) {
  auto& slot = stats_[doc.source];
  slot.source = doc.source;
  slot += count_tokens(doc, layout);
}

void TokenAccounting::merge(const TokenAccounting& other) {
  for (const auto& [name, s] : other.stats_) {
    auto& slot = stats_[name];
    slot.source = name;
    slot += s;
  }
}

SourceStats TokenAccounting::total() const {
  SourceStats out;
  out.source = "total";
  for (const auto& [_, s] : stats_) out += s;
  return out;
}

}  // namespace audiolm
