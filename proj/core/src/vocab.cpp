#include "audiolm/vocab.hpp"

#include <limits>

#include "audiolm/errors.hpp"
#include "audiolm/kv.hpp"

namespace audiolm {

std::string_view to_string(TokenRole role) {
  switch (role) {
    case TokenRole::kText:
      return "text";
    case TokenRole::kSemantic:
      return "semantic";
    case TokenRole::kAcoustic:
      return "acoustic";
    case TokenRole::kSpecial:
      return "special";
  }
  return "unknown";
}

TokenRole parse_token_role(std::string_view text) {
  text = kv::trim(text);
  if (text == "text") return TokenRole::kText;
  if (text == "semantic") return TokenRole::kSemantic;
  if (text == "acoustic") return TokenRole::kAcoustic;
  if (text == "special") return TokenRole::kSpecial;
  throw ParseError(0, "role", "unknown token role '" + std::string(text) + "'");
}

CodeMatrix::CodeMatrix(std::size_t frames, std::size_t codebooks)
    : frames_(frames), codebooks_(codebooks), data_(frames * codebooks, 0) {}

CodeMatrix::CodeMatrix(std::size_t frames, std::size_t codebooks,
                       std::vector<std::uint32_t> data)
    : frames_(frames), codebooks_(codebooks), data_(std::move(data)) {
  if (data_.size() != frames_ * codebooks_) {
    throw ValidationError("code matrix data has " + std::to_string(data_.size()) +
                          " entries, expected " + std::to_string(frames_ * codebooks_));
  }
}

std::array<std::string, VocabLayout::kNumSpecial> VocabLayout::default_special_names() {
  return {"<|text_start|>", "<|text_end|>", "<|audio_start|>", "<|audio_end|>"};
}

VocabLayout::VocabLayout()
    : VocabLayout(kDefaultTextSize, kDefaultNumCodebooks, kDefaultCodebookSize,
                  kDefaultBeginOfText, kDefaultEndOfText) {}

VocabLayout::VocabLayout(std::uint32_t text_size, std::uint32_t num_codebooks,
                         std::uint32_t codebook_size, TokenId begin_of_text,
                         TokenId end_of_text,
                         std::array<std::string, kNumSpecial> special_names)
    : text_size_(text_size),
      num_codebooks_(num_codebooks),
      codebook_size_(codebook_size),
      begin_of_text_(begin_of_text),
      end_of_text_(end_of_text),
      special_names_(std::move(special_names)) {
  if (text_size_ == 0) throw ValidationError("text_size must be positive");
  if (num_codebooks_ == 0) throw ValidationError("num_codebooks must be positive");
  if (codebook_size_ == 0) throw ValidationError("codebook_size must be positive");
  const std::uint64_t total = std::uint64_t{text_size_} +
                              std::uint64_t{num_codebooks_} * codebook_size_ + kNumSpecial;
  if (total > std::numeric_limits<TokenId>::max()) {
    throw ValidationError("vocabulary does not fit 32-bit token ids");
  }
  if (begin_of_text_ >= text_size_) {
    throw ValidationError("begin_of_text must be a text-region id");
  }
  if (end_of_text_ >= text_size_) {
    throw ValidationError("end_of_text must be a text-region id");
  }
  for (const auto& name : special_names_) {
    if (name.empty()) throw ValidationError("special token names must be nonempty");
  }
}

TokenId VocabLayout::audio_token_id(std::uint32_t codebook, std::uint32_t code) const {
  if (codebook >= num_codebooks_) {
    throw RangeError("codebook", std::to_string(codebook) + " not in [0, " +
                                     std::to_string(num_codebooks_) + ")");
  }
  if (code >= codebook_size_) {
    throw RangeError("code", std::to_string(code) + " not in [0, " +
                                 std::to_string(codebook_size_) + ")");
  }
  return audio_base() + codebook * codebook_size_ + code;
}

AudioCode VocabLayout::decode_audio_token(TokenId id) const {
  if (!is_audio(id)) {
    throw DomainError("token id " + std::to_string(id) + " is outside the audio region [" +
                      std::to_string(audio_base()) + ", " +
                      std::to_string(special_base()) + ")");
  }
  const auto offset = id - audio_base();
  return {offset / codebook_size_, offset % codebook_size_};
}

TokenRole VocabLayout::classify(TokenId id) const {
  if (id >= total()) {
    throw RangeError("token_id",
                     std::to_string(id) + " >= vocabulary size " + std::to_string(total()));
  }
  if (id < audio_base()) return TokenRole::kText;
  if (id >= special_base()) return TokenRole::kSpecial;
  return (id - audio_base()) < codebook_size_ ? TokenRole::kSemantic : TokenRole::kAcoustic;
}

std::string VocabLayout::to_kv() const {
  kv::Document doc;
  doc.set_int("text_size", text_size_);
  doc.set_int("num_codebooks", num_codebooks_);
  doc.set_int("codebook_size", codebook_size_);
  doc.set_int("audio_base", audio_base());
  doc.set_int("special_base", special_base());
  doc.set_int("total", total());
  doc.set_int("begin_of_text", begin_of_text_);
  doc.set_int("end_of_text", end_of_text_);
  std::string names;
  for (std::size_t i = 0; i < kNumSpecial; ++i) {
    if (i) names += ',';
    names += special_names_[i];
  }
  doc.set("special_names", names);
  return doc.str();
}

VocabLayout VocabLayout::from_kv(std::string_view text) {
  const auto doc = kv::Document::parse(text);
  const auto u32 = [&doc](std::string_view key) {
    const auto v = doc.get_uint(key);
    if (v > std::numeric_limits<std::uint32_t>::max()) {
      throw ParseError(doc.find(key)->line, std::string(key), "exceeds 32 bits");
    }
    return static_cast<std::uint32_t>(v);
  };
  std::array<std::string, kNumSpecial> names = default_special_names();
  if (doc.contains("special_names")) {
    const auto parts = kv::split(doc.get("special_names"), ',');
    if (parts.size() != kNumSpecial) {
      throw ParseError(doc.find("special_names")->line, "special_names",
                       "expected 4 comma-separated names");
    }
    for (std::size_t i = 0; i < kNumSpecial; ++i) names[i] = std::string(kv::trim(parts[i]));
  }
  VocabLayout layout(u32("text_size"), u32("num_codebooks"), u32("codebook_size"),
                     doc.contains("begin_of_text") ? u32("begin_of_text") : kDefaultBeginOfText,
                     doc.contains("end_of_text") ? u32("end_of_text") : kDefaultEndOfText,
                     std::move(names));
  // Derived fields are optional, but must agree when present.
  const auto check = [&](std::string_view key, std::uint32_t expected) {
    if (doc.contains(key) && u32(key) != expected) {
      throw ParseError(doc.find(key)->line, std::string(key),
                       "inconsistent with layout (expected " + std::to_string(expected) + ")");
    }
  };
  check("audio_base", layout.audio_base());
  check("special_base", layout.special_base());
  check("total", layout.total());
  return layout;
}

VocabLayout VocabLayout::load(const std::string& path) {
  return from_kv(kv::Document::load(path).str());
}

void validate_codes(const CodeMatrix& codes, const VocabLayout& layout) {
  if (codes.frames() > 0 && codes.codebooks() != layout.num_codebooks()) {
    throw ValidationError("code matrix has " + std::to_string(codes.codebooks()) +
                          " columns, expected num_codebooks = " +
                          std::to_string(layout.num_codebooks()));
  }
  for (std::size_t f = 0; f < codes.frames(); ++f) {
    const auto row = codes.row(f);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] >= layout.codebook_size()) {
        throw ValidationError("code " + std::to_string(row[c]) + " at frame " +
                              std::to_string(f) + ", codebook " + std::to_string(c) +
                              " is not below codebook_size " +
                              std::to_string(layout.codebook_size()));
      }
    }
  }
}

void flatten_codes_into(const CodeMatrix& codes, const VocabLayout& layout,
                        std::vector<TokenId>& out) {
  validate_codes(codes, layout);
  const auto base = layout.audio_base();
  const auto stride = layout.codebook_size();
  out.reserve(out.size() + codes.frames() * codes.codebooks());
  for (std::size_t f = 0; f < codes.frames(); ++f) {
    const auto row = codes.row(f);
    for (std::size_t c = 0; c < row.size(); ++c) {
      out.push_back(base + static_cast<TokenId>(c) * stride + row[c]);
    }
  }
}

std::vector<TokenId> flatten_codes(const CodeMatrix& codes, const VocabLayout& layout) {
  std::vector<TokenId> out;
  flatten_codes_into(codes, layout, out);
  return out;
}

}  // namespace audiolm
