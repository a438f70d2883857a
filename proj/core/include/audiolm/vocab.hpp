#pragma once

// Token id space for interleaved text/audio pretraining.
//
// Ids are laid out as three contiguous regions:
//
//   [0, text_size)                      base text vocabulary
//   [audio_base, special_base)          codebook-major audio ids
//   [special_base, total)               text_start, text_end, audio_start, audio_end
//
// Audio id = audio_base + codebook * codebook_size + code. Codebook 0 is the
// semantic stream of the RVQ codec; codebooks 1.. carry acoustic detail.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace audiolm {

using TokenId = std::uint32_t;

enum class TokenRole : std::uint8_t {
  kText = 0,
  kSemantic = 1,
  kAcoustic = 2,
  kSpecial = 3,
};

std::string_view to_string(TokenRole role);
TokenRole parse_token_role(std::string_view text);  // throws ParseError

enum class SpecialToken : std::uint8_t {
  kTextStart = 0,
  kTextEnd = 1,
  kAudioStart = 2,
  kAudioEnd = 3,
};

struct AudioCode {
  std::uint32_t codebook = 0;
  std::uint32_t code = 0;
  friend bool operator==(const AudioCode&, const AudioCode&) = default;
};

// frames x codebooks matrix of codec indices, stored row-major (one row per
// 80 ms frame at 12.5 Hz).
class CodeMatrix {
 public:
  CodeMatrix() = default;
  CodeMatrix(std::size_t frames, std::size_t codebooks);
  CodeMatrix(std::size_t frames, std::size_t codebooks, std::vector<std::uint32_t> data);

  std::size_t frames() const { return frames_; }
  std::size_t codebooks() const { return codebooks_; }
  bool empty() const { return frames_ == 0; }

  std::uint32_t operator()(std::size_t frame, std::size_t codebook) const {
    return data_[frame * codebooks_ + codebook];
  }
  std::uint32_t& operator()(std::size_t frame, std::size_t codebook) {
    return data_[frame * codebooks_ + codebook];
  }
  std::span<const std::uint32_t> row(std::size_t frame) const {
    return {data_.data() + frame * codebooks_, codebooks_};
  }
  std::span<const std::uint32_t> data() const { return data_; }

  friend bool operator==(const CodeMatrix&, const CodeMatrix&) = default;

 private:
  std::size_t frames_ = 0;
  std::size_t codebooks_ = 0;
  std::vector<std::uint32_t> data_;
};

inline constexpr double kCodecFrameRateHz = 12.5;

class VocabLayout {
 public:
  static constexpr std::uint32_t kDefaultTextSize = 128'256;
  static constexpr std::uint32_t kDefaultNumCodebooks = 8;
  static constexpr std::uint32_t kDefaultCodebookSize = 2'048;
  // Llama 3 ids for <|begin_of_text|> / <|end_of_text|>; both live in the
  // base text vocabulary.
  static constexpr TokenId kDefaultBeginOfText = 128'000;
  static constexpr TokenId kDefaultEndOfText = 128'001;
  static constexpr std::size_t kNumSpecial = 4;

  // Default layout: 128,256 text + 8 x 2,048 audio + 4 special = 144,644.
  VocabLayout();
  VocabLayout(std::uint32_t text_size, std::uint32_t num_codebooks,
              std::uint32_t codebook_size, TokenId begin_of_text, TokenId end_of_text,
              std::array<std::string, kNumSpecial> special_names = default_special_names());

  static std::array<std::string, kNumSpecial> default_special_names();

  std::uint32_t text_size() const { return text_size_; }
  std::uint32_t num_codebooks() const { return num_codebooks_; }
  std::uint32_t codebook_size() const { return codebook_size_; }
  TokenId audio_base() const { return text_size_; }
  TokenId special_base() const { return text_size_ + num_codebooks_ * codebook_size_; }
  std::uint32_t total() const { return special_base() + kNumSpecial; }
  std::uint32_t audio_size() const { return num_codebooks_ * codebook_size_; }
  TokenId begin_of_text() const { return begin_of_text_; }
  TokenId end_of_text() const { return end_of_text_; }
  const std::array<std::string, kNumSpecial>& special_names() const { return special_names_; }

  TokenId special(SpecialToken which) const {
    return special_base() + static_cast<std::uint32_t>(which);
  }

  // Throws RangeError naming "codebook" or "code".
  TokenId audio_token_id(std::uint32_t codebook, std::uint32_t code) const;
  // Throws DomainError for ids outside the audio region.
  AudioCode decode_audio_token(TokenId id) const;
  // Throws RangeError for id >= total().
  TokenRole classify(TokenId id) const;

  bool is_text(TokenId id) const { return id < text_size_; }
  bool is_audio(TokenId id) const { return id >= audio_base() && id < special_base(); }

  // Key-value serialization (field names as in the accessors above).
  std::string to_kv() const;
  static VocabLayout from_kv(std::string_view text);
  static VocabLayout load(const std::string& path);

  friend bool operator==(const VocabLayout&, const VocabLayout&) = default;

 private:
  std::uint32_t text_size_;
  std::uint32_t num_codebooks_;
  std::uint32_t codebook_size_;
  TokenId begin_of_text_;
  TokenId end_of_text_;
  std::array<std::string, kNumSpecial> special_names_;
};

// Frame-major flattening: for each frame, codebooks 0..K-1 in ascending
// order. A 12.5 Hz, 8-codebook stream yields 100 ids per second of audio.
// Throws ValidationError with (frame, codebook) coordinates on bad input.
std::vector<TokenId> flatten_codes(const CodeMatrix& codes, const VocabLayout& layout);
void flatten_codes_into(const CodeMatrix& codes, const VocabLayout& layout,
                        std::vector<TokenId>& out);

// Checks shape and code ranges without emitting ids.
void validate_codes(const CodeMatrix& codes, const VocabLayout& layout);

}  // namespace audiolm
