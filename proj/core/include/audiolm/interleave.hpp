#pragma once

// Utterance-level interleaving and fixed-length packing.
//
// Text-first rendering of a document with utterances 1..N:
//
//   <bos> [<ts> text_1 <te> <as> audio_1 <ae>] ... [<ts> text_N <te> <as> audio_N <ae>] <eos>
//
// Audio-first swaps the two bracketed groups inside every utterance. Rendered
// documents are concatenated into one stream and cut into windows of exactly
// seq_len ids; a document may straddle windows and the trailing partial
// window is withheld, never padded.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "audiolm/corpus.hpp"
#include "audiolm/vocab.hpp"

namespace audiolm {

enum class RenderFormat : std::uint8_t {
  kTextFirst = 0,
  kAudioFirst = 1,
};

std::string_view to_string(RenderFormat fmt);
RenderFormat parse_render_format(std::string_view text);  // throws ParseError

inline constexpr std::uint32_t kDefaultSeqLen = 4'096;

std::vector<TokenId> render(const Document& doc, RenderFormat fmt, const VocabLayout& layout);
void render_into(const Document& doc, RenderFormat fmt, const VocabLayout& layout,
                 std::vector<TokenId>& out);

// Closed form: 2 + sum_i (4 + |text_i| + num_codebooks * frames_i). Equal for
// both formats.
std::uint64_t rendered_length(const Document& doc, const VocabLayout& layout);

// The part of one rendered document that falls inside a packed sequence.
// [start, end) indexes the sequence; doc_offset is where the piece begins
// inside the rendered document of doc_length ids.
struct DocSpan {
  std::uint32_t start = 0;
  std::uint32_t end = 0;
  std::uint64_t doc_offset = 0;
  std::uint64_t doc_length = 0;
  std::string doc_id;
  RenderFormat format = RenderFormat::kTextFirst;

  std::uint32_t size() const { return end - start; }
  bool continues() const { return doc_offset > 0; }
  bool completes() const { return doc_offset + size() == doc_length; }
  friend bool operator==(const DocSpan&, const DocSpan&) = default;
};

struct PackedSequence {
  std::vector<TokenId> ids;
  std::vector<TokenRole> roles;
  std::vector<DocSpan> spans;

  friend bool operator==(const PackedSequence&, const PackedSequence&) = default;
};

// Checks |ids| == |roles| == seq_len, roles agree with the layout, and spans
// tile [0, seq_len) contiguously. Throws ValidationError.
void validate_sequence(const PackedSequence& seq, std::uint32_t seq_len,
                       const VocabLayout& layout);

struct PackSummary {
  std::uint64_t documents = 0;
  std::uint64_t sequences = 0;
  std::uint64_t stream_tokens = 0;   // everything rendered
  std::uint64_t emitted_tokens = 0;  // sequences * seq_len
  std::vector<TokenId> remainder;    // withheld tail, < seq_len ids
  std::vector<DocSpan> remainder_spans;
};

// Single-pass packer. Sequences are handed to the sink as soon as they fill;
// the call order of add() is the sampling order.
class Packer {
 public:
  using Sink = std::function<void(PackedSequence&&)>;

  // Throws ConfigError for seq_len < 2.
  Packer(const VocabLayout& layout, std::uint32_t seq_len, Sink sink);

  void add(const Document& doc, RenderFormat fmt);
  // Adds an already rendered document (used by tests and benchmarks).
  void add_rendered(std::span<const TokenId> ids, std::string_view doc_id, RenderFormat fmt);

  // Ends the stream; the partial window is returned in the summary.
  PackSummary finish();

  std::uint32_t seq_len() const { return seq_len_; }

 private:
  void emit();

  const VocabLayout& layout_;
  std::uint32_t seq_len_;
  Sink sink_;
  PackedSequence current_;
  PackSummary summary_;
  std::vector<TokenId> scratch_;
  bool finished_ = false;
};

struct RenderItem {
  const Document* doc = nullptr;
  RenderFormat format = RenderFormat::kTextFirst;
};

struct PackResult {
  std::vector<PackedSequence> sequences;
  PackSummary summary;
};

PackResult pack(std::span<const RenderItem> items, std::uint32_t seq_len,
                const VocabLayout& layout);

// Concatenates sequence ids after checking that consecutive spans continue
// each other (a split document resumes at the offset where it stopped, and a
// new document only starts once the previous one completed). Throws
// ValidationError on an out-of-order or foreign sequence.
std::vector<TokenId> unpack(std::span<const PackedSequence> sequences);

}  // namespace audiolm
