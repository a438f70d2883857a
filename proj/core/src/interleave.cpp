#include "audiolm/interleave.hpp"

#include <algorithm>

#include "audiolm/errors.hpp"
#include "audiolm/kv.hpp"

namespace audiolm {

std::string_view to_string(RenderFormat fmt) {
  return fmt == RenderFormat::kTextFirst ? "text_first" : "audio_first";
}

RenderFormat parse_render_format(std::string_view text) {
  text = kv::trim(text);
  if (text == "text_first" || text == "text-first") return RenderFormat::kTextFirst;
  if (text == "audio_first" || text == "audio-first") return RenderFormat::kAudioFirst;
  throw ParseError(0, "format", "unknown render format '" + std::string(text) + "'");
}

void render_into(const Document& doc, RenderFormat fmt, const VocabLayout& layout,
                 std::vector<TokenId>& out) {
  const auto text_start = layout.special(SpecialToken::kTextStart);
  const auto text_end = layout.special(SpecialToken::kTextEnd);
  const auto audio_start = layout.special(SpecialToken::kAudioStart);
  const auto audio_end = layout.special(SpecialToken::kAudioEnd);

  out.reserve(out.size() + rendered_length(doc, layout));
  out.push_back(layout.begin_of_text());
  for (const auto& u : doc.utterances) {
    const auto emit_text = [&] {
      out.push_back(text_start);
      out.insert(out.end(), u.text_ids.begin(), u.text_ids.end());
      out.push_back(text_end);
    };
    const auto emit_audio = [&] {
      out.push_back(audio_start);
      flatten_codes_into(u.codes, layout, out);
      out.push_back(audio_end);
    };
    if (fmt == RenderFormat::kTextFirst) {
      emit_text();
      emit_audio();
    } else {
      emit_audio();
      emit_text();
    }
  }
  out.push_back(layout.end_of_text());
}

std::vector<TokenId> render(const Document& doc, RenderFormat fmt, const VocabLayout& layout) {
  std::vector<TokenId> out;
  render_into(doc, fmt, layout, out);
  return out;
}

std::uint64_t rendered_length(const Document& doc, const VocabLayout& layout) {
  std::uint64_t n = 2;
  for (const auto& u : doc.utterances) {
    n += 4 + u.text_ids.size() + std::uint64_t{layout.num_codebooks()} * u.codes.frames();
  }
  return n;
}

void validate_sequence(const PackedSequence& seq, std::uint32_t seq_len,
                       const VocabLayout& layout) {
  if (seq.ids.size() != seq_len || seq.roles.size() != seq_len) {
    throw ValidationError("packed sequence has " + std::to_string(seq.ids.size()) + " ids and " +
                          std::to_string(seq.roles.size()) + " roles, expected " +
                          std::to_string(seq_len));
  }
  for (std::size_t i = 0; i < seq_len; ++i) {
    if (layout.classify(seq.ids[i]) != seq.roles[i]) {
      throw ValidationError("role mismatch at position " + std::to_string(i));
    }
  }
  std::uint32_t cursor = 0;
  for (const auto& span : seq.spans) {
    if (span.start != cursor || span.end <= span.start) {
      throw ValidationError("spans do not tile the sequence at position " +
                            std::to_string(cursor));
    }
    if (span.doc_offset + span.size() > span.doc_length) {
      throw ValidationError("span for '" + span.doc_id + "' overruns its document");
    }
    cursor = span.end;
  }
  if (cursor != seq_len) throw ValidationError("spans do not cover the whole sequence");
}

Packer::Packer(const VocabLayout& layout, std::uint32_t seq_len, Sink sink)
    : layout_(layout), seq_len_(seq_len), sink_(std::move(sink)) {
  if (seq_len_ < 2) throw ConfigError("seq_len must be at least 2");
  current_.ids.reserve(seq_len_);
  current_.roles.reserve(seq_len_);
}

void Packer::add(const Document& doc, RenderFormat fmt) {
  scratch_.clear();
  render_into(doc, fmt, layout_, scratch_);
  add_rendered(scratch_, doc.doc_id, fmt);
}

void Packer::add_rendered(std::span<const TokenId> ids, std::string_view doc_id,
                          RenderFormat fmt) {
  if (finished_) throw Error("Packer::add after finish");
  ++summary_.documents;
  summary_.stream_tokens += ids.size();
  std::uint64_t offset = 0;
  while (offset < ids.size()) {
    const auto room = seq_len_ - static_cast<std::uint32_t>(current_.ids.size());
    const auto take = static_cast<std::uint32_t>(
        std::min<std::uint64_t>(room, ids.size() - offset));
    const auto start = static_cast<std::uint32_t>(current_.ids.size());
    for (std::uint32_t i = 0; i < take; ++i) {
      const auto id = ids[offset + i];
      current_.ids.push_back(id);
      current_.roles.push_back(layout_.classify(id));
    }
    current_.spans.push_back(
        {start, start + take, offset, ids.size(), std::string(doc_id), fmt});
    offset += take;
    if (current_.ids.size() == seq_len_) emit();
  }
}

void Packer::emit() {
  ++summary_.sequences;
  summary_.emitted_tokens += seq_len_;
  PackedSequence full;
  full.ids.reserve(seq_len_);
  full.roles.reserve(seq_len_);
  std::swap(full, current_);
  sink_(std::move(full));
}

PackSummary Packer::finish() {
  finished_ = true;
  summary_.remainder = std::move(current_.ids);
  summary_.remainder_spans = std::move(current_.spans);
  current_ = {};
  return std::move(summary_);
}

PackResult pack(std::span<const RenderItem> items, std::uint32_t seq_len,
                const VocabLayout& layout) {
  PackResult result;
  Packer packer(layout, seq_len,
                [&result](PackedSequence&& s) { result.sequences.push_back(std::move(s)); });
  for (const auto& item : items) packer.add(*item.doc, item.format);
  result.summary = packer.finish();
  return result;
}

std::vector<TokenId> unpack(std::span<const PackedSequence> sequences) {
  std::vector<TokenId> out;
  const DocSpan* prev = nullptr;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const auto& seq = sequences[s];
    if (seq.spans.empty() && !seq.ids.empty()) {
      throw ValidationError("sequence " + std::to_string(s) + " has no span table");
    }
    for (const auto& span : seq.spans) {
      const bool resumes_prev = prev != nullptr && !prev->completes();
      if (resumes_prev) {
        if (span.doc_id != prev->doc_id || span.format != prev->format ||
            span.doc_offset != prev->doc_offset + prev->size() ||
            span.doc_length != prev->doc_length) {
          throw ValidationError("sequence " + std::to_string(s) + " does not continue '" +
                                prev->doc_id + "' at offset " +
                                std::to_string(prev->doc_offset + prev->size()));
        }
      } else if (span.continues()) {
        throw ValidationError("sequence " + std::to_string(s) + " resumes '" + span.doc_id +
                              "' mid-document without its preceding part");
      }
      prev = &span;
    }
    out.insert(out.end(), seq.ids.begin(), seq.ids.end());
  }
  return out;
}

}  // namespace audiolm
