#include "audiolm/shard.hpp"

#include <fstream>
#include <limits>

#include "audiolm/errors.hpp"

namespace audiolm {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError(std::string("truncated shard while reading ") + what);
  }
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= std::uint64_t{bytes[i]} << (8 * i);
  return static_cast<T>(value);
}

std::string get_bytes(std::istream& in, std::size_t n, const char* what) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw FormatError(std::string("truncated shard while reading ") + what);
  }
  return s;
}

void put_sequence(std::ostream& out, const PackedSequence& seq) {
  std::string buf;
  buf.reserve(seq.ids.size() * 4);
  for (const auto id : seq.ids) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((id >> (8 * i)) & 0xFF));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  buf.clear();
  for (const auto r : seq.roles) buf.push_back(static_cast<char>(r));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(seq.spans.size()));
  for (const auto& span : seq.spans) {
    put_le<std::uint32_t>(out, span.start);
    put_le<std::uint32_t>(out, span.end);
    put_le<std::uint64_t>(out, span.doc_offset);
    put_le<std::uint64_t>(out, span.doc_length);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(span.format));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(span.doc_id.size()));
    out.write(span.doc_id.data(), static_cast<std::streamsize>(span.doc_id.size()));
  }
}

}  // namespace

ShardWriter::ShardWriter(std::ostream& out, const VocabLayout& layout, std::uint32_t seq_len)
    : out_(out), layout_(layout), seq_len_(seq_len) {
  out_.write(kShardMagic.data(), kShardMagic.size());
  put_le<std::uint32_t>(out_, kShardVersion);
  put_le<std::uint32_t>(out_, seq_len_);
  count_pos_ = out_.tellp();
  put_le<std::uint32_t>(out_, 0);
  const auto block = layout_.to_kv();
  put_le<std::uint32_t>(out_, static_cast<std::uint32_t>(block.size()));
  out_.write(block.data(), static_cast<std::streamsize>(block.size()));
  if (!out_) throw Error("failed to write shard header");
}

ShardWriter::~ShardWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void ShardWriter::write(const PackedSequence& seq) {
  if (finished_) throw Error("ShardWriter::write after finish");
  validate_sequence(seq, seq_len_, layout_);
  if (count_ == std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("shard sequence count overflows u32");
  }
  put_sequence(out_, seq);
  ++count_;
  if (!out_) throw Error("failed to write shard sequence");
}

void ShardWriter::finish() {
  if (finished_) return;
  finished_ = true;
  const auto end = out_.tellp();
  out_.seekp(count_pos_);
  put_le<std::uint32_t>(out_, count_);
  out_.seekp(end);
  out_.flush();
  if (!out_) throw Error("failed to finalize shard (is the stream seekable?)");
}

void write_shard(std::ostream& out, const VocabLayout& layout, std::uint32_t seq_len,
                 std::span<const PackedSequence> sequences) {
  ShardWriter writer(out, layout, seq_len);
  for (const auto& s : sequences) writer.write(s);
  writer.finish();
}

Shard read_shard(std::istream& in) {
  const auto magic = get_bytes(in, kShardMagic.size(), "magic");
  if (magic != std::string(kShardMagic.begin(), kShardMagic.end())) {
    throw FormatError("bad shard magic");
  }
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kShardVersion) {
    throw FormatError("unsupported shard version " + std::to_string(version));
  }
  const auto seq_len = get_le<std::uint32_t>(in, "seq_len");
  const auto count = get_le<std::uint32_t>(in, "count");
  const auto layout_len = get_le<std::uint32_t>(in, "layout length");
  Shard shard{VocabLayout::from_kv(get_bytes(in, layout_len, "layout")), seq_len, {}};
  if (seq_len < 2) throw FormatError("shard seq_len below 2");

  shard.sequences.reserve(count);
  std::vector<unsigned char> raw;
  for (std::uint32_t s = 0; s < count; ++s) {
    PackedSequence seq;
    raw.resize(std::size_t{seq_len} * 4);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
      throw FormatError("truncated shard in sequence " + std::to_string(s));
    }
    seq.ids.resize(seq_len);
    for (std::size_t i = 0; i < seq_len; ++i) {
      seq.ids[i] = TokenId{raw[4 * i]} | (TokenId{raw[4 * i + 1]} << 8) |
                   (TokenId{raw[4 * i + 2]} << 16) | (TokenId{raw[4 * i + 3]} << 24);
    }
    raw.resize(seq_len);
    in.read(reinterpret_cast<char*>(raw.data()), seq_len);
    if (in.gcount() != static_cast<std::streamsize>(seq_len)) {
      throw FormatError("truncated roles in sequence " + std::to_string(s));
    }
    seq.roles.resize(seq_len);
    for (std::size_t i = 0; i < seq_len; ++i) {
      if (raw[i] > 3) throw FormatError("invalid role byte in sequence " + std::to_string(s));
      seq.roles[i] = static_cast<TokenRole>(raw[i]);
    }
    const auto spans = get_le<std::uint32_t>(in, "span count");
    if (spans > seq_len) throw FormatError("span count exceeds seq_len");
    seq.spans.reserve(spans);
    for (std::uint32_t k = 0; k < spans; ++k) {
      DocSpan span;
      span.start = get_le<std::uint32_t>(in, "span start");
      span.end = get_le<std::uint32_t>(in, "span end");
      span.doc_offset = get_le<std::uint64_t>(in, "span offset");
      span.doc_length = get_le<std::uint64_t>(in, "span length");
      const auto fmt = get_le<std::uint8_t>(in, "span format");
      if (fmt > 1) throw FormatError("invalid span format byte");
      span.format = static_cast<RenderFormat>(fmt);
      const auto id_len = get_le<std::uint32_t>(in, "doc id length");
      span.doc_id = get_bytes(in, id_len, "doc id");
      seq.spans.push_back(std::move(span));
    }
    validate_sequence(seq, seq_len, shard.layout);
    shard.sequences.push_back(std::move(seq));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after shard");
  return shard;
}

Shard read_shard_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open shard '" + path + "'");
  return read_shard(in);
}

}  // namespace audiolm
