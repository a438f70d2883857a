#pragma once

// Binary shard of packed sequences. All integers little-endian.
//
//   magic         4 bytes  "SODA"
//   version       u32      kShardVersion
//   seq_len       u32
//   count         u32      number of sequences
//   layout_len    u32      byte length of the layout block
//   layout        bytes    VocabLayout::to_kv() text
//   count x {
//     ids         seq_len x u32
//     roles       seq_len x u8   (0 text, 1 semantic, 2 acoustic, 3 special)
//     span_count  u32
//     span_count x {
//       start u32, end u32, doc_offset u64, doc_length u64, format u8,
//       id_len u32, id bytes
//     }
//   }

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "audiolm/interleave.hpp"
#include "audiolm/vocab.hpp"

namespace audiolm {

inline constexpr std::array<char, 4> kShardMagic = {'S', 'O', 'D', 'A'};
inline constexpr std::uint32_t kShardVersion = 1;

struct Shard {
  VocabLayout layout;
  std::uint32_t seq_len = 0;
  std::vector<PackedSequence> sequences;
};

// Streams sequences to a seekable output; the header count is patched in
// finish(). Sequences are validated against the layout before writing.
class ShardWriter {
 public:
  ShardWriter(std::ostream& out, const VocabLayout& layout, std::uint32_t seq_len);
  ~ShardWriter();
  ShardWriter(const ShardWriter&) = delete;
  ShardWriter& operator=(const ShardWriter&) = delete;

  void write(const PackedSequence& seq);
  void finish();
  std::uint32_t count() const { return count_; }

 private:
  std::ostream& out_;
  const VocabLayout& layout_;
  std::uint32_t seq_len_;
  std::uint32_t count_ = 0;
  std::streampos count_pos_;
  bool finished_ = false;
};

void write_shard(std::ostream& out, const VocabLayout& layout, std::uint32_t seq_len,
                 std::span<const PackedSequence> sequences);

// Throws FormatError on bad magic/version/truncation and ValidationError when
// a decoded sequence breaks its invariants.
Shard read_shard(std::istream& in);
Shard read_shard_file(const std::string& path);

}  // namespace audiolm
