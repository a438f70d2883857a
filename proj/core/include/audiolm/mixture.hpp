#pragma once

// Data-mixture planning and deterministic document sampling.
//
// Generator: SplitMix64.
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
// Uniform doubles take the top 53 bits. Source draws use one generator seeded
// with spec.seed; each (source, epoch) permutation uses its own generator
// seeded with mix(seed, source index, epoch) so reshuffles never perturb the
// source-draw sequence.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "audiolm/errors.hpp"
#include "audiolm/interleave.hpp"

namespace audiolm {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // Unbiased integer in [0, bound); bound > 0.
  std::uint64_t below(std::uint64_t bound);

  static std::uint64_t mix(std::uint64_t x);

 private:
  std::uint64_t state_;
};

struct MixtureEntry {
  std::string source;
  double weight = 0.0;
};

struct MixtureSpec {
  static constexpr std::uint32_t kDefaultMaxEpochs = 4;

  std::vector<MixtureEntry> entries;
  std::uint64_t seed = 0;
  std::uint32_t max_epochs = kDefaultMaxEpochs;

  // Weights in [0, 1] summing to 1 within 1e-9, unique nonempty names,
  // max_epochs >= 1. Throws ConfigError.
  void validate() const;

  std::optional<double> weight_of(const std::string& source) const;

  // Text form:
  //   seed = 42
  //   max_epochs = 4
  //   weight.<source> = 0.516      (one line per source, order preserved)
  std::string to_kv() const;
  static MixtureSpec from_kv(std::string_view text);
  static MixtureSpec load(const std::string& path);
};

// Text gets text_ratio; speech sources split the rest in proportion to
// size. The text entry is omitted when text_ratio is 0. Throws ConfigError
// for text_ratio outside [0, 1) or no positive speech size.
MixtureSpec plan_mixture(double text_ratio,
                         const std::vector<std::pair<std::string, double>>& speech_sizes,
                         const std::string& text_source = "text", std::uint64_t seed = 0,
                         std::uint32_t max_epochs = MixtureSpec::kDefaultMaxEpochs);

struct SampleEvent {
  std::string source;
  std::uint64_t doc_index = 0;
  std::uint32_t epoch = 1;  // 1-based
  RenderFormat format = RenderFormat::kTextFirst;

  friend bool operator==(const SampleEvent&, const SampleEvent&) = default;
};

// Raised when a source would need epoch max_epochs + 1.
class ExhaustionError : public Error {
 public:
  ExhaustionError(std::string source, std::uint64_t events_emitted, std::uint64_t documents,
                  std::uint32_t max_epochs);
  const std::string& source() const { return source_; }
  std::uint64_t events_emitted() const { return events_emitted_; }

 private:
  std::string source_;
  std::uint64_t events_emitted_;
};

// Format for a document visit. Parity of (doc_index + epoch - 1) alternates
// per epoch, so a document seen in two consecutive epochs gets both formats.
RenderFormat format_for(std::uint64_t doc_index, std::uint32_t epoch);

// Lazy schedule. Within a source, each epoch visits every document exactly
// once in a seed-derived permutation.
class Scheduler {
 public:
  // Throws ConfigError when the spec is invalid or a positive-weight source
  // has no entry (or zero documents) in doc_counts.
  Scheduler(MixtureSpec spec, const std::map<std::string, std::uint64_t>& doc_counts);

  // Throws ExhaustionError.
  SampleEvent next();
  std::uint64_t emitted() const { return emitted_; }

 private:
  struct SourceState {
    std::string name;
    double cumulative = 0.0;
    std::uint64_t documents = 0;
    std::uint32_t epoch = 0;
    std::uint64_t cursor = 0;
    std::vector<std::uint64_t> order;
  };
  std::size_t draw_source();
  void reshuffle(std::size_t index);

  MixtureSpec spec_;
  std::vector<SourceState> sources_;
  SplitMix64 rng_;
  std::uint64_t emitted_ = 0;
};

std::vector<SampleEvent> sample_schedule(const MixtureSpec& spec,
                                         const std::map<std::string, std::uint64_t>& doc_counts,
                                         std::uint64_t total_events);

// Audit CSV: header `event,source,doc_index,epoch,format`.
std::string schedule_csv(const std::vector<SampleEvent>& events);

struct RealizedShare {
  std::string source;
  std::uint64_t events = 0;
  std::uint64_t tokens = 0;
  double event_share = 0.0;
  double token_share = 0.0;
  double target = 0.0;
};

// token_lengths[source][doc_index] = rendered length of that document.
std::vector<RealizedShare> realized_shares(
    const MixtureSpec& spec, const std::vector<SampleEvent>& events,
    const std::map<std::string, std::vector<std::uint64_t>>& token_lengths);

}  // namespace audiolm
