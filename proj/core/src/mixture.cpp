#include "audiolm/mixture.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "audiolm/kv.hpp"

namespace audiolm {

std::uint64_t SplitMix64::below(std::uint64_t bound) {
  // Rejection on the low end of the range keeps every residue equally likely.
  const std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    const auto r = next();
    if (r >= threshold) return r % bound;
  }
}

std::uint64_t SplitMix64::mix(std::uint64_t x) {
  SplitMix64 g(x);
  return g.next();
}

void MixtureSpec::validate() const {
  if (entries.empty()) throw ConfigError("mixture has no sources");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  std::set<std::string> seen;
  double sum = 0.0;
  for (const auto& e : entries) {
    if (e.source.empty()) throw ConfigError("mixture source name is empty");
    if (!seen.insert(e.source).second) throw ConfigError("duplicate source '" + e.source + "'");
    if (!(e.weight >= 0.0 && e.weight <= 1.0)) {
      throw ConfigError("weight of '" + e.source + "' not in [0, 1]");
    }
    sum += e.weight;
  }
  if (std::fabs(sum - 1.0) > 1e-9) {
    throw ConfigError("mixture weights sum to " + kv::format_double(sum) + ", expected 1");
  }
}

std::optional<double> MixtureSpec::weight_of(const std::string& source) const {
  for (const auto& e : entries) {
    if (e.source == source) return e.weight;
  }
  return std::nullopt;
}

std::string MixtureSpec::to_kv() const {
  kv::Document doc;
  doc.set("seed", std::to_string(seed));
  doc.set_int("max_epochs", max_epochs);
  for (const auto& e : entries) doc.set("weight." + e.source, e.weight);
  return doc.str();
}

MixtureSpec MixtureSpec::from_kv(std::string_view text) {
  const auto doc = kv::Document::parse(text);
  MixtureSpec spec;
  for (const auto& e : doc.entries()) {
    if (e.key == "seed") {
      spec.seed = doc.get_uint("seed");
    } else if (e.key == "max_epochs") {
      const auto v = doc.get_int("max_epochs");
      if (v < 1 || v > std::numeric_limits<std::uint32_t>::max()) {
        throw ParseError(e.line, e.key, "must be a positive integer");
      }
      spec.max_epochs = static_cast<std::uint32_t>(v);
    } else if (e.key.rfind("weight.", 0) == 0) {
      spec.entries.push_back({e.key.substr(7), doc.get_double(e.key)});
    } else {
      throw ParseError(e.line, e.key, "unknown mixture key");
    }
  }
  return spec;
}

MixtureSpec MixtureSpec::load(const std::string& path) {
  return from_kv(kv::Document::load(path).str());
}

MixtureSpec plan_mixture(double text_ratio,
                         const std::vector<std::pair<std::string, double>>& speech_sizes,
                         const std::string& text_source, std::uint64_t seed,
                         std::uint32_t max_epochs) {
  if (!(text_ratio >= 0.0 && text_ratio < 1.0)) {
    throw ConfigError("text_ratio must be in [0, 1)");
  }
  double total = 0.0;
  for (const auto& [name, size] : speech_sizes) {
    if (!(size >= 0.0) || !std::isfinite(size)) {
      throw ConfigError("speech size of '" + name + "' must be finite and nonnegative");
    }
    total += size;
  }
  if (!(total > 0.0)) throw ConfigError("total speech size is zero");

  MixtureSpec spec;
  spec.seed = seed;
  spec.max_epochs = max_epochs;
  if (text_ratio > 0.0) spec.entries.push_back({text_source, text_ratio});
  for (const auto& [name, size] : speech_sizes) {
    spec.entries.push_back({name, (1.0 - text_ratio) * size / total});
  }
  return spec;
}

ExhaustionError::ExhaustionError(std::string source, std::uint64_t events_emitted,
                                 std::uint64_t documents, std::uint32_t max_epochs)
    : Error("source '" + source + "' exhausted after " + std::to_string(events_emitted) +
            " events: " + std::to_string(documents) + " documents x " +
            std::to_string(max_epochs) + " epochs"),
      source_(std::move(source)),
      events_emitted_(events_emitted) {}

RenderFormat format_for(std::uint64_t doc_index, std::uint32_t epoch) {
  return ((doc_index + epoch - 1) % 2 == 0) ? RenderFormat::kTextFirst
                                            : RenderFormat::kAudioFirst;
}

Scheduler::Scheduler(MixtureSpec spec, const std::map<std::string, std::uint64_t>& doc_counts)
    : spec_(std::move(spec)), rng_(spec_.seed) {
  spec_.validate();
  double cumulative = 0.0;
  for (const auto& e : spec_.entries) {
    cumulative += e.weight;
    SourceState state;
    state.name = e.source;
    state.cumulative = cumulative;
    if (e.weight > 0.0) {
      const auto it = doc_counts.find(e.source);
      if (it == doc_counts.end() || it->second == 0) {
        throw ConfigError("source '" + e.source + "' has positive weight but no documents");
      }
      state.documents = it->second;
    }
    sources_.push_back(std::move(state));
  }
}

std::size_t Scheduler::draw_source() {
  const double u = rng_.uniform() * sources_.back().cumulative;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (sources_[i].documents == 0) continue;
    last_positive = i;
    if (u < sources_[i].cumulative) return i;
  }
  return last_positive;
}

void Scheduler::reshuffle(std::size_t index) {
  auto& s = sources_[index];
  ++s.epoch;
  s.cursor = 0;
  s.order.resize(s.documents);
  for (std::uint64_t i = 0; i < s.documents; ++i) s.order[i] = i;
  SplitMix64 perm(SplitMix64::mix(spec_.seed ^ SplitMix64::mix(index + 1)) ^
                  SplitMix64::mix(0xE90C0000ULL + s.epoch));
  for (std::uint64_t i = s.documents; i > 1; --i) {
    const auto j = perm.below(i);
    std::swap(s.order[i - 1], s.order[j]);
  }
}

SampleEvent Scheduler::next() {
  const auto index = draw_source();
  auto& s = sources_[index];
  if (s.epoch == 0 || s.cursor == s.documents) {
    if (s.epoch == spec_.max_epochs) {
      throw ExhaustionError(s.name, emitted_, s.documents, spec_.max_epochs);
    }
    reshuffle(index);
  }
  const auto doc = s.order[s.cursor++];
  ++emitted_;
  return {s.name, doc, s.epoch, format_for(doc, s.epoch)};
}

std::vector<SampleEvent> sample_schedule(const MixtureSpec& spec,
                                         const std::map<std::string, std::uint64_t>& doc_counts,
                                         std::uint64_t total_events) {
  if (total_events < 1) throw ConfigError("total_events must be at least 1");
  Scheduler scheduler(spec, doc_counts);
  std::vector<SampleEvent> events;
  events.reserve(total_events);
  for (std::uint64_t i = 0; i < total_events; ++i) events.push_back(scheduler.next());
  return events;
}

std::string schedule_csv(const std::vector<SampleEvent>& events) {
  std::string out = "event,source,doc_index,epoch,format\n";
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    out += std::to_string(i);
    out += ',';
    out += e.source;
    out += ',';
    out += std::to_string(e.doc_index);
    out += ',';
    out += std::to_string(e.epoch);
    out += ',';
    out += to_string(e.format);
    out += '\n';
  }
  return out;
}

std::vector<RealizedShare> realized_shares(
    const MixtureSpec& spec, const std::vector<SampleEvent>& events,
    const std::map<std::string, std::vector<std::uint64_t>>& token_lengths) {
  std::vector<RealizedShare> shares;
  std::map<std::string, std::size_t> slot;
  for (const auto& e : spec.entries) {
    slot[e.source] = shares.size();
    shares.push_back({e.source, 0, 0, 0.0, 0.0, e.weight});
  }
  std::uint64_t total_tokens = 0;
  for (const auto& ev : events) {
    const auto it = slot.find(ev.source);
    if (it == slot.end()) throw ConfigError("event for unknown source '" + ev.source + "'");
    auto& share = shares[it->second];
    ++share.events;
    const auto lens = token_lengths.find(ev.source);
    if (lens != token_lengths.end() && ev.doc_index < lens->second.size()) {
      share.tokens += lens->second[ev.doc_index];
      total_tokens += lens->second[ev.doc_index];
    }
  }
  for (auto& s : shares) {
    if (!events.empty()) s.event_share = static_cast<double>(s.events) / events.size();
    if (total_tokens > 0) s.token_share = static_cast<double>(s.tokens) / total_tokens;
  }
  return shares;
}

}  // namespace audiolm
