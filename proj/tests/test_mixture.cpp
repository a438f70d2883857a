#include <gtest/gtest.h>

#include <map>
#include <set>

#include "audiolm/mixture.hpp"

namespace audiolm {
namespace {

// Reference generator written out from the documented constants.
std::uint64_t splitmix_step(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TEST(SplitMix, MatchesReferenceSequence) {
  std::uint64_t state = 1234567;
  SplitMix64 g(1234567);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(g.next(), splitmix_step(state));
  // Published first output for seed 0.
  EXPECT_EQ(SplitMix64(0).next(), 0xE220A8397B1DCDAFULL);
}

TEST(SplitMix, UniformAndBelowRanges) {
  SplitMix64 g(9);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const double u = g.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++hist[g.below(7)];
  }
  for (const int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(PlanMixture, PaperWeights) {
  const auto spec = plan_mixture(0.05, {{"yodas", 131}, {"emilia_yodas", 73.1}, {"emilia", 37.1}});
  ASSERT_EQ(spec.entries.size(), 4u);
  EXPECT_EQ(spec.entries[0].source, "text");
  EXPECT_DOUBLE_EQ(spec.entries[0].weight, 0.05);
  EXPECT_NEAR(spec.entries[1].weight, 0.516, 1e-3);
  EXPECT_NEAR(spec.entries[2].weight, 0.288, 1e-3);
  EXPECT_NEAR(spec.entries[3].weight, 0.146, 1e-3);
  EXPECT_NO_THROW(spec.validate());
}

TEST(PlanMixture, EdgeCases) {
  const auto speech_only = plan_mixture(0.0, {{"a", 1}, {"b", 3}});
  ASSERT_EQ(speech_only.entries.size(), 2u);
  EXPECT_DOUBLE_EQ(speech_only.entries[1].weight, 0.75);
  const auto half = plan_mixture(0.5, {{"a", 10}});
  EXPECT_DOUBLE_EQ(half.entries[0].weight, 0.5);
  EXPECT_DOUBLE_EQ(half.entries[1].weight, 0.5);
  EXPECT_THROW(plan_mixture(0.1, {{"a", 0}}), ConfigError);
  EXPECT_THROW(plan_mixture(1.0, {{"a", 1}}), ConfigError);
  EXPECT_THROW(plan_mixture(-0.1, {{"a", 1}}), ConfigError);
}

TEST(MixtureSpec, ValidateRejectsBadWeights) {
  MixtureSpec spec{{{"a", 0.5}, {"b", 0.4}}, 1, 4};
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.entries[1].weight = 0.5;
  EXPECT_NO_THROW(spec.validate());
  spec.entries[1].source = "a";
  EXPECT_THROW(spec.validate(), ConfigError);
  EXPECT_THROW((MixtureSpec{{}, 1, 4}.validate()), ConfigError);
  EXPECT_THROW((MixtureSpec{{{"a", 1.0}}, 1, 0}.validate()), ConfigError);
}

TEST(MixtureSpec, KeyValueRoundTrip) {
  const auto spec = plan_mixture(0.05, {{"y", 131}, {"e", 73.1}}, "text", 42, 3);
  const auto back = MixtureSpec::from_kv(spec.to_kv());
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.max_epochs, 3u);
  ASSERT_EQ(back.entries.size(), spec.entries.size());
  for (std::size_t i = 0; i < spec.entries.size(); ++i) {
    EXPECT_EQ(back.entries[i].source, spec.entries[i].source);
    EXPECT_EQ(back.entries[i].weight, spec.entries[i].weight);
  }
  EXPECT_THROW(MixtureSpec::from_kv("colour = red\n"), ParseError);
}

TEST(Scheduler, EachEpochIsAPermutation) {
  const MixtureSpec spec{{{"only", 1.0}}, 5, 3};
  const auto events = sample_schedule(spec, {{"only", 17}}, 51);
  for (std::uint32_t epoch = 1; epoch <= 3; ++epoch) {
    std::set<std::uint64_t> seen;
    for (std::size_t i = (epoch - 1) * 17; i < epoch * 17; ++i) {
      EXPECT_EQ(events[i].epoch, epoch);
      seen.insert(events[i].doc_index);
    }
    EXPECT_EQ(seen.size(), 17u);
    EXPECT_EQ(*seen.rbegin(), 16u);
  }
  // Different epochs use different orders.
  bool differs = false;
  for (std::size_t i = 0; i < 17; ++i) differs |= events[i].doc_index != events[17 + i].doc_index;
  EXPECT_TRUE(differs);
}

TEST(Scheduler, ExhaustionPastMaxEpochs) {
  const MixtureSpec spec{{{"only", 1.0}}, 5, 2};
  EXPECT_NO_THROW(sample_schedule(spec, {{"only", 4}}, 8));
  try {
    sample_schedule(spec, {{"only", 4}}, 9);
    FAIL();
  } catch (const ExhaustionError& e) {
    EXPECT_EQ(e.source(), "only");
    EXPECT_EQ(e.events_emitted(), 8u);
  }
}

TEST(Scheduler, FormatsAlternateAcrossEpochs) {
  EXPECT_EQ(format_for(0, 1), RenderFormat::kTextFirst);
  EXPECT_EQ(format_for(0, 2), RenderFormat::kAudioFirst);
  EXPECT_EQ(format_for(1, 1), RenderFormat::kAudioFirst);
  const MixtureSpec spec{{{"s", 1.0}}, 3, 2};
  const auto events = sample_schedule(spec, {{"s", 10}}, 20);
  std::map<std::uint64_t, std::set<RenderFormat>> formats;
  for (const auto& e : events) formats[e.doc_index].insert(e.format);
  for (const auto& [doc, f] : formats) EXPECT_EQ(f.size(), 2u) << doc;
}

TEST(Scheduler, MissingSourceIsConfigError) {
  const MixtureSpec spec{{{"a", 0.5}, {"b", 0.5}}, 1, 4};
  EXPECT_THROW(Scheduler(spec, {{"a", 3}}), ConfigError);
  const MixtureSpec zero_weight{{{"a", 1.0}, {"b", 0.0}}, 1, 4};
  EXPECT_NO_THROW(Scheduler(zero_weight, {{"a", 3}}));
  EXPECT_THROW(sample_schedule(spec, {{"a", 3}, {"b", 3}}, 0), ConfigError);
}

TEST(Scheduler, SourceDrawsFollowDocumentedGenerator) {
  const MixtureSpec spec{{{"a", 0.2}, {"b", 0.3}, {"c", 0.5}}, 99, 100};
  const auto events = sample_schedule(spec, {{"a", 1000}, {"b", 1000}, {"c", 1000}}, 2000);
  std::uint64_t state = 99;
  for (const auto& e : events) {
    const double u = static_cast<double>(splitmix_step(state) >> 11) * 0x1.0p-53;
    const std::string expected = u < 0.2 ? "a" : (u < 0.5 ? "b" : "c");
    ASSERT_EQ(e.source, expected);
  }
}

TEST(Scheduler, ReshuffleDoesNotPerturbSourceDraws) {
  // Same seed and weights, different document counts: the source sequence
  // must be identical because permutations use separate generators.
  const MixtureSpec spec{{{"a", 0.4}, {"b", 0.6}}, 7, 1000};
  const auto x = sample_schedule(spec, {{"a", 3}, {"b", 5}}, 500);
  const auto y = sample_schedule(spec, {{"a", 50}, {"b", 2}}, 500);
  for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(x[i].source, y[i].source);
}

TEST(Scheduler, SeedDeterminismAndSensitivity) {
  const auto spec = plan_mixture(0.05, {{"y", 131}, {"e", 73.1}, {"m", 37.1}}, "text", 42);
  const std::map<std::string, std::uint64_t> counts{{"text", 500}, {"y", 500}, {"e", 500}, {"m", 500}};
  const auto a = schedule_csv(sample_schedule(spec, counts, 1000));
  const auto b = schedule_csv(sample_schedule(spec, counts, 1000));
  EXPECT_EQ(a, b);
  auto other = spec;
  other.seed = 43;
  EXPECT_NE(a, schedule_csv(sample_schedule(other, counts, 1000)));
  EXPECT_EQ(a.substr(0, a.find('\n')), "event,source,doc_index,epoch,format");
}

TEST(RealizedShares, TokenWeighted) {
  const MixtureSpec spec{{{"a", 0.5}, {"b", 0.5}}, 1, 4};
  const std::vector<SampleEvent> events{{"a", 0, 1, RenderFormat::kTextFirst},
                                        {"b", 0, 1, RenderFormat::kTextFirst},
                                        {"b", 1, 1, RenderFormat::kAudioFirst}};
  const auto shares = realized_shares(spec, events, {{"a", {30}}, {"b", {10, 20}}});
  EXPECT_EQ(shares[0].tokens, 30u);
  EXPECT_EQ(shares[1].tokens, 30u);
  EXPECT_DOUBLE_EQ(shares[0].token_share, 0.5);
  EXPECT_DOUBLE_EQ(shares[1].event_share, 2.0 / 3.0);
  EXPECT_THROW(realized_shares(spec, {{"zzz", 0, 1, RenderFormat::kTextFirst}}, {}), ConfigError);
}

}  // namespace
}  // namespace audiolm
