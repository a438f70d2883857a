#include <gtest/gtest.h>

#include <cmath>

#include "audiolm/errors.hpp"
#include "audiolm/kv.hpp"
#include "audiolm/schedule.hpp"

namespace audiolm {
namespace {

TEST(ScaledLr, BaseAndHomogeneity) {
  EXPECT_EQ(scaled_lr(256, 1024), 0.003);
  EXPECT_DOUBLE_EQ(scaled_lr(1024, 1024), 2 * scaled_lr(256, 1024));
  EXPECT_DOUBLE_EQ(scaled_lr(256, 4096), 0.5 * scaled_lr(256, 1024));
  EXPECT_DOUBLE_EQ(scaled_lr(512, 1024), 0.003 * std::sqrt(2.0));
  EXPECT_THROW(scaled_lr(0, 1024), DomainError);
  EXPECT_THROW(scaled_lr(256, -1), DomainError);
}

TEST(TrainSteps, CeilingDivision) {
  EXPECT_EQ(train_steps(500'000'000'000, 512, 4096), 238419u);
  EXPECT_EQ(train_steps(4096, 1, 4096), 1u);
  EXPECT_EQ(train_steps(4097, 1, 4096), 2u);
  EXPECT_THROW(train_steps(0, 1, 1), DomainError);
  EXPECT_THROW(train_steps(1, 0, 1), DomainError);
  // Products beyond 64 bits still divide exactly.
  EXPECT_EQ(train_steps(INT64_MAX, INT64_MAX, 2), 1u);
}

TEST(TrainSteps, CoversTokensMinimally) {
  for (std::int64_t tokens : {1LL, 999LL, 4096LL, 1'000'003LL, 500'000'000'000LL}) {
    for (std::int64_t batch : {1LL, 3LL, 512LL}) {
      const auto steps = train_steps(tokens, batch, 4096);
      const auto per = static_cast<unsigned __int128>(batch) * 4096;
      EXPECT_GE(steps * per, static_cast<unsigned __int128>(tokens));
      EXPECT_LT((steps - 1) * per, static_cast<unsigned __int128>(tokens));
    }
  }
}

TEST(Wsd, EndpointsExact) {
  ScheduleSpec spec;
  spec.total_steps = 1000;
  EXPECT_EQ(wsd_multiplier(0, spec), 0.0);
  EXPECT_EQ(wsd_multiplier(500, spec), 1.0);
  EXPECT_EQ(wsd_multiplier(1000, spec), 0.0);
  EXPECT_EQ(wsd_multiplier(100, spec), 1.0);
  EXPECT_EQ(wsd_multiplier(800, spec), 1.0);
  EXPECT_DOUBLE_EQ(wsd_multiplier(50, spec), 0.5);
  EXPECT_DOUBLE_EQ(wsd_multiplier(900, spec), 0.5);
  EXPECT_THROW(wsd_multiplier(-1, spec), RangeError);
  EXPECT_THROW(wsd_multiplier(1001, spec), RangeError);
}

TEST(Wsd, ContinuousPiecewiseLinearOnDenseGrid) {
  ScheduleSpec spec;
  spec.total_steps = 100000;
  double prev = wsd_multiplier(0, spec);
  for (std::int64_t s = 1; s <= 100000; ++s) {
    const double m = wsd_multiplier(s, spec);
    ASSERT_GE(m, 0.0);
    ASSERT_LE(m, 1.0);
    ASSERT_LE(std::fabs(m - prev), 1.0 / (0.1 * 100000) + 1e-12) << s;
    prev = m;
  }
}

TEST(Wsd, LearningRateScalesPeak) {
  ScheduleSpec spec;
  spec.total_steps = 10;
  spec.peak_lr = 0.006;
  EXPECT_DOUBLE_EQ(learning_rate(5, spec), 0.006);
  EXPECT_DOUBLE_EQ(learning_rate(9, spec), 0.003);
}

TEST(Wsd, PhaseBoundaries) {
  ScheduleSpec spec;
  spec.total_steps = 238419;
  EXPECT_EQ(spec.warmup_end_step(), 23842u);
  EXPECT_EQ(spec.decay_start_step(), 190735u);
}

TEST(ScheduleSpec, Validation) {
  ScheduleSpec spec;
  spec.total_steps = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.total_steps = 10;
  spec.stable_frac = 0.6;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.stable_frac = 0.7;
  spec.peak_lr = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(OptimizerConfig, DefaultsAndKeyValue) {
  const OptimizerConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  const auto doc = kv::Document::parse(cfg.to_kv());
  EXPECT_EQ(doc.get_double("beta1"), 0.98);
  EXPECT_EQ(doc.get_double("beta2"), 0.98);
  EXPECT_EQ(doc.get_double("epsilon"), 1e-16);
  EXPECT_EQ(doc.get_double("weight_decay"), 0.033);
  EXPECT_EQ(doc.get_double("grad_clip_norm"), 1.0);
  EXPECT_EQ(doc.get_double("z_loss_weight"), 1e-4);
  OptimizerConfig bad;
  bad.beta2 = 1.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

}  // namespace
}  // namespace audiolm
