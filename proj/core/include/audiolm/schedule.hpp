#pragma once

#include <cstdint>
#include <string>

namespace audiolm {

// AdamW settings handed to downstream trainers; not an optimizer.
struct OptimizerConfig {
  double beta1 = 0.98;
  double beta2 = 0.98;
  double epsilon = 1e-16;
  double weight_decay = 0.033;
  double grad_clip_norm = 1.0;
  double z_loss_weight = 1e-4;

  void validate() const;  // all positive, betas below 1; throws ConfigError
  std::string to_kv() const;
};

// Warmup-Stable-Decay: linear 0 -> 1 over warmup, flat, linear 1 -> 0.
struct ScheduleSpec {
  double peak_lr = 0.003;
  double warmup_frac = 0.10;
  double stable_frac = 0.70;
  double decay_frac = 0.20;
  std::uint64_t total_steps = 1;

  void validate() const;  // fractions nonnegative, sum to 1; total_steps >= 1
  std::uint64_t warmup_end_step() const;
  std::uint64_t decay_start_step() const;
  std::string to_kv() const;
};

inline constexpr double kBaseLearningRate = 0.003;
inline constexpr std::uint64_t kBaseBatchSize = 256;
inline constexpr std::uint64_t kBaseWidth = 1024;

// 0.003 * sqrt(batch / 256) * sqrt(1024 / width). Throws DomainError.
double scaled_lr(std::int64_t batch_size, std::int64_t width);

// Multiplier at step in [0, total_steps]; phase boundaries belong to the
// stable phase. Throws RangeError outside that interval.
double wsd_multiplier(std::int64_t step, const ScheduleSpec& spec);

double learning_rate(std::int64_t step, const ScheduleSpec& spec);

// ceil(tokens / (batch_size * seq_len)), exact integer arithmetic.
// Throws DomainError for nonpositive input.
std::uint64_t train_steps(std::int64_t tokens, std::int64_t batch_size, std::int64_t seq_len);

}  // namespace audiolm
