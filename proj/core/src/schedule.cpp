#include "audiolm/schedule.hpp"

#include <cmath>
#include <limits>

#include "audiolm/errors.hpp"
#include "audiolm/kv.hpp"

namespace audiolm {

void OptimizerConfig::validate() const {
  for (const double v : {beta1, beta2, epsilon, weight_decay, grad_clip_norm, z_loss_weight}) {
    if (!(std::isfinite(v) && v > 0.0)) throw ConfigError("optimizer settings must be positive");
  }
  if (beta1 >= 1.0 || beta2 >= 1.0) throw ConfigError("Adam betas must be below 1");
}

std::string OptimizerConfig::to_kv() const {
  kv::Document doc;
  doc.set("optimizer", std::string("adamw"));
  doc.set("beta1", beta1);
  doc.set("beta2", beta2);
  doc.set("epsilon", epsilon);
  doc.set("weight_decay", weight_decay);
  doc.set("grad_clip_norm", grad_clip_norm);
  doc.set("z_loss_weight", z_loss_weight);
  return doc.str();
}

void ScheduleSpec::validate() const {
  if (total_steps < 1) throw ConfigError("total_steps must be at least 1");
  for (const double f : {warmup_frac, stable_frac, decay_frac}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("schedule fractions must be in [0, 1]");
  }
  if (std::fabs(warmup_frac + stable_frac + decay_frac - 1.0) > 1e-12) {
    throw ConfigError("schedule fractions must sum to 1");
  }
  if (!(std::isfinite(peak_lr) && peak_lr > 0.0)) throw ConfigError("peak_lr must be positive");
}

std::uint64_t ScheduleSpec::warmup_end_step() const {
  return static_cast<std::uint64_t>(std::ceil(warmup_frac * static_cast<double>(total_steps)));
}

std::uint64_t ScheduleSpec::decay_start_step() const {
  return static_cast<std::uint64_t>(
      std::floor((1.0 - decay_frac) * static_cast<double>(total_steps)));
}

std::string ScheduleSpec::to_kv() const {
  kv::Document doc;
  doc.set("schedule", std::string("wsd"));
  doc.set("peak_lr", peak_lr);
  doc.set("warmup_frac", warmup_frac);
  doc.set("stable_frac", stable_frac);
  doc.set("decay_frac", decay_frac);
  doc.set_int("total_steps", static_cast<std::int64_t>(total_steps));
  doc.set_int("warmup_end_step", static_cast<std::int64_t>(warmup_end_step()));
  doc.set_int("decay_start_step", static_cast<std::int64_t>(decay_start_step()));
  return doc.str();
}

double scaled_lr(std::int64_t batch_size, std::int64_t width) {
  if (batch_size <= 0 || width <= 0) {
    throw DomainError("scaled_lr: batch size and width must be positive");
  }
  return kBaseLearningRate * std::sqrt(static_cast<double>(batch_size) / kBaseBatchSize) *
         std::sqrt(static_cast<double>(kBaseWidth) / static_cast<double>(width));
}

double wsd_multiplier(std::int64_t step, const ScheduleSpec& spec) {
  spec.validate();
  if (step < 0 || static_cast<std::uint64_t>(step) > spec.total_steps) {
    throw RangeError("step", std::to_string(step) + " not in [0, " +
                                 std::to_string(spec.total_steps) + "]");
  }
  const double f = static_cast<double>(step) / static_cast<double>(spec.total_steps);
  // 1 - decay_frac, not warmup + stable: 0.1 + 0.7 rounds below 0.8.
  const double decay_start = 1.0 - spec.decay_frac;
  if (f < spec.warmup_frac) return f / spec.warmup_frac;
  if (f <= decay_start) return 1.0;
  return std::max(0.0, (1.0 - f) / spec.decay_frac);
}

double learning_rate(std::int64_t step, const ScheduleSpec& spec) {
  return spec.peak_lr * wsd_multiplier(step, spec);
}

std::uint64_t train_steps(std::int64_t tokens, std::int64_t batch_size, std::int64_t seq_len) {
  if (tokens <= 0 || batch_size <= 0 || seq_len <= 0) {
    throw DomainError("train_steps: tokens, batch size and sequence length must be positive");
  }
  const auto per_step = static_cast<unsigned __int128>(batch_size) *
                        static_cast<unsigned __int128>(seq_len);
  const auto t = static_cast<unsigned __int128>(tokens);
  return static_cast<std::uint64_t>((t + per_step - 1) / per_step);
}

}  // namespace audiolm
