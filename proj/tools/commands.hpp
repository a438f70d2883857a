#pragma once

// Batch commands behind the `audiolm` executable. Each command catches every
// toolkit error, so a nonzero status always comes with a message in the
// report and never with a partially written output.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace audiolm::cli {

struct CommandResult {
  int status = 0;
  std::string report;
  std::optional<std::string> output_path;
};

struct TokenizeOptions {
  std::string manifest;
  std::optional<std::string> layout;  // default layout when absent
  std::string out;
  std::string format = "text-first";  // text-first | audio-first | both
  std::uint32_t seq_len = 4096;
};

struct MixOptions {
  std::string spec;
  std::vector<std::string> manifests;
  std::optional<std::string> layout;
  std::uint64_t total_events = 0;
  std::optional<std::uint64_t> seed;  // overrides the spec seed
  std::optional<std::string> out;     // schedule CSV
};

struct FitOptions {
  std::string runs;
  std::string mode = "parametric";  // isoflop | powerlaw | parametric
  std::optional<std::string> out;     // key-value fit file
  std::optional<std::string> curves;  // plot-ready CSV
  unsigned threads = 0;
};

struct PredictOptions {
  std::string fit;                   // parametric fit file
  std::optional<std::string> laws;   // scaling-law file; derived from the fit when absent
  std::optional<double> budget;
  std::optional<double> overtraining;
  std::optional<double> n_params;
  std::optional<double> d_tokens;
  std::optional<std::string> sweep_out;
  double sweep_min = 1e18;
  double sweep_max = 1e24;
  std::uint32_t sweep_points = 50;
};

struct ScheduleOptions {
  std::int64_t tokens = 500'000'000'000;
  std::int64_t batch = 512;
  std::int64_t seq_len = 4096;
  std::int64_t width = 1024;
  std::optional<std::string> out;  // key-value config
};

struct CorrelateOptions {
  std::string series;
  std::vector<int> variants;            // empty = every nll_ column present
  std::vector<std::string> averages;    // "name=metric1+metric2"
  bool absolute = false;
  std::optional<std::string> out;
};

CommandResult cmd_tokenize(const TokenizeOptions& options);
CommandResult cmd_mix(const MixOptions& options);
CommandResult cmd_fit(const FitOptions& options);
CommandResult cmd_predict(const PredictOptions& options);
CommandResult cmd_schedule(const ScheduleOptions& options);
CommandResult cmd_correlate(const CorrelateOptions& options);

}  // namespace audiolm::cli
