#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "audiolm/kv.hpp"
#include "commands.hpp"

namespace {

// Integer flags accept scientific notation ("500e9") as long as the value is
// integral; CLI11's own integer parsing rejects it.
std::optional<std::int64_t> parse_count(const std::string& text, const char* flag) {
  const auto v = audiolm::kv::parse_int(text);
  if (!v) std::cerr << "error: " << flag << ": '" << text << "' is not an integer\n";
  return v;
}

int emit(const audiolm::cli::CommandResult& result) {
  auto& stream = result.status == 0 ? std::cout : std::cerr;
  stream << result.report;
  stream.flush();
  return result.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interleaved speech-text pretraining toolkit"};
  app.require_subcommand(1);
  int status = 0;

  audiolm::cli::TokenizeOptions tok;
  auto* tokenize = app.add_subcommand("tokenize", "Render and pack a manifest into a shard");
  tokenize->add_option("manifest", tok.manifest, "JSON-lines manifest")->required();
  tokenize->add_option("--layout", tok.layout, "Vocab layout key-value file");
  tokenize->add_option("--out", tok.out, "Output shard path")->required();
  tokenize->add_option("--format", tok.format, "text-first, audio-first or both")
      ->check(CLI::IsMember({"text-first", "audio-first", "both"}));
  tokenize->add_option("--seq-len", tok.seq_len, "Packed sequence length")->check(CLI::Range(2u, 1u << 30));
  tokenize->callback([&] { status = emit(audiolm::cli::cmd_tokenize(tok)); });

  audiolm::cli::MixOptions mix;
  std::string mix_events;
  auto* mix_cmd = app.add_subcommand("mix", "Sample a deterministic document schedule");
  mix_cmd->add_option("--spec", mix.spec, "Mixture spec key-value file")->required();
  mix_cmd->add_option("--manifest", mix.manifests, "Manifest (repeatable)")->required();
  mix_cmd->add_option("--layout", mix.layout, "Vocab layout key-value file");
  mix_cmd->add_option("--total-events", mix_events, "Number of sampling events")->required();
  mix_cmd->add_option("--seed", mix.seed, "Override the spec seed");
  mix_cmd->add_option("--out", mix.out, "Schedule CSV path");
  mix_cmd->callback([&] {
    const auto n = parse_count(mix_events, "--total-events");
    if (!n || *n < 0) {
      status = 1;
      return;
    }
    mix.total_events = static_cast<std::uint64_t>(*n);
    status = emit(audiolm::cli::cmd_mix(mix));
  });

  audiolm::cli::FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit scaling laws to training runs");
  fit_cmd->add_option("runs", fit.runs, "Runs CSV")->required();
  fit_cmd->add_option("--mode", fit.mode, "isoflop, powerlaw or parametric")
      ->check(CLI::IsMember({"isoflop", "powerlaw", "parametric"}));
  fit_cmd->add_option("--out", fit.out, "Fit key-value file");
  fit_cmd->add_option("--curves", fit.curves, "Plot-ready CSV of fitted curves");
  fit_cmd->add_option("--threads", fit.threads, "Worker threads for the parametric fit (0 = all)");
  fit_cmd->callback([&] { status = emit(audiolm::cli::cmd_fit(fit)); });

  audiolm::cli::PredictOptions pred;
  auto* predict = app.add_subcommand("predict", "Predict loss from a parametric fit");
  predict->add_option("fit", pred.fit, "Parametric fit key-value file")->required();
  predict->add_option("--laws", pred.laws, "Scaling-law key-value file");
  auto* budget = predict->add_option("--budget", pred.budget, "Compute budget in FLOPs");
  predict->add_option("--K", pred.overtraining, "Over-training factor D / D*")->needs(budget);
  auto* n_opt = predict->add_option("--n", pred.n_params, "Parameters");
  auto* d_opt = predict->add_option("--d", pred.d_tokens, "Training tokens");
  n_opt->needs(d_opt)->excludes(budget);
  d_opt->needs(n_opt)->excludes(budget);
  predict->add_option("--sweep-out", pred.sweep_out, "Loss vs compute CSV for K = 1, 5, 20, 100");
  predict->add_option("--sweep-min", pred.sweep_min, "Smallest sweep budget");
  predict->add_option("--sweep-max", pred.sweep_max, "Largest sweep budget");
  predict->add_option("--sweep-points", pred.sweep_points, "Budgets in the sweep");
  predict->callback([&] { status = emit(audiolm::cli::cmd_predict(pred)); });

  audiolm::cli::ScheduleOptions sched;
  std::string tokens = "500e9", batch = "512", seq_len = "4096", width = "1024";
  auto* schedule = app.add_subcommand("schedule", "Learning-rate schedule and optimizer config");
  schedule->add_option("--tokens", tokens, "Training tokens")->capture_default_str();
  schedule->add_option("--batch", batch, "Sequences per step")->capture_default_str();
  schedule->add_option("--seq-len", seq_len, "Tokens per sequence")->capture_default_str();
  schedule->add_option("--width", width, "Model width")->capture_default_str();
  schedule->add_option("--out", sched.out, "Key-value config path");
  schedule->callback([&] {
    const auto t = parse_count(tokens, "--tokens");
    const auto b = parse_count(batch, "--batch");
    const auto s = parse_count(seq_len, "--seq-len");
    const auto w = parse_count(width, "--width");
    if (!t || !b || !s || !w) {
      status = 1;
      return;
    }
    sched.tokens = *t;
    sched.batch = *b;
    sched.seq_len = *s;
    sched.width = *w;
    status = emit(audiolm::cli::cmd_schedule(sched));
  });

  audiolm::cli::CorrelateOptions corr;
  auto* correlate = app.add_subcommand("correlate", "Spearman correlation of NLL vs metrics");
  correlate->add_option("series", corr.series, "Series CSV")->required();
  correlate->add_option("--variant", corr.variants, "NLL variant 1-6 (repeatable)")
      ->check(CLI::Range(1, 6));
  correlate->add_option("--average", corr.averages, "name=metric+metric (repeatable)");
  correlate->add_flag("--absolute", corr.absolute, "Report |rho|");
  correlate->add_option("--out", corr.out, "Correlation CSV path");
  correlate->callback([&] { status = emit(audiolm::cli::cmd_correlate(corr)); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return status;
}
