#include "commands.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "audiolm/analysis.hpp"
#include "audiolm/corpus.hpp"
#include "audiolm/errors.hpp"
#include "audiolm/interleave.hpp"
#include "audiolm/kv.hpp"
#include "audiolm/mixture.hpp"
#include "audiolm/scaling.hpp"
#include "audiolm/schedule.hpp"
#include "audiolm/shard.hpp"

namespace audiolm::cli {
namespace {

// Writes through a sibling temporary so a failed command leaves no output.
class AtomicFile {
 public:
  explicit AtomicFile(std::string path) : path_(std::move(path)), tmp_(path_ + ".tmp") {
    out_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error("cannot open '" + tmp_ + "' for writing");
  }
  ~AtomicFile() {
    if (!committed_) {
      out_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;

  std::ofstream& stream() { return out_; }

  void commit() {
    out_.close();
    if (!out_) throw Error("write to '" + tmp_ + "' failed");
    std::filesystem::rename(tmp_, path_);
    committed_ = true;
  }

 private:
  std::string path_;
  std::string tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_text(const std::string& path, const std::string& text) {
  AtomicFile file(path);
  file.stream() << text;
  file.commit();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

template <typename Body>
CommandResult run(const char* name, Body&& body) {
  CommandResult result;
  std::string report;
  try {
    body(report, result);
    result.status = 0;
    result.report = std::move(report);
  } catch (const std::exception& e) {
    result.status = 1;
    result.output_path.reset();
    result.report = report + fmt::format("error: {}: {}\n", name, e.what());
  }
  return result;
}

std::string g(double v) { return kv::format_double(v); }

// Appends every entry of a serialized key-value block to doc.
void merge_kv(kv::Document& doc, const std::string& text) {
  const auto block = kv::Document::parse(text);
  for (const auto& e : block.entries()) doc.set(e.key, e.value);
}

VocabLayout load_layout(const std::optional<std::string>& path) {
  return path ? VocabLayout::load(*path) : VocabLayout();
}

}  // namespace

CommandResult cmd_tokenize(const TokenizeOptions& o) {
  return run("tokenize", [&](std::string& report, CommandResult& result) {
    const auto layout = load_layout(o.layout);
    std::vector<RenderFormat> formats;
    if (o.format == "both") {
      formats = {RenderFormat::kTextFirst, RenderFormat::kAudioFirst};
    } else {
      formats = {parse_render_format(o.format)};
    }
    if (o.seq_len < 2) throw ConfigError("--seq-len must be at least 2");

    auto in = open_input(o.manifest);
    ManifestReader reader(in, layout);
    AtomicFile file(o.out);
    ShardWriter writer(file.stream(), layout, o.seq_len);
    Packer packer(layout, o.seq_len, [&](PackedSequence&& seq) { writer.write(seq); });
    std::uint64_t documents = 0;
    while (auto doc = reader.next()) {
      for (const auto fmt : formats) packer.add(*doc, fmt);
      ++documents;
    }
    const auto summary = packer.finish();
    writer.finish();
    file.commit();

    if (documents == 0) report += "warning: manifest contains no documents; shard is empty\n";
    report += fmt::format("documents        {}\n", documents);
    report += fmt::format("rendered items   {}\n", summary.documents);
    report += fmt::format("seq_len          {}\n", o.seq_len);
    report += fmt::format("sequences        {}\n", summary.sequences);
    report += fmt::format("stream tokens    {}\n", summary.stream_tokens);
    report += fmt::format("emitted tokens   {}\n", summary.emitted_tokens);
    report += fmt::format("remainder tokens {}\n", summary.remainder.size());
    result.output_path = o.out;
  });
}

CommandResult cmd_mix(const MixOptions& o) {
  return run("mix", [&](std::string& report, CommandResult& result) {
    auto spec = MixtureSpec::load(o.spec);
    if (o.seed) spec.seed = *o.seed;
    spec.validate();
    if (o.manifests.empty()) throw ConfigError("at least one --manifest is required");
    const auto layout = load_layout(o.layout);

    std::map<std::string, std::vector<std::uint64_t>> lengths;
    for (const auto& path : o.manifests) {
      auto in = open_input(path);
      ManifestReader reader(in, layout);
      while (auto doc = reader.next()) {
        lengths[doc->source].push_back(rendered_length(*doc, layout));
      }
    }
    std::map<std::string, std::uint64_t> counts;
    for (const auto& [source, lens] : lengths) counts[source] = lens.size();
    for (const auto& [source, n] : counts) {
      if (!spec.weight_of(source)) {
        report += fmt::format("warning: source '{}' ({} documents) is not in the spec\n", source, n);
      }
    }

    const auto events = sample_schedule(spec, counts, o.total_events);
    if (o.out) {
      write_text(*o.out, schedule_csv(events));
      result.output_path = *o.out;
    }
    report += fmt::format("events {}  seed {}  max_epochs {}\n", events.size(), spec.seed,
                          spec.max_epochs);
    report += fmt::format("{:<16} {:>10} {:>10} {:>12} {:>12} {:>10}\n", "source", "target",
                          "events", "event_share", "token_share", "delta");
    for (const auto& s : realized_shares(spec, events, lengths)) {
      report += fmt::format("{:<16} {:>10.4f} {:>10} {:>12.4f} {:>12.4f} {:>+10.4f}\n", s.source,
                            s.target, s.events, s.event_share, s.token_share,
                            s.token_share - s.target);
    }
  });
}

namespace {

std::string frontier_report(const std::vector<FrontierPoint>& frontier) {
  std::string out = fmt::format("{:>12} {:>5} {:>12} {:>12} {:>9} {}\n", "compute", "runs",
                                "n_star", "d_star", "loss", "flags");
  for (const auto& p : frontier) {
    std::string flags;
    if (p.by_params.extrapolated || p.by_tokens.extrapolated) flags = "extrapolated";
    out += fmt::format("{:>12.4e} {:>5} {:>12.4e} {:>12.4e} {:>9.5f} {}\n", p.compute, p.runs,
                       p.n_star, p.d_star, p.loss_star, flags);
  }
  return out;
}

void frontier_kv(kv::Document& doc, const std::vector<FrontierPoint>& frontier) {
  doc.set_int("budgets", static_cast<std::int64_t>(frontier.size()));
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    const auto prefix = fmt::format("budget.{}.", i);
    doc.set(prefix + "compute", frontier[i].compute);
    doc.set(prefix + "n_star", frontier[i].n_star);
    doc.set(prefix + "d_star", frontier[i].d_star);
    doc.set(prefix + "loss_star", frontier[i].loss_star);
    doc.set_int(prefix + "runs", static_cast<std::int64_t>(frontier[i].runs));
  }
}

// Loss vs N per budget: observed runs and the fitted parabola on a 25-point
// grid spanning the sampled range.
std::string isoflop_curves(const std::vector<FrontierPoint>& frontier,
                           std::span<const RunRecord> runs) {
  std::string out = "compute,kind,n_params,d_tokens,loss\n";
  for (const auto& p : frontier) {
    for (const auto& r : runs) {
      if (std::fabs(r.compute / p.compute - 1.0) <= 0.05) {
        out += fmt::format("{},observed,{},{},{}\n", g(p.compute), g(r.n_params), g(r.d_tokens),
                           g(r.loss));
      }
    }
    constexpr int kPoints = 25;
    const double lo = std::log(p.by_params.lo);
    const double hi = std::log(p.by_params.hi);
    for (int i = 0; i < kPoints; ++i) {
      const double n = std::exp(lo + (hi - lo) * i / (kPoints - 1));
      out += fmt::format("{},fitted,{},{},{}\n", g(p.compute), g(n), g(p.compute / (6.0 * n)),
                         g(p.by_params.evaluate(n)));
    }
  }
  return out;
}

}  // namespace

CommandResult cmd_fit(const FitOptions& o) {
  return run("fit", [&](std::string& report, CommandResult& result) {
    const auto runs = read_runs_csv_file(o.runs);
    kv::Document doc;
    doc.set("mode", o.mode);
    std::string curves;

    if (o.mode == "isoflop" || o.mode == "powerlaw") {
      const auto frontier = isoflop_frontier(runs);
      report += fmt::format("{} runs in {} budgets\n", runs.size(), frontier.size());
      report += frontier_report(frontier);
      frontier_kv(doc, frontier);
      if (o.mode == "isoflop") {
        curves = isoflop_curves(frontier, runs);
      } else {
        const auto laws = fit_scaling_laws(frontier);
        report += fmt::format("N* = {:.4e} * C^{:.4f}  (r2_log {:.5f})\n", laws.params.coefficient,
                              laws.params.exponent, laws.params.r2_log);
        report += fmt::format("D* = {:.4e} * C^{:.4f}  (r2_log {:.5f})\n", laws.tokens.coefficient,
                              laws.tokens.exponent, laws.tokens.r2_log);
        report += fmt::format("exponent sum {:.4f}\n", laws.params.exponent + laws.tokens.exponent);
        merge_kv(doc, scaling_laws_kv(laws));
        curves = "compute,n_star,d_star,n_fit,d_fit\n";
        for (const auto& p : frontier) {
          curves += fmt::format("{},{},{},{},{}\n", g(p.compute), g(p.n_star), g(p.d_star),
                                g(laws.params.evaluate(p.compute)),
                                g(laws.tokens.evaluate(p.compute)));
        }
      }
    } else if (o.mode == "parametric") {
      ParametricFitOptions options;
      options.threads = o.threads;
      const auto fit = fit_parametric(runs, options);
      const auto exps = derived_exponents(fit.alpha, fit.beta);
      report += fmt::format("L(N, D) = {:.4f} + {:.6g} / N^{:.4f} + {:.6g} / D^{:.4f}\n", fit.E,
                            fit.A, fit.alpha, fit.B, fit.beta);
      report += fmt::format("r2_raw {:.6f}  r2_log {:.6f}  objective {:.4e}\n", fit.r2_raw,
                            fit.r2_log, fit.objective);
      report += fmt::format("starts {}  converged {}  best {}\n", fit.starts,
                            fit.converged_starts, fit.best_start);
      report += fmt::format("N* ~ C^{:.4f}  D* ~ C^{:.4f}\n", exps.params, exps.tokens);
      merge_kv(doc, parametric_fit_kv(fit));
      curves = "n_params,d_tokens,compute,loss,predicted\n";
      for (const auto& r : runs) {
        curves += fmt::format("{},{},{},{},{}\n", g(r.n_params), g(r.d_tokens), g(r.compute),
                              g(r.loss), g(fit.predict(r.n_params, r.d_tokens)));
      }
    } else {
      throw ConfigError("unknown --mode '" + o.mode + "' (isoflop, powerlaw, parametric)");
    }

    if (o.curves) write_text(*o.curves, curves);
    if (o.out) {
      write_text(*o.out, doc.str());
      result.output_path = *o.out;
    }
  });
}

CommandResult cmd_predict(const PredictOptions& o) {
  return run("predict", [&](std::string& report, CommandResult& result) {
    const auto fit = parametric_fit_from_kv(read_text(o.fit));
    const auto laws = o.laws ? scaling_laws_from_kv(read_text(*o.laws)) : laws_from_parametric(fit);
    const bool by_size = o.n_params.has_value() || o.d_tokens.has_value();
    if (by_size && (o.budget || o.overtraining)) {
      throw ConfigError("--n/--d cannot be combined with --budget/--K");
    }
    if (by_size) {
      if (!o.n_params || !o.d_tokens) throw ConfigError("--n and --d must be given together");
      const double loss = predict_loss(fit, *o.n_params, *o.d_tokens);
      report += fmt::format("n_params      {}\n", g(*o.n_params));
      report += fmt::format("d_tokens      {}\n", g(*o.d_tokens));
      report += fmt::format("compute       {}\n", g(flops(*o.n_params, *o.d_tokens)));
      report += fmt::format("overtraining  {:.4f}\n",
                            overtraining_factor(laws, *o.n_params, *o.d_tokens));
      report += fmt::format("loss          {:.5f}\n", loss);
    } else if (o.budget) {
      const double k = o.overtraining.value_or(1.0);
      const auto point = loss_at_overtraining(fit, laws, *o.budget, k);
      report += fmt::format("budget        {}\n", g(point.budget));
      report += fmt::format("overtraining  {}\n", g(point.overtraining));
      report += fmt::format("n_params      {:.6e}\n", point.n_params);
      report += fmt::format("d_tokens      {:.6e}\n", point.d_tokens);
      report += fmt::format("loss          {:.5f}\n", point.loss);
      if (k == 1.0) {
        const auto alloc = optimal_allocation(laws, *o.budget);
        report += fmt::format("tokens/param  {:.3f}\n", alloc.tokens_per_param);
        if (!alloc.consistent) {
          report += fmt::format("warning: 6 N* D* is {:.3f} x the budget; laws are inconsistent\n",
                                alloc.flops_ratio);
        }
      }
    } else if (!o.sweep_out) {
      throw ConfigError("give --budget [--K], --n and --d, or --sweep-out");
    }

    if (o.sweep_out) {
      if (!(o.sweep_min > 0.0 && o.sweep_max > o.sweep_min) || o.sweep_points < 2) {
        throw ConfigError("sweep needs 0 < min < max and at least 2 points");
      }
      std::string csv = "budget,overtraining,n_params,d_tokens,loss\n";
      const double lo = std::log(o.sweep_min);
      const double hi = std::log(o.sweep_max);
      for (std::uint32_t i = 0; i < o.sweep_points; ++i) {
        const double c = std::exp(lo + (hi - lo) * i / (o.sweep_points - 1));
        for (const double k : {1.0, 5.0, 20.0, 100.0}) {
          const auto p = loss_at_overtraining(fit, laws, c, k);
          csv += fmt::format("{},{},{},{},{}\n", g(c), g(k), g(p.n_params), g(p.d_tokens),
                             g(p.loss));
        }
      }
      write_text(*o.sweep_out, csv);
      result.output_path = *o.sweep_out;
      report += fmt::format("sweep: {} budgets x 4 ratios -> {}\n", o.sweep_points, *o.sweep_out);
    }
  });
}

CommandResult cmd_schedule(const ScheduleOptions& o) {
  return run("schedule", [&](std::string& report, CommandResult& result) {
    ScheduleSpec spec;
    spec.peak_lr = scaled_lr(o.batch, o.width);
    spec.total_steps = train_steps(o.tokens, o.batch, o.seq_len);
    spec.validate();
    const OptimizerConfig optimizer;
    optimizer.validate();

    const auto steps = static_cast<std::int64_t>(spec.total_steps);
    report += fmt::format("base_lr           {} (batch {}, width {})\n", g(kBaseLearningRate),
                          kBaseBatchSize, kBaseWidth);
    report += fmt::format("peak_lr           {} (batch {}, width {})\n", g(spec.peak_lr), o.batch,
                          o.width);
    report += fmt::format("total_steps       {}\n", spec.total_steps);
    report += fmt::format("warmup            [0, {})\n", spec.warmup_end_step());
    report += fmt::format("stable            [{}, {}]\n", spec.warmup_end_step(),
                          spec.decay_start_step());
    report += fmt::format("decay             ({}, {}]\n", spec.decay_start_step(), steps);
    report += fmt::format("multiplier@0      {}\n", g(wsd_multiplier(0, spec)));
    report += fmt::format("multiplier@mid    {}\n", g(wsd_multiplier(steps / 2, spec)));
    report += fmt::format("multiplier@end    {}\n", g(wsd_multiplier(steps, spec)));

    if (o.out) {
      kv::Document doc;
      doc.set_int("tokens", o.tokens);
      doc.set_int("batch", o.batch);
      doc.set_int("seq_len", o.seq_len);
      doc.set_int("width", o.width);
      merge_kv(doc, spec.to_kv());
      merge_kv(doc, optimizer.to_kv());
      write_text(*o.out, doc.str());
      result.output_path = *o.out;
    }
  });
}

CommandResult cmd_correlate(const CorrelateOptions& o) {
  return run("correlate", [&](std::string& report, CommandResult& result) {
    auto in = open_input(o.series);
    const auto series = read_series_csv(in);
    const auto variants = o.variants.empty() ? series.variants : o.variants;
    if (variants.empty()) throw ValidationError("series has no nll_ columns");
    auto table = correlation_table(series, variants);
    for (const auto& spec : o.averages) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ConfigError("--average expects name=metric+metric, got '" + spec + "'");
      }
      const auto members = kv::split(std::string_view(spec).substr(eq + 1), '+');
      std::vector<std::string> trimmed;
      for (const auto& m : members) trimmed.emplace_back(kv::trim(m));
      add_average_columns(table, spec.substr(0, eq), trimmed);
    }

    report += fmt::format("{} models, {} variants x {} metrics (Spearman rho{})\n",
                          series.rows.size(), table.variants.size(), table.columns.size(),
                          o.absolute ? ", absolute" : "");
    for (std::size_t r = 0; r < table.variants.size(); ++r) {
      report += fmt::format("nll_{} ({})\n", table.variants[r],
                            describe(nll_variant(table.variants[r])));
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        const auto& cell = table.cells[r][c];
        if (cell.rho) {
          const double rho = o.absolute ? std::fabs(*cell.rho) : *cell.rho;
          report += fmt::format("  {:<28} {:+.4f}\n", table.columns[c], rho);
        } else {
          report += fmt::format("  {:<28} undefined ({})\n", table.columns[c], cell.note);
        }
      }
    }
    if (o.out) {
      write_text(*o.out, correlation_csv(table, o.absolute));
      result.output_path = *o.out;
    }
  });
}

}  // namespace audiolm::cli
