#include "audiolm/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "audiolm/kv.hpp"

namespace audiolm {

std::string_view to_string(DataFormat fmt) {
  switch (fmt) {
    case DataFormat::kAudioFirst:
      return "audio_first";
    case DataFormat::kTextFirst:
      return "text_first";
    case DataFormat::kAudioOnly:
      return "audio_only";
    case DataFormat::kTextOnly:
      return "text_only";
  }
  return "unknown";
}

DataFormat parse_data_format(std::string_view text) {
  text = kv::trim(text);
  if (text == "audio_first") return DataFormat::kAudioFirst;
  if (text == "text_first") return DataFormat::kTextFirst;
  if (text == "audio_only") return DataFormat::kAudioOnly;
  if (text == "text_only") return DataFormat::kTextOnly;
  throw ParseError(0, "data_format", "unknown data format '" + std::string(text) + "'");
}

NllVariant nll_variant(int index) {
  if (index < 1 || index > 6) {
    throw RangeError("variant", std::to_string(index) + " not in [1, 6]");
  }
  return static_cast<NllVariant>(index);
}

int index_of(NllVariant v) { return static_cast<int>(v); }

std::string_view describe(NllVariant v) {
  switch (v) {
    case NllVariant::kAllInterleaved:
      return "all tokens, interleaved data";
    case NllVariant::kAudioInterleaved:
      return "audio tokens, interleaved data";
    case NllVariant::kSemanticInterleaved:
      return "semantic tokens, interleaved data";
    case NllVariant::kAudioAudioOnly:
      return "audio tokens, audio-only data";
    case NllVariant::kTextInterleaved:
      return "text tokens, interleaved data";
    case NllVariant::kTextTextOnly:
      return "text tokens, text-only data";
  }
  return "unknown";
}

bool selects(NllVariant v, const ScoredToken& t) {
  if (t.document_initial) return false;
  const bool interleaved = t.format == DataFormat::kAudioFirst;
  const bool audio = t.role == TokenRole::kSemantic || t.role == TokenRole::kAcoustic;
  switch (v) {
    case NllVariant::kAllInterleaved:
      return interleaved;
    case NllVariant::kAudioInterleaved:
      return interleaved && audio;
    case NllVariant::kSemanticInterleaved:
      return interleaved && t.role == TokenRole::kSemantic;
    case NllVariant::kAudioAudioOnly:
      return t.format == DataFormat::kAudioOnly && audio;
    case NllVariant::kTextInterleaved:
      return interleaved && t.role == TokenRole::kText;
    case NllVariant::kTextTextOnly:
      return t.format == DataFormat::kTextOnly && t.role == TokenRole::kText;
  }
  return false;
}

EmptySelectionError::EmptySelectionError(NllVariant v)
    : Error("NLL variant " + std::to_string(index_of(v)) + " (" + std::string(describe(v)) +
            ") selects no tokens"),
      variant_(v) {}

void NllAccumulator::add(const ScoredToken& token) {
  if (!std::isfinite(token.logprob) || token.logprob > 0.0) {
    throw ValidationError("logprob must be finite and <= 0, got " +
                          kv::format_double(token.logprob));
  }
  for (const auto v : kAllNllVariants) {
    if (selects(v, token)) {
      ++count_[index_of(v) - 1];
      sum_[index_of(v) - 1] -= token.logprob;
    }
  }
}

void NllAccumulator::add(std::span<const ScoredToken> tokens) {
  for (const auto& t : tokens) add(t);
}

void NllAccumulator::merge(const NllAccumulator& other) {
  for (std::size_t i = 0; i < 6; ++i) {
    count_[i] += other.count_[i];
    sum_[i] += other.sum_[i];
  }
}

double NllAccumulator::mean(NllVariant v) const {
  const auto n = count(v);
  if (n == 0) throw EmptySelectionError(v);
  return sum(v) / static_cast<double>(n);
}

double variant_nll(std::span<const ScoredToken> tokens, NllVariant variant) {
  NllAccumulator acc;
  acc.add(tokens);
  return acc.mean(variant);
}

std::vector<ScoredToken> read_scored_tokens(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (kv::trim(line).empty()) continue;
    for (const auto& h : kv::split(line, ',')) header.emplace_back(kv::trim(h));
    break;
  }
  const bool with_initial = header.size() == 4 && header[3] == "document_initial";
  if (header.size() < 3 || header[0] != "role" || header[1] != "data_format" ||
      header[2] != "logprob" || (header.size() == 4 && !with_initial) || header.size() > 4) {
    throw ParseError(line_no, "", "expected header 'role,data_format,logprob[,document_initial]'");
  }
  std::vector<ScoredToken> tokens;
  while (std::getline(in, line)) {
    ++line_no;
    if (kv::trim(line).empty()) continue;
    const auto cells = kv::split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "", "expected " + std::to_string(header.size()) + " fields");
    }
    ScoredToken t;
    try {
      t.role = parse_token_role(cells[0]);
      t.format = parse_data_format(cells[1]);
    } catch (const ParseError& e) {
      throw ParseError(line_no, e.field(), e.what());
    }
    const auto lp = kv::parse_double(cells[2]);
    if (!lp) throw ParseError(line_no, "logprob", "not a number");
    if (!std::isfinite(*lp) || *lp > 0.0) {
      throw ParseError(line_no, "logprob", "must be finite and <= 0");
    }
    t.logprob = *lp;
    if (with_initial) {
      const auto flag = kv::trim(cells[3]);
      if (flag != "0" && flag != "1") throw ParseError(line_no, "document_initial", "expected 0 or 1");
      t.document_initial = flag == "1";
    }
    tokens.push_back(t);
  }
  return tokens;
}

std::vector<double> average_ranks(std::span<const double> values) {
  const auto n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) {
    throw ValidationError("pearson: series must have equal nonzero length");
  }
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw UndefinedCorrelationError("correlation undefined for a constant series");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("spearman: series lengths differ");
  if (x.size() < 3) throw ValidationError("spearman: need at least 3 observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("spearman: values must be finite");
    }
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

TrendFit loglinear_trend(std::span<const TrendPoint> points) {
  if (points.size() < 2) throw FitError("trend: need at least 2 points");
  const double n = static_cast<double>(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& p : points) {
    mx += p.nll;
    my += p.metric;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    sxx += (p.nll - mx) * (p.nll - mx);
    sxy += (p.nll - mx) * (p.metric - my);
    syy += (p.metric - my) * (p.metric - my);
  }
  if (sxx == 0.0) throw FitError("trend: all NLL values are equal");
  TrendFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& p : points) ss_res += fit.residual(p) * fit.residual(p);
  fit.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return fit;
}

SeriesTable read_series_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (kv::trim(line).empty()) continue;
    for (const auto& h : kv::split(line, ',')) header.emplace_back(kv::trim(h));
    break;
  }
  if (header.empty()) throw ParseError(line_no, "", "missing CSV header");
  SeriesTable table;
  std::size_t model_col = header.size();
  std::vector<int> col_variant(header.size(), 0);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto& h = header[i];
    if (h == "model") {
      model_col = i;
    } else if (h.size() == 5 && h.rfind("nll_", 0) == 0 && h[4] >= '1' && h[4] <= '6') {
      col_variant[i] = h[4] - '0';
      table.variants.push_back(col_variant[i]);
    } else {
      if (h.empty()) throw ParseError(line_no, "", "empty column name");
      table.metric_names.push_back(h);
    }
  }
  if (model_col == header.size()) throw ParseError(line_no, "model", "missing column");
  std::sort(table.variants.begin(), table.variants.end());
  if (std::adjacent_find(table.variants.begin(), table.variants.end()) != table.variants.end()) {
    throw ParseError(line_no, "", "duplicate NLL column");
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (kv::trim(line).empty()) continue;
    const auto cells = kv::split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "", "expected " + std::to_string(header.size()) + " fields");
    }
    MetricSeries row;
    row.model = std::string(kv::trim(cells[model_col]));
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == model_col || kv::trim(cells[i]).empty()) continue;
      const auto v = kv::parse_double(cells[i]);
      if (!v || !std::isfinite(*v)) throw ParseError(line_no, header[i], "not a finite number");
      if (col_variant[i] != 0) {
        if (!(*v > 0.0)) throw ParseError(line_no, header[i], "NLL must be positive");
        row.nll[col_variant[i]] = *v;
      } else {
        row.metrics[header[i]] = *v;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

CorrelationTable correlation_table(const SeriesTable& table, std::span<const int> variants) {
  CorrelationTable out;
  out.variants.assign(variants.begin(), variants.end());
  out.columns = table.metric_names;
  for (const int v : variants) {
    nll_variant(v);
    if (std::find(table.variants.begin(), table.variants.end(), v) == table.variants.end()) {
      throw ValidationError("series has no nll_" + std::to_string(v) + " column");
    }
    std::vector<CorrelationCell> row;
    for (const auto& metric : table.metric_names) {
      std::vector<double> xs;
      std::vector<double> ys;
      for (const auto& s : table.rows) {
        const auto n = s.nll.find(v);
        const auto m = s.metrics.find(metric);
        if (n == s.nll.end() || m == s.metrics.end()) continue;
        xs.push_back(n->second);
        ys.push_back(m->second);
      }
      CorrelationCell cell;
      if (xs.size() < 3) {
        cell.note = "fewer than 3 paired observations";
      } else {
        try {
          cell.rho = spearman(xs, ys);
        } catch (const UndefinedCorrelationError&) {
          cell.note = "constant series";
        }
      }
      row.push_back(std::move(cell));
    }
    out.cells.push_back(std::move(row));
  }
  return out;
}

void add_average_columns(CorrelationTable& table, const std::string& name,
                         std::span<const std::string> members) {
  std::vector<std::size_t> idx;
  for (const auto& m : members) {
    const auto it = std::find(table.columns.begin(), table.columns.end(), m);
    if (it == table.columns.end()) throw ValidationError("unknown metric column '" + m + "'");
    idx.push_back(static_cast<std::size_t>(it - table.columns.begin()));
  }
  if (idx.empty()) throw ValidationError("average '" + name + "' has no members");
  table.columns.push_back(name + ":mean_abs");
  table.columns.push_back(name + ":abs_mean");
  for (auto& row : table.cells) {
    double sum_abs = 0.0;
    double sum = 0.0;
    bool defined = true;
    for (const auto i : idx) {
      if (!row[i].rho) {
        defined = false;
        break;
      }
      sum_abs += std::fabs(*row[i].rho);
      sum += *row[i].rho;
    }
    const double n = static_cast<double>(idx.size());
    CorrelationCell mean_abs, abs_mean;
    if (defined) {
      mean_abs.rho = sum_abs / n;
      abs_mean.rho = std::fabs(sum / n);
    } else {
      mean_abs.note = abs_mean.note = "undefined member";
    }
    row.push_back(std::move(mean_abs));
    row.push_back(std::move(abs_mean));
  }
}

std::string correlation_csv(const CorrelationTable& table, bool absolute) {
  std::string out = "variant";
  for (const auto& c : table.columns) out += ',' + c;
  out += '\n';
  for (std::size_t r = 0; r < table.variants.size(); ++r) {
    out += "nll_" + std::to_string(table.variants[r]);
    for (const auto& cell : table.cells[r]) {
      out += ',';
      if (cell.rho) {
        out += kv::format_double(absolute ? std::fabs(*cell.rho) : *cell.rho);
      } else {
        out += "nan";
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace audiolm
