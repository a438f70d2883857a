#pragma once

// Validation-NLL variants over role-annotated token streams and the rank /
// trend statistics used to relate NLL to downstream metrics.

#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "audiolm/errors.hpp"
#include "audiolm/vocab.hpp"

namespace audiolm {

enum class DataFormat : std::uint8_t {
  kAudioFirst = 0,
  kTextFirst = 1,
  kAudioOnly = 2,
  kTextOnly = 3,
};

std::string_view to_string(DataFormat fmt);
DataFormat parse_data_format(std::string_view text);  // throws ParseError

struct ScoredToken {
  TokenRole role = TokenRole::kText;
  DataFormat format = DataFormat::kAudioFirst;
  double logprob = 0.0;  // nats, finite and <= 0
  // The document-initial begin_of_text has no meaningful conditional and is
  // excluded from every variant.
  bool document_initial = false;
};

// The six NLL metrics, numbered as in the correlation table:
//   1 all tokens, interleaved data       4 audio tokens, audio-only data
//   2 audio tokens, interleaved data     5 text tokens, interleaved data
//   3 semantic tokens, interleaved data  6 text tokens, text-only data
// "Interleaved" validation data is audio-first.
enum class NllVariant : std::uint8_t {
  kAllInterleaved = 1,
  kAudioInterleaved = 2,
  kSemanticInterleaved = 3,
  kAudioAudioOnly = 4,
  kTextInterleaved = 5,
  kTextTextOnly = 6,
};

inline constexpr std::array<NllVariant, 6> kAllNllVariants = {
    NllVariant::kAllInterleaved,      NllVariant::kAudioInterleaved,
    NllVariant::kSemanticInterleaved, NllVariant::kAudioAudioOnly,
    NllVariant::kTextInterleaved,     NllVariant::kTextTextOnly};

NllVariant nll_variant(int index);  // 1..6, throws RangeError
int index_of(NllVariant v);
std::string_view describe(NllVariant v);

// True when the token contributes to the variant's mean.
bool selects(NllVariant v, const ScoredToken& token);

class EmptySelectionError : public Error {
 public:
  explicit EmptySelectionError(NllVariant v);
  NllVariant variant() const { return variant_; }

 private:
  NllVariant variant_;
};

// Streaming (count, sum) reduction for all six variants; merge is
// commutative and associative.
class NllAccumulator {
 public:
  void add(const ScoredToken& token);  // throws ValidationError for bad logprob
  void add(std::span<const ScoredToken> tokens);
  void merge(const NllAccumulator& other);

  std::uint64_t count(NllVariant v) const { return count_[index_of(v) - 1]; }
  double sum(NllVariant v) const { return sum_[index_of(v) - 1]; }
  double mean(NllVariant v) const;  // throws EmptySelectionError

 private:
  std::array<std::uint64_t, 6> count_{};
  std::array<double, 6> sum_{};
};

// Mean -logprob over the tokens selected by `variant`.
double variant_nll(std::span<const ScoredToken> tokens, NllVariant variant);

// Scored-token CSV: header `role,data_format,logprob[,document_initial]`.
std::vector<ScoredToken> read_scored_tokens(std::istream& in);

class UndefinedCorrelationError : public Error {
 public:
  using Error::Error;
};

// 1-based ranks with ties replaced by their average rank.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> x, std::span<const double> y);

// Pearson correlation of the average-ranked series. Requires equal lengths
// >= 3; throws UndefinedCorrelationError when either series is constant.
double spearman(std::span<const double> x, std::span<const double> y);

struct TrendPoint {
  double nll = 0.0;
  double metric = 0.0;
};

// metric = slope * nll + intercept, ordinary least squares.
struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;

  double predict(double nll) const { return slope * nll + intercept; }
  // Observed minus fitted: positive means above the regression line.
  double residual(const TrendPoint& p) const { return p.metric - predict(p.nll); }
};

// Throws FitError for < 2 points or a constant nll column.
TrendFit loglinear_trend(std::span<const TrendPoint> points);

struct MetricSeries {
  std::string model;
  std::map<int, double> nll;  // by variant index
  std::map<std::string, double> metrics;
};

struct SeriesTable {
  std::vector<int> variants;             // variant indices present, ascending
  std::vector<std::string> metric_names;  // in column order
  std::vector<MetricSeries> rows;
};

// CSV with a `model` column, NLL columns named nll_1 .. nll_6 (any subset),
// and every other column treated as a downstream metric.
SeriesTable read_series_csv(std::istream& in);

struct CorrelationCell {
  std::optional<double> rho;  // nullopt when undefined (constant column)
  std::string note;
};

struct CorrelationTable {
  std::vector<int> variants;
  std::vector<std::string> columns;
  std::vector<std::vector<CorrelationCell>> cells;  // [variant][column]
};

// Spearman rho between each requested NLL variant and each metric.
CorrelationTable correlation_table(const SeriesTable& table, std::span<const int> variants);

// Appends two columns summarizing `members`: "<name>:mean_abs" averages
// |rho| and "<name>:abs_mean" takes |mean rho|. A row is undefined when any
// member cell is. Throws ValidationError for unknown member columns.
void add_average_columns(CorrelationTable& table, const std::string& name,
                         std::span<const std::string> members);

// CSV with header `variant,<metrics...>`; undefined cells are written "nan".
// With absolute = true each rho is replaced by |rho|.
std::string correlation_csv(const CorrelationTable& table, bool absolute);

}  // namespace audiolm
