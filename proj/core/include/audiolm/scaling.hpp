#pragma once

// Compute-allocation mathematics: 6ND FLOP accounting, IsoFLOP sweeps,
// per-budget quadratic fits, power laws over the compute-optimal frontier,
// the parametric loss law L(N, D) = E + A / N^alpha + B / D^beta, and
// over-training analysis. Natural logs throughout.

#include <cstddef>
#include <cstdint>
#include <istream>
#include <string>
#include <string_view>
#include <vector>
#include <span>

#include "audiolm/errors.hpp"

namespace audiolm {

struct RunRecord {
  double n_params = 0.0;
  double d_tokens = 0.0;
  double compute = 0.0;
  double loss = 0.0;
};

// 6 * N * D. Throws DomainError for nonpositive input.
double flops(double n_params, double d_tokens);

// Parses `n_params,d_tokens,compute,loss` CSV (header required, columns in
// any order, compute column or cells optional and then derived). Supplied
// compute must match 6ND within 1%. Throws ParseError / ValidationError.
std::vector<RunRecord> read_runs_csv(std::istream& in);
std::vector<RunRecord> read_runs_csv_file(const std::string& path);
std::string runs_csv(std::span<const RunRecord> runs);

struct IsoFlopPoint {
  double n_params = 0.0;
  double d_tokens = 0.0;
};

// D_i = budget / (6 N_i).
std::vector<IsoFlopPoint> plan_isoflop(double budget, std::span<const double> model_sizes);

enum class FitAxis { kParams, kTokens };
std::string_view to_string(FitAxis axis);

// L = a (ln x)^2 + b ln x + c, minimized at x* = exp(-b / 2a).
struct QuadraticFit {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double argmin = 0.0;
  double min_loss = 0.0;
  double residual_rms = 0.0;
  double lo = 0.0;  // fitted axis range
  double hi = 0.0;
  bool extrapolated = false;  // argmin outside [lo, hi]

  double evaluate(double x) const;
};

// Unweighted least squares in ln x. Throws FitError for < 3 points or a
// non-convex fit (a <= 0).
QuadraticFit fit_log_quadratic(std::span<const double> axis_values,
                               std::span<const double> losses);

// Fits one budget's runs along N or D. Runs must share compute within
// budget_tolerance (relative to the geometric mean); throws FitError.
QuadraticFit fit_isoflop(std::span<const RunRecord> runs, FitAxis axis,
                         double budget_tolerance = 0.05);

struct BudgetGroup {
  double compute = 0.0;  // geometric mean of the members
  std::vector<RunRecord> runs;
};

// Clusters runs whose compute agrees within rel_tol, ordered by compute.
std::vector<BudgetGroup> group_by_budget(std::span<const RunRecord> runs,
                                         double rel_tol = 0.05);

// y = coefficient * x^exponent.
struct PowerLawFit {
  double coefficient = 0.0;
  double exponent = 0.0;
  double r2_log = 0.0;

  double evaluate(double x) const;
};

struct PowerLawPoint {
  double x = 0.0;
  double y = 0.0;
};

// OLS of ln y on ln x. Throws FitError for < 2 points, nonpositive values or
// identical x.
PowerLawFit fit_power_law(std::span<const PowerLawPoint> points);

struct FrontierPoint {
  double compute = 0.0;
  QuadraticFit by_params;
  QuadraticFit by_tokens;
  double n_star = 0.0;
  double d_star = 0.0;
  double loss_star = 0.0;  // minimum of the N-axis parabola
  std::size_t runs = 0;
};

std::vector<FrontierPoint> isoflop_frontier(std::span<const RunRecord> runs,
                                            double rel_tol = 0.05);

// N* = a_N C^b_N and D* = a_D C^b_D.
struct ScalingLaws {
  PowerLawFit params;
  PowerLawFit tokens;
};

ScalingLaws fit_scaling_laws(std::span<const FrontierPoint> frontier);

// Coefficients from a single anchor (N0, D*0) at C0 = 6 N0 D*0 with given
// exponents.
ScalingLaws calibrate_laws(double anchor_params, double anchor_tokens, double exponent_params,
                           double exponent_tokens);

struct ParametricFit {
  double E = 0.0;
  double A = 0.0;
  double B = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double r2_raw = 0.0;  // on raw loss values
  double r2_log = 0.0;  // on log loss values
  double objective = 0.0;
  std::size_t best_start = 0;
  std::size_t starts = 0;
  std::size_t converged_starts = 0;

  double predict(double n_params, double d_tokens) const;
};

// Multi-start grid over (ln A, ln B, ln E, alpha, beta). The default is the
// Chinchilla grid: alpha, beta in {0, 0.5, 1, 1.5, 2}, ln E in
// {-1, -0.5, 0, 0.5, 1, 1.5}, ln A, ln B in {0, 5, 10, 15, 20, 25}.
struct ParametricGrid {
  std::vector<double> log_a{0, 5, 10, 15, 20, 25};
  std::vector<double> log_b{0, 5, 10, 15, 20, 25};
  std::vector<double> log_e{-1, -0.5, 0, 0.5, 1, 1.5};
  std::vector<double> alpha{0, 0.5, 1, 1.5, 2};
  std::vector<double> beta{0, 0.5, 1, 1.5, 2};

  std::size_t size() const;
};

struct ParametricFitOptions {
  double huber_delta = 1e-3;
  ParametricGrid grid;
  std::size_t max_iterations = 3000;
  double gradient_tolerance = 1e-12;
  unsigned threads = 0;  // 0 = hardware concurrency
};

// Minimizes sum_i Huber_delta(lse(lnA - alpha lnN_i, lnB - beta lnD_i, lnE) - ln L_i)
// from every grid start and keeps the lowest objective (ties: lowest start
// index). Requires >= 6 runs spanning more than a decade in both N and D.
// Throws FitError, with per-start diagnostics when no start converges.
ParametricFit fit_parametric(std::span<const RunRecord> runs,
                             const ParametricFitOptions& options = {});

double predict_loss(const ParametricFit& fit, double n_params, double d_tokens);

struct DerivedExponents {
  double params = 0.0;  // beta / (alpha + beta)
  double tokens = 0.0;  // alpha / (alpha + beta)
};

// Throws DomainError for nonpositive input.
DerivedExponents derived_exponents(double alpha, double beta);

// Closed-form compute-optimal laws implied by a parametric fit:
// N_opt = G (C/6)^{beta/(alpha+beta)}, D_opt = G^{-1} (C/6)^{alpha/(alpha+beta)},
// G = (alpha A / (beta B))^{1/(alpha+beta)}. These satisfy 6 N_opt D_opt = C.
ScalingLaws laws_from_parametric(const ParametricFit& fit);

struct Allocation {
  double n_params = 0.0;
  double d_tokens = 0.0;
  double tokens_per_param = 0.0;
  double flops_ratio = 0.0;  // 6 N* D* / budget
  bool consistent = true;    // |flops_ratio - 1| <= 0.2
};

Allocation optimal_allocation(const ScalingLaws& laws, double budget);

// D*(N): the compute-optimal token count for a model of size N, via the
// budget at which N is optimal, C_opt(N) = (N / a_N)^{1 / b_N}.
double optimal_tokens_for(const ScalingLaws& laws, double n_params);

// K = D / D*(N).
double overtraining_factor(const ScalingLaws& laws, double n_params, double d_tokens);
// K = D / D* for a given D*.
double overtraining_factor(double d_tokens, double optimal_tokens);

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

struct OvertrainedPoint {
  double budget = 0.0;
  double overtraining = 1.0;
  double n_params = 0.0;
  double d_tokens = 0.0;
  double loss = 0.0;
};

// Finds N with 6 N D = budget and D = K D*(N) by bisection on ln N over
// [0, ln(budget / 6)], then evaluates the parametric law there. Throws
// DomainError for budget <= 0 or K < 1, InfeasibleError when the bracket does
// not contain a root.
OvertrainedPoint loss_at_overtraining(const ParametricFit& fit, const ScalingLaws& laws,
                                      double budget, double overtraining);

// Key-value persistence for fit files consumed by `predict`.
std::string parametric_fit_kv(const ParametricFit& fit);
ParametricFit parametric_fit_from_kv(std::string_view text);
std::string scaling_laws_kv(const ScalingLaws& laws);
ScalingLaws scaling_laws_from_kv(std::string_view text);

}  // namespace audiolm
