#include "audiolm/scaling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "audiolm/kv.hpp"
#include "audiolm/lbfgs.hpp"

namespace audiolm {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double r_squared(std::span<const double> observed, std::span<const double> predicted) {
  const double m = mean(observed);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    ss_res += (observed[i] - predicted[i]) * (observed[i] - predicted[i]);
    ss_tot += (observed[i] - m) * (observed[i] - m);
  }
  if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
  return 1.0 - ss_res / ss_tot;
}

// Solves the 3x3 system in place with partial pivoting; false if singular.
bool solve3(std::array<std::array<double, 4>, 3>& m) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
    }
    if (std::fabs(m[pivot][col]) < 1e-300) return false;
    std::swap(m[col], m[pivot]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double factor = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= factor * m[col][k];
    }
  }
  for (int r = 0; r < 3; ++r) m[r][3] /= m[r][r];
  return true;
}

}  // namespace

double flops(double n_params, double d_tokens) {
  if (!positive_finite(n_params) || !positive_finite(d_tokens)) {
    throw DomainError("flops: parameter and token counts must be positive");
  }
  return 6.0 * n_params * d_tokens;
}

std::vector<RunRecord> read_runs_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!kv::trim(line).empty()) {
      for (auto& h : kv::split(line, ',')) header.emplace_back(kv::trim(h));
      break;
    }
  }
  if (header.empty()) throw ParseError(line_no, "", "missing CSV header");
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"n_params", "d_tokens", "loss"}) {
    if (!col.count(required)) throw ParseError(1, required, "missing column in header");
  }
  const bool has_compute = col.count("compute") > 0;

  std::vector<RunRecord> runs;
  while (std::getline(in, line)) {
    ++line_no;
    if (kv::trim(line).empty()) continue;
    const auto cells = kv::split(line, ',');
    if (cells.size() != header.size()) {
      throw ParseError(line_no, "", "expected " + std::to_string(header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
    }
    const auto number = [&](const char* name) {
      const auto v = kv::parse_double(cells[col.at(name)]);
      if (!v) throw ParseError(line_no, name, "not a number: '" + cells[col.at(name)] + "'");
      if (!positive_finite(*v)) {
        throw ValidationError("line " + std::to_string(line_no) + ": " + name +
                              " must be positive");
      }
      return *v;
    };
    RunRecord r;
    r.n_params = number("n_params");
    r.d_tokens = number("d_tokens");
    r.loss = number("loss");
    const double derived = 6.0 * r.n_params * r.d_tokens;
    if (has_compute && !kv::trim(cells[col.at("compute")]).empty()) {
      r.compute = number("compute");
      if (std::fabs(r.compute / derived - 1.0) > 0.01) {
        throw ValidationError("line " + std::to_string(line_no) + ": compute " +
                              kv::format_double(r.compute) + " differs from 6ND = " +
                              kv::format_double(derived) + " by more than 1%");
      }
    } else {
      r.compute = derived;
    }
    runs.push_back(r);
  }
  return runs;
}

std::vector<RunRecord> read_runs_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open runs CSV '" + path + "'");
  return read_runs_csv(in);
}

std::string runs_csv(std::span<const RunRecord> runs) {
  std::string out = "n_params,d_tokens,compute,loss\n";
  for (const auto& r : runs) {
    out += kv::format_double(r.n_params) + ',' + kv::format_double(r.d_tokens) + ',' +
           kv::format_double(r.compute) + ',' + kv::format_double(r.loss) + '\n';
  }
  return out;
}

std::vector<IsoFlopPoint> plan_isoflop(double budget, std::span<const double> model_sizes) {
  if (!positive_finite(budget)) throw DomainError("plan_isoflop: budget must be positive");
  std::vector<IsoFlopPoint> plan;
  plan.reserve(model_sizes.size());
  for (const double n : model_sizes) {
    if (!positive_finite(n)) throw DomainError("plan_isoflop: model sizes must be positive");
    plan.push_back({n, budget / (6.0 * n)});
  }
  return plan;
}

std::string_view to_string(FitAxis axis) { return axis == FitAxis::kParams ? "N" : "D"; }

double QuadraticFit::evaluate(double x) const {
  const double u = std::log(x);
  return a * u * u + b * u + c;
}

QuadraticFit fit_log_quadratic(std::span<const double> axis_values,
                               std::span<const double> losses) {
  if (axis_values.size() != losses.size()) throw FitError("quadratic fit: size mismatch");
  const auto n = axis_values.size();
  if (n < 3) throw FitError("quadratic fit: need at least 3 points, got " + std::to_string(n));

  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!positive_finite(axis_values[i]) || !std::isfinite(losses[i])) {
      throw FitError("quadratic fit: axis values must be positive and losses finite");
    }
    u[i] = std::log(axis_values[i]);
  }
  const double mu = mean(u);
  double spread = 0.0;
  for (auto& v : u) {
    v -= mu;
    spread = std::max(spread, std::fabs(v));
  }
  if (spread == 0.0) throw FitError("quadratic fit: axis values are all equal");

  // Normal equations for y = p v^2 + q v + r in centred v = ln x - mu, with
  // v scaled to [-1, 1] for conditioning.
  std::array<std::array<double, 4>, 3> m{};
  for (std::size_t i = 0; i < n; ++i) {
    const double v = u[i] / spread;
    const std::array<double, 3> phi{v * v, v, 1.0};
    for (int r = 0; r < 3; ++r) {
      for (int k = 0; k < 3; ++k) m[r][k] += phi[r] * phi[k];
      m[r][3] += phi[r] * losses[i];
    }
  }
  if (!solve3(m)) throw FitError("quadratic fit: fewer than 3 distinct axis values");
  const double p = m[0][3] / (spread * spread);
  const double q = m[1][3] / spread;
  const double r = m[2][3];

  const auto [ymin, ymax] = std::minmax_element(losses.begin(), losses.end());
  const double y_scale = std::max({*ymax - *ymin, std::fabs(*ymax), std::fabs(*ymin), 1e-300});
  if (!(p * spread * spread > 1e-12 * y_scale)) {
    throw FitError("quadratic fit is not convex (a = " + kv::format_double(p) + ")");
  }

  QuadraticFit fit;
  fit.a = p;
  fit.b = q - 2.0 * p * mu;
  fit.c = p * mu * mu - q * mu + r;
  const double v_star = -q / (2.0 * p);
  fit.argmin = std::exp(mu + v_star);
  fit.min_loss = r - q * q / (4.0 * p);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double pred = p * u[i] * u[i] + q * u[i] + r;
    ss += (losses[i] - pred) * (losses[i] - pred);
  }
  fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
  const auto [lo, hi] = std::minmax_element(axis_values.begin(), axis_values.end());
  fit.lo = *lo;
  fit.hi = *hi;
  fit.extrapolated = fit.argmin < fit.lo || fit.argmin > fit.hi;
  return fit;
}

QuadraticFit fit_isoflop(std::span<const RunRecord> runs, FitAxis axis,
                         double budget_tolerance) {
  if (runs.size() < 3) {
    throw FitError("isoflop fit: need at least 3 runs, got " + std::to_string(runs.size()));
  }
  double log_sum = 0.0;
  for (const auto& r : runs) {
    if (!positive_finite(r.compute)) throw FitError("isoflop fit: compute must be positive");
    log_sum += std::log(r.compute);
  }
  const double centre = std::exp(log_sum / static_cast<double>(runs.size()));
  for (const auto& r : runs) {
    if (std::fabs(r.compute / centre - 1.0) > budget_tolerance) {
      throw FitError("isoflop fit: runs span more than one compute budget");
    }
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& r : runs) {
    xs.push_back(axis == FitAxis::kParams ? r.n_params : r.d_tokens);
    ys.push_back(r.loss);
  }
  return fit_log_quadratic(xs, ys);
}

std::vector<BudgetGroup> group_by_budget(std::span<const RunRecord> runs, double rel_tol) {
  std::vector<RunRecord> sorted(runs.begin(), runs.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RunRecord& x, const RunRecord& y) { return x.compute < y.compute; });
  std::vector<BudgetGroup> groups;
  for (const auto& r : sorted) {
    if (groups.empty() || r.compute > groups.back().runs.front().compute * (1.0 + rel_tol)) {
      groups.push_back({0.0, {}});
    }
    groups.back().runs.push_back(r);
  }
  for (auto& g : groups) {
    double s = 0.0;
    for (const auto& r : g.runs) s += std::log(r.compute);
    g.compute = std::exp(s / static_cast<double>(g.runs.size()));
  }
  return groups;
}

double PowerLawFit::evaluate(double x) const { return coefficient * std::pow(x, exponent); }

PowerLawFit fit_power_law(std::span<const PowerLawPoint> points) {
  if (points.size() < 2) {
    throw FitError("power-law fit: need at least 2 points, got " + std::to_string(points.size()));
  }
  std::vector<double> lx;
  std::vector<double> ly;
  for (const auto& p : points) {
    if (!positive_finite(p.x) || !positive_finite(p.y)) {
      throw FitError("power-law fit: values must be positive");
    }
    lx.push_back(std::log(p.x));
    ly.push_back(std::log(p.y));
  }
  const double mx = mean(lx);
  const double my = mean(ly);
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw FitError("power-law fit: all x values are equal");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  fit.coefficient = std::exp(intercept);
  std::vector<double> pred(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) pred[i] = intercept + fit.exponent * lx[i];
  fit.r2_log = r_squared(ly, pred);
  return fit;
}

std::vector<FrontierPoint> isoflop_frontier(std::span<const RunRecord> runs, double rel_tol) {
  std::vector<FrontierPoint> frontier;
  for (const auto& g : group_by_budget(runs, rel_tol)) {
    FrontierPoint p;
    p.compute = g.compute;
    p.runs = g.runs.size();
    p.by_params = fit_isoflop(g.runs, FitAxis::kParams, rel_tol);
    p.by_tokens = fit_isoflop(g.runs, FitAxis::kTokens, rel_tol);
    p.n_star = p.by_params.argmin;
    p.d_star = p.by_tokens.argmin;
    p.loss_star = p.by_params.min_loss;
    frontier.push_back(p);
  }
  return frontier;
}

ScalingLaws fit_scaling_laws(std::span<const FrontierPoint> frontier) {
  std::vector<PowerLawPoint> n_pts;
  std::vector<PowerLawPoint> d_pts;
  for (const auto& p : frontier) {
    n_pts.push_back({p.compute, p.n_star});
    d_pts.push_back({p.compute, p.d_star});
  }
  return {fit_power_law(n_pts), fit_power_law(d_pts)};
}

ScalingLaws calibrate_laws(double anchor_params, double anchor_tokens, double exponent_params,
                           double exponent_tokens) {
  const double c0 = flops(anchor_params, anchor_tokens);
  if (!positive_finite(exponent_params) || !positive_finite(exponent_tokens)) {
    throw DomainError("calibrate_laws: exponents must be positive");
  }
  ScalingLaws laws;
  laws.params = {anchor_params / std::pow(c0, exponent_params), exponent_params, 1.0};
  laws.tokens = {anchor_tokens / std::pow(c0, exponent_tokens), exponent_tokens, 1.0};
  return laws;
}

double ParametricFit::predict(double n_params, double d_tokens) const {
  return E + A / std::pow(n_params, alpha) + B / std::pow(d_tokens, beta);
}

double predict_loss(const ParametricFit& fit, double n_params, double d_tokens) {
  return fit.predict(n_params, d_tokens);
}

std::size_t ParametricGrid::size() const {
  return log_a.size() * log_b.size() * log_e.size() * alpha.size() * beta.size();
}

namespace {

// Objective in centred coordinates x = (a', b', e, alpha, beta) where
// a' = ln A - alpha * mean(ln N) and b' = ln B - beta * mean(ln D). The shift
// decorrelates intercept and slope without changing the minimizer.
struct HuberLogLoss {
  std::vector<double> cn;  // ln N - mean
  std::vector<double> cd;  // ln D - mean
  std::vector<double> ll;  // ln L
  double delta;

  double operator()(std::span<const double> x, std::span<double> grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < ll.size(); ++i) {
      const double t1 = x[0] - x[3] * cn[i];
      const double t2 = x[1] - x[4] * cd[i];
      const double t3 = x[2];
      const double m = std::max({t1, t2, t3});
      const double e1 = std::exp(t1 - m);
      const double e2 = std::exp(t2 - m);
      const double e3 = std::exp(t3 - m);
      const double s = e1 + e2 + e3;
      const double r = m + std::log(s) - ll[i];
      double psi;
      if (std::fabs(r) <= delta) {
        total += 0.5 * r * r;
        psi = r;
      } else {
        total += delta * (std::fabs(r) - 0.5 * delta);
        psi = r > 0 ? delta : -delta;
      }
      const double w1 = psi * e1 / s;
      const double w2 = psi * e2 / s;
      grad[0] += w1;
      grad[1] += w2;
      grad[2] += psi * e3 / s;
      grad[3] -= w1 * cn[i];
      grad[4] -= w2 * cd[i];
    }
    return total;
  }
};

struct StartOutcome {
  LbfgsResult result;
  bool valid = false;
};

}  // namespace

ParametricFit fit_parametric(std::span<const RunRecord> runs, const ParametricFitOptions& options) {
  if (runs.size() < 6) {
    throw FitError("parametric fit: need at least 6 runs, got " + std::to_string(runs.size()));
  }
  double n_lo = INFINITY, n_hi = 0.0, d_lo = INFINITY, d_hi = 0.0;
  HuberLogLoss loss{{}, {}, {}, options.huber_delta};
  for (const auto& r : runs) {
    if (!positive_finite(r.n_params) || !positive_finite(r.d_tokens) || !positive_finite(r.loss)) {
      throw FitError("parametric fit: N, D and loss must be positive");
    }
    n_lo = std::min(n_lo, r.n_params);
    n_hi = std::max(n_hi, r.n_params);
    d_lo = std::min(d_lo, r.d_tokens);
    d_hi = std::max(d_hi, r.d_tokens);
    loss.cn.push_back(std::log(r.n_params));
    loss.cd.push_back(std::log(r.d_tokens));
    loss.ll.push_back(std::log(r.loss));
  }
  if (n_hi / n_lo <= 10.0) {
    throw FitError("parametric fit: model sizes span " + kv::format_double(n_hi / n_lo) +
                   "x, need more than a decade to identify alpha");
  }
  if (d_hi / d_lo <= 10.0) {
    throw FitError("parametric fit: token counts span " + kv::format_double(d_hi / d_lo) +
                   "x, need more than a decade to identify beta");
  }
  const double mu_n = mean(loss.cn);
  const double mu_d = mean(loss.cd);
  for (auto& v : loss.cn) v -= mu_n;
  for (auto& v : loss.cd) v -= mu_d;

  const auto& grid = options.grid;
  std::vector<std::array<double, 5>> starts;
  starts.reserve(grid.size());
  for (const double a : grid.log_a)
    for (const double b : grid.log_b)
      for (const double e : grid.log_e)
        for (const double al : grid.alpha)
          for (const double be : grid.beta) starts.push_back({a, b, e, al, be});
  if (starts.empty()) throw FitError("parametric fit: empty start grid");

  LbfgsOptions lopts;
  lopts.max_iterations = options.max_iterations;
  lopts.gradient_tolerance = options.gradient_tolerance;
  const Objective objective = [&loss](std::span<const double> x, std::span<double> g) {
    return loss(x, g);
  };

  std::vector<StartOutcome> outcomes(starts.size());
  const auto run_start = [&](std::size_t i) {
    const auto& s = starts[i];
    std::vector<double> x0{s[0] - s[3] * mu_n, s[1] - s[4] * mu_d, s[2], s[3], s[4]};
    auto res = minimize_lbfgs(objective, std::move(x0), lopts);
    const bool ok = res.converged() && std::isfinite(res.value) && res.x[3] > 0.0 &&
                    res.x[4] > 0.0;
    outcomes[i] = {std::move(res), ok};
  };

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(starts.size())));
  if (threads == 1) {
    for (std::size_t i = 0; i < starts.size(); ++i) run_start(i);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < starts.size(); i += threads) run_start(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::size_t best = starts.size();
  std::size_t converged = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (!outcomes[i].valid) continue;
    ++converged;
    if (best == starts.size() || outcomes[i].result.value < outcomes[best].result.value) best = i;
  }
  if (best == starts.size()) {
    std::map<std::string_view, std::size_t> by_status;
    std::size_t nonpositive = 0;
    for (const auto& o : outcomes) {
      ++by_status[to_string(o.result.status)];
      if (o.result.converged() && !(o.result.x[3] > 0.0 && o.result.x[4] > 0.0)) ++nonpositive;
    }
    std::string diag;
    for (const auto& [status, count] : by_status) {
      diag += ' ' + std::string(status) + '=' + std::to_string(count);
    }
    throw FitError("parametric fit: no convergent start out of " + std::to_string(starts.size()) +
                   " (" + diag.substr(1) + "; nonpositive exponents=" +
                   std::to_string(nonpositive) + ")");
  }

  const auto& x = outcomes[best].result.x;
  ParametricFit fit;
  fit.alpha = x[3];
  fit.beta = x[4];
  fit.A = std::exp(x[0] + fit.alpha * mu_n);
  fit.B = std::exp(x[1] + fit.beta * mu_d);
  fit.E = std::exp(x[2]);
  fit.objective = outcomes[best].result.value;
  fit.best_start = best;
  fit.starts = starts.size();
  fit.converged_starts = converged;

  std::vector<double> observed, predicted, log_observed, log_predicted;
  for (const auto& r : runs) {
    const double p = fit.predict(r.n_params, r.d_tokens);
    observed.push_back(r.loss);
    predicted.push_back(p);
    log_observed.push_back(std::log(r.loss));
    log_predicted.push_back(std::log(p));
  }
  fit.r2_raw = r_squared(observed, predicted);
  fit.r2_log = r_squared(log_observed, log_predicted);
  return fit;
}

DerivedExponents derived_exponents(double alpha, double beta) {
  if (!positive_finite(alpha) || !positive_finite(beta)) {
    throw DomainError("derived_exponents: alpha and beta must be positive");
  }
  const double params = beta / (alpha + beta);
  return {params, 1.0 - params};
}

ScalingLaws laws_from_parametric(const ParametricFit& fit) {
  const auto exps = derived_exponents(fit.alpha, fit.beta);
  if (!positive_finite(fit.A) || !positive_finite(fit.B)) {
    throw DomainError("laws_from_parametric: A and B must be positive");
  }
  const double g = std::pow(fit.alpha * fit.A / (fit.beta * fit.B), 1.0 / (fit.alpha + fit.beta));
  ScalingLaws laws;
  laws.params = {g * std::pow(6.0, -exps.params), exps.params, 1.0};
  laws.tokens = {std::pow(6.0, -exps.tokens) / g, exps.tokens, 1.0};
  return laws;
}

Allocation optimal_allocation(const ScalingLaws& laws, double budget) {
  if (!positive_finite(budget)) throw DomainError("optimal_allocation: budget must be positive");
  Allocation a;
  a.n_params = laws.params.evaluate(budget);
  a.d_tokens = laws.tokens.evaluate(budget);
  a.tokens_per_param = a.d_tokens / a.n_params;
  a.flops_ratio = 6.0 * a.n_params * a.d_tokens / budget;
  a.consistent = std::fabs(a.flops_ratio - 1.0) <= 0.2;
  return a;
}

double optimal_tokens_for(const ScalingLaws& laws, double n_params) {
  if (!positive_finite(n_params)) throw DomainError("optimal_tokens_for: N must be positive");
  if (!positive_finite(laws.params.exponent) || !positive_finite(laws.params.coefficient)) {
    throw DomainError("optimal_tokens_for: parameter law must be positive");
  }
  const double c_opt = std::pow(n_params / laws.params.coefficient, 1.0 / laws.params.exponent);
  return laws.tokens.evaluate(c_opt);
}

double overtraining_factor(const ScalingLaws& laws, double n_params, double d_tokens) {
  if (!positive_finite(d_tokens)) throw DomainError("overtraining_factor: D must be positive");
  return d_tokens / optimal_tokens_for(laws, n_params);
}

double overtraining_factor(double d_tokens, double optimal_tokens) {
  if (!positive_finite(d_tokens) || !positive_finite(optimal_tokens)) {
    throw DomainError("overtraining_factor: token counts must be positive");
  }
  return d_tokens / optimal_tokens;
}

OvertrainedPoint loss_at_overtraining(const ParametricFit& fit, const ScalingLaws& laws,
                                      double budget, double overtraining) {
  if (!positive_finite(budget)) throw DomainError("loss_at_overtraining: budget must be positive");
  if (!(std::isfinite(overtraining) && overtraining >= 1.0)) {
    throw DomainError("loss_at_overtraining: K must be >= 1");
  }
  if (!positive_finite(laws.params.exponent) || !positive_finite(laws.tokens.coefficient)) {
    throw DomainError("loss_at_overtraining: scaling laws must be positive");
  }
  const double ln_an = std::log(laws.params.coefficient);
  const double ln_ad = std::log(laws.tokens.coefficient);
  const double ratio = laws.tokens.exponent / laws.params.exponent;
  const double ln_target = std::log(budget / 6.0) - std::log(overtraining);
  // ln(N * D*(N)) - ln(budget / (6K)); increasing in ln N.
  const auto excess = [&](double ln_n) {
    return ln_n + ln_ad + ratio * (ln_n - ln_an) - ln_target;
  };

  double lo = 0.0;
  double hi = std::log(budget / 6.0);
  const double f_lo = excess(lo);
  const double f_hi = excess(hi);
  if (!(hi > lo) || !(f_lo <= 0.0 && f_hi >= 0.0)) {
    throw InfeasibleError("loss_at_overtraining: no root for N in [1, " +
                          kv::format_double(budget / 6.0) + "] (excess " +
                          kv::format_double(f_lo) + " .. " + kv::format_double(f_hi) + ")");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) < 0.0 ? lo : hi) = mid;
  }
  OvertrainedPoint p;
  p.budget = budget;
  p.overtraining = overtraining;
  p.n_params = std::exp(0.5 * (lo + hi));
  p.d_tokens = budget / (6.0 * p.n_params);
  p.loss = fit.predict(p.n_params, p.d_tokens);
  return p;
}

std::string parametric_fit_kv(const ParametricFit& fit) {
  kv::Document doc;
  doc.set("E", fit.E);
  doc.set("A", fit.A);
  doc.set("B", fit.B);
  doc.set("alpha", fit.alpha);
  doc.set("beta", fit.beta);
  doc.set("r2_raw", fit.r2_raw);
  doc.set("r2_log", fit.r2_log);
  doc.set("objective", fit.objective);
  doc.set_int("starts", static_cast<std::int64_t>(fit.starts));
  doc.set_int("converged_starts", static_cast<std::int64_t>(fit.converged_starts));
  doc.set_int("best_start", static_cast<std::int64_t>(fit.best_start));
  if (fit.alpha > 0 && fit.beta > 0) {
    const auto exps = derived_exponents(fit.alpha, fit.beta);
    doc.set("exponent_params", exps.params);
    doc.set("exponent_tokens", exps.tokens);
  }
  return doc.str();
}

ParametricFit parametric_fit_from_kv(std::string_view text) {
  const auto doc = kv::Document::parse(text);
  ParametricFit fit;
  fit.E = doc.get_double("E");
  fit.A = doc.get_double("A");
  fit.B = doc.get_double("B");
  fit.alpha = doc.get_double("alpha");
  fit.beta = doc.get_double("beta");
  fit.r2_raw = doc.get_double_opt("r2_raw").value_or(0.0);
  fit.r2_log = doc.get_double_opt("r2_log").value_or(0.0);
  fit.objective = doc.get_double_opt("objective").value_or(0.0);
  for (const double v : {fit.E, fit.A, fit.B, fit.alpha, fit.beta}) {
    if (!positive_finite(v)) throw ValidationError("parametric fit constants must be positive");
  }
  return fit;
}

std::string scaling_laws_kv(const ScalingLaws& laws) {
  kv::Document doc;
  doc.set("params.coefficient", laws.params.coefficient);
  doc.set("params.exponent", laws.params.exponent);
  doc.set("params.r2_log", laws.params.r2_log);
  doc.set("tokens.coefficient", laws.tokens.coefficient);
  doc.set("tokens.exponent", laws.tokens.exponent);
  doc.set("tokens.r2_log", laws.tokens.r2_log);
  return doc.str();
}

ScalingLaws scaling_laws_from_kv(std::string_view text) {
  const auto doc = kv::Document::parse(text);
  ScalingLaws laws;
  laws.params = {doc.get_double("params.coefficient"), doc.get_double("params.exponent"),
                 doc.get_double_opt("params.r2_log").value_or(0.0)};
  laws.tokens = {doc.get_double("tokens.coefficient"), doc.get_double("tokens.exponent"),
                 doc.get_double_opt("tokens.r2_log").value_or(0.0)};
  return laws;
}

}  // namespace audiolm
