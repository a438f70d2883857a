#include "audiolm/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace audiolm {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (const double x : v) m = std::max(m, std::fabs(x));
  return m;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Pair {
  std::vector<double> s;
  std::vector<double> y;
  double rho;
};

}  // namespace

std::string_view to_string(LbfgsStatus status) {
  switch (status) {
    case LbfgsStatus::kGradientConverged:
      return "gradient-converged";
    case LbfgsStatus::kStalled:
      return "stalled";
    case LbfgsStatus::kMaxIterations:
      return "max-iterations";
    case LbfgsStatus::kLineSearchFailed:
      return "line-search-failed";
    case LbfgsStatus::kNonFinite:
      return "non-finite";
  }
  return "unknown";
}

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0,
                           const LbfgsOptions& options) {
  const std::size_t n = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);
  std::vector<double> g(n), x_new(n), g_new(n), dir(n), alpha(options.history);
  std::deque<Pair> memory;

  result.value = f(result.x, g);
  ++result.evaluations;
  if (!std::isfinite(result.value) || !all_finite(g)) {
    result.status = LbfgsStatus::kNonFinite;
    return result;
  }

  std::size_t stalls = 0;
  for (result.iterations = 0; result.iterations < options.max_iterations; ++result.iterations) {
    result.gradient_norm = inf_norm(g);
    if (result.gradient_norm <= options.gradient_tolerance) {
      result.status = LbfgsStatus::kGradientConverged;
      return result;
    }

    // Two-loop recursion: dir = -H g.
    for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
    for (std::size_t k = memory.size(); k-- > 0;) {
      alpha[k] = memory[k].rho * dot(memory[k].s, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] -= alpha[k] * memory[k].y[i];
    }
    if (!memory.empty()) {
      const auto& last = memory.back();
      const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (auto& d : dir) d *= gamma;
    }
    for (std::size_t k = 0; k < memory.size(); ++k) {
      const double beta = memory[k].rho * dot(memory[k].y, dir);
      for (std::size_t i = 0; i < n; ++i) dir[i] += (alpha[k] - beta) * memory[k].s[i];
    }

    double slope = dot(g, dir);
    if (!(slope < 0.0)) {
      // Not a descent direction; restart from steepest descent.
      memory.clear();
      for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
      slope = dot(g, dir);
    }

    double step = memory.empty() ? std::min(1.0, 1.0 / std::max(inf_norm(g), 1e-300)) : 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (std::size_t bt = 0; bt < options.max_backtracks; ++bt) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = result.x[i] + step * dir[i];
      f_new = f(x_new, g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && all_finite(g_new) &&
          f_new <= result.value + options.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.status = LbfgsStatus::kLineSearchFailed;
      return result;
    }

    Pair p{std::vector<double>(n), std::vector<double>(n), 0.0};
    for (std::size_t i = 0; i < n; ++i) {
      p.s[i] = x_new[i] - result.x[i];
      p.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-300 * std::max(1.0, dot(p.y, p.y))) {
      p.rho = 1.0 / sy;
      memory.push_back(std::move(p));
      if (memory.size() > options.history) memory.pop_front();
    }

    const double change = std::fabs(result.value - f_new);
    const double scale = std::max(std::fabs(result.value), 1e-300);
    std::swap(result.x, x_new);
    std::swap(g, g_new);
    result.value = f_new;

    if (change <= options.relative_tolerance * scale) {
      if (++stalls >= options.stall_iterations) {
        result.gradient_norm = inf_norm(g);
        result.status = LbfgsStatus::kStalled;
        return result;
      }
    } else {
      stalls = 0;
    }
  }
  result.gradient_norm = inf_norm(g);
  result.status = LbfgsStatus::kMaxIterations;
  return result;
}

}  // namespace audiolm
