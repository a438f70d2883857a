#pragma once

// Limited-memory BFGS with a backtracking Armijo line search. Small and
// dependency-free; sized for the 5-parameter loss-law fits in scaling.hpp.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace audiolm {

enum class LbfgsStatus {
  kGradientConverged,
  kStalled,  // relative objective change below tolerance
  kMaxIterations,
  kLineSearchFailed,
  kNonFinite,
};

std::string_view to_string(LbfgsStatus status);

struct LbfgsOptions {
  std::size_t history = 10;
  std::size_t max_iterations = 2000;
  double gradient_tolerance = 1e-10;  // on the infinity norm
  double relative_tolerance = 1e-15;  // on |f_k - f_{k+1}| / max(|f_k|, 1e-300)
  std::size_t stall_iterations = 5;   // consecutive stalls before stopping
  double armijo = 1e-4;
  std::size_t max_backtracks = 60;
};

struct LbfgsResult {
  std::vector<double> x;
  double value = 0.0;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  LbfgsStatus status = LbfgsStatus::kMaxIterations;

  bool converged() const {
    return status == LbfgsStatus::kGradientConverged || status == LbfgsStatus::kStalled;
  }
};

// Objective writes the gradient into its second argument and returns f(x).
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

LbfgsResult minimize_lbfgs(const Objective& f, std::vector<double> x0,
                           const LbfgsOptions& options = {});

}  // namespace audiolm
