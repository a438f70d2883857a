#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "audiolm/lbfgs.hpp"
#include "audiolm/scaling.hpp"
#include "support.hpp"

namespace audiolm {
namespace {

// Uncentred least-squares oracle for y = a u^2 + b u + c, solved in long
// double by Cramer's rule.
std::array<long double, 3> quadratic_oracle(const std::vector<double>& x,
                                            const std::vector<double>& y) {
  long double s[5] = {}, t[3] = {};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double u = std::log(static_cast<long double>(x[i]));
    long double p = 1;
    for (int k = 0; k < 5; ++k, p *= u) s[k] += p;
    t[0] += y[i];
    t[1] += u * y[i];
    t[2] += u * u * y[i];
  }
  // Rows: [s4 s3 s2 | t2], [s3 s2 s1 | t1], [s2 s1 s0 | t0]
  const auto det = [](long double a, long double b, long double c, long double d, long double e,
                      long double f, long double g, long double h, long double i) {
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  };
  const long double D = det(s[4], s[3], s[2], s[3], s[2], s[1], s[2], s[1], s[0]);
  const long double A = det(t[2], s[3], s[2], t[1], s[2], s[1], t[0], s[1], s[0]);
  const long double B = det(s[4], t[2], s[2], s[3], t[1], s[1], s[2], t[0], s[0]);
  const long double C = det(s[4], s[3], t[2], s[3], s[2], t[1], s[2], s[1], t[0]);
  return {A / D, B / D, C / D};
}

TEST(Flops, SixND) {
  EXPECT_EQ(flops(1.7e9, 30e9), 3.06e20);
  EXPECT_THROW(flops(0, 1), DomainError);
  EXPECT_THROW(flops(1, -1), DomainError);
}

TEST(PlanIsoflop, TokensFromBudget) {
  const std::vector<double> sizes{1e8, 2e8, 4e8};
  const auto plan = plan_isoflop(6e18, sizes);
  ASSERT_EQ(plan.size(), 3u);
  for (const auto& p : plan) EXPECT_DOUBLE_EQ(6 * p.n_params * p.d_tokens, 6e18);
  EXPECT_THROW(plan_isoflop(-1, sizes), DomainError);
}

TEST(RunsCsv, ColumnsAnyOrderComputeOptional) {
  std::istringstream in("loss,d_tokens,n_params\n3.5,1e9,1e8\n\n3.4,2e9,1e8\n");
  const auto runs = read_runs_csv(in);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_DOUBLE_EQ(runs[0].compute, 6e17);
  EXPECT_DOUBLE_EQ(runs[1].loss, 3.4);
}

TEST(RunsCsv, RoundTripAndErrors) {
  const auto runs = test::synthetic_sweep();
  std::istringstream in(runs_csv(runs));
  const auto back = read_runs_csv(in);
  ASSERT_EQ(back.size(), runs.size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    EXPECT_EQ(back[i].n_params, runs[i].n_params);
    EXPECT_EQ(back[i].loss, runs[i].loss);
  }
  std::istringstream missing("n_params,loss\n1,2\n");
  EXPECT_THROW(read_runs_csv(missing), ParseError);
  std::istringstream garbage("n_params,d_tokens,loss\n1e8,abc,3\n");
  try {
    read_runs_csv(garbage);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "d_tokens");
  }
  std::istringstream bad_compute("n_params,d_tokens,compute,loss\n1e8,1e9,7e17,3\n");
  EXPECT_THROW(read_runs_csv(bad_compute), ValidationError);
  std::istringstream ragged("n_params,d_tokens,loss\n1e8,1e9\n");
  EXPECT_THROW(read_runs_csv(ragged), ParseError);
  std::istringstream negative("n_params,d_tokens,loss\n-1e8,1e9,3\n");
  EXPECT_THROW(read_runs_csv(negative), ValidationError);
}

TEST(QuadraticFit, ExactRecovery) {
  std::vector<double> x, y;
  for (int i = 0; i < 9; ++i) {
    x.push_back(1e8 * std::pow(2.0, i));
    const double u = std::log(x.back());
    y.push_back(0.05 * u * u - 2.0 * u + 25.0);
  }
  const auto fit = fit_log_quadratic(x, y);
  EXPECT_NEAR(fit.a, 0.05, 1e-9);
  EXPECT_NEAR(fit.b, -2.0, 1e-7);
  EXPECT_NEAR(fit.c, 25.0, 1e-5);
  EXPECT_NEAR(std::log(fit.argmin), 20.0, 1e-7);
  EXPECT_NEAR(fit.min_loss, 25.0 - 0.05 * 400, 1e-7);
  EXPECT_LT(fit.residual_rms, 1e-9);
  EXPECT_FALSE(fit.extrapolated);
}

TEST(QuadraticFit, MatchesLeastSquaresOracleOnNoisyData) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 0.01);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
      x.push_back(3e7 * std::pow(1.6, i));
      const double u = std::log(x.back()) - 20.0;
      y.push_back(0.03 * u * u + 0.1 * u + 3.0 + noise(rng));
    }
    const auto fit = fit_log_quadratic(x, y);
    const auto ref = quadratic_oracle(x, y);
    EXPECT_NEAR(fit.a, static_cast<double>(ref[0]), 1e-8);
    EXPECT_NEAR(fit.b, static_cast<double>(ref[1]), 1e-6 * std::fabs(static_cast<double>(ref[1])) + 1e-8);
    EXPECT_NEAR(fit.c, static_cast<double>(ref[2]), 1e-6 * std::fabs(static_cast<double>(ref[2])));
  }
}

TEST(QuadraticFit, Failures) {
  const std::vector<double> two_x{1e8, 2e8}, two_y{3, 2};
  EXPECT_THROW(fit_log_quadratic(two_x, two_y), FitError);
  const std::vector<double> x{1e8, 2e8, 4e8, 8e8}, concave{1, 2, 2.2, 1};
  EXPECT_THROW(fit_log_quadratic(x, concave), FitError);
  const std::vector<double> linear{1, 2, 3, 4};
  EXPECT_THROW(fit_log_quadratic(x, linear), FitError);
  const std::vector<double> same_x{1e8, 1e8, 1e8}, y3{1, 2, 3};
  EXPECT_THROW(fit_log_quadratic(same_x, y3), FitError);
}

TEST(QuadraticFit, FlagsExtrapolatedMinimum) {
  std::vector<double> x, y;
  for (int i = 0; i < 5; ++i) {
    x.push_back(std::exp(10.0 + i));
    const double u = 10.0 + i;
    y.push_back((u - 20.0) * (u - 20.0));
  }
  EXPECT_TRUE(fit_log_quadratic(x, y).extrapolated);
}

TEST(IsoflopFit, RejectsMixedBudgets) {
  auto runs = test::synthetic_sweep();
  std::vector<RunRecord> mixed(runs.begin() + 5, runs.begin() + 14);
  EXPECT_THROW(fit_isoflop(mixed, FitAxis::kParams), FitError);
  std::vector<RunRecord> one(runs.begin(), runs.begin() + 9);
  EXPECT_NO_THROW(fit_isoflop(one, FitAxis::kTokens));
}

TEST(GroupByBudget, ClustersSweep) {
  const auto runs = test::synthetic_sweep();
  const auto groups = group_by_budget(runs);
  ASSERT_EQ(groups.size(), 7u);
  for (const auto& g : groups) EXPECT_EQ(g.runs.size(), 9u);
  EXPECT_NEAR(groups.front().compute, 3e18, 1e6);
  EXPECT_NEAR(groups.back().compute, 3e20, 1e8);
}

TEST(PowerLaw, ExactRecoveryAndErrors) {
  std::vector<PowerLawPoint> pts;
  for (int i = 0; i < 6; ++i) {
    const double c = std::pow(10.0, 18 + i);
    pts.push_back({c, 0.12 * std::pow(c, 0.367)});
  }
  const auto fit = fit_power_law(pts);
  EXPECT_NEAR(fit.exponent, 0.367, 1e-12);
  EXPECT_NEAR(fit.coefficient / 0.12, 1.0, 1e-9);
  EXPECT_NEAR(fit.r2_log, 1.0, 1e-12);
  EXPECT_THROW(fit_power_law(std::span(pts).first(1)), FitError);
  std::vector<PowerLawPoint> flat{{1, 2}, {1, 3}};
  EXPECT_THROW(fit_power_law(flat), FitError);
  std::vector<PowerLawPoint> neg{{1, 2}, {2, -3}};
  EXPECT_THROW(fit_power_law(neg), FitError);
}

TEST(Frontier, SyntheticSweepExponents) {
  const auto frontier = isoflop_frontier(test::synthetic_sweep());
  ASSERT_EQ(frontier.size(), 7u);
  const auto laws = fit_scaling_laws(frontier);
  EXPECT_NEAR(laws.params.exponent, 0.391, 0.03);
  EXPECT_NEAR(laws.tokens.exponent, 0.609, 0.03);
  // 6 N* D* stays on each budget because both parabolas are fitted along it.
  for (const auto& p : frontier) EXPECT_NEAR(6 * p.n_star * p.d_star / p.compute, 1.0, 0.05);
}

TEST(DerivedExponents, Identity) {
  const auto e = derived_exponents(0.684, 0.439);
  EXPECT_NEAR(e.params, 0.391, 5e-4);
  EXPECT_NEAR(e.tokens, 0.609, 5e-4);
  EXPECT_DOUBLE_EQ(e.params + e.tokens, 1.0);
  EXPECT_THROW(derived_exponents(0, 1), DomainError);
}

ParametricFit paper_fit() {
  ParametricFit f;
  f.E = 3.169;
  f.A = 215886;
  f.B = 4750;
  f.alpha = 0.684;
  f.beta = 0.439;
  return f;
}

TEST(Parametric, PredictArithmetic) {
  // 3.169 + 215886 / 6e8^0.684 + 4750 / 5.55e9^0.439
  const double expected = 3.169 + 215886 / std::pow(600e6, 0.684) + 4750 / std::pow(5.55e9, 0.439);
  EXPECT_DOUBLE_EQ(predict_loss(paper_fit(), 600e6, 5.55e9), expected);
  EXPECT_NEAR(expected, 3.633, 5e-4);
}

TEST(Parametric, RecoversGeneratingLaw) {
  ParametricFitOptions opts;
  const auto fit = fit_parametric(test::synthetic_sweep(), opts);
  EXPECT_NEAR(fit.E / 3.169, 1.0, 1e-3);
  EXPECT_NEAR(fit.alpha, 0.684, 5e-3);
  EXPECT_NEAR(fit.beta, 0.439, 5e-3);
  EXPECT_GE(fit.r2_raw, 0.9999);
  EXPECT_EQ(fit.starts, 5400u);
  EXPECT_GT(fit.converged_starts, 0u);
}

TEST(Parametric, RobustToNoise) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 0.002);
  auto runs = test::synthetic_sweep();
  for (auto& r : runs) r.loss *= std::exp(noise(rng));
  ParametricFitOptions opts;
  opts.grid.log_a = {5, 10, 15};
  opts.grid.log_b = {5, 10};
  const auto fit = fit_parametric(runs, opts);
  EXPECT_NEAR(fit.E, 3.169, 0.15);
  EXPECT_GE(fit.r2_raw, 0.99);
}

TEST(Parametric, DeterministicAcrossThreadCounts) {
  ParametricFitOptions one, many;
  one.threads = 1;
  many.threads = 4;
  one.grid.log_a = many.grid.log_a = {5, 10, 15};
  one.grid.log_e = many.grid.log_e = {0, 1};
  const auto runs = test::synthetic_sweep();
  const auto a = fit_parametric(runs, one);
  const auto b = fit_parametric(runs, many);
  EXPECT_EQ(a.E, b.E);
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.best_start, b.best_start);
  EXPECT_EQ(a.converged_starts, b.converged_starts);
}

TEST(Parametric, InputRequirements) {
  const auto runs = test::synthetic_sweep();
  EXPECT_THROW(fit_parametric(std::span(runs).first(5)), FitError);
  // Eight runs with D over three decades but N within a factor of 2.
  const test::LossLaw law;
  std::vector<RunRecord> narrow;
  for (int i = 0; i < 8; ++i) {
    const double n = 1e8 * (1.0 + 0.1 * i);
    const double d = 1e9 * std::pow(10.0, 3.0 * i / 7.0);
    narrow.push_back({n, d, flops(n, d), law(n, d)});
  }
  ASSERT_GE(narrow.size(), 6u);
  EXPECT_THROW(fit_parametric(narrow), FitError);
}

TEST(Parametric, KeyValueRoundTrip) {
  auto fit = paper_fit();
  fit.r2_raw = 0.983;
  const auto back = parametric_fit_from_kv(parametric_fit_kv(fit));
  EXPECT_EQ(back.E, fit.E);
  EXPECT_EQ(back.A, fit.A);
  EXPECT_EQ(back.beta, fit.beta);
  EXPECT_EQ(back.r2_raw, 0.983);
  EXPECT_THROW(parametric_fit_from_kv("E = 1\n"), ParseError);
  EXPECT_THROW(parametric_fit_from_kv("E = 1\nA = -1\nB = 1\nalpha = 1\nbeta = 1\n"),
               ValidationError);
}

TEST(Laws, CalibrationReproducesAnchor) {
  const auto laws = calibrate_laws(600e6, 5.55e9, 0.367, 0.579);
  const double c0 = flops(600e6, 5.55e9);
  EXPECT_NEAR(laws.params.evaluate(c0) / 600e6, 1.0, 1e-12);
  EXPECT_NEAR(laws.tokens.evaluate(c0) / 5.55e9, 1.0, 1e-12);
  EXPECT_NEAR(optimal_tokens_for(laws, 600e6) / 5.55e9, 1.0, 1e-12);
  const auto back = scaling_laws_from_kv(scaling_laws_kv(laws));
  EXPECT_EQ(back.params.coefficient, laws.params.coefficient);
  EXPECT_EQ(back.tokens.exponent, laws.tokens.exponent);
}

TEST(Laws, OvertrainingTable) {
  const auto laws = calibrate_laws(600e6, 5.55e9, 0.367, 0.579);
  const std::vector<std::pair<double, double>> rows{
      {135e6, 0.53e9}, {600e6, 5.55e9}, {1.7e9, 28.6e9}, {4e9, 110e9}};
  for (const auto& [n, d_star] : rows) {
    EXPECT_NEAR(optimal_tokens_for(laws, n) / d_star, 1.0, 0.02) << n;
    EXPECT_NEAR(overtraining_factor(laws, n, 500e9), 500e9 / d_star, 0.02 * 500e9 / d_star) << n;
  }
  EXPECT_NEAR(overtraining_factor(500e9, 0.53e9), 943.4, 0.05);
  EXPECT_THROW(overtraining_factor(-1.0, 1.0), DomainError);
}

TEST(Laws, FromParametricAreComputeConsistent) {
  const auto laws = laws_from_parametric(paper_fit());
  EXPECT_NEAR(laws.params.exponent, 0.391, 5e-4);
  for (const double c : {1e18, 1e20, 1e22, 1e24}) {
    const auto alloc = optimal_allocation(laws, c);
    EXPECT_NEAR(alloc.flops_ratio, 1.0, 1e-9);
    EXPECT_TRUE(alloc.consistent);
  }
  // The allocation minimizes the law along the isoFLOP curve.
  const auto fit = paper_fit();
  const double c = 1e21;
  const auto alloc = optimal_allocation(laws, c);
  const double best = fit.predict(alloc.n_params, alloc.d_tokens);
  for (const double f : {0.9, 0.99, 1.01, 1.1}) {
    const double n = alloc.n_params * f;
    EXPECT_GT(fit.predict(n, c / (6 * n)), best);
  }
}

TEST(Laws, AnchoredAllocationRatios) {
  const auto laws = calibrate_laws(600e6, 5.55e9, 0.367, 0.579);
  EXPECT_NEAR(optimal_allocation(laws, 1e20).tokens_per_param, 13.0, 1.3);
  EXPECT_NEAR(optimal_allocation(laws, 1e23).tokens_per_param, 56.0, 5.6);
  // Anchored exponents sum to 0.946, so far from the anchor 6 N* D* drifts.
  EXPECT_FALSE(optimal_allocation(laws, 1e27).consistent);
}

TEST(Overtraining, KEqualsOneIsOptimalAllocation) {
  const auto fit = paper_fit();
  const auto laws = laws_from_parametric(fit);
  for (const double c : {3e18, 1e20, 1e22}) {
    const auto p = loss_at_overtraining(fit, laws, c, 1.0);
    const auto alloc = optimal_allocation(laws, c);
    EXPECT_NEAR(p.n_params / alloc.n_params, 1.0, 1e-9);
    EXPECT_NEAR(p.d_tokens / alloc.d_tokens, 1.0, 1e-9);
  }
}

TEST(Overtraining, PointSatisfiesConstraints) {
  const auto fit = paper_fit();
  const auto laws = laws_from_parametric(fit);
  const auto p = loss_at_overtraining(fit, laws, 1e21, 20.0);
  EXPECT_NEAR(6 * p.n_params * p.d_tokens / 1e21, 1.0, 1e-12);
  EXPECT_NEAR(overtraining_factor(laws, p.n_params, p.d_tokens), 20.0, 1e-6);
}

TEST(Overtraining, LossOrderedByK) {
  const auto fit = paper_fit();
  const auto laws = laws_from_parametric(fit);
  for (int i = 0; i < 50; ++i) {
    const double c = std::pow(10.0, 18.0 + 6.0 * i / 49.0);
    double prev = 0.0;
    for (const double k : {1.0, 5.0, 20.0, 100.0}) {
      const double loss = loss_at_overtraining(fit, laws, c, k).loss;
      EXPECT_GE(loss, prev) << "C=" << c << " K=" << k;
      prev = loss;
    }
  }
}

TEST(Overtraining, Errors) {
  const auto fit = paper_fit();
  const auto laws = laws_from_parametric(fit);
  EXPECT_THROW(loss_at_overtraining(fit, laws, -1.0, 1.0), DomainError);
  EXPECT_THROW(loss_at_overtraining(fit, laws, 1e20, 0.5), DomainError);
  // A budget so small that even N = 1 cannot absorb the demanded tokens.
  EXPECT_THROW(loss_at_overtraining(fit, laws, 7.0, 1e6), InfeasibleError);
}

TEST(Lbfgs, Rosenbrock) {
  const Objective f = [](std::span<const double> x, std::span<double> g) {
    const double a = 1 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2 * a - 400 * x[0] * b;
    g[1] = 200 * b;
    return a * a + 100 * b * b;
  };
  const auto r = minimize_lbfgs(f, {-1.2, 1.0});
  EXPECT_TRUE(r.converged()) << to_string(r.status);
  EXPECT_NEAR(r.x[0], 1.0, 1e-6);
  EXPECT_NEAR(r.x[1], 1.0, 1e-6);
}

TEST(Lbfgs, QuadraticBowlAndNonFinite) {
  const Objective bowl = [](std::span<const double> x, std::span<double> g) {
    double v = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double w = static_cast<double>(i + 1);
      g[i] = 2 * w * (x[i] - 1.0);
      v += w * (x[i] - 1.0) * (x[i] - 1.0);
    }
    return v;
  };
  const auto r = minimize_lbfgs(bowl, std::vector<double>(10, 5.0));
  EXPECT_TRUE(r.converged());
  for (const double xi : r.x) EXPECT_NEAR(xi, 1.0, 1e-8);

  const Objective nan = [](std::span<const double>, std::span<double> g) {
    g[0] = 0;
    return std::nan("");
  };
  EXPECT_EQ(minimize_lbfgs(nan, {0.0}).status, LbfgsStatus::kNonFinite);
}

}  // namespace
}  // namespace audiolm
