#include <lrlasso/inference.hpp>
#include <lrlasso/simulate.hpp>
#include <lrlasso/stats.hpp>

#include "oracles.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace lrlasso;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix log_design(Index n, Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  return Matrix::NullaryExpr(n, p, [&] { return std::log(std::abs(normal(rng)) + 1e-3); });
}

double rss_of(const Matrix& d, const Vector& y) {
  return (y - d * d.colPivHouseholderQr().solve(y)).squaredNorm();
}

}  // namespace

TEST(FTest, MatchesRestrictedVersusFullRss) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  const Matrix w = log_design(40, 5, rng);
  Vector y = w.col(0) + 0.5 * w.col(3) + Vector::NullaryExpr(40, [&] { return normal(rng); });
  const FTestResult r = f_test_sum_zero(w, y);

  Matrix full(40, 6);
  full.col(0).setOnes();
  full.rightCols(5) = w;
  Matrix restricted(40, 5);  // beta_5 = -(beta_1 + ... + beta_4)
  restricted.col(0).setOnes();
  for (Index j = 0; j < 4; ++j) restricted.col(j + 1) = w.col(j) - w.col(4);
  const double rss_full = rss_of(full, y);
  const double rss_restricted = rss_of(restricted, y);
  const double f = (rss_restricted - rss_full) / (rss_full / 34.0);
  EXPECT_NEAR(r.statistic, f, 1e-9 * (1 + f));
  EXPECT_DOUBLE_EQ(r.df1, 1.0);
  EXPECT_DOUBLE_EQ(r.df2, 34.0);
  EXPECT_NEAR(r.p_value, stats::f_upper_tail(f, 1, 34), 1e-12);
  EXPECT_NEAR(r.sigma, std::sqrt(rss_full / 34.0), 1e-10);
  EXPECT_NEAR(estimate_sigma(w, y), r.sigma, 1e-10);
}

TEST(FTest, NoiselessSumZeroGivesPValueOne) {
  std::mt19937_64 rng(2);
  const Matrix w = log_design(30, 4, rng);
  Vector beta(4);
  beta << 1.0, -2.0, 0.5, 0.5;
  const Vector y = (w * beta).array() + 3.0;
  const FTestResult r = f_test_sum_zero(w, y);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_EQ(r.p_value, 1.0);
}

TEST(FTest, RejectsDegenerateDesigns) {
  std::mt19937_64 rng(3);
  Matrix w = log_design(20, 4, rng);
  w.col(3) = 2.0 * w.col(1) - w.col(0);
  const Vector y = Vector::LinSpaced(20, 0, 1);
  EXPECT_THROW(f_test_sum_zero(w, y), DomainError);
  const Matrix small = log_design(5, 4, rng);
  EXPECT_THROW(f_test_sum_zero(small, Vector::Zero(5)), DomainError);
  EXPECT_THROW(estimate_sigma(small, Vector::Zero(5)), DomainError);
}

TEST(TruncatedCdf, SimpleValues) {
  EXPECT_DOUBLE_EQ(truncated_gaussian_cdf(0.0, 0.0, 1.0, -kInf, kInf), 0.5);
  EXPECT_EQ(truncated_gaussian_cdf(0.0, 0.0, 1.0, 0.0, kInf), 0.0);
  EXPECT_EQ(truncated_gaussian_cdf(2.0, 0.0, 1.0, -1.0, 2.0), 1.0);
  EXPECT_NEAR(truncated_gaussian_cdf(1.3, 0.0, 1.0, -kInf, kInf), stats::normal_cdf(1.3), 1e-15);
  EXPECT_THROW(truncated_gaussian_cdf(0.0, 0.0, 1.0, 1.0, -1.0), DomainError);
  EXPECT_THROW(truncated_gaussian_cdf(0.0, 0.0, 0.0, -1.0, 1.0), DomainError);
  EXPECT_THROW(truncated_gaussian_cdf(5.0, 0.0, 1.0, -1.0, 1.0), DomainError);
}

TEST(TruncatedCdf, MatchesHighPrecisionQuadrature) {
  struct Case {
    double x, lo, hi;
  };
  const Case cases[] = {
      {8.5, 8.0, 9.0},    {0.3, -1.0, 2.0},  {-8.5, -9.0, -8.0}, {30.2, 30.0, 31.0}, {-30.5, -31.0, -30.0},
      {4.1, 4.0, 12.0},   {-4.1, -12.0, -4.0}, {1.0, -0.5, 6.0}, {-2.0, -7.0, 0.5}, {10.0001, 10.0, 10.001},
  };
  for (const Case& c : cases) {
    const double got = truncated_gaussian_cdf(c.x, 0.0, 1.0, c.lo, c.hi);
    const double ref = oracle::truncated_cdf_quadrature(c.x, c.lo, c.hi);
    EXPECT_GT(got, 0.0);
    EXPECT_LT(got, 1.0);
    EXPECT_NEAR(got, ref, 1e-10 * ref) << c.x << " on [" << c.lo << ", " << c.hi << "]";
  }
  // Location-scale: N(mu, sd^2) on [lo, hi] equals the standard case after rescaling.
  EXPECT_NEAR(truncated_gaussian_cdf(3.0 + 2.0 * 8.5, 3.0, 2.0, 3.0 + 16.0, 3.0 + 18.0),
              oracle::truncated_cdf_quadrature(8.5, 8.0, 9.0), 1e-10);
}

TEST(TruncatedCdf, DecreasingInMean) {
  for (const auto& [lo, hi] : {std::pair{-1.0, 2.0}, std::pair{3.0, kInf}, std::pair{-kInf, -2.0}}) {
    const double x = std::isinf(hi) ? lo + 0.7 : (std::isinf(lo) ? hi - 0.4 : 0.5);
    double previous = 1.0 + 1e-12;
    for (double mu = -6.0; mu <= 6.0; mu += 0.25) {
      const double v = truncated_gaussian_cdf(x, mu, 1.3, lo, hi);
      EXPECT_LT(v, previous) << "mu " << mu;
      previous = v;
    }
  }
}

TEST(SelectionEvent, EmptySupportHasOnlyInactiveBlocks) {
  std::mt19937_64 rng(4);
  const Matrix x = log_design(30, 5, rng);
  Vector y = Vector::LinSpaced(30, -1, 1);
  const double lmax = lasso_lambda_max(x, y, Family::gaussian);
  const SelectionEvent e = lasso_selection_event(x, y, 1.5 * lmax);
  EXPECT_TRUE(e.support.empty());
  EXPECT_EQ(e.a.rows(), 10);
  EXPECT_EQ(e.inactive_rows, 5);
  EXPECT_TRUE(e.contains(y));
  EXPECT_THROW(selective_sum_zero_test(e, x, y, 1.0), DomainError);
}

TEST(SelectionEvent, OrthonormalTwoFeatureReduction) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  const Matrix q = oracle::orthonormal_design(20, 2, rng);
  const Vector y = 5.0 * q.col(0) + 0.2 * Vector::NullaryExpr(20, [&] { return normal(rng); });
  const double lambda = 1.0;
  const SelectionEvent e = lasso_selection_event(q, y, lambda);
  ASSERT_EQ(e.support, std::vector<Index>{0});
  ASSERT_EQ(e.signs, std::vector<int>{1});
  const Matrix p1 = q.col(0) * q.col(0).transpose();
  const Vector inactive_row = q.col(1).transpose() * (Matrix::Identity(20, 20) - p1);
  // Rows: x2'(I-P1)/lambda <= 1, -x2'(I-P1)/lambda <= 1, -x1' <= -lambda.
  EXPECT_LT((e.a.row(0).transpose() - inactive_row / lambda).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((e.a.row(1).transpose() + inactive_row / lambda).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((e.a.row(2).transpose() + q.col(0)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(e.b[0], 1.0, 1e-12);
  EXPECT_NEAR(e.b[1], 1.0, 1e-12);
  EXPECT_NEAR(e.b[2], -lambda, 1e-12);
}

TEST(SelectionEvent, PolyhedronMatchesSolverSelections) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal;
  const Matrix x = log_design(25, 6, rng);
  Vector beta(6);
  beta << 1.0, -1.0, 0, 0.5, 0, 0;
  const Vector mean = x * beta;
  const double lambda = 3.0;
  const Vector y0 = mean + Vector::NullaryExpr(25, [&] { return normal(rng); });
  const SelectionEvent e = lasso_selection_event(x, y0, lambda);
  ASSERT_FALSE(e.support.empty());
  const Matrix xc = center_columns(x);
  int inside = 0, mismatches = 0, skipped = 0;
  for (int draw = 0; draw < 10000; ++draw) {
    const Vector y = mean + Vector::NullaryExpr(25, [&] { return normal(rng); });
    const double margin = (e.a * y - e.b).maxCoeff();
    if (std::abs(margin) < 1e-7) {
      ++skipped;
      continue;
    }
    LassoProblem problem;
    problem.design = xc;
    problem.response = y;
    problem.lambda = lambda;
    const LassoSolution s = solve_lasso(problem);
    bool same = true;
    std::size_t m = 0;
    for (Index j = 0; j < 6; ++j) {
      if (s.coefficients[j] == 0.0) continue;
      if (m >= e.support.size() || e.support[m] != j || (s.coefficients[j] > 0) != (e.signs[m] > 0)) same = false;
      ++m;
    }
    same = same && m == e.support.size();
    inside += same;
    mismatches += same != (margin <= 0.0);
  }
  EXPECT_EQ(mismatches, 0);
  EXPECT_GT(inside, 100);
  EXPECT_LT(skipped, 5);
}

TEST(SelectiveTest, UntruncatedReducesToGaussianTail) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const Matrix x = log_design(30, 4, rng);
  const Vector y = Vector::NullaryExpr(30, [&] { return normal(rng); });
  SelectionEvent e;
  e.support = {0, 2};
  e.signs = {1, -1};
  e.a.resize(0, 30);
  e.b.resize(0);
  e.lambda = 1.0;
  const PivotResult r = selective_sum_zero_test(e, x, y, 1.5);
  EXPECT_TRUE(std::isinf(r.vminus) && r.vminus < 0);
  EXPECT_TRUE(std::isinf(r.vplus) && r.vplus > 0);
  const Matrix xc = center_columns(x);
  Matrix xm(30, 2);
  xm << xc.col(0), xc.col(2);
  const Vector eta = xm * (xm.transpose() * xm).inverse() * Vector::Ones(2);
  EXPECT_NEAR(r.statistic, eta.dot(y), 1e-10);
  const double z = eta.dot(y) / (1.5 * eta.norm());
  EXPECT_NEAR(r.p_one_sided, stats::normal_upper_tail(z), 1e-12);
  EXPECT_NEAR(r.p_two_sided, 2.0 * stats::normal_upper_tail(std::abs(z)), 1e-12);
}

TEST(SelectiveTest, IntervalDependsOnlyOnZ) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  const Matrix x = log_design(60, 10, rng);
  Vector beta = Vector::Zero(10);
  beta[0] = 2.0;
  beta[1] = -2.0;
  const Vector y = x * beta + Vector::NullaryExpr(60, [&] { return normal(rng); });
  const double lambda = default_selective_lambda(x, 1.0);
  const SelectionEvent e = lasso_selection_event(x, y, lambda);
  ASSERT_FALSE(e.support.empty());
  const PivotResult r = selective_sum_zero_test(e, x, y, 1.0);
  EXPECT_LE(r.vminus, r.statistic);
  EXPECT_LE(r.statistic, r.vplus);
  EXPECT_GE(r.p_one_sided, 0.0);
  EXPECT_LE(r.p_one_sided, 1.0);
  const Vector c = r.eta / r.eta.squaredNorm();
  const Vector z = y - c * r.statistic;
  for (double frac : {0.1, 0.5, 0.9}) {
    const double lo = std::isinf(r.vminus) ? r.statistic - 5 : r.vminus;
    const double hi = std::isinf(r.vplus) ? r.statistic + 5 : r.vplus;
    const Vector moved = z + c * (lo + frac * (hi - lo));
    const TruncationInterval t = truncation_interval(e, r.eta, moved);
    EXPECT_NEAR(t.lower, r.vminus, 1e-8 * (1 + std::abs(r.vminus)));
    EXPECT_NEAR(t.upper, r.vplus, 1e-8 * (1 + std::abs(r.vplus)));
  }
}

TEST(SelectiveTest, InconsistentResponseIsReported) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  const Matrix x = log_design(40, 6, rng);
  Vector beta = Vector::Zero(6);
  beta[0] = 3.0;
  const Vector y = x * beta + Vector::NullaryExpr(40, [&] { return normal(rng); });
  const SelectionEvent e = lasso_selection_event(x, y, 5.0);
  ASSERT_FALSE(e.support.empty());
  const Vector flipped = -10.0 * y;  // the selected signs cannot hold
  EXPECT_THROW(selective_sum_zero_test(e, x, flipped, 1.0), ConsistencyError);
}

TEST(SelectiveTest, SmallNullCalibration) {
  PvalueStudySpec spec;
  spec.n = 60;
  spec.p = 10;
  spec.reps = 600;
  spec.seed = 21;
  const PvalueStudy study = run_pvalue_study(spec);
  ASSERT_GE(study.conditioned, 500);
  EXPECT_EQ(study.failures, 0);
  EXPECT_LT(study.ks_statistic, oracle::ks_critical_01(study.p_one_sided.size()));
  // The in-house KS p-value must agree with the critical-value check.
  EXPECT_GT(study.ks_pvalue, 0.01);
}

TEST(Stats, KolmogorovSmirnovAgainstKnownValues) {
  // Uniform grid (i - 0.5) / n has D = 0.5 / n.
  std::vector<double> grid(100);
  for (int i = 0; i < 100; ++i) grid[static_cast<std::size_t>(i)] = (i + 0.5) / 100.0;
  EXPECT_NEAR(stats::ks_statistic_uniform(grid), 0.005, 1e-15);
  // Asymptotic Kolmogorov tail at the 1% point is about 0.01.
  EXPECT_NEAR(stats::ks_pvalue(1.628 / std::sqrt(2000.0), 2000), 0.01, 1e-3);
  EXPECT_NEAR(stats::ks_pvalue(1.358 / std::sqrt(2000.0), 2000), 0.05, 3e-3);
}
