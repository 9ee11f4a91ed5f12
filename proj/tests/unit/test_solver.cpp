#include <lrlasso/data.hpp>
#include <lrlasso/solver.hpp>

#include "oracles.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lrlasso;

namespace {

struct Instance {
  Matrix x;
  Vector y;
};

Instance gaussian_instance(Index n, Index p, std::uint64_t seed, double noise = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Instance d;
  d.x.resize(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) d.x(i, j) = std::log(std::abs(normal(rng)) + 1e-3);
  Vector beta = Vector::Zero(p);
  beta[0] = 1.5;
  beta[1] = -1.0;
  if (p > 3) beta[3] = 0.7;
  if (p > 2) beta[2] = -1.2;
  d.y = d.x * beta;
  for (Index i = 0; i < n; ++i) d.y[i] += noise * normal(rng);
  return d;
}

Instance binomial_instance(Index n, Index p, std::uint64_t seed) {
  Instance d = gaussian_instance(n, p, seed, 0.0);
  std::mt19937_64 rng(seed + 17);
  std::uniform_real_distribution<double> unif;
  for (Index i = 0; i < n; ++i) {
    const double prob = 1.0 / (1.0 + std::exp(-0.8 * d.y[i]));
    d.y[i] = unif(rng) < prob ? 1.0 : 0.0;
  }
  return d;
}

LassoProblem problem_of(const Instance& d, double lambda, Family family = Family::gaussian) {
  LassoProblem p;
  p.design = d.x;
  p.response = d.y;
  p.lambda = lambda;
  p.family = family;
  return p;
}

// Gradient of the smooth loss with respect to beta at the reported solution,
// computed here from scratch.
Vector smooth_gradient(const Matrix& x, const Vector& y, const LassoSolution& s, Family family) {
  Vector eta = (x * s.coefficients).array() + s.intercept;
  Vector r(y.size());
  for (Index i = 0; i < y.size(); ++i) {
    r[i] = family == Family::gaussian ? y[i] - eta[i] : y[i] - 1.0 / (1.0 + std::exp(-eta[i]));
  }
  return x.transpose() * r;  // negative gradient
}

// Independent KKT check for the sum-zero problem: the multiplier is pinned by
// the active set (or by the midpoint of the range when nothing is active).
double constrained_kkt(const Matrix& x, const Vector& y, const LassoSolution& s, double gamma, Family family) {
  const Vector g = smooth_gradient(x, y, s, family);
  bool any_active = false;
  double nu_sum = 0.0;
  int active = 0;
  for (Index j = 0; j < g.size(); ++j) {
    if (s.coefficients[j] != 0.0) {
      any_active = true;
      nu_sum += g[j] - gamma * (s.coefficients[j] > 0 ? 1.0 : -1.0);
      ++active;
    }
  }
  double nu = 0.0;
  if (any_active) {
    nu = nu_sum / active;
  } else {
    nu = 0.5 * (g.maxCoeff() + g.minCoeff());
  }
  double worst = 0.0;
  for (Index j = 0; j < g.size(); ++j) {
    if (s.coefficients[j] != 0.0) {
      worst = std::max(worst, std::abs(g[j] - nu - gamma * (s.coefficients[j] > 0 ? 1.0 : -1.0)));
    } else {
      worst = std::max(worst, std::abs(g[j] - nu) - gamma);
    }
  }
  return worst;
}

}  // namespace

TEST(SolveLasso, LambdaAboveMaxGivesNullModel) {
  const Instance d = gaussian_instance(40, 6, 1);
  const double lmax = lasso_lambda_max(d.x, d.y, Family::gaussian);
  const Vector c = (d.x.rowwise() - d.x.colwise().mean()).transpose() * (d.y.array() - d.y.mean()).matrix();
  EXPECT_NEAR(lmax, c.cwiseAbs().maxCoeff(), 1e-10 * lmax);
  const LassoSolution s = solve_lasso(problem_of(d, lmax * 1.0000001));
  EXPECT_TRUE(s.coefficients.isZero(0.0));
  EXPECT_NEAR(s.intercept, d.y.mean(), 1e-12);
  EXPECT_LE(kkt_check(problem_of(d, lmax), s), 1e-8);
}

TEST(SolveLasso, LambdaZeroMatchesOrdinaryLeastSquares) {
  const Instance d = gaussian_instance(50, 5, 2);
  const LassoSolution s = solve_lasso(problem_of(d, 0.0));
  Matrix design(50, 6);
  design.col(0).setOnes();
  design.rightCols(5) = d.x;
  const Vector ols = (design.transpose() * design).ldlt().solve(design.transpose() * d.y);
  EXPECT_NEAR(s.intercept, ols[0], 1e-8);
  EXPECT_LT((s.coefficients - ols.tail(5)).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE(s.converged);
  EXPECT_LE(kkt_check(problem_of(d, 0.0), s), 1e-8);
}

TEST(SolveLasso, OrthonormalDesignIsSoftThresholding) {
  std::mt19937_64 rng(3);
  const Matrix q = oracle::orthonormal_design(30, 6, rng);
  std::normal_distribution<double> normal;
  Vector y(30);
  for (Index i = 0; i < 30; ++i) y[i] = 3.0 * q(i, 0) - 2.0 * q(i, 3) + 0.3 * normal(rng);
  for (double lambda : {0.05, 0.3, 1.0, 2.5}) {
    Instance d{q, y};
    const LassoSolution s = solve_lasso(problem_of(d, lambda));
    for (Index j = 0; j < 6; ++j) {
      EXPECT_NEAR(s.coefficients[j], oracle::soft(q.col(j).dot(y), lambda), 1e-8) << "lambda " << lambda;
    }
  }
}

TEST(SolveLasso, WeightedLambdaZeroMatchesWeightedLeastSquares) {
  const Instance d = gaussian_instance(30, 4, 4);
  LassoProblem p = problem_of(d, 0.0);
  p.weights = Vector::LinSpaced(30, 0.5, 3.0);
  const LassoSolution s = solve_lasso(p);
  Matrix design(30, 5);
  design.col(0).setOnes();
  design.rightCols(4) = d.x;
  const Matrix dw = p.weights.asDiagonal() * design;
  const Vector wls = (design.transpose() * dw).ldlt().solve(dw.transpose() * d.y);
  EXPECT_LT((s.coefficients - wls.tail(4)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(SolveLasso, KktDetectsPerturbedActiveCoefficient) {
  const Instance d = gaussian_instance(60, 6, 5);
  const double lambda = 0.2 * lasso_lambda_max(d.x, d.y, Family::gaussian);
  const LassoProblem p = problem_of(d, lambda);
  LassoSolution s = solve_lasso(p);
  ASSERT_LE(kkt_check(p, s), 1e-7);
  Index active = -1;
  for (Index j = 0; j < 6; ++j) {
    if (s.coefficients[j] != 0.0) active = j;
  }
  ASSERT_GE(active, 0);
  s.coefficients[active] += 0.1;
  EXPECT_GE(kkt_check(p, s), 0.05);
}

TEST(SolveLasso, ConvergedFitsSatisfyKktAndObjectiveDecreasesWithSweeps) {
  const Instance d = gaussian_instance(80, 10, 6);
  const LassoProblem p = problem_of(d, 0.05 * lasso_lambda_max(d.x, d.y, Family::gaussian));
  double previous = lasso_objective(p, Vector::Zero(10), d.y.mean());
  for (int sweeps = 1; sweeps <= 30; ++sweeps) {
    SolverOptions o;
    o.max_sweeps = sweeps;
    const LassoSolution s = solve_lasso(p, nullptr, o);
    EXPECT_LE(s.objective, previous + 1e-12 * std::abs(previous)) << "sweeps " << sweeps;
    previous = s.objective;
  }
  const LassoSolution full = solve_lasso(p);
  EXPECT_TRUE(full.converged);
  EXPECT_LE(full.kkt_residual, 1e-7);
}

TEST(SolveLasso, BinomialMatchesKktAndUnpenalizedLogistic) {
  const Instance d = binomial_instance(120, 4, 7);
  const double lmax = lasso_lambda_max(d.x, d.y, Family::binomial);
  for (double f : {0.5, 0.1, 0.01}) {
    const LassoProblem p = problem_of(d, f * lmax, Family::binomial);
    const LassoSolution s = solve_lasso(p);
    EXPECT_TRUE(s.converged);
    EXPECT_LE(kkt_check(p, s), 1e-7);
    // Independent stationarity check.
    const Vector g = smooth_gradient(d.x, d.y, s, Family::binomial);
    for (Index j = 0; j < 4; ++j) {
      if (s.coefficients[j] != 0.0) {
        EXPECT_NEAR(g[j], f * lmax * (s.coefficients[j] > 0 ? 1 : -1), 1e-6);
      } else {
        EXPECT_LE(std::abs(g[j]), f * lmax + 1e-6);
      }
    }
  }
  const LassoSolution null_fit = solve_lasso(problem_of(d, lmax, Family::binomial));
  EXPECT_TRUE(null_fit.coefficients.isZero(0.0));
  EXPECT_NEAR(null_fit.intercept, std::log(d.y.mean() / (1 - d.y.mean())), 1e-8);
}

TEST(SolveLasso, NonFiniteInputIsRejected) {
  Instance d = gaussian_instance(10, 3, 8);
  d.x(2, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(solve_lasso(problem_of(d, 0.1)), Error);
}

TEST(ConstrainedLasso, GammaAboveMaxIsNullModel) {
  const Instance d = gaussian_instance(30, 5, 9);
  const double gmax = constrained_gamma_max(d.x, d.y, Family::gaussian);
  const LassoSolution s = constrained_lasso(d.x, d.y, gmax, Family::gaussian);
  EXPECT_TRUE(s.coefficients.isZero(0.0));
  EXPECT_NEAR(s.intercept, d.y.mean(), 1e-12);
  // Just below gamma_max something enters, in a sum-zero pair.
  const LassoSolution t = constrained_lasso(d.x, d.y, 0.9 * gmax, Family::gaussian);
  EXPECT_GE((t.coefficients.array() != 0.0).count(), 2);
}

TEST(ConstrainedLasso, GammaZeroIsConstrainedLeastSquares) {
  for (std::uint64_t seed = 10; seed < 15; ++seed) {
    const Instance d = gaussian_instance(40, 6, seed);
    const LassoSolution s = constrained_lasso(d.x, d.y, 0.0, Family::gaussian);
    const oracle::Fit ref = oracle::constrained_least_squares(d.x, d.y);
    EXPECT_LT((s.coefficients - ref.beta).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(s.intercept, ref.intercept, 1e-6);
  }
}

TEST(ConstrainedLasso, MatchesSignPatternEnumeration) {
  for (std::uint64_t seed = 20; seed < 26; ++seed) {
    const Instance d = gaussian_instance(20, 5, seed);
    const double gmax = constrained_gamma_max(d.x, d.y, Family::gaussian);
    for (double f : {0.7, 0.3, 0.05}) {
      const LassoSolution s = constrained_lasso(d.x, d.y, f * gmax, Family::gaussian);
      const oracle::Fit ref = oracle::constrained_lasso_enumerate(d.x, d.y, f * gmax);
      EXPECT_NEAR(s.objective, ref.objective, 1e-8 * (1 + std::abs(ref.objective)));
      EXPECT_LT((s.coefficients - ref.beta).cwiseAbs().maxCoeff(), 1e-6) << "seed " << seed << " f " << f;
    }
  }
}

TEST(ConstrainedLasso, OrthonormalDesignClosedForm) {
  std::mt19937_64 rng(30);
  const Matrix q = oracle::orthonormal_design(25, 7, rng);
  std::normal_distribution<double> normal;
  Vector y(25);
  for (Index i = 0; i < 25; ++i) y[i] = 2.0 * (q(i, 0) - q(i, 1)) + q(i, 2) - q(i, 4) + 0.2 * normal(rng);
  const Vector c = q.transpose() * (y.array() - y.mean()).matrix();
  for (double gamma : {0.05, 0.4, 1.0}) {
    const LassoSolution s = constrained_lasso(q, y, gamma, Family::gaussian);
    const Vector ref = oracle::orthonormal_constrained(c, gamma);
    EXPECT_LT((s.coefficients - ref).cwiseAbs().maxCoeff(), 1e-8) << "gamma " << gamma;
  }
}

TEST(ConstrainedLasso, EqualsExpandedLassoAtTwiceThePenalty) {
  const Instance d = gaussian_instance(20, 6, 31);
  const RatioExpansion z = expand_ratios(d.x);
  ASSERT_EQ(z.z.cols(), 15);
  const double gmax = constrained_gamma_max(d.x, d.y, Family::gaussian);
  for (double f : {0.5, 0.2, 0.05}) {
    const double gamma = f * gmax;
    const LassoSolution s = constrained_lasso(d.x, d.y, gamma, Family::gaussian);
    const oracle::Fit ref = oracle::fista_lasso(z.z, d.y, 2.0 * gamma, 50000);
    EXPECT_NEAR(s.objective, ref.objective, 1e-6 * (1 + std::abs(ref.objective)));
    const Vector fitted = (d.x * s.coefficients).array() + s.intercept;
    const Vector fitted_ref = (z.z * ref.beta).array() + ref.intercept;
    EXPECT_LT((fitted - fitted_ref).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(ConstrainedLasso, ConstraintAndIndependentKktHold) {
  for (Family family : {Family::gaussian, Family::binomial}) {
    const Instance d = family == Family::gaussian ? gaussian_instance(60, 8, 40) : binomial_instance(150, 6, 41);
    const double gmax = constrained_gamma_max(d.x, d.y, family);
    for (double f : {0.6, 0.2, 0.05}) {
      const LassoSolution s = constrained_lasso(d.x, d.y, f * gmax, family);
      EXPECT_TRUE(s.converged);
      EXPECT_LE(std::abs(s.coefficients.sum()), 1e-8 * s.coefficients.lpNorm<1>() + 1e-12);
      EXPECT_LE(s.kkt_residual, 1e-7);
      EXPECT_LE(constrained_kkt(d.x, d.y, s, f * gmax, family), 1e-6) << to_string(family) << " f " << f;
    }
  }
}

TEST(ConstrainedLasso, UniqueFromDifferentStarts) {
  const Instance d = gaussian_instance(50, 7, 50);
  const double gamma = 0.1 * constrained_gamma_max(d.x, d.y, Family::gaussian);
  const LassoSolution a = constrained_lasso(d.x, d.y, gamma, Family::gaussian);
  std::mt19937_64 rng(51);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 5; ++trial) {
    LassoSolution init;
    init.coefficients = Vector::NullaryExpr(7, [&] { return 3.0 * normal(rng); });
    init.intercept = normal(rng);
    const LassoSolution b = constrained_lasso(d.x, d.y, gamma, Family::gaussian, &init);
    EXPECT_LT((a.coefficients - b.coefficients).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(ConstrainedPath, StartsAtZeroAndSupportGrows) {
  const Instance d = gaussian_instance(80, 8, 60);
  const auto path = lambda_path(d.x, d.y, Family::gaussian, 30, 1e-3);
  ASSERT_EQ(path.size(), 30u);
  EXPECT_TRUE(path.front().solution.coefficients.isZero(0.0));
  Index previous = 0;
  for (const auto& pt : path) {
    const Index size = (pt.solution.coefficients.array() != 0.0).count();
    EXPECT_GE(size, previous);
    previous = size;
    EXPECT_LE(std::abs(pt.solution.coefficients.sum()), 1e-6);
  }
  EXPECT_THROW(lambda_path(d.x, d.y, Family::gaussian, 1, 1e-3), DomainError);
}

TEST(ConstrainedPath, WarmStartsDoNotChangeSolutions) {
  const Instance d = gaussian_instance(60, 8, 61);
  const auto gammas = geometric_grid(constrained_gamma_max(d.x, d.y, Family::gaussian), 15, 1e-2);
  const auto warm = constrained_path(d.x, d.y, Family::gaussian, gammas);
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const LassoSolution cold = constrained_lasso(d.x, d.y, gammas[i], Family::gaussian);
    EXPECT_NEAR(warm[i].solution.objective, cold.objective, 1e-6 * (1 + std::abs(cold.objective)));
  }
}

TEST(ProximalGradient, AgreesWithCoordinateDescent) {
  const Instance d = gaussian_instance(40, 12, 70);
  const double lambda = 0.1 * lasso_lambda_max(d.x, d.y, Family::gaussian);
  const LassoSolution cd = solve_lasso(problem_of(d, lambda));
  const LassoSolution pg = proximal_gradient_lasso(d.x, d.y, lambda);
  EXPECT_NEAR(cd.objective, pg.objective, 1e-8 * (1 + cd.objective));
  EXPECT_LT((cd.coefficients - pg.coefficients).cwiseAbs().maxCoeff(), 1e-5);
}
