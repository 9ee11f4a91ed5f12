#pragma once

#include <lrlasso/common.hpp>
#include <lrlasso/solver.hpp>

#include <optional>
#include <vector>

namespace lrlasso {

struct FTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double df1 = 1.0;
  double df2 = 0.0;
  double sum_beta = 0.0;  // 1' beta_hat
  double sigma = 0.0;     // residual sd of the full OLS fit
};

// Classical F test of H0: sum_j beta_j = 0 in the OLS fit of y on [1, w].
// Throws DomainError (suggesting the selective test) if n <= p + 1 or the
// design is rank deficient.
FTestResult f_test_sum_zero(const Eigen::Ref<const Matrix>& w, const Vector& y);

// The lasso selection event {M_hat = M, s_hat = s} = {A y <= b} for
//   1/2 ||y - x beta||^2 + lambda ||beta||_1
// with x column-centered (so the unpenalized intercept drops out). Rows are
// ordered: inactive upper block, inactive lower block, active sign block.
struct SelectionEvent {
  std::vector<Index> support;  // M, ascending
  std::vector<int> signs;      // s, +1 / -1 per support entry
  Matrix a;
  Vector b;
  double lambda = 0.0;
  Index inactive_rows = 0;  // rows per inactive block

  bool contains(const Vector& y, double slack = 1e-8) const;
};

// Builds the polyhedron for the support and signs of `solution`.
SelectionEvent selection_event(const Eigen::Ref<const Matrix>& x, const LassoSolution& solution,
                               double lambda);

// Centers x, solves the lasso at lambda and builds its selection event.
// Throws ConsistencyError when the observed y violates A y <= b by more than
// 1e-8 (solver and polyhedron disagree).
SelectionEvent lasso_selection_event(const Eigen::Ref<const Matrix>& x, const Vector& y,
                                     double lambda, const SolverOptions& options = {});

struct PivotResult {
  Vector eta;
  double vminus = 0.0;
  double vplus = 0.0;
  double statistic = 0.0;  // eta' y
  double sigma = 0.0;
  double pivot = 0.0;        // truncated-Gaussian CDF of the statistic under H0
  double p_one_sided = 0.0;  // 1 - pivot: small when sum beta^(M) > 0
  double p_two_sided = 0.0;  // 1 - 2 |pivot - 1/2|
};

// Post-selective test of H0: 1' beta^(M) = 0 on the event. `x` must be the
// same (uncentered or centered) matrix given to lasso_selection_event.
PivotResult selective_sum_zero_test(const SelectionEvent& event, const Eigen::Ref<const Matrix>& x,
                                    const Vector& y, double sigma);

// Truncation limits of eta' y on the event, as functions of z = (I - P_eta) y.
struct TruncationInterval {
  double lower = 0.0;
  double upper = 0.0;
};
TruncationInterval truncation_interval(const SelectionEvent& event, const Vector& eta,
                                       const Vector& y);

// CDF at x of N(mu, sd^2) truncated to [lo, hi].
double truncated_gaussian_cdf(double x, double mu, double sd, double lo, double hi);

// Residual sd of the OLS fit of y on [1, x]; requires n > p + 1.
double estimate_sigma(const Eigen::Ref<const Matrix>& x, const Vector& y);

Matrix center_columns(const Eigen::Ref<const Matrix>& x);

}  // namespace lrlasso
