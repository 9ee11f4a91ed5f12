#pragma once

#include <lrlasso/common.hpp>

#include <optional>
#include <vector>

namespace lrlasso {

// Weighted L1-penalized regression
//
//   gaussian:  1/2 sum_i w_i (y_i - mu m_i - x_i' beta)^2 + lambda |beta|_1
//   binomial:  sum_i w_i [log(1 + exp(eta_i)) - y_i eta_i] + lambda |beta|_1,
//              eta_i = mu m_i + x_i' beta
//
// where m_i = 1 for the first `intercept_rows` rows and 0 afterwards. Rows
// without the intercept are used to carry linear constraints on beta.
struct LassoProblem {
  Matrix design;
  Vector response;
  Vector weights;  // empty means unit weights
  double lambda = 0.0;
  Family family = Family::gaussian;
  Index intercept_rows = -1;  // -1: every row

  Index n() const { return design.rows(); }
  Index q() const { return design.cols(); }
  Index rows_with_intercept() const { return intercept_rows < 0 ? n() : intercept_rows; }
  double weight(Index i) const { return weights.size() == 0 ? 1.0 : weights[i]; }
};

struct SolverOptions {
  int max_sweeps = 100000;
  double coef_tol = 1e-9;  // relative to 1 + max |beta|
  double kkt_tol = 1e-7;
  int max_irls = 100;
  double irls_weight_floor = 1e-5;
  // Sum-zero constraint: |sum beta| <= constraint_rel_tol * |beta|_1 + constraint_abs_tol.
  double constraint_rel_tol = 1e-8;
  double constraint_abs_tol = 1e-12;
  int max_multiplier_updates = 500;
};

struct LassoSolution {
  Vector coefficients;
  double intercept = 0.0;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  // Constrained fits only.
  double constraint_residual = 0.0;
  double multiplier = 0.0;
};

double lasso_objective(const LassoProblem& problem, const Vector& beta, double intercept);

// Coordinate descent (gaussian) or IRLS around weighted coordinate descent
// (binomial). Warm-started from `init` when given. Does not throw on
// non-convergence: check `converged`.
LassoSolution solve_lasso(const LassoProblem& problem, const LassoSolution* init = nullptr,
                          const SolverOptions& options = {});

// Largest KKT violation of the unconstrained problem at (beta, intercept).
double kkt_check(const LassoProblem& problem, const LassoSolution& solution);

// Same, for the problem with the extra constraint sum(beta) = 0. The scalar
// multiplier is profiled out (the value minimizing the violation is used).
double kkt_check_constrained(const LassoProblem& problem, const LassoSolution& solution);

// Smallest lambda for which beta = 0 solves the unconstrained problem.
double lasso_lambda_max(const Eigen::Ref<const Matrix>& x, const Vector& y, Family family,
                        const Vector& weights = {});

// min over sum(beta) = 0 of the gaussian / binomial objective above with
// penalty gamma. Solved with the weighted lasso solver on the data plus one
// all-ones observation (no intercept) whose response carries the scaled
// constraint multiplier.
LassoSolution constrained_lasso(const Eigen::Ref<const Matrix>& w, const Vector& y, double gamma,
                                Family family, const LassoSolution* init = nullptr,
                                const SolverOptions& options = {});

// Objective of the constrained problem (identical to the unconstrained one; the
// constraint only restricts the feasible set).
double constrained_objective(const Eigen::Ref<const Matrix>& w, const Vector& y, Family family,
                             const Vector& beta, double intercept, double gamma);

// Smallest gamma at which beta = 0 solves the constrained problem.
double constrained_gamma_max(const Eigen::Ref<const Matrix>& w, const Vector& y, Family family);

struct PathPoint {
  double penalty = 0.0;
  LassoSolution solution;
};

// Geometric grid from gamma_max down to gamma_max * min_ratio, warm-started.
std::vector<double> geometric_grid(double top, Index count, double min_ratio);

std::vector<PathPoint> lambda_path(const Eigen::Ref<const Matrix>& w, const Vector& y,
                                   Family family, Index n_lambda, double lambda_min_ratio,
                                   const SolverOptions& options = {});

// Path over an explicit descending grid of gammas.
std::vector<PathPoint> constrained_path(const Eigen::Ref<const Matrix>& w, const Vector& y,
                                        Family family, const std::vector<double>& gammas,
                                        const SolverOptions& options = {});

// Plain (unconstrained) lasso path with intercept; used by the vanilla-lasso baseline.
std::vector<PathPoint> lasso_path(const Eigen::Ref<const Matrix>& x, const Vector& y,
                                  Family family, const std::vector<double>& lambdas,
                                  const SolverOptions& options = {});

// Accelerated proximal gradient (FISTA with adaptive restart) for the
// unweighted gaussian lasso with intercept. Shares no code with the coordinate
// descent path; used for cross-checks and as the expanded-design baseline.
LassoSolution proximal_gradient_lasso(const Eigen::Ref<const Matrix>& x, const Vector& y,
                                      double lambda, int max_iter = 200000, double tol = 1e-13);

// Fitted linear predictor mu + x' beta.
Vector linear_predictor(const Eigen::Ref<const Matrix>& x, const LassoSolution& solution);

}  // namespace lrlasso
