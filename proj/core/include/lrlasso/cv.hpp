#pragma once

#include <lrlasso/common.hpp>
#include <lrlasso/data.hpp>
#include <lrlasso/solver.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lrlasso {

struct FoldPlan {
  std::vector<int> assignments;  // fold of each row, 0-based
  int k = 0;
  std::optional<std::string> blocked_by;
  std::uint64_t seed = 0;

  std::vector<Index> test_rows(int fold) const;
  std::vector<Index> train_rows(int fold) const;
};

// Balanced random assignment of n rows to k folds.
FoldPlan make_folds(Index n, int k, std::uint64_t seed);

// Randomizes whole groups into folds, balancing fold sizes greedily.
FoldPlan make_blocked_folds(std::span<const std::string> groups, int k, std::uint64_t seed,
                            std::string blocked_by = "group");

// Blocked when `blocked` is set and the dataset carries group ids.
FoldPlan make_folds(const Dataset& data, int k, std::uint64_t seed, bool blocked);

enum class CvRule { min, one_se };
std::string_view to_string(CvRule rule);
CvRule parse_cv_rule(std::string_view name);

struct GridPoint {
  double lambda = 0.0;  // log-ratio / vanilla lasso penalty (or ridge penalty)
  double gamma = 0.0;   // constrained-lasso penalty
  Index k = -1;         // stepwise steps; -1 when not part of the grid
};

struct CvCurve {
  std::vector<GridPoint> grid;
  std::vector<double> mean_error;
  std::vector<double> se_error;
  std::vector<double> misclassification;  // binomial only
  Matrix fold_errors;                      // grid x folds
  // Lower is sparser; the one-SE rule picks the least complex point within
  // one standard error of the minimum.
  std::vector<double> complexity;
  Index index_min = 0;
  Index index_one_se = 0;
  CvRule rule = CvRule::min;

  Index chosen() const { return rule == CvRule::min ? index_min : index_one_se; }
  const GridPoint& chosen_point() const { return grid[static_cast<std::size_t>(chosen())]; }
};

struct PathSpec {
  Index n_lambda = 50;
  double lambda_min_ratio = 1e-3;
};

// Held-out loss: mean squared error (gaussian) or mean deviance (binomial).
double heldout_loss(const Vector& y, const Vector& linear_predictor, Family family);
double misclassification_rate(const Vector& y, const Vector& linear_predictor);

// Single-stage log-ratio lasso; grid in gamma (lambda = 2 gamma).
CvCurve cv_constrained_lasso(const Eigen::Ref<const Matrix>& w, const Vector& y,
                             const FoldPlan& folds, const PathSpec& path, Family family,
                             CvRule rule = CvRule::min, const SolverOptions& options = {});

// Ordinary lasso on the log features.
CvCurve cv_lasso(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                 const PathSpec& path, Family family, CvRule rule = CvRule::min,
                 const SolverOptions& options = {});

// Joint (lambda, k) grid for the two-stage procedure. The stage-1 path is
// warm-started across the (descending) lambda grid within each fold, and one
// stepwise trace up to max(k_grid) serves every k.
CvCurve cv_two_stage(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                     const std::vector<double>& lambda_grid, const std::vector<Index>& k_grid,
                     Family family, bool conservative, CvRule rule = CvRule::min,
                     const SolverOptions& options = {});

// Default two-stage lambda grid: geometric from the log-ratio lasso lambda_max.
std::vector<double> two_stage_lambda_grid(const Eigen::Ref<const Matrix>& w, const Vector& y,
                                          Family family, const PathSpec& path);

enum class StepwiseKind { approximate, exact_on_features };

// Steps 0..k_max of approximate forward stepwise (log-ratio) or of exact
// forward stepwise on the log-feature columns.
CvCurve cv_stepwise(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                    Index k_max, StepwiseKind kind, CvRule rule = CvRule::min);

// Ridge on the log features over `penalties` (descending).
CvCurve cv_ridge(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                 const std::vector<double>& penalties, CvRule rule = CvRule::min);

struct RidgeFit {
  Vector coefficients;
  double intercept = 0.0;
};
RidgeFit ridge_fit(const Eigen::Ref<const Matrix>& x, const Vector& y, double penalty);
std::vector<double> ridge_penalty_grid(const Eigen::Ref<const Matrix>& x, Index count);

// Fills mean/se/argmin/one-SE from fold_errors and complexity.
void summarize_curve(CvCurve& curve);

}  // namespace lrlasso
