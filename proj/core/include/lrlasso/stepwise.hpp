#pragma once

#include <lrlasso/common.hpp>

#include <chrono>
#include <span>
#include <vector>

namespace lrlasso {

enum class StopReason {
  completed,        // ran the requested number of steps
  one_signed,       // approximate FS: no positive or no negative univariate coefficient
  repeated_pair,    // approximate FS: the best pair was already selected
  no_candidates,    // exact FS: every remaining column is collinear with the selection
};

std::string_view to_string(StopReason reason);

struct StepwiseTrace {
  std::vector<Index> columns;      // exact FS: selected columns of the candidate matrix
  std::vector<FeaturePair> pairs;  // ratio selected at each step, oriented as chosen
  // coefficients[s] / intercepts[s]: refit after s steps (coefficients[s].size() == s).
  std::vector<Vector> coefficients;
  std::vector<double> intercepts;
  // residual_norms[s]: ||y - fit|| after s steps (gaussian), deviance (binomial).
  std::vector<double> residual_norms;
  std::vector<std::chrono::nanoseconds> step_times;
  StopReason stop = StopReason::completed;

  Index steps() const { return static_cast<Index>(coefficients.size()) - 1; }
};

// Approximate forward stepwise selection over implicit log-ratio features.
// Each step pairs the feature with the largest positive univariate coefficient
// against the one with the largest negative coefficient (computed on the
// standardized columns of w), then refits all selected ratios of the raw log
// features plus an intercept by least squares. pairs[s] = (i, j) denotes
// log(x_i / x_j) and is NOT reordered; coefficients refer to that orientation.
StepwiseTrace approx_forward_stepwise(const Eigen::Ref<const Matrix>& w, const Vector& y,
                                      Index k);

// Classical forward stepwise over the columns of z (intercept always in the
// model). Gaussian: maximizes |r' z_c| / ||z_c residualized||. Binomial: the
// score statistic of the logistic fit, columns residualized in the IRLS metric.
// Columns whose residualized norm falls below 1e-10 of their norm are skipped.
// `labels`, when non-empty, fills trace.pairs from the selected columns.
StepwiseTrace exact_forward_stepwise(const Eigen::Ref<const Matrix>& z, const Vector& y, Index k,
                                     Family family = Family::gaussian,
                                     std::span<const FeaturePair> labels = {});

// Unpenalized fits used for stepwise refits and for the two-stage procedure.
struct LinearFit {
  Vector coefficients;
  double intercept = 0.0;
  double residual_norm = 0.0;  // gaussian ||r||, binomial deviance
  bool converged = true;
};

LinearFit least_squares_fit(const Eigen::Ref<const Matrix>& x, const Vector& y);
LinearFit logistic_fit(const Eigen::Ref<const Matrix>& x, const Vector& y, int max_iter = 50);

}  // namespace lrlasso
