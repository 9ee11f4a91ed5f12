#pragma once

#include <lrlasso/common.hpp>
#include <lrlasso/data.hpp>
#include <lrlasso/solver.hpp>
#include <lrlasso/stepwise.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lrlasso {

// Sparse log-ratio coefficients: y = mu + sum theta_{jk} log(x_j / x_k).
struct PairCoefficients {
  std::map<FeaturePair, double> pairs;  // j < k, no stored zeros
  Index p = 0;
  double intercept = 0.0;

  void set(FeaturePair pair, double value);  // orients (k, j) as (j, k) with -value
  double l1_norm() const;
  void validate() const;
};

// Linear coefficients on log(x): y = mu + sum beta_j log(x_j).
struct ContrastCoefficients {
  Vector beta;
  double intercept = 0.0;
  double sum_residual = 0.0;  // |sum beta|
};

ContrastCoefficients pairs_to_contrast(const PairCoefficients& theta);

// Canonical representative: theta_{ij} = 2 |b_i| |b_j| / |b|_1 between every
// positive and every negative coefficient. Throws DomainError when
// |sum b| > tolerance * (1 + |b|_1).
PairCoefficients contrast_to_pairs(const ContrastCoefficients& contrast, double tolerance = 1e-8);

struct FitReport {
  std::string method;
  Family family = Family::gaussian;
  double lambda = 0.0;  // log-ratio lasso penalty
  double gamma = 0.0;   // constrained-lasso penalty, lambda / 2
  std::optional<Index> k;
  double objective = 0.0;
  double kkt_residual = 0.0;
  double constraint_residual = 0.0;
  int iterations = 0;
  bool converged = true;
  bool include_unpaired = false;
  std::vector<Index> screened;  // stage-1 support (two-stage only)
  std::vector<std::string> warnings;
};

struct SingleStageFit {
  PairCoefficients theta;
  ContrastCoefficients contrast;
  LassoSolution solution;
  FitReport report;
};

// Log-ratio lasso at penalty lambda via the constrained lasso at lambda / 2.
// With include_unpaired a zero column (log of the constant feature "_one") is
// appended to w, so the result has p + 1 features.
SingleStageFit fit_single_stage(const Eigen::Ref<const Matrix>& w, const Vector& y, double lambda,
                                Family family, bool include_unpaired = false,
                                const LassoSolution* init = nullptr,
                                const SolverOptions& options = {});

// Stage 2 of the two-stage procedure on a given screen: forward stepwise over
// all ratios among `support`, regressing `target` (y, or the stage-1 fitted
// values in the conservative variant). The trace runs up to k_max steps.
struct RatioStepwise {
  std::vector<Index> support;
  std::vector<FeaturePair> candidates;  // ratio columns, in feature indices of w
  StepwiseTrace trace;
  Index p = 0;

  // Model after `steps` steps (clamped to what the trace reached).
  PairCoefficients model(Index steps) const;
};

RatioStepwise prune_stepwise(const Eigen::Ref<const Matrix>& w, const Vector& target,
                             std::span<const Index> support, Index k_max, Family family);

struct TwoStageFit {
  PairCoefficients theta;
  SingleStageFit stage1;
  RatioStepwise stage2;
  FitReport report;
};

TwoStageFit fit_two_stage(const Eigen::Ref<const Matrix>& w, const Vector& y, double lambda,
                          Index k_max, Family family, bool conservative,
                          bool include_unpaired = false, const LassoSolution* init = nullptr,
                          const SolverOptions& options = {});

// Linear predictor mu + sum theta log(x_j / x_k) on log-scale features.
Vector linear_predictor(const PairCoefficients& theta, const Eigen::Ref<const Matrix>& w);

// Model evaluation on raw positive features; binomial returns probabilities.
// A model fit with unpaired terms expects the augment_ones() dataset.
Vector predict(const PairCoefficients& theta, const Dataset& data, Family family);

std::vector<Index> contrast_support(const Vector& beta);

}  // namespace lrlasso
