#include <lrlasso/logratio.hpp>

#include <algorithm>
#include <cmath>

namespace lrlasso {

void PairCoefficients::set(FeaturePair pair, double value) {
  if (pair.first == pair.second) throw DomainError("a log-ratio needs two distinct features");
  if (pair.first > pair.second) {
    std::swap(pair.first, pair.second);
    value = -value;
  }
  if (value == 0.0) {
    pairs.erase(pair);
  } else {
    pairs[pair] = value;
  }
}

double PairCoefficients::l1_norm() const {
  double total = 0.0;
  for (const auto& [pair, value] : pairs) total += std::abs(value);
  return total;
}

void PairCoefficients::validate() const {
  for (const auto& [pair, value] : pairs) {
    if (pair.first < 0 || pair.first >= pair.second || pair.second >= p) {
      throw DomainError("pair (" + std::to_string(pair.first) + ", " + std::to_string(pair.second) +
                        ") is not an ordered pair of features in [0, " + std::to_string(p) + ")");
    }
    if (value == 0.0) throw DomainError("explicit zero stored in pair coefficients");
    if (!std::isfinite(value)) throw DomainError("non-finite pair coefficient");
  }
}

ContrastCoefficients pairs_to_contrast(const PairCoefficients& theta) {
  theta.validate();
  ContrastCoefficients out;
  out.beta = Vector::Zero(theta.p);
  for (const auto& [pair, value] : theta.pairs) {
    out.beta[pair.first] += value;
    out.beta[pair.second] -= value;
  }
  out.intercept = theta.intercept;
  out.sum_residual = std::abs(out.beta.sum());
  return out;
}

PairCoefficients contrast_to_pairs(const ContrastCoefficients& contrast, double tolerance) {
  const Vector& beta = contrast.beta;
  const double l1 = beta.lpNorm<1>();
  const double total = beta.sum();
  if (std::abs(total) > tolerance * (1.0 + l1)) {
    throw DomainError("not a contrast: coefficients sum to " + std::to_string(total) +
                      "; only sum-zero vectors are log-ratio models");
  }
  PairCoefficients theta;
  theta.p = beta.size();
  theta.intercept = contrast.intercept;
  if (l1 == 0.0) return theta;
  for (Index i = 0; i < beta.size(); ++i) {
    if (!(beta[i] > 0.0)) continue;
    for (Index j = 0; j < beta.size(); ++j) {
      if (!(beta[j] < 0.0)) continue;
      theta.set({i, j}, 2.0 * beta[i] * -beta[j] / l1);
    }
  }
  return theta;
}

std::vector<Index> contrast_support(const Vector& beta) {
  std::vector<Index> support;
  for (Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) support.push_back(j);
  }
  return support;
}

namespace {

Matrix with_ones_feature(const Eigen::Ref<const Matrix>& w) {
  Matrix out(w.rows(), w.cols() + 1);
  out.leftCols(w.cols()) = w;
  out.col(w.cols()).setZero();  // log(1)
  return out;
}

}  // namespace

SingleStageFit fit_single_stage(const Eigen::Ref<const Matrix>& w, const Vector& y, double lambda,
                                Family family, bool include_unpaired, const LassoSolution* init,
                                const SolverOptions& options) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
  if (y.size() != w.rows()) throw DimensionError("response length does not match design rows");
  const Matrix design = include_unpaired ? with_ones_feature(w) : Matrix(w);
  const double gamma = 0.5 * lambda;

  SingleStageFit fit;
  fit.solution = constrained_lasso(design, y, gamma, family, init, options);
  fit.contrast.beta = fit.solution.coefficients;
  fit.contrast.intercept = fit.solution.intercept;
  fit.contrast.sum_residual = std::abs(fit.contrast.beta.sum());
  fit.theta = contrast_to_pairs(fit.contrast, 1e-6);

  fit.report.method = "single";
  fit.report.family = family;
  fit.report.lambda = lambda;
  fit.report.gamma = gamma;
  fit.report.objective = fit.solution.objective;
  fit.report.kkt_residual = fit.solution.kkt_residual;
  fit.report.constraint_residual = fit.solution.constraint_residual;
  fit.report.iterations = fit.solution.iterations;
  fit.report.converged = fit.solution.converged;
  fit.report.include_unpaired = include_unpaired;
  if (!fit.solution.converged) fit.report.warnings.emplace_back("constrained lasso did not reach the KKT tolerance");
  return fit;
}

PairCoefficients RatioStepwise::model(Index steps) const {
  const Index s = std::clamp<Index>(steps, 0, trace.steps());
  PairCoefficients theta;
  theta.p = p;
  theta.intercept = trace.intercepts[static_cast<std::size_t>(s)];
  const Vector& coef = trace.coefficients[static_cast<std::size_t>(s)];
  for (Index t = 0; t < s; ++t) theta.set(trace.pairs[static_cast<std::size_t>(t)], coef[t]);
  return theta;
}

RatioStepwise prune_stepwise(const Eigen::Ref<const Matrix>& w, const Vector& target,
                             std::span<const Index> support, Index k_max, Family family) {
  RatioStepwise out;
  out.p = w.cols();
  out.support.assign(support.begin(), support.end());
  std::sort(out.support.begin(), out.support.end());
  out.support.erase(std::unique(out.support.begin(), out.support.end()), out.support.end());
  RatioExpansion expansion = expand_ratios(w, std::span<const Index>(out.support));
  out.candidates = expansion.pairs;
  out.trace = exact_forward_stepwise(expansion.z, target, k_max, family, out.candidates);
  return out;
}

TwoStageFit fit_two_stage(const Eigen::Ref<const Matrix>& w, const Vector& y, double lambda,
                          Index k_max, Family family, bool conservative, bool include_unpaired,
                          const LassoSolution* init, const SolverOptions& options) {
  if (k_max < 0) throw DomainError("k_max must be nonnegative");
  TwoStageFit fit;
  fit.stage1 = fit_single_stage(w, y, lambda, family, include_unpaired, init, options);
  const Matrix design = include_unpaired ? with_ones_feature(w) : Matrix(w);

  std::vector<Index> support = contrast_support(fit.stage1.contrast.beta);
  fit.report = fit.stage1.report;
  fit.report.method = conservative ? "two-stage-conservative" : "two-stage";
  fit.report.k = k_max;
  fit.report.screened = support;
  if (support.empty() && k_max > 0) {
    fit.report.warnings.emplace_back("stage-1 support is empty; returning the intercept-only model");
  }
  if (include_unpaired && !support.empty()) {
    const Index ones = design.cols() - 1;
    if (std::find(support.begin(), support.end(), ones) == support.end()) support.push_back(ones);
  }

  Vector target = y;
  if (conservative) {
    target = linear_predictor(design, fit.stage1.solution);
    if (family == Family::binomial) {
      target = target.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
    }
  }
  fit.stage2 = prune_stepwise(design, target, support, k_max, family);
  fit.theta = fit.stage2.model(k_max);
  return fit;
}

Vector linear_predictor(const PairCoefficients& theta, const Eigen::Ref<const Matrix>& w) {
  if (w.cols() != theta.p) {
    throw DimensionError("model has " + std::to_string(theta.p) + " features, data has " +
                         std::to_string(w.cols()));
  }
  Vector eta = Vector::Constant(w.rows(), theta.intercept);
  for (const auto& [pair, value] : theta.pairs) eta += value * (w.col(pair.first) - w.col(pair.second));
  return eta;
}

Vector predict(const PairCoefficients& theta, const Dataset& data, Family family) {
  if (data.p() != theta.p) {
    throw DimensionError("model has " + std::to_string(theta.p) + " features, data has " +
                         std::to_string(data.p()));
  }
  const Matrix w = data.x.array().log().matrix();
  Vector eta = linear_predictor(theta, w);
  if (family == Family::binomial) eta = eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  return eta;
}

}  // namespace lrlasso
