#include <lrlasso/cv.hpp>
#include <lrlasso/logratio.hpp>
#include <lrlasso/stepwise.hpp>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace lrlasso {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fisher-Yates with an explicit draw so the permutation does not depend on the
// standard library's distribution implementation.
std::vector<Index> permutation(Index n, std::uint64_t seed) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  for (Index i = n - 1; i > 0; --i) {
    const auto bound = static_cast<std::uint64_t>(i + 1);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = rng();
    while (draw >= limit) draw = rng();
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(draw % bound)]);
  }
  return order;
}

void check_fold_count(int k, Index units, const char* what) {
  if (k < 2) throw DomainError("cross-validation needs at least 2 folds");
  if (static_cast<Index>(k) > units) {
    throw DomainError(std::string("cannot split ") + std::to_string(units) + " " + what + " into " +
                      std::to_string(k) + " nonempty folds");
  }
}

struct FoldData {
  Matrix w_train;
  Vector y_train;
  Matrix w_test;
  Vector y_test;
};

FoldData split(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds, int f,
               Family family) {
  const auto train = folds.train_rows(f);
  const auto test = folds.test_rows(f);
  FoldData out{select_rows(w, train), select_rows(y, train), select_rows(w, test), select_rows(y, test)};
  if (family == Family::binomial) {
    const double first = out.y_train[0];
    if ((out.y_train.array() == first).all()) {
      throw DomainError("degenerate fold " + std::to_string(f + 1) +
                        ": training response is constant under the binomial family");
    }
  }
  return out;
}

void check_inputs(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds) {
  if (y.size() != w.rows()) throw DimensionError("response length does not match design rows");
  if (static_cast<Index>(folds.assignments.size()) != w.rows()) {
    throw DimensionError("fold plan covers " + std::to_string(folds.assignments.size()) +
                         " rows, data has " + std::to_string(w.rows()));
  }
}

CvCurve empty_curve(std::vector<GridPoint> grid, int k, CvRule rule) {
  CvCurve curve;
  curve.grid = std::move(grid);
  const auto g = static_cast<Index>(curve.grid.size());
  curve.fold_errors = Matrix::Constant(g, k, kInf);
  curve.complexity.resize(curve.grid.size());
  curve.rule = rule;
  return curve;
}

Matrix misclassification_table(Index g, int k) { return Matrix::Constant(g, k, kInf); }

void fill_misclassification(CvCurve& curve, const Matrix& table) {
  curve.misclassification.assign(curve.grid.size(), kInf);
  for (Index i = 0; i < table.rows(); ++i) {
    if (table.row(i).allFinite()) curve.misclassification[static_cast<std::size_t>(i)] = table.row(i).mean();
  }
}

double log1p_exp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

std::vector<Index> FoldPlan::test_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

std::vector<Index> FoldPlan::train_rows(int fold) const {
  std::vector<Index> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) rows.push_back(static_cast<Index>(i));
  }
  return rows;
}

FoldPlan make_folds(Index n, int k, std::uint64_t seed) {
  check_fold_count(k, n, "rows");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(static_cast<std::size_t>(n), 0);
  const auto order = permutation(n, seed);
  for (std::size_t i = 0; i < order.size(); ++i) {
    plan.assignments[static_cast<std::size_t>(order[i])] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return plan;
}

FoldPlan make_blocked_folds(std::span<const std::string> groups, int k, std::uint64_t seed,
                            std::string blocked_by) {
  std::vector<std::string> distinct;
  std::map<std::string, Index> index_of;
  std::vector<Index> size;
  for (const auto& g : groups) {
    auto [it, inserted] = index_of.emplace(g, static_cast<Index>(distinct.size()));
    if (inserted) {
      distinct.push_back(g);
      size.push_back(0);
    }
    ++size[static_cast<std::size_t>(it->second)];
  }
  check_fold_count(k, static_cast<Index>(distinct.size()), "groups");

  // Shuffled groups go, largest first, to the currently smallest fold; the
  // stable sort keeps the random order among groups of equal size.
  auto order = permutation(static_cast<Index>(distinct.size()), seed);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return size[static_cast<std::size_t>(a)] > size[static_cast<std::size_t>(b)];
  });
  std::vector<Index> fold_of(distinct.size(), 0);
  std::vector<Index> load(static_cast<std::size_t>(k), 0);
  for (Index g : order) {
    const auto smallest = std::min_element(load.begin(), load.end()) - load.begin();
    fold_of[static_cast<std::size_t>(g)] = smallest;
    load[static_cast<std::size_t>(smallest)] += size[static_cast<std::size_t>(g)];
  }

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.blocked_by = std::move(blocked_by);
  plan.assignments.reserve(groups.size());
  for (const auto& g : groups) {
    plan.assignments.push_back(static_cast<int>(fold_of[static_cast<std::size_t>(index_of.at(g))]));
  }
  return plan;
}

FoldPlan make_folds(const Dataset& data, int k, std::uint64_t seed, bool blocked) {
  if (!blocked) return make_folds(data.n(), k, seed);
  if (!data.group_ids) throw DomainError("blocked cross-validation requested but the data has no group column");
  return make_blocked_folds(*data.group_ids, k, seed);
}

std::string_view to_string(CvRule rule) { return rule == CvRule::min ? "min" : "one_se"; }

CvRule parse_cv_rule(std::string_view name) {
  if (name == "min") return CvRule::min;
  if (name == "one_se" || name == "one-se" || name == "1se") return CvRule::one_se;
  throw DomainError("unknown CV rule '" + std::string(name) + "' (expected min or one_se)");
}

double heldout_loss(const Vector& y, const Vector& eta, Family family) {
  if (y.size() != eta.size()) throw DimensionError("prediction length does not match response");
  if (y.size() == 0) throw DomainError("empty held-out fold");
  if (family == Family::gaussian) return (y - eta).squaredNorm() / static_cast<double>(y.size());
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) total += 2.0 * (log1p_exp(eta[i]) - y[i] * eta[i]);
  return total / static_cast<double>(y.size());
}

double misclassification_rate(const Vector& y, const Vector& eta) {
  if (y.size() != eta.size()) throw DimensionError("prediction length does not match response");
  Index wrong = 0;
  for (Index i = 0; i < y.size(); ++i) wrong += ((eta[i] > 0.0) != (y[i] > 0.5)) ? 1 : 0;
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

void summarize_curve(CvCurve& curve) {
  const Index g = curve.fold_errors.rows();
  const Index k = curve.fold_errors.cols();
  if (g == 0) throw DomainError("empty tuning grid");
  curve.mean_error.assign(static_cast<std::size_t>(g), kInf);
  curve.se_error.assign(static_cast<std::size_t>(g), kInf);
  for (Index i = 0; i < g; ++i) {
    const auto row = curve.fold_errors.row(i);
    if (!row.allFinite()) continue;
    const double m = row.mean();
    const double var = k > 1 ? (row.array() - m).square().sum() / static_cast<double>(k - 1) : 0.0;
    curve.mean_error[static_cast<std::size_t>(i)] = m;
    curve.se_error[static_cast<std::size_t>(i)] = std::sqrt(var / static_cast<double>(k));
  }
  const auto best = std::min_element(curve.mean_error.begin(), curve.mean_error.end());
  if (!std::isfinite(*best)) throw ConvergenceError("every grid point failed in at least one fold");
  curve.index_min = best - curve.mean_error.begin();
  const double threshold = *best + curve.se_error[static_cast<std::size_t>(curve.index_min)];
  curve.index_one_se = curve.index_min;
  for (Index i = 0; i < g; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (curve.mean_error[s] > threshold) continue;
    if (curve.complexity[s] < curve.complexity[static_cast<std::size_t>(curve.index_one_se)]) {
      curve.index_one_se = i;
    }
  }
}

CvCurve cv_constrained_lasso(const Eigen::Ref<const Matrix>& w, const Vector& y,
                             const FoldPlan& folds, const PathSpec& path, Family family,
                             CvRule rule, const SolverOptions& options) {
  check_inputs(w, y, folds);
  const auto gammas = geometric_grid(constrained_gamma_max(w, y, family), path.n_lambda, path.lambda_min_ratio);
  std::vector<GridPoint> grid;
  for (double g : gammas) grid.push_back({2.0 * g, g, -1});
  CvCurve curve = empty_curve(std::move(grid), folds.k, rule);
  for (std::size_t i = 0; i < gammas.size(); ++i) curve.complexity[i] = static_cast<double>(i);
  Matrix miss = misclassification_table(curve.fold_errors.rows(), folds.k);

  for (int f = 0; f < folds.k; ++f) {
    const FoldData d = split(w, y, folds, f, family);
    std::optional<LassoSolution> warm;
    for (std::size_t i = 0; i < gammas.size(); ++i) {
      try {
        LassoSolution sol = constrained_lasso(d.w_train, d.y_train, gammas[i], family,
                                              warm ? &*warm : nullptr, options);
        const Vector eta = linear_predictor(d.w_test, sol);
        curve.fold_errors(static_cast<Index>(i), f) = heldout_loss(d.y_test, eta, family);
        if (family == Family::binomial) miss(static_cast<Index>(i), f) = misclassification_rate(d.y_test, eta);
        warm = std::move(sol);
      } catch (const Error&) {
        warm.reset();
      }
    }
  }
  summarize_curve(curve);
  if (family == Family::binomial) fill_misclassification(curve, miss);
  return curve;
}

CvCurve cv_lasso(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                 const PathSpec& path, Family family, CvRule rule, const SolverOptions& options) {
  check_inputs(w, y, folds);
  const auto lambdas = geometric_grid(lasso_lambda_max(w, y, family), path.n_lambda, path.lambda_min_ratio);
  std::vector<GridPoint> grid;
  for (double l : lambdas) grid.push_back({l, 0.0, -1});
  CvCurve curve = empty_curve(std::move(grid), folds.k, rule);
  for (std::size_t i = 0; i < lambdas.size(); ++i) curve.complexity[i] = static_cast<double>(i);
  Matrix miss = misclassification_table(curve.fold_errors.rows(), folds.k);

  for (int f = 0; f < folds.k; ++f) {
    const FoldData d = split(w, y, folds, f, family);
    LassoProblem problem;
    problem.design = d.w_train;
    problem.response = d.y_train;
    problem.family = family;
    std::optional<LassoSolution> warm;
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      problem.lambda = lambdas[i];
      LassoSolution sol = solve_lasso(problem, warm ? &*warm : nullptr, options);
      if (!sol.coefficients.allFinite()) continue;
      const Vector eta = linear_predictor(d.w_test, sol);
      curve.fold_errors(static_cast<Index>(i), f) = heldout_loss(d.y_test, eta, family);
      if (family == Family::binomial) miss(static_cast<Index>(i), f) = misclassification_rate(d.y_test, eta);
      warm = std::move(sol);
    }
  }
  summarize_curve(curve);
  if (family == Family::binomial) fill_misclassification(curve, miss);
  return curve;
}

std::vector<double> two_stage_lambda_grid(const Eigen::Ref<const Matrix>& w, const Vector& y,
                                          Family family, const PathSpec& path) {
  return geometric_grid(2.0 * constrained_gamma_max(w, y, family), path.n_lambda, path.lambda_min_ratio);
}

CvCurve cv_two_stage(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                     const std::vector<double>& lambda_grid, const std::vector<Index>& k_grid,
                     Family family, bool conservative, CvRule rule, const SolverOptions& options) {
  check_inputs(w, y, folds);
  if (lambda_grid.empty() || k_grid.empty()) throw DomainError("two-stage CV needs nonempty lambda and k grids");
  for (Index k : k_grid) {
    if (k < 0) throw DomainError("k grid entries must be nonnegative");
  }
  const Index k_max = *std::max_element(k_grid.begin(), k_grid.end());

  // Visit lambdas from largest to smallest so each stage-1 fit warm-starts
  // from a sparser neighbour; the curve keeps the caller's ordering.
  std::vector<std::size_t> visit(lambda_grid.size());
  std::iota(visit.begin(), visit.end(), std::size_t{0});
  std::stable_sort(visit.begin(), visit.end(),
                   [&](std::size_t a, std::size_t b) { return lambda_grid[a] > lambda_grid[b]; });
  std::vector<std::size_t> rank(lambda_grid.size());
  for (std::size_t r = 0; r < visit.size(); ++r) rank[visit[r]] = r;

  std::vector<GridPoint> grid;
  std::vector<double> complexity;
  const double n_l = static_cast<double>(lambda_grid.size());
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    for (Index k : k_grid) {
      grid.push_back({lambda_grid[i], 0.5 * lambda_grid[i], k});
      complexity.push_back(static_cast<double>(k) + static_cast<double>(rank[i]) / (n_l + 1.0));
    }
  }
  CvCurve curve = empty_curve(std::move(grid), folds.k, rule);
  curve.complexity = std::move(complexity);
  Matrix miss = misclassification_table(curve.fold_errors.rows(), folds.k);
  const auto n_k = static_cast<Index>(k_grid.size());

  for (int f = 0; f < folds.k; ++f) {
    const FoldData d = split(w, y, folds, f, family);
    std::optional<LassoSolution> warm;
    for (std::size_t i : visit) {
      try {
        const TwoStageFit fit = fit_two_stage(d.w_train, d.y_train, lambda_grid[i], k_max, family,
                                              conservative, false, warm ? &*warm : nullptr, options);
        warm = fit.stage1.solution;
        for (Index kk = 0; kk < n_k; ++kk) {
          const Index row = static_cast<Index>(i) * n_k + kk;
          try {
            const PairCoefficients theta = fit.stage2.model(k_grid[static_cast<std::size_t>(kk)]);
            const Vector eta = linear_predictor(theta, d.w_test);
            curve.fold_errors(row, f) = heldout_loss(d.y_test, eta, family);
            if (family == Family::binomial) miss(row, f) = misclassification_rate(d.y_test, eta);
          } catch (const Error&) {
            // leave the point at infinite error
          }
        }
      } catch (const Error&) {
        warm.reset();
      }
    }
  }
  summarize_curve(curve);
  if (family == Family::binomial) fill_misclassification(curve, miss);
  return curve;
}

CvCurve cv_stepwise(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                    Index k_max, StepwiseKind kind, CvRule rule) {
  check_inputs(w, y, folds);
  if (k_max < 0) throw DomainError("k_max must be nonnegative");
  std::vector<GridPoint> grid;
  for (Index k = 0; k <= k_max; ++k) grid.push_back({0.0, 0.0, k});
  CvCurve curve = empty_curve(std::move(grid), folds.k, rule);
  for (Index k = 0; k <= k_max; ++k) curve.complexity[static_cast<std::size_t>(k)] = static_cast<double>(k);

  for (int f = 0; f < folds.k; ++f) {
    const FoldData d = split(w, y, folds, f, Family::gaussian);
    if (kind == StepwiseKind::approximate) {
      const StepwiseTrace trace = approx_forward_stepwise(d.w_train, d.y_train, k_max);
      for (Index k = 0; k <= k_max; ++k) {
        const auto s = static_cast<std::size_t>(std::min(k, trace.steps()));
        Vector eta = Vector::Constant(d.w_test.rows(), trace.intercepts[s]);
        for (std::size_t t = 0; t < s; ++t) {
          const FeaturePair& pr = trace.pairs[t];
          eta += trace.coefficients[s][static_cast<Index>(t)] * (d.w_test.col(pr.first) - d.w_test.col(pr.second));
        }
        curve.fold_errors(k, f) = heldout_loss(d.y_test, eta, Family::gaussian);
      }
    } else {
      const StepwiseTrace trace = exact_forward_stepwise(d.w_train, d.y_train, k_max);
      for (Index k = 0; k <= k_max; ++k) {
        const auto s = static_cast<std::size_t>(std::min(k, trace.steps()));
        Vector eta = Vector::Constant(d.w_test.rows(), trace.intercepts[s]);
        for (std::size_t t = 0; t < s; ++t) {
          eta += trace.coefficients[s][static_cast<Index>(t)] * d.w_test.col(trace.columns[t]);
        }
        curve.fold_errors(k, f) = heldout_loss(d.y_test, eta, Family::gaussian);
      }
    }
  }
  summarize_curve(curve);
  return curve;
}

RidgeFit ridge_fit(const Eigen::Ref<const Matrix>& x, const Vector& y, double penalty) {
  if (!(penalty >= 0.0)) throw DomainError("ridge penalty must be nonnegative");
  if (y.size() != x.rows()) throw DimensionError("response length does not match design rows");
  const Eigen::RowVectorXd means = x.colwise().mean();
  const Matrix xc = x.rowwise() - means;
  const double y_mean = y.mean();
  Matrix gram = xc.transpose() * xc;
  gram.diagonal().array() += penalty;
  RidgeFit fit;
  if (penalty > 0.0) {
    fit.coefficients = gram.llt().solve(xc.transpose() * (y.array() - y_mean).matrix());
  } else {
    fit.coefficients = xc.completeOrthogonalDecomposition().solve((y.array() - y_mean).matrix());
  }
  fit.intercept = y_mean - means.dot(fit.coefficients);
  return fit;
}

std::vector<double> ridge_penalty_grid(const Eigen::Ref<const Matrix>& x, Index count) {
  const Matrix xc = x.rowwise() - x.colwise().mean();
  const Eigen::JacobiSVD<Matrix> svd(xc);
  const double top = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 1.0;
  // Largest penalty shrinks every direction by at least 1000x.
  return geometric_grid(1e3 * top * top, count, 1e-6);
}

CvCurve cv_ridge(const Eigen::Ref<const Matrix>& w, const Vector& y, const FoldPlan& folds,
                 const std::vector<double>& penalties, CvRule rule) {
  check_inputs(w, y, folds);
  if (penalties.empty()) throw DomainError("ridge CV needs a nonempty penalty grid");
  std::vector<GridPoint> grid;
  for (double pen : penalties) grid.push_back({pen, 0.0, -1});
  CvCurve curve = empty_curve(std::move(grid), folds.k, rule);
  for (std::size_t i = 0; i < penalties.size(); ++i) curve.complexity[i] = -penalties[i];
  for (int f = 0; f < folds.k; ++f) {
    const FoldData d = split(w, y, folds, f, Family::gaussian);
    for (std::size_t i = 0; i < penalties.size(); ++i) {
      const RidgeFit fit = ridge_fit(d.w_train, d.y_train, penalties[i]);
      const Vector eta = (d.w_test * fit.coefficients).array() + fit.intercept;
      curve.fold_errors(static_cast<Index>(i), f) = heldout_loss(d.y_test, eta, Family::gaussian);
    }
  }
  summarize_curve(curve);
  return curve;
}

}  // namespace lrlasso
