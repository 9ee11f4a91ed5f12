#include <lrlasso/simulate.hpp>
#include <lrlasso/cv.hpp>
#include <lrlasso/stats.hpp>
#include <lrlasso/stepwise.hpp>

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace lrlasso {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto rng = make_rng(master, stream, index);
  return rng();
}

// |N(0,1)| draws, row by row; an exact zero (probability ~0) is redrawn so the
// log stays finite.
Matrix abs_gaussian(Index n, Index p, std::mt19937_64& rng) {
  boost::random::normal_distribution<double> normal;
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      double v = 0.0;
      while (v == 0.0) v = std::abs(normal(rng));
      x(i, j) = v;
    }
  }
  return x;
}

Vector gaussian_noise(Index n, std::mt19937_64& rng) {
  boost::random::normal_distribution<double> normal;
  Vector e(n);
  for (Index i = 0; i < n; ++i) e[i] = normal(rng);
  return e;
}

std::vector<std::string> default_names(Index p) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  return names;
}

Dataset draw_linear(Index n, Index p, const Vector& beta, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset d;
  d.x = abs_gaussian(n, p, rng);
  d.y = d.x.array().log().matrix() * beta + gaussian_noise(n, rng);
  d.feature_names = default_names(p);
  return d;
}

// Run body(i) for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots so the outcome does not depend on scheduling.
void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  const int workers = std::max(1, std::min(threads, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct RepFit {
  Vector beta;
  double intercept = 0.0;
  std::optional<PairCoefficients> theta;  // ratio methods only
};

RepFit from_pairs(const PairCoefficients& theta) {
  const ContrastCoefficients c = pairs_to_contrast(theta);
  return {c.beta, c.intercept, theta};
}

RepFit fit_method(Method method, const Matrix& w, const Vector& y, const FoldPlan& folds,
                  const SimSpec& spec) {
  const PathSpec path{spec.n_lambda, spec.lambda_min_ratio};
  switch (method) {
    case Method::approx_fs: {
      const CvCurve curve = cv_stepwise(w, y, folds, spec.k_max, StepwiseKind::approximate);
      const Index k = curve.chosen_point().k;
      const StepwiseTrace trace = approx_forward_stepwise(w, y, k);
      const auto s = static_cast<std::size_t>(trace.steps());
      PairCoefficients theta;
      theta.p = w.cols();
      theta.intercept = trace.intercepts[s];
      for (std::size_t t = 0; t < s; ++t) theta.set(trace.pairs[t], trace.coefficients[s][static_cast<Index>(t)]);
      return from_pairs(theta);
    }
    case Method::fs: {
      const CvCurve curve = cv_stepwise(w, y, folds, spec.k_max, StepwiseKind::exact_on_features);
      const StepwiseTrace trace = exact_forward_stepwise(w, y, curve.chosen_point().k);
      const auto s = static_cast<std::size_t>(trace.steps());
      RepFit fit{Vector::Zero(w.cols()), trace.intercepts[s], std::nullopt};
      for (std::size_t t = 0; t < s; ++t) fit.beta[trace.columns[t]] = trace.coefficients[s][static_cast<Index>(t)];
      return fit;
    }
    case Method::ridge: {
      const auto penalties = ridge_penalty_grid(w, spec.n_lambda);
      const CvCurve curve = cv_ridge(w, y, folds, penalties);
      const RidgeFit r = ridge_fit(w, y, curve.chosen_point().lambda);
      return {r.coefficients, r.intercept, std::nullopt};
    }
    case Method::single_stage: {
      const CvCurve curve = cv_constrained_lasso(w, y, folds, path, Family::gaussian);
      const SingleStageFit fit = fit_single_stage(w, y, curve.chosen_point().lambda, Family::gaussian);
      return {fit.contrast.beta, fit.contrast.intercept, fit.theta};
    }
    case Method::two_stage:
    case Method::two_stage_conservative: {
      const bool conservative = method == Method::two_stage_conservative;
      const auto lambdas = two_stage_lambda_grid(w, y, Family::gaussian,
                                                 {spec.two_stage_n_lambda, spec.two_stage_min_ratio});
      std::vector<Index> ks;
      for (Index k = 0; k <= spec.k_max; ++k) ks.push_back(k);
      const CvCurve curve = cv_two_stage(w, y, folds, lambdas, ks, Family::gaussian, conservative);
      const GridPoint& best = curve.chosen_point();
      const TwoStageFit fit = fit_two_stage(w, y, best.lambda, best.k, Family::gaussian, conservative);
      return from_pairs(fit.theta);
    }
    case Method::vanilla_lasso: {
      const CvCurve curve = cv_lasso(w, y, folds, path, Family::gaussian);
      LassoProblem problem;
      problem.design = w;
      problem.response = y;
      problem.lambda = curve.chosen_point().lambda;
      const LassoSolution sol = solve_lasso(problem);
      return {sol.coefficients, sol.intercept, std::nullopt};
    }
  }
  throw DomainError("unknown method");
}

struct RepOutcome {
  bool ok = false;
  std::string error;
  double test_mse = kNaN;
  double test_error = kNaN;
  double coef_mse = kNaN;
  double large = 0.0;
  double small = 0.0;
  double nulls = 0.0;
  double null_pairs = 0.0;
  double support = 0.0;
  double seconds = 0.0;
  Vector bias_predictions;
};

bool has_pair(const PairCoefficients& theta, FeaturePair pair) { return theta.pairs.count(pair) > 0; }

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::approx_fs: return "approx_fs";
    case Method::fs: return "fs";
    case Method::ridge: return "ridge";
    case Method::single_stage: return "single_stage";
    case Method::two_stage: return "two_stage";
    case Method::two_stage_conservative: return "two_stage_conservative";
    case Method::vanilla_lasso: return "vanilla_lasso";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '-', '_');
  for (Method m : all_methods()) {
    if (to_string(m) == key) return m;
  }
  throw DomainError("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() {
  return {Method::approx_fs,  Method::fs,        Method::ridge,
          Method::single_stage, Method::two_stage, Method::two_stage_conservative,
          Method::vanilla_lasso};
}

bool is_ratio_method(Method method) {
  return method == Method::approx_fs || method == Method::single_stage || method == Method::two_stage ||
         method == Method::two_stage_conservative;
}

std::mt19937_64 make_rng(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t index) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(master_seed), hi(master_seed), lo(stream), hi(stream), lo(index), hi(index)};
  return std::mt19937_64(seq);
}

ContrastCoefficients sim_truth(SimModel model, Index p, double s) {
  if (!(s >= 0.0)) throw DomainError("signal amplitude must be nonnegative");
  const Index needed = model == SimModel::misspecified ? 5 : (model == SimModel::two_ratio ? 4 : 2);
  if (p < needed) throw DomainError("this model needs p >= " + std::to_string(needed));
  ContrastCoefficients truth;
  truth.beta = Vector::Zero(p);
  switch (model) {
    case SimModel::misspecified:
      truth.beta[4] = 0.3;
      [[fallthrough]];
    case SimModel::two_ratio:
      truth.beta[0] = 2.0 * s;
      truth.beta[1] = -2.0 * s;
      truth.beta[2] = s;
      truth.beta[3] = -s;
      break;
    case SimModel::pvalue_null_ratio:
      truth.beta[0] = 2.0;
      truth.beta[1] = -2.0;
      break;
    case SimModel::pvalue_null_single:
      truth.beta[0] = 2.0;
      break;
  }
  truth.sum_residual = std::abs(truth.beta.sum());
  return truth;
}

Experiment1Data gen_experiment1(Index n, Index p, double s, std::uint64_t seed) {
  const ContrastCoefficients beta = sim_truth(SimModel::two_ratio, p, s);
  Experiment1Data out;
  out.data = draw_linear(n, p, beta.beta, seed);
  out.truth.p = p;
  out.truth.set({0, 1}, 2.0 * s);
  out.truth.set({2, 3}, s);
  return out;
}

Experiment2Data gen_experiment2(Index n, Index p, double s, std::uint64_t seed) {
  Experiment2Data out;
  out.truth = sim_truth(SimModel::misspecified, p, s);
  out.data = draw_linear(n, p, out.truth.beta, seed);
  return out;
}

Vector pvalue_example_beta(Index p, PvalueModel which) {
  return sim_truth(which == PvalueModel::null_ratio ? SimModel::pvalue_null_ratio : SimModel::pvalue_null_single,
                   p, 0.0)
      .beta;
}

Dataset gen_pvalue_example(Index n, Index p, PvalueModel which, std::uint64_t seed) {
  return draw_linear(n, p, pvalue_example_beta(p, which), seed);
}

const MethodMetrics& SimResult::at(Method method, double s) const {
  for (const auto& row : rows) {
    if (row.method == method && row.s == s) return row;
  }
  throw DomainError("no simulation result for " + std::string(to_string(method)) + " at s=" + std::to_string(s));
}

SimResult run_experiment(const SimSpec& spec) {
  if (spec.model != SimModel::two_ratio && spec.model != SimModel::misspecified) {
    throw DomainError("run_experiment handles the two_ratio and misspecified models; use run_pvalue_study");
  }
  if (spec.reps < 1) throw DomainError("reps must be at least 1");
  if (spec.methods.empty()) throw DomainError("no methods requested");
  for (double s : spec.s_grid) {
    if (!(s >= 0.0)) throw DomainError("signal amplitudes must be nonnegative");
  }
  const Index p = spec.p;
  const Index n = spec.n;

  // Fixed inputs for the pointwise bias / variance decomposition.
  auto bias_rng = make_rng(spec.seed, 3, 0);
  const Matrix bias_w = abs_gaussian(spec.bias_points, p, bias_rng).array().log().matrix();

  SimResult result;
  result.spec = spec;
  for (double s : spec.s_grid) {
    const ContrastCoefficients truth = sim_truth(spec.model, p, s);
    std::set<Index> truth_features;
    for (Index j = 0; j < p; ++j) {
      if (truth.beta[j] != 0.0) truth_features.insert(j);
    }
    std::set<FeaturePair> truth_pairs;
    if (s > 0.0) truth_pairs = {{0, 1}, {2, 3}};
    const double null_features = static_cast<double>(p - static_cast<Index>(truth_features.size()));
    const double null_pair_count = static_cast<double>(p * (p - 1) / 2 - static_cast<Index>(truth_pairs.size()));
    const Vector bias_truth = bias_w * truth.beta;

    const std::size_t n_methods = spec.methods.size();
    std::vector<std::vector<RepOutcome>> outcomes(n_methods, std::vector<RepOutcome>(static_cast<std::size_t>(spec.reps)));

    parallel_for(spec.reps, spec.threads, [&](int rep) {
      const auto r = static_cast<std::uint64_t>(rep);
      const Dataset train = draw_linear(n, p, truth.beta, derive_seed(spec.seed, 0, r));
      const Dataset test = draw_linear(n, p, truth.beta, derive_seed(spec.seed, 1, r));
      const Matrix w = train.x.array().log().matrix();
      const Matrix w_test = test.x.array().log().matrix();
      const Vector mean_test = w_test * truth.beta;
      const FoldPlan folds = make_folds(n, spec.folds, derive_seed(spec.seed, 2, r));

      for (std::size_t m = 0; m < n_methods; ++m) {
        RepOutcome& out = outcomes[m][static_cast<std::size_t>(rep)];
        const auto start = Clock::now();
        try {
          const RepFit fit = fit_method(spec.methods[m], w, train.y, folds, spec);
          out.seconds = seconds_since(start);
          const Vector pred = (w_test * fit.beta).array() + fit.intercept;
          out.test_mse = (pred - mean_test).squaredNorm() / static_cast<double>(n);
          out.test_error = (pred - test.y).squaredNorm() / static_cast<double>(n);
          out.coef_mse = (fit.beta - truth.beta).squaredNorm();
          out.bias_predictions = (bias_w * fit.beta).array() + fit.intercept;

          std::set<Index> selected;
          for (Index j = 0; j < p; ++j) {
            if (fit.beta[j] != 0.0) selected.insert(j);
          }
          if (fit.theta) {
            for (const auto& [pair, value] : fit.theta->pairs) {
              selected.insert(pair.first);
              selected.insert(pair.second);
            }
            out.large = has_pair(*fit.theta, {0, 1}) ? 1.0 : 0.0;
            out.small = has_pair(*fit.theta, {2, 3}) ? 1.0 : 0.0;
            Index null_pairs = 0;
            for (const auto& [pair, value] : fit.theta->pairs) null_pairs += truth_pairs.count(pair) ? 0 : 1;
            out.null_pairs = null_pair_count > 0 ? static_cast<double>(null_pairs) / null_pair_count : 0.0;
          } else {
            out.large = (fit.beta[0] != 0.0 && fit.beta[1] != 0.0) ? 1.0 : 0.0;
            out.small = (fit.beta[2] != 0.0 && fit.beta[3] != 0.0) ? 1.0 : 0.0;
            out.null_pairs = kNaN;
          }
          Index nulls = 0;
          for (Index j : selected) nulls += truth_features.count(j) ? 0 : 1;
          out.nulls = null_features > 0 ? static_cast<double>(nulls) / null_features : 0.0;
          out.support = static_cast<double>(selected.size());
          out.ok = true;
        } catch (const std::exception& e) {
          out.seconds = seconds_since(start);
          out.error = e.what();
        }
      }
    });

    for (std::size_t m = 0; m < n_methods; ++m) {
      MethodMetrics metrics;
      metrics.method = spec.methods[m];
      metrics.s = s;
      metrics.reps = spec.reps;
      std::vector<double> mse;
      std::vector<double> err;
      std::vector<double> coef;
      double large = 0;
      double small = 0;
      double nulls = 0;
      double null_pairs = 0;
      double support = 0;
      double seconds = 0;
      Vector pred_sum = Vector::Zero(spec.bias_points);
      Vector pred_sq = Vector::Zero(spec.bias_points);
      for (int rep = 0; rep < spec.reps; ++rep) {
        const RepOutcome& o = outcomes[m][static_cast<std::size_t>(rep)];
        seconds += o.seconds;
        if (!o.ok) {
          ++metrics.failures;
          metrics.failure_messages.push_back("rep " + std::to_string(rep) + ": " + o.error);
          metrics.per_rep_mse.push_back(kNaN);
          continue;
        }
        metrics.per_rep_mse.push_back(o.test_mse);
        mse.push_back(o.test_mse);
        err.push_back(o.test_error);
        coef.push_back(o.coef_mse);
        large += o.large;
        small += o.small;
        nulls += o.nulls;
        if (!std::isnan(o.null_pairs)) null_pairs += o.null_pairs;
        support += o.support;
        pred_sum += o.bias_predictions;
        pred_sq += o.bias_predictions.cwiseAbs2();
      }
      const double ok = static_cast<double>(mse.size());
      metrics.runtime_seconds = seconds / static_cast<double>(spec.reps);
      if (ok > 0) {
        metrics.test_mse = stats::mean(mse);
        metrics.test_mse_se = ok > 1 ? stats::sample_sd(mse) / std::sqrt(ok) : 0.0;
        metrics.test_error = stats::mean(err);
        metrics.coef_mse = stats::mean(coef);
        metrics.large_signal_recovery = large / ok;
        metrics.small_signal_recovery = small / ok;
        metrics.nulls_selected = nulls / ok;
        metrics.null_pairs_selected = is_ratio_method(metrics.method) ? null_pairs / ok : kNaN;
        metrics.support_size = support / ok;
        const Vector mean_pred = pred_sum / ok;
        metrics.bias2 = (mean_pred - bias_truth).squaredNorm() / static_cast<double>(spec.bias_points);
        const Vector var = (pred_sq / ok - mean_pred.cwiseAbs2()).cwiseMax(0.0);
        metrics.variance = var.mean();
      } else {
        metrics.test_mse = metrics.test_mse_se = metrics.test_error = metrics.coef_mse = kNaN;
        metrics.bias2 = metrics.variance = kNaN;
      }
      result.rows.push_back(std::move(metrics));
    }
  }
  return result;
}

double paired_mse_ratio(const MethodMetrics& numerator, const MethodMetrics& denominator) {
  if (numerator.per_rep_mse.size() != denominator.per_rep_mse.size()) {
    throw DimensionError("paired comparison needs the same replications");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < numerator.per_rep_mse.size(); ++i) {
    const double a = numerator.per_rep_mse[i];
    const double b = denominator.per_rep_mse[i];
    if (std::isnan(a) || std::isnan(b)) continue;
    num += a;
    den += b;
  }
  if (!(den > 0.0)) throw DomainError("no successful paired replications");
  return num / den;
}

namespace {

template <class F>
double median_time(int reps, F&& body) {
  std::vector<double> times;
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    body();
    times.push_back(seconds_since(start));
  }
  return stats::median(times);
}

}  // namespace

std::vector<BenchRow> run_runtime_bench(const BenchSpec& spec) {
  if (!std::is_sorted(spec.p_grid.begin(), spec.p_grid.end())) throw DomainError("p grid must be ascending");
  if (spec.reps < 1) throw DomainError("reps must be at least 1");
  std::vector<BenchRow> rows;
  for (Index p : spec.p_grid) {
    if (p < 4) throw DomainError("benchmark needs p >= 4");
    const Experiment1Data gen = gen_experiment1(spec.n, p, 1.0, derive_seed(spec.seed, 4, static_cast<std::uint64_t>(p)));
    const Matrix w = gen.data.x.array().log().matrix();
    const Vector& y = gen.data.y;
    const Index columns = p * (p - 1) / 2;
    const double bytes = static_cast<double>(columns) * static_cast<double>(spec.n) * sizeof(double);
    const bool expand_ok = columns <= spec.max_expanded_columns && bytes <= spec.memory_cap_bytes;

    rows.push_back({"approx_fs", p, p, median_time(spec.reps, [&] { approx_forward_stepwise(w, y, spec.k); }), true});
    if (expand_ok) {
      const RatioExpansion z = expand_ratios(w);
      rows.push_back({"exact_fs_expanded", p, columns,
                      median_time(spec.reps, [&] { exact_forward_stepwise(z.z, y, spec.k); }), true});
    } else {
      rows.push_back({"exact_fs_expanded", p, columns, kNaN, false});
    }

    const double gamma = spec.gamma_fraction * constrained_gamma_max(w, y, Family::gaussian);
    rows.push_back({"constrained_lasso", p, p,
                    median_time(spec.reps, [&] { constrained_lasso(w, y, gamma, Family::gaussian); }), true});
    if (expand_ok) {
      const RatioExpansion z = expand_ratios(w);
      rows.push_back({"expanded_lasso_fista", p, columns,
                      median_time(spec.reps, [&] { proximal_gradient_lasso(z.z, y, 2.0 * gamma, 20000, 1e-10); }),
                      true});
    } else {
      rows.push_back({"expanded_lasso_fista", p, columns, kNaN, false});
    }
  }
  return rows;
}

double default_selective_lambda(const Eigen::Ref<const Matrix>& x, double sigma) {
  const Matrix xc = center_columns(x);
  std::vector<double> norms;
  for (Index j = 0; j < xc.cols(); ++j) norms.push_back(xc.col(j).norm());
  return sigma * std::sqrt(2.0 * std::log(static_cast<double>(x.cols()))) * stats::median(norms);
}

PvalueStudy run_pvalue_study(const PvalueStudySpec& spec) {
  if (spec.reps < 1) throw DomainError("reps must be at least 1");
  if (!(spec.sigma > 0.0)) throw DomainError("sigma must be positive");
  const Vector beta = pvalue_example_beta(spec.p, spec.which);
  auto design_rng = make_rng(spec.seed, 5, 0);
  const Matrix w = abs_gaussian(spec.n, spec.p, design_rng).array().log().matrix();
  const Vector mean = w * beta;
  const double lambda = spec.lambda_multiplier * default_selective_lambda(w, spec.sigma);
  std::vector<Index> signal;
  for (Index j = 0; j < spec.p; ++j) {
    if (beta[j] != 0.0) signal.push_back(j);
  }

  PvalueStudy out;
  out.reps = spec.reps;
  for (int rep = 0; rep < spec.reps; ++rep) {
    auto rng = make_rng(spec.seed, 6, static_cast<std::uint64_t>(rep));
    const Vector y = mean + spec.sigma * gaussian_noise(spec.n, rng);
    try {
      const SelectionEvent event = lasso_selection_event(w, y, lambda);
      const bool covers = std::all_of(signal.begin(), signal.end(), [&](Index j) {
        return std::binary_search(event.support.begin(), event.support.end(), j);
      });
      if (!covers) continue;
      const PivotResult pr = selective_sum_zero_test(event, w, y, spec.sigma);
      out.p_one_sided.push_back(pr.p_one_sided);
      out.p_two_sided.push_back(pr.p_two_sided);
      ++out.conditioned;
    } catch (const Error&) {
      ++out.failures;
    }
  }
  if (!out.p_one_sided.empty()) {
    out.ks_statistic = stats::ks_statistic_uniform(out.p_one_sided);
    out.ks_pvalue = stats::ks_pvalue(out.ks_statistic, out.p_one_sided.size());
    out.mean_p = stats::mean(out.p_one_sided);
  }
  return out;
}

FTestStudy run_ftest_study(Index n, Index p, const Vector& beta, double sigma, int reps, std::uint64_t seed) {
  if (beta.size() != p) throw DimensionError("beta length must equal p");
  if (reps < 1) throw DomainError("reps must be at least 1");
  auto design_rng = make_rng(seed, 7, 0);
  // Same log|N(0,1)| design as the selective study.
  const Matrix w = abs_gaussian(n, p, design_rng).array().log().matrix();
  const Vector mean = w * beta;
  FTestStudy out;
  int rejections = 0;
  for (int rep = 0; rep < reps; ++rep) {
    auto rng = make_rng(seed, 8, static_cast<std::uint64_t>(rep));
    const Vector y = mean + sigma * gaussian_noise(n, rng);
    const FTestResult f = f_test_sum_zero(w, y);
    out.p_values.push_back(f.p_value);
    rejections += f.p_value < 0.05 ? 1 : 0;
  }
  out.ks_statistic = stats::ks_statistic_uniform(out.p_values);
  out.ks_pvalue = stats::ks_pvalue(out.ks_statistic, out.p_values.size());
  out.rejection_rate = static_cast<double>(rejections) / static_cast<double>(reps);
  return out;
}

}  // namespace lrlasso
