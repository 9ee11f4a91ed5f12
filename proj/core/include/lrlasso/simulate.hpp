#pragma once

#include <lrlasso/common.hpp>
#include <lrlasso/data.hpp>
#include <lrlasso/inference.hpp>
#include <lrlasso/logratio.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace lrlasso {

enum class SimModel { two_ratio, misspecified, pvalue_null_ratio, pvalue_null_single };

enum class Method {
  approx_fs,
  fs,
  ridge,
  single_stage,
  two_stage,
  two_stage_conservative,
  vanilla_lasso,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
std::vector<Method> all_methods();
bool is_ratio_method(Method method);

// Per-replication generator: seeds derive from (master seed, stream, index).
std::mt19937_64 make_rng(std::uint64_t master_seed, std::uint64_t stream, std::uint64_t index = 0);

struct Experiment1Data {
  Dataset data;
  PairCoefficients truth;
};
struct Experiment2Data {
  Dataset data;
  ContrastCoefficients truth;
};

// y = 2s log(x1/x2) + s log(x3/x4) + e, x ~ |N(0,1)|, e ~ N(0,1).
Experiment1Data gen_experiment1(Index n, Index p, double s, std::uint64_t seed);

// y = 2s log(x1/x2) + s log(x3/x4) + 0.3 log(x5) + e.
Experiment2Data gen_experiment2(Index n, Index p, double s, std::uint64_t seed);

enum class PvalueModel { null_ratio, null_single };

// x ~ |N(0,1)|, y = log(x) beta + e with beta = (2, -2, 0, ...) (null_ratio)
// or (2, 0, ...) (null_single).
Dataset gen_pvalue_example(Index n, Index p, PvalueModel which, std::uint64_t seed);
Vector pvalue_example_beta(Index p, PvalueModel which);

// Linear truth on log(x) for a simulation model at amplitude s.
ContrastCoefficients sim_truth(SimModel model, Index p, double s);

struct SimSpec {
  Index n = 100;
  Index p = 30;
  std::vector<double> s_grid{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  SimModel model = SimModel::two_ratio;
  int reps = 200;
  std::uint64_t seed = 1;
  std::vector<Method> methods = all_methods();
  int folds = 10;
  Index n_lambda = 50;
  double lambda_min_ratio = 1e-3;
  Index two_stage_n_lambda = 20;
  double two_stage_min_ratio = 1e-2;
  Index k_max = 10;
  Index bias_points = 50;
  int threads = 1;
};

struct MethodMetrics {
  Method method = Method::vanilla_lasso;
  double s = 0.0;
  int reps = 0;
  int failures = 0;
  double test_mse = 0.0;     // mean over reps of mean_i (yhat_i - E[y_i | x_i])^2
  double test_mse_se = 0.0;
  double test_error = 0.0;   // against noisy test responses
  double coef_mse = 0.0;     // ||beta_hat - beta*||^2
  double bias2 = 0.0;
  double variance = 0.0;
  double large_signal_recovery = 0.0;
  double small_signal_recovery = 0.0;
  double nulls_selected = 0.0;       // fraction of null raw features in the model
  double null_pairs_selected = 0.0;  // ratio methods: fraction of null pairs
  double support_size = 0.0;
  double runtime_seconds = 0.0;      // mean fit + CV time per replication
  std::vector<double> per_rep_mse;   // NaN for failed reps
  std::vector<std::string> failure_messages;
};

struct SimResult {
  SimSpec spec;
  std::vector<MethodMetrics> rows;  // one per (s, method), s-major

  const MethodMetrics& at(Method method, double s) const;
};

SimResult run_experiment(const SimSpec& spec);

// Ratio of mean test MSE (numerator / denominator) over reps where both succeeded.
double paired_mse_ratio(const MethodMetrics& numerator, const MethodMetrics& denominator);

struct BenchRow {
  std::string method;
  Index p = 0;
  Index columns = 0;
  double median_seconds = 0.0;
  bool feasible = true;
};

struct BenchSpec {
  std::vector<Index> p_grid{100, 200, 400};
  Index n = 500;
  Index k = 10;
  int reps = 5;
  std::uint64_t seed = 1;
  double memory_cap_bytes = 512.0 * 1024 * 1024;
  // Naive expanded-design solvers are skipped above this column count.
  Index max_expanded_columns = 20000;
  double gamma_fraction = 0.1;  // gamma = fraction * gamma_max for the lasso timings
};

// approx FS vs exact FS on the expanded ratio matrix, and the constrained
// lasso vs a proximal-gradient lasso on the expanded matrix.
std::vector<BenchRow> run_runtime_bench(const BenchSpec& spec);

struct PvalueStudySpec {
  Index n = 100;
  Index p = 30;
  PvalueModel which = PvalueModel::null_ratio;
  int reps = 2000;
  std::uint64_t seed = 7;
  double sigma = 1.0;
  // lambda = multiplier * sigma * sqrt(2 log p) * median centered column norm.
  double lambda_multiplier = 1.0;
};

struct PvalueStudy {
  std::vector<double> p_one_sided;  // conditioned replications only
  std::vector<double> p_two_sided;
  int reps = 0;
  int conditioned = 0;  // replications whose support contained the signal features
  int failures = 0;
  double ks_statistic = 0.0;
  double ks_pvalue = 0.0;
  double mean_p = 0.0;
};

// Fixed design (drawn once), fresh noise per replication; conditions on the
// true signal features being in the selected support.
PvalueStudy run_pvalue_study(const PvalueStudySpec& spec);

double default_selective_lambda(const Eigen::Ref<const Matrix>& x, double sigma);

struct FTestStudy {
  std::vector<double> p_values;
  double ks_statistic = 0.0;
  double ks_pvalue = 0.0;
  double rejection_rate = 0.0;  // at level 0.05
};

// Fixed design log|N(0,1)| of size n x p, y = w beta + N(0, sigma^2).
FTestStudy run_ftest_study(Index n, Index p, const Vector& beta, double sigma, int reps,
                           std::uint64_t seed);

}  // namespace lrlasso
