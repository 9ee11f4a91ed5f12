#include "commands.hpp"
#include "run_info.hpp"

#include <lrlasso/cv.hpp>
#include <lrlasso/data.hpp>
#include <lrlasso/inference.hpp>
#include <lrlasso/logratio.hpp>
#include <lrlasso/model_io.hpp>
#include <lrlasso/simulate.hpp>
#include <lrlasso/stepwise.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

namespace lrlasso::cli {

namespace {

constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataFlags {
  std::string input;
  std::string response;
  std::string group;
  double pseudocount = 0.0;
  std::string family = "gaussian";
};

struct Loaded {
  Dataset data;
  Matrix w;
  std::string sha256;
};

struct CvFlags {
  int folds = 0;  // 0: 10, or the number of groups capped at 10 when blocked
  std::string rule = "min";
  Index n_lambda = 50;
  double lambda_min_ratio = 1e-3;
  Index k_max = 10;
};

void add_data_flags(CLI::App* sub, DataFlags& f) {
  sub->add_option("--input", f.input, "CSV file with a header row")->required()->check(CLI::ExistingFile);
  sub->add_option("--response", f.response, "name of the response column")->required();
  sub->add_option("--group", f.group, "name of a grouping column (enables blocked CV)");
  sub->add_option("--pseudocount", f.pseudocount, "added to every raw feature before taking logs")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--family", f.family, "response family")->check(CLI::IsMember({"gaussian", "binomial"}));
}

void add_cv_flags(CLI::App* sub, CvFlags& f) {
  sub->add_option("--folds", f.folds, "number of CV folds (default 10; groups capped at 10 when blocked)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--rule", f.rule, "CV selection rule")->check(CLI::IsMember({"min", "one_se"}));
  sub->add_option("--n-lambda", f.n_lambda, "penalty grid size")->check(CLI::Range(2, 100000));
  sub->add_option("--lambda-min-ratio", f.lambda_min_ratio, "smallest penalty as a fraction of the largest")
      ->check(CLI::Range(1e-12, 0.999999));
  sub->add_option("--k-max", f.k_max, "largest number of stepwise steps on the CV grid")->check(CLI::Range(0, 100000));
}

Loaded load(const DataFlags& f) {
  Loaded out;
  const std::string text = read_file(f.input);
  out.sha256 = sha256_hex(text);
  CsvOptions options;
  options.response_column = f.response;
  if (!f.group.empty()) options.group_column = f.group;
  options.pseudocount = f.pseudocount;
  options.family = parse_family(f.family);
  out.data = parse_csv(text, options);
  out.w = out.data.x.array().log().matrix();
  return out;
}

FoldPlan folds_for(const Dataset& data, const CvFlags& f, std::uint64_t seed) {
  const bool blocked = data.group_ids.has_value();
  int k = f.folds;
  if (k == 0) {
    if (blocked) {
      const std::set<std::string> distinct(data.group_ids->begin(), data.group_ids->end());
      k = static_cast<int>(std::min<std::size_t>(10, distinct.size()));
    } else {
      k = static_cast<int>(std::min<Index>(10, data.n()));
    }
  }
  return make_folds(data, k, seed, blocked);
}

Matrix with_zero_column(const Matrix& w) {
  Matrix out(w.rows(), w.cols() + 1);
  out.leftCols(w.cols()) = w;
  out.col(w.cols()).setZero();
  return out;
}

std::vector<Index> k_range(Index k_max) {
  std::vector<Index> ks;
  for (Index k = 0; k <= k_max; ++k) ks.push_back(k);
  return ks;
}

Json curve_choice(const CvCurve& curve, const FoldPlan& folds) {
  const GridPoint& best = curve.chosen_point();
  Json j;
  j["rule"] = std::string(to_string(curve.rule));
  j["folds"] = folds.k;
  j["blocked_by"] = folds.blocked_by ? Json(*folds.blocked_by) : Json(nullptr);
  j["chosen_index"] = curve.chosen();
  j["lambda"] = best.lambda;
  j["gamma"] = best.gamma;
  j["k"] = best.k >= 0 ? Json(best.k) : Json(nullptr);
  j["mean_error"] = curve.mean_error[static_cast<std::size_t>(curve.chosen())];
  j["se_error"] = curve.se_error[static_cast<std::size_t>(curve.chosen())];
  return j;
}

PairCoefficients approx_fs_model(const Matrix& w, const Vector& y, Index k) {
  const StepwiseTrace trace = approx_forward_stepwise(w, y, k);
  const auto s = static_cast<std::size_t>(trace.steps());
  PairCoefficients theta;
  theta.p = w.cols();
  theta.intercept = trace.intercepts[s];
  for (std::size_t t = 0; t < s; ++t) theta.set(trace.pairs[t], trace.coefficients[s][static_cast<Index>(t)]);
  return theta;
}

// Shared by `fit` and the chosen-model summary of `cv`.
struct FitRequest {
  std::string method;
  std::optional<double> lambda;
  std::optional<Index> k;
  bool unpaired = false;
  CvFlags cv;
  std::uint64_t seed = 1;
};

struct FitOutcome {
  ModelFile model;
  std::optional<Json> cv;
  std::vector<std::string> warnings;
};

FitOutcome fit_model(const Loaded& in, const FitRequest& req) {
  const Dataset& d = in.data;
  const Family family = d.family;
  const CvRule rule = parse_cv_rule(req.cv.rule);
  const Matrix w_cv = req.unpaired ? with_zero_column(in.w) : in.w;
  std::vector<std::string> names = d.feature_names;
  if (req.unpaired) names.emplace_back(kOnesFeature);

  FitOutcome out;
  out.model.family = family;
  out.model.method = req.method;
  out.model.feature_names = names;
  const bool need_cv = !req.lambda || (req.method != "single" && !req.k);
  std::optional<FoldPlan> folds;
  if (need_cv) folds = folds_for(d, req.cv, req.seed);
  const PathSpec path{req.cv.n_lambda, req.cv.lambda_min_ratio};

  if (req.method == "single") {
    double lambda = 0.0;
    if (req.lambda) {
      lambda = *req.lambda;
    } else {
      const CvCurve curve = cv_constrained_lasso(w_cv, d.y, *folds, path, family, rule);
      lambda = curve.chosen_point().lambda;
      out.cv = curve_choice(curve, *folds);
    }
    const SingleStageFit fit = fit_single_stage(in.w, d.y, lambda, family, req.unpaired);
    out.model.theta = fit.theta;
    out.model.lambda = lambda;
    out.warnings = fit.report.warnings;
  } else if (req.method == "two-stage" || req.method == "two-stage-conservative") {
    const bool conservative = req.method == "two-stage-conservative";
    double lambda = req.lambda.value_or(0.0);
    Index k = req.k.value_or(0);
    if (need_cv) {
      const std::vector<double> lambdas =
          req.lambda ? std::vector<double>{*req.lambda} : two_stage_lambda_grid(w_cv, d.y, family, path);
      const std::vector<Index> ks = req.k ? std::vector<Index>{*req.k} : k_range(req.cv.k_max);
      const CvCurve curve = cv_two_stage(w_cv, d.y, *folds, lambdas, ks, family, conservative, rule);
      lambda = curve.chosen_point().lambda;
      k = curve.chosen_point().k;
      out.cv = curve_choice(curve, *folds);
    }
    const TwoStageFit fit = fit_two_stage(in.w, d.y, lambda, k, family, conservative, req.unpaired);
    out.model.theta = fit.theta;
    out.model.lambda = lambda;
    out.model.k = k;
    out.warnings = fit.report.warnings;
  } else if (req.method == "approx-fs") {
    if (family != Family::gaussian) throw DomainError("approx-fs is defined for the gaussian family only");
    if (req.unpaired) throw DomainError("approx-fs does not support --unpaired (the constant feature has no variance)");
    Index k = 0;
    if (req.k) {
      k = *req.k;
    } else {
      const CvCurve curve = cv_stepwise(in.w, d.y, *folds, req.cv.k_max, StepwiseKind::approximate, rule);
      k = curve.chosen_point().k;
      out.cv = curve_choice(curve, *folds);
    }
    out.model.theta = approx_fs_model(in.w, d.y, k);
    out.model.k = k;
  } else {
    throw UsageError("unknown method " + req.method);
  }
  out.model.gamma = 0.5 * out.model.lambda;
  return out;
}

Json model_document(const FitOutcome& fit, const RunInfo& info) {
  Json doc = Json::parse(model_to_json(fit.model));
  if (fit.cv) doc["cv"] = *fit.cv;
  doc["warnings"] = fit.warnings;
  doc["run"] = run_json(info);
  return doc;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buffer[32];
  const auto res = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, res.ptr);
}

// ---------------------------------------------------------------- commands

struct Context {
  CLI::App* sub = nullptr;
  std::string output = "-";
  std::uint64_t seed = 1;
  int threads = 1;

  RunInfo info(std::string sha = {}) const {
    RunInfo r;
    r.command = sub->get_name();
    r.flags = collect_flags(*sub);
    r.seed = seed;
    r.input_sha256 = std::move(sha);
    return r;
  }
};

void add_common(CLI::App* sub, Context& ctx) {
  ctx.sub = sub;
  sub->add_option("--output,-o", ctx.output, "output file ('-' for stdout)");
  sub->add_option("--seed", ctx.seed, "random seed (fold assignment, simulation)");
  sub->add_option("--threads", ctx.threads, "worker thread cap")->check(CLI::PositiveNumber);
}

void setup_fit(CLI::App& app, std::function<int()>& action) {
  auto* sub = app.add_subcommand("fit", "fit a sparse log-ratio model and write it as JSON");
  auto ctx = std::make_shared<Context>();
  auto data = std::make_shared<DataFlags>();
  auto req = std::make_shared<FitRequest>();
  auto table = std::make_shared<std::string>();
  req->method = "two-stage";
  add_common(sub, *ctx);
  add_data_flags(sub, *data);
  add_cv_flags(sub, req->cv);
  sub->add_option("--method", req->method, "estimator")
      ->check(CLI::IsMember({"single", "two-stage", "two-stage-conservative", "approx-fs"}));
  sub->add_option("--lambda", req->lambda, "log-ratio lasso penalty (cross-validated when omitted)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--k", req->k, "stepwise steps (cross-validated when omitted)")->check(CLI::NonNegativeNumber);
  sub->add_flag("--unpaired", req->unpaired, "allow unpaired log terms via the constant feature _one")->default_str("false");
  sub->add_option("--table", *table, "write the ratio table to this file");
  sub->callback([=, &action] {
    action = [=] {
      req->seed = ctx->seed;
      const Loaded in = load(*data);
      const FitOutcome fit = fit_model(in, *req);
      write_output(ctx->output, model_document(fit, ctx->info(in.sha256)).dump(2) + "\n");
      const std::string text = ratio_table(fit.model.theta, fit.model.feature_names);
      if (!table->empty()) {
        write_output(*table, text);
      } else if (ctx->output != "-") {
        std::cout << text;
      } else {
        std::cerr << text;
      }
      for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
      return 0;
    };
  });
}

void setup_cv(CLI::App& app, std::function<int()>& action) {
  auto* sub = app.add_subcommand("cv", "cross-validate a penalty / step grid and write the curve as TSV");
  auto ctx = std::make_shared<Context>();
  auto data = std::make_shared<DataFlags>();
  auto cvf = std::make_shared<CvFlags>();
  auto method = std::make_shared<std::string>("single");
  auto summary = std::make_shared<std::string>();
  add_common(sub, *ctx);
  add_data_flags(sub, *data);
  add_cv_flags(sub, *cvf);
  sub->add_option("--method", *method, "estimator whose tuning grid is cross-validated")
      ->check(CLI::IsMember({"single", "two-stage", "two-stage-conservative", "approx-fs", "lasso"}));
  sub->add_option("--summary", *summary, "write a JSON summary of the chosen model to this file");
  sub->callback([=, &action] {
    action = [=] {
      const Loaded in = load(*data);
      const Dataset& d = in.data;
      const FoldPlan folds = folds_for(d, *cvf, ctx->seed);
      const CvRule rule = parse_cv_rule(cvf->rule);
      const PathSpec path{cvf->n_lambda, cvf->lambda_min_ratio};
      CvCurve curve;
      if (*method == "single") {
        curve = cv_constrained_lasso(in.w, d.y, folds, path, d.family, rule);
      } else if (*method == "lasso") {
        curve = cv_lasso(in.w, d.y, folds, path, d.family, rule);
      } else if (*method == "approx-fs") {
        if (d.family != Family::gaussian) throw DomainError("approx-fs is defined for the gaussian family only");
        curve = cv_stepwise(in.w, d.y, folds, cvf->k_max, StepwiseKind::approximate, rule);
      } else {
        curve = cv_two_stage(in.w, d.y, folds, two_stage_lambda_grid(in.w, d.y, d.family, path),
                             k_range(cvf->k_max), d.family, *method == "two-stage-conservative", rule);
      }
      const RunInfo info = ctx->info(in.sha256);
      const Json choice = curve_choice(curve, folds);
      Json extra;
      extra["chosen_lambda"] = choice["lambda"];
      extra["chosen_gamma"] = choice["gamma"];
      extra["chosen_k"] = choice["k"];
      extra["rule"] = choice["rule"];
      extra["folds"] = folds.k;
      std::ostringstream tsv;
      tsv << tsv_header(info, extra);
      const bool binomial = !curve.misclassification.empty();
      tsv << "index\tlambda\tgamma\tk\tmean_error\tse_error" << (binomial ? "\tmisclassification" : "")
          << "\tchosen\n";
      for (std::size_t i = 0; i < curve.grid.size(); ++i) {
        const GridPoint& g = curve.grid[i];
        tsv << i << '\t' << fmt(g.lambda) << '\t' << fmt(g.gamma) << '\t' << (g.k >= 0 ? std::to_string(g.k) : "NA")
            << '\t' << fmt(curve.mean_error[i]) << '\t' << fmt(curve.se_error[i]);
        if (binomial) tsv << '\t' << fmt(curve.misclassification[i]);
        tsv << '\t' << (static_cast<Index>(i) == curve.chosen() ? 1 : 0) << '\n';
      }
      write_output(ctx->output, tsv.str());

      Json doc;
      doc["cv"] = choice;
      if (*method != "lasso") {
        FitRequest req;
        req.method = *method;
        req.lambda = choice["lambda"].get<double>();
        if (!choice["k"].is_null()) req.k = choice["k"].get<Index>();
        if (*method == "approx-fs") req.lambda = 0.0;
        req.cv = *cvf;
        req.seed = ctx->seed;
        const FitOutcome fit = fit_model(in, req);
        doc["model"] = Json::parse(model_to_json(fit.model));
        doc["warnings"] = fit.warnings;
      }
      doc["run"] = run_json(info);
      if (!summary->empty()) {
        write_output(*summary, doc.dump(2) + "\n");
      } else {
        std::cerr << "chosen: " << choice.dump() << '\n';
      }
      return 0;
    };
  });
}

void setup_stepwise(CLI::App& app, std::function<int()>& action) {
  auto* sub = app.add_subcommand("stepwise", "forward stepwise selection over log-ratios");
  auto ctx = std::make_shared<Context>();
  auto data = std::make_shared<DataFlags>();
  auto kind = std::make_shared<std::string>("approx");
  auto k = std::make_shared<Index>(10);
  add_common(sub, *ctx);
  add_data_flags(sub, *data);
  sub->add_option("--kind", *kind, "approx: pair the extreme univariate coefficients; exact: all C(p,2) ratios")
      ->check(CLI::IsMember({"approx", "exact"}));
  sub->add_option("--k", *k, "number of steps")->check(CLI::NonNegativeNumber);
  sub->callback([=, &action] {
    action = [=] {
      const Loaded in = load(*data);
      const Dataset& d = in.data;
      StepwiseTrace trace;
      if (*kind == "approx") {
        if (d.family != Family::gaussian) throw DomainError("approximate stepwise is defined for the gaussian family only");
        trace = approx_forward_stepwise(in.w, d.y, *k);
      } else {
        const RatioExpansion z = expand_ratios(in.w);
        trace = exact_forward_stepwise(z.z, d.y, *k, d.family, z.pairs);
      }
      Json doc;
      doc["kind"] = *kind;
      doc["family"] = std::string(to_string(d.family));
      doc["stop"] = std::string(to_string(trace.stop));
      Json steps = Json::array();
      for (Index s = 0; s <= trace.steps(); ++s) {
        const auto su = static_cast<std::size_t>(s);
        Json step;
        step["step"] = s;
        if (s > 0) {
          const FeaturePair& pr = trace.pairs[su - 1];
          step["added"] = {{"j", pr.first + 1},
                           {"k", pr.second + 1},
                           {"name_j", d.feature_names[static_cast<std::size_t>(pr.first)]},
                           {"name_k", d.feature_names[static_cast<std::size_t>(pr.second)]}};
        } else {
          step["added"] = nullptr;
        }
        step["intercept"] = trace.intercepts[su];
        step["coefficients"] = std::vector<double>(trace.coefficients[su].data(),
                                                   trace.coefficients[su].data() + trace.coefficients[su].size());
        step[d.family == Family::gaussian ? "residual_norm" : "deviance"] = trace.residual_norms[su];
        steps.push_back(std::move(step));
      }
      doc["steps"] = std::move(steps);
      doc["run"] = run_json(ctx->info(in.sha256));
      write_output(ctx->output, doc.dump(2) + "\n");
      return 0;
    };
  });
}

void setup_gof(CLI::App& app, std::function<int()>& action) {
  auto* sub = app.add_subcommand("gof-test", "test whether a log-linear model is a log-ratio model (sum beta = 0)");
  auto ctx = std::make_shared<Context>();
  auto data = std::make_shared<DataFlags>();
  auto test = std::make_shared<std::string>("f");
  auto lambda = std::make_shared<std::optional<double>>();
  auto sigma = std::make_shared<std::optional<double>>();
  add_common(sub, *ctx);
  add_data_flags(sub, *data);
  sub->add_option("--test", *test, "f: classical F test; selective: post-lasso truncated Gaussian test")
      ->check(CLI::IsMember({"f", "selective"}));
  sub->add_option("--lambda", *lambda, "lasso penalty for the selective test")->check(CLI::PositiveNumber);
  sub->add_option("--sigma", *sigma, "noise sd (estimated from the full OLS fit when omitted)")
      ->check(CLI::PositiveNumber);
  sub->callback([=, &action] {
    if (*test == "selective" && !*lambda) throw UsageError("--test selective requires --lambda");
    action = [=] {
      const Loaded in = load(*data);
      const Dataset& d = in.data;
      if (d.family != Family::gaussian) throw DomainError("goodness-of-fit tests assume a gaussian response");
      Json doc;
      doc["method"] = *test;
      if (*test == "f") {
        const FTestResult f = f_test_sum_zero(in.w, d.y);
        doc["statistic"] = f.statistic;
        doc["p_value"] = f.p_value;
        doc["df1"] = f.df1;
        doc["df2"] = f.df2;
        doc["sum_beta"] = f.sum_beta;
        doc["sigma"] = f.sigma;
        doc["sigma_estimated"] = true;
      } else {
        const bool estimated = !sigma->has_value();
        const double s = estimated ? estimate_sigma(in.w, d.y) : **sigma;
        const SelectionEvent event = lasso_selection_event(in.w, d.y, **lambda);
        const PivotResult pr = selective_sum_zero_test(event, in.w, d.y, s);
        Json support = Json::array();
        for (Index j : event.support) support.push_back(d.feature_names[static_cast<std::size_t>(j)]);
        std::vector<Index> one_based;
        for (Index j : event.support) one_based.push_back(j + 1);
        doc["lambda"] = **lambda;
        doc["statistic"] = pr.statistic;
        doc["p_one_sided"] = pr.p_one_sided;
        doc["p_two_sided"] = pr.p_two_sided;
        doc["pivot"] = pr.pivot;
        doc["M"] = one_based;
        doc["M_names"] = std::move(support);
        doc["s"] = event.signs;
        doc["vminus"] = std::isfinite(pr.vminus) ? Json(pr.vminus) : Json(nullptr);
        doc["vplus"] = std::isfinite(pr.vplus) ? Json(pr.vplus) : Json(nullptr);
        doc["sigma"] = s;
        doc["sigma_estimated"] = estimated;
      }
      doc["run"] = run_json(ctx->info(in.sha256));
      write_output(ctx->output, doc.dump(2) + "\n");
      return 0;
    };
  });
}

void setup_path(CLI::App& app, std::function<int()>& action) {
  auto* sub = app.add_subcommand("path", "coefficient path of the constrained (single-stage) or plain lasso");
  auto ctx = std::make_shared<Context>();
  auto data = std::make_shared<DataFlags>();
  auto cvf = std::make_shared<CvFlags>();
  auto method = std::make_shared<std::string>("single");
  add_common(sub, *ctx);
  add_data_flags(sub, *data);
  add_cv_flags(sub, *cvf);
  sub->add_option("--method", *method, "single: sum-zero constrained path; lasso: plain lasso on log features")
      ->check(CLI::IsMember({"single", "lasso"}));
  sub->callback([=, &action] {
    action = [=] {
      const Loaded in = load(*data);
      const Dataset& d = in.data;
      const FoldPlan folds = folds_for(d, *cvf, ctx->seed);
      const PathSpec spec{cvf->n_lambda, cvf->lambda_min_ratio};
      const CvRule rule = parse_cv_rule(cvf->rule);
      std::vector<PathPoint> path;
      CvCurve curve;
      if (*method == "single") {
        curve = cv_constrained_lasso(in.w, d.y, folds, spec, d.family, rule);
        std::vector<double> gammas;
        for (const auto& g : curve.grid) gammas.push_back(g.gamma);
        path = constrained_path(in.w, d.y, d.family, gammas);
      } else {
        curve = cv_lasso(in.w, d.y, folds, spec, d.family, rule);
        std::vector<double> lambdas;
        for (const auto& g : curve.grid) lambdas.push_back(g.lambda);
        path = lasso_path(in.w, d.y, d.family, lambdas);
      }
      const GridPoint& best = curve.chosen_point();
      Json extra;
      extra["cv_gamma"] = *method == "single" ? Json(best.gamma) : Json(nullptr);
      extra["cv_lambda"] = best.lambda;
      extra["cv_index"] = curve.chosen();
      extra["rule"] = std::string(to_string(rule));
      std::ostringstream tsv;
      tsv << tsv_header(ctx->info(in.sha256), extra);
      tsv << "index\tpenalty\tfeature\tname\tcoefficient\tintercept\tchosen\n";
      for (std::size_t i = 0; i < path.size(); ++i) {
        const LassoSolution& sol = path[i].solution;
        for (Index j = 0; j < d.p(); ++j) {
          tsv << i << '\t' << fmt(path[i].penalty) << '\t' << j + 1 << '\t'
              << d.feature_names[static_cast<std::size_t>(j)] << '\t' << fmt(sol.coefficients[j]) << '\t'
              << fmt(sol.intercept) << '\t' << (static_cast<Index>(i) == curve.chosen() ? 1 : 0) << '\n';
        }
      }
      write_output(ctx->output, tsv.str());
      return 0;
    };
  });
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (res.ec != std::errc() || res.ptr != item.data() + item.size()) {
      throw UsageError("cannot parse '" + item + "' as a number");
    }
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

void write_metric(std::ostringstream& tsv, const std::string& experiment, const MethodMetrics& m,
                  const std::string& metric, double value) {
  tsv << experiment << '\t' << to_string(m.method) << '\t' << fmt(m.s) << '\t' << metric << '\t' << fmt(value)
      << '\n';
}

struct SimFlags {
  std::string experiment = "1";
  int reps = 200;
  std::string s_grid = "0,0.5,1,1.5,2,2.5,3";
  std::vector<std::string> methods;
  Index n = 100;
  Index p = 30;
  int folds = 10;
  std::string p_grid = "100,200,400";
  Index k = 10;
  std::string summary;
};

int run_simulation(const SimFlags& f, const Context& ctx) {
  const RunInfo info = ctx.info();
  std::ostringstream tsv;
  Json summary;
  summary["experiment"] = f.experiment;
  if (f.experiment == "1" || f.experiment == "2") {
    SimSpec spec;
    spec.model = f.experiment == "1" ? SimModel::two_ratio : SimModel::misspecified;
    spec.n = f.n;
    spec.p = f.p;
    spec.reps = f.reps;
    spec.seed = ctx.seed;
    spec.folds = f.folds;
    spec.threads = ctx.threads;
    spec.s_grid = parse_list(f.s_grid);
    if (!f.methods.empty()) {
      spec.methods.clear();
      for (const auto& m : f.methods) spec.methods.push_back(parse_method(m));
    }
    const SimResult result = run_experiment(spec);
    tsv << tsv_header(info) << "experiment\tmethod\ts\tmetric\tvalue\n";
    for (const auto& m : result.rows) {
      write_metric(tsv, f.experiment, m, "test_mse", m.test_mse);
      write_metric(tsv, f.experiment, m, "test_mse_se", m.test_mse_se);
      write_metric(tsv, f.experiment, m, "test_error", m.test_error);
      write_metric(tsv, f.experiment, m, "coef_mse", m.coef_mse);
      write_metric(tsv, f.experiment, m, "bias2", m.bias2);
      write_metric(tsv, f.experiment, m, "variance", m.variance);
      write_metric(tsv, f.experiment, m, "large_signal_recovery", m.large_signal_recovery);
      write_metric(tsv, f.experiment, m, "small_signal_recovery", m.small_signal_recovery);
      write_metric(tsv, f.experiment, m, "nulls_selected", m.nulls_selected);
      write_metric(tsv, f.experiment, m, "null_pairs_selected", m.null_pairs_selected);
      write_metric(tsv, f.experiment, m, "support_size", m.support_size);
      write_metric(tsv, f.experiment, m, "failures", m.failures);
      write_metric(tsv, f.experiment, m, "runtime_seconds", m.runtime_seconds);
      for (const auto& msg : m.failure_messages) std::cerr << to_string(m.method) << " s=" << m.s << ": " << msg << '\n';
    }
    // Acceptance-style verdicts where the needed methods were run.
    Json verdicts = Json::array();
    const auto has = [&](Method m) {
      return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end();
    };
    if (has(Method::two_stage) && has(Method::vanilla_lasso)) {
      for (double s : spec.s_grid) {
        const auto& two = result.at(Method::two_stage, s);
        const auto& lasso = result.at(Method::vanilla_lasso, s);
        Json v;
        v["s"] = s;
        v["mse_ratio_two_stage_vs_lasso"] = paired_mse_ratio(two, lasso);
        v["nulls_two_stage"] = two.nulls_selected;
        v["nulls_lasso"] = lasso.nulls_selected;
        if (f.experiment == "1" && s == 1.5) v["mse_ratio_at_most_0.8"] = paired_mse_ratio(two, lasso) <= 0.8;
        if (f.experiment == "2" && s == 1.5) v["mse_ratio_at_most_1"] = paired_mse_ratio(two, lasso) <= 1.0;
        if (f.experiment == "1" && s >= 0.5) v["fewer_nulls_than_lasso"] = two.nulls_selected < lasso.nulls_selected;
        verdicts.push_back(std::move(v));
      }
    }
    summary["verdicts"] = std::move(verdicts);
  } else if (f.experiment == "pvalues") {
    tsv << tsv_header(info) << "model\trep_index\tp_one_sided\tp_two_sided\n";
    Json studies = Json::array();
    for (PvalueModel which : {PvalueModel::null_ratio, PvalueModel::null_single}) {
      PvalueStudySpec spec;
      spec.which = which;
      spec.n = f.n;
      spec.p = f.p;
      spec.reps = f.reps;
      spec.seed = ctx.seed;
      const PvalueStudy study = run_pvalue_study(spec);
      const std::string name = which == PvalueModel::null_ratio ? "null_ratio" : "null_single";
      for (std::size_t i = 0; i < study.p_one_sided.size(); ++i) {
        tsv << name << '\t' << i << '\t' << fmt(study.p_one_sided[i]) << '\t' << fmt(study.p_two_sided[i]) << '\n';
      }
      Json s;
      s["model"] = name;
      s["reps"] = study.reps;
      s["conditioned"] = study.conditioned;
      s["failures"] = study.failures;
      s["ks_statistic"] = study.ks_statistic;
      s["ks_pvalue"] = study.ks_pvalue;
      s["mean_p"] = study.mean_p;
      if (which == PvalueModel::null_ratio) s["uniform_at_1pct"] = study.ks_pvalue > 0.01;
      if (which == PvalueModel::null_single) s["mean_below_0.45"] = study.mean_p < 0.45;
      studies.push_back(std::move(s));
    }
    summary["studies"] = std::move(studies);
  } else if (f.experiment == "bench") {
    BenchSpec spec;
    std::vector<Index> grid;
    for (double v : parse_list(f.p_grid)) grid.push_back(static_cast<Index>(v));
    spec.p_grid = grid;
    spec.n = f.n == 100 ? 500 : f.n;
    spec.k = f.k;
    spec.reps = std::max(1, std::min(f.reps, 25));
    spec.seed = ctx.seed;
    const auto rows = run_runtime_bench(spec);
    tsv << tsv_header(info) << "method\tp\tcolumns\tmedian_seconds\tfeasible\n";
    for (const auto& r : rows) {
      tsv << r.method << '\t' << r.p << '\t' << r.columns << '\t' << (r.feasible ? fmt(r.median_seconds) : "infeasible")
          << '\t' << (r.feasible ? 1 : 0) << '\n';
    }
  } else {
    throw UsageError("--experiment must be one of 1, 2, pvalues, bench");
  }
  write_output(ctx.output, tsv.str());
  if (!f.summary.empty()) {
    summary["run"] = run_json(info);
    write_output(f.summary, summary.dump(2) + "\n");
  }
  return 0;
}

void setup_simulate(CLI::App& app, std::function<int()>& action) {
  auto* sub = app.add_subcommand("simulate", "run the simulation studies and write tidy TSV");
  auto ctx = std::make_shared<Context>();
  auto f = std::make_shared<SimFlags>();
  add_common(sub, *ctx);
  sub->add_option("--experiment", f->experiment, "1, 2, pvalues or bench")
      ->check(CLI::IsMember({"1", "2", "pvalues", "bench"}));
  sub->add_option("--reps", f->reps, "replications")->check(CLI::PositiveNumber);
  sub->add_option("--s-grid", f->s_grid, "comma-separated signal amplitudes");
  sub->add_option("--methods", f->methods, "subset of methods (default all)")->delimiter(',');
  sub->add_option("--n", f->n, "training sample size")->check(CLI::Range(5, 10000000));
  sub->add_option("--p", f->p, "number of raw features")->check(CLI::Range(2, 10000000));
  sub->add_option("--folds", f->folds, "CV folds")->check(CLI::Range(2, 1000));
  sub->add_option("--p-grid", f->p_grid, "bench: comma-separated feature counts");
  sub->add_option("--k", f->k, "bench: stepwise steps")->check(CLI::NonNegativeNumber);
  sub->add_option("--summary", f->summary, "write a JSON summary with verdicts to this file");
  sub->callback([=, &action] { action = [=] { return run_simulation(*f, *ctx); }; });
}

void setup_bench(CLI::App& app, std::function<int()>& action) {
  auto* sub = app.add_subcommand("bench", "runtime comparison of approximate vs exact stepwise and constrained vs expanded lasso");
  auto ctx = std::make_shared<Context>();
  auto f = std::make_shared<SimFlags>();
  f->experiment = "bench";
  f->reps = 5;
  f->n = 500;
  add_common(sub, *ctx);
  sub->add_option("--p-grid", f->p_grid, "comma-separated feature counts (ascending)");
  sub->add_option("--n", f->n, "observations")->check(CLI::Range(5, 10000000));
  sub->add_option("--k", f->k, "stepwise steps")->check(CLI::NonNegativeNumber);
  sub->add_option("--reps", f->reps, "timing repetitions (median reported)")->check(CLI::PositiveNumber);
  sub->callback([=, &action] { action = [=] { return run_simulation(*f, *ctx); }; });
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Sparse log-ratio regression for positive-valued features"};
  app.set_version_flag("--version", std::string("lrlasso ") + LRLASSO_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  std::function<int()> action;
  setup_fit(app, action);
  setup_cv(app, action);
  setup_stepwise(app, action);
  setup_gof(app, action);
  setup_path(app, action);
  setup_simulate(app, action);
  setup_bench(app, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    return action ? action() : 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace lrlasso::cli
