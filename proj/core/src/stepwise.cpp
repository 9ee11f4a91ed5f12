#include <lrlasso/data.hpp>
#include <lrlasso/stepwise.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace lrlasso {

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::completed: return "completed";
    case StopReason::one_signed: return "one_signed";
    case StopReason::repeated_pair: return "repeated_pair";
    case StopReason::no_candidates: return "no_candidates";
  }
  return "unknown";
}

namespace {

using Clock = std::chrono::steady_clock;

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double binomial_deviance(const Vector& y, const Vector& eta) {
  double dev = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    // -2 log-likelihood, log(1 + e^eta) - y eta computed stably.
    const double e = eta[i];
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    dev += 2.0 * (softplus - y[i] * e);
  }
  return dev;
}

Matrix with_intercept(const Eigen::Ref<const Matrix>& x) {
  Matrix design(x.rows(), x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;
  return design;
}

}  // namespace

LinearFit least_squares_fit(const Eigen::Ref<const Matrix>& x, const Vector& y) {
  LinearFit fit;
  if (x.cols() == 0) {
    fit.coefficients = Vector(0);
    fit.intercept = y.mean();
    fit.residual_norm = (y.array() - fit.intercept).matrix().norm();
    return fit;
  }
  const Matrix design = with_intercept(x);
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  const Vector coef = qr.solve(y);
  fit.intercept = coef[0];
  fit.coefficients = coef.tail(x.cols());
  fit.residual_norm = (y - design * coef).norm();
  fit.converged = qr.rank() == design.cols();
  return fit;
}

LinearFit logistic_fit(const Eigen::Ref<const Matrix>& x, const Vector& y, int max_iter) {
  const Index n = x.rows();
  const Matrix design = with_intercept(x);
  const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
  Vector coef = Vector::Zero(design.cols());
  coef[0] = std::log(ybar / (1.0 - ybar));
  Vector eta = design * coef;
  double deviance = binomial_deviance(y, eta);
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    Vector w(n);
    Vector z(n);
    for (Index i = 0; i < n; ++i) {
      const double p = sigmoid(eta[i]);
      const double v = std::max(p * (1.0 - p), 1e-5);
      w[i] = v;
      z[i] = eta[i] + (y[i] - p) / v;
    }
    const Vector sw = w.cwiseSqrt();
    Eigen::ColPivHouseholderQR<Matrix> qr(design.array().colwise() * sw.array());
    const Vector proposal = qr.solve(z.cwiseProduct(sw));
    double step = 1.0;
    Vector next = proposal;
    Vector next_eta = design * next;
    double next_dev = binomial_deviance(y, next_eta);
    while (!(next_dev <= deviance + 1e-12) && step > 1e-8) {
      step *= 0.5;
      next = coef + step * (proposal - coef);
      next_eta = design * next;
      next_dev = binomial_deviance(y, next_eta);
    }
    const double change = deviance - next_dev;
    if (next_dev <= deviance + 1e-12) {
      coef = next;
      eta = next_eta;
      deviance = next_dev;
    }
    if (std::abs(change) <= 1e-10 * (1.0 + std::abs(deviance)) || step <= 1e-8) {
      converged = step > 1e-8;
      break;
    }
  }
  LinearFit fit;
  fit.intercept = coef[0];
  fit.coefficients = coef.tail(x.cols());
  fit.residual_norm = deviance;
  fit.converged = converged;
  return fit;
}

StepwiseTrace approx_forward_stepwise(const Eigen::Ref<const Matrix>& w, const Vector& y, Index k) {
  if (k < 0) throw DomainError("number of steps must be nonnegative");
  if (y.size() != w.rows()) throw DimensionError("response length does not match design rows");
  const Index n = w.rows();
  const Index p = w.cols();
  const LogDesign standardized = standardize(w);
  const double denom = static_cast<double>(n - 1);

  StepwiseTrace trace;
  const double ybar = y.mean();
  Vector r = (y.array() - ybar).matrix();
  trace.coefficients.emplace_back(0);
  trace.intercepts.push_back(ybar);
  trace.residual_norms.push_back(r.norm());

  Matrix ratios(n, 0);
  Vector univariate(p);
  for (Index step = 0; step < k; ++step) {
    const auto start = Clock::now();
    univariate.noalias() = standardized.w.transpose() * r;
    univariate /= denom;
    Index best_pos = 0;
    Index best_neg = 0;
    for (Index j = 1; j < p; ++j) {
      if (univariate[j] > univariate[best_pos]) best_pos = j;
      if (univariate[j] < univariate[best_neg]) best_neg = j;
    }
    if (!(univariate[best_pos] > 0.0) || !(univariate[best_neg] < 0.0)) {
      trace.stop = StopReason::one_signed;
      break;
    }
    const FeaturePair pair{best_pos, best_neg};
    const bool repeated = std::any_of(trace.pairs.begin(), trace.pairs.end(), [&](const FeaturePair& s) {
      return (s.first == pair.first && s.second == pair.second) ||
             (s.first == pair.second && s.second == pair.first);
    });
    if (repeated) {
      trace.stop = StopReason::repeated_pair;
      break;
    }
    trace.pairs.push_back(pair);
    ratios.conservativeResize(Eigen::NoChange, ratios.cols() + 1);
    ratios.col(ratios.cols() - 1) = w.col(pair.first) - w.col(pair.second);
    const LinearFit fit = least_squares_fit(ratios, y);
    r = y - ratios * fit.coefficients;
    r.array() -= fit.intercept;
    trace.coefficients.push_back(fit.coefficients);
    trace.intercepts.push_back(fit.intercept);
    trace.residual_norms.push_back(r.norm());
    trace.step_times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start));
  }
  return trace;
}

namespace {

StepwiseTrace exact_gaussian(const Eigen::Ref<const Matrix>& z, const Vector& y, Index k) {
  const Index n = z.rows();
  const Index m = z.cols();
  Matrix resid = z.rowwise() - z.colwise().mean();
  const Vector base_norm = resid.colwise().norm().transpose();
  const double ybar = y.mean();
  Vector r = (y.array() - ybar).matrix();
  const double y_scale = r.norm();

  StepwiseTrace trace;
  trace.coefficients.emplace_back(0);
  trace.intercepts.push_back(ybar);
  trace.residual_norms.push_back(r.norm());
  std::vector<char> taken(static_cast<std::size_t>(m), 0);
  Matrix chosen(n, 0);

  for (Index step = 0; step < k; ++step) {
    const auto start = Clock::now();
    const Vector norms = resid.colwise().norm().transpose();
    const Vector inner = resid.transpose() * r;
    Index best = -1;
    double best_score = 0.0;
    for (Index c = 0; c < m; ++c) {
      if (taken[static_cast<std::size_t>(c)]) continue;
      if (!(norms[c] > 1e-10 * base_norm[c]) || base_norm[c] == 0.0) continue;
      const double score = std::abs(inner[c]) / norms[c];
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    if (best < 0 || !(best_score > 1e-12 * (1.0 + y_scale))) {
      trace.stop = StopReason::no_candidates;
      break;
    }
    taken[static_cast<std::size_t>(best)] = 1;
    const Vector q = resid.col(best) / norms[best];
    r -= q * q.dot(r);
    resid -= q * (q.transpose() * resid);

    chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
    chosen.col(chosen.cols() - 1) = z.col(best);
    const LinearFit fit = least_squares_fit(chosen, y);
    trace.columns.push_back(best);
    trace.coefficients.push_back(fit.coefficients);
    trace.intercepts.push_back(fit.intercept);
    trace.residual_norms.push_back(r.norm());
    trace.step_times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start));
  }
  return trace;
}

StepwiseTrace exact_binomial(const Eigen::Ref<const Matrix>& z, const Vector& y, Index k) {
  const Index n = z.rows();
  const Index m = z.cols();
  StepwiseTrace trace;
  Matrix chosen(n, 0);
  LinearFit fit = logistic_fit(chosen, y);
  trace.coefficients.emplace_back(0);
  trace.intercepts.push_back(fit.intercept);
  trace.residual_norms.push_back(fit.residual_norm);
  std::vector<char> taken(static_cast<std::size_t>(m), 0);

  for (Index step = 0; step < k; ++step) {
    const auto start = Clock::now();
    Vector eta = chosen * fit.coefficients;
    eta.array() += fit.intercept;
    Vector sw(n);
    Vector score_resid(n);
    for (Index i = 0; i < n; ++i) {
      const double p = sigmoid(eta[i]);
      sw[i] = std::sqrt(std::max(p * (1.0 - p), 1e-5));
      score_resid[i] = y[i] - p;
    }
    Matrix basis = with_intercept(chosen).array().colwise() * sw.array();
    Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, basis.cols());
    const Matrix scaled = z.array().colwise() * sw.array();
    const Matrix projected = scaled - q * (q.transpose() * scaled);
    const Vector inner = z.transpose() * score_resid;

    Index best = -1;
    double best_score = 0.0;
    for (Index c = 0; c < m; ++c) {
      if (taken[static_cast<std::size_t>(c)]) continue;
      const double full = scaled.col(c).norm();
      const double res = projected.col(c).norm();
      if (full == 0.0 || !(res > 1e-10 * full)) continue;
      const double score = inner[c] * inner[c] / (res * res);
      if (score > best_score) {
        best_score = score;
        best = c;
      }
    }
    if (best < 0 || !(best_score > 1e-24)) {
      trace.stop = StopReason::no_candidates;
      break;
    }
    taken[static_cast<std::size_t>(best)] = 1;
    chosen.conservativeResize(Eigen::NoChange, chosen.cols() + 1);
    chosen.col(chosen.cols() - 1) = z.col(best);
    fit = logistic_fit(chosen, y);
    trace.columns.push_back(best);
    trace.coefficients.push_back(fit.coefficients);
    trace.intercepts.push_back(fit.intercept);
    trace.residual_norms.push_back(fit.residual_norm);
    trace.step_times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start));
  }
  return trace;
}

}  // namespace

StepwiseTrace exact_forward_stepwise(const Eigen::Ref<const Matrix>& z, const Vector& y, Index k,
                                     Family family, std::span<const FeaturePair> labels) {
  if (k < 0) throw DomainError("number of steps must be nonnegative");
  if (y.size() != z.rows()) throw DimensionError("response length does not match design rows");
  if (!z.allFinite() || !y.allFinite()) throw DomainError("stepwise input has non-finite entries");
  if (!labels.empty() && static_cast<Index>(labels.size()) != z.cols()) {
    throw DimensionError("pair labels do not match candidate columns");
  }
  StepwiseTrace trace = family == Family::gaussian ? exact_gaussian(z, y, k) : exact_binomial(z, y, k);
  if (!labels.empty()) {
    for (Index c : trace.columns) trace.pairs.push_back(labels[static_cast<std::size_t>(c)]);
  }
  return trace;
}

}  // namespace lrlasso
