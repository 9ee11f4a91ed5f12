#include <lrlasso/inference.hpp>
#include <lrlasso/stats.hpp>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <cmath>
#include <limits>

namespace lrlasso {

Matrix center_columns(const Eigen::Ref<const Matrix>& x) {
  return x.rowwise() - x.colwise().mean();
}

namespace {

Matrix with_intercept(const Eigen::Ref<const Matrix>& x) {
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

Matrix columns(const Matrix& x, const std::vector<Index>& idx) {
  Matrix out(x.rows(), static_cast<Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) out.col(static_cast<Index>(c)) = x.col(idx[c]);
  return out;
}

}  // namespace

FTestResult f_test_sum_zero(const Eigen::Ref<const Matrix>& w, const Vector& y) {
  const Index n = w.rows();
  const Index p = w.cols();
  if (y.size() != n) throw DimensionError("response length does not match design rows");
  if (n <= p + 1) {
    throw DomainError("F test needs n > p + 1 (n=" + std::to_string(n) + ", p=" + std::to_string(p) +
                      "); use the selective test instead");
  }
  const Matrix design = with_intercept(w);
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    throw DomainError("design [1, log X] is rank deficient; the F test is undefined, use the selective test");
  }
  const Vector coef = qr.solve(y);
  const double rss = (y - design * coef).squaredNorm();
  const double df2 = static_cast<double>(n - p - 1);

  // a' (D'D)^{-1} a with a = (0, 1, ..., 1): D P = Q R  =>  ||R^{-T} P' a||^2.
  Vector a = Vector::Ones(p + 1);
  a[0] = 0.0;
  const Vector permuted = qr.colsPermutation().transpose() * a;
  const Matrix r = qr.matrixR().topLeftCorner(p + 1, p + 1).triangularView<Eigen::Upper>();
  const Vector u = r.transpose().triangularView<Eigen::Lower>().solve(permuted);
  const double variance_factor = u.squaredNorm();

  FTestResult out;
  out.df2 = df2;
  out.sum_beta = coef.tail(p).sum();
  const double sigma2 = rss / df2;
  out.sigma = std::sqrt(sigma2);
  const double eps_scale = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + coef.tail(p).lpNorm<1>());
  if (std::abs(out.sum_beta) <= eps_scale) {
    out.statistic = 0.0;
    out.p_value = 1.0;
    return out;
  }
  if (!(sigma2 > 0.0)) {
    out.statistic = std::numeric_limits<double>::infinity();
    out.p_value = 0.0;
    return out;
  }
  out.statistic = out.sum_beta * out.sum_beta / (sigma2 * variance_factor);
  out.p_value = stats::f_upper_tail(out.statistic, 1.0, df2);
  return out;
}

double estimate_sigma(const Eigen::Ref<const Matrix>& x, const Vector& y) {
  const Index n = x.rows();
  const Index p = x.cols();
  if (n <= p + 1) throw DomainError("cannot estimate sigma from the full OLS fit: n <= p + 1");
  const Matrix design = with_intercept(x);
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  const Vector coef = qr.solve(y);
  return std::sqrt((y - design * coef).squaredNorm() / static_cast<double>(n - qr.rank()));
}

bool SelectionEvent::contains(const Vector& y, double slack) const {
  if (a.rows() == 0) return true;
  return ((a * y - b).array() <= slack).all();
}

SelectionEvent selection_event(const Eigen::Ref<const Matrix>& x, const LassoSolution& solution,
                               double lambda) {
  if (!(lambda > 0.0)) throw DomainError("selection event needs lambda > 0");
  const Matrix xc = center_columns(x);
  const Index n = xc.rows();
  const Index p = xc.cols();

  SelectionEvent event;
  event.lambda = lambda;
  std::vector<Index> inactive;
  for (Index j = 0; j < p; ++j) {
    const double beta = solution.coefficients[j];
    if (beta != 0.0) {
      event.support.push_back(j);
      event.signs.push_back(beta > 0 ? 1 : -1);
    } else {
      inactive.push_back(j);
    }
  }
  const Index m = static_cast<Index>(event.support.size());
  const Index q = static_cast<Index>(inactive.size());
  event.inactive_rows = q;
  const Matrix x_act = columns(xc, event.support);
  const Matrix x_inact = columns(xc, inactive);
  Vector s(m);
  for (Index i = 0; i < m; ++i) s[i] = event.signs[static_cast<std::size_t>(i)];

  event.a.resize(2 * q + m, n);
  event.b.resize(2 * q + m);
  if (m == 0) {
    event.a.topRows(q) = x_inact.transpose() / lambda;
    event.a.middleRows(q, q) = -x_inact.transpose() / lambda;
    event.b.setOnes();
    return event;
  }
  const Matrix gram = x_act.transpose() * x_act;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw DomainError("selected columns are not of full column rank");
  }
  const Matrix pinv_t = ldlt.solve(x_act.transpose());  // (X_M' X_M)^{-1} X_M'
  const Matrix residual_maker = Matrix::Identity(n, n) - x_act * pinv_t;
  const Vector gram_inv_s = ldlt.solve(s);
  const Vector inactive_shift = x_inact.transpose() * (x_act * gram_inv_s);

  event.a.topRows(q) = x_inact.transpose() * residual_maker / lambda;
  event.a.middleRows(q, q) = -event.a.topRows(q);
  event.a.bottomRows(m) = -(s.asDiagonal() * pinv_t);
  event.b.head(q) = (1.0 - inactive_shift.array()).matrix();
  event.b.segment(q, q) = (1.0 + inactive_shift.array()).matrix();
  event.b.tail(m) = -lambda * s.cwiseProduct(gram_inv_s);
  return event;
}

SelectionEvent lasso_selection_event(const Eigen::Ref<const Matrix>& x, const Vector& y,
                                     double lambda, const SolverOptions& options) {
  if (y.size() != x.rows()) throw DimensionError("response length does not match design rows");
  LassoProblem problem;
  problem.design = center_columns(x);
  problem.response = y;
  problem.lambda = lambda;
  const LassoSolution solution = solve_lasso(problem, nullptr, options);
  if (!solution.converged) throw ConvergenceError("lasso did not converge; selection event undefined");
  SelectionEvent event = selection_event(x, solution, lambda);
  if (!event.contains(y, 1e-8)) {
    const double worst = (event.a * y - event.b).maxCoeff();
    throw ConsistencyError("observed response violates its own selection event by " + std::to_string(worst));
  }
  return event;
}

TruncationInterval truncation_interval(const SelectionEvent& event, const Vector& eta,
                                       const Vector& y) {
  const double eta_sq = eta.squaredNorm();
  const Vector c = eta / eta_sq;
  const Vector z = y - c * eta.dot(y);
  const Vector ac = event.a * c;
  const Vector slack = event.b - event.a * z;
  TruncationInterval out{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (Index j = 0; j < ac.size(); ++j) {
    if (std::abs(ac[j]) < 1e-12) continue;
    const double bound = slack[j] / ac[j];
    if (ac[j] > 0) {
      out.upper = std::min(out.upper, bound);
    } else {
      out.lower = std::max(out.lower, bound);
    }
  }
  return out;
}

PivotResult selective_sum_zero_test(const SelectionEvent& event, const Eigen::Ref<const Matrix>& x,
                                    const Vector& y, double sigma) {
  if (event.support.empty()) throw DomainError("empty selected support: there is no sum-zero hypothesis to test");
  if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
  const Matrix xc = center_columns(x);
  const Matrix x_act = columns(xc, event.support);
  const Index m = x_act.cols();
  Eigen::LDLT<Matrix> ldlt(x_act.transpose() * x_act);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw DomainError("selected columns are not of full column rank");
  }
  PivotResult out;
  out.eta = x_act * ldlt.solve(Vector::Ones(m));
  out.sigma = sigma;
  out.statistic = out.eta.dot(y);
  const TruncationInterval interval = truncation_interval(event, out.eta, y);
  out.vminus = interval.lower;
  out.vplus = interval.upper;
  if (out.vminus > out.vplus) {
    throw ConsistencyError("empty truncation interval [" + std::to_string(out.vminus) + ", " +
                           std::to_string(out.vplus) + "]: event inconsistent with y");
  }
  const double sd = sigma * out.eta.norm();
  const double tol = 1e-8 * (1.0 + std::abs(out.statistic));
  if (out.statistic < out.vminus - tol || out.statistic > out.vplus + tol) {
    throw ConsistencyError("statistic lies outside its truncation interval");
  }
  const double t = std::clamp(out.statistic, out.vminus, out.vplus);
  out.pivot = truncated_gaussian_cdf(t, 0.0, sd, out.vminus, out.vplus);
  out.p_one_sided = 1.0 - out.pivot;
  out.p_two_sided = 1.0 - 2.0 * std::abs(out.pivot - 0.5);
  return out;
}

double truncated_gaussian_cdf(double x, double mu, double sd, double lo, double hi) {
  if (!(sd > 0.0)) throw DomainError("truncated Gaussian needs sd > 0");
  if (hi < lo) throw DomainError("truncation interval has hi < lo");
  if (std::isnan(x) || std::isnan(mu) || std::isnan(lo) || std::isnan(hi)) throw DomainError("NaN argument");
  const double span_tol = 1e-9 * (1.0 + std::abs(x));
  if (x < lo - span_tol || x > hi + span_tol) throw DomainError("x lies outside [lo, hi]");
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;

  const double a = (lo - mu) / sd;
  const double b = (hi - mu) / sd;
  const double t = (x - mu) / sd;
  double numerator = 0.0;
  double denominator = 0.0;
  if (a >= 0.0) {
    // Upper tails scaled by 1 / phi(a): Q(u) / phi(a) = exp((a^2 - u^2) / 2) R(u).
    auto scaled = [a](double u) {
      return std::isinf(u) ? 0.0 : std::exp(0.5 * (a - u) * (a + u)) * stats::mills_ratio(u);
    };
    const double qa = stats::mills_ratio(a);
    numerator = qa - scaled(t);
    denominator = qa - scaled(b);
  } else if (b <= 0.0) {
    // Lower tails Phi(u) = Q(-u), scaled by 1 / phi(b).
    auto scaled = [b](double u) {
      return std::isinf(u) ? 0.0 : std::exp(0.5 * (b - u) * (b + u)) * stats::mills_ratio(-u);
    };
    const double pb = stats::mills_ratio(-b);
    numerator = scaled(t) - scaled(a);
    denominator = pb - scaled(a);
  } else {
    const double pa = stats::normal_cdf(a);
    numerator = stats::normal_cdf(t) - pa;
    denominator = stats::normal_cdf(b) - pa;
  }
  if (!(denominator > 0.0) || !std::isfinite(denominator)) {
    throw DomainError("unstable truncation: normalizing mass underflows for [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "]");
  }
  return std::clamp(numerator / denominator, 0.0, 1.0);
}

}  // namespace lrlasso
