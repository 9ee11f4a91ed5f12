#include <lrlasso/solver.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace lrlasso {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
double log1p_exp(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

void check_finite(const LassoProblem& problem) {
  if (!problem.design.allFinite()) throw DomainError("design matrix has non-finite entries");
  if (!problem.response.allFinite()) throw DomainError("response has non-finite entries");
  if (problem.response.size() != problem.n()) throw DimensionError("response length does not match design rows");
  if (problem.weights.size() != 0) {
    if (problem.weights.size() != problem.n()) throw DimensionError("weights length does not match design rows");
    if ((problem.weights.array() <= 0.0).any() || !problem.weights.allFinite()) {
      throw DomainError("observation weights must be positive and finite");
    }
  }
  if (!(problem.lambda >= 0.0) || !std::isfinite(problem.lambda)) throw DomainError("penalty must be a nonnegative finite number");
  if (problem.rows_with_intercept() > problem.n()) throw DimensionError("intercept_rows exceeds row count");
  if (problem.family == Family::binomial) {
    for (Index i = 0; i < problem.rows_with_intercept(); ++i) {
      const double v = problem.response[i];
      if (v != 0.0 && v != 1.0) throw DomainError("binomial response must be 0 or 1");
    }
  }
}

Vector unit_or(const LassoProblem& problem) {
  return problem.weights.size() == 0 ? Vector::Ones(problem.n()) : problem.weights;
}

// Data-loss gradient  -d/dbeta, i.e. X' W (y - mu(eta)), and the intercept analogue.
struct Gradient {
  Vector coef;
  double intercept = 0.0;
};

Gradient loss_gradient(const LassoProblem& problem, const Vector& beta, double intercept) {
  const Index m = problem.rows_with_intercept();
  Vector eta = problem.design * beta;
  eta.head(m).array() += intercept;
  Vector resid(problem.n());
  for (Index i = 0; i < problem.n(); ++i) {
    const double mean = problem.family == Family::gaussian ? eta[i] : sigmoid(eta[i]);
    resid[i] = problem.weight(i) * (problem.response[i] - mean);
  }
  Gradient g;
  g.coef = problem.design.transpose() * resid;
  g.intercept = m > 0 ? resid.head(m).sum() : 0.0;
  return g;
}

double coordinate_violation(double c, double beta, double lambda) {
  if (beta > 0) return std::abs(c - lambda);
  if (beta < 0) return std::abs(c + lambda);
  return std::max(0.0, std::abs(c) - lambda);
}

// ---------------------------------------------------------------------------
// Gaussian weighted coordinate descent.

struct CdWorkspace {
  Matrix x;          // design with intercept rows centered (weighted)
  Vector x_mean;     // weighted means over intercept rows
  Vector w;          // weights
  Matrix xw;         // w_i * x_ij
  Vector curvature;  // sum_i w_i x_ij^2
};

CdWorkspace prepare(const LassoProblem& problem) {
  CdWorkspace ws;
  const Index m = problem.rows_with_intercept();
  ws.w = unit_or(problem);
  ws.x = problem.design;
  ws.x_mean = Vector::Zero(problem.q());
  if (m > 0) {
    const double wsum = ws.w.head(m).sum();
    ws.x_mean = (ws.x.topRows(m).transpose() * ws.w.head(m)) / wsum;
    ws.x.topRows(m).rowwise() -= ws.x_mean.transpose();
  }
  ws.xw = ws.x.array().colwise() * ws.w.array();
  ws.curvature = ws.xw.cwiseProduct(ws.x).colwise().sum().transpose();
  return ws;
}

LassoSolution gaussian_cd(const LassoProblem& problem, const LassoSolution* init,
                          const SolverOptions& options) {
  const Index q = problem.q();
  const Index m = problem.rows_with_intercept();
  const CdWorkspace ws = prepare(problem);

  LassoSolution sol;
  sol.coefficients = Vector::Zero(q);
  if (init != nullptr && init->coefficients.size() == q) sol.coefficients = init->coefficients;

  // Centered intercept: mu_c = mu + x_mean' beta.
  Vector r = problem.response - ws.x * sol.coefficients;
  double mu_c = 0.0;
  if (m > 0) {
    mu_c = ws.w.head(m).dot(r.head(m)) / ws.w.head(m).sum();
    r.head(m).array() -= mu_c;
  }

  std::vector<char> active(static_cast<std::size_t>(q), 0);
  for (Index j = 0; j < q; ++j) active[static_cast<std::size_t>(j)] = sol.coefficients[j] != 0.0;

  const double lambda = problem.lambda;
  auto update = [&](Index j) -> double {
    const double v = ws.curvature[j];
    const double old = sol.coefficients[j];
    if (v <= 0.0) {
      if (old != 0.0) {
        sol.coefficients[j] = 0.0;
        return std::abs(old);
      }
      return 0.0;
    }
    const double g = ws.xw.col(j).dot(r);
    const double updated = soft_threshold(g + v * old, lambda) / v;
    const double delta = updated - old;
    if (delta != 0.0) {
      r.noalias() -= delta * ws.x.col(j);
      sol.coefficients[j] = updated;
    }
    if (updated != 0.0) active[static_cast<std::size_t>(j)] = 1;
    return std::abs(delta);
  };
  auto recenter_intercept = [&]() {
    if (m == 0) return;
    const double delta = ws.w.head(m).dot(r.head(m)) / ws.w.head(m).sum();
    mu_c += delta;
    r.head(m).array() -= delta;
  };

  double coef_tol = options.coef_tol;
  int sweeps = 0;
  bool converged = false;
  while (sweeps < options.max_sweeps) {
    // Full sweep.
    double max_change = 0.0;
    for (Index j = 0; j < q; ++j) max_change = std::max(max_change, update(j));
    recenter_intercept();
    ++sweeps;
    double scale = 1.0 + sol.coefficients.cwiseAbs().maxCoeff();
    if (q == 0) scale = 1.0;
    if (max_change > coef_tol * scale) {
      // Iterate on the active set until it settles.
      while (sweeps < options.max_sweeps) {
        double change = 0.0;
        for (Index j = 0; j < q; ++j) {
          if (active[static_cast<std::size_t>(j)]) change = std::max(change, update(j));
        }
        recenter_intercept();
        ++sweeps;
        scale = 1.0 + (q ? sol.coefficients.cwiseAbs().maxCoeff() : 0.0);
        if (change <= coef_tol * scale) break;
      }
      continue;
    }
    sol.intercept = mu_c - ws.x_mean.dot(sol.coefficients);
    sol.kkt_residual = kkt_check(problem, sol);
    if (sol.kkt_residual <= options.kkt_tol) {
      converged = true;
      break;
    }
    coef_tol *= 0.1;
    if (coef_tol < 1e-17) coef_tol = 1e-17;
  }
  sol.intercept = mu_c - ws.x_mean.dot(sol.coefficients);
  sol.iterations = sweeps;
  sol.kkt_residual = kkt_check(problem, sol);
  sol.converged = converged || sol.kkt_residual <= options.kkt_tol;
  sol.objective = lasso_objective(problem, sol.coefficients, sol.intercept);
  return sol;
}

// ---------------------------------------------------------------------------
// Binomial: IRLS around a gaussian inner solver, with backtracking on the
// penalized objective so every outer step decreases it.

using InnerSolver = std::function<LassoSolution(const LassoProblem&, const LassoSolution*)>;
using ObjectiveFn = std::function<double(const Vector&, double)>;

LassoSolution irls(const LassoProblem& problem, const LassoSolution* init, const SolverOptions& options,
                   const InnerSolver& inner, const ObjectiveFn& objective,
                   const std::function<double(const LassoSolution&)>& kkt) {
  const Index n = problem.n();
  const Index m = problem.rows_with_intercept();
  LassoSolution current;
  current.coefficients = Vector::Zero(problem.q());
  if (init != nullptr && init->coefficients.size() == problem.q()) {
    current = *init;
  } else if (m > 0) {
    const Vector w = unit_or(problem);
    const double ybar = std::clamp(w.head(m).dot(problem.response.head(m)) / w.head(m).sum(), 1e-6, 1 - 1e-6);
    current.intercept = std::log(ybar / (1 - ybar));
  }
  double f_current = objective(current.coefficients, current.intercept);

  LassoProblem working = problem;
  working.family = Family::gaussian;
  working.weights.resize(n);
  working.response.resize(n);

  int total_sweeps = 0;
  bool converged = false;
  for (int it = 0; it < options.max_irls; ++it) {
    Vector eta = problem.design * current.coefficients;
    eta.head(m).array() += current.intercept;
    for (Index i = 0; i < n; ++i) {
      const double pr = sigmoid(eta[i]);
      const double v = std::max(pr * (1.0 - pr), options.irls_weight_floor);
      working.weights[i] = problem.weight(i) * v;
      working.response[i] = eta[i] + (problem.response[i] - pr) / v;
    }
    LassoSolution proposal = inner(working, &current);
    total_sweeps += proposal.iterations;

    // Backtrack toward the current iterate if the step overshoots.
    double step = 1.0;
    Vector beta = proposal.coefficients;
    double mu = proposal.intercept;
    double f_new = objective(beta, mu);
    while (!(f_new <= f_current + 1e-12 * (1.0 + std::abs(f_current))) && step > 1e-6) {
      step *= 0.5;
      beta = current.coefficients + step * (proposal.coefficients - current.coefficients);
      mu = current.intercept + step * (proposal.intercept - current.intercept);
      f_new = objective(beta, mu);
    }
    const double change = (beta - current.coefficients).cwiseAbs().maxCoeff();
    const double scale = 1.0 + (beta.size() ? beta.cwiseAbs().maxCoeff() : 0.0);
    const double mu_change = std::abs(mu - current.intercept);
    current.coefficients = beta;
    current.intercept = mu;
    current.multiplier = proposal.multiplier;
    f_current = f_new;
    current.kkt_residual = kkt(current);
    if (current.kkt_residual <= options.kkt_tol) {
      converged = true;
      break;
    }
    if (step <= 1e-6 || (std::max(change, mu_change) <= 1e-14 * scale && it > 0)) break;
  }
  current.iterations = total_sweeps;
  current.objective = f_current;
  current.kkt_residual = kkt(current);
  current.converged = converged || current.kkt_residual <= options.kkt_tol;
  return current;
}

}  // namespace

double lasso_objective(const LassoProblem& problem, const Vector& beta, double intercept) {
  const Index m = problem.rows_with_intercept();
  Vector eta = problem.design * beta;
  eta.head(m).array() += intercept;
  double loss = 0.0;
  for (Index i = 0; i < problem.n(); ++i) {
    const double w = problem.weight(i);
    if (problem.family == Family::gaussian) {
      const double r = problem.response[i] - eta[i];
      loss += 0.5 * w * r * r;
    } else {
      loss += w * (log1p_exp(eta[i]) - problem.response[i] * eta[i]);
    }
  }
  return loss + problem.lambda * beta.lpNorm<1>();
}

double kkt_check(const LassoProblem& problem, const LassoSolution& solution) {
  const Gradient g = loss_gradient(problem, solution.coefficients, solution.intercept);
  double worst = std::abs(g.intercept);
  for (Index j = 0; j < problem.q(); ++j) {
    worst = std::max(worst, coordinate_violation(g.coef[j], solution.coefficients[j], problem.lambda));
  }
  return worst;
}

double kkt_check_constrained(const LassoProblem& problem, const LassoSolution& solution) {
  const Gradient g = loss_gradient(problem, solution.coefficients, solution.intercept);
  const Index q = problem.q();
  const double lambda = problem.lambda;
  auto violation = [&](double nu) {
    double worst = 0.0;
    for (Index j = 0; j < q; ++j) {
      worst = std::max(worst, coordinate_violation(g.coef[j] - nu, solution.coefficients[j], lambda));
    }
    return worst;
  };
  double lo = 0.0;
  double hi = 0.0;
  if (q > 0) {
    lo = g.coef.minCoeff() - lambda - 1.0;
    hi = g.coef.maxCoeff() + lambda + 1.0;
  }
  // The violation is convex and piecewise linear in nu: golden-section search.
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo + (1 - ratio) * (hi - lo);
  double b = lo + ratio * (hi - lo);
  double fa = violation(a);
  double fb = violation(b);
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
    if (fa <= fb) {
      hi = b;
      b = a;
      fb = fa;
      a = lo + (1 - ratio) * (hi - lo);
      fa = violation(a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + ratio * (hi - lo);
      fb = violation(b);
    }
  }
  // Active coordinates pin nu exactly; try those candidates too.
  double best = std::min({fa, fb, violation(0.5 * (lo + hi))});
  for (Index j = 0; j < q; ++j) {
    const double beta = solution.coefficients[j];
    if (beta != 0.0) best = std::min(best, violation(g.coef[j] - lambda * (beta > 0 ? 1.0 : -1.0)));
  }
  return std::max(best, std::abs(g.intercept));
}

LassoSolution solve_lasso(const LassoProblem& problem, const LassoSolution* init,
                          const SolverOptions& options) {
  check_finite(problem);
  if (problem.family == Family::gaussian) return gaussian_cd(problem, init, options);
  return irls(
      problem, init, options,
      [&](const LassoProblem& working, const LassoSolution* start) {
        return gaussian_cd(working, start, options);
      },
      [&](const Vector& beta, double mu) { return lasso_objective(problem, beta, mu); },
      [&](const LassoSolution& s) { return kkt_check(problem, s); });
}

double lasso_lambda_max(const Eigen::Ref<const Matrix>& x, const Vector& y, Family family,
                        const Vector& weights) {
  const Vector w = weights.size() == 0 ? Vector::Ones(x.rows()) : weights;
  const double ybar = w.dot(y) / w.sum();
  const Vector resid = w.cwiseProduct((y.array() - ybar).matrix());
  (void)family;  // the binomial null fit also has residual y - ybar
  return (x.transpose() * resid).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Sum-zero constrained lasso.
//
// The data are augmented with one observation whose features are all 1, which
// carries no intercept and has weight rho. With response u = -nu / rho its loss
// term is nu * sum(beta) + rho / 2 * sum(beta)^2 + const: the augmented
// Lagrangian of the constraint. After each weighted-lasso solve the multiplier
// moves by rho * sum(beta) (method of multipliers), which drives sum(beta) to 0
// without the ill-conditioning of a single huge weight.

namespace {

double augmentation_weight(const Eigen::Ref<const Matrix>& x, const Vector& w) {
  const double wsum = w.sum();
  const Vector mean = (x.transpose() * w) / wsum;
  double total = 0.0;
  for (Index j = 0; j < x.cols(); ++j) {
    total += ((x.col(j).array() - mean[j]).square() * w.array()).sum();
  }
  const double rho = x.cols() > 0 ? total / static_cast<double>(x.cols()) : 1.0;
  return rho > 0.0 ? rho : 1.0;
}

bool constraint_ok(const Vector& beta, const SolverOptions& options, double* residual) {
  *residual = std::abs(beta.sum());
  return *residual <= options.constraint_rel_tol * beta.lpNorm<1>() + options.constraint_abs_tol;
}

LassoSolution constrained_gaussian(const LassoProblem& data, const LassoSolution* init,
                                   const SolverOptions& options) {
  const Index n = data.n();
  const Index p = data.q();
  const Vector w = unit_or(data);
  const double rho = augmentation_weight(data.design, w);

  LassoProblem aug;
  aug.family = Family::gaussian;
  aug.lambda = data.lambda;
  aug.design.resize(n + 1, p);
  aug.design.topRows(n) = data.design;
  aug.design.row(n).setOnes();
  aug.response.resize(n + 1);
  aug.response.head(n) = data.response;
  aug.weights.resize(n + 1);
  aug.weights.head(n) = w;
  aug.weights[n] = rho;
  aug.intercept_rows = n;

  LassoSolution current;
  current.coefficients = Vector::Zero(p);
  double nu = 0.0;
  if (init != nullptr && init->coefficients.size() == p) {
    current = *init;
    nu = init->multiplier;
  }

  int sweeps = 0;
  bool inner_ok = false;
  double residual = 0.0;
  bool feasible = false;
  for (int t = 0; t < options.max_multiplier_updates; ++t) {
    aug.response[n] = -nu / rho;
    current = gaussian_cd(aug, &current, options);
    sweeps += current.iterations;
    inner_ok = current.converged;
    feasible = constraint_ok(current.coefficients, options, &residual);
    nu += rho * current.coefficients.sum();
    if (feasible && inner_ok) break;
  }
  current.multiplier = nu;
  current.iterations = sweeps;
  current.constraint_residual = residual;
  current.objective = lasso_objective(data, current.coefficients, current.intercept);
  current.kkt_residual = kkt_check_constrained(data, current);
  current.converged = inner_ok && feasible && current.kkt_residual <= options.kkt_tol;
  if (!feasible) {
    throw ConvergenceError("constrained lasso: |sum beta| = " + std::to_string(residual) +
                           " after " + std::to_string(options.max_multiplier_updates) +
                           " multiplier updates");
  }
  return current;
}

}  // namespace

LassoSolution constrained_lasso(const Eigen::Ref<const Matrix>& w, const Vector& y, double gamma,
                                Family family, const LassoSolution* init,
                                const SolverOptions& options) {
  LassoProblem data;
  data.design = w;
  data.response = y;
  data.lambda = gamma;
  data.family = family;
  check_finite(data);

  // At or above gamma_max the null model is exactly optimal; returning it
  // directly avoids round-off leaving ~1e-13 coefficients at the top of a path.
  const double ybar = y.size() > 0 ? y.mean() : 0.0;
  const bool null_intercept_finite = family == Family::gaussian || (ybar > 0.0 && ybar < 1.0);
  if (null_intercept_finite && w.cols() > 0 && gamma >= constrained_gamma_max(w, y, family)) {
    LassoSolution zero;
    zero.coefficients = Vector::Zero(w.cols());
    zero.intercept = family == Family::gaussian ? ybar : std::log(ybar / (1.0 - ybar));
    zero.objective = lasso_objective(data, zero.coefficients, zero.intercept);
    zero.kkt_residual = kkt_check_constrained(data, zero);
    zero.converged = true;
    return zero;
  }

  if (family == Family::gaussian) return constrained_gaussian(data, init, options);

  double residual = 0.0;
  LassoSolution sol = irls(
      data, init, options,
      [&](const LassoProblem& working, const LassoSolution* start) {
        return constrained_gaussian(working, start, options);
      },
      [&](const Vector& beta, double mu) { return lasso_objective(data, beta, mu); },
      [&](const LassoSolution& s) { return kkt_check_constrained(data, s); });
  const bool feasible = constraint_ok(sol.coefficients, options, &residual);
  sol.constraint_residual = residual;
  if (!feasible) {
    throw ConvergenceError("constrained logistic lasso: |sum beta| = " + std::to_string(residual));
  }
  return sol;
}

double constrained_objective(const Eigen::Ref<const Matrix>& w, const Vector& y, Family family,
                             const Vector& beta, double intercept, double gamma) {
  LassoProblem data;
  data.design = w;
  data.response = y;
  data.lambda = gamma;
  data.family = family;
  return lasso_objective(data, beta, intercept);
}

double constrained_gamma_max(const Eigen::Ref<const Matrix>& w, const Vector& y, Family family) {
  (void)family;
  const double ybar = y.mean();
  const Vector c = w.transpose() * (y.array() - ybar).matrix();
  if (c.size() == 0) return 0.0;
  return 0.5 * (c.maxCoeff() - c.minCoeff());
}

std::vector<double> geometric_grid(double top, Index count, double min_ratio) {
  if (count < 2) throw DomainError("a penalty path needs at least 2 grid points");
  if (!(min_ratio > 0.0 && min_ratio < 1.0)) throw DomainError("lambda_min_ratio must lie in (0, 1)");
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double step = std::log(min_ratio) / static_cast<double>(count - 1);
  for (Index i = 0; i < count; ++i) grid[static_cast<std::size_t>(i)] = top * std::exp(step * static_cast<double>(i));
  return grid;
}

std::vector<PathPoint> constrained_path(const Eigen::Ref<const Matrix>& w, const Vector& y,
                                        Family family, const std::vector<double>& gammas,
                                        const SolverOptions& options) {
  std::vector<PathPoint> path;
  path.reserve(gammas.size());
  const LassoSolution* warm = nullptr;
  for (double gamma : gammas) {
    PathPoint point;
    point.penalty = gamma;
    point.solution = constrained_lasso(w, y, gamma, family, warm, options);
    path.push_back(std::move(point));
    warm = &path.back().solution;
  }
  return path;
}

std::vector<PathPoint> lambda_path(const Eigen::Ref<const Matrix>& w, const Vector& y,
                                   Family family, Index n_lambda, double lambda_min_ratio,
                                   const SolverOptions& options) {
  const double top = constrained_gamma_max(w, y, family);
  return constrained_path(w, y, family, geometric_grid(top, n_lambda, lambda_min_ratio), options);
}

std::vector<PathPoint> lasso_path(const Eigen::Ref<const Matrix>& x, const Vector& y,
                                  Family family, const std::vector<double>& lambdas,
                                  const SolverOptions& options) {
  LassoProblem problem;
  problem.design = x;
  problem.response = y;
  problem.family = family;
  std::vector<PathPoint> path;
  path.reserve(lambdas.size());
  const LassoSolution* warm = nullptr;
  for (double lambda : lambdas) {
    problem.lambda = lambda;
    PathPoint point;
    point.penalty = lambda;
    point.solution = solve_lasso(problem, warm, options);
    path.push_back(std::move(point));
    warm = &path.back().solution;
  }
  return path;
}

LassoSolution proximal_gradient_lasso(const Eigen::Ref<const Matrix>& x, const Vector& y,
                                      double lambda, int max_iter, double tol) {
  const Index p = x.cols();
  const Vector x_mean = x.colwise().mean().transpose();
  const Matrix xc = x.rowwise() - x_mean.transpose();
  const double ybar = y.mean();
  const Vector yc = (y.array() - ybar).matrix();

  // Lipschitz constant of the gradient: largest eigenvalue of xc' xc.
  double lipschitz = 0.0;
  if (p <= 400) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(xc.transpose() * xc, Eigen::EigenvaluesOnly);
    lipschitz = eig.eigenvalues().maxCoeff();
  } else {
    Vector v = Vector::Ones(p).normalized();
    for (int it = 0; it < 300; ++it) {
      Vector next = xc.transpose() * (xc * v);
      lipschitz = next.norm();
      if (lipschitz == 0.0) break;
      v = next / lipschitz;
    }
    lipschitz *= 1.05;
  }
  if (!(lipschitz > 0.0)) lipschitz = 1.0;
  const double step = 1.0 / lipschitz;

  auto objective = [&](const Vector& b) {
    return 0.5 * (yc - xc * b).squaredNorm() + lambda * b.lpNorm<1>();
  };
  Vector beta = Vector::Zero(p);
  Vector momentum = beta;
  double t = 1.0;
  double f_prev = objective(beta);
  int it = 0;
  int quiet = 0;
  for (; it < max_iter; ++it) {
    const Vector grad = xc.transpose() * (xc * momentum - yc);
    Vector next = momentum - step * grad;
    for (Index j = 0; j < p; ++j) next[j] = soft_threshold(next[j], step * lambda);
    const double f_next = objective(next);
    if (f_next > f_prev) {
      // Adaptive restart: drop the momentum and take a plain proximal step.
      t = 1.0;
      momentum = beta;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double change = (next - beta).cwiseAbs().maxCoeff();
    momentum = next + ((t - 1.0) / t_next) * (next - beta);
    beta = std::move(next);
    t = t_next;
    f_prev = f_next;
    const double scale = 1.0 + beta.cwiseAbs().maxCoeff();
    quiet = change <= tol * scale ? quiet + 1 : 0;
    if (quiet >= 10) break;
  }
  LassoSolution sol;
  sol.coefficients = beta;
  sol.intercept = ybar - x_mean.dot(beta);
  sol.iterations = it;
  LassoProblem problem;
  problem.design = x;
  problem.response = y;
  problem.lambda = lambda;
  sol.objective = lasso_objective(problem, beta, sol.intercept);
  sol.kkt_residual = kkt_check(problem, sol);
  sol.converged = it < max_iter;
  return sol;
}

Vector linear_predictor(const Eigen::Ref<const Matrix>& x, const LassoSolution& solution) {
  Vector eta = x * solution.coefficients;
  eta.array() += solution.intercept;
  return eta;
}

}  // namespace lrlasso
