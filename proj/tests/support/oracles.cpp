#include "oracles.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <limits>

namespace oracle {

double gaussian_objective(const Matrix& x, const Vector& y, const Vector& beta, double intercept, double pen) {
  const Vector r = (y - x * beta).array() - intercept;
  return 0.5 * r.squaredNorm() + pen * beta.lpNorm<1>();
}

Fit constrained_least_squares(const Matrix& w, const Vector& y) {
  const Index p = w.cols();
  const Eigen::RowVectorXd means = w.colwise().mean();
  const Matrix xc = w.rowwise() - means;
  const Vector yc = (y.array() - y.mean()).matrix();
  Matrix kkt = Matrix::Zero(p + 1, p + 1);
  kkt.topLeftCorner(p, p) = xc.transpose() * xc;
  kkt.block(0, p, p, 1).setOnes();
  kkt.block(p, 0, 1, p).setOnes();
  Vector rhs = Vector::Zero(p + 1);
  rhs.head(p) = xc.transpose() * yc;
  const Vector sol = kkt.fullPivLu().solve(rhs);
  Fit fit;
  fit.beta = sol.head(p);
  fit.intercept = y.mean() - means.dot(fit.beta);
  fit.objective = gaussian_objective(w, y, fit.beta, fit.intercept, 0.0);
  return fit;
}

Fit constrained_lasso_enumerate(const Matrix& w, const Vector& y, double gamma) {
  const Index p = w.cols();
  const Eigen::RowVectorXd means = w.colwise().mean();
  const Matrix xc = w.rowwise() - means;
  const Vector yc = (y.array() - y.mean()).matrix();
  const Vector c = xc.transpose() * yc;
  const Matrix gram = xc.transpose() * xc;

  Fit best;
  best.objective = std::numeric_limits<double>::infinity();
  // Each feature is 0, +, or - : base-3 counter.
  Index patterns = 1;
  for (Index j = 0; j < p; ++j) patterns *= 3;
  for (Index code = 0; code < patterns; ++code) {
    std::vector<Index> support;
    std::vector<double> sign;
    Index rest = code;
    for (Index j = 0; j < p; ++j) {
      const Index digit = rest % 3;
      rest /= 3;
      if (digit == 0) continue;
      support.push_back(j);
      sign.push_back(digit == 1 ? 1.0 : -1.0);
    }
    const Index m = static_cast<Index>(support.size());
    Vector beta = Vector::Zero(p);
    double nu = 0.0;
    if (m == 1) continue;  // a single nonzero cannot sum to zero
    if (m > 0) {
      // [G_SS 1; 1' 0] [b; nu] = [c_S - gamma s; 0]
      Matrix kkt = Matrix::Zero(m + 1, m + 1);
      Vector rhs = Vector::Zero(m + 1);
      for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b < m; ++b) kkt(a, b) = gram(support[a], support[b]);
        kkt(a, m) = 1.0;
        kkt(m, a) = 1.0;
        rhs[a] = c[support[a]] - gamma * sign[static_cast<std::size_t>(a)];
      }
      Eigen::FullPivLU<Matrix> lu(kkt);
      if (lu.rank() < m + 1) continue;
      const Vector sol = lu.solve(rhs);
      bool signs_ok = true;
      for (Index a = 0; a < m; ++a) {
        if (sol[a] * sign[static_cast<std::size_t>(a)] <= 0.0) signs_ok = false;
        beta[support[a]] = sol[a];
      }
      if (!signs_ok) continue;
      nu = sol[m];
    } else {
      // Null model: nu can be any value; the best choice centres the range of c.
      nu = 0.5 * (c.maxCoeff() + c.minCoeff());
    }
    // Inactive features: |c_j - (G b)_j - nu| <= gamma.
    const Vector grad = c - gram * beta;
    bool dual_ok = true;
    for (Index j = 0; j < p; ++j) {
      if (beta[j] != 0.0) continue;
      if (std::abs(grad[j] - nu) > gamma * (1.0 + 1e-9) + 1e-9) dual_ok = false;
    }
    if (!dual_ok) continue;
    const double intercept = y.mean() - means.dot(beta);
    const double obj = gaussian_objective(w, y, beta, intercept, gamma);
    if (obj < best.objective) {
      best.objective = obj;
      best.beta = beta;
      best.intercept = intercept;
    }
  }
  return best;
}

double soft(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

Fit fista_lasso(const Matrix& x, const Vector& y, double lambda, int iterations) {
  const Eigen::RowVectorXd means = x.colwise().mean();
  const Matrix xc = x.rowwise() - means;
  const Vector yc = (y.array() - y.mean()).matrix();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(xc.transpose() * xc, Eigen::EigenvaluesOnly);
  const double lip = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
  const Index q = x.cols();
  auto objective = [&](const Vector& b) {
    return 0.5 * (yc - xc * b).squaredNorm() + lambda * b.lpNorm<1>();
  };
  Vector beta = Vector::Zero(q);
  Vector point = beta;
  double t = 1.0;
  double current = objective(beta);
  for (int it = 0; it < iterations; ++it) {
    const Vector grad = xc.transpose() * (xc * point - yc);
    Vector next = point - grad / lip;
    for (Index j = 0; j < q; ++j) next[j] = soft(next[j], lambda / lip);
    const double value = objective(next);
    if (value > current) {
      // Restart momentum from the last accepted iterate.
      point = beta;
      t = 1.0;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    point = next + ((t - 1.0) / t_next) * (next - beta);
    beta = next;
    t = t_next;
    current = value;
  }
  Fit fit;
  fit.beta = beta;
  fit.intercept = y.mean() - means.dot(beta);
  fit.objective = gaussian_objective(x, y, beta, fit.intercept, lambda);
  return fit;
}

Matrix orthonormal_design(Index n, Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix g(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) g(i, j) = normal(rng);
  }
  Matrix centered = g.rowwise() - g.colwise().mean();
  Eigen::HouseholderQR<Matrix> qr(centered);
  Matrix q = qr.householderQ() * Matrix::Identity(n, p);
  // Columns of Q span the centred column space, so they stay mean-zero.
  return q;
}

Vector orthonormal_constrained(const Vector& c, double gamma) {
  auto total = [&](double nu) {
    double s = 0.0;
    for (Index j = 0; j < c.size(); ++j) s += soft(c[j] - nu, gamma);
    return s;
  };
  double lo = c.minCoeff() - gamma - 1.0;
  double hi = c.maxCoeff() + gamma + 1.0;
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (total(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double nu = 0.5 * (lo + hi);
  Vector beta(c.size());
  for (Index j = 0; j < c.size(); ++j) beta[j] = soft(c[j] - nu, gamma);
  return beta;
}

double truncated_cdf_quadrature(double x, double lo, double hi) {
  using Real = boost::multiprecision::cpp_bin_float_50;
  using boost::math::quadrature::gauss_kronrod;
  auto density = [](Real t) { return exp(-t * t / 2); };
  const Real num = gauss_kronrod<Real, 61>::integrate(density, Real(lo), Real(x), 15, Real(1e-40));
  const Real den = gauss_kronrod<Real, 61>::integrate(density, Real(lo), Real(hi), 15, Real(1e-40));
  return static_cast<double>(num / den);
}

Vector contrast_of(const std::vector<PairTerm>& terms, Index p) {
  Vector beta = Vector::Zero(p);
  for (const auto& t : terms) {
    beta[t.j] += t.value;
    beta[t.k] -= t.value;
  }
  return beta;
}

double ks_critical_01(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

}  // namespace oracle

namespace oracle {

RatioScore ratio_score(const Matrix& w, const Vector& y, const std::vector<std::pair<Index, Index>>& selected,
                       std::pair<Index, Index> candidate) {
  const Index n = w.rows();
  const Index p = w.cols();
  Matrix d(n, static_cast<Index>(selected.size()) + 1);
  d.col(0).setOnes();
  for (std::size_t s = 0; s < selected.size(); ++s) {
    d.col(static_cast<Index>(s) + 1) = w.col(selected[s].first) - w.col(selected[s].second);
  }
  const Vector r = y - d * d.colPivHouseholderQr().solve(y);
  auto score = [&](Index i, Index j) {
    const Vector z = w.col(i) - w.col(j);
    const double zn = (z.array() - z.mean()).matrix().norm();
    return zn == 0.0 ? 0.0 : std::abs(r.dot(z)) / zn;
  };
  RatioScore out;
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      const double s = score(i, j);
      if (s > out.best) {
        out.best = s;
        out.argmax = {i, j};
      }
    }
  }
  out.gap = out.best - score(candidate.first, candidate.second);
  return out;
}

}  // namespace oracle
