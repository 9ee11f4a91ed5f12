#include <lrlasso/stats.hpp>

#include <boost/math/distributions/fisher_f.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lrlasso::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double mills_ratio(double x) {
  if (x < 0.0) throw std::domain_error("mills_ratio: x must be nonnegative");
  if (x < 5.0) {
    const double density = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return normal_upper_tail(x) / density;
  }
  // Continued fraction 1 / (x + 1 / (x + 2 / (x + 3 / (x + ...)))), evaluated bottom-up.
  double tail = x;
  for (int k = 200; k >= 1; --k) tail = x + k / tail;
  return 1.0 / tail;
}

double f_upper_tail(double f, double df1, double df2) {
  if (!(f > 0.0)) return 1.0;
  boost::math::fisher_f dist(df1, df2);
  return boost::math::cdf(boost::math::complement(dist, f));
}

double ks_statistic_uniform(std::span<const double> sample) {
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double u = std::clamp(sorted[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - u, u - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double statistic, std::size_t n) {
  if (n == 0) return 1.0;
  const double rn = std::sqrt(static_cast<double>(n));
  const double lambda = (rn + 0.12 + 0.11 / rn) * statistic;
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // P(K <= lambda) through the theta-function form, accurate for small lambda.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double cdf = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double m = 2.0 * k - 1.0;
      cdf += std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
    }
    cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-300) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

double sample_sd(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

double median(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  return sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
}

}  // namespace lrlasso::stats
