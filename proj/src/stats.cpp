#include "phi4/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace phi4 {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& other) {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double n = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.n_) / n;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / n;
  n_ += other.n_;
}

double RunningStats::variance() const {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::stderr_of_mean() const {
  return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Estimate mean_estimate(const std::vector<double>& xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return {s.mean(), s.stderr_of_mean()};
}

Estimate batch_means(const std::vector<double>& xs, int batches) {
  if (batches < 2) throw std::invalid_argument("batch means needs at least two batches");
  const std::size_t size = xs.size() / static_cast<std::size_t>(batches);
  if (size == 0) throw std::invalid_argument("too few samples for the requested batches");
  RunningStats s;
  for (int b = 0; b < batches; ++b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < size; ++k) sum += xs[b * size + k];
    s.add(sum / static_cast<double>(size));
  }
  return {s.mean(), s.stderr_of_mean()};
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& sigma) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("linear fit needs two matched series");
  if (!sigma.empty() && sigma.size() != n) throw std::invalid_argument("sigma length mismatch");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[k] * sigma[k]);
    sw += w;
    sx += w * x[k];
    sy += w * y[k];
  }
  const double xbar = sx / sw;
  const double ybar = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[k] * sigma[k]);
    sxx += w * (x[k] - xbar) * (x[k] - xbar);
    sxy += w * (x[k] - xbar) * (y[k] - ybar);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear fit needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  fit.dof = static_cast<int>(n) - 2;
  if (!sigma.empty()) {
    fit.slope_stderr = std::sqrt(1.0 / sxx);
  } else if (fit.dof > 0) {
    double rss = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = y[k] - fit.intercept - fit.slope * x[k];
      rss += r * r;
    }
    fit.slope_stderr = std::sqrt(rss / fit.dof / sxx);
  } else {
    fit.slope_stderr = std::numeric_limits<double>::infinity();
  }
  return fit;
}

double student_t_quantile(int dof, double level) {
  if (dof < 1) return std::numeric_limits<double>::infinity();
  boost::math::students_t dist(dof);
  return boost::math::quantile(dist, 0.5 + 0.5 * level);
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = q * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

}  // namespace phi4
