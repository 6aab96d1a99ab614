#ifndef PHI4_STATS_HPP
#define PHI4_STATS_HPP

#include <cstddef>
#include <vector>

namespace phi4 {

/// Welford accumulator; merge() is associative so replica partials can be
/// combined in any order.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;
  double stderr_of_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

Estimate mean_estimate(const std::vector<double>& xs);
/// Mean with the batch-means standard error (for correlated chains).
Estimate batch_means(const std::vector<double>& xs, int batches = 20);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int dof = 0;
};

/// Ordinary least squares, optionally weighted by 1/sigma^2.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& sigma = {});

/// Two-sided Student t quantile: P(|T| <= q) = level.
double student_t_quantile(int dof, double level);

double quantile(std::vector<double> xs, double q);
double median(std::vector<double> xs);

}  // namespace phi4

#endif  // PHI4_STATS_HPP
