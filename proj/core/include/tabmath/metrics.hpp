#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace tabmath {

/// Fraction of i with round(pred_i) == round(target_i), rounding half away
/// from zero. Throws LengthMismatch for unequal or empty inputs.
double rounded_consistency(const std::vector<double>& predictions,
                           const std::vector<double>& targets);

struct RegressionMetrics {
  std::optional<double> r2;  // null when the query targets have no variance
  double rmse = 0;
  double mae = 0;
};

/// Metrics on the standardized scale defined by (target_mean, target_sd).
/// r2 baselines on the query-set mean. Throws LengthMismatch, and
/// PreconditionError unless target_sd > 0.
RegressionMetrics regression_metrics(const std::vector<double>& predictions,
                                     const std::vector<double>& targets, double target_mean,
                                     double target_sd);

struct MetricSet {
  double rounded_consistency = 0;
  std::optional<double> r2;
  double rmse = 0;
  double mae = 0;
  std::size_t n_query = 0;
};

/// Scores one cell. The standardization comes from the context targets
/// (population mean and sd); a zero context sd falls back to sd = 1.
MetricSet score_predictions(const std::vector<double>& predictions,
                            const std::vector<double>& query_targets,
                            const std::vector<double>& context_targets);

struct Summary {
  std::size_t n = 0;
  double mean = 0;
  double median = 0;
  double sd = 0;  // population
  std::optional<double> ci_lo;
  std::optional<double> ci_hi;
};

/// mean, median, population sd and the normal-approximation 95% interval
/// mean ± 1.96·sd/√n (null below two values). Empty input gives n = 0.
Summary summarize(const std::vector<double>& values);

/// Interval from already-known statistics.
std::pair<double, double> confidence_interval(double mean, double sd, std::size_t n);

}  // namespace tabmath
