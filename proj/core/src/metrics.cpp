#include "tabmath/metrics.hpp"

#include <cmath>
#include <string>

#include "tabmath/errors.hpp"
#include "tabmath/evaluation.hpp"
#include "tabmath/lang/interpreter.hpp"

namespace tabmath {

namespace {

void require_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw LengthMismatch("predictions have length " + std::to_string(a) + ", targets " +
                         std::to_string(b));
  }
  if (a == 0) throw LengthMismatch("metrics need at least one prediction");
}

}  // namespace

double rounded_consistency(const std::vector<double>& predictions,
                           const std::vector<double>& targets) {
  require_lengths(predictions.size(), targets.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (lang::round_half_away(predictions[i]) == lang::round_half_away(targets[i])) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

RegressionMetrics regression_metrics(const std::vector<double>& predictions,
                                     const std::vector<double>& targets, double target_mean,
                                     double target_sd) {
  require_lengths(predictions.size(), targets.size());
  if (!(target_sd > 0)) throw PreconditionError("regression_metrics: target_sd must be positive");
  const std::size_t n = targets.size();
  std::vector<double> p(n), t(n);
  double tsum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = (predictions[i] - target_mean) / target_sd;
    t[i] = (targets[i] - target_mean) / target_sd;
    tsum += t[i];
  }
  const double tmean = tsum / static_cast<double>(n);
  double ss_res = 0, ss_tot = 0, abs_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = p[i] - t[i];
    ss_res += e * e;
    abs_sum += std::fabs(e);
    ss_tot += (t[i] - tmean) * (t[i] - tmean);
  }
  RegressionMetrics m;
  m.rmse = std::sqrt(ss_res / static_cast<double>(n));
  m.mae = abs_sum / static_cast<double>(n);
  if (ss_tot > 0) m.r2 = 1.0 - ss_res / ss_tot;
  return m;
}

MetricSet score_predictions(const std::vector<double>& predictions,
                            const std::vector<double>& query_targets,
                            const std::vector<double>& context_targets) {
  if (context_targets.empty()) throw EmptyContext("no context targets to standardize with");
  const MeanSd ms = mean_sd(context_targets);
  const double sd = ms.sd > 0 ? ms.sd : 1.0;
  MetricSet out;
  out.rounded_consistency = rounded_consistency(predictions, query_targets);
  const RegressionMetrics rm = regression_metrics(predictions, query_targets, ms.mean, sd);
  out.r2 = rm.r2;
  out.rmse = rm.rmse;
  out.mae = rm.mae;
  out.n_query = query_targets.size();
  return out;
}

std::pair<double, double> confidence_interval(double mean, double sd, std::size_t n) {
  const double half = 1.96 * sd / std::sqrt(static_cast<double>(n));
  return {mean - half, mean + half};
}

Summary summarize(const std::vector<double>& values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  const MeanSd ms = mean_sd(values);
  s.mean = ms.mean;
  s.sd = ms.sd;
  s.median = median_of(values);
  if (s.n >= 2) {
    const auto [lo, hi] = confidence_interval(s.mean, s.sd, s.n);
    s.ci_lo = lo;
    s.ci_hi = hi;
  }
  return s;
}

}  // namespace tabmath
