#include "recon/metrics.hpp"

#include <cmath>
#include <limits>

#include "recon/errors.hpp"

namespace recon {

double rmse(const std::vector<double>& actual,
            const std::vector<double>& forecast) {
  if (actual.size() != forecast.size())
    throw ValidationError("rmse: length mismatch");
  if (actual.empty()) throw ValidationError("rmse: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < actual.size(); ++i) {
    const double e = actual[i] - forecast[i];
    acc += e * e;
  }
  return std::sqrt(acc / actual.size());
}

double mase(const std::vector<double>& actual,
            const std::vector<double>& forecast,
            const std::vector<double>& insample, int m) {
  if (actual.size() != forecast.size())
    throw ValidationError("mase: length mismatch");
  if (actual.empty()) throw ValidationError("mase: empty input");
  if (m < 1) throw ValidationError("mase: season must be >= 1");
  if (static_cast<int>(insample.size()) <= m)
    throw ValidationError("mase: in-sample series shorter than season");

  double denom = 0.0;
  for (size_t t = m; t < insample.size(); ++t)
    denom += std::abs(insample[t] - insample[t - m]);
  denom /= static_cast<double>(insample.size() - m);

  double mae = 0.0;
  for (size_t i = 0; i < actual.size(); ++i)
    mae += std::abs(actual[i] - forecast[i]);
  mae /= actual.size();

  if (denom == 0.0) {
    if (mae == 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  return mae / denom;
}

AccuracyReport summarize_by_level(const std::vector<std::string>& labels,
                                  const std::vector<int>& levels,
                                  const std::vector<double>& values) {
  if (labels.size() != levels.size() || labels.size() != values.size())
    throw ValidationError("summarize_by_level: length mismatch");
  AccuracyReport report;
  std::map<int, std::pair<double, int>> acc;  // level -> (sum, count)
  for (size_t i = 0; i < labels.size(); ++i) {
    report.per_series[labels[i]] = values[i];
    if (!std::isfinite(values[i])) {
      ++report.excluded;
      continue;
    }
    auto& [sum, count] = acc[levels[i]];
    sum += values[i];
    ++count;
  }
  double total = 0.0;
  int level_count = 0;
  for (const auto& [level, sc] : acc) {
    if (sc.second == 0) continue;
    const double mean = sc.first / sc.second;
    report.per_level[level] = mean;
    total += mean;
    ++level_count;
  }
  report.overall = level_count > 0 ? total / level_count : 0.0;
  return report;
}

}  // namespace recon
