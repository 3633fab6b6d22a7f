#pragma once

#include <map>
#include <string>
#include <vector>

namespace recon {

double rmse(const std::vector<double>& actual,
            const std::vector<double>& forecast);

/// Mean absolute scaled error: out-of-sample MAE divided by the in-sample
/// seasonal-naive MAE with lag m. Returns +inf when the scaling denominator
/// is zero (constant in-sample series).
double mase(const std::vector<double>& actual,
            const std::vector<double>& forecast,
            const std::vector<double>& insample, int m = 1);

struct AccuracyReport {
  std::map<std::string, double> per_series;
  std::map<int, double> per_level;  // arithmetic mean of the level's series
  double overall = 0.0;             // mean of the per-level averages
  int excluded = 0;                 // non-finite series values left out
};

AccuracyReport summarize_by_level(const std::vector<std::string>& labels,
                                  const std::vector<int>& levels,
                                  const std::vector<double>& values);

}  // namespace recon
