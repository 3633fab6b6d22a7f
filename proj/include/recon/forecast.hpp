#pragma once

#include <string>
#include <vector>

namespace recon {

enum class ModelKind { ses, holt_winters_additive, ar };

/// A fitted univariate base-forecast model. Smoothing parameters are chosen
/// by in-sample one-step squared error (grid search plus local refinement);
/// AR coefficients by ordinary least squares with the order picked by AIC
/// over p in {0..3}. Fitting a constant series with `ar` falls back to `ses`
/// (reflected in `kind`).
struct SeriesModel {
  ModelKind kind = ModelKind::ses;
  std::vector<double> params;  // ses: {alpha}; hw: {alpha, beta, gamma};
                               // ar: {intercept, phi_1..phi_p}
  int season_length = 0;       // holt_winters only

  double level = 0.0;
  double trend = 0.0;
  std::vector<double> seasonal;  // holt_winters state, indexed by t mod l
  std::vector<double> tail;      // ar: last p observations
  int train_length = 0;

  std::vector<double> insample_errors;  // one-step residuals after warmup
  std::vector<std::string> warnings;
};

SeriesModel fit(ModelKind kind, const std::vector<double>& series,
                int season_length = 0);

std::vector<double> predict(const SeriesModel& model, int horizon);

}  // namespace recon
