#include "recon/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "recon/errors.hpp"
#include "recon/forecast.hpp"
#include "recon/metrics.hpp"
#include "recon/reconcile.hpp"

namespace recon {

namespace {

Matrix default_arma_covariance() {
  Matrix s(4, 4);
  s << 3, -2, 0, 0,
      -2, 3, 0, 0,
       0, 0, 3, -1,
       0, 0, -1, 3;
  return s;
}

Matrix chol_or_zero(const Matrix& sigma) {
  if (sigma.cwiseAbs().maxCoeff() == 0.0)
    return Matrix::Zero(sigma.rows(), sigma.cols());
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw ValidationError("simulation covariance is not positive definite");
  return llt.matrixL();
}

struct ArmaSpec {
  double phi = 0.0;
  double theta = 0.0;
};

}  // namespace

SimulationConfig::SimulationConfig()
    : sigma0(Matrix::Identity(4, 4)), sigma1(default_arma_covariance()) {}

void SimulationConfig::validate() const {
  if (scenario != 1 && scenario != 2)
    throw ValidationError("scenario must be one or two");
  if (sigma_e2 < 0 || sigma_eps2 < 0 || sigma_omega2 < 0 ||
      scenario2_v_var < 0 || scenario2_omega_var < 0)
    throw ValidationError("variances must be nonnegative");
  if (season_length < 2) throw ValidationError("season_length must be >= 2");
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  if (t_total <= horizon + 2 * season_length)
    throw ValidationError("t_total must exceed horizon + 2*season_length");
  if (sigma0.rows() != 4 || sigma0.cols() != 4 || sigma1.rows() != 4 ||
      sigma1.cols() != 4)
    throw ValidationError("sigma0 and sigma1 must be 4x4");
}

Hierarchy simulation_hierarchy() {
  return build_from_edges({{"Total", "A"},
                           {"Total", "B"},
                           {"A", "AA"},
                           {"A", "AB"},
                           {"B", "BA"},
                           {"B", "BB"}});
}

Scenario1Components generate_scenario1_components(const SimulationConfig& cfg,
                                                  Rng& rng) {
  cfg.validate();
  const int t_total = cfg.t_total;
  const int l = cfg.season_length;

  // ARMA(p,q) orders with p,q in {0,1}, equal probability, drawn
  // independently per series; coefficients uniform on the configured range.
  // Both coefficients are always drawn to keep the stream length fixed.
  std::vector<ArmaSpec> arma(4);
  for (int i = 0; i < 4; ++i) {
    const bool has_ar = rng.uniform() < 0.5;
    const bool has_ma = rng.uniform() < 0.5;
    const double phi = rng.uniform(cfg.arma_coef_min, cfg.arma_coef_max);
    const double theta = rng.uniform(cfg.arma_coef_min, cfg.arma_coef_max);
    arma[i].phi = has_ar ? phi : 0.0;
    arma[i].theta = has_ma ? theta : 0.0;
  }

  const Matrix l0 = chol_or_zero(cfg.sigma0);
  const Matrix l1 = chol_or_zero(cfg.sigma1);

  // Initial states mu_0, v_0, s_0..s_{l-1} ~ N(0, sigma0).
  Vector mu = l0 * rng.normal_vector(4);
  Vector slope = l0 * rng.normal_vector(4);
  Matrix seasonal_init(4, l);
  for (int j = 0; j < l; ++j) seasonal_init.col(j) = l0 * rng.normal_vector(4);

  // ARMA noise with burn-in.
  Matrix eta(4, t_total), innov(4, t_total);
  {
    Vector eta_prev = Vector::Zero(4);
    Vector a_prev = Vector::Zero(4);
    for (int t = -cfg.burn_in; t < t_total; ++t) {
      const Vector a = l1 * rng.normal_vector(4);
      Vector e(4);
      for (int i = 0; i < 4; ++i)
        e(i) = arma[i].phi * eta_prev(i) + a(i) + arma[i].theta * a_prev(i);
      if (t >= 0) {
        eta.col(t) = e;
        innov.col(t) = a;
      }
      eta_prev = e;
      a_prev = a;
    }
  }

  const double sd_e = std::sqrt(cfg.sigma_e2);
  const double sd_eps = std::sqrt(cfg.sigma_eps2);
  const double sd_omega = std::sqrt(cfg.sigma_omega2);

  Matrix trend(4, t_total), seasonal(4, t_total), bottoms(4, t_total);
  Matrix s_hist = seasonal_init;  // columns: the last l seasonal states
  for (int t = 0; t < t_total; ++t) {
    if (t == 0) {
      trend.col(0) = mu;
      seasonal.col(0) = s_hist.col(0);
    } else {
      const Vector eps = sd_eps * rng.normal_vector(4);
      const Vector e = sd_e * rng.normal_vector(4);
      slope += eps;
      mu += slope + e;
      trend.col(t) = mu;
      if (t < l) {
        seasonal.col(t) = s_hist.col(t);
      } else {
        const Vector omega = sd_omega * rng.normal_vector(4);
        Vector s = omega;
        for (int i = 1; i <= l - 1; ++i) s -= seasonal.col(t - i);
        seasonal.col(t) = s;
      }
    }
    bottoms.col(t) = trend.col(t) + seasonal.col(t) + eta.col(t);
  }

  Scenario1Components out;
  out.bottoms = std::move(bottoms);
  out.trend = std::move(trend);
  out.seasonal = std::move(seasonal);
  out.noise = std::move(eta);
  out.innovations = std::move(innov);
  return out;
}

Scenario2Components generate_scenario2_components(const SimulationConfig& cfg,
                                                  Rng& rng) {
  Scenario2Components out;
  out.base = generate_scenario1_components(cfg, rng);
  const int t_total = cfg.t_total;
  const double sd_v = std::sqrt(cfg.scenario2_v_var);
  const double sd_w = std::sqrt(cfg.scenario2_omega_var);
  out.v.resize(t_total);
  out.omega.resize(t_total);
  for (int t = 0; t < t_total; ++t) {
    out.v(t) = sd_v * rng.normal();
    out.omega(t) = sd_w * rng.normal();
  }
  out.bottoms.resize(4, t_total);
  // y_AA = z_AA - v - 0.5w ; y_AB = z_AB + v - 0.5w ;
  // y_BA = z_BA - v + 0.5w ; y_BB = z_BB + v - 0.5w
  for (int t = 0; t < t_total; ++t) {
    const double v = out.v(t);
    const double w = out.omega(t);
    out.bottoms(0, t) = out.base.bottoms(0, t) - v - 0.5 * w;
    out.bottoms(1, t) = out.base.bottoms(1, t) + v - 0.5 * w;
    out.bottoms(2, t) = out.base.bottoms(2, t) - v + 0.5 * w;
    out.bottoms(3, t) = out.base.bottoms(3, t) + v - 0.5 * w;
  }
  return out;
}

namespace {

Matrix panel_from_bottoms(const Matrix& bottoms) {
  const int t_total = static_cast<int>(bottoms.cols());
  Matrix panel(7, t_total);
  for (int t = 0; t < t_total; ++t) {
    const double a = bottoms(0, t) + bottoms(1, t);
    const double b = bottoms(2, t) + bottoms(3, t);
    panel(0, t) = a + b;
    panel(1, t) = a;
    panel(2, t) = b;
    for (int i = 0; i < 4; ++i) panel(3 + i, t) = bottoms(i, t);
  }
  return panel;
}

}  // namespace

Matrix generate_scenario1(const SimulationConfig& cfg, Rng& rng) {
  return panel_from_bottoms(generate_scenario1_components(cfg, rng).bottoms);
}

Matrix generate_scenario2(const SimulationConfig& cfg, Rng& rng) {
  return panel_from_bottoms(generate_scenario2_components(cfg, rng).bottoms);
}

BaseModelPlan plan_from_string(const std::string& name) {
  if (name == "ets") return BaseModelPlan::ets;
  if (name == "ets_arima") return BaseModelPlan::ets_arima;
  throw ValidationError("unknown plan '" + name + "' (use ets or ets_arima)");
}

std::string to_string(BaseModelPlan plan) {
  return plan == BaseModelPlan::ets ? "ets" : "ets_arima";
}

namespace {

struct BaseForecast {
  std::vector<double> forecasts;
  std::vector<double> errors;  // one-step in-sample residuals
};

// AR on first-differenced data, integrated back to levels. Ignoring the
// seasonal structure keeps the lower-level models genuinely misspecified,
// which is the point of the ets_arima plan.
BaseForecast first_diff_ar(const std::vector<double>& train, int horizon) {
  const int t_train = static_cast<int>(train.size());
  std::vector<double> diff(t_train - 1);
  for (int t = 1; t < t_train; ++t) diff[t - 1] = train[t] - train[t - 1];

  const SeriesModel model = fit(ModelKind::ar, diff);
  const std::vector<double> dhat = predict(model, horizon);

  BaseForecast out;
  out.errors = model.insample_errors;
  out.forecasts.resize(horizon);
  double level = train[t_train - 1];
  for (int h = 0; h < horizon; ++h) {
    level += dhat[h];
    out.forecasts[h] = level;
  }
  return out;
}

BaseForecast base_forecast(BaseModelPlan plan, int level,
                           const std::vector<double>& train, int l,
                           int horizon) {
  if (plan == BaseModelPlan::ets || level == 0) {
    const SeriesModel model = fit(ModelKind::holt_winters_additive, train, l);
    return {predict(model, horizon), model.insample_errors};
  }
  return first_diff_ar(train, horizon);
}

struct ReplicationOutcome {
  bool ok = false;
  std::string error;
  // per column (base + kind x {U,C}) a vector of per-level RMSE
  std::vector<std::vector<double>> level_rmse;
};

}  // namespace

ExperimentResult run_experiment(const SimulationConfig& cfg,
                                BaseModelPlan plan,
                                const std::vector<WeightKind>& kinds,
                                const std::vector<std::string>& immutable,
                                ExecMode mode) {
  cfg.validate();
  if (cfg.replications < 1)
    throw ValidationError("replications must be >= 1");
  if (kinds.empty()) throw ValidationError("no weight kinds requested");

  const Hierarchy h = simulation_hierarchy();
  const int n = h.n();
  const int horizon = cfg.horizon;
  const int t_train = cfg.t_total - horizon;

  std::vector<int> level_ids;
  {
    std::set<int> distinct(h.levels.begin(), h.levels.end());
    level_ids.assign(distinct.begin(), distinct.end());
  }
  const int n_levels = static_cast<int>(level_ids.size());

  std::vector<std::string> col_names{"base"};
  for (WeightKind kind : kinds) {
    col_names.push_back(to_string(kind) + "_U");
    col_names.push_back(to_string(kind) + "_C");
  }
  const int n_cols = static_cast<int>(col_names.size());

  auto level_rmse_of = [&](const Matrix& forecast, const Matrix& actual) {
    std::vector<double> per_series(n);
    for (int i = 0; i < n; ++i) {
      std::vector<double> a(actual.cols()), f(forecast.cols());
      for (int c = 0; c < actual.cols(); ++c) {
        a[c] = actual(i, c);
        f[c] = forecast(i, c);
      }
      per_series[i] = rmse(a, f);
    }
    std::vector<double> out(n_levels, 0.0);
    for (int li = 0; li < n_levels; ++li) {
      double sum = 0.0;
      int count = 0;
      for (int i = 0; i < n; ++i)
        if (h.levels[i] == level_ids[li]) {
          sum += per_series[i];
          ++count;
        }
      out[li] = sum / count;
    }
    return out;
  };

  std::vector<ReplicationOutcome> outcomes(cfg.replications);

  for_each_index(cfg.replications, mode, [&](int r) {
    ReplicationOutcome& outcome = outcomes[r];
    try {
      Rng rng(cfg.seed + static_cast<std::uint64_t>(r));
      const Matrix panel = cfg.scenario == 1 ? generate_scenario1(cfg, rng)
                                             : generate_scenario2(cfg, rng);

      Matrix base(n, horizon);
      std::vector<std::vector<double>> errors(n);
      size_t max_err = 0;
      for (int i = 0; i < n; ++i) {
        std::vector<double> train(t_train);
        for (int t = 0; t < t_train; ++t) train[t] = panel(i, t);
        BaseForecast bf = base_forecast(plan, h.levels[i], train,
                                        cfg.season_length, horizon);
        for (int c = 0; c < horizon; ++c) base(i, c) = bf.forecasts[c];
        errors[i] = std::move(bf.errors);
        max_err = std::max(max_err, errors[i].size());
      }

      // Align residual histories at the most recent observation; shorter
      // histories get leading NaNs (missing).
      ErrorSample sample;
      sample.errors.setConstant(static_cast<int>(max_err), n,
                                std::numeric_limits<double>::quiet_NaN());
      for (int i = 0; i < n; ++i) {
        const size_t len = errors[i].size();
        for (size_t j = 0; j < len; ++j)
          sample.errors(static_cast<int>(max_err - len + j), i) = errors[i][j];
      }

      const Matrix actual = panel.rightCols(horizon);
      ForecastPanel fpanel{h.labels, base};

      outcome.level_rmse.resize(n_cols);
      outcome.level_rmse[0] = level_rmse_of(base, actual);
      int col = 1;
      for (WeightKind kind : kinds) {
        const WeightMatrix wm = estimate(kind, h, &sample);
        const ReconciliationResult unconstrained =
            reconcile_unconstrained(h, wm, fpanel, ExecMode::serial);
        outcome.level_rmse[col++] =
            level_rmse_of(unconstrained.reconciled, actual);
        const ReconciliationResult constrained = reconcile_immutable(
            h, immutable, wm, fpanel, false, ExecMode::serial);
        outcome.level_rmse[col++] =
            level_rmse_of(constrained.reconciled, actual);
      }
      outcome.ok = true;
    } catch (const std::exception& e) {
      outcome.ok = false;
      outcome.error = e.what();
    }
  });

  ExperimentResult result;
  result.table.col_names = col_names;
  for (int li = 0; li < n_levels; ++li)
    result.table.row_names.push_back(std::to_string(level_ids[li]));
  result.table.row_names.push_back("Average");
  result.table.values = Matrix::Zero(n_levels + 1, n_cols);

  int ok_count = 0;
  for (int r = 0; r < cfg.replications; ++r) {
    ReplicationRecord record;
    record.replication = r;
    record.seed = cfg.seed + static_cast<std::uint64_t>(r);
    record.ok = outcomes[r].ok;
    record.error = outcomes[r].error;
    if (outcomes[r].ok) {
      ++ok_count;
      record.cell_avg_rmse.resize(n_cols, 0.0);
      for (int c = 0; c < n_cols; ++c) {
        double avg = 0.0;
        for (int li = 0; li < n_levels; ++li) {
          result.table.values(li, c) += outcomes[r].level_rmse[c][li];
          avg += outcomes[r].level_rmse[c][li];
        }
        record.cell_avg_rmse[c] = avg / n_levels;
      }
    } else {
      ++result.failed;
    }
    result.log.push_back(std::move(record));
  }
  if (ok_count == 0)
    throw ValidationError("all replications failed: " + outcomes[0].error);

  for (int li = 0; li < n_levels; ++li)
    for (int c = 0; c < n_cols; ++c) result.table.values(li, c) /= ok_count;
  for (int c = 0; c < n_cols; ++c) {
    double avg = 0.0;
    for (int li = 0; li < n_levels; ++li) avg += result.table.values(li, c);
    result.table.values(n_levels, c) = avg / n_levels;
  }
  return result;
}

}  // namespace recon
