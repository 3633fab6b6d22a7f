#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recon/covariance.hpp"
#include "recon/hierarchy.hpp"
#include "recon/linalg.hpp"
#include "recon/parallel.hpp"
#include "recon/rng.hpp"

namespace recon {

/// Parameters of the two Monte Carlo scenarios. Scenario one generates four
/// bottom series from a basic structural model (local linear trend +
/// seasonal + correlated ARMA noise); scenario two adds common white-noise
/// components that make the bottom level noisier while aggregates smooth out.
struct SimulationConfig {
  int scenario = 1;
  int t_total = 324;
  int horizon = 24;
  int season_length = 12;
  double sigma_e2 = 2.0;
  double sigma_eps2 = 0.007;
  double sigma_omega2 = 7.0;
  Matrix sigma0;  // initial-state covariance, default I4
  Matrix sigma1;  // contemporaneous ARMA innovation covariance
  double arma_coef_min = 0.5;
  double arma_coef_max = 0.7;
  double scenario2_v_var = 10.0;
  double scenario2_omega_var = 9.0;
  int replications = 1000;
  std::uint64_t seed = 0;
  int burn_in = 200;

  SimulationConfig();
  void validate() const;  // throws ValidationError
};

struct Scenario1Components {
  Matrix bottoms;      // 4 x T
  Matrix trend;        // 4 x T
  Matrix seasonal;     // 4 x T
  Matrix noise;        // 4 x T, ARMA component
  Matrix innovations;  // 4 x T, the jointly Gaussian ARMA innovations
};

struct Scenario2Components {
  Scenario1Components base;  // the z series
  Matrix bottoms;            // 4 x T, z plus the added noise
  Vector v;                  // T
  Vector omega;              // T
};

/// The seven-series, three-level hierarchy used by both scenarios
/// (Total; A, B; AA, AB, BA, BB).
Hierarchy simulation_hierarchy();

Scenario1Components generate_scenario1_components(const SimulationConfig& cfg,
                                                  Rng& rng);
Scenario2Components generate_scenario2_components(const SimulationConfig& cfg,
                                                  Rng& rng);

/// Full 7 x T panels (aggregates summed bottom-up, exactly).
Matrix generate_scenario1(const SimulationConfig& cfg, Rng& rng);
Matrix generate_scenario2(const SimulationConfig& cfg, Rng& rng);

/// Base-forecast plan per aggregation level.
///   ets        additive Holt-Winters everywhere
///   ets_arima  additive Holt-Winters for the top level, AR on first
///              differences elsewhere (deliberately misspecified: it never
///              sees the seasonal structure)
enum class BaseModelPlan { ets, ets_arima };
BaseModelPlan plan_from_string(const std::string& name);
std::string to_string(BaseModelPlan plan);

struct ReplicationRecord {
  int replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<double> cell_avg_rmse;  // aligned with ExperimentTable columns
};

struct ExperimentTable {
  std::vector<std::string> row_names;  // levels then "Average"
  std::vector<std::string> col_names;  // "base", then "<kind>_U", "<kind>_C"
  Matrix values;
};

struct ExperimentResult {
  ExperimentTable table;
  std::vector<ReplicationRecord> log;
  int failed = 0;
};

/// Replicated experiment: simulate, fit base models, reconcile under every
/// (weight kind) x (unconstrained | immutable-constrained) cell, and average
/// per-level RMSE across replications. Replication r uses seed cfg.seed + r,
/// so results are independent of the execution mode.
ExperimentResult run_experiment(const SimulationConfig& cfg,
                                BaseModelPlan plan,
                                const std::vector<WeightKind>& kinds,
                                const std::vector<std::string>& immutable,
                                ExecMode mode = ExecMode::openmp);

}  // namespace recon
