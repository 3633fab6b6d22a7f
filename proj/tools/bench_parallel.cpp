// Timing comparison between the serial reference loops and the OpenMP
// kernels for the two parallel surfaces: horizon columns in a single
// reconciliation and replications in a Monte Carlo experiment. Also checks
// that both modes produce identical output.

#include <chrono>
#include <cstdio>
#include <string>

#include <omp.h>

#include "recon/hierarchy.hpp"
#include "recon/reconcile.hpp"
#include "recon/rng.hpp"
#include "recon/simulate.hpp"

using namespace recon;

namespace {

double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

Hierarchy bench_hierarchy() {
  GroupSpec spec;
  spec.dimensions = {{"d0", {}}, {"d1", {}}, {"d2", {}}};
  for (int i = 0; i < 4; ++i) spec.dimensions[0].values.push_back("a" + std::to_string(i));
  for (int i = 0; i < 5; ++i) spec.dimensions[1].values.push_back("b" + std::to_string(i));
  for (int i = 0; i < 6; ++i) spec.dimensions[2].values.push_back("c" + std::to_string(i));
  spec.aggregates = {{}, {"d0"}, {"d1"}, {"d2"}, {"d0", "d1"}, {"d0", "d2"}, {"d1", "d2"}};
  for (const auto& a : spec.dimensions[0].values)
    for (const auto& b : spec.dimensions[1].values)
      for (const auto& c : spec.dimensions[2].values)
        spec.bottom_keys.push_back({a, b, c});
  return build_from_groups(spec);
}

void report(const char* name, double serial_ms, double openmp_ms, bool equal) {
  std::printf("%-28s serial %9.1f ms   openmp %9.1f ms   speedup %5.2fx   identical: %s\n",
              name, serial_ms, openmp_ms, serial_ms / openmp_ms,
              equal ? "yes" : "NO");
}

}  // namespace

int main() {
  std::printf("threads available: %d\n", omp_get_max_threads());

  {
    const Hierarchy h = bench_hierarchy();
    Rng rng(7);
    const int horizons = 256;
    ForecastPanel panel{h.labels, Matrix(h.n(), horizons)};
    for (int i = 0; i < h.n(); ++i)
      for (int c = 0; c < horizons; ++c)
        panel.base(i, c) = rng.normal() * 4.0;  // negatives activate bounds
    const WeightMatrix wm = estimate(WeightKind::wls_s, h);
    const std::vector<std::string> immutable{"Total", "a0", "b1/c2"};

    {  // warmup
      ForecastPanel small{h.labels, panel.base.leftCols(8)};
      reconcile_immutable(h, immutable, wm, small, true, ExecMode::serial);
    }

    auto t0 = std::chrono::steady_clock::now();
    const auto serial =
        reconcile_immutable(h, immutable, wm, panel, true, ExecMode::serial);
    const double serial_ms = elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel =
        reconcile_immutable(h, immutable, wm, panel, true, ExecMode::openmp);
    const double openmp_ms = elapsed_ms(t0);

    report("reconcile (nonneg, H=256)", serial_ms, openmp_ms,
           (serial.reconciled.array() == parallel.reconciled.array()).all());
  }

  {
    SimulationConfig cfg;
    cfg.scenario = 2;
    cfg.replications = 48;
    cfg.seed = 99;
    const std::vector<WeightKind> kinds{WeightKind::ols, WeightKind::wls_v};

    auto t0 = std::chrono::steady_clock::now();
    const auto serial = run_experiment(cfg, BaseModelPlan::ets, kinds,
                                       {"Total"}, ExecMode::serial);
    const double serial_ms = elapsed_ms(t0);

    t0 = std::chrono::steady_clock::now();
    const auto parallel = run_experiment(cfg, BaseModelPlan::ets, kinds,
                                         {"Total"}, ExecMode::openmp);
    const double openmp_ms = elapsed_ms(t0);

    report("experiment (48 reps)", serial_ms, openmp_ms,
           (serial.table.values.array() == parallel.table.values.array()).all());
  }
  return 0;
}
