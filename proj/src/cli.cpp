#include "recon/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "recon/errors.hpp"
#include "recon/io.hpp"
#include "recon/reconcile.hpp"
#include "recon/simulate.hpp"
#include "recon/solver.hpp"

namespace recon::cli {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

int scenario_number(const std::string& s) {
  if (s == "one" || s == "1") return 1;
  if (s == "two" || s == "2") return 2;
  throw ValidationError("unknown scenario '" + s + "' (use one or two)");
}

}  // namespace

std::vector<std::string> parse_label_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : csv) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  // drop empty entries (an empty --immutable means "none")
  std::vector<std::string> filtered;
  for (auto& label : out)
    if (!label.empty()) filtered.push_back(std::move(label));
  return filtered;
}

int cmd_reconcile(const RunConfig& cfg) {
  if (cfg.hierarchy_path.empty() || cfg.forecasts_path.empty())
    throw ValidationError("reconcile requires --hierarchy and --forecasts");
  if (cfg.output_path.empty())
    throw ValidationError("reconcile requires --out");

  const Hierarchy h = load_hierarchy_file(cfg.hierarchy_path);
  const ForecastPanel panel = load_forecast_csv(cfg.forecasts_path, h);

  const bool needs_errors = cfg.weights == WeightKind::wls_v ||
                            cfg.weights == WeightKind::mint_shrink;
  ErrorSample sample;
  if (needs_errors) {
    if (cfg.errors_path.empty())
      throw ValidationError("--errors is required with --weights " +
                            to_string(cfg.weights));
    sample = load_errors_csv(cfg.errors_path, h);
  }
  const WeightMatrix wm =
      estimate(cfg.weights, h, needs_errors ? &sample : nullptr);

  ReconciliationResult result;
  if (cfg.immutable.empty() && !cfg.nonneg) {
    result = reconcile_unconstrained(h, wm, panel);
  } else {
    result = reconcile_immutable(h, cfg.immutable, wm, panel, cfg.nonneg);
  }

  for (const auto& w : wm.warnings) log_warning(w);
  for (const auto& w : result.diagnostics.warnings) log_warning(w);

  {
    std::string basis;
    for (const auto& label : result.diagnostics.basis_labels)
      basis += (basis.empty() ? "" : ", ") + label;
    log_debug("basis: " + basis);
    if (wm.kind == WeightKind::mint_shrink)
      log_debug("shrink lambda: " + format_number(wm.shrink_lambda));
    int active = 0;
    for (const auto& a : result.diagnostics.active_sets)
      if (!a.empty()) ++active;
    if (cfg.nonneg)
      log_debug("horizons with active bounds: " + std::to_string(active));
  }

  write_forecast_csv(cfg.output_path, h.labels, result.reconciled);
  write_diagnostics_json(cfg.output_path + ".diag.json", result, wm, h);
  log_info("reconciled " + std::to_string(h.n()) + " series x " +
           std::to_string(result.reconciled.cols()) + " horizons -> " +
           cfg.output_path);
  return 0;
}

int cmd_validate_basis(const RunConfig& cfg) {
  if (cfg.hierarchy_path.empty())
    throw ValidationError("validate-basis requires --hierarchy");
  if (cfg.basis_candidate.empty())
    throw ValidationError("validate-basis requires a candidate label list");

  const Hierarchy h = load_hierarchy_file(cfg.hierarchy_path);
  const std::vector<int> candidate = h.indices_of(cfg.basis_candidate);
  const BasisCheck check = check_basis(h, candidate);
  if (check.valid) {
    std::cout << "valid\n";
    return 0;
  }
  std::cout << "invalid: " << check.reason << "\n";
  return 1;
}

int cmd_simulate(const RunConfig& cfg) {
  if (cfg.output_path.empty())
    throw ValidationError("simulate requires --out");
  if (cfg.replications < 1)
    throw ValidationError("--replications must be >= 1");

  SimulationConfig sim;
  sim.scenario = scenario_number(cfg.scenario);
  sim.replications = cfg.replications;
  sim.seed = cfg.seed;
  const BaseModelPlan plan = plan_from_string(cfg.plan);

  const std::vector<WeightKind> kinds{WeightKind::ols, WeightKind::wls_s,
                                      WeightKind::wls_v,
                                      WeightKind::mint_shrink};
  std::vector<std::string> immutable = cfg.immutable;
  if (immutable.empty()) immutable = {"Total"};

  const ExperimentResult result =
      run_experiment(sim, plan, kinds, immutable);
  write_table_csv(cfg.output_path, result.table);
  write_run_log_jsonl(cfg.output_path + ".log.jsonl", result.log,
                      result.table.col_names);
  log_info("simulate: " + std::to_string(cfg.replications) +
           " replications (" + std::to_string(result.failed) +
           " failed) -> " + cfg.output_path);
  return 0;
}

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"hierarchical forecast reconciliation with immutable series"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string immutable_csv;
  std::string candidate_csv;

  auto* rec = app.add_subcommand("reconcile",
                                 "reconcile base forecasts from files");
  rec->add_option("--hierarchy", cfg.hierarchy_path, "hierarchy spec file")
      ->required();
  rec->add_option("--forecasts", cfg.forecasts_path, "base forecast CSV")
      ->required();
  rec->add_option("--errors", cfg.errors_path, "error history CSV");
  std::string weights_name = "ols";
  rec->add_option("--weights", weights_name,
                  "ols | wls_s | wls_v | mint_shrink");
  rec->add_option("--immutable", immutable_csv,
                  "comma-separated labels kept fixed");
  rec->add_flag("--nonneg", cfg.nonneg, "enforce non-negative basis forecasts");
  rec->add_option("--out", cfg.output_path, "output CSV path")->required();

  auto* val = app.add_subcommand("validate-basis",
                                 "check whether series can form a basis");
  val->add_option("--hierarchy", cfg.hierarchy_path, "hierarchy spec file")
      ->required();
  val->add_option("candidate", candidate_csv,
                  "comma-separated candidate labels")
      ->required();

  auto* sim = app.add_subcommand("simulate", "run a Monte Carlo experiment");
  sim->add_option("--scenario", cfg.scenario, "one | two");
  sim->add_option("--replications", cfg.replications, "replication count")
      ->required();
  sim->add_option("--seed", cfg.seed, "base random seed");
  sim->add_option("--plan", cfg.plan, "ets | ets_arima");
  sim->add_option("--immutable", immutable_csv,
                  "immutable labels (default Total)");
  sim->add_option("--out", cfg.output_path, "results CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.immutable = parse_label_list(immutable_csv);
    if (rec->parsed()) {
      cfg.command = "reconcile";
      cfg.weights = weight_kind_from_string(weights_name);
      return cmd_reconcile(cfg);
    }
    if (val->parsed()) {
      cfg.command = "validate-basis";
      cfg.basis_candidate = parse_label_list(candidate_csv);
      return cmd_validate_basis(cfg);
    }
    cfg.command = "simulate";
    return cmd_simulate(cfg);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace recon::cli
