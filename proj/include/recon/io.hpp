#pragma once

#include <string>
#include <vector>

#include "recon/covariance.hpp"
#include "recon/hierarchy.hpp"
#include "recon/reconcile.hpp"
#include "recon/simulate.hpp"

namespace recon {

/// Hierarchy spec file: either an edge list
///
///   [edges]
///   Total,A
///   Total,B
///
/// or a group spec
///
///   [dimensions]
///   Access:Desktop|Mobile app|Mobile web
///   [bottom]
///   Desktop,...
///   [aggregates]
///   Access+Agent
///
/// Inside [aggregates] an empty line denotes the grand total (the empty
/// dimension subset). Labels may not contain commas.
Hierarchy load_hierarchy_file(const std::string& path);
Hierarchy parse_hierarchy_spec(const std::string& text);

/// Forecast CSV: header `series,h1,...,hH`, one row per series. Rows are
/// joined to the hierarchy by label, so file order is free.
ForecastPanel load_forecast_csv(const std::string& path, const Hierarchy& h);

/// Error history CSV: header `series,t1,...`, one row per series; empty
/// cells are missing observations.
ErrorSample load_errors_csv(const std::string& path, const Hierarchy& h);

void write_forecast_csv(const std::string& path,
                        const std::vector<std::string>& labels,
                        const Matrix& values);

void write_table_csv(const std::string& path, const ExperimentTable& table);

void write_run_log_jsonl(const std::string& path,
                         const std::vector<ReplicationRecord>& log,
                         const std::vector<std::string>& col_names);

void write_diagnostics_json(const std::string& path,
                            const ReconciliationResult& result,
                            const WeightMatrix& wm, const Hierarchy& h);

/// 12 significant digits; round-trip stable under the library tolerances.
std::string format_number(double v);

enum class LogLevel { quiet, info, debug };
LogLevel log_level();  // from RECON_LOG
void log_info(const std::string& msg);
void log_debug(const std::string& msg);
void log_warning(const std::string& msg);

}  // namespace recon
