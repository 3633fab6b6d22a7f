#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "recon/covariance.hpp"

namespace recon::cli {

/// Exit codes: 0 success, 1 invalid basis (validate-basis), 2 validation
/// error, 3 solver failure.
struct RunConfig {
  std::string command;  // reconcile | validate-basis | simulate
  std::string hierarchy_path;
  std::string forecasts_path;
  std::string errors_path;
  std::string output_path;
  WeightKind weights = WeightKind::ols;
  std::vector<std::string> immutable;
  bool nonneg = false;
  std::vector<std::string> basis_candidate;  // validate-basis
  std::string scenario = "one";
  int replications = 0;
  std::uint64_t seed = 42;
  std::string plan = "ets";
};

int cmd_reconcile(const RunConfig& cfg);
int cmd_validate_basis(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);

/// Parse argv, dispatch, and map exceptions to exit codes.
int run_cli(int argc, const char* const* argv);

/// Split a comma-separated label list; empty input gives an empty list.
std::vector<std::string> parse_label_list(const std::string& csv);

}  // namespace recon::cli
