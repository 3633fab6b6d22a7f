#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recon/covariance.hpp"
#include "recon/hierarchy.hpp"
#include "recon/linalg.hpp"
#include "recon/parallel.hpp"

namespace recon {

/// Base forecasts for every series of a hierarchy, one column per horizon.
struct ForecastPanel {
  std::vector<std::string> labels;  // must match the hierarchy order
  Matrix base;                      // n x H
};

struct ReconcileDiagnostics {
  std::vector<std::string> basis_labels;            // realized basis (v, u)
  std::vector<std::vector<int>> active_sets;        // per horizon, basis indices
  std::vector<std::string> warnings;
};

struct ReconciliationResult {
  Matrix reconciled;               // n x H
  std::optional<Matrix> g_matrix;  // m x n mapping base forecasts to basis
                                   // coefficients; absent if bounds were active
  Matrix s_used;                   // n x m structural matrix G certifies against
  double coherence_residual = 0.0;
  double immutability_residual = 0.0;
  ReconcileDiagnostics diagnostics;
};

/// Standard reconciliation: y_tilde = S (S' W^{-1} S)^{-1} S' W^{-1} y_hat
/// per horizon, with W the weight estimate.
ReconciliationResult reconcile_unconstrained(const Hierarchy& h,
                                             const WeightMatrix& wm,
                                             const ForecastPanel& panel,
                                             ExecMode mode = ExecMode::openmp);

/// Reconciliation holding the `immutable` series fixed, optionally with
/// non-negativity bounds on the mutable basis. The immutable series keep
/// their base forecasts bitwise. With `nonneg`, a negative immutable base
/// forecast is passed through with a warning.
ReconciliationResult reconcile_immutable(const Hierarchy& h,
                                         const std::vector<std::string>& immutable,
                                         const WeightMatrix& wm,
                                         const ForecastPanel& panel,
                                         bool nonneg = false,
                                         ExecMode mode = ExecMode::openmp);

/// Same as reconcile_immutable but with a caller-chosen basis selection
/// (the last k basis series are the immutable ones).
ReconciliationResult reconcile_with_selection(const Hierarchy& h,
                                              const BasisSelection& sel,
                                              const WeightMatrix& wm,
                                              const ForecastPanel& panel,
                                              bool nonneg = false,
                                              ExecMode mode = ExecMode::openmp);

/// Max-abs residual of G*S - I; small residual certifies the mapping is a
/// projection onto the coherent subspace (and hence preserves unbiasedness).
/// Requires result.g_matrix.
double g_matrix_check(const ReconciliationResult& result, const Hierarchy& h);

}  // namespace recon
