#pragma once

#include <optional>
#include <string>
#include <vector>

#include "recon/hierarchy.hpp"
#include "recon/linalg.hpp"

namespace recon {

enum class WeightKind { ols, wls_s, wls_v, mint_shrink };

std::string to_string(WeightKind kind);
WeightKind weight_kind_from_string(const std::string& name);

/// In-sample one-step base forecast errors, one column per series. NaN marks
/// a missing observation; covariances are computed pairwise-complete.
struct ErrorSample {
  Matrix errors;  // T_e x n

  int t() const { return static_cast<int>(errors.rows()); }
  int n() const { return static_cast<int>(errors.cols()); }
  std::vector<int> valid_counts() const;
};

/// Base forecast error covariance estimate used as the GLS weight. The
/// reconciliation objective is always (y_hat - y_tilde)' w^{-1} (y_hat -
/// y_tilde); ols stores the identity, wls_* diagonal matrices, mint_shrink
/// the shrunk sample covariance.
struct WeightMatrix {
  Matrix w;  // n x n symmetric positive definite (or its mutable restriction)
  WeightKind kind = WeightKind::ols;
  double shrink_lambda = 0.0;  // mint_shrink only
  std::vector<std::string> warnings;
};

/// Estimate the weight matrix.
///   ols          identity
///   wls_s        diag of structural weights (|S| row sums in the bottom basis)
///   wls_v        diag of per-series sample error variances
///   mint_shrink  lambda*diag(What) + (1-lambda)*What, What the pairwise
///                sample covariance, lambda the Schafer-Strimmer intensity
///                (clamped to [0,1]); `forced_lambda` overrides the estimate.
///
/// `errors` is required for wls_v and mint_shrink.
WeightMatrix estimate(WeightKind kind, const Hierarchy& h,
                      const ErrorSample* errors = nullptr,
                      std::optional<double> forced_lambda = std::nullopt);

/// Principal submatrix over the mutable series (determined then mutable
/// basis). This is a restriction of the full-hierarchy estimate, not a
/// re-estimation on the mutable series alone.
WeightMatrix restrict_to_mutable(const WeightMatrix& wm,
                                 const BasisSelection& sel);

}  // namespace recon
