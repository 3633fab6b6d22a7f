#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "recon/linalg.hpp"

namespace recon {

/// Generalized least squares data: minimize
///   (target - design*x)' weight^{-1} (target - design*x).
/// `weight` stores the error covariance; it is consumed through a Cholesky
/// factorization and never inverted explicitly.
struct GlsProblem {
  Matrix design;  // p x q, full column rank
  Vector target;  // p
  Matrix weight;  // p x p symmetric positive definite
};

struct QpSolution {
  Vector x;
  std::vector<int> active_set;  // bounded coordinates held at zero
  double kkt_residual = 0.0;    // relative max KKT violation
  int iterations = 0;
};

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& msg) : std::runtime_error(msg) {}
  SolverError(const std::string& msg, QpSolution best_iterate)
      : std::runtime_error(msg), best(std::move(best_iterate)), has_best(true) {}

  QpSolution best;
  bool has_best = false;
};

/// Unconstrained GLS solve via whitening (Cholesky of weight) + column-pivoted
/// QR. Throws SolverError on rank-deficient design or non-PD weight.
Vector solve_gls(const GlsProblem& p);

/// Bound-constrained GLS: coordinates with bound_mask[i] carry x_i >= 0.
/// Primal active-set method (Lawson-Hanson generalized to the GLS inner
/// product) with Bland's rule for anti-cycling and Cholesky refactorization
/// per active-set change. `max_pivots` <= 0 means the default 100*q.
QpSolution solve_nnls(const GlsProblem& p, const std::vector<bool>& bound_mask,
                      int max_pivots = 0);

/// Verification oracle: enumerate all 2^(#bounded) active-set patterns, solve
/// each equality-restricted GLS by an independent route (normal equations +
/// full-pivot LU), and return the unique KKT-satisfying point. At most 12
/// bounded coordinates. `n_kkt_patterns`, when given, receives the number of
/// patterns that satisfied the KKT conditions.
QpSolution oracle_enumerate(const GlsProblem& p,
                            const std::vector<bool>& bound_mask,
                            int* n_kkt_patterns = nullptr);

}  // namespace recon
