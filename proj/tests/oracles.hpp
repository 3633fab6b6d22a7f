#pragma once

// Test-only verification oracles, kept independent of the library's solve
// paths: exact fraction-free determinants for basis checks, dense grid
// search for small GLS problems, and random problem generators.

#include <cstdint>
#include <vector>

#include "recon/covariance.hpp"
#include "recon/hierarchy.hpp"
#include "recon/rng.hpp"
#include "recon/solver.hpp"

namespace oracle {

/// Bareiss fraction-free elimination; exact for integer matrices with
/// moderate entries. Returns the determinant.
long long bareiss_determinant(std::vector<std::vector<long long>> a);

/// The GLS objective (target - design x)' weight^{-1} (target - design x).
double gls_objective(const recon::GlsProblem& p, const recon::Vector& x);

/// Dense grid search over [lo, hi]^q at the given step; q <= 2 only.
recon::Vector grid_search_gls(const recon::GlsProblem& p, double lo, double hi,
                              double step);

recon::Matrix random_spd(int n, recon::Rng& rng);

/// Random strictly-hierarchical tree with n in [min_n, max_n] series
/// (internal nodes have 2-4 children).
recon::Hierarchy random_tree_hierarchy(recon::Rng& rng, int min_n = 4,
                                       int max_n = 40);

/// Synthetic error history suitable for wls_v / mint_shrink estimation.
recon::ErrorSample random_errors(int n, int t, recon::Rng& rng);

/// A weight matrix of the requested kind over hierarchy h, generating a
/// random error history when one is needed.
recon::WeightMatrix random_weight(recon::WeightKind kind,
                                  const recon::Hierarchy& h, recon::Rng& rng);

/// A random immutable label set that admits a valid basis; size anywhere in
/// [0, m] including the extremes.
std::vector<std::string> random_valid_immutable(const recon::Hierarchy& h,
                                                recon::Rng& rng);

}  // namespace oracle
