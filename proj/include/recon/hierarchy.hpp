#pragma once

#include <string>
#include <utility>
#include <vector>

#include "recon/linalg.hpp"

namespace recon {

/// A labeled collection of series linked by linear aggregation constraints.
///
/// Every coherent observation vector y satisfies y = S * b where b holds the
/// values of the basis series. The basis need not be the bottom level; any
/// set of series whose S-rows form an invertible square matrix can act as
/// basis (see check_basis / rebase).
struct Hierarchy {
  std::vector<std::string> labels;   // n series identifiers
  Matrix s_matrix;                   // n x m structural matrix S
  std::vector<int> basis_indices;    // m rows of S forming identity-up-to-permutation
  Matrix constraint_matrix;          // (n-m) x n matrix A with A*y = 0 for coherent y
  std::vector<int> levels;           // aggregation level per series, 0 = top
  Vector structural_weights;         // row sums of |S| in the construction basis

  int n() const { return static_cast<int>(labels.size()); }
  int m() const { return static_cast<int>(basis_indices.size()); }

  /// Index of a label; throws ValidationError if unknown.
  int index_of(const std::string& label) const;
  std::vector<int> indices_of(const std::vector<std::string>& names) const;
};

/// Partition of a hierarchy into determined (w), mutable-basis (v) and
/// immutable-basis (u) series, with the corresponding blocks of the
/// partitioned structural matrix
///
///   S = [[S1, S2],
///        [I ,  0],
///        [0 ,  I]]
///
/// where rows are stacked (w, v, u) and columns ordered (v, u).
struct BasisSelection {
  std::vector<int> determined;       // w, original relative order
  std::vector<int> mutable_basis;    // v
  std::vector<int> immutable_basis;  // u
  Matrix s1;                         // (n-m) x (m-k)
  Matrix s2;                         // (n-m) x k

  int n() const {
    return static_cast<int>(determined.size() + mutable_basis.size() +
                            immutable_basis.size());
  }
  int m() const {
    return static_cast<int>(mutable_basis.size() + immutable_basis.size());
  }
  int k() const { return static_cast<int>(immutable_basis.size()); }
};

/// Grouped (cross-classified) structure: bottom series are keyed by one value
/// per dimension; each aggregate is a subset of dimensions whose value
/// cross-product defines one level of summing rows. The empty subset is the
/// grand total.
struct GroupSpec {
  struct Dimension {
    std::string name;
    std::vector<std::string> values;
  };
  std::vector<Dimension> dimensions;
  std::vector<std::vector<std::string>> bottom_keys;  // one value per dimension
  std::vector<std::vector<std::string>> aggregates;   // dimension-name subsets
};

struct BasisCheck {
  bool valid = false;
  std::string reason;  // rank-deficiency witness when invalid
  explicit operator bool() const { return valid; }
};

/// Build a hierarchy from parent,child edges. Edges must form a single tree;
/// `singletons` lists isolated nodes (only meaningful for a one-node
/// hierarchy). Leaves become the basis; label order is first appearance.
Hierarchy build_from_edges(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::vector<std::string>& singletons = {});

/// Build a grouped hierarchy. Rows are the aggregates in the order given
/// (empty subset = "Total"), followed by the bottom series; the bottom cross
/// is always the basis.
Hierarchy build_from_groups(const GroupSpec& spec);

/// Decide whether the series at `candidate` can act as a basis: valid iff
/// the square matrix of their S-rows is invertible. Rank is decided by the
/// singular value ratio sigma_min/sigma_max < 1e-10.
BasisCheck check_basis(const Hierarchy& h, const std::vector<int>& candidate);

/// Re-express the hierarchy on a new basis: S* = S * S_{j}^{-1}. The
/// coherent subspace is unchanged. Throws ValidationError if the candidate
/// basis is invalid.
Hierarchy rebase(const Hierarchy& h, const std::vector<int>& new_basis);

/// Find a valid basis containing all `immutable` series and return the
/// partitioned blocks, with the immutable series in the last k basis
/// positions.
///
/// Completion rule: starting from the immutable rows, greedily add current
/// basis series in index order whenever they increase the rank, then any
/// remaining series. Fails iff the immutable rows themselves are linearly
/// dependent (no completion can exist).
BasisSelection partition(const Hierarchy& h,
                         const std::vector<std::string>& immutable);

/// Build a BasisSelection from an explicit basis whose last k entries are
/// the immutable series. Validates the basis.
BasisSelection selection_from_basis(const Hierarchy& h,
                                    const std::vector<int>& basis, int k);

/// Reassemble the full rebased structural matrix (original row order,
/// columns ordered v then u) from a selection.
Matrix partitioned_s_matrix(const BasisSelection& sel);

}  // namespace recon
