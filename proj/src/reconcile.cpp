#include "recon/reconcile.hpp"

#include <algorithm>
#include <cmath>
#include <exception>

#include "recon/errors.hpp"
#include "recon/solver.hpp"

namespace recon {

namespace {

void validate_panel(const Hierarchy& h, const ForecastPanel& panel) {
  if (panel.labels != h.labels)
    throw ValidationError(
        "forecast panel labels do not match the hierarchy order");
  if (panel.base.rows() != h.n())
    throw ValidationError("forecast panel has " +
                          std::to_string(panel.base.rows()) +
                          " rows, hierarchy has " + std::to_string(h.n()));
  if (!panel.base.allFinite())
    throw ValidationError("forecast panel contains non-finite entries");
}

double coherence_residual(const Hierarchy& h, const Matrix& reconciled) {
  if (h.n() == h.m()) return 0.0;
  return (h.constraint_matrix * reconciled).cwiseAbs().maxCoeff();
}

void rethrow_first(std::vector<std::exception_ptr>& errors) {
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

ReconciliationResult reconcile_unconstrained(const Hierarchy& h,
                                             const WeightMatrix& wm,
                                             const ForecastPanel& panel,
                                             ExecMode mode) {
  validate_panel(h, panel);
  if (wm.w.rows() != h.n())
    throw ValidationError("weight matrix size does not match hierarchy");

  const Matrix& s = h.s_matrix;
  Eigen::LLT<Matrix> wllt(wm.w);
  if (wllt.info() != Eigen::Success)
    throw SolverError("weight matrix is not positive definite");
  const Matrix wis = wllt.solve(s);              // W^{-1} S
  Eigen::LLT<Matrix> mllt((s.transpose() * wis).eval());
  if (mllt.info() != Eigen::Success)
    throw SolverError("singular S' W^{-1} S");
  const Matrix g = mllt.solve(wis.transpose());  // m x n

  const int horizons = static_cast<int>(panel.base.cols());
  ReconciliationResult result;
  result.reconciled.resize(h.n(), horizons);
  for_each_index(horizons, mode, [&](int col) {
    result.reconciled.col(col) = s * (g * panel.base.col(col));
  });

  result.g_matrix = g;
  result.s_used = s;
  result.coherence_residual = coherence_residual(h, result.reconciled);
  result.immutability_residual = 0.0;
  for (int b : h.basis_indices)
    result.diagnostics.basis_labels.push_back(h.labels[b]);
  return result;
}

ReconciliationResult reconcile_with_selection(const Hierarchy& h,
                                              const BasisSelection& sel,
                                              const WeightMatrix& wm,
                                              const ForecastPanel& panel,
                                              bool nonneg, ExecMode mode) {
  validate_panel(h, panel);
  const int n = h.n();
  const int m = sel.m();
  const int k = sel.k();
  const int mv = m - k;
  const int nd = n - m;
  const int horizons = static_cast<int>(panel.base.cols());

  const WeightMatrix wnu = restrict_to_mutable(wm, sel);

  // Stacked design of the mutable subproblem: [S1; I].
  Matrix s1check(nd + mv, mv);
  s1check.topRows(nd) = sel.s1;
  s1check.bottomRows(mv) = Matrix::Identity(mv, mv);

  // G1 = (S1c' Wnu^{-1} S1c)^{-1} S1c' Wnu^{-1}, used on the bound-free path
  // and to compose the realized mapping.
  Matrix g1(mv, nd + mv);
  if (mv > 0) {
    Eigen::LLT<Matrix> wllt(wnu.w);
    if (wllt.info() != Eigen::Success)
      throw SolverError("mutable weight block is not positive definite");
    const Matrix wis = wllt.solve(s1check);
    Eigen::LLT<Matrix> mllt((s1check.transpose() * wis).eval());
    if (mllt.info() != Eigen::Success)
      throw SolverError("singular stacked design in constrained reconciliation");
    g1 = mllt.solve(wis.transpose());
  }

  ReconciliationResult result;
  result.reconciled.resize(n, horizons);
  result.diagnostics.active_sets.assign(horizons, {});
  std::vector<std::exception_ptr> column_errors(horizons);
  bool any_active = false;

  for_each_index(horizons, mode, [&](int col) {
    try {
      Vector what(nd), vhat(mv), uhat(k);
      for (int r = 0; r < nd; ++r) what(r) = panel.base(sel.determined[r], col);
      for (int r = 0; r < mv; ++r)
        vhat(r) = panel.base(sel.mutable_basis[r], col);
      for (int r = 0; r < k; ++r)
        uhat(r) = panel.base(sel.immutable_basis[r], col);

      Vector nucheck(nd + mv);
      nucheck.head(nd) = what - sel.s2 * uhat;
      nucheck.tail(mv) = vhat;

      Vector vtil(mv);
      if (mv == 0) {
        // no free variables
      } else if (!nonneg) {
        vtil = g1 * nucheck;
      } else {
        const QpSolution qp = solve_nnls({s1check, nucheck, wnu.w},
                                         std::vector<bool>(mv, true));
        vtil = qp.x;
        result.diagnostics.active_sets[col] = qp.active_set;
      }

      const Vector wtil = sel.s1 * vtil + sel.s2 * uhat;
      for (int r = 0; r < nd; ++r)
        result.reconciled(sel.determined[r], col) = wtil(r);
      for (int r = 0; r < mv; ++r)
        result.reconciled(sel.mutable_basis[r], col) = vtil(r);
      // immutable forecasts are copied, not recomputed
      for (int r = 0; r < k; ++r)
        result.reconciled(sel.immutable_basis[r], col) =
            panel.base(sel.immutable_basis[r], col);
    } catch (...) {
      column_errors[col] = std::current_exception();
    }
  });
  rethrow_first(column_errors);

  for (const auto& active : result.diagnostics.active_sets)
    if (!active.empty()) any_active = true;

  if (nonneg) {
    for (int r = 0; r < k; ++r)
      for (int col = 0; col < horizons; ++col)
        if (panel.base(sel.immutable_basis[r], col) < 0.0) {
          result.diagnostics.warnings.push_back(
              "immutable series '" + h.labels[sel.immutable_basis[r]] +
              "' has a negative base forecast at horizon " +
              std::to_string(col + 1) + "; passed through unchanged");
        }
  }

  result.s_used = partitioned_s_matrix(sel);
  if (!nonneg || !any_active) {
    // Realized mapping over (w, v, u)-ordered inputs:
    //   [[G1, 0], [0, I_k]] (I_n - [[0, S2], [0, 0]])
    Matrix gperm = Matrix::Zero(m, n);
    if (mv > 0) {
      gperm.topLeftCorner(mv, nd + mv) = g1;
      gperm.topRightCorner(mv, k) = -g1.leftCols(nd) * sel.s2;
    }
    gperm.bottomRightCorner(k, k) = Matrix::Identity(k, k);
    // permute columns back to the original series order
    Matrix g = Matrix::Zero(m, n);
    int pos = 0;
    for (int idx : sel.determined) g.col(idx) = gperm.col(pos++);
    for (int idx : sel.mutable_basis) g.col(idx) = gperm.col(pos++);
    for (int idx : sel.immutable_basis) g.col(idx) = gperm.col(pos++);
    result.g_matrix = std::move(g);
  }

  result.coherence_residual = coherence_residual(h, result.reconciled);
  double imres = 0.0;
  for (int r = 0; r < k; ++r)
    for (int col = 0; col < horizons; ++col)
      imres = std::max(imres,
                       std::abs(result.reconciled(sel.immutable_basis[r], col) -
                                panel.base(sel.immutable_basis[r], col)));
  result.immutability_residual = imres;

  for (int idx : sel.mutable_basis)
    result.diagnostics.basis_labels.push_back(h.labels[idx]);
  for (int idx : sel.immutable_basis)
    result.diagnostics.basis_labels.push_back(h.labels[idx]);
  return result;
}

ReconciliationResult reconcile_immutable(const Hierarchy& h,
                                         const std::vector<std::string>& immutable,
                                         const WeightMatrix& wm,
                                         const ForecastPanel& panel,
                                         bool nonneg, ExecMode mode) {
  const BasisSelection sel = partition(h, immutable);
  return reconcile_with_selection(h, sel, wm, panel, nonneg, mode);
}

double g_matrix_check(const ReconciliationResult& result, const Hierarchy& h) {
  if (!result.g_matrix.has_value())
    throw ValidationError(
        "g_matrix unavailable: bounds were active during reconciliation");
  const int m = static_cast<int>(result.g_matrix->rows());
  if (result.s_used.rows() != h.n())
    throw ValidationError("result does not belong to this hierarchy");
  const Matrix gs = (*result.g_matrix) * result.s_used;
  return (gs - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
}

}  // namespace recon
