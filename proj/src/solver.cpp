#include "recon/solver.hpp"

#include <algorithm>
#include <cmath>

#include "recon/errors.hpp"

namespace recon {

namespace {

void validate_problem(const GlsProblem& p, const char* where) {
  const auto rows = p.design.rows();
  if (p.target.size() != rows || p.weight.rows() != rows ||
      p.weight.cols() != rows)
    throw ValidationError(std::string(where) +
                          ": inconsistent problem dimensions");
  if (!p.design.allFinite() || !p.target.allFinite() || !p.weight.allFinite())
    throw ValidationError(std::string(where) + ": non-finite entries");
}

struct Whitened {
  Matrix design;  // L^{-1} design
  Vector target;  // L^{-1} target
};

Whitened whiten(const GlsProblem& p) {
  Eigen::LLT<Matrix> llt(p.weight);
  if (llt.info() != Eigen::Success) {
    const double scale = p.weight.trace() / std::max<Eigen::Index>(1, p.weight.rows());
    llt.compute(p.weight +
                1e-10 * scale * Matrix::Identity(p.weight.rows(), p.weight.cols()));
    if (llt.info() != Eigen::Success)
      throw SolverError("weight matrix is not positive definite");
  }
  Whitened w;
  w.design = llt.matrixL().solve(p.design);
  w.target = llt.matrixL().solve(p.target);
  return w;
}

double kkt_measure(const Matrix& a, const Vector& t, const Vector& x,
                   const std::vector<bool>& bound_mask,
                   const std::vector<char>& in_passive) {
  const Vector g = a.transpose() * (a * x - t);
  const double scale = 1.0 + (a.transpose() * t).cwiseAbs().maxCoeff();
  const double xscale = 1.0 + x.cwiseAbs().maxCoeff();
  double stat = 0.0, dual = 0.0, comp = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    if (in_passive[i]) {
      stat = std::max(stat, std::abs(g(i)));
    } else {
      dual = std::max(dual, -g(i));
    }
    if (bound_mask[i]) comp = std::max(comp, std::abs(x(i) * g(i)) / xscale);
  }
  return std::max({stat, std::max(0.0, dual), comp}) / scale;
}

}  // namespace

Vector solve_gls(const GlsProblem& p) {
  validate_problem(p, "solve_gls");
  const int q = static_cast<int>(p.design.cols());
  if (q == 0) return Vector(0);

  const Whitened w = whiten(p);
  Eigen::ColPivHouseholderQR<Matrix> qr(w.design);
  qr.setThreshold(1e-10);
  if (qr.rank() < q)
    throw SolverError("design matrix is rank deficient (rank " +
                      std::to_string(qr.rank()) + " of " + std::to_string(q) +
                      ")");
  return qr.solve(w.target);
}

QpSolution solve_nnls(const GlsProblem& p, const std::vector<bool>& bound_mask,
                      int max_pivots) {
  validate_problem(p, "solve_nnls");
  const int q = static_cast<int>(p.design.cols());
  if (static_cast<int>(bound_mask.size()) != q)
    throw ValidationError("solve_nnls: bound mask size mismatch");
  QpSolution sol;
  if (q == 0) {
    sol.x = Vector(0);
    return sol;
  }

  const Whitened wh = whiten(p);
  const Matrix& a = wh.design;
  const Vector& t = wh.target;
  const double scale = 1.0 + (a.transpose() * t).cwiseAbs().maxCoeff();
  const double enter_tol = 1e-9 * scale;
  const int cap = max_pivots > 0 ? max_pivots : 100 * q;

  std::vector<char> in_passive(q);
  for (int i = 0; i < q; ++i) in_passive[i] = !bound_mask[i];

  auto restricted_solve = [&](const std::vector<char>& passive) -> Vector {
    std::vector<int> idx;
    for (int i = 0; i < q; ++i)
      if (passive[i]) idx.push_back(i);
    Vector z = Vector::Zero(q);
    if (idx.empty()) return z;
    Matrix ap(a.rows(), idx.size());
    for (size_t j = 0; j < idx.size(); ++j) ap.col(j) = a.col(idx[j]);
    Eigen::LLT<Matrix> gram((ap.transpose() * ap).eval());
    if (gram.info() != Eigen::Success)
      throw SolverError("design matrix is rank deficient in restricted solve");
    const Vector zp = gram.solve(ap.transpose() * t);
    for (size_t j = 0; j < idx.size(); ++j) z(idx[j]) = zp(j);
    return z;
  };

  auto finish = [&](Vector x, int iterations) {
    QpSolution out;
    out.x = std::move(x);
    out.iterations = iterations;
    for (int i = 0; i < q; ++i)
      if (bound_mask[i] && !in_passive[i]) out.active_set.push_back(i);
    out.kkt_residual = kkt_measure(a, t, out.x, bound_mask, in_passive);
    return out;
  };

  Vector x = restricted_solve(in_passive);
  int iter = 0;

  while (true) {
    const Vector g = a.transpose() * (a * x - t);
    int enter = -1;  // Bland: lowest eligible index
    for (int i = 0; i < q; ++i)
      if (bound_mask[i] && !in_passive[i] && g(i) < -enter_tol) {
        enter = i;
        break;
      }
    if (enter < 0) break;
    if (++iter > cap)
      throw SolverError("active-set iteration cap exceeded", finish(x, iter));
    in_passive[enter] = true;

    while (true) {
      const Vector z = restricted_solve(in_passive);
      int leave = -1;
      double alpha = 1.0;
      for (int i = 0; i < q; ++i) {
        if (!bound_mask[i] || !in_passive[i] || z(i) > 0.0) continue;
        const double denom = x(i) - z(i);
        const double step = denom > 0.0 ? x(i) / denom : 0.0;
        if (step < alpha || (step == alpha && (leave < 0 || i < leave))) {
          alpha = step;
          leave = i;
        }
      }
      if (leave < 0) {
        x = z;
        break;
      }
      if (++iter > cap)
        throw SolverError("active-set iteration cap exceeded", finish(x, iter));
      x += alpha * (z - x);
      x(leave) = 0.0;
      in_passive[leave] = false;
      for (int i = 0; i < q; ++i)
        if (bound_mask[i] && in_passive[i] && x(i) <= 0.0) {
          x(i) = 0.0;
          in_passive[i] = false;
        }
    }
  }

  return finish(std::move(x), iter);
}

QpSolution oracle_enumerate(const GlsProblem& p,
                            const std::vector<bool>& bound_mask,
                            int* n_kkt_patterns) {
  validate_problem(p, "oracle_enumerate");
  const int q = static_cast<int>(p.design.cols());
  if (static_cast<int>(bound_mask.size()) != q)
    throw ValidationError("oracle_enumerate: bound mask size mismatch");

  std::vector<int> bounded;
  for (int i = 0; i < q; ++i)
    if (bound_mask[i]) bounded.push_back(i);
  if (bounded.size() > 12)
    throw ValidationError("oracle_enumerate: too many bounded coordinates (" +
                          std::to_string(bounded.size()) + " > 12)");

  // Independent route: explicit normal equations, full-pivot LU subsolves.
  Eigen::LDLT<Matrix> wldlt(p.weight);
  const Matrix wia = wldlt.solve(p.design);
  const Matrix normal = p.design.transpose() * wia;       // A' W^{-1} A
  const Vector rhs = p.design.transpose() * wldlt.solve(p.target);
  const double scale = 1.0 + rhs.cwiseAbs().maxCoeff();

  QpSolution best;
  bool found = false;
  int satisfied = 0;

  for (unsigned pattern = 0; pattern < (1u << bounded.size()); ++pattern) {
    std::vector<char> active(q, 0);
    for (size_t b = 0; b < bounded.size(); ++b)
      if (pattern & (1u << b)) active[bounded[b]] = 1;

    std::vector<int> passive;
    for (int i = 0; i < q; ++i)
      if (!active[i]) passive.push_back(i);

    Vector x = Vector::Zero(q);
    if (!passive.empty()) {
      Matrix sub(passive.size(), passive.size());
      Vector subrhs(passive.size());
      for (size_t r = 0; r < passive.size(); ++r) {
        subrhs(r) = rhs(passive[r]);
        for (size_t c = 0; c < passive.size(); ++c)
          sub(r, c) = normal(passive[r], passive[c]);
      }
      const Vector xp = sub.fullPivLu().solve(subrhs);
      for (size_t r = 0; r < passive.size(); ++r) x(passive[r]) = xp(r);
    }

    const Vector g = normal * x - rhs;
    const double xscale = 1.0 + x.cwiseAbs().maxCoeff();
    bool ok = true;
    for (int i = 0; i < q && ok; ++i) {
      if (bound_mask[i] && !active[i] && x(i) < -1e-9 * xscale) ok = false;
      if (active[i] && g(i) < -1e-9 * scale) ok = false;
    }
    if (!ok) continue;

    ++satisfied;
    if (!found) {
      found = true;
      best.x = x;
      for (int i = 0; i < q; ++i)
        if (active[i]) best.active_set.push_back(i);
      double stat = 0.0, dual = 0.0;
      for (int i = 0; i < q; ++i) {
        if (active[i])
          dual = std::max(dual, std::max(0.0, -g(i)));
        else
          stat = std::max(stat, std::abs(g(i)));
      }
      best.kkt_residual = std::max(stat, dual) / scale;
      best.iterations = static_cast<int>(pattern);
    }
  }

  if (n_kkt_patterns != nullptr) *n_kkt_patterns = satisfied;
  if (!found)
    throw SolverError("enumeration found no KKT-satisfying active set");
  return best;
}

}  // namespace recon
