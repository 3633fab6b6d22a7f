#include "recon/covariance.hpp"

#include <cmath>
#include <limits>

#include "recon/errors.hpp"

namespace recon {

namespace {

bool valid_entry(double x) { return !std::isnan(x); }

struct SeriesStats {
  double mean = 0.0;
  double var = 0.0;  // denominator T-1
  int count = 0;
};

SeriesStats column_stats(const Matrix& e, int j) {
  SeriesStats st;
  double sum = 0.0;
  for (int t = 0; t < e.rows(); ++t)
    if (valid_entry(e(t, j))) {
      sum += e(t, j);
      ++st.count;
    }
  if (st.count == 0) return st;
  st.mean = sum / st.count;
  double ss = 0.0;
  for (int t = 0; t < e.rows(); ++t)
    if (valid_entry(e(t, j))) {
      const double d = e(t, j) - st.mean;
      ss += d * d;
    }
  st.var = st.count > 1 ? ss / (st.count - 1) : 0.0;
  return st;
}

void require_history(const ErrorSample* errors, int n, const char* kind) {
  if (errors == nullptr)
    throw ValidationError(std::string("error history required for ") + kind);
  if (errors->n() != n)
    throw ValidationError("error sample has " + std::to_string(errors->n()) +
                          " series, hierarchy has " + std::to_string(n));
  if (errors->t() < 1) throw ValidationError("empty error history");
  for (int j = 0; j < errors->n(); ++j)
    for (int t = 0; t < errors->t(); ++t) {
      const double x = errors->errors(t, j);
      if (!std::isnan(x) && !std::isfinite(x))
        throw ValidationError("non-finite error entry for series " +
                              std::to_string(j));
    }
}

// Pairwise-complete sample covariance (R cov use="pairwise.complete.obs"
// semantics: pairwise means).
Matrix pairwise_covariance(const Matrix& e, std::vector<std::string>& warnings) {
  const int n = static_cast<int>(e.cols());
  Matrix cov = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double si = 0.0, sj = 0.0;
      int cnt = 0;
      for (int t = 0; t < e.rows(); ++t)
        if (valid_entry(e(t, i)) && valid_entry(e(t, j))) {
          si += e(t, i);
          sj += e(t, j);
          ++cnt;
        }
      if (cnt < 2) {
        if (i == j)
          throw ValidationError("insufficient error history for series " +
                                std::to_string(i) + " (need >= 2 valid)");
        warnings.push_back("series pair (" + std::to_string(i) + "," +
                           std::to_string(j) +
                           ") has < 2 joint observations; covariance set to 0");
        continue;
      }
      const double mi = si / cnt, mj = sj / cnt;
      double acc = 0.0;
      for (int t = 0; t < e.rows(); ++t)
        if (valid_entry(e(t, i)) && valid_entry(e(t, j)))
          acc += (e(t, i) - mi) * (e(t, j) - mj);
      cov(i, j) = cov(j, i) = acc / (cnt - 1);
    }
  }
  return cov;
}

// Schafer-Strimmer intensity targeting the diagonal:
// lambda = sum var_hat(r_ij) / sum r_ij^2 over off-diagonal correlations.
double shrinkage_intensity(const Matrix& e) {
  const int n = static_cast<int>(e.cols());
  const int rows = static_cast<int>(e.rows());
  std::vector<SeriesStats> stats(n);
  for (int j = 0; j < n; ++j) stats[j] = column_stats(e, j);

  double num = 0.0, den = 0.0;
  std::vector<double> w(rows);
  for (int i = 0; i < n; ++i) {
    if (stats[i].var <= 0.0) continue;
    for (int j = i + 1; j < n; ++j) {
      if (stats[j].var <= 0.0) continue;
      int cnt = 0;
      for (int t = 0; t < rows; ++t) {
        if (!valid_entry(e(t, i)) || !valid_entry(e(t, j))) continue;
        const double xi = (e(t, i) - stats[i].mean) / std::sqrt(stats[i].var);
        const double xj = (e(t, j) - stats[j].mean) / std::sqrt(stats[j].var);
        w[cnt++] = xi * xj;
      }
      if (cnt < 2) continue;
      double wmean = 0.0;
      for (int t = 0; t < cnt; ++t) wmean += w[t];
      wmean /= cnt;
      double ss = 0.0;
      for (int t = 0; t < cnt; ++t) ss += (w[t] - wmean) * (w[t] - wmean);
      const double r = cnt * wmean / (cnt - 1);
      const double var_r =
          static_cast<double>(cnt) / ((cnt - 1.0) * (cnt - 1.0) * (cnt - 1.0)) *
          ss;
      num += var_r;
      den += r * r;
    }
  }
  if (den <= 0.0) return 1.0;
  const double lambda = num / den;
  return std::min(1.0, std::max(0.0, lambda));
}

void repair_positive_definiteness(WeightMatrix& wm) {
  const int n = static_cast<int>(wm.w.rows());
  wm.w = 0.5 * (wm.w + wm.w.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(wm.w);
  const double scale = wm.w.trace() / n;
  const double floor = 1e-10 * scale;
  double min_eig = es.eigenvalues().minCoeff();
  if (min_eig >= floor) return;
  double jitter = 1e-8 * scale;
  if (min_eig + jitter < floor) jitter = floor - min_eig + 1e-8 * scale;
  wm.w += jitter * Matrix::Identity(n, n);
  wm.warnings.push_back("added jitter " + std::to_string(jitter) +
                        " to restore positive definiteness");
}

}  // namespace

std::string to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::ols: return "ols";
    case WeightKind::wls_s: return "wls_s";
    case WeightKind::wls_v: return "wls_v";
    case WeightKind::mint_shrink: return "mint_shrink";
  }
  return "?";
}

WeightKind weight_kind_from_string(const std::string& name) {
  if (name == "ols") return WeightKind::ols;
  if (name == "wls_s") return WeightKind::wls_s;
  if (name == "wls_v") return WeightKind::wls_v;
  if (name == "mint_shrink") return WeightKind::mint_shrink;
  throw ValidationError("unknown weight kind '" + name + "'");
}

std::vector<int> ErrorSample::valid_counts() const {
  std::vector<int> counts(n(), 0);
  for (int j = 0; j < n(); ++j)
    for (int t = 0; t < this->t(); ++t)
      if (valid_entry(errors(t, j))) ++counts[j];
  return counts;
}

WeightMatrix estimate(WeightKind kind, const Hierarchy& h,
                      const ErrorSample* errors,
                      std::optional<double> forced_lambda) {
  const int n = h.n();
  WeightMatrix wm;
  wm.kind = kind;

  switch (kind) {
    case WeightKind::ols:
      wm.w = Matrix::Identity(n, n);
      return wm;

    case WeightKind::wls_s:
      wm.w = h.structural_weights.asDiagonal();
      return wm;

    case WeightKind::wls_v: {
      require_history(errors, n, "wls_v");
      Vector var(n);
      double min_pos = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        const SeriesStats st = column_stats(errors->errors, j);
        if (st.count < 2)
          throw ValidationError("insufficient error history for series " +
                                std::to_string(j) + " (need >= 2 valid)");
        var(j) = st.var;
        if (st.var > 0.0) min_pos = std::min(min_pos, st.var);
      }
      if (!std::isfinite(min_pos))
        throw ValidationError("all series have zero error variance");
      for (int j = 0; j < n; ++j)
        if (var(j) <= 0.0) {
          var(j) = min_pos * 1e-3;
          wm.warnings.push_back("series " + std::to_string(j) +
                                " has zero error variance; floored to " +
                                std::to_string(var(j)));
        }
      wm.w = var.asDiagonal();
      return wm;
    }

    case WeightKind::mint_shrink: {
      require_history(errors, n, "mint_shrink");
      const Matrix sample = pairwise_covariance(errors->errors, wm.warnings);
      const double lambda =
          forced_lambda ? *forced_lambda : shrinkage_intensity(errors->errors);
      wm.shrink_lambda = lambda;
      const Matrix target = sample.diagonal().asDiagonal();
      wm.w = lambda * target + (1.0 - lambda) * sample;
      repair_positive_definiteness(wm);
      return wm;
    }
  }
  throw ValidationError("unreachable weight kind");
}

WeightMatrix restrict_to_mutable(const WeightMatrix& wm,
                                 const BasisSelection& sel) {
  if (wm.w.rows() != sel.n() || wm.w.cols() != sel.n())
    throw ValidationError("weight matrix is " + std::to_string(wm.w.rows()) +
                          "x" + std::to_string(wm.w.cols()) +
                          ", selection expects " + std::to_string(sel.n()));
  std::vector<int> idx = sel.determined;
  idx.insert(idx.end(), sel.mutable_basis.begin(), sel.mutable_basis.end());
  const int p = static_cast<int>(idx.size());

  WeightMatrix out;
  out.kind = wm.kind;
  out.shrink_lambda = wm.shrink_lambda;
  out.w.resize(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) out.w(i, j) = wm.w(idx[i], idx[j]);
  return out;
}

}  // namespace recon
