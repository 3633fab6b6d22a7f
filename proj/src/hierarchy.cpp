#include "recon/hierarchy.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "recon/errors.hpp"

namespace recon {

namespace {

constexpr double kRankTolerance = 1e-10;  // sigma_min/sigma_max cutoff

// A = [I at determined columns, -S_det at basis columns]; exact for integer S.
Matrix constraint_from(const Matrix& s, const std::vector<int>& basis_indices) {
  const int n = static_cast<int>(s.rows());
  const int m = static_cast<int>(s.cols());
  std::vector<bool> is_basis(n, false);
  for (int b : basis_indices) is_basis[b] = true;

  Matrix a = Matrix::Zero(n - m, n);
  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (is_basis[i]) continue;
    a(r, i) = 1.0;
    for (int j = 0; j < m; ++j) a(r, basis_indices[j]) -= s(i, j);
    ++r;
  }
  return a;
}

void check_construction(const Hierarchy& h) {
  if (h.n() > h.m()) {
    const double res =
        (h.constraint_matrix * h.s_matrix).cwiseAbs().maxCoeff();
    if (res > 1e-12)
      throw ValidationError("internal: constraint matrix residual " +
                            std::to_string(res));
  }
  for (int j = 0; j < h.m(); ++j) {
    Vector row = h.s_matrix.row(h.basis_indices[j]);
    row(j) -= 1.0;
    if (row.cwiseAbs().maxCoeff() > 1e-12)
      throw ValidationError("internal: basis rows are not identity rows");
  }
}

// Incremental row-space tracker used by the greedy basis completion.
class RankTracker {
 public:
  explicit RankTracker(int dim) : dim_(dim) {}

  bool try_add(const Vector& row) {
    Vector r = row;
    for (const Vector& q : ortho_) r -= q.dot(r) * q;
    // second pass for numerical safety
    for (const Vector& q : ortho_) r -= q.dot(r) * q;
    const double scale = std::max(1.0, row.norm());
    if (r.norm() <= 1e-9 * scale) return false;
    ortho_.push_back(r / r.norm());
    return true;
  }

  int rank() const { return static_cast<int>(ortho_.size()); }

 private:
  int dim_;
  std::vector<Vector> ortho_;
};

}  // namespace

int Hierarchy::index_of(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end())
    throw ValidationError("unknown series label '" + label + "'");
  return static_cast<int>(it - labels.begin());
}

std::vector<int> Hierarchy::indices_of(
    const std::vector<std::string>& names) const {
  std::vector<int> out;
  out.reserve(names.size());
  for (const auto& name : names) out.push_back(index_of(name));
  return out;
}

Hierarchy build_from_edges(
    const std::vector<std::pair<std::string, std::string>>& edges,
    const std::vector<std::string>& singletons) {
  std::vector<std::string> labels;
  std::map<std::string, int> id;
  auto intern = [&](const std::string& label) {
    auto it = id.find(label);
    if (it != id.end()) return it->second;
    const int next = static_cast<int>(labels.size());
    id.emplace(label, next);
    labels.push_back(label);
    return next;
  };

  std::vector<std::vector<int>> children;
  std::vector<int> parent;
  auto grow = [&](int node) {
    while (static_cast<int>(children.size()) <= node) {
      children.emplace_back();
      parent.push_back(-1);
    }
  };

  for (const auto& [p, c] : edges) {
    if (p == c) throw ValidationError("cycle detected: self edge '" + p + "'");
    const int pi = intern(p);
    const int ci = intern(c);
    grow(std::max(pi, ci));
    if (parent[ci] != -1)
      throw ValidationError("duplicate child label '" + c + "'");
    parent[ci] = pi;
    children[pi].push_back(ci);
  }
  for (const auto& s : singletons) {
    if (id.count(s) && !edges.empty())
      throw ValidationError("label '" + s + "' declared both as node and edge");
    intern(s);
    grow(id[s]);
  }

  const int n = static_cast<int>(labels.size());
  if (n == 0) throw ValidationError("empty hierarchy");

  std::vector<int> roots;
  for (int i = 0; i < n; ++i)
    if (parent[i] == -1) roots.push_back(i);
  if (roots.empty()) throw ValidationError("cycle detected: no root node");
  if (roots.size() > 1) {
    std::ostringstream msg;
    msg << "disconnected hierarchy: multiple roots (";
    for (size_t i = 0; i < roots.size(); ++i)
      msg << (i ? ", " : "") << labels[roots[i]];
    msg << ")";
    throw ValidationError(msg.str());
  }

  // BFS from the root: reachability check and level assignment.
  std::vector<int> level(n, -1);
  std::vector<int> queue{roots[0]};
  level[roots[0]] = 0;
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    const int u = queue[qi];
    for (int c : children[u]) {
      level[c] = level[u] + 1;
      queue.push_back(c);
    }
  }
  for (int i = 0; i < n; ++i)
    if (level[i] < 0)
      throw ValidationError("disconnected node '" + labels[i] + "'");

  std::vector<int> leaves;
  for (int i = 0; i < n; ++i)
    if (children[i].empty()) leaves.push_back(i);
  const int m = static_cast<int>(leaves.size());

  std::vector<int> leaf_col(n, -1);
  for (int j = 0; j < m; ++j) leaf_col[leaves[j]] = j;

  Matrix s = Matrix::Zero(n, m);
  // Post-order accumulation of descendant-leaf indicators.
  std::vector<int> order(queue.rbegin(), queue.rend());
  for (int u : order) {
    if (children[u].empty()) {
      s(u, leaf_col[u]) = 1.0;
    } else {
      for (int c : children[u]) s.row(u) += s.row(c);
    }
  }

  Hierarchy h;
  h.labels = std::move(labels);
  h.s_matrix = std::move(s);
  h.basis_indices = std::move(leaves);
  h.levels = std::move(level);
  h.structural_weights = h.s_matrix.cwiseAbs().rowwise().sum();
  h.constraint_matrix = constraint_from(h.s_matrix, h.basis_indices);
  check_construction(h);
  return h;
}

Hierarchy build_from_groups(const GroupSpec& spec) {
  if (spec.bottom_keys.empty()) throw ValidationError("empty bottom set");

  const int d = static_cast<int>(spec.dimensions.size());
  std::map<std::string, int> dim_id;
  for (int i = 0; i < d; ++i) {
    if (dim_id.count(spec.dimensions[i].name))
      throw ValidationError("duplicate dimension '" + spec.dimensions[i].name +
                            "'");
    dim_id[spec.dimensions[i].name] = i;
  }

  const int m = static_cast<int>(spec.bottom_keys.size());
  for (const auto& key : spec.bottom_keys) {
    if (static_cast<int>(key.size()) != d)
      throw ValidationError("bottom key must assign one value per dimension");
    for (int i = 0; i < d; ++i) {
      const auto& vals = spec.dimensions[i].values;
      if (std::find(vals.begin(), vals.end(), key[i]) == vals.end())
        throw ValidationError("bottom key value '" + key[i] +
                              "' not in dimension '" + spec.dimensions[i].name +
                              "'");
    }
  }

  auto join = [](const std::vector<std::string>& parts) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
      if (i) out += "/";
      out += parts[i];
    }
    return out;
  };

  struct Row {
    std::string label;
    int level;
    std::vector<std::pair<int, std::string>> match;  // (dim, value) filters
  };
  std::vector<Row> agg_rows;

  for (size_t a = 0; a < spec.aggregates.size(); ++a) {
    std::vector<int> dims;
    for (const auto& name : spec.aggregates[a]) {
      auto it = dim_id.find(name);
      if (it == dim_id.end())
        throw ValidationError("aggregate references unknown dimension '" +
                              name + "'");
      dims.push_back(it->second);
    }
    if (dims.empty()) {
      agg_rows.push_back({"Total", static_cast<int>(a), {}});
      continue;
    }
    // Cross product of the subset's values, rightmost dimension fastest.
    std::vector<int> idx(dims.size(), 0);
    while (true) {
      Row row;
      row.level = static_cast<int>(a);
      std::vector<std::string> parts;
      for (size_t j = 0; j < dims.size(); ++j) {
        const std::string& v = spec.dimensions[dims[j]].values[idx[j]];
        row.match.emplace_back(dims[j], v);
        parts.push_back(v);
      }
      row.label = join(parts);
      agg_rows.push_back(std::move(row));
      int j = static_cast<int>(dims.size()) - 1;
      while (j >= 0 &&
             ++idx[j] ==
                 static_cast<int>(spec.dimensions[dims[j]].values.size())) {
        idx[j] = 0;
        --j;
      }
      if (j < 0) break;
    }
  }

  const int n_agg = static_cast<int>(agg_rows.size());
  const int n = n_agg + m;

  Hierarchy h;
  h.labels.reserve(n);
  h.levels.reserve(n);
  for (const auto& row : agg_rows) {
    h.labels.push_back(row.label);
    h.levels.push_back(row.level);
  }
  for (const auto& key : spec.bottom_keys) {
    h.labels.push_back(join(key));
    h.levels.push_back(static_cast<int>(spec.aggregates.size()));
  }
  {
    std::set<std::string> seen;
    for (const auto& label : h.labels)
      if (!seen.insert(label).second)
        throw ValidationError("duplicate labels: '" + label + "'");
  }

  Matrix s = Matrix::Zero(n, m);
  for (int r = 0; r < n_agg; ++r) {
    for (int c = 0; c < m; ++c) {
      bool match = true;
      for (const auto& [dim, value] : agg_rows[r].match)
        if (spec.bottom_keys[c][dim] != value) {
          match = false;
          break;
        }
      if (match) s(r, c) = 1.0;
    }
  }
  for (int c = 0; c < m; ++c) s(n_agg + c, c) = 1.0;

  h.s_matrix = std::move(s);
  h.basis_indices.resize(m);
  for (int c = 0; c < m; ++c) h.basis_indices[c] = n_agg + c;
  h.structural_weights = h.s_matrix.cwiseAbs().rowwise().sum();
  h.constraint_matrix = constraint_from(h.s_matrix, h.basis_indices);
  check_construction(h);
  return h;
}

BasisCheck check_basis(const Hierarchy& h, const std::vector<int>& candidate) {
  const int m = h.m();
  if (static_cast<int>(candidate.size()) != m)
    throw ValidationError("basis candidate has " +
                          std::to_string(candidate.size()) + " series, need " +
                          std::to_string(m));
  std::set<int> seen;
  for (int c : candidate) {
    if (c < 0 || c >= h.n())
      throw ValidationError("basis index " + std::to_string(c) +
                            " out of range");
    if (!seen.insert(c).second)
      throw ValidationError("repeated index " + std::to_string(c) +
                            " in basis candidate");
  }

  Matrix sj(m, m);
  for (int i = 0; i < m; ++i) sj.row(i) = h.s_matrix.row(candidate[i]);

  Eigen::JacobiSVD<Matrix> svd(sj);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(m - 1);
  if (smax <= 0.0 || smin / smax < kRankTolerance) {
    int rank = 0;
    for (int i = 0; i < m; ++i)
      if (svd.singularValues()(i) > kRankTolerance * smax) ++rank;
    std::ostringstream msg;
    msg << "rows are rank deficient: rank " << rank << " < " << m
        << " (sigma_min/sigma_max = " << (smax > 0 ? smin / smax : 0.0) << ")";
    return {false, msg.str()};
  }
  return {true, ""};
}

Hierarchy rebase(const Hierarchy& h, const std::vector<int>& new_basis) {
  const BasisCheck check = check_basis(h, new_basis);
  if (!check.valid)
    throw ValidationError("invalid basis: " + check.reason);

  const int m = h.m();
  Matrix sj(m, m);
  for (int i = 0; i < m; ++i) sj.row(i) = h.s_matrix.row(new_basis[i]);

  // S* = S * Sj^{-1}, computed as a solve on the transposed system.
  Matrix s_star = sj.transpose()
                      .fullPivLu()
                      .solve(h.s_matrix.transpose())
                      .transpose();
  // Basis rows are identity up to solver roundoff; snap them.
  for (int i = 0; i < m; ++i) {
    s_star.row(new_basis[i]).setZero();
    s_star(new_basis[i], i) = 1.0;
  }

  Hierarchy out;
  out.labels = h.labels;
  out.s_matrix = std::move(s_star);
  out.basis_indices = new_basis;
  out.levels = h.levels;
  out.structural_weights = h.structural_weights;
  out.constraint_matrix = constraint_from(out.s_matrix, out.basis_indices);
  check_construction(out);
  return out;
}

BasisSelection selection_from_basis(const Hierarchy& h,
                                    const std::vector<int>& basis, int k) {
  if (k < 0 || k > static_cast<int>(basis.size()))
    throw ValidationError("immutable count out of range");
  const Hierarchy rb = rebase(h, basis);
  const int n = h.n();
  const int m = h.m();

  BasisSelection sel;
  sel.mutable_basis.assign(basis.begin(), basis.end() - k);
  sel.immutable_basis.assign(basis.end() - k, basis.end());
  std::vector<bool> in_basis(n, false);
  for (int b : basis) in_basis[b] = true;
  for (int i = 0; i < n; ++i)
    if (!in_basis[i]) sel.determined.push_back(i);

  const int nd = n - m;
  sel.s1.resize(nd, m - k);
  sel.s2.resize(nd, k);
  for (int r = 0; r < nd; ++r) {
    sel.s1.row(r) = rb.s_matrix.row(sel.determined[r]).head(m - k);
    sel.s2.row(r) = rb.s_matrix.row(sel.determined[r]).tail(k);
  }
  return sel;
}

BasisSelection partition(const Hierarchy& h,
                         const std::vector<std::string>& immutable) {
  const std::vector<int> u_idx = h.indices_of(immutable);
  {
    std::set<int> seen(u_idx.begin(), u_idx.end());
    if (seen.size() != u_idx.size())
      throw ValidationError("immutable set contains repeated series");
  }
  const int m = h.m();
  const int k = static_cast<int>(u_idx.size());
  if (k > m)
    throw ValidationError("immutable set larger than basis dimension (" +
                          std::to_string(k) + " > " + std::to_string(m) + ")");

  RankTracker tracker(m);
  for (int u : u_idx)
    if (!tracker.try_add(h.s_matrix.row(u).transpose()))
      throw ValidationError(
          "no valid basis contains the immutable set: its rows are linearly "
          "dependent (offending series '" + h.labels[u] + "')");

  std::vector<bool> taken(h.n(), false);
  for (int u : u_idx) taken[u] = true;

  // Prefer current basis series, then anything else; index order breaks ties.
  std::vector<int> candidates = h.basis_indices;
  for (int i = 0; i < h.n(); ++i) candidates.push_back(i);

  std::vector<int> mutable_part;
  for (int c : candidates) {
    if (tracker.rank() == m) break;
    if (taken[c]) continue;
    if (tracker.try_add(h.s_matrix.row(c).transpose())) {
      taken[c] = true;
      mutable_part.push_back(c);
    }
  }
  if (tracker.rank() < m)
    throw ValidationError(
        "no valid basis contains the immutable set (rank stalls at " +
        std::to_string(tracker.rank()) + " of " + std::to_string(m) + ")");

  std::sort(mutable_part.begin(), mutable_part.end());
  std::vector<int> basis = mutable_part;
  basis.insert(basis.end(), u_idx.begin(), u_idx.end());
  return selection_from_basis(h, basis, k);
}

Matrix partitioned_s_matrix(const BasisSelection& sel) {
  const int n = sel.n();
  const int m = sel.m();
  const int k = sel.k();
  Matrix s = Matrix::Zero(n, m);
  for (size_t r = 0; r < sel.determined.size(); ++r) {
    s.row(sel.determined[r]).head(m - k) = sel.s1.row(static_cast<int>(r));
    s.row(sel.determined[r]).tail(k) = sel.s2.row(static_cast<int>(r));
  }
  for (size_t j = 0; j < sel.mutable_basis.size(); ++j)
    s(sel.mutable_basis[j], static_cast<int>(j)) = 1.0;
  for (size_t j = 0; j < sel.immutable_basis.size(); ++j)
    s(sel.immutable_basis[j], m - k + static_cast<int>(j)) = 1.0;
  return s;
}

}  // namespace recon
