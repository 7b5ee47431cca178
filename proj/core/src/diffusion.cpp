#include "mvgrl/diffusion.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mvgrl {

ViewKind view_kind_from_string(const std::string& s) {
  if (s == "adjacency") return ViewKind::kAdjacency;
  if (s == "ppr") return ViewKind::kPpr;
  if (s == "heat") return ViewKind::kHeat;
  if (s == "distance") return ViewKind::kDistance;
  throw ValidationError("unknown view kind: " + s);
}

std::string to_string(ViewKind v) {
  switch (v) {
    case ViewKind::kAdjacency: return "adjacency";
    case ViewKind::kPpr: return "ppr";
    case ViewKind::kHeat: return "heat";
    case ViewKind::kDistance: return "distance";
  }
  return "?";
}

void DiffusionCoefficients::validate() const {
  if (theta) {
    Real sum = 0.0;
    for (Real w : *theta) {
      check_arg(w >= 0.0 && w <= 1.0, "diffusion: explicit theta_k must lie in [0,1]");
      sum += w;
    }
    check_arg(sum <= 1.0 + 1e-9, "diffusion: explicit theta must sum to at most 1");
  }
  if (kind == Kind::kPpr) check_arg(alpha > 0.0 && alpha < 1.0, "diffusion: alpha must be in (0,1)");
  if (kind == Kind::kHeat) check_arg(t > 0.0, "diffusion: t must be > 0");
}

void ViewSpec::validate() const {
  coefficients.validate();
  check_arg(sparsify_epsilon >= 0.0, "view: sparsify_epsilon must be >= 0");
  check_arg(!(sparsify_epsilon > 0.0 && sparsify_topk.has_value()),
            "view: at most one of epsilon/topk may be active");
  if (sparsify_topk) check_arg(*sparsify_topk >= 1, "view: topk must be >= 1");
}

Matrix generalized_diffusion(const Matrix& transition, const std::vector<Real>& theta,
                             int truncation) {
  check_arg(transition.rows() == transition.cols(), "generalized_diffusion: T must be square");
  check_arg(static_cast<int>(theta.size()) == truncation + 1,
            "generalized_diffusion: theta must have K+1 entries");
  const int n = static_cast<int>(transition.rows());
  Matrix power = Matrix::Identity(n, n);
  Matrix out = theta[0] * power;
  for (int k = 1; k <= truncation; ++k) {
    power = power * transition;
    out += theta[k] * power;
  }
  return out;
}

namespace {

Vector checked_degrees(const SparseMatrix& a, const char* who) {
  check_arg(a.n_rows == a.n_cols, std::string(who) + ": input must be square");
  check_arg(a.is_symmetric(), std::string(who) + ": input must be symmetric");
  Vector deg = a.row_sums();
  for (int i = 0; i < a.n_rows; ++i) {
    check_arg(deg[i] > 0.0, std::string(who) +
              ": zero-degree node " + std::to_string(i) + "; patch isolated nodes first");
  }
  return deg;
}

}  // namespace

Matrix ppr_diffusion(const SparseMatrix& a, Real alpha, int dense_cap) {
  check_arg(alpha > 0.0 && alpha < 1.0, "ppr_diffusion: alpha must be in (0,1)");
  check_arg(a.n_rows <= dense_cap,
            "ppr_diffusion: graph exceeds the dense cap; use the truncated series "
            "with sparsification instead");
  const Vector deg = checked_degrees(a, "ppr_diffusion");
  const int n = a.n_rows;

  Vector inv_sqrt = deg.array().rsqrt();
  // I - (1-alpha) D^-1/2 A D^-1/2 is symmetric positive definite.
  Matrix system = Matrix::Identity(n, n);
  for (int r = 0; r < n; ++r) {
    for (int k = a.row_begin(r); k < a.row_end(r); ++k) {
      const int c = a.col_indices[k];
      system(r, c) -= (1.0 - alpha) * a.values[k] * inv_sqrt[r] * inv_sqrt[c];
    }
  }
  Eigen::LLT<Matrix> llt(system);
  check_run(llt.info() == Eigen::Success, "ppr_diffusion: factorization failed");
  Matrix out = llt.solve(Matrix::Identity(n, n) * alpha);
  out = ((out + out.transpose()) * 0.5).eval();
  return out;
}

Matrix heat_diffusion(const SparseMatrix& a, Real t, int dense_cap) {
  check_arg(t > 0.0, "heat_diffusion: t must be > 0");
  check_arg(a.n_rows <= dense_cap,
            "heat_diffusion: graph exceeds the dense cap; use the truncated series "
            "with sparsification instead");
  const Vector deg = checked_degrees(a, "heat_diffusion");
  const int n = a.n_rows;

  // G = t (A D^-1 - I); A D^-1 is column-stochastic.
  Matrix generator = Matrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    for (int k = a.row_begin(r); k < a.row_end(r); ++k) {
      const int c = a.col_indices[k];
      generator(r, c) = t * a.values[k] / deg[c];
    }
    generator(r, r) -= t;
  }

  const Real norm1 = generator.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  while (norm1 / std::pow(2.0, squarings) > 0.5) ++squarings;
  const Matrix b = generator / std::pow(2.0, squarings);

  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * b / static_cast<Real>(k)).eval();
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

Matrix distance_view(const SparseMatrix& a) {
  check_arg(a.n_rows == a.n_cols, "distance_view: input must be square");
  check_arg(a.is_symmetric(), "distance_view: input must be symmetric");
  const int n = a.n_rows;
  const int kInf = std::numeric_limits<int>::max() / 4;

  std::vector<int> dist(static_cast<size_t>(n) * n, kInf);
  auto d = [&dist, n](int i, int j) -> int& { return dist[static_cast<size_t>(i) * n + j]; };
  for (int i = 0; i < n; ++i) d(i, i) = 0;
  for (int r = 0; r < n; ++r) {
    for (int k = a.row_begin(r); k < a.row_end(r); ++k) d(r, a.col_indices[k]) = 1;
  }
  for (int k = 0; k < n; ++k) {
    for (int i = 0; i < n; ++i) {
      const int dik = d(i, k);
      if (dik >= kInf) continue;
      for (int j = 0; j < n; ++j) {
        if (dik + d(k, j) < d(i, j)) d(i, j) = dik + d(k, j);
      }
    }
  }

  Matrix out(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      out(i, j) = (i != j && d(i, j) < kInf) ? 1.0 / d(i, j) : 0.0;
    }
    const Real m = out.row(i).maxCoeff();
    const Vector e = (out.row(i).array() - m).exp();
    out.row(i) = e / e.sum();
  }
  return out;
}

SparseMatrix sparsify(const Matrix& s, const ViewSpec& spec) {
  spec.validate();
  check_arg((s.array() >= 0.0).all(), "sparsify: input must be non-negative");
  const int n_rows = static_cast<int>(s.rows());
  const int n_cols = static_cast<int>(s.cols());

  std::vector<SparseMatrix::Triplet> kept;
  for (int r = 0; r < n_rows; ++r) {
    const Real row_sum = s.row(r).sum();
    std::vector<int> cols;
    if (spec.sparsify_topk) {
      const int k = std::min(*spec.sparsify_topk, n_cols);
      cols.resize(n_cols);
      std::iota(cols.begin(), cols.end(), 0);
      std::partial_sort(cols.begin(), cols.begin() + k, cols.end(), [&](int a, int b) {
        return s(r, a) != s(r, b) ? s(r, a) > s(r, b) : a < b;
      });
      cols.resize(k);
      std::sort(cols.begin(), cols.end());
    } else {
      for (int c = 0; c < n_cols; ++c) {
        if (s(r, c) >= spec.sparsify_epsilon) cols.push_back(c);
      }
    }
    Real kept_sum = 0.0;
    for (int c : cols) kept_sum += s(r, c);
    if (cols.empty() || (kept_sum == 0.0 && row_sum > 0.0)) {
      throw ValidationError("sparsify: row " + std::to_string(r) +
                            " lost all entries; use a smaller epsilon");
    }
    const Real rescale = kept_sum > 0.0 ? row_sum / kept_sum : 0.0;
    for (int c : cols) kept.emplace_back(r, c, s(r, c) * rescale);
  }
  return SparseMatrix::from_triplets(n_rows, n_cols, std::move(kept));
}

SparseMatrix patch_isolated_nodes(const SparseMatrix& a) {
  std::vector<SparseMatrix::Triplet> t;
  t.reserve(a.values.size() + 8);
  for (int r = 0; r < a.n_rows; ++r) {
    if (a.row_begin(r) == a.row_end(r)) {
      t.emplace_back(r, r, 1.0);
    } else {
      for (int k = a.row_begin(r); k < a.row_end(r); ++k) {
        t.emplace_back(r, a.col_indices[k], a.values[k]);
      }
    }
  }
  return SparseMatrix::from_triplets(a.n_rows, a.n_cols, std::move(t));
}

std::vector<Real> ppr_theta(Real alpha, int truncation) {
  std::vector<Real> theta(truncation + 1);
  Real w = alpha;
  for (int k = 0; k <= truncation; ++k) {
    theta[k] = w;
    w *= (1.0 - alpha);
  }
  return theta;
}

std::vector<Real> heat_theta(Real t, int truncation) {
  std::vector<Real> theta(truncation + 1);
  Real w = std::exp(-t);
  for (int k = 0; k <= truncation; ++k) {
    theta[k] = w;
    w *= t / static_cast<Real>(k + 1);
  }
  return theta;
}

}  // namespace mvgrl
