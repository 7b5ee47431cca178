#include "mvgrl/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace mvgrl {

SparseMatrix SparseMatrix::from_triplets(int n_rows, int n_cols,
                                         std::vector<Triplet> triplets) {
  check_arg(n_rows >= 0 && n_cols >= 0, "sparse: negative dimensions");
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(std::get<0>(a), std::get<1>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b));
  });

  SparseMatrix s;
  s.n_rows = n_rows;
  s.n_cols = n_cols;
  s.row_offsets.assign(n_rows + 1, 0);
  s.col_indices.reserve(triplets.size());
  s.values.reserve(triplets.size());

  size_t i = 0;
  for (int r = 0; r < n_rows; ++r) {
    while (i < triplets.size() && std::get<0>(triplets[i]) == r) {
      const int c = std::get<1>(triplets[i]);
      check_arg(c >= 0 && c < n_cols && std::get<0>(triplets[i]) >= 0,
                "sparse: triplet index out of range");
      Real v = std::get<2>(triplets[i]);
      ++i;
      while (i < triplets.size() && std::get<0>(triplets[i]) == r &&
             std::get<1>(triplets[i]) == c) {
        v += std::get<2>(triplets[i]);
        ++i;
      }
      if (v != 0.0) {
        s.col_indices.push_back(c);
        s.values.push_back(v);
      }
    }
    s.row_offsets[r + 1] = static_cast<int>(s.values.size());
  }
  check_arg(i == triplets.size(), "sparse: triplet row index out of range");
  return s;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  SparseMatrix s;
  s.n_rows = static_cast<int>(dense.rows());
  s.n_cols = static_cast<int>(dense.cols());
  s.row_offsets.assign(s.n_rows + 1, 0);
  for (int r = 0; r < s.n_rows; ++r) {
    for (int c = 0; c < s.n_cols; ++c) {
      if (dense(r, c) != 0.0) {
        s.col_indices.push_back(c);
        s.values.push_back(dense(r, c));
      }
    }
    s.row_offsets[r + 1] = static_cast<int>(s.values.size());
  }
  return s;
}

SparseMatrix SparseMatrix::identity(int n) {
  SparseMatrix s;
  s.n_rows = s.n_cols = n;
  s.row_offsets.resize(n + 1);
  s.col_indices.resize(n);
  s.values.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    s.row_offsets[i] = i;
    s.col_indices[i] = i;
  }
  s.row_offsets[n] = n;
  return s;
}

Matrix SparseMatrix::to_dense() const {
  Matrix d = Matrix::Zero(n_rows, n_cols);
  for (int r = 0; r < n_rows; ++r) {
    for (int k = row_begin(r); k < row_end(r); ++k) {
      d(r, col_indices[k]) = values[k];
    }
  }
  return d;
}

SparseMatrix SparseMatrix::transposed() const {
  SparseMatrix t;
  t.n_rows = n_cols;
  t.n_cols = n_rows;
  t.row_offsets.assign(n_cols + 1, 0);
  for (int c : col_indices) ++t.row_offsets[c + 1];
  for (int i = 0; i < n_cols; ++i) t.row_offsets[i + 1] += t.row_offsets[i];
  t.col_indices.resize(values.size());
  t.values.resize(values.size());
  std::vector<int> cursor(t.row_offsets.begin(), t.row_offsets.end() - 1);
  for (int r = 0; r < n_rows; ++r) {
    for (int k = row_begin(r); k < row_end(r); ++k) {
      const int pos = cursor[col_indices[k]]++;
      t.col_indices[pos] = r;
      t.values[pos] = values[k];
    }
  }
  return t;
}

// Column-outer loops keep the dense operand's column-major storage
// contiguous; the CSR arrays are rescanned per column but stay cache-hot.
Matrix SparseMatrix::multiply(const Matrix& x) const {
  check_arg(x.rows() == n_cols, "sparse multiply: inner dimension mismatch");
  Matrix y = Matrix::Zero(n_rows, x.cols());
  for (int c = 0; c < x.cols(); ++c) {
    const Real* xc = x.col(c).data();
    Real* yc = y.col(c).data();
    for (int r = 0; r < n_rows; ++r) {
      Real acc = 0.0;
      for (int k = row_begin(r); k < row_end(r); ++k) {
        acc += values[k] * xc[col_indices[k]];
      }
      yc[r] = acc;
    }
  }
  return y;
}

Matrix SparseMatrix::multiply_transposed(const Matrix& x) const {
  check_arg(x.rows() == n_rows, "sparse multiply_transposed: dimension mismatch");
  Matrix y = Matrix::Zero(n_cols, x.cols());
  for (int c = 0; c < x.cols(); ++c) {
    const Real* xc = x.col(c).data();
    Real* yc = y.col(c).data();
    for (int r = 0; r < n_rows; ++r) {
      const Real xr = xc[r];
      for (int k = row_begin(r); k < row_end(r); ++k) {
        yc[col_indices[k]] += values[k] * xr;
      }
    }
  }
  return y;
}

Vector SparseMatrix::row_sums() const {
  Vector s = Vector::Zero(n_rows);
  for (int r = 0; r < n_rows; ++r) {
    for (int k = row_begin(r); k < row_end(r); ++k) s[r] += values[k];
  }
  return s;
}

std::vector<int> SparseMatrix::degrees() const {
  std::vector<int> d(n_rows);
  for (int r = 0; r < n_rows; ++r) d[r] = row_end(r) - row_begin(r);
  return d;
}

bool SparseMatrix::is_symmetric(Real tol) const {
  if (n_rows != n_cols) return false;
  for (int r = 0; r < n_rows; ++r) {
    for (int k = row_begin(r); k < row_end(r); ++k) {
      if (std::abs(at(col_indices[k], r) - values[k]) > tol) return false;
    }
  }
  return true;
}

bool SparseMatrix::has_zero_diagonal() const {
  for (int r = 0; r < std::min(n_rows, n_cols); ++r) {
    if (at(r, r) != 0.0) return false;
  }
  return true;
}

Real SparseMatrix::at(int r, int c) const {
  const auto first = col_indices.begin() + row_begin(r);
  const auto last = col_indices.begin() + row_end(r);
  const auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return 0.0;
  return values[row_begin(r) + static_cast<int>(it - first)];
}

SparseMatrix SparseMatrix::submatrix(const std::vector<int>& nodes) const {
  std::vector<int> dense_map(n_cols, -1);
  for (size_t i = 0; i < nodes.size(); ++i) {
    check_arg(nodes[i] >= 0 && nodes[i] < n_rows && nodes[i] < n_cols,
              "submatrix: node index out of range");
    if (i > 0) check_arg(nodes[i] > nodes[i - 1], "submatrix: nodes must be sorted and unique");
    dense_map[nodes[i]] = static_cast<int>(i);
  }
  SparseMatrix s;
  s.n_rows = s.n_cols = static_cast<int>(nodes.size());
  s.row_offsets.assign(nodes.size() + 1, 0);
  for (size_t i = 0; i < nodes.size(); ++i) {
    const int r = nodes[i];
    for (int k = row_begin(r); k < row_end(r); ++k) {
      const int c = dense_map[col_indices[k]];
      if (c >= 0) {
        s.col_indices.push_back(c);
        s.values.push_back(values[k]);
      }
    }
    s.row_offsets[i + 1] = static_cast<int>(s.values.size());
  }
  return s;
}

void SparseMatrix::validate() const {
  check_arg(static_cast<int>(row_offsets.size()) == n_rows + 1,
            "sparse: row_offsets size mismatch");
  check_arg(row_offsets.front() == 0 && row_offsets.back() == nnz(),
            "sparse: row_offsets must span [0, nnz]");
  for (int r = 0; r < n_rows; ++r) {
    check_arg(row_end(r) >= row_begin(r), "sparse: decreasing row_offsets");
    for (int k = row_begin(r); k < row_end(r); ++k) {
      check_arg(col_indices[k] >= 0 && col_indices[k] < n_cols,
                "sparse: column index out of range");
      check_arg(k == row_begin(r) || col_indices[k] > col_indices[k - 1],
                "sparse: columns not strictly increasing within a row");
      check_arg(values[k] != 0.0, "sparse: stored explicit zero");
    }
  }
}

}  // namespace mvgrl
