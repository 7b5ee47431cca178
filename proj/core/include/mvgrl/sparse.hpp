#pragma once

#include "mvgrl/common.hpp"

#include <tuple>
#include <vector>

namespace mvgrl {

/// Compressed sparse row matrix of reals.
///
/// Invariants (enforced by the factories and validate()):
///   - row_offsets has n_rows+1 entries, non-decreasing, last == values.size()
///   - col_indices strictly increasing within each row, all in [0, n_cols)
///   - no stored exact zeros
struct SparseMatrix {
  int n_rows = 0;
  int n_cols = 0;
  std::vector<int> row_offsets{0};
  std::vector<int> col_indices;
  std::vector<Real> values;

  using Triplet = std::tuple<int, int, Real>;

  /// Build from (row, col, value) triplets; duplicates are summed and exact
  /// zeros pruned.
  static SparseMatrix from_triplets(int n_rows, int n_cols,
                                    std::vector<Triplet> triplets);

  /// Build from a dense matrix, pruning exact zeros.
  static SparseMatrix from_dense(const Matrix& dense);

  static SparseMatrix identity(int n);

  int nnz() const { return static_cast<int>(values.size()); }
  int row_begin(int r) const { return row_offsets[r]; }
  int row_end(int r) const { return row_offsets[r + 1]; }

  Matrix to_dense() const;
  SparseMatrix transposed() const;

  /// y = S * x for dense x (n_cols x d).
  Matrix multiply(const Matrix& x) const;

  /// y = S^T * x without materializing the transpose.
  Matrix multiply_transposed(const Matrix& x) const;

  Vector row_sums() const;
  /// Number of stored entries per row interpreted as degrees.
  std::vector<int> degrees() const;

  bool is_symmetric(Real tol = 0.0) const;
  bool has_zero_diagonal() const;

  /// Entry lookup by binary search; 0 if not stored.
  Real at(int r, int c) const;

  /// Submatrix induced by a sorted, duplicate-free index set applied to both
  /// rows and columns.
  SparseMatrix submatrix(const std::vector<int>& nodes) const;

  /// Throws ValidationError if any structural invariant is broken.
  void validate() const;

  bool operator==(const SparseMatrix&) const = default;
};

}  // namespace mvgrl
