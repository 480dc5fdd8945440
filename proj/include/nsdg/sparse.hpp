#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdg {

using Vector = Eigen::VectorXd;

struct Triplet {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

/// Compressed sparse row matrix. Columns are sorted within each row and unique.
/// Explicitly stored zeros count as structural nonzeros.
class SparseMatrix {
public:
  SparseMatrix() = default;
  SparseMatrix(int rows, int cols);
  SparseMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr, std::vector<int> col_idx,
               std::vector<double> values);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(col_idx_.size()); }

  std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
  std::span<const int> col_idx() const { return col_idx_; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Stored value at (r, c), 0 if not in the pattern.
  double coeff(int r, int c) const;
  /// Position of (r, c) in values(), -1 if not in the pattern.
  std::int64_t find(int r, int c) const;

  Vector operator*(const Vector& x) const;
  SparseMatrix transpose() const;
  Eigen::MatrixXd to_dense() const;
  void scale(double a);

private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<int> col_idx_;
  std::vector<double> values_;
};

/// Sums duplicate entries in input order and sorts columns.
SparseMatrix finalize(int rows, int cols, std::vector<Triplet> triplets);

/// a*A + b*B on the union pattern.
SparseMatrix add(double a, const SparseMatrix& A, double b, const SparseMatrix& B);

/// Averages mirrored entries in place; the pattern must be symmetric.
void symmetrize(SparseMatrix& m);
/// max |a_ij - a_ji| / max |a_ij| (0 for the zero matrix).
double relative_asymmetry(const SparseMatrix& m);

/// Structural nonzeros of the matrix handed to the factorization.
std::int64_t count_nze(const SparseMatrix& m);

/// Collects a block sparsity pattern, then accumulates dense local blocks into it.
class BlockAssembler {
public:
  BlockAssembler(int rows, int cols);

  /// Pattern phase.
  void reserve_block(std::span<const int> rows, std::span<const int> cols);
  /// Freezes the pattern; afterwards add_block() accumulates values.
  void compress();
  /// local is row-major rows.size() x cols.size().
  void add_block(std::span<const int> rows, std::span<const int> cols, std::span<const double> local);
  SparseMatrix release();

private:
  int rows_;
  int cols_;
  std::vector<std::vector<int>> pending_;
  SparseMatrix matrix_;
  bool compressed_ = false;
};

/// [[A, B^T, 0], [B, 0, c], [0, c^T, 0]] of size n_u + n_p + 1.
SparseMatrix saddle_matrix(const SparseMatrix& A, const SparseMatrix& B, const Vector& c);

class SingularMatrixError : public std::runtime_error {
public:
  SingularMatrixError(int pivot, const std::string& what) : std::runtime_error(what), pivot_(pivot) {}
  /// Row/column index of the (first) vanishing pivot.
  int pivot() const { return pivot_; }

private:
  int pivot_;
};

/// Sparse direct solver. Exactly symmetric matrices use a fill-reducing simplicial LDL^T
/// (CHOLMOD); zero-diagonal rows of saddle-point systems receive a tiny negative shift
/// that iterative refinement against the original matrix removes. Other matrices use
/// LU (UMFPACK). Immutable after construction; solves are reentrant.
class Factorization {
public:
  explicit Factorization(SparseMatrix matrix);
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  Factorization(const Factorization&) = delete;
  Factorization& operator=(const Factorization&) = delete;

  Vector solve(const Vector& rhs) const;
  const SparseMatrix& matrix() const { return matrix_; }
  int size() const { return matrix_.rows(); }
  /// Nonzeros in the computed factors.
  std::int64_t factor_nnz() const { return factor_nnz_; }

private:
  struct Impl;
  Vector apply_inverse(const Vector& rhs) const;

  SparseMatrix matrix_;
  std::unique_ptr<Impl> impl_;
  std::int64_t factor_nnz_ = 0;
};

Factorization factorize(SparseMatrix matrix);
Vector solve(const Factorization& f, const Vector& rhs);

}  // namespace nsdg
