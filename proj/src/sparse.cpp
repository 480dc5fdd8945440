#include "nsdg/sparse.hpp"

#include <suitesparse/cholmod.h>
#include <suitesparse/umfpack.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace nsdg {

SparseMatrix::SparseMatrix(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix::SparseMatrix(int rows, int cols, std::vector<std::int64_t> row_ptr, std::vector<int> col_idx,
                           std::vector<double> values)
    : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (static_cast<int>(row_ptr_.size()) != rows + 1 || col_idx_.size() != values_.size() ||
      row_ptr_.back() != static_cast<std::int64_t>(col_idx_.size()))
    throw std::invalid_argument("inconsistent CSR arrays");
}

std::int64_t SparseMatrix::find(int r, int c) const {
  const auto first = col_idx_.begin() + row_ptr_[r];
  const auto last = col_idx_.begin() + row_ptr_[r + 1];
  const auto it = std::lower_bound(first, last, c);
  return it != last && *it == c ? it - col_idx_.begin() : -1;
}

double SparseMatrix::coeff(int r, int c) const {
  const auto p = find(r, c);
  return p < 0 ? 0.0 : values_[p];
}

Vector SparseMatrix::operator*(const Vector& x) const {
  if (x.size() != cols_) throw std::invalid_argument("matrix-vector size mismatch");
  Vector y(rows_);
  for (int r = 0; r < rows_; ++r) {
    double s = 0.0;
    for (auto p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) s += values_[p] * x[col_idx_[p]];
    y[r] = s;
  }
  return y;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::int64_t> ptr(cols_ + 1, 0);
  for (int c : col_idx_) ++ptr[c + 1];
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  std::vector<int> idx(col_idx_.size());
  std::vector<double> val(values_.size());
  std::vector<std::int64_t> next(ptr.begin(), ptr.end() - 1);
  for (int r = 0; r < rows_; ++r)
    for (auto p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) {
      const auto q = next[col_idx_[p]]++;
      idx[q] = r;
      val[q] = values_[p];
    }
  return SparseMatrix(cols_, rows_, std::move(ptr), std::move(idx), std::move(val));
}

Eigen::MatrixXd SparseMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (auto p = row_ptr_[r]; p < row_ptr_[r + 1]; ++p) d(r, col_idx_[p]) += values_[p];
  return d;
}

void SparseMatrix::scale(double a) {
  for (double& v : values_) v *= a;
}

SparseMatrix finalize(int rows, int cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets)
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      throw std::out_of_range("triplet (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                              ") outside " + std::to_string(rows) + "x" + std::to_string(cols));
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::int64_t> ptr(rows + 1, 0);
  std::vector<int> idx;
  std::vector<double> val;
  for (std::size_t i = 0; i < triplets.size();) {
    const Triplet& t = triplets[i];
    double s = 0.0;
    std::size_t j = i;
    for (; j < triplets.size() && triplets[j].row == t.row && triplets[j].col == t.col; ++j)
      s += triplets[j].value;
    idx.push_back(t.col);
    val.push_back(s);
    ++ptr[t.row + 1];
    i = j;
  }
  std::partial_sum(ptr.begin(), ptr.end(), ptr.begin());
  return SparseMatrix(rows, cols, std::move(ptr), std::move(idx), std::move(val));
}

SparseMatrix add(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) throw std::invalid_argument("add: shape mismatch");
  std::vector<std::int64_t> ptr(A.rows() + 1, 0);
  std::vector<int> idx;
  std::vector<double> val;
  idx.reserve(std::max(A.nnz(), B.nnz()));
  val.reserve(idx.capacity());
  const auto ap = A.row_ptr(), bp = B.row_ptr();
  const auto ai = A.col_idx(), bi = B.col_idx();
  const auto av = A.values(), bv = B.values();
  for (int r = 0; r < A.rows(); ++r) {
    auto p = ap[r], q = bp[r];
    while (p < ap[r + 1] || q < bp[r + 1]) {
      const int ca = p < ap[r + 1] ? ai[p] : std::numeric_limits<int>::max();
      const int cb = q < bp[r + 1] ? bi[q] : std::numeric_limits<int>::max();
      if (ca == cb) {
        idx.push_back(ca);
        val.push_back(a * av[p++] + b * bv[q++]);
      } else if (ca < cb) {
        idx.push_back(ca);
        val.push_back(a * av[p++]);
      } else {
        idx.push_back(cb);
        val.push_back(b * bv[q++]);
      }
    }
    ptr[r + 1] = static_cast<std::int64_t>(idx.size());
  }
  return SparseMatrix(A.rows(), A.cols(), std::move(ptr), std::move(idx), std::move(val));
}

void symmetrize(SparseMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("symmetrize: matrix not square");
  const auto ptr = m.row_ptr();
  const auto idx = m.col_idx();
  auto val = m.values();
  for (int r = 0; r < m.rows(); ++r)
    for (auto p = ptr[r]; p < ptr[r + 1]; ++p) {
      const int c = idx[p];
      if (c <= r) continue;
      const std::int64_t q = m.find(c, r);
      if (q < 0) throw std::invalid_argument("symmetrize: pattern not symmetric");
      const double avg = 0.5 * (val[p] + val[q]);
      val[p] = avg;
      val[q] = avg;
    }
}

double relative_asymmetry(const SparseMatrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("relative_asymmetry: matrix not square");
  const auto ptr = m.row_ptr();
  const auto idx = m.col_idx();
  const auto val = m.values();
  double amax = 0.0, dmax = 0.0;
  for (int r = 0; r < m.rows(); ++r)
    for (auto p = ptr[r]; p < ptr[r + 1]; ++p) {
      amax = std::max(amax, std::abs(val[p]));
      const std::int64_t q = m.find(idx[p], r);
      dmax = std::max(dmax, std::abs(val[p] - (q < 0 ? 0.0 : val[q])));
    }
  return amax > 0.0 ? dmax / amax : 0.0;
}

std::int64_t count_nze(const SparseMatrix& m) { return m.nnz(); }

BlockAssembler::BlockAssembler(int rows, int cols) : rows_(rows), cols_(cols), pending_(rows) {}

void BlockAssembler::reserve_block(std::span<const int> rows, std::span<const int> cols) {
  if (compressed_) throw std::logic_error("reserve_block after compress");
  for (int r : rows) pending_[r].insert(pending_[r].end(), cols.begin(), cols.end());
}

void BlockAssembler::compress() {
  std::vector<std::int64_t> ptr(rows_ + 1, 0);
  for (int r = 0; r < rows_; ++r) {
    auto& row = pending_[r];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    ptr[r + 1] = ptr[r] + static_cast<std::int64_t>(row.size());
  }
  std::vector<int> idx;
  idx.reserve(ptr.back());
  for (auto& row : pending_) {
    idx.insert(idx.end(), row.begin(), row.end());
    std::vector<int>().swap(row);
  }
  std::vector<double> val(idx.size(), 0.0);
  matrix_ = SparseMatrix(rows_, cols_, std::move(ptr), std::move(idx), std::move(val));
  compressed_ = true;
}

void BlockAssembler::add_block(std::span<const int> rows, std::span<const int> cols,
                               std::span<const double> local) {
  if (!compressed_) throw std::logic_error("add_block before compress");
  auto values = matrix_.values();
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const auto p = matrix_.find(rows[i], cols[j]);
      if (p < 0) throw std::logic_error("add_block outside reserved pattern");
      values[p] += local[i * cols.size() + j];
    }
}

SparseMatrix BlockAssembler::release() {
  if (!compressed_) compress();
  return std::move(matrix_);
}

SparseMatrix saddle_matrix(const SparseMatrix& A, const SparseMatrix& B, const Vector& c) {
  const int nu = A.rows(), np = B.rows();
  if (A.cols() != nu || B.cols() != nu || c.size() != np) throw std::invalid_argument("saddle_matrix: shape mismatch");
  const SparseMatrix bt = B.transpose();
  const int n = nu + np + 1;
  std::vector<std::int64_t> ptr(n + 1, 0);
  std::vector<int> idx;
  std::vector<double> val;
  idx.reserve(A.nnz() + 2 * B.nnz() + 2 * np);
  val.reserve(idx.capacity());
  auto append_row = [&](const SparseMatrix& m, int r, int col_offset) {
    for (auto p = m.row_ptr()[r]; p < m.row_ptr()[r + 1]; ++p) {
      idx.push_back(m.col_idx()[p] + col_offset);
      val.push_back(m.values()[p]);
    }
  };
  for (int r = 0; r < nu; ++r) {
    append_row(A, r, 0);
    append_row(bt, r, nu);
    ptr[r + 1] = static_cast<std::int64_t>(idx.size());
  }
  for (int r = 0; r < np; ++r) {
    append_row(B, r, 0);
    idx.push_back(nu + np);
    val.push_back(c[r]);
    ptr[nu + r + 1] = static_cast<std::int64_t>(idx.size());
  }
  for (int r = 0; r < np; ++r) {
    idx.push_back(nu + r);
    val.push_back(c[r]);
  }
  ptr[n] = static_cast<std::int64_t>(idx.size());
  return SparseMatrix(n, n, std::move(ptr), std::move(idx), std::move(val));
}

namespace {

std::string umfpack_message(long status) {
  switch (status) {
    case UMFPACK_ERROR_out_of_memory: return "out of memory";
    case UMFPACK_ERROR_invalid_matrix: return "invalid matrix";
    case UMFPACK_ERROR_different_pattern: return "pattern changed";
    default: return "status " + std::to_string(status);
  }
}

bool exactly_symmetric(const SparseMatrix& m) {
  if (m.rows() != m.cols()) return false;
  const auto ptr = m.row_ptr();
  const auto idx = m.col_idx();
  const auto val = m.values();
  for (int r = 0; r < m.rows(); ++r)
    for (auto p = ptr[r]; p < ptr[r + 1]; ++p) {
      const auto q = m.find(idx[p], r);
      if (q < 0 || val[q] != val[p]) return false;
    }
  return true;
}

double residual_ratio(const SparseMatrix& a, const Vector& x, const Vector& b) {
  const double nb = b.lpNorm<Eigen::Infinity>();
  const double r = (b - a * x).lpNorm<Eigen::Infinity>();
  return nb > 0.0 ? r / nb : r;
}

}  // namespace

struct Factorization::Impl {
  // LDL^T path
  cholmod_common common{};
  bool started = false;
  cholmod_factor* factor = nullptr;
  bool regularized = false;
  // LU path
  std::vector<long> ap, ai;
  void* numeric = nullptr;

  ~Impl() {
    if (factor) cholmod_l_free_factor(&factor, &common);
    if (started) cholmod_l_finish(&common);
    if (numeric) umfpack_dl_free_numeric(&numeric);
  }
};

namespace {

// Zero-diagonal rows of a symmetric saddle matrix get -eps with eps a small multiple
// of the smallest estimated Schur complement diagonal sum_j a_ij^2 / |a_jj|.
std::vector<double> regularization(const SparseMatrix& m) {
  const int n = m.rows();
  const auto ptr = m.row_ptr();
  const auto idx = m.col_idx();
  const auto val = m.values();
  std::vector<double> diag(n, 0.0);
  for (int r = 0; r < n; ++r)
    if (const auto q = m.find(r, r); q >= 0) diag[r] = val[q];
  std::vector<double> shift(n, 0.0);
  double smin = std::numeric_limits<double>::infinity();
  std::vector<char> coupled(n, 0);
  for (int r = 0; r < n; ++r) {
    if (diag[r] != 0.0) continue;
    double s = 0.0;
    for (auto p = ptr[r]; p < ptr[r + 1]; ++p) {
      const int c = idx[p];
      if (c == r || val[p] == 0.0) continue;
      coupled[r] = 1;
      if (diag[c] != 0.0) s += val[p] * val[p] / std::abs(diag[c]);
    }
    if (s > 0.0) smin = std::min(smin, s);
  }
  if (!std::isfinite(smin)) return shift;
  for (int r = 0; r < n; ++r)
    if (diag[r] == 0.0 && coupled[r]) shift[r] = -1e-7 * smin;
  return shift;
}

}  // namespace

Factorization::Factorization(SparseMatrix matrix) : matrix_(std::move(matrix)), impl_(std::make_unique<Impl>()) {
  if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("factorize: matrix is not square");
  const long n = matrix_.rows();
  const auto ptr = matrix_.row_ptr();
  const auto idx = matrix_.col_idx();
  const auto val = matrix_.values();
  if (exactly_symmetric(matrix_)) {
    const std::vector<double> shift = regularization(matrix_);
    impl_->regularized = std::any_of(shift.begin(), shift.end(), [](double v) { return v != 0.0; });
    // Upper triangle in CSC form: row r of the CSR matrix is column r by symmetry.
    std::vector<long> cp{0}, ci;
    std::vector<double> cx;
    ci.reserve(static_cast<std::size_t>(matrix_.nnz() / 2 + n));
    cx.reserve(ci.capacity());
    for (long c = 0; c < n; ++c) {
      bool has_diag = false;
      for (auto p = ptr[c]; p < ptr[c + 1] && idx[p] <= c; ++p) {
        double v = val[p];
        if (idx[p] == c) {
          has_diag = true;
          v += shift[c];
        }
        ci.push_back(idx[p]);
        cx.push_back(v);
      }
      if (!has_diag) {
        ci.push_back(c);
        cx.push_back(shift[c]);
      }
      cp.push_back(static_cast<long>(ci.size()));
    }
    cholmod_common& cm = impl_->common;
    cholmod_l_start(&cm);
    impl_->started = true;
    cm.supernodal = CHOLMOD_SIMPLICIAL;
    cm.final_ll = 0;
    cholmod_sparse a{};
    a.nrow = a.ncol = static_cast<std::size_t>(n);
    a.nzmax = ci.size();
    a.p = cp.data();
    a.i = ci.data();
    a.x = cx.data();
    a.stype = 1;
    a.itype = CHOLMOD_LONG;
    a.xtype = CHOLMOD_REAL;
    a.dtype = CHOLMOD_DOUBLE;
    a.sorted = 1;
    a.packed = 1;
    impl_->factor = cholmod_l_analyze(&a, &cm);
    if (!impl_->factor) throw std::runtime_error("symbolic factorization failed (cholmod status " +
                                                 std::to_string(cm.status) + ")");
    cholmod_l_factorize(&a, impl_->factor, &cm);
    if (cm.status == CHOLMOD_OUT_OF_MEMORY) throw std::runtime_error("numeric factorization failed: out of memory");
    if (impl_->factor->minor < static_cast<std::size_t>(n)) {
      const long pivot = static_cast<const long*>(impl_->factor->Perm)[impl_->factor->minor];
      throw SingularMatrixError(static_cast<int>(pivot), "matrix is numerically singular (zero pivot at index " +
                                                             std::to_string(pivot) + ")");
    }
    factor_nnz_ = static_cast<std::int64_t>(cm.lnz);
    return;
  }

  impl_->ap.assign(ptr.begin(), ptr.end());
  impl_->ai.assign(idx.begin(), idx.end());
  double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
  umfpack_dl_defaults(control);
  // CSR arrays are handed over as the CSC form of the transpose; solve() uses UMFPACK_At.
  void* symbolic = nullptr;
  long status = umfpack_dl_symbolic(n, n, impl_->ap.data(), impl_->ai.data(), val.data(), &symbolic, control, info);
  if (status != UMFPACK_OK) throw std::runtime_error("symbolic factorization failed: " + umfpack_message(status));
  status = umfpack_dl_numeric(impl_->ap.data(), impl_->ai.data(), val.data(), symbolic, &impl_->numeric, control,
                              info);
  umfpack_dl_free_symbolic(&symbolic);
  if (status == UMFPACK_WARNING_singular_matrix) {
    std::vector<double> diag(n);
    std::vector<long> q(n);
    long do_recip = 0;
    umfpack_dl_get_numeric(nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, nullptr, q.data(), diag.data(),
                           &do_recip, nullptr, impl_->numeric);
    long pivot = -1;
    for (long i = 0; i < n && pivot < 0; ++i)
      if (diag[i] == 0.0) pivot = q[i];
    throw SingularMatrixError(static_cast<int>(pivot), "matrix is numerically singular (zero pivot at index " +
                                                           std::to_string(pivot) + ")");
  }
  if (status != UMFPACK_OK) throw std::runtime_error("numeric factorization failed: " + umfpack_message(status));
  long lnz = 0, unz = 0, nr = 0, nc = 0, nzud = 0;
  umfpack_dl_get_lunz(&lnz, &unz, &nr, &nc, &nzud, impl_->numeric);
  factor_nnz_ = static_cast<std::int64_t>(lnz) + unz;
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

Vector Factorization::apply_inverse(const Vector& rhs) const {
  const long n = size();
  Vector x(n);
  if (impl_->factor) {
    cholmod_common cm;
    cholmod_l_start(&cm);
    cholmod_dense b{};
    b.nrow = static_cast<std::size_t>(n);
    b.ncol = 1;
    b.nzmax = b.d = static_cast<std::size_t>(n);
    b.x = const_cast<double*>(rhs.data());
    b.xtype = CHOLMOD_REAL;
    b.dtype = CHOLMOD_DOUBLE;
    cholmod_dense* y = cholmod_l_solve(CHOLMOD_A, impl_->factor, &b, &cm);
    if (!y) {
      cholmod_l_finish(&cm);
      throw std::runtime_error("solve failed (cholmod status " + std::to_string(cm.status) + ")");
    }
    std::copy_n(static_cast<const double*>(y->x), n, x.data());
    cholmod_l_free_dense(&y, &cm);
    cholmod_l_finish(&cm);
    return x;
  }
  double control[UMFPACK_CONTROL], info[UMFPACK_INFO];
  umfpack_dl_defaults(control);
  const long status = umfpack_dl_solve(UMFPACK_At, impl_->ap.data(), impl_->ai.data(), matrix_.values().data(),
                                       x.data(), rhs.data(), impl_->numeric, control, info);
  if (status != UMFPACK_OK) throw std::runtime_error("solve failed: " + umfpack_message(status));
  return x;
}

Vector Factorization::solve(const Vector& rhs) const {
  if (rhs.size() != size()) throw std::invalid_argument("solve: rhs length mismatch");
  Vector x = apply_inverse(rhs);
  if (!impl_->regularized) return x;
  // Iterative refinement against the unregularized matrix; keeps the best iterate.
  double best = residual_ratio(matrix_, x, rhs);
  for (int it = 0; it < 12 && best > 1e-15; ++it) {
    const Vector y = x + apply_inverse(rhs - matrix_ * x);
    const double r = residual_ratio(matrix_, y, rhs);
    if (!(r < best)) break;
    const bool slow = r > 0.5 * best;
    x = y;
    best = r;
    if (slow) break;
  }
  if (!(best <= 1e-6))
    throw SingularMatrixError(-1, "solve did not converge (relative residual " + std::to_string(best) +
                                      "); the system is singular or severely ill-conditioned");
  return x;
}

Factorization factorize(SparseMatrix matrix) { return Factorization(std::move(matrix)); }
Vector solve(const Factorization& f, const Vector& rhs) { return f.solve(rhs); }

}  // namespace nsdg
