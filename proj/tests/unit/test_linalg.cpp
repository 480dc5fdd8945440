#include "nsdg/forms.hpp"
#include "nsdg/sparse.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <random>

using namespace nsdg;

namespace {

SparseMatrix from_dense(const Eigen::MatrixXd& d) {
  std::vector<Triplet> t;
  for (int i = 0; i < d.rows(); ++i)
    for (int j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
  return finalize(static_cast<int>(d.rows()), static_cast<int>(d.cols()), t);
}

Eigen::SparseMatrix<double> to_eigen(const SparseMatrix& a) {
  std::vector<Eigen::Triplet<double>> t;
  for (int r = 0; r < a.rows(); ++r)
    for (auto p = a.row_ptr()[r]; p < a.row_ptr()[r + 1]; ++p) t.emplace_back(r, a.col_idx()[p], a.values()[p]);
  Eigen::SparseMatrix<double> e(a.rows(), a.cols());
  e.setFromTriplets(t.begin(), t.end());
  return e;
}

double rel_residual(const SparseMatrix& a, const Vector& x, const Vector& b) {
  return (a * x - b).lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST(Finalize, SumsDuplicates) {
  const SparseMatrix m = finalize(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}});
  EXPECT_EQ(m.nnz(), 1);
  EXPECT_EQ(m.coeff(0, 0), 3.0);
}

TEST(Finalize, EmptyIsZeroMatrix) {
  const SparseMatrix m = finalize(3, 3, {});
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(count_nze(m), 0);
  EXPECT_EQ(m.to_dense(), Eigen::MatrixXd::Zero(3, 3));
}

TEST(Finalize, RandomTripletsMatchDenseSum) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> idx(0, 9);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Triplet> t;
    Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(10, 10);
    for (int i = 0; i < 150; ++i) {
      Triplet x{idx(rng), idx(rng), val(rng)};
      dense(x.row, x.col) += x.value;
      t.push_back(x);
    }
    const SparseMatrix m = finalize(10, 10, t);
    EXPECT_NEAR((m.to_dense() - dense).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    for (int r = 0; r < m.rows(); ++r)
      for (auto p = m.row_ptr()[r] + 1; p < m.row_ptr()[r + 1]; ++p) EXPECT_LT(m.col_idx()[p - 1], m.col_idx()[p]);
    const Vector x = Vector::Random(10);
    EXPECT_NEAR((m * x - dense * x).norm(), 0.0, 1e-13);
    EXPECT_NEAR((m.transpose().to_dense() - dense.transpose()).norm(), 0.0, 0.0);
  }
}

TEST(Finalize, RejectsOutOfRange) { EXPECT_THROW(finalize(2, 2, {{2, 0, 1.0}}), std::out_of_range); }

TEST(SparseAdd, UnionPattern) {
  const SparseMatrix a = finalize(2, 2, {{0, 0, 1.0}});
  const SparseMatrix b = finalize(2, 2, {{1, 1, 2.0}, {0, 0, 1.0}});
  const SparseMatrix c = add(2.0, a, -1.0, b);
  EXPECT_EQ(c.nnz(), 2);
  EXPECT_EQ(c.coeff(0, 0), 1.0);
  EXPECT_EQ(c.coeff(1, 1), -2.0);
}

TEST(BlockAssembler, MatchesTriplets) {
  BlockAssembler asmb(4, 4);
  const std::vector<int> r0{0, 1}, r1{1, 3};
  asmb.reserve_block(r0, r0);
  asmb.reserve_block(r1, r1);
  asmb.compress();
  asmb.add_block(r0, r0, std::vector<double>{1, 2, 3, 4});
  asmb.add_block(r1, r1, std::vector<double>{5, 6, 7, 8});
  const SparseMatrix m = asmb.release();
  const SparseMatrix ref =
      finalize(4, 4, {{0, 0, 1}, {0, 1, 2}, {1, 0, 3}, {1, 1, 4}, {1, 1, 5}, {1, 3, 6}, {3, 1, 7}, {3, 3, 8}});
  EXPECT_EQ(m.to_dense(), ref.to_dense());
  EXPECT_EQ(m.nnz(), ref.nnz());
}

TEST(RelativeAsymmetry, Examples) {
  EXPECT_EQ(relative_asymmetry(finalize(2, 2, {})), 0.0);
  EXPECT_EQ(relative_asymmetry(finalize(2, 2, {{0, 1, 2.0}, {1, 0, 2.0}, {0, 0, 4.0}})), 0.0);
  // |1 - 3| / 4
  EXPECT_DOUBLE_EQ(relative_asymmetry(finalize(2, 2, {{0, 1, 1.0}, {1, 0, 3.0}, {1, 1, 4.0}})), 0.5);
  // missing mirror entry counts as zero
  EXPECT_DOUBLE_EQ(relative_asymmetry(finalize(2, 2, {{0, 1, 1.0}, {0, 0, 2.0}})), 0.5);
  EXPECT_THROW(relative_asymmetry(finalize(2, 3, {})), std::invalid_argument);
}

TEST(CountNze, Examples) {
  EXPECT_EQ(count_nze(from_dense(Eigen::MatrixXd::Constant(3, 3, 1.5))), 9);
  const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(1));
  const auto V = build_space(mesh, Family::vector_dg, 2);
  EXPECT_EQ(count_nze(assemble_mass(*V)), 288);
}

TEST(Factorization, IdentitySolve) {
  const SparseMatrix id = from_dense(Eigen::MatrixXd::Identity(5, 5));
  const Vector b = Vector::LinSpaced(5, 1.0, 5.0);
  const Factorization f = factorize(id);
  EXPECT_EQ(solve(f, b), b);
}

TEST(Factorization, SmallSaddle) {
  // [[2, 1], [1, 0]]^{-1} = [[0, 1], [1, -2]]
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 0;
  const Factorization f = factorize(from_dense(a));
  const Vector x = solve(f, Vector::Ones(2));
  EXPECT_NEAR(x[0], 1.0, 1e-15);
  EXPECT_NEAR(x[1], -1.0, 1e-15);
}

TEST(Factorization, SingularReportsPivot) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(4, 4);
  a(2, 2) = 0.0;
  SparseMatrix m = from_dense(a);
  try {
    Factorization f(m);
    FAIL() << "expected singular matrix error";
  } catch (const SingularMatrixError& e) {
    EXPECT_EQ(e.pivot(), 2);
  }
}

TEST(Factorization, SolvesAreBitwiseDeterministic) {
  const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(3));
  const auto V = build_space(mesh, Family::bdm, 2);
  SparseMatrix a = add(1.0, assemble_mass(*V), 1.0, assemble_sip(*V, 1.0, default_penalty(2)).matrix);
  const Vector b = Vector::LinSpaced(V->num_dofs(), -1.0, 2.0);
  const Factorization f1(a), f2(a);
  const Vector x1 = f1.solve(b), x2 = f1.solve(b), x3 = f2.solve(b);
  EXPECT_EQ(std::memcmp(x1.data(), x2.data(), sizeof(double) * x1.size()), 0);
  EXPECT_EQ(std::memcmp(x1.data(), x3.data(), sizeof(double) * x1.size()), 0);
}

TEST(Factorization, SipPoissonMatchesIndependentRefinedSolve) {
  const auto mesh = std::make_shared<const Mesh>(build_unit_square_mesh(4));
  const auto V = build_space(mesh, Family::vector_dg, 2);
  const AssembledOperator a = assemble_sip(*V, 1.0, default_penalty(2));
  const Vector b = assemble_rhs(*V, VectorField([](const Vec2& x) {
    return Vec2(std::sin(M_PI * x.x()) * x.y(), 1.0 + x.x() * x.x());
  }));
  const Vector x = factorize(a.matrix).solve(b);
  EXPECT_LE(rel_residual(a.matrix, x, b), 1e-10);

  const Eigen::SparseMatrix<double> e = to_eigen(a.matrix);
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(e);
  ASSERT_EQ(ldlt.info(), Eigen::Success);
  Vector y = ldlt.solve(b);
  for (int it = 0; it < 3; ++it) y += ldlt.solve(b - e * y);
  EXPECT_LE((x - y).lpNorm<Eigen::Infinity>() / y.lpNorm<Eigen::Infinity>(), 1e-10);
}

TEST(SaddleMatrix, LayoutAndMeanConstraint) {
  Eigen::MatrixXd a(2, 2), bm(1, 2);
  a << 2, 0, 0, 3;
  bm << 1, 1;
  Vector c(1);
  c << 0.5;
  const SparseMatrix s = saddle_matrix(from_dense(a), from_dense(bm), c);
  ASSERT_EQ(s.rows(), 4);
  Eigen::MatrixXd expect(4, 4);
  expect << 2, 0, 1, 0, 0, 3, 1, 0, 1, 1, 0, 0.5, 0, 0, 0.5, 0;
  EXPECT_EQ(s.to_dense(), expect);
  const Vector x = factorize(s).solve(Vector::Ones(4));
  EXPECT_NEAR(c.dot(x.segment(2, 1)), 1.0, 1e-14);
}
