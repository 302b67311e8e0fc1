#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "concord/matrix_core.hpp"
#include "concord/random.hpp"

using namespace concord;

namespace {

MatrixXdr random_matrix(Index rows, Index cols, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXdr m(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

Eigen::MatrixXd random_symmetric(Index d, std::uint64_t seed) {
  const Eigen::MatrixXd a = random_matrix(d, d, seed);
  return (a + a.transpose()) / 2.0;
}

}  // namespace

TEST(ScatterSummary, MatchesDirectGram) {
  const auto x = random_matrix(200, 6, 1);
  ScatterSummary<double> s(6);
  s.accumulate(x);
  const Eigen::MatrixXd g = x.transpose() * x;
  EXPECT_EQ(s.count(), 200);
  EXPECT_LE((s.gram() - g).norm(), 1e-12 * g.norm());
  EXPECT_TRUE(s.gram().isApprox(s.gram().transpose(), 0.0));
  EXPECT_LE((s.column_sums() - x.colwise().sum().transpose()).norm(), 1e-12);
}

TEST(ScatterSummary, ChunkedAccumulationIsBitIdentical) {
  const auto x = random_matrix(1000, 4, 2);
  ScatterSummary<double> whole(4), chunked(4);
  whole.accumulate(x);
  for (Index start = 0; start < x.rows(); start += 77)
    chunked.accumulate(x.middleRows(start, std::min<Index>(77, x.rows() - start)));
  EXPECT_TRUE(whole == chunked);
}

TEST(ScatterSummary, MergeMatchesConcatenation) {
  const auto x = random_matrix(300, 5, 3);
  ScatterSummary<double> a(5), b(5), all(5);
  a.accumulate(x.topRows(120));
  b.accumulate(x.bottomRows(180));
  all.accumulate(x);
  const auto merged = scatter_merge(a, b);
  EXPECT_EQ(merged.count(), 300);
  EXPECT_LE((merged.gram() - all.gram()).norm(), 1e-12 * all.gram().norm());
}

TEST(ScatterSummary, ComplementRecoversRemainingRows) {
  const auto x = random_matrix(300, 5, 4);
  ScatterSummary<double> head(5), tail(5), all(5);
  head.accumulate(x.topRows(100));
  tail.accumulate(x.bottomRows(200));
  all.accumulate(x);
  const auto rest = scatter_complement(all, head);
  EXPECT_EQ(rest.count(), 200);
  EXPECT_LE((rest.gram() - tail.gram()).norm(), 1e-11 * tail.gram().norm());
  EXPECT_THROW(scatter_complement(head, all), InvalidArgument);
}

TEST(ScatterSummary, ResponseStatistics) {
  const auto x = random_matrix(50, 3, 5);
  const Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(50, -1, 1);
  ScatterSummary<double> s(3, true);
  s.accumulate(x, y);
  EXPECT_LE((s.xty() - x.transpose() * y).norm(), 1e-12);
  EXPECT_NEAR(s.yty(), y.squaredNorm(), 1e-12);
}

TEST(ScatterSummary, CenteredGram) {
  auto x = random_matrix(400, 3, 6);
  x.col(1).array() += 5.0;
  ScatterSummary<double> s(3);
  s.accumulate(x);
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd expected = xc.transpose() * xc;
  EXPECT_LE((s.centered_gram() - expected).norm(), 1e-9 * expected.norm());
}

TEST(ScatterSummary, Errors) {
  ScatterSummary<double> s(3);
  EXPECT_THROW(s.accumulate(random_matrix(5, 4, 7)), DimensionError);
  MatrixXdr bad = random_matrix(5, 3, 8);
  bad(2, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(s.accumulate(bad), NonFiniteError);
  ScatterSummary<double> other(4);
  EXPECT_THROW(s += other, DimensionError);
  EXPECT_THROW(ScatterSummary<double>(0), InvalidArgument);
}

TEST(ScatterSummary, FloatScalar) {
  DenseMatrix<float> x = random_matrix(40, 3, 9).cast<float>();
  ScatterSummary<float> s(3);
  s.accumulate(x);
  const Eigen::MatrixXf g = x.transpose() * x;
  EXPECT_LE((s.gram() - g).norm(), 1e-4f * g.norm());
}

TEST(SymEigen, MatchesEigenSolverOracle) {
  for (std::uint64_t seed = 10; seed < 40; ++seed) {
    const Index d = 2 + static_cast<Index>(seed % 9);
    const auto m = random_symmetric(d, seed);
    const auto eig = sym_eigen(m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> oracle(m);
    const Eigen::VectorXd expected = oracle.eigenvalues().reverse();
    EXPECT_LE((eig.values - expected).norm(), 1e-10 * (1.0 + expected.norm())) << "seed " << seed;
    const Eigen::MatrixXd& v = eig.vectors;
    EXPECT_LE((v.transpose() * v - Eigen::MatrixXd::Identity(d, d)).norm(), 1e-10);
    EXPECT_LE((v * eig.values.asDiagonal() * v.transpose() - m).norm(), 1e-10 * (1.0 + m.norm()));
    for (Index k = 1; k < d; ++k) EXPECT_GE(eig.values[k - 1], eig.values[k]);
  }
}

TEST(SymEigen, SignConventionAndDiagonalInput) {
  Eigen::MatrixXd m = Eigen::Vector3d(1.0, 3.0, 2.0).asDiagonal();
  const auto eig = sym_eigen(m);
  EXPECT_DOUBLE_EQ(eig.values[0], 3.0);
  EXPECT_DOUBLE_EQ(eig.values[2], 1.0);
  EXPECT_DOUBLE_EQ(eig.vectors(1, 0), 1.0);
  EXPECT_EQ(eig.sweeps, 0);
  const auto r = sym_eigen(random_symmetric(6, 77));
  for (Index k = 0; k < 6; ++k) {
    Index arg;
    r.vectors.col(k).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(r.vectors(arg, k), 0.0);
  }
}

TEST(SymEigen, RejectsBadInput) {
  Eigen::MatrixXd m = random_symmetric(4, 11);
  m(0, 1) += 1.0;
  EXPECT_THROW(sym_eigen(m), NotSymmetricError);
  EXPECT_THROW(sym_eigen(Eigen::MatrixXd(3, 2)), DimensionError);
  Eigen::MatrixXd n = random_symmetric(3, 12);
  n(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(sym_eigen(n), NonFiniteError);
  JacobiOptions tight;
  tight.max_sweeps = 0;
  EXPECT_THROW(sym_eigen(random_symmetric(5, 13), tight), ConvergenceError);
}

TEST(QrSolve, RecoversExactCoefficients) {
  const auto x = random_matrix(100, 4, 20);
  const Eigen::Vector4d beta(1.0, -2.0, 0.5, 3.0);
  const Eigen::VectorXd y = x * beta;
  EXPECT_LE((qr_solve(x, y) - beta).norm(), 1e-12);
}

TEST(QrSolve, ReferenceIsStableOnIllConditionedExample) {
  Eigen::Matrix2d x;
  x << 1e9, -1, -1, 1e-5;
  const Eigen::Vector2d y = x * Eigen::Vector2d(1, 1);
  const auto beta = qr_solve(x, y);
  EXPECT_NEAR(beta[0], 1.0, 1e-6);
  EXPECT_NEAR(beta[1], 1.0, 1e-6);
}

TEST(QrSolve, Errors) {
  MatrixXdr x = random_matrix(10, 3, 21);
  x.col(2) = 2.0 * x.col(0);
  EXPECT_THROW(qr_solve(x, Eigen::VectorXd::Ones(10)), RankDeficientError);
  EXPECT_THROW(qr_solve(random_matrix(2, 3, 22), Eigen::VectorXd::Ones(2)), DimensionError);
  EXPECT_THROW(qr_solve(random_matrix(5, 3, 23), Eigen::VectorXd::Ones(4)), DimensionError);
}

TEST(SpdSolve, SolvesWellConditionedSystems) {
  const auto x = random_matrix(50, 4, 30);
  const Eigen::MatrixXd g = x.transpose() * x;
  const Eigen::Vector4d z(1, 2, 3, 4);
  EXPECT_LE((spd_solve(g, Eigen::VectorXd(g * z)) - z).norm(), 1e-10);
}

TEST(SpdSolve, NormalEquationsFailOnIllConditionedExample) {
  Eigen::Matrix2d x;
  x << 1e9, -1, -1, 1e-5;
  const Eigen::Vector2d y = x * Eigen::Vector2d(1, 1);
  const Eigen::Matrix2d g = x.transpose() * x;
  const Eigen::Vector2d xty = x.transpose() * y;
  EXPECT_THROW(spd_solve(g, xty), SingularMatrixError);
  // Without the pivot check the solve "succeeds" with a wrong answer.
  const Eigen::Vector2d unchecked = spd_solve(g, xty, PivotCheck::none);
  EXPECT_GT(std::abs(unchecked[1] - 1.0), 1e-3);
}

TEST(SpdSolve, Errors) {
  Eigen::Matrix2d indefinite;
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(spd_solve(indefinite, Eigen::Vector2d(1, 1)), SingularMatrixError);
  EXPECT_THROW(spd_solve(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Ones(2)), DimensionError);
}

TEST(Frobenius, SquaredNorm) {
  Eigen::Matrix2d m;
  m << 1, 2, 3, 4;
  EXPECT_DOUBLE_EQ(frobenius_sq(m), 30.0);
}
