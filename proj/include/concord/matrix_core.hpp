#pragma once

// Dense primitives shared by every module: the mergeable scatter (Gram)
// accumulator, a cyclic Jacobi symmetric eigensolver, Householder QR least
// squares and a rank-checked Cholesky solve.

#include <Eigen/Dense>
#include <Eigen/Jacobi>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "concord/errors.hpp"

namespace concord {

using Index = Eigen::Index;

/// Data matrices are row-major: one observation per row, as read from disk.
template <typename Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using SquareMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXdr = DenseMatrix<double>;

/// Numerical-rank threshold: d * eps * magnitude.
template <typename Scalar>
Scalar rank_tolerance(Index d, Scalar magnitude) {
  return static_cast<Scalar>(d) * std::numeric_limits<Scalar>::epsilon() * magnitude;
}

template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& m, const char* what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " contains NaN or Inf");
}

// ---------------------------------------------------------------------------
// ScatterSummary

/// Sufficient statistics of a row block: row count, X^T X (packed upper
/// triangle, so symmetry is exact), column sums, and optionally X^T y, y^T y.
///
/// Accumulation walks rows in order and adds each row's outer product, so
/// merging single-row summaries left to right reproduces accumulating the
/// whole block bit for bit.
template <typename Scalar>
class ScatterSummary {
 public:
  ScatterSummary() = default;

  explicit ScatterSummary(Index d, bool with_response = false)
      : d_(d),
        packed_(Vector<Scalar>::Zero(d * (d + 1) / 2)),
        colsum_(Vector<Scalar>::Zero(d)),
        has_response_(with_response) {
    if (d < 1) throw InvalidArgument("scatter dimension must be positive");
    if (with_response) xty_ = Vector<Scalar>::Zero(d);
  }

  Index dim() const noexcept { return d_; }
  std::int64_t count() const noexcept { return n_; }
  bool has_response() const noexcept { return has_response_; }

  Scalar gram(Index i, Index j) const {
    if (i > j) std::swap(i, j);
    return packed_[packed_index(i, j)];
  }

  SquareMatrix<Scalar> gram() const {
    SquareMatrix<Scalar> g(d_, d_);
    Index k = 0;
    for (Index i = 0; i < d_; ++i)
      for (Index j = i; j < d_; ++j, ++k) g(i, j) = g(j, i) = packed_[k];
    return g;
  }

  /// Gram matrix about the column means: X^T X - n * mean * mean^T.
  SquareMatrix<Scalar> centered_gram() const {
    SquareMatrix<Scalar> g = gram();
    if (n_ > 0) g.noalias() -= (colsum_ * colsum_.transpose()) / static_cast<Scalar>(n_);
    return g;
  }

  const Vector<Scalar>& packed_gram() const noexcept { return packed_; }
  const Vector<Scalar>& column_sums() const noexcept { return colsum_; }
  const Vector<Scalar>& xty() const noexcept { return xty_; }
  Scalar yty() const noexcept { return yty_; }

  template <typename Derived>
  ScatterSummary& accumulate(const Eigen::MatrixBase<Derived>& chunk) {
    check_chunk(chunk);
    for (Index r = 0; r < chunk.rows(); ++r) add_row(chunk.row(r));
    n_ += chunk.rows();
    return *this;
  }

  template <typename Derived, typename YDerived>
  ScatterSummary& accumulate(const Eigen::MatrixBase<Derived>& chunk,
                             const Eigen::MatrixBase<YDerived>& response) {
    check_chunk(chunk);
    if (!has_response_) throw DimensionError("summary was created without a response");
    if (response.size() != chunk.rows())
      throw DimensionError("response length " + std::to_string(response.size()) +
                           " does not match chunk rows " + std::to_string(chunk.rows()));
    require_finite(response, "response");
    for (Index r = 0; r < chunk.rows(); ++r) {
      add_row(chunk.row(r));
      const Scalar y = response(r);
      for (Index j = 0; j < d_; ++j) xty_[j] += chunk(r, j) * y;
      yty_ += y * y;
    }
    n_ += chunk.rows();
    return *this;
  }

  ScatterSummary& operator+=(const ScatterSummary& other) {
    combine(other, Scalar(1));
    return *this;
  }

  /// Field subtraction; used to form the complement of a subset without
  /// re-reading the data.
  ScatterSummary& operator-=(const ScatterSummary& other) {
    if (other.n_ > n_) throw InvalidArgument("cannot subtract a summary with more rows");
    combine(other, Scalar(-1));
    return *this;
  }

  friend bool operator==(const ScatterSummary& a, const ScatterSummary& b) {
    return a.d_ == b.d_ && a.n_ == b.n_ && a.has_response_ == b.has_response_ &&
           a.packed_ == b.packed_ && a.colsum_ == b.colsum_ && a.xty_ == b.xty_ &&
           a.yty_ == b.yty_;
  }

 private:
  Index packed_index(Index i, Index j) const { return i * d_ - i * (i - 1) / 2 + (j - i); }

  template <typename Derived>
  void check_chunk(const Eigen::MatrixBase<Derived>& chunk) const {
    if (d_ == 0) throw DimensionError("summary has no dimension");
    if (chunk.cols() != d_)
      throw DimensionError("chunk has " + std::to_string(chunk.cols()) + " columns, summary expects " +
                           std::to_string(d_));
    require_finite(chunk, "chunk");
  }

  template <typename RowDerived>
  void add_row(const Eigen::MatrixBase<RowDerived>& row) {
    Index k = 0;
    for (Index i = 0; i < d_; ++i) {
      const Scalar xi = row(i);
      colsum_[i] += xi;
      for (Index j = i; j < d_; ++j, ++k) packed_[k] += xi * row(j);
    }
  }

  void combine(const ScatterSummary& other, Scalar sign) {
    if (other.d_ != d_)
      throw DimensionError("cannot combine summaries of dimension " + std::to_string(d_) + " and " +
                           std::to_string(other.d_));
    if (other.has_response_ != has_response_) {
      // An empty summary without a response acts as the identity either way.
      if (other.n_ == 0 && !other.has_response_) return;
      if (n_ == 0 && !has_response_) {
        has_response_ = true;
        xty_ = Vector<Scalar>::Zero(d_);
      } else {
        throw DimensionError("cannot combine summaries with and without a response");
      }
    }
    n_ += static_cast<std::int64_t>(sign) * other.n_;
    packed_ += sign * other.packed_;
    colsum_ += sign * other.colsum_;
    if (has_response_) {
      xty_ += sign * other.xty_;
      yty_ += sign * other.yty_;
    }
  }

  Index d_ = 0;
  std::int64_t n_ = 0;
  Vector<Scalar> packed_;
  Vector<Scalar> colsum_;
  Vector<Scalar> xty_;
  Scalar yty_ = Scalar(0);
  bool has_response_ = false;
};

template <typename Scalar, typename Derived>
ScatterSummary<Scalar> scatter_accumulate(ScatterSummary<Scalar> summary,
                                          const Eigen::MatrixBase<Derived>& chunk) {
  summary.accumulate(chunk);
  return summary;
}

template <typename Scalar, typename Derived, typename YDerived>
ScatterSummary<Scalar> scatter_accumulate(ScatterSummary<Scalar> summary,
                                          const Eigen::MatrixBase<Derived>& chunk,
                                          const Eigen::MatrixBase<YDerived>& response) {
  summary.accumulate(chunk, response);
  return summary;
}

template <typename Scalar>
ScatterSummary<Scalar> scatter_merge(ScatterSummary<Scalar> a, const ScatterSummary<Scalar>& b) {
  a += b;
  return a;
}

/// Scatter of the rows in `total` that are not in `subset`.
template <typename Scalar>
ScatterSummary<Scalar> scatter_complement(ScatterSummary<Scalar> total,
                                          const ScatterSummary<Scalar>& subset) {
  total -= subset;
  return total;
}

// ---------------------------------------------------------------------------
// Symmetric eigendecomposition

template <typename Scalar>
struct EigenDecomposition {
  Vector<Scalar> values;         // non-increasing
  SquareMatrix<Scalar> vectors;  // columns are eigenvectors
  int sweeps = 0;
};

struct JacobiOptions {
  double tolerance = 1e-12;  // off-diagonal norm relative to ||m||_F
  int max_sweeps = 100;
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Eigenvalues come back sorted non-increasing; each eigenvector is signed so
/// that its largest-magnitude component is positive.
template <typename Derived>
EigenDecomposition<typename Derived::Scalar> sym_eigen(const Eigen::MatrixBase<Derived>& m,
                                                       const JacobiOptions& opts = {}) {
  using Scalar = typename Derived::Scalar;
  if (m.rows() != m.cols()) throw DimensionError("sym_eigen requires a square matrix");
  require_finite(m, "matrix");
  const Index d = m.rows();

  const Scalar scale = d > 0 ? m.cwiseAbs().maxCoeff() : Scalar(0);
  const Scalar asym = d > 0 ? (m - m.transpose()).cwiseAbs().maxCoeff() : Scalar(0);
  if (asym > Scalar(1e-12) * scale)
    throw NotSymmetricError("matrix is not symmetric (max asymmetry " + std::to_string(double(asym)) +
                            ")");

  SquareMatrix<Scalar> a = (m + m.transpose()) / Scalar(2);
  SquareMatrix<Scalar> v = SquareMatrix<Scalar>::Identity(d, d);
  const Scalar norm = a.norm();
  const Scalar threshold = static_cast<Scalar>(opts.tolerance) * norm;

  auto off_norm = [&] {
    Scalar s(0);
    for (Index j = 0; j < d; ++j)
      for (Index i = j + 1; i < d; ++i) s += a(i, j) * a(i, j);
    return std::sqrt(Scalar(2) * s);
  };

  int sweep = 0;
  bool converged = norm == Scalar(0) || off_norm() <= threshold;
  while (!converged && sweep < opts.max_sweeps) {
    ++sweep;
    for (Index p = 0; p < d - 1; ++p) {
      for (Index q = p + 1; q < d; ++q) {
        if (a(p, q) == Scalar(0)) continue;
        Eigen::JacobiRotation<Scalar> rot;
        if (!rot.makeJacobi(a, p, q)) continue;
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        a(p, q) = a(q, p) = Scalar(0);
        v.applyOnTheRight(p, q, rot);
      }
    }
    converged = off_norm() <= threshold;
  }
  if (!converged)
    throw ConvergenceError("Jacobi eigensolver did not converge in " + std::to_string(opts.max_sweeps) +
                           " sweeps");

  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(), [&](Index x, Index y) { return a(x, x) > a(y, y); });

  EigenDecomposition<Scalar> out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  out.sweeps = sweep;
  for (Index k = 0; k < d; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    Vector<Scalar> col = v.col(src);
    Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    if (col[arg] < Scalar(0)) col = -col;
    out.vectors.col(k) = col;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Solvers

/// argmin ||x b - y||_2 by Householder QR. Never forms x^T x.
template <typename XDerived, typename YDerived>
Vector<typename XDerived::Scalar> qr_solve(const Eigen::MatrixBase<XDerived>& x,
                                           const Eigen::MatrixBase<YDerived>& y) {
  using Scalar = typename XDerived::Scalar;
  if (x.rows() < x.cols())
    throw DimensionError("qr_solve needs rows >= cols, got " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()));
  if (y.size() != x.rows()) throw DimensionError("qr_solve: response length does not match rows");
  require_finite(x, "design matrix");
  require_finite(y, "response");

  const SquareMatrix<Scalar> dense = x;
  Eigen::HouseholderQR<SquareMatrix<Scalar>> qr(dense);
  const auto diag = qr.matrixQR().diagonal().cwiseAbs();
  const Scalar rmax = diag.size() ? diag.maxCoeff() : Scalar(0);
  const Scalar tol = rank_tolerance<Scalar>(x.cols(), rmax);
  if (rmax == Scalar(0) || diag.minCoeff() <= tol)
    throw RankDeficientError("design matrix is numerically rank deficient (min |R_jj| = " +
                             std::to_string(double(diag.minCoeff())) + ")");
  return qr.solve(Vector<Scalar>(y));
}

enum class PivotCheck { strict, none };

/// Solve gram * z = rhs by Cholesky. With PivotCheck::strict, any pivot below
/// d * eps * max(diag(gram)) is reported as a singular matrix.
template <typename GDerived, typename RDerived>
typename RDerived::PlainObject spd_solve(const Eigen::MatrixBase<GDerived>& gram,
                                         const Eigen::MatrixBase<RDerived>& rhs,
                                         PivotCheck check = PivotCheck::strict) {
  using Scalar = typename GDerived::Scalar;
  if (gram.rows() != gram.cols()) throw DimensionError("spd_solve requires a square matrix");
  if (rhs.rows() != gram.rows()) throw DimensionError("spd_solve: right-hand side has wrong length");
  require_finite(gram, "gram matrix");
  require_finite(rhs, "right-hand side");

  const SquareMatrix<Scalar> g = gram;
  Eigen::LLT<SquareMatrix<Scalar>> llt(g);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("singular matrix in solve: not positive definite");
  if (check == PivotCheck::strict) {
    const Scalar dmax = g.diagonal().cwiseAbs().maxCoeff();
    const Vector<Scalar> l = llt.matrixL().toDenseMatrix().diagonal();
    const Scalar pivot = l.cwiseAbs2().minCoeff();
    if (pivot <= rank_tolerance<Scalar>(g.rows(), dmax))
      throw SingularMatrixError("singular matrix in solve: pivot " + std::to_string(double(pivot)) +
                                " below rank tolerance");
  }
  return llt.solve(rhs);
}

/// Sum of squared entries.
template <typename Derived>
typename Derived::Scalar frobenius_sq(const Eigen::MatrixBase<Derived>& m) {
  return m.squaredNorm();
}

}  // namespace concord
