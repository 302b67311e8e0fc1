#pragma once

// Scatter-matrix concordance between a subset of rows and a reference set.
//
//   S(A, B) = rows(B) / (d * rows(A)) * ||A B^+||_F^2,   B^+ = (B^T B)^{-1} B^T
//
// The direct form evaluates the Frobenius norm of A B^+ literally. The trace
// form uses ||A B^+||_F^2 = tr(A^T A (B^T B)^{-1}) and, in the eigenbasis V of
// B^T B, splits it into d per-coordinate ratios
//
//   term_j = (v_j^T A^T A v_j / rows(A)) / (v_j^T B^T B v_j / rows(B)),
//
// whose mean is S. With V the reference eigenbasis the split is exact for any
// pair of matrices; a caller-supplied common basis (e.g. the eigenvectors of
// a known population covariance) gives the common-basis concordance.

#include <optional>
#include <string>
#include <vector>

#include "concord/matrix_core.hpp"

namespace concord {

enum class Method { direct, trace };
enum class Overlap { overlapping, nonoverlapping };

/// Leading constant. `row_ratio` is rows(B)/(d rows(A)), which gives
/// S(A, A) = 1. `literal` is rows(A)/(d rows(B)), kept for comparison with
/// published values computed that way.
enum class Normalization { row_ratio, literal };

inline const char* to_string(Method m) { return m == Method::direct ? "direct" : "trace"; }
inline const char* to_string(Overlap o) {
  return o == Overlap::overlapping ? "overlapping" : "nonoverlapping";
}

template <typename Scalar>
struct ConcordanceOptions {
  Normalization normalization = Normalization::row_ratio;
  /// Use Gram matrices about the column means (trace form only).
  bool center = false;
  /// Orthonormal d x d basis to project onto instead of the reference
  /// eigenbasis (trace form only).
  std::optional<SquareMatrix<Scalar>> basis;
};

template <typename Scalar>
struct ConcordanceResult {
  Scalar value = Scalar(0);
  Vector<Scalar> terms;  // empty for Method::direct
  Method method = Method::trace;
  Overlap mode = Overlap::overlapping;
  std::int64_t n_subset = 0;
  std::int64_t n_reference = 0;
  Index d = 0;
  std::vector<std::string> warnings;
};

namespace detail {

template <typename Scalar>
Scalar normalization_factor(Normalization norm, std::int64_t rows_a, std::int64_t rows_b, Index d) {
  const Scalar a = static_cast<Scalar>(rows_a);
  const Scalar b = static_cast<Scalar>(rows_b);
  const Scalar dd = static_cast<Scalar>(d);
  return norm == Normalization::row_ratio ? b / (dd * a) : a / (dd * b);
}

}  // namespace detail

/// Direct evaluation of ||A B^+||_F^2. B^+ comes from a Householder QR of B
/// (B^+ = R^{-1} Q^T); the product A B^+ is formed in column panels so memory
/// stays at rows(A) x panel.
template <typename ADerived, typename BDerived>
ConcordanceResult<typename ADerived::Scalar> concordance_direct(
    const Eigen::MatrixBase<ADerived>& a, const Eigen::MatrixBase<BDerived>& b,
    Normalization norm = Normalization::row_ratio) {
  using Scalar = typename ADerived::Scalar;
  const Index d = b.cols();
  if (a.cols() != d)
    throw DimensionError("concordance: A has " + std::to_string(a.cols()) + " columns, B has " +
                         std::to_string(d));
  if (a.rows() == 0) throw InvalidArgument("concordance: A has no rows");
  if (b.rows() < d) throw SingularMatrixError("concordance: B has fewer rows than columns");
  require_finite(a, "A");
  require_finite(b, "B");

  const SquareMatrix<Scalar> bd = b;
  Eigen::HouseholderQR<SquareMatrix<Scalar>> qr(bd);
  const SquareMatrix<Scalar> r = qr.matrixQR().topRows(d).template triangularView<Eigen::Upper>();
  const auto rdiag = r.diagonal().cwiseAbs();
  if (rdiag.minCoeff() <= rank_tolerance<Scalar>(d, rdiag.maxCoeff()))
    throw SingularMatrixError("concordance: B^T B is singular");

  const SquareMatrix<Scalar> q =
      qr.householderQ() * SquareMatrix<Scalar>::Identity(b.rows(), d);  // thin Q, m x d
  // A R^{-1}, then multiply by Q^T panel by panel.
  const SquareMatrix<Scalar> ar =
      r.template triangularView<Eigen::Upper>().template solve<Eigen::OnTheRight>(SquareMatrix<Scalar>(a));

  constexpr Index panel = 1024;
  Scalar fro(0);
  for (Index start = 0; start < b.rows(); start += panel) {
    const Index width = std::min(panel, b.rows() - start);
    const SquareMatrix<Scalar> block = ar * q.middleRows(start, width).transpose();
    fro += frobenius_sq(block);
  }

  ConcordanceResult<Scalar> out;
  out.method = Method::direct;
  out.n_subset = a.rows();
  out.n_reference = b.rows();
  out.d = d;
  out.value = detail::normalization_factor<Scalar>(norm, a.rows(), b.rows(), d) * fro;
  return out;
}

/// Trace / eigenvalue-ratio form from scatter summaries alone.
template <typename Scalar>
ConcordanceResult<Scalar> concordance_trace(const ScatterSummary<Scalar>& sa,
                                            const ScatterSummary<Scalar>& sb,
                                            const ConcordanceOptions<Scalar>& opts = {}) {
  const Index d = sb.dim();
  if (sa.dim() != d)
    throw DimensionError("concordance: scatter dimensions differ (" + std::to_string(sa.dim()) +
                         " vs " + std::to_string(d) + ")");
  if (sa.count() <= 0) throw InvalidArgument("concordance: subset scatter has no rows");
  if (sb.count() <= 0) throw SingularMatrixError("concordance: reference scatter has no rows");

  const SquareMatrix<Scalar> ga = opts.center ? sa.centered_gram() : sa.gram();
  const SquareMatrix<Scalar> gb = opts.center ? sb.centered_gram() : sb.gram();
  const Scalar nb = static_cast<Scalar>(sb.count());

  SquareMatrix<Scalar> basis;
  if (opts.basis) {
    if (opts.basis->rows() != d || opts.basis->cols() != d)
      throw DimensionError("concordance: basis must be d x d");
    basis = *opts.basis;
  } else {
    auto eig = sym_eigen(gb / nb);
    const Scalar top = std::max(eig.values[0], Scalar(0));
    if (eig.values[d - 1] <= rank_tolerance<Scalar>(d, top))
      throw SingularMatrixError("concordance: reference scatter is not positive definite");
    basis = std::move(eig.vectors);
  }

  Vector<Scalar> lam_a(d), lam_b(d);
  for (Index j = 0; j < d; ++j) {
    const auto v = basis.col(j);
    lam_a[j] = v.dot(ga * v);
    lam_b[j] = v.dot(gb * v);
  }
  if (lam_b.minCoeff() <= rank_tolerance<Scalar>(d, lam_b.cwiseAbs().maxCoeff()))
    throw SingularMatrixError("concordance: reference scatter is singular along a basis direction");

  const Scalar factor = detail::normalization_factor<Scalar>(opts.normalization, sa.count(), sb.count(), d);
  ConcordanceResult<Scalar> out;
  out.method = Method::trace;
  out.n_subset = sa.count();
  out.n_reference = sb.count();
  out.d = d;
  out.terms = (static_cast<Scalar>(d) * factor) * lam_a.cwiseQuotient(lam_b);
  out.value = out.terms.mean();
  return out;
}

/// Concordance of a subset against the whole (overlapping) or against the
/// remaining rows (non-overlapping). The complement scatter is obtained by
/// subtracting fields, never by re-reading data.
template <typename Scalar>
ConcordanceResult<Scalar> concordance_subset(const ScatterSummary<Scalar>& total,
                                             const ScatterSummary<Scalar>& subset, Overlap mode,
                                             const ConcordanceOptions<Scalar>& opts = {}) {
  if (subset.dim() != total.dim()) throw DimensionError("concordance: subset and total dimensions differ");
  if (subset.count() == 0) throw InvalidArgument("concordance: empty subset");
  if (subset.count() > total.count())
    throw InvalidArgument("concordance: subset has more rows than the total");

  ConcordanceResult<Scalar> out;
  if (mode == Overlap::overlapping) {
    out = concordance_trace(subset, total, opts);
  } else {
    if (subset.count() == total.count())
      throw SingularMatrixError("concordance: complement of the subset is empty");
    out = concordance_trace(subset, scatter_complement(total, subset), opts);
  }
  out.mode = mode;

  const auto d = static_cast<std::int64_t>(subset.dim());
  if (subset.count() < d)
    out.warnings.push_back("subset has fewer rows than columns; its scatter is singular");
  else if (subset.count() < 2 * d)
    out.warnings.push_back("subset has fewer than 2d rows; concordance is poorly determined");
  return out;
}

}  // namespace concord
