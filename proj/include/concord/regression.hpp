#pragma once

// Row partitioning and the fitting paths compared throughout the library:
// divide-and-recombine (average of per-block QR fits), pooled normal
// equations over merged scatter summaries, the full-data QR reference, and
// IRLS logistic regression.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "concord/matrix_core.hpp"

namespace concord {

enum class PartitionKind { random, contiguous };

struct PartitionPlan {
  std::size_t n = 0;
  std::size_t r = 0;
  std::vector<std::size_t> assignment;  // row -> block
  std::uint64_t seed = 0;
  PartitionKind kind = PartitionKind::contiguous;

  /// Row indices of each block, ascending within a block.
  std::vector<std::vector<std::size_t>> blocks() const;
  std::vector<std::size_t> block_sizes() const;
};

/// Balanced partition of [0, n) into r blocks. Sizes differ by at most one;
/// the first n mod r blocks get the extra row. Random plans shuffle indices
/// (Fisher-Yates) before slicing.
PartitionPlan make_partition(std::size_t n, std::size_t r, PartitionKind kind, std::uint64_t seed = 0);

enum class FitMethod { dnr, pooled_normal, reference_qr, irls_logistic };

const char* to_string(FitMethod m);

struct FitDiagnostics {
  int iterations = 0;
  bool converged = true;
  int step_halvings = 0;
  std::vector<double> deviance;  // IRLS: deviance after each accepted step
};

struct FitResult {
  Eigen::VectorXd coefficients;
  FitMethod method = FitMethod::reference_qr;
  std::size_t r = 1;
  std::vector<Eigen::VectorXd> per_block;
  FitDiagnostics diagnostics;
};

struct DataBlock {
  MatrixXdr x;
  Eigen::VectorXd y;
};

std::vector<DataBlock> split_blocks(const MatrixXdr& x, const Eigen::VectorXd& y, const PartitionPlan& plan);

enum class BlockWeighting { equal, row_count };

FitResult fit_dnr(std::span<const DataBlock> blocks, BlockWeighting weighting = BlockWeighting::equal,
                  unsigned threads = 1);

FitResult fit_pooled_normal(std::span<const ScatterSummary<double>> summaries);

FitResult fit_reference(const MatrixXdr& x, const Eigen::VectorXd& y);

struct IrlsOptions {
  int max_iter = 25;
  double tol = 1e-8;
  double deviance_rel_tol = 1e-10;
  double divergence_cap = 1e6;
  int max_step_halvings = 30;
};

FitResult fit_irls_logistic(const MatrixXdr& x, const Eigen::VectorXd& y, const IrlsOptions& opts = {});

/// Binomial deviance of 0/1 responses at linear predictor eta.
double logistic_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta);

/// log(mean((estimate - reference)^2)); -infinity when the vectors are equal.
double coefficient_log_mse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference);

struct CommunicationCost {
  std::uint64_t dnr_values = 0;
  std::uint64_t pooled_values = 0;
  std::uint64_t dnr_bytes = 0;
  std::uint64_t pooled_bytes = 0;
};

/// Values sent to the combiner: r*d coefficients for D&R, r*d^2 + r*d for
/// pooled normal equations.
CommunicationCost communication_cost(std::uint64_t r, std::uint64_t d, std::uint64_t bytes_per_value);

}  // namespace concord
