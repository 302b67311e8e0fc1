#pragma once

// Sampling models for the concordance of a random row subset, Monte Carlo
// validation of those models, and the partition-size heuristic built on them.
//
// For i subset rows out of n, d columns, rows i.i.d. multivariate normal:
//   overlapping     each term ~ (n/i) Beta(i/2, (n-i)/2)
//                   S ~approx N(1, 2(n-i) / (d i (n+2)))
//   non-overlapping each term ~ F(i, n-i)
//                   S ~approx N(1, 2n / (d i (n-i)))
//   heavy-tailed    S ~approx Cauchy(1, sqrt((n-i)/i))

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "concord/concordance.hpp"

namespace concord {

enum class ModelFamily { scaled_beta, f, cauchy };

const char* to_string(ModelFamily f);

struct ApproxLaw {
  enum class Kind { normal, cauchy };
  Kind kind = Kind::normal;
  double location = 1.0;
  double spread = 0.0;  // variance for normal, scale for Cauchy

  double quantile(double p) const;
};

struct ConcordanceModel {
  ModelFamily family = ModelFamily::scaled_beta;
  std::int64_t i = 0;
  std::int64_t n = 0;
  std::int64_t d = 1;
  double location = 1.0;
  /// Per-term variance (scaled-beta, F) or Cauchy scale.
  double scale_or_variance = 0.0;
  ApproxLaw approx;
  /// Alternative approximate variance, where two published forms disagree.
  std::optional<double> alt_approx_variance;
  std::vector<std::string> notes;

  bool has_finite_variance() const { return family != ModelFamily::cauchy; }

  /// Quantile of a single term under the exact per-term law.
  double term_quantile(double p) const;
};

ConcordanceModel model_overlapping(std::int64_t i, std::int64_t n, std::int64_t d);
ConcordanceModel model_nonoverlapping_f(std::int64_t i, std::int64_t n, std::int64_t d);
ConcordanceModel model_nonoverlapping_cauchy(std::int64_t i, std::int64_t n, std::int64_t d = 1);

/// What each Monte Carlo trial measures.
///   overlapping / nonoverlapping: the concordance of the first i rows against
///     the whole / the remaining rows, in the common eigenbasis of sigma.
///   cauchy: the heavy-tailed limit, where each term is
///     1 + (subset second moment - sigma_j) / (complement second moment - sigma_j),
///     the ratio of the two centred CLT fluctuations.
enum class SimulationRegime { overlapping, nonoverlapping, cauchy };

const char* to_string(SimulationRegime r);

struct SimulationConfig {
  std::int64_t i = 50;
  std::int64_t n = 500;
  std::int64_t d = 10;
  Eigen::MatrixXd sigma;  // empty means identity
  std::int64_t trials = 2000;
  SimulationRegime regime = SimulationRegime::overlapping;
  std::uint64_t seed = 1;
  std::vector<double> probabilities{0.05, 0.25, 0.5, 0.75, 0.95};
  unsigned threads = 1;
};

struct QuantileTriple {
  double p;
  double empirical;
  double model;
};

struct MonteCarloReport {
  std::int64_t trials = 0;
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double median = 0.0;
  double iqr = 0.0;
  bool variance_defined = true;
  ConcordanceModel model;
  std::vector<QuantileTriple> quantiles;
  std::uint64_t seed = 0;
  SimulationRegime regime = SimulationRegime::overlapping;
  std::vector<double> values;
};

MonteCarloReport simulate_concordance(const SimulationConfig& config);

/// Type-7 (linear interpolation) sample quantile. `sorted` must be ascending.
double sample_quantile(const std::vector<double>& sorted, double p);

double normal_quantile(double p);

/// Approximate variance of S at block size i used by the heuristic.
double heuristic_variance(std::int64_t i, std::int64_t n, std::int64_t d, Overlap mode);

struct PartitionSizeChoice {
  std::int64_t block_size = 0;
  double z = 0.0;
  double bound = 0.0;  // z * sqrt(variance) at block_size
  double variance = 0.0;
  std::optional<double> previous_variance;  // at block_size - 1, when >= d+1
  bool satisfied = true;                    // false when no i < n met the bound
};

/// Smallest block size i >= d+1 with z * sqrt(var(i)) <= tolerance, z the
/// normal quantile at (1+confidence)/2; n if none qualifies.
PartitionSizeChoice choose_partition_size(std::int64_t n, std::int64_t d, double tolerance, double confidence,
                                          Overlap mode);

inline std::int64_t partition_size_heuristic(std::int64_t n, std::int64_t d, double tolerance,
                                             double confidence, Overlap mode) {
  return choose_partition_size(n, d, tolerance, confidence, mode).block_size;
}

}  // namespace concord
