#pragma once

// Seeded synthetic datasets: multivariate normal designs, linear or logistic
// responses with known coefficients, an optional additive drift that makes
// the row order informative, and a 3-level categorical demo column.
//
// Random streams: design rows, noise, and the categorical column each use
// their own substream, and rows are generated in fixed-size chunks with one
// substream per chunk. Changing the noise level therefore leaves X untouched,
// and results do not depend on the thread count.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "concord/ingestion.hpp"
#include "concord/matrix_core.hpp"

namespace concord {

enum class ResponseKind { linear, logistic, none };

const char* to_string(ResponseKind k);

/// Adds magnitude * row / n to one column, row = 0..n-1.
struct DriftSpec {
  Index column = 0;
  double magnitude = 0.0;
};

struct SyntheticSpec {
  Index n = 1000;
  Index d = 5;
  Eigen::MatrixXd sigma;  // empty means identity
  Eigen::VectorXd beta;   // empty means all ones (zeros when response is none)
  double noise_sd = 1.0;
  ResponseKind response = ResponseKind::linear;
  std::optional<DriftSpec> drift;
  bool categorical_demo = false;
};

Eigen::MatrixXd identity_sigma(Index d);
/// (1 - rho) I + rho J, rho in [0, 1).
Eigen::MatrixXd equicorrelated_sigma(Index d, double rho);

struct SyntheticData {
  MatrixXdr x;
  std::optional<Eigen::VectorXd> y;
  Eigen::VectorXd beta;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd cholesky;  // lower factor of sigma
  std::vector<std::string> category;  // level per row when categorical_demo
  std::uint64_t seed = 0;
};

inline constexpr Index kSyntheticChunkRows = 4096;
inline const std::vector<std::string> kDemoLevels{"a", "b", "c"};

SyntheticData generate(const SyntheticSpec& spec, std::uint64_t seed, unsigned threads = 1);

/// Column names used when writing: x0..x{d-1}, then g, then y.
std::vector<std::string> synthetic_column_names(const SyntheticData& data);

void write_delimited(const SyntheticData& data, const std::filesystem::path& path, char delimiter = ',');

/// Schema reading back a written file. The response column, if any, uses the
/// identity rule.
SchemaSpec synthetic_schema(const SyntheticData& data, CategoricalEncoding encoding = CategoricalEncoding::one_hot,
                            bool intercept = false, char delimiter = ',');

}  // namespace concord
