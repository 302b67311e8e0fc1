#pragma once

// Experiment drivers behind the command-line tool. Each grid point becomes
// one ExperimentResult; grids run on a worker pool and come back in grid
// order. Records serialize to one JSON object per line or to CSV.
//
// Subset draws: the rows of grid point (size, rep) come from a reservoir
// pass over the valid rows seeded with subset_seed(seed, size, rep), so the
// in-memory and streaming paths pick the same rows, and the overlapping and
// non-overlapping records of a point share one subset.

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "concord/concordance.hpp"
#include "concord/distributions.hpp"
#include "concord/ingestion.hpp"
#include "concord/regression.hpp"
#include "concord/synthetic.hpp"

namespace concord {

using Record = nlohmann::ordered_json;

inline const std::vector<double> kRecordProbabilities{0.05, 0.25, 0.5, 0.75, 0.95};

struct ExperimentResult {
  std::string experiment;
  std::int64_t size = 0;
  int rep = 0;
  std::string mode;
  std::string method;
  std::string sampling;
  std::uint64_t seed = 0;         // base seed of the run
  std::uint64_t subset_seed = 0;  // seed of this record's row draw
  std::int64_t n_total = 0;
  std::int64_t d = 0;
  std::optional<double> concordance;
  std::vector<double> term_quantiles;   // empirical, at kRecordProbabilities
  std::vector<double> model_quantiles;  // single-term model law, same probabilities
  std::optional<double> log_mse;        // -inf when the fit equals the reference
  std::optional<bool> converged;
  std::optional<int> iterations;
  std::optional<std::string> error;
  double runtime_seconds = 0.0;
};

Record to_record(const ExperimentResult& r);

/// Writes records as JSON lines, or as CSV with a header taken from the
/// first record (nested fields flattened with '.').
class RecordWriter {
 public:
  RecordWriter(std::ostream& out, bool csv) : out_(&out), csv_(csv) {}
  void write(const Record& record);
  void write(const ExperimentResult& r) { write(to_record(r)); }

 private:
  std::ostream* out_;
  bool csv_;
  std::vector<std::string> columns_;
};

/// Remove the runtime_seconds field, for reproducibility comparisons.
Record strip_runtime(Record record);

std::uint64_t subset_seed(std::uint64_t seed, std::int64_t size, int rep);

/// Positions (ascending) of the rows drawn for one grid point.
std::vector<std::size_t> select_rows(std::size_t n, std::size_t count, SampleKind kind, std::uint64_t seed);

const char* to_string(SampleKind k);

struct GridConfig {
  std::string experiment = "concordance";
  std::vector<std::int64_t> sizes;
  int reps = 1;
  std::vector<Overlap> modes{Overlap::overlapping};
  std::vector<Method> methods{Method::trace};
  SampleKind sampling = SampleKind::random;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  Normalization normalization = Normalization::row_ratio;
};

std::vector<ExperimentResult> run_concordance_grid(const MatrixXdr& design, const GridConfig& config);

/// Same records without holding the file in memory: one chunked pass for the
/// total scatter and one reservoir pass per grid point. Trace method only.
std::vector<ExperimentResult> run_concordance_grid_streaming(const std::filesystem::path& data,
                                                             const SchemaSpec& schema, const GridConfig& config,
                                                             std::size_t chunk_rows);

struct GlmConfig {
  std::string experiment = "glm";
  std::vector<std::int64_t> sizes;
  int reps = 10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  /// Fit the reference on a random sample of this many rows instead of all.
  std::optional<std::size_t> reference_rows;
  IrlsOptions irls;
  /// Design column names; a column named "(Intercept)" is left out of the
  /// log MSE.
  std::vector<std::string> names;
};

std::vector<ExperimentResult> run_glm_experiment(const MatrixXdr& x, const Eigen::VectorXd& y,
                                                 const GlmConfig& config);

/// Grid description read from a JSON file:
///   {"experiment": "...", "data": "file.csv", "schema": "schema.json",
///    "synthetic": {"n":..., "d":..., "rho":..., "seed":..., "drift": {...}},
///    "sizes": [...], "reps": 10, "modes": ["overlap", "nonoverlap"],
///    "methods": ["trace"], "sampling": "random" | "head", "seed": 1}
/// Exactly one of "data" or "synthetic" is given. Relative paths resolve
/// against the config file's directory.
struct ConvergenceConfig {
  GridConfig grid;
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> schema;
  std::optional<SyntheticSpec> synthetic;
  std::uint64_t synthetic_seed = 1;
};

ConvergenceConfig parse_convergence_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ConvergenceConfig load_convergence_config(const std::filesystem::path& path);
std::vector<ExperimentResult> run_convergence(const ConvergenceConfig& config, unsigned threads,
                                              std::size_t chunk_rows = 8192);

/// Synthetic spec from JSON: n, d, rho (equicorrelated) or sigma (nested
/// arrays), beta, noise_sd, response, drift {column, magnitude},
/// categorical_demo.
SyntheticSpec parse_synthetic_spec(const nlohmann::json& j);

Record simulation_record(const MonteCarloReport& report, const SimulationConfig& config, double runtime_seconds);
Record partition_record(const PartitionSizeChoice& choice, std::int64_t n, std::int64_t d, double tolerance,
                        double confidence, Overlap mode);
Record cost_record(const CommunicationCost& cost, std::uint64_t r, std::uint64_t d, std::uint64_t bytes);

Overlap parse_overlap(const std::string& s);
Method parse_method(const std::string& s);
SampleKind parse_sampling(const std::string& s);

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace concord
