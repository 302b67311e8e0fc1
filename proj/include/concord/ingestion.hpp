#pragma once

// Delimited-text ingestion: a JSON schema describes which columns to use and
// how to encode them; ChunkReader streams encoded model-matrix row blocks.
//
// Schema file layout:
//   {
//     "delimiter": ",",
//     "encoding": "one-hot" | "treatment-contrast",
//     "intercept": false,
//     "missing": ["", "NA"],
//     "columns": [
//       {"name": "Month", "kind": "categorical", "levels": ["1", "2", ...]},
//       {"name": "DepTime", "kind": "numeric"}
//     ],
//     "response": {"column": "ArrDelay", "rule": "threshold", "threshold": 30}
//   }
//
// Treatment contrasts drop the first declared level of every categorical;
// one-hot keeps all levels. Categoricals without declared levels get the
// distinct values found in a pre-scan of the file, in sorted order.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "concord/matrix_core.hpp"

namespace concord {

enum class ColumnKind { numeric, categorical };
enum class CategoricalEncoding { treatment_contrast, one_hot };
enum class ResponseRule { threshold, identity };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> levels;
  bool levels_declared = false;
};

struct ResponseSpec {
  std::string column;
  ResponseRule rule = ResponseRule::identity;
  double threshold = 30.0;  // rule == threshold: 1 when value >= threshold
};

struct SchemaSpec {
  std::vector<ColumnSpec> columns;
  CategoricalEncoding encoding = CategoricalEncoding::one_hot;
  bool intercept = false;
  std::optional<ResponseSpec> response;
  char delimiter = ',';
  std::vector<std::string> missing_tokens{"", "NA"};

  /// Expanded design width.
  Index width() const;
  /// Names of the expanded design columns, e.g. "(Intercept)", "Month=2".
  std::vector<std::string> design_names() const;
  bool levels_resolved() const;
};

SchemaSpec load_schema(const std::filesystem::path& path);
SchemaSpec parse_schema(std::string_view json_text);
std::string schema_to_json(const SchemaSpec& schema);

/// The Year/Month/DayOfWeek/DepTime/DepDelay benchmark schema with a late
/// arrival (ArrDelay >= 30) response.
SchemaSpec airline_benchmark_schema(CategoricalEncoding encoding = CategoricalEncoding::one_hot,
                                    bool intercept = false);

/// Fill in undeclared categorical levels from a scan of the file.
SchemaSpec resolve_levels(const std::filesystem::path& path, const SchemaSpec& schema);

struct ModelMatrixChunk {
  MatrixXdr design;
  std::optional<Eigen::VectorXd> response;
  std::size_t row_offset = 0;    // index of the first row among all valid rows
  std::size_t dropped_rows = 0;  // incomplete rows skipped while producing this chunk
  std::vector<std::size_t> source_rows;  // valid-row index of each design row
};

/// Split one delimited record. Double-quoted fields may contain the
/// delimiter; "" inside quotes is a literal quote.
std::vector<std::string> split_record(std::string_view line, char delimiter);

/// Response value for one raw field. Missing fields give nullopt (the row is
/// dropped); unparseable fields throw ParseError.
std::optional<double> derive_response(std::string_view field, const ResponseSpec& rule,
                                      const std::vector<std::string>& missing_tokens = {"", "NA"});

class ChunkReader {
 public:
  ChunkReader(const std::filesystem::path& path, SchemaSpec schema, std::size_t chunk_rows);
  ~ChunkReader();
  ChunkReader(const ChunkReader&) = delete;
  ChunkReader& operator=(const ChunkReader&) = delete;

  /// Next chunk in file order, or nullopt at end of file.
  std::optional<ModelMatrixChunk> next();

  const SchemaSpec& schema() const noexcept { return schema_; }
  std::size_t rows_emitted() const noexcept { return emitted_; }
  std::size_t rows_dropped() const noexcept { return dropped_; }

 private:
  struct Encoder;

  SchemaSpec schema_;
  std::size_t chunk_rows_;
  std::ifstream in_;
  std::unique_ptr<Encoder> encoder_;
  std::size_t line_ = 0;
  std::size_t emitted_ = 0;
  std::size_t dropped_ = 0;
};

std::vector<ModelMatrixChunk> read_chunks(const std::filesystem::path& path, const SchemaSpec& schema,
                                          std::size_t chunk_rows);

enum class SampleKind { random, head };

struct SampleSpec {
  SampleKind kind = SampleKind::random;
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

/// `count` valid rows: the first ones (head) or a uniform sample without
/// replacement drawn in one reservoir pass (random). Rows keep file order.
ModelMatrixChunk sample_rows(const std::filesystem::path& path, const SchemaSpec& schema, const SampleSpec& spec,
                             std::size_t chunk_rows = 8192);

/// Whole encoded file in memory.
struct Dataset {
  MatrixXdr design;
  std::optional<Eigen::VectorXd> response;
  std::vector<std::string> names;
  std::size_t dropped_rows = 0;
};

Dataset load_dataset(const std::filesystem::path& path, const SchemaSpec& schema, std::size_t chunk_rows = 8192);

}  // namespace concord
