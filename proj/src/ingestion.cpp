#include "concord/ingestion.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "concord/random.hpp"

namespace concord {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

bool is_missing(std::string_view field, const std::vector<std::string>& tokens) {
  return std::find(tokens.begin(), tokens.end(), field) != tokens.end();
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string level_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  throw SchemaError("categorical levels must be strings or numbers");
}

bool getline_stripped(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::string> read_header(std::istream& in, char delimiter, const std::filesystem::path& path) {
  std::string line;
  if (!getline_stripped(in, line)) throw ParseError("file " + path.string() + " has no header row", 1);
  auto fields = split_record(line, delimiter);
  for (auto& f : fields) f = std::string(trim(f));
  return fields;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw SchemaError("column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema

Index SchemaSpec::width() const {
  Index w = intercept ? 1 : 0;
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::numeric) {
      w += 1;
    } else {
      const auto k = static_cast<Index>(c.levels.size());
      w += encoding == CategoricalEncoding::one_hot ? k : std::max<Index>(k - 1, 0);
    }
  }
  return w;
}

std::vector<std::string> SchemaSpec::design_names() const {
  std::vector<std::string> out;
  if (intercept) out.emplace_back("(Intercept)");
  for (const auto& c : columns) {
    if (c.kind == ColumnKind::numeric) {
      out.push_back(c.name);
      continue;
    }
    const std::size_t first = encoding == CategoricalEncoding::one_hot ? 0 : 1;
    for (std::size_t k = first; k < c.levels.size(); ++k) out.push_back(c.name + "=" + c.levels[k]);
  }
  return out;
}

bool SchemaSpec::levels_resolved() const {
  return std::all_of(columns.begin(), columns.end(),
                     [](const ColumnSpec& c) { return c.kind == ColumnKind::numeric || c.levels_declared; });
}

SchemaSpec parse_schema(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("schema is not valid JSON: ") + e.what());
  }
  SchemaSpec s;
  try {
    const auto delim = j.value("delimiter", std::string(","));
    if (delim.size() != 1) throw SchemaError("delimiter must be a single character");
    s.delimiter = delim[0];

    const auto enc = j.value("encoding", std::string("one-hot"));
    if (enc == "one-hot")
      s.encoding = CategoricalEncoding::one_hot;
    else if (enc == "treatment-contrast")
      s.encoding = CategoricalEncoding::treatment_contrast;
    else
      throw SchemaError("unknown encoding '" + enc + "'");

    s.intercept = j.value("intercept", false);
    if (j.contains("missing")) s.missing_tokens = j.at("missing").get<std::vector<std::string>>();

    if (!j.contains("columns") || !j.at("columns").is_array()) throw SchemaError("schema needs a 'columns' array");
    std::set<std::string> seen;
    for (const auto& cj : j.at("columns")) {
      ColumnSpec c;
      c.name = cj.at("name").get<std::string>();
      if (!seen.insert(c.name).second) throw SchemaError("column '" + c.name + "' listed twice");
      const auto kind = cj.value("kind", std::string("numeric"));
      if (kind == "numeric") {
        c.kind = ColumnKind::numeric;
      } else if (kind == "categorical") {
        c.kind = ColumnKind::categorical;
        if (cj.contains("levels")) {
          for (const auto& lv : cj.at("levels")) c.levels.push_back(level_string(lv));
          c.levels_declared = true;
          std::set<std::string> uniq(c.levels.begin(), c.levels.end());
          if (uniq.size() != c.levels.size()) throw SchemaError("column '" + c.name + "' has repeated levels");
          if (c.levels.empty()) throw SchemaError("column '" + c.name + "' declares no levels");
        }
      } else {
        throw SchemaError("unknown column kind '" + kind + "'");
      }
      s.columns.push_back(std::move(c));
    }

    if (j.contains("response") && !j.at("response").is_null()) {
      const auto& rj = j.at("response");
      ResponseSpec r;
      r.column = rj.at("column").get<std::string>();
      const auto rule = rj.value("rule", std::string("identity"));
      if (rule == "threshold")
        r.rule = ResponseRule::threshold;
      else if (rule == "identity")
        r.rule = ResponseRule::identity;
      else
        throw SchemaError("unknown response rule '" + rule + "'");
      r.threshold = rj.value("threshold", 30.0);
      s.response = r;
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema: ") + e.what());
  }
  return s;
}

SchemaSpec load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_schema(buf.str());
}

std::string schema_to_json(const SchemaSpec& s) {
  nlohmann::ordered_json j;
  j["delimiter"] = std::string(1, s.delimiter);
  j["encoding"] = s.encoding == CategoricalEncoding::one_hot ? "one-hot" : "treatment-contrast";
  j["intercept"] = s.intercept;
  j["missing"] = s.missing_tokens;
  j["columns"] = nlohmann::ordered_json::array();
  for (const auto& c : s.columns) {
    nlohmann::ordered_json cj;
    cj["name"] = c.name;
    cj["kind"] = c.kind == ColumnKind::numeric ? "numeric" : "categorical";
    if (c.kind == ColumnKind::categorical && c.levels_declared) cj["levels"] = c.levels;
    j["columns"].push_back(cj);
  }
  if (s.response) {
    nlohmann::ordered_json rj;
    rj["column"] = s.response->column;
    rj["rule"] = s.response->rule == ResponseRule::threshold ? "threshold" : "identity";
    if (s.response->rule == ResponseRule::threshold) rj["threshold"] = s.response->threshold;
    j["response"] = rj;
  }
  return j.dump(2);
}

SchemaSpec airline_benchmark_schema(CategoricalEncoding encoding, bool intercept) {
  auto range = [](int lo, int hi) {
    std::vector<std::string> v;
    for (int k = lo; k <= hi; ++k) v.push_back(std::to_string(k));
    return v;
  };
  SchemaSpec s;
  s.encoding = encoding;
  s.intercept = intercept;
  s.columns = {
      {"Year", ColumnKind::categorical, range(1987, 2008), true},
      {"Month", ColumnKind::categorical, range(1, 12), true},
      {"DayOfWeek", ColumnKind::categorical, range(1, 7), true},
      {"DepTime", ColumnKind::numeric, {}, false},
      {"DepDelay", ColumnKind::numeric, {}, false},
  };
  s.response = ResponseSpec{"ArrDelay", ResponseRule::threshold, 30.0};
  return s;
}

SchemaSpec resolve_levels(const std::filesystem::path& path, const SchemaSpec& schema) {
  if (schema.levels_resolved()) return schema;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file " + path.string(), 0);
  const auto header = read_header(in, schema.delimiter, path);

  std::vector<std::pair<std::size_t, std::set<std::string>>> pending;  // column index -> values
  std::vector<std::size_t> spec_index;
  for (std::size_t k = 0; k < schema.columns.size(); ++k) {
    const auto& c = schema.columns[k];
    if (c.kind == ColumnKind::categorical && !c.levels_declared) {
      pending.emplace_back(find_column(header, c.name), std::set<std::string>{});
      spec_index.push_back(k);
    }
  }
  std::string line;
  while (getline_stripped(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_record(line, schema.delimiter);
    for (auto& [col, values] : pending) {
      if (col >= fields.size()) continue;
      const auto v = trim(fields[col]);
      if (!is_missing(v, schema.missing_tokens)) values.emplace(v);
    }
  }

  SchemaSpec out = schema;
  for (std::size_t k = 0; k < pending.size(); ++k) {
    auto& c = out.columns[spec_index[k]];
    const auto& values = pending[k].second;
    c.levels.assign(values.begin(), values.end());
    // Numeric-looking levels sort by value so "10" follows "9".
    const bool numeric = std::all_of(c.levels.begin(), c.levels.end(),
                                     [](const std::string& s) { return parse_double(s).has_value(); });
    if (numeric)
      std::stable_sort(c.levels.begin(), c.levels.end(),
                       [](const std::string& a, const std::string& b) { return *parse_double(a) < *parse_double(b); });
    if (c.levels.empty()) throw SchemaError("column '" + c.name + "' has no observed values");
    c.levels_declared = true;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Records

std::vector<std::string> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  bool field_started_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char ch = line[k];
    if (quoted) {
      if (ch == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          field.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"' && (field.empty() || trim(field).empty()) && !field_started_quoted) {
      field.clear();
      quoted = true;
      field_started_quoted = true;
    } else if (ch == delimiter) {
      out.push_back(std::move(field));
      field.clear();
      field_started_quoted = false;
    } else {
      field.push_back(ch);
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::optional<double> derive_response(std::string_view field, const ResponseSpec& rule,
                                      const std::vector<std::string>& missing_tokens) {
  field = trim(field);
  if (is_missing(field, missing_tokens)) return std::nullopt;
  const auto value = parse_double(field);
  if (!value) throw ParseError("response field '" + std::string(field) + "' is not numeric", 0);
  if (rule.rule == ResponseRule::threshold) return *value >= rule.threshold ? 1.0 : 0.0;
  return *value;
}

// ---------------------------------------------------------------------------
// Chunk reader

struct ChunkReader::Encoder {
  struct Column {
    std::size_t source;  // position in the header
    Index offset;        // first design column
    ColumnKind kind;
    std::unordered_map<std::string, Index> level_slot;  // level -> design column, -1 for reference level
  };
  std::vector<Column> columns;
  std::optional<std::size_t> response_source;
  std::size_t header_width = 0;
  Index width = 0;
};

ChunkReader::ChunkReader(const std::filesystem::path& path, SchemaSpec schema, std::size_t chunk_rows)
    : schema_(resolve_levels(path, schema)), chunk_rows_(chunk_rows), in_(path) {
  if (chunk_rows_ == 0) throw InvalidArgument("chunk_rows must be at least 1");
  if (!in_) throw ParseError("cannot open data file " + path.string(), 0);
  const auto header = read_header(in_, schema_.delimiter, path);
  line_ = 1;

  encoder_ = std::make_unique<Encoder>();
  auto& enc = *encoder_;
  enc.header_width = header.size();
  Index offset = schema_.intercept ? 1 : 0;
  for (const auto& c : schema_.columns) {
    Encoder::Column col{find_column(header, c.name), offset, c.kind, {}};
    if (c.kind == ColumnKind::numeric) {
      offset += 1;
    } else {
      const bool one_hot = schema_.encoding == CategoricalEncoding::one_hot;
      for (std::size_t k = 0; k < c.levels.size(); ++k) {
        if (one_hot)
          col.level_slot[c.levels[k]] = offset + static_cast<Index>(k);
        else
          col.level_slot[c.levels[k]] = k == 0 ? Index(-1) : offset + static_cast<Index>(k) - 1;
      }
      offset += one_hot ? static_cast<Index>(c.levels.size()) : static_cast<Index>(c.levels.size()) - 1;
    }
    enc.columns.push_back(std::move(col));
  }
  enc.width = offset;
  if (schema_.response) enc.response_source = find_column(header, schema_.response->column);
}

ChunkReader::~ChunkReader() = default;

std::optional<ModelMatrixChunk> ChunkReader::next() {
  const auto& enc = *encoder_;
  const bool with_response = enc.response_source.has_value();
  std::vector<double> values;
  std::vector<double> responses;
  values.reserve(chunk_rows_ * static_cast<std::size_t>(enc.width));

  ModelMatrixChunk chunk;
  chunk.row_offset = emitted_;
  std::vector<double> row(static_cast<std::size_t>(enc.width));
  std::string line;
  std::size_t rows = 0;
  while (rows < chunk_rows_ && getline_stripped(in_, line)) {
    ++line_;
    if (line.empty()) continue;
    const auto fields = split_record(line, schema_.delimiter);
    if (fields.size() != enc.header_width)
      throw ParseError("expected " + std::to_string(enc.header_width) + " fields, found " +
                           std::to_string(fields.size()),
                       line_);

    std::fill(row.begin(), row.end(), 0.0);
    if (schema_.intercept) row[0] = 1.0;
    bool complete = true;
    for (std::size_t k = 0; k < enc.columns.size() && complete; ++k) {
      const auto& col = enc.columns[k];
      const auto field = trim(fields[col.source]);
      if (is_missing(field, schema_.missing_tokens)) {
        complete = false;
        break;
      }
      if (col.kind == ColumnKind::numeric) {
        const auto v = parse_double(field);
        if (!v)
          throw ParseError("column '" + schema_.columns[k].name + "': cannot parse '" + std::string(field) +
                               "' as a number",
                           line_);
        row[static_cast<std::size_t>(col.offset)] = *v;
      } else {
        const auto it = col.level_slot.find(std::string(field));
        if (it == col.level_slot.end())
          throw ParseError("column '" + schema_.columns[k].name + "': undeclared level '" + std::string(field) +
                               "'",
                           line_);
        if (it->second >= 0) row[static_cast<std::size_t>(it->second)] = 1.0;
      }
    }
    std::optional<double> y;
    if (complete && with_response) {
      try {
        y = derive_response(fields[*enc.response_source], *schema_.response, schema_.missing_tokens);
      } catch (const ParseError& e) {
        throw ParseError(e.what(), line_);
      }
      complete = y.has_value();
    }
    if (!complete) {
      ++chunk.dropped_rows;
      ++dropped_;
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
    if (with_response) responses.push_back(*y);
    chunk.source_rows.push_back(emitted_ + rows);
    ++rows;
  }
  if (rows == 0) return std::nullopt;

  chunk.design = Eigen::Map<const MatrixXdr>(values.data(), static_cast<Index>(rows), enc.width);
  if (with_response) chunk.response = Eigen::Map<const Eigen::VectorXd>(responses.data(), static_cast<Index>(rows));
  emitted_ += rows;
  return chunk;
}

std::vector<ModelMatrixChunk> read_chunks(const std::filesystem::path& path, const SchemaSpec& schema,
                                          std::size_t chunk_rows) {
  ChunkReader reader(path, schema, chunk_rows);
  std::vector<ModelMatrixChunk> out;
  while (auto chunk = reader.next()) out.push_back(std::move(*chunk));
  return out;
}

ModelMatrixChunk sample_rows(const std::filesystem::path& path, const SchemaSpec& schema, const SampleSpec& spec,
                             std::size_t chunk_rows) {
  if (spec.count == 0) throw InvalidArgument("sample size must be at least 1");
  ChunkReader reader(path, schema, chunk_rows);
  const Index width = reader.schema().width();
  const bool with_response = reader.schema().response.has_value();

  struct Row {
    Eigen::RowVectorXd x;
    double y;
  };
  std::vector<std::pair<std::size_t, Row>> kept;
  Rng rng(spec.seed);
  ReservoirSampler<Row> sampler(spec.count, rng);
  bool done = false;
  while (!done) {
    auto chunk = reader.next();
    if (!chunk) break;
    for (Index r = 0; r < chunk->design.rows(); ++r) {
      Row row{chunk->design.row(r), with_response ? (*chunk->response)[r] : 0.0};
      const std::size_t index = chunk->source_rows[static_cast<std::size_t>(r)];
      if (spec.kind == SampleKind::head) {
        kept.emplace_back(index, std::move(row));
        if (kept.size() == spec.count) {
          done = true;
          break;
        }
      } else {
        sampler.offer(std::move(row));
      }
    }
  }
  if (spec.kind == SampleKind::random) kept = sampler.take();
  if (kept.size() < spec.count)
    throw InvalidArgument("requested " + std::to_string(spec.count) + " rows but the file has only " +
                          std::to_string(spec.kind == SampleKind::random ? sampler.seen() : kept.size()) +
                          " valid rows");

  ModelMatrixChunk out;
  out.design.resize(static_cast<Index>(kept.size()), width);
  if (with_response) out.response = Eigen::VectorXd(static_cast<Index>(kept.size()));
  out.dropped_rows = reader.rows_dropped();
  for (std::size_t k = 0; k < kept.size(); ++k) {
    out.design.row(static_cast<Index>(k)) = kept[k].second.x;
    if (with_response) (*out.response)[static_cast<Index>(k)] = kept[k].second.y;
    out.source_rows.push_back(kept[k].first);
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const SchemaSpec& schema, std::size_t chunk_rows) {
  ChunkReader reader(path, schema, chunk_rows);
  std::vector<ModelMatrixChunk> chunks;
  Index rows = 0;
  while (auto chunk = reader.next()) {
    rows += chunk->design.rows();
    chunks.push_back(std::move(*chunk));
  }
  Dataset out;
  out.names = reader.schema().design_names();
  out.dropped_rows = reader.rows_dropped();
  out.design.resize(rows, reader.schema().width());
  const bool with_response = reader.schema().response.has_value();
  if (with_response) out.response = Eigen::VectorXd(rows);
  Index at = 0;
  for (const auto& c : chunks) {
    out.design.middleRows(at, c.design.rows()) = c.design;
    if (with_response) out.response->segment(at, c.design.rows()) = *c.response;
    at += c.design.rows();
  }
  return out;
}

}  // namespace concord
