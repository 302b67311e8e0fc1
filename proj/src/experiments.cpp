#include "concord/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "concord/parallel.hpp"
#include "concord/random.hpp"

namespace concord {

namespace {

constexpr std::uint64_t kReferenceStream = 0x5245464552454e43ULL;

Record number_or_null(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v < 0 ? "-inf" : "inf";
  if (std::isnan(*v)) return "nan";
  return *v;
}

Record quantile_object(const std::vector<double>& values) {
  if (values.empty()) return nullptr;
  static const char* keys[] = {"q05", "q25", "q50", "q75", "q95"};
  Record out = Record::object();
  for (std::size_t k = 0; k < values.size() && k < 5; ++k) out[keys[k]] = values[k];
  return out;
}

void flatten(const Record& value, const std::string& prefix, std::vector<std::pair<std::string, Record>>& out) {
  if (value.is_object()) {
    for (const auto& [key, v] : value.items()) flatten(v, prefix.empty() ? key : prefix + "." + key, out);
  } else if (value.is_array()) {
    for (std::size_t k = 0; k < value.size(); ++k) flatten(value[k], prefix + "." + std::to_string(k), out);
  } else {
    out.emplace_back(prefix, value);
  }
}

std::string csv_cell(const Record& v) {
  if (v.is_null()) return {};
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

std::string error_text(const Error& e) { return e.kind() + ": " + e.what(); }

std::vector<double> sorted_quantiles(Eigen::VectorXd terms) {
  std::vector<double> sorted(terms.data(), terms.data() + terms.size());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  for (double p : kRecordProbabilities) out.push_back(sample_quantile(sorted, p));
  return out;
}

std::vector<double> model_term_quantiles(std::int64_t i, std::int64_t n, std::int64_t d, Overlap mode) {
  std::vector<double> out;
  if (mode == Overlap::overlapping) {
    const auto m = model_overlapping(i, n, d);
    for (double p : kRecordProbabilities) out.push_back(m.term_quantile(p));
  } else if (n - i > 4) {
    const auto m = model_nonoverlapping_f(i, n, d);
    for (double p : kRecordProbabilities) out.push_back(m.term_quantile(p));
  }
  return out;
}

void validate_grid(const GridConfig& cfg, std::size_t n) {
  if (cfg.reps < 0) throw InvalidArgument("reps must be >= 0");
  if (cfg.modes.empty()) throw InvalidArgument("grid needs at least one mode");
  if (cfg.methods.empty()) throw InvalidArgument("grid needs at least one method");
  for (auto s : cfg.sizes) {
    if (s < 1) throw InvalidArgument("sample sizes must be positive");
    if (static_cast<std::size_t>(s) > n)
      throw InvalidArgument("sample size " + std::to_string(s) + " exceeds the " + std::to_string(n) +
                            " available rows");
  }
}

ExperimentResult base_record(const GridConfig& cfg, std::int64_t size, int rep, std::int64_t n, std::int64_t d) {
  ExperimentResult r;
  r.experiment = cfg.experiment;
  r.size = size;
  r.rep = rep;
  r.sampling = to_string(cfg.sampling);
  r.seed = cfg.seed;
  r.subset_seed = subset_seed(cfg.seed, size, rep);
  r.n_total = n;
  r.d = d;
  return r;
}

void fill_trace(ExperimentResult& rec, const ScatterSummary<double>& total, const ScatterSummary<double>& subset,
                Overlap mode, const GridConfig& cfg) {
  ConcordanceOptions<double> opts;
  opts.normalization = cfg.normalization;
  const auto res = concordance_subset(total, subset, mode, opts);
  rec.concordance = res.value;
  rec.term_quantiles = sorted_quantiles(res.terms);
  rec.model_quantiles = model_term_quantiles(subset.count(), total.count(), total.dim(), mode);
}

MatrixXdr gather_rows(const MatrixXdr& x, const std::vector<std::size_t>& rows) {
  MatrixXdr out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = x.row(static_cast<Index>(rows[k]));
  return out;
}

MatrixXdr complement_rows(const MatrixXdr& x, const std::vector<std::size_t>& rows) {
  std::vector<std::size_t> rest;
  rest.reserve(static_cast<std::size_t>(x.rows()) - rows.size());
  std::size_t at = 0;
  for (std::size_t r = 0; r < static_cast<std::size_t>(x.rows()); ++r) {
    if (at < rows.size() && rows[at] == r)
      ++at;
    else
      rest.push_back(r);
  }
  return gather_rows(x, rest);
}

// Runs `per_point(size, rep)` for every (size, rep) in grid order; each call
// returns that point's records (one per mode x method).
template <typename Fn>
std::vector<ExperimentResult> run_points(const std::vector<std::int64_t>& sizes, int reps, unsigned threads, Fn&& per_point) {
  const std::size_t points = sizes.size() * static_cast<std::size_t>(std::max(reps, 0));
  std::vector<std::vector<ExperimentResult>> slots(points);
  parallel_for(points, threads, [&](std::size_t k) {
    const auto size = sizes[k / static_cast<std::size_t>(reps)];
    const int rep = static_cast<int>(k % static_cast<std::size_t>(reps));
    slots[k] = per_point(size, rep);
  });
  std::vector<ExperimentResult> out;
  for (auto& s : slots)
    for (auto& r : s) out.push_back(std::move(r));
  return out;
}

}  // namespace

const char* to_string(SampleKind k) { return k == SampleKind::random ? "random" : "head"; }

Overlap parse_overlap(const std::string& s) {
  if (s == "overlap" || s == "overlapping") return Overlap::overlapping;
  if (s == "nonoverlap" || s == "nonoverlapping") return Overlap::nonoverlapping;
  throw InvalidArgument("unknown mode '" + s + "' (expected overlap or nonoverlap)");
}

Method parse_method(const std::string& s) {
  if (s == "direct") return Method::direct;
  if (s == "trace") return Method::trace;
  throw InvalidArgument("unknown method '" + s + "' (expected direct or trace)");
}

SampleKind parse_sampling(const std::string& s) {
  if (s == "random") return SampleKind::random;
  if (s == "head") return SampleKind::head;
  throw InvalidArgument("unknown sampling '" + s + "' (expected random or head)");
}

Record to_record(const ExperimentResult& r) {
  Record j;
  j["experiment"] = r.experiment;
  j["size"] = r.size;
  j["rep"] = r.rep;
  j["mode"] = r.mode.empty() ? Record(nullptr) : Record(r.mode);
  j["method"] = r.method;
  j["sampling"] = r.sampling;
  j["seed"] = r.seed;
  j["subset_seed"] = r.subset_seed;
  j["n_total"] = r.n_total;
  j["d"] = r.d;
  j["concordance"] = number_or_null(r.concordance);
  j["term_quantiles"] = quantile_object(r.term_quantiles);
  j["model_quantiles"] = quantile_object(r.model_quantiles);
  j["log_mse"] = number_or_null(r.log_mse);
  j["converged"] = r.converged ? Record(*r.converged) : Record(nullptr);
  j["iterations"] = r.iterations ? Record(*r.iterations) : Record(nullptr);
  j["error"] = r.error ? Record(*r.error) : Record(nullptr);
  j["runtime_seconds"] = r.runtime_seconds;
  return j;
}

void RecordWriter::write(const Record& record) {
  if (!csv_) {
    *out_ << record.dump() << '\n';
    return;
  }
  std::vector<std::pair<std::string, Record>> cells;
  flatten(record, "", cells);
  if (columns_.empty()) {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      columns_.push_back(cells[k].first);
      *out_ << (k ? "," : "") << csv_cell(cells[k].first);
    }
    *out_ << '\n';
  }
  // Cells are matched by name; records with null sub-objects leave blanks.
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) *out_ << ',';
    for (const auto& [name, value] : cells)
      if (name == columns_[c]) {
        *out_ << csv_cell(value);
        break;
      }
  }
  *out_ << '\n';
}

Record strip_runtime(Record record) {
  record.erase("runtime_seconds");
  return record;
}

std::uint64_t subset_seed(std::uint64_t seed, std::int64_t size, int rep) {
  return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(size)), static_cast<std::uint64_t>(rep));
}

std::vector<std::size_t> select_rows(std::size_t n, std::size_t count, SampleKind kind, std::uint64_t seed) {
  if (count > n)
    throw InvalidArgument("cannot draw " + std::to_string(count) + " rows from " + std::to_string(n));
  if (kind == SampleKind::head) {
    std::vector<std::size_t> rows(count);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }
  Rng rng(seed);
  return sample_indices(n, count, rng);
}

std::vector<ExperimentResult> run_concordance_grid(const MatrixXdr& design, const GridConfig& cfg) {
  const auto n = static_cast<std::size_t>(design.rows());
  const Index d = design.cols();
  validate_grid(cfg, n);
  if (d < 1) throw DimensionError("design has no columns");

  ScatterSummary<double> total(d);
  total.accumulate(design);

  return run_points(cfg.sizes, cfg.reps, cfg.threads, [&](std::int64_t size, int rep) {
    std::vector<ExperimentResult> out;
    const Stopwatch draw_clock;
    const auto seed = subset_seed(cfg.seed, size, rep);
    const auto rows = select_rows(n, static_cast<std::size_t>(size), cfg.sampling, seed);
    const MatrixXdr sub = gather_rows(design, rows);
    ScatterSummary<double> subset(d);
    subset.accumulate(sub);
    const double draw_time = draw_clock.seconds();

    for (const Overlap mode : cfg.modes) {
      for (const Method method : cfg.methods) {
        const Stopwatch clock;
        auto rec = base_record(cfg, size, rep, static_cast<std::int64_t>(n), d);
        rec.mode = mode == Overlap::overlapping ? "overlap" : "nonoverlap";
        rec.method = to_string(method);
        try {
          if (method == Method::trace) {
            fill_trace(rec, total, subset, mode, cfg);
          } else {
            const auto res = mode == Overlap::overlapping
                                 ? concordance_direct(sub, design, cfg.normalization)
                                 : concordance_direct(sub, complement_rows(design, rows), cfg.normalization);
            rec.concordance = res.value;
            rec.model_quantiles = model_term_quantiles(size, static_cast<std::int64_t>(n), d, mode);
          }
        } catch (const Error& e) {
          rec.error = error_text(e);
        }
        rec.runtime_seconds = draw_time + clock.seconds();
        out.push_back(std::move(rec));
      }
    }
    return out;
  });
}

std::vector<ExperimentResult> run_concordance_grid_streaming(const std::filesystem::path& data,
                                                             const SchemaSpec& schema, const GridConfig& cfg,
                                                             std::size_t chunk_rows) {
  for (auto m : cfg.methods)
    if (m != Method::trace) throw InvalidArgument("streaming concordance supports the trace method only");

  ChunkReader reader(data, schema, chunk_rows);
  const SchemaSpec resolved = reader.schema();
  const Index d = resolved.width();
  ScatterSummary<double> total(d);
  while (auto chunk = reader.next()) total.accumulate(chunk->design);
  const auto n = static_cast<std::size_t>(total.count());
  validate_grid(cfg, n);

  return run_points(cfg.sizes, cfg.reps, cfg.threads, [&](std::int64_t size, int rep) {
    std::vector<ExperimentResult> out;
    const Stopwatch draw_clock;
    const auto seed = subset_seed(cfg.seed, size, rep);
    const auto sample = sample_rows(data, resolved, {cfg.sampling, static_cast<std::size_t>(size), seed}, chunk_rows);
    ScatterSummary<double> subset(d);
    subset.accumulate(sample.design);
    const double draw_time = draw_clock.seconds();
    for (const Overlap mode : cfg.modes) {
      const Stopwatch clock;
      auto rec = base_record(cfg, size, rep, static_cast<std::int64_t>(n), d);
      rec.mode = mode == Overlap::overlapping ? "overlap" : "nonoverlap";
      rec.method = to_string(Method::trace);
      try {
        fill_trace(rec, total, subset, mode, cfg);
      } catch (const Error& e) {
        rec.error = error_text(e);
      }
      rec.runtime_seconds = draw_time + clock.seconds();
      out.push_back(std::move(rec));
    }
    return out;
  });
}

std::vector<ExperimentResult> run_glm_experiment(const MatrixXdr& x, const Eigen::VectorXd& y,
                                                 const GlmConfig& cfg) {
  const auto n = static_cast<std::size_t>(x.rows());
  const Index d = x.cols();
  if (y.size() != x.rows()) throw DimensionError("response length does not match the design");
  GridConfig grid;
  grid.sizes = cfg.sizes;
  grid.reps = cfg.reps;
  validate_grid(grid, n);

  // Coefficients compared in the log MSE: everything but an intercept.
  std::vector<Index> slopes;
  for (Index j = 0; j < d; ++j)
    if (static_cast<std::size_t>(j) >= cfg.names.size() || cfg.names[static_cast<std::size_t>(j)] != "(Intercept)")
      slopes.push_back(j);
  if (slopes.empty()) throw InvalidArgument("GLM experiment needs at least one non-intercept column");
  auto pick = [&](const Eigen::VectorXd& beta) {
    Eigen::VectorXd out(static_cast<Index>(slopes.size()));
    for (std::size_t k = 0; k < slopes.size(); ++k) out[static_cast<Index>(k)] = beta[slopes[k]];
    return out;
  };

  FitResult reference;
  if (cfg.reference_rows && *cfg.reference_rows < n) {
    const auto rows = select_rows(n, *cfg.reference_rows, SampleKind::random, derive_seed(cfg.seed, kReferenceStream));
    Eigen::VectorXd yref(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) yref[static_cast<Index>(k)] = y[static_cast<Index>(rows[k])];
    reference = fit_irls_logistic(gather_rows(x, rows), yref, cfg.irls);
  } else {
    reference = fit_irls_logistic(x, y, cfg.irls);
  }
  const Eigen::VectorXd ref_slopes = pick(reference.coefficients);

  ScatterSummary<double> total(d);
  total.accumulate(x);

  return run_points(cfg.sizes, cfg.reps, cfg.threads, [&](std::int64_t size, int rep) {
    const Stopwatch clock;
    ExperimentResult rec;
    rec.experiment = cfg.experiment;
    rec.size = size;
    rec.rep = rep;
    rec.mode = "overlap";
    rec.method = "irls+trace";
    rec.sampling = to_string(SampleKind::random);
    rec.seed = cfg.seed;
    rec.subset_seed = subset_seed(cfg.seed, size, rep);
    rec.n_total = static_cast<std::int64_t>(n);
    rec.d = d;

    const auto rows = select_rows(n, static_cast<std::size_t>(size), SampleKind::random, rec.subset_seed);
    const MatrixXdr sub = gather_rows(x, rows);
    Eigen::VectorXd ysub(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) ysub[static_cast<Index>(k)] = y[static_cast<Index>(rows[k])];

    ScatterSummary<double> subset(d);
    subset.accumulate(sub);
    try {
      rec.concordance = concordance_subset(total, subset, Overlap::overlapping).value;
    } catch (const Error& e) {
      rec.error = error_text(e);
    }
    try {
      const auto fit = fit_irls_logistic(sub, ysub, cfg.irls);
      rec.converged = true;
      rec.iterations = fit.diagnostics.iterations;
      rec.log_mse = coefficient_log_mse(pick(fit.coefficients), ref_slopes);
    } catch (const Error& e) {
      rec.converged = false;
      const std::string msg = error_text(e);
      rec.error = rec.error ? *rec.error + "; " + msg : msg;
    }
    rec.runtime_seconds = clock.seconds();
    return std::vector<ExperimentResult>{std::move(rec)};
  });
}

SyntheticSpec parse_synthetic_spec(const nlohmann::json& j) {
  SyntheticSpec s;
  try {
    s.n = j.at("n").get<Index>();
    s.d = j.at("d").get<Index>();
    if (j.contains("sigma")) {
      const auto rows = j.at("sigma").get<std::vector<std::vector<double>>>();
      s.sigma.resize(static_cast<Index>(rows.size()), s.d);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Index>(rows[r].size()) != s.d) throw DimensionError("sigma rows must have d entries");
        for (Index c = 0; c < s.d; ++c) s.sigma(static_cast<Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
      }
    } else if (j.contains("rho")) {
      s.sigma = equicorrelated_sigma(s.d, j.at("rho").get<double>());
    }
    if (j.contains("beta")) {
      const auto beta = j.at("beta").get<std::vector<double>>();
      s.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Index>(beta.size()));
    }
    s.noise_sd = j.value("noise_sd", 1.0);
    const auto response = j.value("response", std::string("linear"));
    if (response == "linear")
      s.response = ResponseKind::linear;
    else if (response == "logistic")
      s.response = ResponseKind::logistic;
    else if (response == "none")
      s.response = ResponseKind::none;
    else
      throw InvalidArgument("unknown response kind '" + response + "'");
    if (j.contains("drift") && !j.at("drift").is_null())
      s.drift = DriftSpec{j.at("drift").value("column", Index(0)), j.at("drift").at("magnitude").get<double>()};
    s.categorical_demo = j.value("categorical_demo", false);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed synthetic spec: ") + e.what());
  }
  return s;
}

ConvergenceConfig parse_convergence_config(std::string_view text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  ConvergenceConfig c;
  try {
    c.grid.experiment = j.value("experiment", std::string("convergence"));
    c.grid.sizes = j.value("sizes", std::vector<std::int64_t>{});
    c.grid.reps = j.value("reps", 1);
    c.grid.seed = j.value("seed", std::uint64_t{1});
    c.grid.sampling = parse_sampling(j.value("sampling", std::string("random")));
    if (j.contains("modes")) {
      c.grid.modes.clear();
      for (const auto& m : j.at("modes")) c.grid.modes.push_back(parse_overlap(m.get<std::string>()));
    }
    if (j.contains("methods")) {
      c.grid.methods.clear();
      for (const auto& m : j.at("methods")) c.grid.methods.push_back(parse_method(m.get<std::string>()));
    }
    const bool has_data = j.contains("data"), has_synth = j.contains("synthetic");
    if (has_data == has_synth) throw InvalidArgument("config needs exactly one of 'data' or 'synthetic'");
    auto resolve = [&](const std::string& p) {
      const std::filesystem::path path(p);
      return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    if (has_data) {
      c.data = resolve(j.at("data").get<std::string>());
      if (!j.contains("schema")) throw InvalidArgument("config with 'data' needs 'schema'");
      c.schema = resolve(j.at("schema").get<std::string>());
    } else {
      c.synthetic = parse_synthetic_spec(j.at("synthetic"));
      c.synthetic_seed = j.at("synthetic").value("seed", std::uint64_t{1});
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  if (c.grid.reps < 0) throw InvalidArgument("reps must be >= 0");
  return c;
}

ConvergenceConfig load_convergence_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_convergence_config(buf.str(), path.parent_path());
}

std::vector<ExperimentResult> run_convergence(const ConvergenceConfig& config, unsigned threads,
                                              std::size_t chunk_rows) {
  GridConfig grid = config.grid;
  grid.threads = threads;
  if (grid.sizes.empty()) return {};
  if (config.synthetic) {
    const auto data = generate(*config.synthetic, config.synthetic_seed, threads);
    return run_concordance_grid(data.x, grid);
  }
  const auto dataset = load_dataset(*config.data, load_schema(*config.schema), chunk_rows);
  return run_concordance_grid(dataset.design, grid);
}

Record simulation_record(const MonteCarloReport& report, const SimulationConfig& cfg, double runtime_seconds) {
  Record j;
  j["experiment"] = "simulate";
  j["regime"] = to_string(report.regime);
  j["i"] = cfg.i;
  j["n"] = cfg.n;
  j["d"] = cfg.d;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  j["model_family"] = to_string(report.model.family);
  j["model_location"] = report.model.location;
  j["model_scale_or_variance"] = report.model.scale_or_variance;
  j["approx_kind"] = report.model.approx.kind == ApproxLaw::Kind::normal ? "normal" : "cauchy";
  j["approx_location"] = report.model.approx.location;
  j["approx_spread"] = report.model.approx.spread;
  j["alt_approx_variance"] =
      report.model.alt_approx_variance ? Record(*report.model.alt_approx_variance) : Record(nullptr);
  j["variance_defined"] = report.variance_defined;
  // Moments of a Cauchy sample estimate nothing; leave them out.
  j["empirical_mean"] = report.variance_defined ? Record(report.empirical_mean) : Record(nullptr);
  j["empirical_variance"] = report.variance_defined ? Record(report.empirical_variance) : Record(nullptr);
  j["median"] = report.median;
  j["iqr"] = report.iqr;
  Record q = Record::array();
  for (const auto& t : report.quantiles) q.push_back({{"p", t.p}, {"empirical", t.empirical}, {"model", t.model}});
  j["quantiles"] = q;
  j["notes"] = report.model.notes;
  j["runtime_seconds"] = runtime_seconds;
  return j;
}

Record partition_record(const PartitionSizeChoice& c, std::int64_t n, std::int64_t d, double tolerance,
                        double confidence, Overlap mode) {
  Record j;
  j["experiment"] = "partition-size";
  j["n"] = n;
  j["d"] = d;
  j["tolerance"] = tolerance;
  j["confidence"] = confidence;
  j["mode"] = mode == Overlap::overlapping ? "overlap" : "nonoverlap";
  j["block_size"] = c.block_size;
  j["blocks"] = c.block_size > 0 ? (n + c.block_size - 1) / c.block_size : 0;
  j["z"] = c.z;
  j["variance"] = c.variance;
  j["bound"] = c.bound;
  j["previous_variance"] = c.previous_variance ? Record(*c.previous_variance) : Record(nullptr);
  j["previous_bound"] = c.previous_variance ? Record(c.z * std::sqrt(*c.previous_variance)) : Record(nullptr);
  j["satisfied"] = c.satisfied;
  return j;
}

Record cost_record(const CommunicationCost& c, std::uint64_t r, std::uint64_t d, std::uint64_t bytes) {
  Record j;
  j["experiment"] = "cost";
  j["r"] = r;
  j["d"] = d;
  j["bytes_per_value"] = bytes;
  j["dnr_values"] = c.dnr_values;
  j["pooled_values"] = c.pooled_values;
  j["dnr_bytes"] = c.dnr_bytes;
  j["pooled_bytes"] = c.pooled_bytes;
  j["ratio"] = static_cast<double>(c.pooled_bytes) / static_cast<double>(c.dnr_bytes);
  return j;
}

}  // namespace concord
