#include "concord/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>

#include "CLI11.hpp"

#include "concord/experiments.hpp"

namespace concord {

namespace {

struct OutputOptions {
  std::string path;
  bool csv = false;
};

void add_output(CLI::App* cmd, OutputOptions& o) {
  cmd->add_option("--out", o.path, "Write records to this file instead of standard output");
  cmd->add_flag("--csv", o.csv, "Emit CSV instead of JSON lines");
}

// Opens --out if given; records otherwise go to `fallback`.
class Sink {
 public:
  Sink(const OutputOptions& o, std::ostream& fallback) {
    if (!o.path.empty()) {
      file_ = std::make_unique<std::ofstream>(o.path, std::ios::binary);
      if (!*file_) throw InvalidArgument("cannot open " + o.path + " for writing");
    }
    writer_ = std::make_unique<RecordWriter>(file_ ? *file_ : fallback, o.csv);
  }
  RecordWriter& writer() { return *writer_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::unique_ptr<RecordWriter> writer_;
};

void error_record(std::ostream& err, const std::string& kind, const std::string& message) {
  Record j;
  j["error"] = kind;
  j["message"] = message;
  err << j.dump() << '\n';
}

const std::map<std::string, Overlap> kModeNames{{"overlap", Overlap::overlapping},
                                                {"nonoverlap", Overlap::nonoverlapping}};
const std::map<std::string, Method> kMethodNames{{"direct", Method::direct}, {"trace", Method::trace}};
const std::map<std::string, SampleKind> kSamplingNames{{"random", SampleKind::random}, {"head", SampleKind::head}};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concordance diagnostics for row subsets and divide-and-recombine regression"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::function<void()> action;
  OutputOptions output;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::size_t chunk_rows = 8192;

  // concordance
  auto* conc = app.add_subcommand("concordance", "Concordance of sampled subsets of a delimited file");
  std::string data_path, schema_path;
  std::vector<std::int64_t> sizes;
  int reps = 1;
  std::vector<Overlap> modes{Overlap::overlapping};
  std::vector<Method> methods{Method::trace};
  SampleKind sampling = SampleKind::random;
  bool streaming = false, literal = false;
  conc->add_option("--data", data_path, "Delimited data file")->required()->check(CLI::ExistingFile);
  conc->add_option("--schema", schema_path, "JSON schema file")->required()->check(CLI::ExistingFile);
  conc->add_option("--sizes", sizes, "Subset sizes, comma separated")->required()->delimiter(',');
  conc->add_option("--reps", reps, "Repetitions per size")->capture_default_str();
  conc->add_option("--mode", modes, "overlap and/or nonoverlap")
      ->delimiter(',')
      ->transform(CLI::CheckedTransformer(kModeNames))
      ->capture_default_str();
  conc->add_option("--method", methods, "direct and/or trace")
      ->delimiter(',')
      ->transform(CLI::CheckedTransformer(kMethodNames));
  conc->add_option("--sampling", sampling, "random or head (first rows)")
      ->transform(CLI::CheckedTransformer(kSamplingNames));
  conc->add_flag("--streaming", streaming, "Do not hold the file in memory (trace method only)");
  conc->add_flag("--literal-normalization", literal, "Use the rows(A)/(d rows(B)) prefactor");
  conc->add_option("--seed", seed)->capture_default_str();
  conc->add_option("--threads", threads)->capture_default_str();
  conc->add_option("--chunk-rows", chunk_rows)->capture_default_str()->check(CLI::PositiveNumber);
  add_output(conc, output);
  conc->callback([&] {
    action = [&] {
      GridConfig cfg;
      cfg.experiment = "concordance";
      cfg.sizes = sizes;
      cfg.reps = reps;
      cfg.modes = modes;
      cfg.methods = methods;
      cfg.sampling = sampling;
      cfg.seed = seed;
      cfg.threads = threads;
      cfg.normalization = literal ? Normalization::literal : Normalization::row_ratio;
      const auto schema = load_schema(schema_path);
      std::vector<ExperimentResult> records;
      if (streaming) {
        records = run_concordance_grid_streaming(data_path, schema, cfg, chunk_rows);
      } else {
        const auto data = load_dataset(data_path, schema, chunk_rows);
        records = run_concordance_grid(data.design, cfg);
      }
      Sink sink(output, out);
      for (const auto& r : records) sink.writer().write(r);
    };
  });

  // convergence
  auto* conv = app.add_subcommand("convergence", "Concordance grid described by a JSON config");
  std::string config_path;
  conv->add_option("--config", config_path, "Grid config file")->required()->check(CLI::ExistingFile);
  conv->add_option("--threads", threads)->capture_default_str();
  conv->add_option("--chunk-rows", chunk_rows)->capture_default_str()->check(CLI::PositiveNumber);
  add_output(conv, output);
  conv->callback([&] {
    action = [&] {
      const auto cfg = load_convergence_config(config_path);
      const auto records = run_convergence(cfg, threads, chunk_rows);
      Sink sink(output, out);
      for (const auto& r : records) sink.writer().write(r);
    };
  });

  // glm
  auto* glm = app.add_subcommand("glm", "Logistic fits on random subsets against a reference fit");
  std::optional<std::size_t> reference_rows;
  int max_iter = 25;
  glm->add_option("--data", data_path)->required()->check(CLI::ExistingFile);
  glm->add_option("--schema", schema_path)->required()->check(CLI::ExistingFile);
  glm->add_option("--sizes", sizes)->required()->delimiter(',');
  glm->add_option("--reps", reps)->capture_default_str();
  glm->add_option("--reference-rows", reference_rows, "Fit the reference on a random sample of this size");
  glm->add_option("--max-iter", max_iter)->capture_default_str();
  glm->add_option("--seed", seed)->capture_default_str();
  glm->add_option("--threads", threads)->capture_default_str();
  glm->add_option("--chunk-rows", chunk_rows)->capture_default_str()->check(CLI::PositiveNumber);
  add_output(glm, output);
  glm->callback([&] {
    action = [&] {
      const auto schema = load_schema(schema_path);
      if (!schema.response) throw SchemaError("glm needs a schema with a response");
      const auto data = load_dataset(data_path, schema, chunk_rows);
      GlmConfig cfg;
      cfg.sizes = sizes;
      cfg.reps = reps;
      cfg.seed = seed;
      cfg.threads = threads;
      cfg.reference_rows = reference_rows;
      cfg.irls.max_iter = max_iter;
      cfg.names = data.names;
      const auto records = run_glm_experiment(data.design, *data.response, cfg);
      Sink sink(output, out);
      for (const auto& r : records) sink.writer().write(r);
    };
  });

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo check of the concordance sampling models");
  SimulationConfig sim_cfg;
  std::string regime = "overlap";
  double rho = 0.0;
  sim->add_option("--i", sim_cfg.i, "Subset rows")->capture_default_str();
  sim->add_option("--n", sim_cfg.n, "Total rows")->capture_default_str();
  sim->add_option("--d", sim_cfg.d, "Columns")->capture_default_str();
  sim->add_option("--trials", sim_cfg.trials)->capture_default_str();
  sim->add_option("--mode", regime, "overlap, nonoverlap or cauchy")
      ->check(CLI::IsMember({"overlap", "nonoverlap", "cauchy"}))
      ->capture_default_str();
  sim->add_option("--rho", rho, "Equicorrelation of the population covariance")->capture_default_str();
  sim->add_option("--seed", seed)->capture_default_str();
  sim->add_option("--threads", threads)->capture_default_str();
  add_output(sim, output);
  sim->callback([&] {
    action = [&] {
      const Stopwatch clock;
      sim_cfg.regime = regime == "overlap"      ? SimulationRegime::overlapping
                       : regime == "nonoverlap" ? SimulationRegime::nonoverlapping
                                                : SimulationRegime::cauchy;
      sim_cfg.seed = seed;
      sim_cfg.threads = threads;
      if (rho != 0.0) sim_cfg.sigma = equicorrelated_sigma(sim_cfg.d, rho);
      const auto report = simulate_concordance(sim_cfg);
      Sink sink(output, out);
      sink.writer().write(simulation_record(report, sim_cfg, clock.seconds()));
    };
  });

  // partition-size
  auto* part = app.add_subcommand("partition-size", "Smallest block size meeting a concordance tolerance");
  std::int64_t n = 0, d = 0;
  double tolerance = 0.02, confidence = 0.95;
  Overlap mode = Overlap::overlapping;
  part->add_option("--n", n, "Total rows")->required();
  part->add_option("--d", d, "Columns")->required();
  part->add_option("--tolerance", tolerance)->capture_default_str();
  part->add_option("--confidence", confidence)->capture_default_str();
  part->add_option("--mode", mode)->transform(CLI::CheckedTransformer(kModeNames));
  add_output(part, output);
  part->callback([&] {
    action = [&] {
      const auto choice = choose_partition_size(n, d, tolerance, confidence, mode);
      Sink sink(output, out);
      sink.writer().write(partition_record(choice, n, d, tolerance, confidence, mode));
    };
  });

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset and its schema");
  SyntheticSpec spec;
  std::string response = "linear", schema_out, encoding = "one-hot";
  std::vector<double> beta;
  std::optional<Index> drift_column;
  double drift_magnitude = 0.0;
  bool intercept = false;
  gen->add_option("--n", spec.n)->capture_default_str();
  gen->add_option("--d", spec.d)->capture_default_str();
  gen->add_option("--rho", rho, "Equicorrelation")->capture_default_str();
  gen->add_option("--beta", beta, "Coefficients, comma separated (default all ones)")->delimiter(',');
  gen->add_option("--noise-sd", spec.noise_sd)->capture_default_str();
  gen->add_option("--response", response)->check(CLI::IsMember({"linear", "logistic", "none"}))->capture_default_str();
  gen->add_option("--drift-column", drift_column, "Column receiving magnitude * row / n");
  gen->add_option("--drift-magnitude", drift_magnitude)->capture_default_str();
  gen->add_flag("--categorical", spec.categorical_demo, "Add a 3-level column g");
  gen->add_option("--data", data_path, "Output data file")->required();
  gen->add_option("--schema", schema_out, "Output schema file");
  gen->add_option("--encoding", encoding)->check(CLI::IsMember({"one-hot", "treatment-contrast"}))->capture_default_str();
  gen->add_flag("--intercept", intercept, "Schema adds an intercept column");
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--threads", threads)->capture_default_str();
  add_output(gen, output);
  gen->callback([&] {
    action = [&] {
      spec.response = response == "linear"     ? ResponseKind::linear
                      : response == "logistic" ? ResponseKind::logistic
                                               : ResponseKind::none;
      if (rho != 0.0) spec.sigma = equicorrelated_sigma(spec.d, rho);
      if (!beta.empty()) spec.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Index>(beta.size()));
      if (drift_column) spec.drift = DriftSpec{*drift_column, drift_magnitude};
      const auto data = generate(spec, seed, threads);
      write_delimited(data, data_path);
      const auto schema = synthetic_schema(
          data, encoding == "one-hot" ? CategoricalEncoding::one_hot : CategoricalEncoding::treatment_contrast,
          intercept);
      if (!schema_out.empty()) {
        std::ofstream s(schema_out);
        if (!s) throw InvalidArgument("cannot open " + schema_out + " for writing");
        s << schema_to_json(schema) << '\n';
      }
      Record j;
      j["experiment"] = "generate";
      j["data"] = data_path;
      j["schema"] = schema_out.empty() ? Record(nullptr) : Record(schema_out);
      j["n"] = spec.n;
      j["d"] = spec.d;
      j["response"] = to_string(spec.response);
      j["seed"] = seed;
      j["design_width"] = schema.width();
      Sink sink(output, out);
      sink.writer().write(j);
    };
  });

  // cost
  auto* cost = app.add_subcommand("cost", "Bytes sent to the combiner: D&R vs pooled normal equations");
  std::uint64_t r_blocks = 100, cost_d = 1000, bytes = 8;
  cost->add_option("--r", r_blocks, "Blocks")->capture_default_str();
  cost->add_option("--d", cost_d, "Columns")->capture_default_str();
  cost->add_option("--bytes", bytes, "Bytes per value")->capture_default_str();
  add_output(cost, output);
  cost->callback([&] {
    action = [&] {
      Sink sink(output, out);
      sink.writer().write(cost_record(communication_cost(r_blocks, cost_d, bytes), r_blocks, cost_d, bytes));
    };
  });

  try {
    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_record(err, "usage", e.what());
    return 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const Error& e) {
    error_record(err, e.kind(), e.what());
  } catch (const std::exception& e) {
    error_record(err, "internal", e.what());
  }
  return 1;
}

}  // namespace concord
