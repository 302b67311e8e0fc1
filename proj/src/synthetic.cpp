#include "concord/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "concord/parallel.hpp"
#include "concord/random.hpp"

namespace concord {

namespace {

enum Stream : std::uint64_t { design_stream = 1, noise_stream = 2, category_stream = 3 };

// Standard normal terciles.
constexpr double kTercile = 0.43072729929545756;

double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

void append_number(std::string& line, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

const char* to_string(ResponseKind k) {
  switch (k) {
    case ResponseKind::linear: return "linear";
    case ResponseKind::logistic: return "logistic";
    case ResponseKind::none: return "none";
  }
  return "?";
}

Eigen::MatrixXd identity_sigma(Index d) {
  if (d < 1) throw InvalidArgument("d must be at least 1");
  return Eigen::MatrixXd::Identity(d, d);
}

Eigen::MatrixXd equicorrelated_sigma(Index d, double rho) {
  if (d < 1) throw InvalidArgument("d must be at least 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("equicorrelation rho must lie in [0, 1)");
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(d, d, rho);
  s.diagonal().setOnes();
  return s;
}

SyntheticData generate(const SyntheticSpec& spec, std::uint64_t seed, unsigned threads) {
  const Index n = spec.n, d = spec.d;
  if (n < 1 || d < 1) throw InvalidArgument("synthetic data needs n >= 1 and d >= 1");
  if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.noise_sd)) throw InvalidArgument("noise sd must be finite and >= 0");

  SyntheticData out;
  out.seed = seed;
  out.sigma = spec.sigma.size() ? spec.sigma : identity_sigma(d);
  if (out.sigma.rows() != d || out.sigma.cols() != d) throw DimensionError("sigma must be d x d");
  require_finite(out.sigma, "sigma");
  if (!out.sigma.isApprox(out.sigma.transpose(), 1e-12)) throw NotSymmetricError("sigma is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(out.sigma);
  if (llt.info() != Eigen::Success) throw SingularMatrixError("sigma is not positive definite");
  out.cholesky = llt.matrixL();

  if (spec.beta.size()) {
    if (spec.beta.size() != d) throw DimensionError("beta must have d entries");
    require_finite(spec.beta, "beta");
    out.beta = spec.beta;
  } else {
    out.beta = spec.response == ResponseKind::none ? Eigen::VectorXd::Zero(d) : Eigen::VectorXd::Ones(d);
  }
  if (spec.drift) {
    if (spec.drift->column < 0 || spec.drift->column >= d) throw InvalidArgument("drift column out of range");
    if (!std::isfinite(spec.drift->magnitude)) throw InvalidArgument("drift magnitude must be finite");
  }

  out.x.resize(n, d);
  const bool with_y = spec.response != ResponseKind::none;
  if (with_y) out.y = Eigen::VectorXd(n);
  if (spec.categorical_demo) out.category.resize(static_cast<std::size_t>(n));

  const std::uint64_t design_seed = derive_seed(seed, design_stream);
  const std::uint64_t noise_seed = derive_seed(seed, noise_stream);
  const std::uint64_t category_seed = derive_seed(seed, category_stream);
  const Eigen::MatrixXd lt = out.cholesky.transpose();
  const auto chunks = static_cast<std::size_t>((n + kSyntheticChunkRows - 1) / kSyntheticChunkRows);

  parallel_for(chunks, threads, [&](std::size_t c) {
    const Index first = static_cast<Index>(c) * kSyntheticChunkRows;
    const Index last = std::min(n, first + kSyntheticChunkRows);
    Rng design(design_seed, c), noise(noise_seed, c), category(category_seed, c);
    Eigen::RowVectorXd z(d);
    for (Index r = first; r < last; ++r) {
      for (Index j = 0; j < d; ++j) z[j] = design.normal();
      out.x.row(r).noalias() = z * lt;
      if (spec.drift) out.x(r, spec.drift->column) += spec.drift->magnitude * double(r) / double(n);
      if (with_y) {
        const double eta = out.x.row(r).dot(out.beta);
        if (spec.response == ResponseKind::linear) {
          // The noise draw is consumed even when sd is 0 so streams stay aligned.
          (*out.y)[r] = eta + spec.noise_sd * noise.normal();
        } else {
          (*out.y)[r] = noise.uniform() < logistic(eta) ? 1.0 : 0.0;
        }
      }
      if (spec.categorical_demo) {
        const double g = category.normal();
        out.category[static_cast<std::size_t>(r)] = g < -kTercile ? kDemoLevels[0] : g < kTercile ? kDemoLevels[1] : kDemoLevels[2];
      }
    }
  });
  return out;
}

std::vector<std::string> synthetic_column_names(const SyntheticData& data) {
  std::vector<std::string> names;
  for (Index j = 0; j < data.x.cols(); ++j) names.push_back("x" + std::to_string(j));
  if (!data.category.empty()) names.emplace_back("g");
  if (data.y) names.emplace_back("y");
  return names;
}

void write_delimited(const SyntheticData& data, const std::filesystem::path& path, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  const auto names = synthetic_column_names(data);
  std::string line;
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (k) line.push_back(delimiter);
    line += names[k];
  }
  line.push_back('\n');
  out << line;
  for (Index r = 0; r < data.x.rows(); ++r) {
    line.clear();
    for (Index j = 0; j < data.x.cols(); ++j) {
      if (j) line.push_back(delimiter);
      append_number(line, data.x(r, j));
    }
    if (!data.category.empty()) {
      line.push_back(delimiter);
      line += data.category[static_cast<std::size_t>(r)];
    }
    if (data.y) {
      line.push_back(delimiter);
      append_number(line, (*data.y)[r]);
    }
    line.push_back('\n');
    out << line;
  }
  if (!out) throw InvalidArgument("write to " + path.string() + " failed");
}

SchemaSpec synthetic_schema(const SyntheticData& data, CategoricalEncoding encoding, bool intercept, char delimiter) {
  SchemaSpec s;
  s.encoding = encoding;
  s.intercept = intercept;
  s.delimiter = delimiter;
  for (Index j = 0; j < data.x.cols(); ++j) s.columns.push_back({"x" + std::to_string(j), ColumnKind::numeric, {}, false});
  if (!data.category.empty()) s.columns.push_back({"g", ColumnKind::categorical, kDemoLevels, true});
  if (data.y) s.response = ResponseSpec{"y", ResponseRule::identity, 30.0};
  return s;
}

}  // namespace concord
