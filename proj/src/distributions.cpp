#include "concord/distributions.hpp"

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "concord/parallel.hpp"
#include "concord/random.hpp"

namespace concord {

namespace {

void check_probability(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("probability must lie in (0, 1)");
}

double cauchy_quantile(double location, double scale, double p) {
  return location + scale * std::tan(std::numbers::pi * (p - 0.5));
}

}  // namespace

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::scaled_beta: return "scaled-beta";
    case ModelFamily::f: return "f";
    case ModelFamily::cauchy: return "cauchy";
  }
  return "?";
}

const char* to_string(SimulationRegime r) {
  switch (r) {
    case SimulationRegime::overlapping: return "overlapping";
    case SimulationRegime::nonoverlapping: return "nonoverlapping";
    case SimulationRegime::cauchy: return "cauchy";
  }
  return "?";
}

double normal_quantile(double p) {
  check_probability(p);
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double ApproxLaw::quantile(double p) const {
  check_probability(p);
  if (kind == Kind::cauchy) return cauchy_quantile(location, spread, p);
  if (spread == 0.0) return location;
  return location + std::sqrt(spread) * normal_quantile(p);
}

double ConcordanceModel::term_quantile(double p) const {
  check_probability(p);
  switch (family) {
    case ModelFamily::scaled_beta: {
      if (i == n) return 1.0;
      const boost::math::beta_distribution<double> beta(0.5 * double(i), 0.5 * double(n - i));
      return double(n) / double(i) * boost::math::quantile(beta, p);
    }
    case ModelFamily::f: {
      const boost::math::fisher_f_distribution<double> f(double(i), double(n - i));
      return boost::math::quantile(f, p);
    }
    case ModelFamily::cauchy: return cauchy_quantile(location, scale_or_variance, p);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

ConcordanceModel model_overlapping(std::int64_t i, std::int64_t n, std::int64_t d) {
  if (i <= 0) throw InvalidArgument("overlapping model needs i > 0");
  if (i > n) throw InvalidArgument("overlapping model needs i <= n");
  if (d < 1) throw InvalidArgument("overlapping model needs d >= 1");
  const double fi = double(i), fn = double(n), fd = double(d);

  ConcordanceModel m;
  m.family = ModelFamily::scaled_beta;
  m.i = i;
  m.n = n;
  m.d = d;
  m.location = 1.0;
  m.scale_or_variance = 2.0 * (fn - fi) / (fi * (fn + 2.0));
  m.approx = {ApproxLaw::Kind::normal, 1.0, m.scale_or_variance / fd};
  m.alt_approx_variance = 2.0 * (fn - fi) / (fd * fi * fn);
  m.notes.push_back("alt_approx_variance uses n in place of n+2 in the denominator");
  return m;
}

ConcordanceModel model_nonoverlapping_f(std::int64_t i, std::int64_t n, std::int64_t d) {
  if (i < 1) throw InvalidArgument("F model needs i >= 1");
  if (n - i <= 4) throw InvalidArgument("F model needs n - i > 4 for a finite variance");
  if (d < 1) throw InvalidArgument("F model needs d >= 1");
  const double fi = double(i), fn = double(n), fd = double(d), m2 = fn - fi;

  ConcordanceModel m;
  m.family = ModelFamily::f;
  m.i = i;
  m.n = n;
  m.d = d;
  m.location = m2 / (m2 - 2.0);
  m.scale_or_variance = 2.0 * m2 * m2 * (fn - 2.0) / (fi * (m2 - 2.0) * (m2 - 2.0) * (m2 - 4.0));
  m.approx = {ApproxLaw::Kind::normal, 1.0, 2.0 * fn / (fd * fi * m2)};
  m.alt_approx_variance = 2.0 * fn / fi;
  m.notes.push_back("alt_approx_variance is 2n/i, the form not divided by d(n-i); approx uses 2n/(d i (n-i))");
  return m;
}

ConcordanceModel model_nonoverlapping_cauchy(std::int64_t i, std::int64_t n, std::int64_t d) {
  if (i <= 0) throw InvalidArgument("Cauchy model needs i > 0");
  if (i >= n) throw InvalidArgument("Cauchy model needs i < n");
  ConcordanceModel m;
  m.family = ModelFamily::cauchy;
  m.i = i;
  m.n = n;
  m.d = std::max<std::int64_t>(d, 1);
  m.location = 1.0;
  m.scale_or_variance = std::sqrt(double(n - i) / double(i));
  m.approx = {ApproxLaw::Kind::cauchy, 1.0, m.scale_or_variance};
  m.notes.push_back("no finite mean or variance; compare medians and quantiles");
  return m;
}

double sample_quantile(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile probability outside [0, 1]");
  const double h = double(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - double(lo)) * (sorted[lo + 1] - sorted[lo]);
}

MonteCarloReport simulate_concordance(const SimulationConfig& cfg) {
  const std::int64_t i = cfg.i, n = cfg.n, d = cfg.d;
  if (d < 1) throw InvalidArgument("simulation needs d >= 1");
  if (i < 1 || i > n) throw InvalidArgument("simulation needs 0 < i <= n");
  if (cfg.regime != SimulationRegime::overlapping && i >= n)
    throw InvalidArgument("non-overlapping simulation needs i < n");
  if (cfg.trials < 1) throw InvalidArgument("simulation needs at least one trial");
  for (std::size_t k = 0; k < cfg.probabilities.size(); ++k) {
    check_probability(cfg.probabilities[k]);
    if (k > 0 && cfg.probabilities[k] <= cfg.probabilities[k - 1])
      throw InvalidArgument("quantile probabilities must be strictly increasing");
  }

  const Eigen::MatrixXd sigma = cfg.sigma.size() ? cfg.sigma : Eigen::MatrixXd::Identity(d, d);
  if (sigma.rows() != d || sigma.cols() != d) throw DimensionError("sigma must be d x d");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success || !sigma.isApprox(sigma.transpose()))
    throw SingularMatrixError("sigma is not symmetric positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  const auto eig = sym_eigen(sigma);
  if (eig.values[d - 1] <= 0.0) throw SingularMatrixError("sigma is not positive definite");

  MonteCarloReport report;
  switch (cfg.regime) {
    case SimulationRegime::overlapping: report.model = model_overlapping(i, n, d); break;
    case SimulationRegime::nonoverlapping: report.model = model_nonoverlapping_f(i, n, d); break;
    case SimulationRegime::cauchy: report.model = model_nonoverlapping_cauchy(i, n, d); break;
  }

  ConcordanceOptions<double> opts;
  opts.basis = eig.vectors;

  std::vector<double> values(static_cast<std::size_t>(cfg.trials));
  parallel_for(values.size(), cfg.threads, [&](std::size_t t) {
    Rng rng(cfg.seed, t);
    ScatterSummary<double> head(d), rest(d);
    Eigen::RowVectorXd z(d);
    MatrixXdr row(1, d);
    for (std::int64_t r = 0; r < n; ++r) {
      for (Index j = 0; j < d; ++j) z[j] = rng.normal();
      row.row(0) = z * lower.transpose();
      (r < i ? head : rest).accumulate(row);
    }

    if (cfg.regime == SimulationRegime::cauchy) {
      const Eigen::MatrixXd gh = head.gram(), gr = rest.gram();
      double sum = 0.0;
      for (Index j = 0; j < d; ++j) {
        const auto v = eig.vectors.col(j);
        const double num = v.dot(gh * v) / double(i) - eig.values[j];
        const double den = v.dot(gr * v) / double(n - i) - eig.values[j];
        sum += 1.0 + num / den;
      }
      values[t] = sum / double(d);
      return;
    }
    const ScatterSummary<double> total = scatter_merge(head, rest);
    const Overlap mode =
        cfg.regime == SimulationRegime::overlapping ? Overlap::overlapping : Overlap::nonoverlapping;
    values[t] = concordance_subset(total, head, mode, opts).value;
  });

  report.trials = cfg.trials;
  report.seed = cfg.seed;
  report.regime = cfg.regime;
  const double count = double(values.size());
  report.empirical_mean = std::accumulate(values.begin(), values.end(), 0.0) / count;
  double ss = 0.0;
  for (double v : values) ss += (v - report.empirical_mean) * (v - report.empirical_mean);
  report.empirical_variance = values.size() > 1 ? ss / (count - 1.0) : 0.0;
  report.variance_defined = report.model.has_finite_variance();

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  report.median = sample_quantile(sorted, 0.5);
  report.iqr = sample_quantile(sorted, 0.75) - sample_quantile(sorted, 0.25);
  for (double p : cfg.probabilities)
    report.quantiles.push_back({p, sample_quantile(sorted, p), report.model.approx.quantile(p)});
  report.values = std::move(values);
  return report;
}

double heuristic_variance(std::int64_t i, std::int64_t n, std::int64_t d, Overlap mode) {
  const double fi = double(i), fn = double(n), fd = double(d);
  if (mode == Overlap::overlapping) return 2.0 * (fn - fi) / (fd * fi * (fn + 2.0));
  if (i >= n) return std::numeric_limits<double>::infinity();
  return 2.0 * fn / (fd * fi * (fn - fi));
}

PartitionSizeChoice choose_partition_size(std::int64_t n, std::int64_t d, double tolerance, double confidence,
                                          Overlap mode) {
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  if (!(confidence > 0.0 && confidence < 1.0)) throw InvalidArgument("confidence must lie in (0, 1)");
  if (d < 1) throw InvalidArgument("d must be at least 1");
  if (n <= d) throw InvalidArgument("n must exceed d");

  PartitionSizeChoice out;
  out.z = normal_quantile(0.5 * (1.0 + confidence));
  auto bound = [&](std::int64_t i) { return out.z * std::sqrt(heuristic_variance(i, n, d, mode)); };
  auto ok = [&](std::int64_t i) { return bound(i) <= tolerance; };

  // The variance decreases in i up to `hi`: up to n for overlapping, up to
  // n/2 for non-overlapping (it grows again as the complement shrinks).
  const std::int64_t lo = d + 1;
  std::int64_t hi = n;
  if (mode == Overlap::nonoverlapping) hi = std::min(n - 1, std::max(lo, n / 2));

  std::int64_t chosen = n;
  if (lo <= hi && ok(hi)) {
    std::int64_t a = lo, b = hi;
    while (a < b) {
      const std::int64_t mid = a + (b - a) / 2;
      if (ok(mid))
        b = mid;
      else
        a = mid + 1;
    }
    chosen = a;
  } else {
    out.satisfied = false;
  }

  out.block_size = chosen;
  out.variance = heuristic_variance(chosen, n, d, mode);
  out.bound = out.z * std::sqrt(out.variance);
  if (chosen - 1 >= lo) out.previous_variance = heuristic_variance(chosen - 1, n, d, mode);
  return out;
}

}  // namespace concord
