#include <gtest/gtest.h>

#include <boost/math/distributions/fisher_f.hpp>

#include <cmath>

#include "concord/distributions.hpp"

using namespace concord;

TEST(ModelOverlapping, ExampleValues) {
  const auto m = model_overlapping(10, 1000, 43);
  EXPECT_EQ(m.family, ModelFamily::scaled_beta);
  EXPECT_DOUBLE_EQ(m.location, 1.0);
  EXPECT_NEAR(m.approx.spread, 2.0 * 990 / (43.0 * 10 * 1002), 1e-15);
  EXPECT_NEAR(m.approx.spread, 4.595e-3, 5e-7);
  EXPECT_NEAR(m.scale_or_variance, 0.19760479, 1e-8);
  ASSERT_TRUE(m.alt_approx_variance);
  EXPECT_NEAR(*m.alt_approx_variance, 2.0 * 990 / (43.0 * 10 * 1000), 1e-15);
}

TEST(ModelOverlapping, WholeSetIsDegenerate) {
  const auto m = model_overlapping(500, 500, 5);
  EXPECT_DOUBLE_EQ(m.scale_or_variance, 0.0);
  EXPECT_DOUBLE_EQ(m.approx.quantile(0.9), 1.0);
  EXPECT_DOUBLE_EQ(m.term_quantile(0.1), 1.0);
}

TEST(ModelOverlapping, TermVarianceMatchesBetaMoments) {
  // (n/i) Beta(i/2, (n-i)/2): Var = (n/i)^2 ab / ((a+b)^2 (a+b+1)).
  for (std::int64_t n = 4; n <= 200; n += 7) {
    for (std::int64_t i = 3; i < n; i += 5) {
      const double a = 0.5 * double(i), b = 0.5 * double(n - i);
      const double scale = double(n) / double(i);
      const double oracle = scale * scale * a * b / ((a + b) * (a + b) * (a + b + 1.0));
      const auto m = model_overlapping(i, n, 1);
      EXPECT_NEAR(m.scale_or_variance, oracle, 1e-12 * oracle) << "i=" << i << " n=" << n;
    }
  }
}

TEST(ModelOverlapping, Errors) {
  EXPECT_THROW(model_overlapping(0, 10, 1), InvalidArgument);
  EXPECT_THROW(model_overlapping(11, 10, 1), InvalidArgument);
  EXPECT_THROW(model_overlapping(5, 10, 0), InvalidArgument);
}

TEST(ModelF, ExampleValues) {
  const auto m = model_nonoverlapping_f(10, 1000, 43);
  EXPECT_NEAR(m.location, 990.0 / 988.0, 1e-15);
  EXPECT_NEAR(m.location, 1.002024, 1e-6);
  EXPECT_NEAR(m.approx.spread, 2.0 * 1000 / (43.0 * 10 * 990), 1e-15);
  EXPECT_NEAR(m.approx.spread, 4.6981e-3, 5e-8);
  ASSERT_TRUE(m.alt_approx_variance);
  EXPECT_DOUBLE_EQ(*m.alt_approx_variance, 200.0);
  EXPECT_FALSE(m.notes.empty());
}

TEST(ModelF, VarianceMatchesTextbookF) {
  for (std::int64_t i : {1, 3, 10, 50}) {
    for (std::int64_t n : {60, 100, 1000}) {
      const auto m = model_nonoverlapping_f(i, n, 1);
      const boost::math::fisher_f_distribution<double> f(double(i), double(n - i));
      EXPECT_NEAR(m.scale_or_variance, boost::math::variance(f), 1e-12 * m.scale_or_variance);
      EXPECT_NEAR(m.location, boost::math::mean(f), 1e-14);
    }
  }
}

TEST(ModelF, Errors) {
  EXPECT_THROW(model_nonoverlapping_f(6, 10, 1), InvalidArgument);
  EXPECT_NO_THROW(model_nonoverlapping_f(5, 10, 1));
  EXPECT_THROW(model_nonoverlapping_f(0, 10, 1), InvalidArgument);
}

TEST(ModelCauchy, ScaleAndQuantiles) {
  EXPECT_DOUBLE_EQ(model_nonoverlapping_cauchy(50, 100).scale_or_variance, 1.0);
  EXPECT_NEAR(model_nonoverlapping_cauchy(10, 1000).scale_or_variance, std::sqrt(99.0), 1e-12);
  EXPECT_LT(model_nonoverlapping_cauchy(999999, 1000000).scale_or_variance, 1e-2);
  const auto m = model_nonoverlapping_cauchy(50, 500);
  EXPECT_FALSE(m.has_finite_variance());
  EXPECT_NEAR(m.term_quantile(0.75) - m.term_quantile(0.25), 2.0 * 3.0, 1e-12);
  EXPECT_NEAR(m.approx.quantile(0.5), 1.0, 1e-15);
  EXPECT_THROW(model_nonoverlapping_cauchy(0, 10), InvalidArgument);
  EXPECT_THROW(model_nonoverlapping_cauchy(10, 10), InvalidArgument);
}

TEST(Quantiles, SampleQuantileType7) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(sample_quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(sample_quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(sample_quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(sample_quantile(v, 0.25), 1.75);
  EXPECT_THROW(sample_quantile({}, 0.5), InvalidArgument);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
}

TEST(Simulation, WholeSetGivesOne) {
  SimulationConfig cfg;
  cfg.i = 40;
  cfg.n = 40;
  cfg.d = 3;
  cfg.trials = 20;
  const auto r = simulate_concordance(cfg);
  for (double v : r.values) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Simulation, SingleTrialMeanIsThatValue) {
  SimulationConfig cfg;
  cfg.trials = 1;
  const auto r = simulate_concordance(cfg);
  ASSERT_EQ(r.values.size(), 1u);
  EXPECT_DOUBLE_EQ(r.empirical_mean, r.values[0]);
}

TEST(Simulation, OverlappingMoments) {
  SimulationConfig cfg;  // i=50, n=500, d=10, 2000 trials
  const auto r = simulate_concordance(cfg);
  const double se = std::sqrt(r.empirical_variance / double(r.trials));
  EXPECT_LE(std::abs(r.empirical_mean - 1.0), 3.0 * se);
  const double model = 2.0 * 450 / (10.0 * 50 * 502);
  EXPECT_LE(std::abs(r.empirical_variance - model), 0.2 * model);
  ASSERT_EQ(r.quantiles.size(), 5u);
  for (std::size_t k = 1; k < r.quantiles.size(); ++k) {
    EXPECT_GT(r.quantiles[k].p, r.quantiles[k - 1].p);
    EXPECT_GE(r.quantiles[k].empirical, r.quantiles[k - 1].empirical);
  }
}

TEST(Simulation, NonOverlappingMoments) {
  SimulationConfig cfg;
  cfg.regime = SimulationRegime::nonoverlapping;
  cfg.seed = 5;
  const auto r = simulate_concordance(cfg);
  const double model = 2.0 * 500 / (10.0 * 50 * 450);
  EXPECT_LE(std::abs(r.empirical_variance - model), 0.25 * model);
  const double se = std::sqrt(r.empirical_variance / double(r.trials));
  EXPECT_LE(std::abs(r.empirical_mean - 450.0 / 448.0), 3.0 * se);
}

TEST(Simulation, CauchyMedian) {
  SimulationConfig cfg;
  cfg.regime = SimulationRegime::cauchy;
  cfg.seed = 9;
  const auto r = simulate_concordance(cfg);
  EXPECT_FALSE(r.variance_defined);
  const double scale = 3.0;
  EXPECT_LE(std::abs(r.median - 1.0), scale * 3.0 / std::sqrt(double(cfg.trials)) * (M_PI / 2.0));
}

TEST(Simulation, CorrelatedSigmaAndThreadsGiveSameValues) {
  SimulationConfig cfg;
  cfg.trials = 50;
  cfg.d = 4;
  cfg.sigma = Eigen::MatrixXd::Constant(4, 4, 0.4);
  cfg.sigma.diagonal().setOnes();
  const auto one = simulate_concordance(cfg);
  cfg.threads = 4;
  const auto four = simulate_concordance(cfg);
  EXPECT_EQ(one.values, four.values);
}

TEST(Simulation, Errors) {
  SimulationConfig cfg;
  cfg.d = 2;
  cfg.sigma = Eigen::Matrix2d::Zero();
  EXPECT_THROW(simulate_concordance(cfg), SingularMatrixError);
  cfg.sigma = Eigen::Matrix3d::Identity();
  EXPECT_THROW(simulate_concordance(cfg), DimensionError);
  SimulationConfig bad;
  bad.trials = 0;
  EXPECT_THROW(simulate_concordance(bad), InvalidArgument);
  bad.trials = 1;
  bad.probabilities = {0.5, 0.25};
  EXPECT_THROW(simulate_concordance(bad), InvalidArgument);
}

namespace {

std::int64_t scan_oracle(std::int64_t n, std::int64_t d, double tol, double conf, Overlap mode) {
  const double z = normal_quantile(0.5 * (1.0 + conf));
  const std::int64_t hi = mode == Overlap::overlapping ? n : std::min(n - 1, std::max(d + 1, n / 2));
  for (std::int64_t i = d + 1; i <= hi; ++i)
    if (z * std::sqrt(heuristic_variance(i, n, d, mode)) <= tol) return i;
  return n;
}

}  // namespace

TEST(PartitionSize, MatchesScanAndClosedForm) {
  const std::int64_t n = 120000, d = 43;
  const auto choice = choose_partition_size(n, d, 0.02, 0.95, Overlap::overlapping);
  EXPECT_EQ(choice.block_size, scan_oracle(n, d, 0.02, 0.95, Overlap::overlapping));
  // Closed-form inversion of z^2 2(n-i)/(d i (n+2)) <= t^2: i >= 2n z^2 / (t^2 d (n+2) + 2 z^2).
  const double z = 1.959963984540054;
  const double i_star = 2.0 * n * z * z / (0.02 * 0.02 * d * (n + 2.0) + 2.0 * z * z);
  EXPECT_EQ(choice.block_size, static_cast<std::int64_t>(std::ceil(i_star)));
  EXPECT_LE(choice.bound, 0.02);
  ASSERT_TRUE(choice.previous_variance);
  EXPECT_GT(z * std::sqrt(*choice.previous_variance), 0.02);
}

TEST(PartitionSize, Boundaries) {
  EXPECT_EQ(partition_size_heuristic(1000, 5, 10.0, 0.95, Overlap::overlapping), 6);
  EXPECT_EQ(partition_size_heuristic(1000, 5, 10.0, 0.95, Overlap::nonoverlapping), 6);
  EXPECT_EQ(partition_size_heuristic(1000, 5, 1e-9, 0.95, Overlap::overlapping), 1000);
  const auto c = choose_partition_size(1000, 5, 1e-9, 0.95, Overlap::nonoverlapping);
  EXPECT_EQ(c.block_size, 1000);
  EXPECT_FALSE(c.satisfied);
}

TEST(PartitionSize, MonotoneInToleranceAndConfidence) {
  for (auto mode : {Overlap::overlapping, Overlap::nonoverlapping}) {
    std::int64_t prev = std::numeric_limits<std::int64_t>::max();
    for (double tol = 0.001; tol < 1.0; tol *= 1.3) {
      const auto i = partition_size_heuristic(50000, 10, tol, 0.95, mode);
      EXPECT_LE(i, prev);
      EXPECT_EQ(i, scan_oracle(50000, 10, tol, 0.95, mode));
      prev = i;
    }
    std::int64_t last = 0;
    for (double conf : {0.5, 0.8, 0.9, 0.95, 0.99, 0.999}) {
      const auto i = partition_size_heuristic(50000, 10, 0.01, conf, mode);
      EXPECT_GE(i, last);
      last = i;
    }
  }
}

TEST(PartitionSize, Errors) {
  EXPECT_THROW(choose_partition_size(100, 5, 0.0, 0.95, Overlap::overlapping), InvalidArgument);
  EXPECT_THROW(choose_partition_size(100, 5, 0.1, 1.0, Overlap::overlapping), InvalidArgument);
  EXPECT_THROW(choose_partition_size(5, 5, 0.1, 0.9, Overlap::overlapping), InvalidArgument);
}
