#include "concord/regression.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "concord/parallel.hpp"
#include "concord/random.hpp"

namespace concord {

std::vector<std::vector<std::size_t>> PartitionPlan::blocks() const {
  std::vector<std::vector<std::size_t>> out(r);
  for (std::size_t row = 0; row < assignment.size(); ++row) out[assignment[row]].push_back(row);
  return out;
}

std::vector<std::size_t> PartitionPlan::block_sizes() const {
  std::vector<std::size_t> sizes(r, 0);
  for (auto b : assignment) ++sizes[b];
  return sizes;
}

PartitionPlan make_partition(std::size_t n, std::size_t r, PartitionKind kind, std::uint64_t seed) {
  if (r == 0) throw InvalidArgument("partition needs at least one block");
  if (r > n) throw InvalidArgument("partition has more blocks (" + std::to_string(r) + ") than rows (" +
                                   std::to_string(n) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (kind == PartitionKind::random) {
    Rng rng(seed);
    rng.shuffle(order);
  }

  PartitionPlan plan;
  plan.n = n;
  plan.r = r;
  plan.seed = seed;
  plan.kind = kind;
  plan.assignment.assign(n, 0);
  const std::size_t base = n / r, extra = n % r;
  std::size_t pos = 0;
  for (std::size_t b = 0; b < r; ++b) {
    const std::size_t size = base + (b < extra ? 1 : 0);
    for (std::size_t k = 0; k < size; ++k) plan.assignment[order[pos++]] = b;
  }
  return plan;
}

const char* to_string(FitMethod m) {
  switch (m) {
    case FitMethod::dnr: return "dnr";
    case FitMethod::pooled_normal: return "pooled-normal";
    case FitMethod::reference_qr: return "reference-qr";
    case FitMethod::irls_logistic: return "irls-logistic";
  }
  return "?";
}

std::vector<DataBlock> split_blocks(const MatrixXdr& x, const Eigen::VectorXd& y, const PartitionPlan& plan) {
  if (static_cast<std::size_t>(x.rows()) != plan.n || y.size() != x.rows())
    throw DimensionError("partition plan does not match the data");
  std::vector<DataBlock> out;
  for (const auto& rows : plan.blocks()) {
    DataBlock block{MatrixXdr(static_cast<Index>(rows.size()), x.cols()),
                    Eigen::VectorXd(static_cast<Index>(rows.size()))};
    for (std::size_t k = 0; k < rows.size(); ++k) {
      block.x.row(static_cast<Index>(k)) = x.row(static_cast<Index>(rows[k]));
      block.y[static_cast<Index>(k)] = y[static_cast<Index>(rows[k])];
    }
    out.push_back(std::move(block));
  }
  return out;
}

FitResult fit_dnr(std::span<const DataBlock> blocks, BlockWeighting weighting, unsigned threads) {
  if (blocks.empty()) throw InvalidArgument("D&R fit needs at least one block");
  const Index d = blocks.front().x.cols();

  FitResult out;
  out.method = FitMethod::dnr;
  out.r = blocks.size();
  out.per_block.resize(blocks.size());
  parallel_for(blocks.size(), threads, [&](std::size_t b) {
    const auto& blk = blocks[b];
    if (blk.x.cols() != d) throw DimensionError("block " + std::to_string(b) + " has a different width");
    try {
      out.per_block[b] = qr_solve(blk.x, blk.y);
    } catch (const Error& e) {
      throw RankDeficientError("block " + std::to_string(b) + ": " + e.what());
    }
  });

  // Sequential fold in block order.
  out.coefficients = Eigen::VectorXd::Zero(d);
  if (weighting == BlockWeighting::equal) {
    for (const auto& beta : out.per_block) out.coefficients += beta;
    out.coefficients /= static_cast<double>(blocks.size());
  } else {
    double rows = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const double w = static_cast<double>(blocks[b].x.rows());
      out.coefficients += w * out.per_block[b];
      rows += w;
    }
    out.coefficients /= rows;
  }
  return out;
}

FitResult fit_pooled_normal(std::span<const ScatterSummary<double>> summaries) {
  if (summaries.empty()) throw InvalidArgument("pooled fit needs at least one summary");
  ScatterSummary<double> merged = summaries.front();
  for (std::size_t k = 1; k < summaries.size(); ++k) merged += summaries[k];
  if (!merged.has_response()) throw InvalidArgument("pooled fit needs summaries with X^T y");

  FitResult out;
  out.method = FitMethod::pooled_normal;
  out.r = summaries.size();
  out.coefficients = spd_solve(merged.gram(), merged.xty());
  return out;
}

FitResult fit_reference(const MatrixXdr& x, const Eigen::VectorXd& y) {
  FitResult out;
  out.method = FitMethod::reference_qr;
  out.coefficients = qr_solve(x, y);
  return out;
}

namespace {

// log(1 + exp(t)) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double logistic_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  double dev = 0.0;
  for (Index k = 0; k < y.size(); ++k) dev += y[k] > 0.5 ? softplus(-eta[k]) : softplus(eta[k]);
  return 2.0 * dev;
}

FitResult fit_irls_logistic(const MatrixXdr& x, const Eigen::VectorXd& y, const IrlsOptions& opts) {
  if (y.size() != x.rows()) throw DimensionError("IRLS: response length does not match rows");
  for (Index k = 0; k < y.size(); ++k)
    if (y[k] != 0.0 && y[k] != 1.0) throw InvalidArgument("IRLS: responses must be 0 or 1");
  const Index n = x.rows(), d = x.cols();
  if (n < d) throw DimensionError("IRLS: fewer rows than columns");

  FitResult out;
  out.method = FitMethod::irls_logistic;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double dev = logistic_deviance(y, eta);

  MatrixXdr wx(n, d);
  Eigen::VectorXd wz(n);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    for (Index k = 0; k < n; ++k) {
      const double mu = logistic(eta[k]);
      const double w = std::max(mu * (1.0 - mu), 1e-12);
      const double sw = std::sqrt(w);
      wx.row(k) = sw * x.row(k);
      wz[k] = sw * (eta[k] + (y[k] - mu) / w);
    }
    Eigen::VectorXd candidate = qr_solve(wx, wz);
    Eigen::VectorXd cand_eta = x * candidate;
    double cand_dev = logistic_deviance(y, cand_eta);

    int halvings = 0;
    while (!(cand_dev <= dev * (1.0 + 1e-12)) && halvings < opts.max_step_halvings) {
      candidate = 0.5 * (beta + candidate);
      cand_eta = x * candidate;
      cand_dev = logistic_deviance(y, cand_eta);
      ++halvings;
    }
    out.diagnostics.step_halvings += halvings;
    if (!std::isfinite(cand_dev) || candidate.cwiseAbs().maxCoeff() > opts.divergence_cap)
      throw SeparationError("IRLS: coefficients diverging; classes look separable");

    const double change = (candidate - beta).cwiseAbs().maxCoeff();
    const double rel = std::abs(dev - cand_dev) / (std::abs(cand_dev) + 0.1);
    beta = std::move(candidate);
    eta = std::move(cand_eta);
    dev = cand_dev;
    out.diagnostics.deviance.push_back(dev);
    out.diagnostics.iterations = iter;
    if (change <= opts.tol || rel <= opts.deviance_rel_tol) {
      out.diagnostics.converged = true;
      out.coefficients = beta;
      return out;
    }
  }
  throw ConvergenceError("IRLS did not converge in " + std::to_string(opts.max_iter) + " iterations");
}

double coefficient_log_mse(const Eigen::VectorXd& estimate, const Eigen::VectorXd& reference) {
  if (estimate.size() == 0) throw InvalidArgument("log MSE of empty vectors");
  if (estimate.size() != reference.size()) throw DimensionError("log MSE: vector lengths differ");
  const double mse = (estimate - reference).squaredNorm() / static_cast<double>(estimate.size());
  if (mse == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(mse);
}

CommunicationCost communication_cost(std::uint64_t r, std::uint64_t d, std::uint64_t bytes_per_value) {
  if (r == 0 || d == 0 || bytes_per_value == 0) throw InvalidArgument("communication cost inputs must be positive");
  CommunicationCost c;
  c.dnr_values = r * d;
  c.pooled_values = r * d * d + r * d;
  c.dnr_bytes = c.dnr_values * bytes_per_value;
  c.pooled_bytes = c.pooled_values * bytes_per_value;
  return c;
}

}  // namespace concord
