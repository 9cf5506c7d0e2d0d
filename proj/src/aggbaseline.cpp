#include "mmmd/aggbaseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mmmd/error.hpp"

namespace mmmd {
namespace {

// Columns of `e` sorted ascending, kept alongside the original draws.
Matrix sorted_columns(const Matrix& e) {
  Matrix sorted = e;
  for (Index s = 0; s < sorted.cols(); ++s)
    std::sort(sorted.col(s).data(), sorted.col(s).data() + sorted.rows());
  return sorted;
}

Vector thresholds_at(const Matrix& sorted, const AggWeights& w, double u) {
  const Index count = sorted.rows();
  Vector q(sorted.cols());
  for (Index s = 0; s < sorted.cols(); ++s) {
    const Index k = order_statistic_index(count, 1.0 - u * w[static_cast<std::size_t>(s)]);
    q[s] = sorted(k - 1, s);
  }
  return q;
}

double exceedance(const Matrix& e, const Vector& q) {
  Index hits = 0;
  for (Index b = 0; b < e.rows(); ++b)
    if (((e.row(b).transpose() - q).array() > 0.0).any()) ++hits;
  return static_cast<double>(hits) / static_cast<double>(e.rows());
}

void check_weights(const Matrix& e, const AggWeights& w) {
  if (static_cast<std::size_t>(e.cols()) != w.size())
    throw ConfigError("weight count must equal the number of kernels");
  if (e.rows() < 1) throw ConfigError("need at least one bootstrap replicate");
}

}  // namespace

AggWeights::AggWeights(std::vector<double> w) : w_(std::move(w)) {
  if (w_.empty()) throw ConfigError("weights must be nonempty");
  double total = 0.0;
  for (double v : w_) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("weights must be positive");
    total += v;
  }
  if (total > 1.0 + 1e-12) throw ConfigError("weights must sum to at most 1");
  limit_ = 1.0 / *std::max_element(w_.begin(), w_.end());
}

AggWeights AggWeights::uniform(std::size_t r) {
  return AggWeights(std::vector<double>(r, 1.0 / static_cast<double>(r)));
}

Matrix per_kernel_bootstrap(const KernelCollection& coll, const Sample& x, double rho_hat,
                            const BootstrapConfig& cfg) {
  cfg.validate();
  const auto grams = centered_grams(coll, x);
  return multiplier_draws(grams, rho_hat, cfg.B, cfg.seed);
}

double aggregated_exceedance(const Matrix& e, const AggWeights& w, double u) {
  check_weights(e, w);
  return exceedance(e, thresholds_at(sorted_columns(e), w, u));
}

AggCalibration calibrate_u_star(const Matrix& e, const AggWeights& w, double alpha) {
  check_weights(e, w);
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  const Matrix sorted = sorted_columns(e);
  auto feasible = [&](double u) { return exceedance(e, thresholds_at(sorted, w, u)) <= alpha; };

  double lo = alpha / 10.0;
  double hi = w.upper_limit();
  if (!feasible(lo))
    throw NumericalError("MMDAgg calibration infeasible at u = alpha/10; increase B");
  for (int step = 0; step < kBisectionSteps; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      lo = mid;
    else
      hi = mid;
  }
  return {lo, thresholds_at(sorted, w, lo)};
}

TestResult mmdagg_test(const Sample& x, const Sample& y, const KernelCollection& coll,
                       const AggWeights& w, const BootstrapConfig& cfg) {
  cfg.validate();
  if (x.dim() != y.dim())
    throw InputError("dimension mismatch between samples: " + std::to_string(x.dim()) + " vs " +
                     std::to_string(y.dim()));
  if (w.size() != coll.size()) throw ConfigError("weight count must equal the number of kernels");

  const double rho = sampling_ratio(x.rows(), y.rows());
  const auto grams = centered_grams(coll, x);
  const Matrix e = multiplier_draws(grams, rho, cfg.B, cfg.seed);
  const AggCalibration cal = calibrate_u_star(e, w, cfg.alpha);

  const auto total = static_cast<double>(x.rows() + y.rows());
  const Vector scaled = total * mmd2_vector(coll, x, y).values;
  const Vector margins = scaled - cal.thresholds;

  // Bootstrap analogue of the statistic, for the Monte Carlo p-value.
  std::vector<double> boot(static_cast<std::size_t>(e.rows()));
  for (Index b = 0; b < e.rows(); ++b)
    boot[static_cast<std::size_t>(b)] = (e.row(b).transpose() - cal.thresholds).maxCoeff();

  TestResult result;
  result.statistic = margins.maxCoeff();
  result.threshold = 0.0;
  result.reject = result.statistic > 0.0;
  result.p_value = monte_carlo_p_value(boot, result.statistic);
  result.meta = {"mmdagg", x.rows(), y.rows(), static_cast<Index>(coll.size()), cfg.B,
                 cfg.seed, 0.0, rho, cfg.alpha,
                 std::vector<double>(margins.data(), margins.data() + margins.size()), cal.u_star};
  return result;
}

}  // namespace mmmd
