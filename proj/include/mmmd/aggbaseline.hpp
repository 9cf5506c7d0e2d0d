#pragma once

#include <vector>

#include "mmmd/bootstrap.hpp"

namespace mmmd {

/// Positive kernel weights with sum <= 1.
class AggWeights {
 public:
  explicit AggWeights(std::vector<double> w);
  static AggWeights uniform(std::size_t r);

  [[nodiscard]] std::size_t size() const noexcept { return w_.size(); }
  [[nodiscard]] double operator[](std::size_t s) const { return w_[s]; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return w_; }
  /// L = min_s 1 / w_s.
  [[nodiscard]] double upper_limit() const noexcept { return limit_; }

 private:
  std::vector<double> w_;
  double limit_ = 0.0;
};

struct AggCalibration {
  double u_star = 0.0;
  /// q_{1 - w_s u*, s}: per-kernel thresholds on the (m+n) MMD^2 scale.
  Vector thresholds;
};

inline constexpr int kBisectionSteps = 25;

/// Joint multiplier draws of E(K_s, X_m), one Z_m per replicate (B x r).
Matrix per_kernel_bootstrap(const KernelCollection& coll, const Sample& x, double rho_hat,
                            const BootstrapConfig& cfg);

/// Empirical P(max_s {e_bs - q_{1 - u w_s, s}} > 0) over the rows of e.
double aggregated_exceedance(const Matrix& e, const AggWeights& w, double u);

/// Largest u in (alpha/10, L), located by bisection, whose empirical
/// exceedance probability is at most alpha. Quantiles reuse the same draws.
AggCalibration calibrate_u_star(const Matrix& e, const AggWeights& w, double alpha);

/// Rejects when some kernel's (m+n) MMD^2 exceeds its weight-adjusted
/// threshold. The statistic is the largest margin; rejection iff it is > 0.
TestResult mmdagg_test(const Sample& x, const Sample& y, const KernelCollection& coll,
                       const AggWeights& w, const BootstrapConfig& cfg);

}  // namespace mmmd
