#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmmd/aggregation.hpp"
#include "mmmd/rng.hpp"

namespace mmmd {

struct BootstrapConfig {
  int B = 500;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  LambdaRule lambda_rule;

  void validate() const;
};

/// Multiplier draws E(K, X_m) (B x r, one row per replicate) and the
/// bootstrap statistics t_hat[b] = e_b' (Sigma + lambda I)^{-1} e_b.
struct BootstrapDraws {
  Matrix e_matrix;
  Vector t_hat;
};

struct TestMeta {
  std::string method;
  Index m = 0;
  Index n = 0;
  Index r = 0;
  int B = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double rho_hat = 0.0;
  double alpha = 0.0;
  /// Per-kernel margins (m+n) MMD^2_s - q_s; filled by the aggregated baseline.
  std::vector<double> margins;
  std::optional<double> u_star;
};

struct TestResult {
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = 1.0;
  bool reject = false;
  TestMeta meta;
};

/// One multiplier replicate: a single Z ~ N(0, gamma I_m) shared by all
/// kernels, entry a = Z' A_a Z - gamma Tr[A_a].
Vector bootstrap_draw(std::span<const CenteredGram> centered, double rho_hat, RandomStream& rng);

/// B replicates; replicate b draws its multipliers from RandomStream(seed, b).
Matrix multiplier_draws(std::span<const CenteredGram> centered, double rho_hat, int B,
                        std::uint64_t seed);

BootstrapDraws bootstrap_sample(const KernelCollection& coll, const Sample& x, double rho_hat,
                                const BootstrapConfig& cfg);

/// k-th order statistic with k = ceil(B * level), no interpolation.
double quantile(std::span<const double> values, double level);
/// The 1-based index k = ceil(B * level) clamped to [1, B].
Index order_statistic_index(Index count, double level);

/// (1 + #{values >= statistic}) / (B + 1).
double monte_carlo_p_value(std::span<const double> values, double statistic);

/// Mahalanobis-aggregated MMD test calibrated by the multiplier bootstrap.
TestResult mmmd_test(const Sample& x, const Sample& y, const KernelCollection& coll,
                     const BootstrapConfig& cfg);

/// Single-kernel test: rejects when (m+n) MMD^2 exceeds the 1-alpha quantile
/// of the multiplier draws.
TestResult mmd_test(const Sample& x, const Sample& y, const KernelSpec& spec,
                    const BootstrapConfig& cfg);

}  // namespace mmmd
