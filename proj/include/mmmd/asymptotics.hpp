#pragma once

#include <cstdint>
#include <span>

#include "mmmd/datagen.hpp"
#include "mmmd/kernels.hpp"

namespace mmmd {

/// Eigenvalues of a centred Gram, ordered by decreasing absolute value.
struct Spectrum {
  Vector eigs;
};

Spectrum centered_gram_spectrum(const CenteredGram& cg);

/// Draws sum_s eig_s (w_s^2 - gamma) with w_s iid N(0, gamma); draw i reads
/// RandomStream(seed, i). For a fixed sample this has exactly the law of the
/// single-kernel multiplier draw Z' A Z - gamma Tr[A].
Vector weighted_chisq_sample(const Spectrum& spectrum, double gamma_hat, Index n_draws,
                             std::uint64_t seed);

inline constexpr Index kOracleInnerSize = 16;

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Nested Monte Carlo estimate of the population null covariance entry
///   sigma_ab = 2 / (rho^2 (1-rho)^2) E[K°_a(X, X') K°_b(X, X')],  X, X' ~ P,
/// over n_mc outer pairs. Each pair centres K_a and K_b with two independent
/// inner samples of size `inner`, so the product is unbiased for the
/// expectation whatever the inner size.
MonteCarloEstimate null_sigma_oracle(const KernelSpec& a, const KernelSpec& b, const DistSpec& p,
                                     double rho, Index n_mc, std::uint64_t seed,
                                     Index inner = kOracleInnerSize);

/// Plug-in covariance of the limiting normal law of sqrt(m+n) MMD^2 under a
/// fixed alternative, from the projections
///   delta1_a(X_i) = mean_{j != i} K_a(X_i, X_j) - mean_j K_a(X_i, Y_j)
///   delta2_a(Y_j) = mean_{l != j} K_a(Y_j, Y_l) - mean_i K_a(X_i, Y_j).
struct AltCovariance {
  Matrix sigma_h1;
  Matrix delta1;  // m x r
  Matrix delta2;  // n x r
};

AltCovariance estimate_alt_covariance(const KernelCollection& coll, const Sample& x,
                                      const Sample& y, double rho_hat);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov statistic with the asymptotic Kolmogorov
/// p-value (Stephens' small-sample correction).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);
double kolmogorov_survival(double lambda);

}  // namespace mmmd
