#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>

#include "mmmd/estimators.hpp"
#include "mmmd/kernels.hpp"

namespace mmmd {

/// rho_hat = m / (m + n).
double sampling_ratio(Index m, Index n);
/// gamma_hat = 1 / (rho (1 - rho)).
double gamma_factor(double rho);

/// Empirical null covariance of the (m+n)-scaled MMD vector, estimated from
/// the first sample only, together with the ridge added before inversion.
struct NullCovariance {
  Matrix sigma;
  double lambda = 0.0;
  double rho_hat = 0.5;
};

/// Ridge selection: by default 1e-5 times the smallest diagonal entry of the
/// covariance; a fixed value (including 0) overrides it.
struct LambdaRule {
  std::optional<double> fixed;

  static LambdaRule fixed_value(double lambda);
};

inline constexpr double kDefaultLambdaScale = 1e-5;

std::vector<CenteredGram> centered_grams(const KernelCollection& coll, const Matrix& sq_dists);
std::vector<CenteredGram> centered_grams(const KernelCollection& coll, const Sample& x);

/// sigma_ab = 2 gamma^2 Tr[A_a A_b] where A_a are the /m-scaled centred Grams.
NullCovariance estimate_null_covariance(std::span<const CenteredGram> centered, double rho_hat);
NullCovariance estimate_null_covariance(const KernelCollection& coll, const Sample& x,
                                        double rho_hat);

double regularize(const NullCovariance& cov, const LambdaRule& rule = {});

struct MmmdStatistic {
  double t = 0.0;       // v' (Sigma + lambda I)^{-1} v
  double scaled = 0.0;  // (m + n)^2 t
};

/// Cholesky factor of Sigma + lambda I, shared by the observed statistic and
/// every bootstrap replicate.
class RegularizedQuadraticForm {
 public:
  explicit RegularizedQuadraticForm(const NullCovariance& cov);

  [[nodiscard]] double operator()(const Vector& v) const;
  /// Quadratic form of every row of `e` (B x r).
  [[nodiscard]] Vector rows(const Matrix& e) const;
  [[nodiscard]] Index dim() const noexcept { return dim_; }

 private:
  Eigen::LLT<Matrix> llt_;
  Index dim_ = 0;
};

MmmdStatistic mmmd_statistic(const MmdVector& v, const NullCovariance& cov);
MmmdStatistic mmmd_statistic(const MmdVector& v, const RegularizedQuadraticForm& form);

}  // namespace mmmd
