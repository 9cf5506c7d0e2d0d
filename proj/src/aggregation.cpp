#include "mmmd/aggregation.hpp"

#include <cmath>
#include <string>

#include "mmmd/error.hpp"

namespace mmmd {

double sampling_ratio(Index m, Index n) {
  if (m < 1 || n < 1) throw InputError("sample sizes must be positive");
  return static_cast<double>(m) / static_cast<double>(m + n);
}

double gamma_factor(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho_hat must lie in (0, 1)");
  return 1.0 / (rho * (1.0 - rho));
}

LambdaRule LambdaRule::fixed_value(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw ConfigError("fixed lambda must be a finite nonnegative number");
  return LambdaRule{lambda};
}

std::vector<CenteredGram> centered_grams(const KernelCollection& coll, const Matrix& sq_dists) {
  std::vector<CenteredGram> out;
  out.reserve(coll.size());
  for (const auto& spec : coll) out.push_back(center_gram(kernel_from_squared_distances(spec, sq_dists)));
  return out;
}

std::vector<CenteredGram> centered_grams(const KernelCollection& coll, const Sample& x) {
  return centered_grams(coll, squared_distances(x.data()));
}

NullCovariance estimate_null_covariance(std::span<const CenteredGram> centered, double rho_hat) {
  const double gamma = gamma_factor(rho_hat);
  const auto r = static_cast<Index>(centered.size());
  if (r == 0) throw InputError("no centred Gram matrices given");
  const Index m = centered.front().values.rows();
  for (const auto& c : centered)
    if (c.values.rows() != m || c.values.cols() != m)
      throw InputError("centred Gram matrices must share the sample size");

  NullCovariance cov{Matrix(r, r), 0.0, rho_hat};
  const double scale = 2.0 * gamma * gamma;
  for (Index a = 0; a < r; ++a) {
    for (Index b = a; b < r; ++b) {
      const double trace = centered[a].values.cwiseProduct(centered[b].values).sum();
      cov.sigma(a, b) = scale * trace;
      cov.sigma(b, a) = cov.sigma(a, b);
    }
  }
  return cov;
}

NullCovariance estimate_null_covariance(const KernelCollection& coll, const Sample& x,
                                        double rho_hat) {
  const auto grams = centered_grams(coll, x);
  return estimate_null_covariance(grams, rho_hat);
}

double regularize(const NullCovariance& cov, const LambdaRule& rule) {
  if (rule.fixed) {
    if (!(*rule.fixed >= 0.0)) throw ConfigError("fixed lambda must be nonnegative");
    return *rule.fixed;
  }
  const double smallest = cov.sigma.diagonal().minCoeff();
  if (!(smallest > 0.0))
    throw NumericalError(
        "null covariance has a zero diagonal entry (degenerate kernel); "
        "the default lambda rule is undefined, supply an explicit lambda");
  return kDefaultLambdaScale * smallest;
}

RegularizedQuadraticForm::RegularizedQuadraticForm(const NullCovariance& cov)
    : dim_(cov.sigma.rows()) {
  Matrix shifted = cov.sigma;
  shifted.diagonal().array() += cov.lambda;
  if (!shifted.allFinite()) throw NumericalError("covariance contains non-finite entries");
  llt_.compute(shifted);
  if (llt_.info() != Eigen::Success)
    throw NumericalError("covariance not positive definite; increase lambda");
}

double RegularizedQuadraticForm::operator()(const Vector& v) const {
  if (v.size() != dim_) throw InputError("quadratic form: dimension mismatch");
  return llt_.matrixL().solve(v).squaredNorm();
}

Vector RegularizedQuadraticForm::rows(const Matrix& e) const {
  if (e.cols() != dim_) throw InputError("quadratic form: dimension mismatch");
  const Matrix whitened = llt_.matrixL().solve(e.transpose());
  return whitened.colwise().squaredNorm().transpose();
}

MmmdStatistic mmmd_statistic(const MmdVector& v, const RegularizedQuadraticForm& form) {
  const double t = form(v.values);
  const auto total = static_cast<double>(v.m + v.n);
  return {t, total * total * t};
}

MmmdStatistic mmmd_statistic(const MmdVector& v, const NullCovariance& cov) {
  return mmmd_statistic(v, RegularizedQuadraticForm(cov));
}

}  // namespace mmmd
