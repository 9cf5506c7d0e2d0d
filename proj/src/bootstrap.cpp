#include "mmmd/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mmmd/error.hpp"
#include "mmmd/parallel.hpp"

namespace mmmd {
namespace {

constexpr std::size_t kReplicateChunk = 64;

void check_centered(std::span<const CenteredGram> centered) {
  if (centered.empty()) throw InputError("no centred Gram matrices given");
  const Index m = centered.front().values.rows();
  for (const auto& c : centered)
    if (c.values.rows() != m || c.values.cols() != m)
      throw InputError("centred Gram matrices must share the sample size");
}

void check_pair(const Sample& x, const Sample& y) {
  if (x.dim() != y.dim())
    throw InputError("dimension mismatch between samples: " + std::to_string(x.dim()) + " vs " +
                     std::to_string(y.dim()));
}

}  // namespace

void BootstrapConfig::validate() const {
  if (B < 1) throw ConfigError("bootstrap replicate count B must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (lambda_rule.fixed && !(*lambda_rule.fixed >= 0.0))
    throw ConfigError("fixed lambda must be nonnegative");
}

Vector bootstrap_draw(std::span<const CenteredGram> centered, double rho_hat, RandomStream& rng) {
  check_centered(centered);
  const double gamma = gamma_factor(rho_hat);
  const double scale = std::sqrt(gamma);
  const Index m = centered.front().values.rows();
  Vector z(m);
  for (Index i = 0; i < m; ++i) z[i] = scale * rng.normal();
  Vector e(static_cast<Index>(centered.size()));
  for (std::size_t a = 0; a < centered.size(); ++a) {
    const Matrix& k = centered[a].values;
    e[static_cast<Index>(a)] = z.dot(k * z) - gamma * k.trace();
  }
  return e;
}

Matrix multiplier_draws(std::span<const CenteredGram> centered, double rho_hat, int B,
                        std::uint64_t seed) {
  check_centered(centered);
  if (B < 1) throw ConfigError("bootstrap replicate count B must be >= 1");
  const double gamma = gamma_factor(rho_hat);
  const double scale = std::sqrt(gamma);
  const Index m = centered.front().values.rows();
  const auto r = static_cast<Index>(centered.size());

  Vector traces(r);
  for (Index a = 0; a < r; ++a) traces[a] = gamma * centered[a].values.trace();

  Matrix e(B, r);
  parallel_for(static_cast<std::size_t>(B), kReplicateChunk, [&](std::size_t begin, std::size_t end) {
    const auto rows = static_cast<Index>(end - begin);
    Matrix z(rows, m);
    for (Index b = 0; b < rows; ++b) {
      RandomStream rng(seed, begin + static_cast<std::size_t>(b));
      for (Index i = 0; i < m; ++i) z(b, i) = scale * rng.normal();
    }
    Matrix w(rows, m);
    for (Index a = 0; a < r; ++a) {
      w.noalias() = z * centered[a].values;
      e.block(static_cast<Index>(begin), a, rows, 1) =
          (w.cwiseProduct(z).rowwise().sum().array() - traces[a]).matrix();
    }
  });
  return e;
}

BootstrapDraws bootstrap_sample(const KernelCollection& coll, const Sample& x, double rho_hat,
                                const BootstrapConfig& cfg) {
  cfg.validate();
  const auto grams = centered_grams(coll, x);
  NullCovariance cov = estimate_null_covariance(grams, rho_hat);
  cov.lambda = regularize(cov, cfg.lambda_rule);
  const RegularizedQuadraticForm form(cov);
  BootstrapDraws draws;
  draws.e_matrix = multiplier_draws(grams, rho_hat, cfg.B, cfg.seed);
  draws.t_hat = form.rows(draws.e_matrix);
  return draws;
}

Index order_statistic_index(Index count, double level) {
  // The small offset keeps products such as 500 * 0.95 from rounding up.
  const double raw = std::ceil(static_cast<double>(count) * level - 1e-9);
  return std::clamp<Index>(static_cast<Index>(raw), 1, count);
}

double quantile(std::span<const double> values, double level) {
  if (values.empty()) throw InputError("quantile of an empty set");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("quantile level must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  const Index k = order_statistic_index(static_cast<Index>(sorted.size()), level);
  const auto pos = sorted.begin() + (k - 1);
  std::nth_element(sorted.begin(), pos, sorted.end());
  return *pos;
}

double monte_carlo_p_value(std::span<const double> values, double statistic) {
  const auto exceed = std::count_if(values.begin(), values.end(),
                                    [statistic](double v) { return v >= statistic; });
  return (1.0 + static_cast<double>(exceed)) / (1.0 + static_cast<double>(values.size()));
}

TestResult mmmd_test(const Sample& x, const Sample& y, const KernelCollection& coll,
                     const BootstrapConfig& cfg) {
  cfg.validate();
  check_pair(x, y);
  const double rho = sampling_ratio(x.rows(), y.rows());
  const auto grams = centered_grams(coll, x);

  NullCovariance cov = estimate_null_covariance(grams, rho);
  cov.lambda = regularize(cov, cfg.lambda_rule);
  const RegularizedQuadraticForm form(cov);

  const MmdVector v = mmd2_vector(coll, x, y);
  const MmmdStatistic stat = mmmd_statistic(v, form);

  const Matrix e = multiplier_draws(grams, rho, cfg.B, cfg.seed);
  const Vector t_hat = form.rows(e);
  const std::span<const double> draws(t_hat.data(), static_cast<std::size_t>(t_hat.size()));

  TestResult result;
  result.statistic = stat.scaled;
  result.threshold = quantile(draws, 1.0 - cfg.alpha);
  result.reject = result.statistic > result.threshold;
  result.p_value = monte_carlo_p_value(draws, result.statistic);
  result.meta = {"mmmd", x.rows(), y.rows(), static_cast<Index>(coll.size()), cfg.B,
                 cfg.seed, cov.lambda, rho, cfg.alpha, {}, std::nullopt};
  return result;
}

TestResult mmd_test(const Sample& x, const Sample& y, const KernelSpec& spec,
                    const BootstrapConfig& cfg) {
  cfg.validate();
  check_pair(x, y);
  const KernelCollection coll({spec});
  const double rho = sampling_ratio(x.rows(), y.rows());
  const auto grams = centered_grams(coll, x);
  const MmdVector v = mmd2_vector(coll, x, y);

  const Matrix e = multiplier_draws(grams, rho, cfg.B, cfg.seed);
  const std::span<const double> draws(e.data(), static_cast<std::size_t>(e.rows()));

  TestResult result;
  result.statistic = static_cast<double>(x.rows() + y.rows()) * v.values[0];
  result.threshold = quantile(draws, 1.0 - cfg.alpha);
  result.reject = result.statistic > result.threshold;
  result.p_value = monte_carlo_p_value(draws, result.statistic);
  result.meta = {"mmd", x.rows(), y.rows(), 1, cfg.B, cfg.seed, 0.0, rho, cfg.alpha, {}, std::nullopt};
  return result;
}

}  // namespace mmmd
