#include "mmmd/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mmmd/aggregation.hpp"
#include "mmmd/error.hpp"
#include "mmmd/parallel.hpp"

namespace mmmd {

Spectrum centered_gram_spectrum(const CenteredGram& cg) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(cg.values, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  std::vector<double> eigs(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + solver.eigenvalues().size());
  std::stable_sort(eigs.begin(), eigs.end(),
                   [](double a, double b) { return std::abs(a) > std::abs(b); });
  return {Eigen::Map<const Vector>(eigs.data(), static_cast<Index>(eigs.size()))};
}

Vector weighted_chisq_sample(const Spectrum& spectrum, double gamma_hat, Index n_draws,
                             std::uint64_t seed) {
  if (n_draws < 1) throw ConfigError("n_draws must be >= 1");
  if (!(gamma_hat > 0.0)) throw ConfigError("gamma must be positive");
  const Vector& eigs = spectrum.eigs;
  Vector out(n_draws);
  parallel_for(static_cast<std::size_t>(n_draws), 1024, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream rng(seed, i);
      double acc = 0.0;
      for (Index s = 0; s < eigs.size(); ++s) {
        const double z = rng.normal();
        acc += eigs[s] * (gamma_hat * z * z - gamma_hat);
      }
      out[static_cast<Index>(i)] = acc;
    }
  });
  return out;
}

MonteCarloEstimate null_sigma_oracle(const KernelSpec& a, const KernelSpec& b, const DistSpec& p,
                                     double rho, Index n_mc, std::uint64_t seed, Index inner) {
  if (n_mc < 2) throw ConfigError("n_mc must be >= 2");
  if (inner < 1) throw ConfigError("inner sample size must be >= 1");
  const double gamma = gamma_factor(rho);
  const RowSampler sampler(p);
  const Index d = sampler.dim();

  constexpr std::size_t kGrain = 256;
  const std::size_t chunks = (static_cast<std::size_t>(n_mc) + kGrain - 1) / kGrain;
  std::vector<double> sums(chunks, 0.0);
  std::vector<double> squares(chunks, 0.0);

  parallel_for(static_cast<std::size_t>(n_mc), kGrain, [&](std::size_t begin, std::size_t end) {
    Eigen::RowVectorXd x(d), xp(d);
    RowMatrix u(inner, d), v(inner, d);
    auto row_span = [d](auto&& row) { return std::span<double>(row.data(), static_cast<std::size_t>(d)); };

    // Unbiased estimate of K°(x, x') from fresh inner samples U, V ~ P.
    auto centred = [&](const KernelSpec& spec, RandomStream& rng) {
      for (Index i = 0; i < inner; ++i) {
        sampler(rng, row_span(u.row(i)));
        sampler(rng, row_span(v.row(i)));
      }
      double col = 0.0, row = 0.0, grand = 0.0;
      for (Index i = 0; i < inner; ++i) {
        col += eval_kernel(spec, u.row(i), xp);
        row += eval_kernel(spec, x, u.row(i));
        grand += eval_kernel(spec, u.row(i), v.row(i));
      }
      const auto k = static_cast<double>(inner);
      return eval_kernel(spec, x, xp) - col / k - row / k + grand / k;
    };

    double sum = 0.0, sq = 0.0;
    for (std::size_t pair = begin; pair < end; ++pair) {
      RandomStream rng(seed, pair);
      sampler(rng, row_span(x));
      sampler(rng, row_span(xp));
      const double product = centred(a, rng) * centred(b, rng);
      sum += product;
      sq += product * product;
    }
    sums[begin / kGrain] = sum;
    squares[begin / kGrain] = sq;
  });

  const auto count = static_cast<double>(n_mc);
  const double mean = std::accumulate(sums.begin(), sums.end(), 0.0) / count;
  const double second = std::accumulate(squares.begin(), squares.end(), 0.0) / count;
  const double variance = std::max(0.0, (second - mean * mean) * count / (count - 1.0));
  const double scale = 2.0 * gamma * gamma;
  return {scale * mean, scale * std::sqrt(variance / count)};
}

AltCovariance estimate_alt_covariance(const KernelCollection& coll, const Sample& x,
                                      const Sample& y, double rho_hat) {
  if (!(rho_hat > 0.0 && rho_hat < 1.0)) throw ConfigError("rho_hat must lie in (0, 1)");
  const auto dists = PairwiseDistances::compute(x, y);
  const Index m = x.rows();
  const Index n = y.rows();
  const auto r = static_cast<Index>(coll.size());

  AltCovariance out{Matrix(r, r), Matrix(m, r), Matrix(n, r)};
  for (Index a = 0; a < r; ++a) {
    const KernelSpec& spec = coll[static_cast<std::size_t>(a)];
    const Matrix kxx = kernel_from_squared_distances(spec, dists.xx);
    const Matrix kyy = kernel_from_squared_distances(spec, dists.yy);
    const Matrix kxy = kernel_from_squared_distances(spec, dists.xy);
    out.delta1.col(a) = (kxx.colwise().sum().transpose() - kxx.diagonal()) / static_cast<double>(m - 1) -
                        kxy.rowwise().mean();
    out.delta2.col(a) = (kyy.colwise().sum().transpose() - kyy.diagonal()) / static_cast<double>(n - 1) -
                        kxy.colwise().mean().transpose();
  }

  auto sample_cov = [](const Matrix& z) {
    const Matrix centred = z.rowwise() - z.colwise().mean();
    return Matrix(centred.transpose() * centred / static_cast<double>(z.rows() - 1));
  };
  // Projection variance of sqrt(m+n) MMD^2: 4 (Var D1 / rho + Var D2 / (1 - rho)).
  out.sigma_h1 = 4.0 * (sample_cov(out.delta1) / rho_hat + sample_cov(out.delta2) / (1.0 - rho_hat));
  out.sigma_h1 = 0.5 * (out.sigma_h1 + out.sigma_h1.transpose()).eval();
  return out;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double total = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    total += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * total, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw InputError("KS test needs two nonempty samples");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const auto na = static_cast<double>(sa.size());
  const auto nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double t = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= t) ++i;
    while (j < sb.size() && sb[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d)};
}

}  // namespace mmmd
