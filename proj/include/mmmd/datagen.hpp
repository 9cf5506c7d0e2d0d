#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mmmd/rng.hpp"
#include "mmmd/sample.hpp"

namespace mmmd {

enum class CovKind { Identity, ScaledIdentity, Ar1 };

/// Covariance families used by the simulation settings: I_d, c I_d and the
/// AR(1) matrix scale * ((base^|i-j|)).
struct CovSpec {
  CovKind kind = CovKind::Identity;
  Index d = 1;
  double scale = 1.0;
  double base = 0.0;

  static CovSpec identity(Index d);
  static CovSpec scaled_identity(Index d, double c);
  static CovSpec ar1(Index d, double base, double scale = 1.0);

  [[nodiscard]] Matrix matrix() const;
  void validate() const;
};

/// Lower-triangular L with L L' equal to cov.matrix(); memoised per spec.
std::shared_ptr<const Matrix> cholesky_factor(const CovSpec& cov);

struct DistSpec;

struct MvnSpec {
  Vector mean;
  CovSpec cov;
};

/// Centred multivariate t: Z sqrt(df / W), Z ~ N(0, cov), W ~ chi^2_df.
struct MvtSpec {
  double df = 10.0;
  CovSpec cov;
};

struct MixtureComponent {
  double weight = 1.0;
  std::shared_ptr<const DistSpec> dist;
};

struct MixtureSpec {
  std::vector<MixtureComponent> components;
};

/// Density 1{x in [0,1]} + (c1/P) sum_v theta_v G(P x - v) on the line.
/// An empty theta is the plain uniform distribution.
struct PerturbedUniformSpec {
  std::vector<int> theta;
  double c1 = 2.7;
};

struct DistSpec {
  std::variant<MvnSpec, MvtSpec, MixtureSpec, PerturbedUniformSpec> kind;

  [[nodiscard]] Index dim() const;
  void validate() const;
};

DistSpec mvn(Vector mean, CovSpec cov);
DistSpec mvt(double df, CovSpec cov);
DistSpec mixture(std::vector<std::pair<double, DistSpec>> components);
DistSpec perturbed_uniform(std::vector<int> theta, double c1 = 2.7);

/// A DistSpec resolved for repeated row draws (covariance factors cached).
class RowSampler {
 public:
  explicit RowSampler(const DistSpec& dist);
  ~RowSampler();
  RowSampler(RowSampler&&) noexcept;
  RowSampler& operator=(RowSampler&&) noexcept;

  [[nodiscard]] Index dim() const noexcept;
  void operator()(RandomStream& rng, std::span<double> out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Draws n rows; row i reads only RandomStream(seed, i), so any subset of
/// rows can be regenerated independently and in parallel.
Sample sample(const DistSpec& dist, Index n, std::uint64_t seed);
void draw_row(const DistSpec& dist, RandomStream& rng, std::span<double> out);

Sample sample_mvn(const Vector& mean, const CovSpec& cov, Index n, std::uint64_t seed);
Sample sample_mvt(double df, const CovSpec& cov, Index n, std::uint64_t seed);
Sample sample_mixture(std::vector<std::pair<double, DistSpec>> components, Index n,
                      std::uint64_t seed);
Sample sample_perturbed_uniform(std::vector<int> theta, double c1, Index n, std::uint64_t seed);

/// Two-sided bump: exp(-1/(1-(4t+3)^2)) on (-1,-1/2) minus
/// exp(-1/(1-(4t+1)^2)) on (-1/2,0), zero elsewhere.
double perturbation_bump(double t);
double perturbed_uniform_density(double x, std::span<const int> theta, double c1);

inline constexpr double kPerturbationAmplitude = 2.7;

/// A (P, Q) pair for one grid point of a simulation setting.
struct ScenarioSpec {
  std::string name;
  std::string grid_name;
  double grid_value = 0.0;
  DistSpec p;
  DistSpec q;
  Index m = 100;
  Index n = 100;
  /// Selects the high-dimensional bandwidth grids for the kernel methods.
  bool high_dim_grids = false;
};

struct ScenarioOverrides {
  std::optional<Index> m;
  std::optional<Index> n;
  std::optional<Index> d;
};

std::vector<std::string> scenario_names();
double default_grid_value(std::string_view name);

/// Builds a scenario at one grid value. Settings with random structure (the
/// sign vector of the perturbed uniform) draw it from `rng` when given.
ScenarioSpec make_scenario(std::string_view name, double grid_value,
                           const ScenarioOverrides& overrides = {}, RandomStream* rng = nullptr);

/// Every scenario at its default grid value.
std::vector<ScenarioSpec> scenario_catalog();

}  // namespace mmmd
