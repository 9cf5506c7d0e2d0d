#include "mmmd/datagen.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "mmmd/error.hpp"
#include "mmmd/parallel.hpp"

namespace mmmd {
namespace {

// A DistSpec with covariance factors and mixture CDFs resolved once.
struct PreparedDist {
  enum class Kind { Mvn, Mvt, Mixture, PerturbedUniform } kind = Kind::Mvn;
  Index d = 1;
  Vector mean;
  std::shared_ptr<const Matrix> factor;
  double df = 0.0;
  std::vector<double> cumulative;
  std::vector<PreparedDist> children;
  std::vector<int> theta;
  double c1 = 0.0;
};

PreparedDist prepare(const DistSpec& dist) {
  dist.validate();
  PreparedDist p;
  p.d = dist.dim();
  if (const auto* s = std::get_if<MvnSpec>(&dist.kind)) {
    p.kind = PreparedDist::Kind::Mvn;
    p.mean = s->mean;
    p.factor = cholesky_factor(s->cov);
  } else if (const auto* s = std::get_if<MvtSpec>(&dist.kind)) {
    p.kind = PreparedDist::Kind::Mvt;
    p.df = s->df;
    p.factor = cholesky_factor(s->cov);
  } else if (const auto* s = std::get_if<MixtureSpec>(&dist.kind)) {
    p.kind = PreparedDist::Kind::Mixture;
    double acc = 0.0;
    for (const auto& c : s->components) {
      acc += c.weight;
      p.cumulative.push_back(acc);
      p.children.push_back(prepare(*c.dist));
    }
  } else {
    const auto& u = std::get<PerturbedUniformSpec>(dist.kind);
    p.kind = PreparedDist::Kind::PerturbedUniform;
    p.theta = u.theta;
    p.c1 = u.c1;
  }
  return p;
}

void gaussian_row(const Matrix& factor, RandomStream& rng, std::span<double> out, double scale) {
  const Index d = factor.rows();
  Vector z(d);
  for (Index k = 0; k < d; ++k) z[k] = rng.normal();
  for (Index i = 0; i < d; ++i) {
    double acc = 0.0;
    for (Index k = 0; k <= i; ++k) acc += factor(i, k) * z[k];
    out[static_cast<std::size_t>(i)] = scale * acc;
  }
}

void draw(const PreparedDist& p, RandomStream& rng, std::span<double> out) {
  switch (p.kind) {
    case PreparedDist::Kind::Mvn:
      gaussian_row(*p.factor, rng, out, 1.0);
      for (Index i = 0; i < p.d; ++i) out[static_cast<std::size_t>(i)] += p.mean[i];
      return;
    case PreparedDist::Kind::Mvt: {
      gaussian_row(*p.factor, rng, out, 1.0);
      const double w = rng.chi_squared(p.df);
      const double scale = std::sqrt(p.df / w);
      for (double& v : out) v *= scale;
      return;
    }
    case PreparedDist::Kind::Mixture: {
      const double u = rng.uniform();
      std::size_t c = 0;
      while (c + 1 < p.children.size() && u >= p.cumulative[c]) ++c;
      draw(p.children[c], rng, out);
      return;
    }
    case PreparedDist::Kind::PerturbedUniform: {
      const double envelope = 1.0 + p.c1 * std::exp(-1.0);
      for (;;) {
        const double x = rng.uniform();
        const double accept = rng.uniform() * envelope;
        if (accept <= perturbed_uniform_density(x, p.theta, p.c1)) {
          out[0] = x;
          return;
        }
      }
    }
  }
}

Index grid_to_index(double value, const char* what) {
  const double rounded = std::round(value);
  if (!(rounded >= 1.0) || std::abs(rounded - value) > 1e-9)
    throw ConfigError(std::string("grid value for ") + what + " must be a positive integer");
  return static_cast<Index>(rounded);
}

}  // namespace

CovSpec CovSpec::identity(Index d) { return {CovKind::Identity, d, 1.0, 0.0}; }
CovSpec CovSpec::scaled_identity(Index d, double c) { return {CovKind::ScaledIdentity, d, c, 0.0}; }
CovSpec CovSpec::ar1(Index d, double base, double scale) { return {CovKind::Ar1, d, scale, base}; }

void CovSpec::validate() const {
  if (d < 1) throw ConfigError("covariance dimension must be >= 1");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("covariance scale must be > 0");
  if (kind == CovKind::Ar1 && !(base > 0.0 && base < 1.0))
    throw ConfigError("AR(1) base must lie in (0, 1)");
}

Matrix CovSpec::matrix() const {
  validate();
  if (kind != CovKind::Ar1) return scale * Matrix::Identity(d, d);
  Matrix s(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) s(i, j) = scale * std::pow(base, static_cast<double>(std::abs(i - j)));
  return s;
}

std::shared_ptr<const Matrix> cholesky_factor(const CovSpec& cov) {
  static std::mutex mutex;
  static std::map<std::tuple<int, Index, double, double>, std::shared_ptr<const Matrix>> cache;
  cov.validate();
  const auto key = std::make_tuple(static_cast<int>(cov.kind), cov.d, cov.scale, cov.base);
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  Eigen::LLT<Matrix> llt(cov.matrix());
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  auto factor = std::make_shared<const Matrix>(Matrix(llt.matrixL()));
  cache.emplace(key, factor);
  return factor;
}

Index DistSpec::dim() const {
  if (const auto* s = std::get_if<MvnSpec>(&kind)) return s->cov.d;
  if (const auto* s = std::get_if<MvtSpec>(&kind)) return s->cov.d;
  if (const auto* s = std::get_if<MixtureSpec>(&kind))
    return s->components.empty() ? 0 : s->components.front().dist->dim();
  return 1;
}

void DistSpec::validate() const {
  if (const auto* s = std::get_if<MvnSpec>(&kind)) {
    s->cov.validate();
    if (s->mean.size() != s->cov.d) throw ConfigError("mean length must equal covariance dimension");
  } else if (const auto* s = std::get_if<MvtSpec>(&kind)) {
    s->cov.validate();
    if (!(s->df > 2.0)) throw ConfigError("t degrees of freedom must exceed 2");
  } else if (const auto* s = std::get_if<MixtureSpec>(&kind)) {
    if (s->components.empty()) throw ConfigError("mixture needs at least one component");
    double total = 0.0;
    const Index d = s->components.front().dist->dim();
    for (const auto& c : s->components) {
      if (!(c.weight > 0.0)) throw ConfigError("mixture weights must be positive");
      if (!c.dist) throw ConfigError("mixture component is empty");
      if (c.dist->dim() != d) throw ConfigError("mixture components must share a dimension");
      c.dist->validate();
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
  } else {
    const auto& u = std::get<PerturbedUniformSpec>(kind);
    if (!(u.c1 > 0.0)) throw ConfigError("perturbation amplitude c1 must be positive");
    if (u.c1 * std::exp(-1.0) >= 1.0)
      throw ConfigError("perturbation amplitude too large: c1 * e^-1 must be < 1");
    for (int t : u.theta)
      if (t != 1 && t != -1) throw ConfigError("perturbation signs must be +1 or -1");
  }
}

namespace {
DistSpec validated(DistSpec d) {
  d.validate();
  return d;
}
}  // namespace

DistSpec mvn(Vector mean, CovSpec cov) { return validated({MvnSpec{std::move(mean), cov}}); }
DistSpec mvt(double df, CovSpec cov) { return validated({MvtSpec{df, cov}}); }

DistSpec mixture(std::vector<std::pair<double, DistSpec>> components) {
  MixtureSpec spec;
  for (auto& [w, d] : components)
    spec.components.push_back({w, std::make_shared<const DistSpec>(std::move(d))});
  return validated({std::move(spec)});
}

DistSpec perturbed_uniform(std::vector<int> theta, double c1) {
  return validated({PerturbedUniformSpec{std::move(theta), c1}});
}

struct RowSampler::Impl {
  PreparedDist prepared;
};

RowSampler::RowSampler(const DistSpec& dist) : impl_(std::make_unique<Impl>(Impl{prepare(dist)})) {}
RowSampler::~RowSampler() = default;
RowSampler::RowSampler(RowSampler&&) noexcept = default;
RowSampler& RowSampler::operator=(RowSampler&&) noexcept = default;

Index RowSampler::dim() const noexcept { return impl_->prepared.d; }

void RowSampler::operator()(RandomStream& rng, std::span<double> out) const {
  if (static_cast<Index>(out.size()) != impl_->prepared.d)
    throw InputError("draw_row: output size mismatch");
  draw(impl_->prepared, rng, out);
}

void draw_row(const DistSpec& dist, RandomStream& rng, std::span<double> out) {
  const RowSampler sampler{dist};
  sampler(rng, out);
}

Sample sample(const DistSpec& dist, Index n, std::uint64_t seed) {
  if (n < 2) throw InputError("need m >= 2 observations, got " + std::to_string(n));
  const PreparedDist prepared = prepare(dist);
  RowMatrix out(n, prepared.d);
  parallel_for(static_cast<std::size_t>(n), 256, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RandomStream rng(seed, i);
      draw(prepared, rng, std::span<double>(out.row(static_cast<Index>(i)).data(),
                                            static_cast<std::size_t>(prepared.d)));
    }
  });
  return Sample(std::move(out));
}

Sample sample_mvn(const Vector& mean, const CovSpec& cov, Index n, std::uint64_t seed) {
  return sample(mvn(mean, cov), n, seed);
}

Sample sample_mvt(double df, const CovSpec& cov, Index n, std::uint64_t seed) {
  return sample(mvt(df, cov), n, seed);
}

Sample sample_mixture(std::vector<std::pair<double, DistSpec>> components, Index n,
                      std::uint64_t seed) {
  return sample(mixture(std::move(components)), n, seed);
}

Sample sample_perturbed_uniform(std::vector<int> theta, double c1, Index n, std::uint64_t seed) {
  return sample(perturbed_uniform(std::move(theta), c1), n, seed);
}

double perturbation_bump(double t) {
  if (t > -1.0 && t < -0.5) {
    const double s = 4.0 * t + 3.0;
    return std::exp(-1.0 / (1.0 - s * s));
  }
  if (t > -0.5 && t < 0.0) {
    const double s = 4.0 * t + 1.0;
    return -std::exp(-1.0 / (1.0 - s * s));
  }
  return 0.0;
}

double perturbed_uniform_density(double x, std::span<const int> theta, double c1) {
  if (x < 0.0 || x > 1.0) return 0.0;
  if (theta.empty()) return 1.0;
  const auto count = static_cast<double>(theta.size());
  double bumps = 0.0;
  for (std::size_t v = 0; v < theta.size(); ++v)
    bumps += theta[v] * perturbation_bump(count * x - static_cast<double>(v + 1));
  return 1.0 + (c1 / count) * bumps;
}

std::vector<std::string> scenario_names() {
  return {"null-gauss", "sample-size", "s1", "s2", "s3", "s4", "mixture", "local",
          "contamination", "high-dim", "perturbed-uniform"};
}

double default_grid_value(std::string_view name) {
  if (name == "null-gauss") return 2.0;
  if (name == "sample-size") return 100.0;
  if (name == "s1" || name == "s2" || name == "s3" || name == "s4" || name == "high-dim") return 5.0;
  if (name == "mixture") return 0.5;
  if (name == "local" || name == "contamination") return 0.0;
  if (name == "perturbed-uniform") return 1.0;
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

ScenarioSpec make_scenario(std::string_view name, double grid_value,
                           const ScenarioOverrides& overrides, RandomStream* rng) {
  ScenarioSpec sc;
  sc.name = std::string(name);
  sc.grid_value = grid_value;
  sc.m = overrides.m.value_or(100);
  sc.n = overrides.n.value_or(100);
  auto zeros = [](Index d) { return Vector::Zero(d); };

  // Half-half Gaussian / t10 mixture at covariance `cov`, dropping empty parts.
  auto gauss_t_mixture = [&](double eps, const CovSpec& cov) {
    std::vector<std::pair<double, DistSpec>> parts;
    if (eps > 0.0) parts.emplace_back(eps, mvn(zeros(cov.d), cov));
    if (eps < 1.0) parts.emplace_back(1.0 - eps, mvt(10.0, cov));
    return mixture(std::move(parts));
  };

  if (name == "null-gauss") {
    sc.grid_name = "d";
    const Index d = grid_to_index(grid_value, "d");
    sc.p = mvn(zeros(d), CovSpec::identity(d));
    sc.q = sc.p;
  } else if (name == "sample-size") {
    sc.grid_name = "m";
    const Index size = grid_to_index(grid_value, "m");
    if (!overrides.m) sc.m = size;
    if (!overrides.n) sc.n = size;
    const Index d = overrides.d.value_or(2);
    sc.p = mvn(zeros(d), CovSpec::identity(d));
    sc.q = mvn(zeros(d), CovSpec::scaled_identity(d, 1.25));
  } else if (name == "s1") {
    sc.grid_name = "d";
    const Index d = grid_to_index(grid_value, "d");
    sc.p = mvn(zeros(d), CovSpec::ar1(d, 0.5));
    sc.q = mvn(Vector::Constant(d, 0.1), CovSpec::ar1(d, 0.5, 1.15));
  } else if (name == "s2") {
    sc.grid_name = "d";
    const Index d = grid_to_index(grid_value, "d");
    sc.p = mvt(10.0, CovSpec::ar1(d, 0.5));
    sc.q = mvt(10.0, CovSpec::ar1(d, 0.5, 1.22));
  } else if (name == "s3") {
    sc.grid_name = "d";
    const Index d = grid_to_index(grid_value, "d");
    sc.p = gauss_t_mixture(0.5, CovSpec::ar1(d, 0.5));
    sc.q = gauss_t_mixture(0.5, CovSpec::ar1(d, 0.5, 1.22));
  } else if (name == "s4") {
    sc.grid_name = "d";
    const Index d = grid_to_index(grid_value, "d");
    sc.p = gauss_t_mixture(0.5, CovSpec::ar1(d, 0.7));
    sc.q = gauss_t_mixture(0.5, CovSpec::ar1(d, 0.7, 1.3));
  } else if (name == "mixture") {
    sc.grid_name = "epsilon";
    if (!(grid_value >= 0.0 && grid_value <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
    const Index d = overrides.d.value_or(30);
    sc.p = gauss_t_mixture(grid_value, CovSpec::ar1(d, 0.5));
    sc.q = gauss_t_mixture(grid_value, CovSpec::ar1(d, 0.5, 1.25));
  } else if (name == "local") {
    sc.grid_name = "h";
    const Index d = overrides.d.value_or(20);
    const double total = static_cast<double>(sc.m + sc.n);
    const double scale = 1.0 + grid_value / std::sqrt(total);
    if (!(scale > 0.0)) throw ConfigError("local alternative scale 1 + h/sqrt(N) must be positive");
    sc.p = mvn(zeros(d), CovSpec::identity(d));
    sc.q = grid_value == 0.0 ? sc.p : mvn(zeros(d), CovSpec::scaled_identity(d, scale));
  } else if (name == "contamination") {
    // f_Q = (1 - delta) f_P + delta g with delta = h / sqrt(N), g = N(0, 2 I_d).
    sc.grid_name = "h";
    const Index d = overrides.d.value_or(2);
    const double delta = grid_value / std::sqrt(static_cast<double>(sc.m + sc.n));
    if (!(delta >= 0.0 && delta < 1.0)) throw ConfigError("contamination delta must lie in [0, 1)");
    sc.p = mvn(zeros(d), CovSpec::identity(d));
    if (delta == 0.0) {
      sc.q = sc.p;
    } else {
      sc.q = mixture({{1.0 - delta, sc.p}, {delta, mvn(zeros(d), CovSpec::scaled_identity(d, 2.0))}});
    }
  } else if (name == "high-dim") {
    sc.grid_name = "d";
    const Index d = grid_to_index(grid_value, "d");
    sc.high_dim_grids = true;
    sc.p = mvn(zeros(d), CovSpec::identity(d));
    sc.q = mvn(Vector::Constant(d, 1.25 / std::sqrt(static_cast<double>(d))), CovSpec::identity(d));
  } else if (name == "perturbed-uniform") {
    sc.grid_name = "P";
    const Index count = grid_to_index(grid_value, "P");
    sc.m = overrides.m.value_or(500);
    sc.n = overrides.n.value_or(500);
    std::vector<int> theta(static_cast<std::size_t>(count), 1);
    if (rng)
      for (int& t : theta) t = rng->uniform() < 0.5 ? -1 : 1;
    sc.p = perturbed_uniform({});
    sc.q = perturbed_uniform(std::move(theta), kPerturbationAmplitude);
  } else {
    throw ConfigError("unknown scenario '" + std::string(name) + "'");
  }
  if (sc.m < 2 || sc.n < 2) throw ConfigError("scenario sample sizes must be >= 2");
  return sc;
}

std::vector<ScenarioSpec> scenario_catalog() {
  std::vector<ScenarioSpec> out;
  for (const auto& name : scenario_names()) out.push_back(make_scenario(name, default_grid_value(name)));
  return out;
}

}  // namespace mmmd
