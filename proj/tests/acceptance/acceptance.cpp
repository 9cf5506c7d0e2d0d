// Acceptance suite: one PASS/FAIL line per criterion. Run with criterion
// numbers as arguments to select a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <boost/math/distributions/chi_squared.hpp>

#include "mmmd/aggregation.hpp"
#include "mmmd/asymptotics.hpp"
#include "mmmd/bootstrap.hpp"
#include "mmmd/datagen.hpp"
#include "mmmd/estimators.hpp"
#include "mmmd/harness.hpp"
#include "mmmd/parallel.hpp"

namespace fs = std::filesystem;
using namespace mmmd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

Sample normal_sample(Index n, Index d, std::uint64_t seed, double shift = 0.0) {
  return sample_mvn(Vector::Constant(d, shift), CovSpec::identity(d), n, seed);
}

// 1. Fast estimator against the O(m^2 n^2) U-statistic form.
Outcome estimator_oracle() {
  std::mt19937_64 gen(20240101);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index m = 2 + static_cast<Index>(gen() % 29);
    const Index n = 2 + static_cast<Index>(gen() % 29);
    const Index d = 1 + static_cast<Index>(gen() % 5);
    const double shift = static_cast<double>(gen() % 4) * 0.5;
    const Sample x = normal_sample(m, d, gen());
    const Sample y = normal_sample(n, d, gen(), shift);
    const KernelSpec spec(gen() % 2 ? KernelFamily::Gaussian : KernelFamily::Laplace,
                          0.25 + static_cast<double>(gen() % 1000) / 250.0);
    const double fast = mmd2_unbiased(spec, x, y);
    const double slow = mmd2_ustat_oracle(spec, x, y);
    worst = std::max(worst, std::abs(fast - slow) / std::abs(slow));
  }
  return {worst <= 1e-10, fmt("max relative error %.2e over 200 instances (tol 1e-10)", worst)};
}

// 2. MMD^2 is unchanged by K -> K - f(x) - f(y) + c.
Outcome centering_invariance() {
  const Sample x = normal_sample(20, 3, 1);
  const Sample y = normal_sample(25, 3, 2, 0.7);
  const KernelSpec spec(KernelFamily::Gaussian, 1.5);
  const Matrix kxx = gram_matrix(spec, x).values;
  const Matrix kyy = gram_matrix(spec, y).values;
  const Matrix kxy = cross_gram(spec, x, y);
  const double base = mmd2_from_grams(kxx, kyy, kxy);

  std::mt19937_64 gen(7);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    Vector fx(20), fy(25);
    for (auto& v : fx) v = normal(gen);
    for (auto& v : fy) v = normal(gen);
    const double c = 3.0 * normal(gen);
    const Matrix sxx = (kxx.colwise() - fx).rowwise() - fx.transpose();
    const Matrix syy = (kyy.colwise() - fy).rowwise() - fy.transpose();
    const Matrix sxy = (kxy.colwise() - fx).rowwise() - fy.transpose();
    const double shifted = mmd2_from_grams(sxx.array() + c, syy.array() + c, sxy.array() + c);
    worst = std::max(worst, std::abs(shifted - base) / std::abs(base));
  }
  return {worst <= 1e-10, fmt("MMD^2 = %.6f, max relative change %.2e over 50 (f, c) (tol 1e-10)",
                              base, worst)};
}

// 3. Conditional mean zero and covariance Sigma of the multiplier draws.
Outcome bootstrap_moments() {
  const Sample x = normal_sample(100, 2, 3);
  const KernelCollection coll = bandwidth_grid(BandwidthPreset::GaussMMMD, median_heuristic(x));
  const auto grams = centered_grams(coll, x);
  const double rho = 0.5;
  const int B = 100000;
  const Matrix e = multiplier_draws(grams, rho, B, 31);
  const Matrix sigma = estimate_null_covariance(grams, rho).sigma;

  const Index r = e.cols();
  const Eigen::RowVectorXd mean = e.colwise().mean();
  const Matrix centred = e.rowwise() - mean;
  double worst_mean = 0.0, worst_cov = 0.0;
  for (Index a = 0; a < r; ++a) {
    const double sd = std::sqrt(centred.col(a).squaredNorm() / (B - 1));
    worst_mean = std::max(worst_mean, std::abs(mean(a)) / (sd / std::sqrt(B)));
    for (Index b = a; b < r; ++b) {
      const Vector prod = centred.col(a).cwiseProduct(centred.col(b));
      const double cov = prod.sum() / (B - 1);
      const double se = std::sqrt((prod.array() - prod.mean()).square().sum() / (B - 1) / B);
      worst_cov = std::max(worst_cov, std::abs(cov - sigma(a, b)) / se);
    }
  }
  return {worst_mean <= 4.0 && worst_cov <= 3.0,
          fmt("r = %ld, max |mean|/SE %.2f (tol 4), max |cov - Sigma|/SE %.2f (tol 3)",
              static_cast<long>(r), worst_mean, worst_cov)};
}

// 4. Multiplier draws and weighted chi-square draws have the same law.
Outcome spectral_law() {
  const Index m = 200;
  const Index draws = 100000;
  const Sample x = normal_sample(m, 2, 4);
  const double med = median_heuristic(x);
  const KernelCollection coll({KernelSpec(KernelFamily::Gaussian, 0.5 * med),
                               KernelSpec(KernelFamily::Gaussian, med),
                               KernelSpec(KernelFamily::Gaussian, 2.0 * med),
                               KernelSpec(KernelFamily::Laplace, med),
                               KernelSpec(KernelFamily::Laplace, 2.0 * med)});
  const auto grams = centered_grams(coll, x);
  const double rho = 0.5;
  const double gamma = gamma_factor(rho);
  const Matrix e = multiplier_draws(grams, rho, static_cast<int>(draws), 41);

  std::vector<Vector> etas;
  for (Index s = 0; s < 5; ++s) etas.push_back(Vector::Unit(5, s));
  std::mt19937_64 gen(43);
  std::normal_distribution<double> normal;
  for (int k = 0; k < 3; ++k) {
    Vector eta(5);
    for (auto& v : eta) v = normal(gen);
    etas.push_back(eta);
  }

  double min_p = 1.0, max_d = 0.0;
  for (std::size_t k = 0; k < etas.size(); ++k) {
    CenteredGram combined{Matrix::Zero(m, m)};
    for (Index s = 0; s < 5; ++s) combined.values += etas[k](s) * grams[static_cast<std::size_t>(s)].values;
    const Vector boot = e * etas[k];
    const Vector spec = weighted_chisq_sample(centered_gram_spectrum(combined), gamma, draws,
                                              derive_seed(44, {k}));
    const auto ks = ks_two_sample({boot.data(), static_cast<std::size_t>(draws)},
                                  {spec.data(), static_cast<std::size_t>(draws)});
    min_p = std::min(min_p, ks.p_value);
    max_d = std::max(max_d, ks.statistic);
  }
  return {min_p > 0.01, fmt("8 laws (5 kernels, 3 eta), min KS p-value %.4f (reject below 0.01), "
                            "max D %.5f", min_p, max_d)};
}

// 5. sigma_11 at m = 5000 against the Monte Carlo oracle.
Outcome sigma_consistency() {
  const KernelSpec g(KernelFamily::Gaussian, 1.0);
  const DistSpec p = mvn(Vector::Zero(1), CovSpec::identity(1));
  const Sample x = sample(p, 5000, 51);
  const double sigma = estimate_null_covariance(KernelCollection({g}), x, 0.5).sigma(0, 0);
  const auto oracle = null_sigma_oracle(g, g, p, 0.5, 1000000, 52);
  const double band = 0.04 * oracle.value + 3.0 * oracle.std_error;
  const double diff = std::abs(sigma - oracle.value);
  return {diff <= band, fmt("sigma_11 = %.5f, oracle %.5f +- %.5f, |diff| %.5f (band %.5f = 4%% + 3 SE)",
                            sigma, oracle.value, oracle.std_error, diff, band)};
}

ExperimentConfig load_config(const std::string& name) {
  return ExperimentConfig::from_file(fs::path(MMMD_CONFIG_DIR) / name);
}

// 6. Empirical level under P = Q = N(0, I_2).
Outcome type_one_error() {
  const auto cfg = load_config("null_typeI.json");
  const auto table = run_experiment(cfg);
  bool ok = !table.partial;
  std::string detail;
  for (const auto& row : table.rows) {
    ok = ok && row.rejection_rate >= 0.03 && row.rejection_rate <= 0.08;
    detail += fmt("%s %.3f; ", row.method.c_str(), row.rejection_rate);
  }
  return {ok, detail + fmt("band [0.03, 0.08], reps %d", cfg.reps)};
}

// 7. Paired power at Q = N(0, 1.25 I_2), m = n = 500.
Outcome power_ordering() {
  ExperimentConfig cfg;
  cfg.scenario = "sample-size";
  cfg.methods = {Method::MmmdGauss, Method::MmdGauss};
  cfg.grid = {"m", {500}};
  cfg.reps = 500;
  cfg.B = 500;
  cfg.seed = 70;
  const auto table = run_experiment(cfg);
  const double p_mmmd = table.row("mmmd-gauss", 500).rejection_rate;
  const double p_mmd = table.row("mmd-gauss", 500).rejection_rate;
  const double se = paired_difference_se(table.decisions_for("mmmd-gauss", 500),
                                         table.decisions_for("mmd-gauss", 500));
  const bool ok = !table.partial && p_mmmd >= p_mmd - 0.05 && p_mmmd >= 0.8;
  return {ok, fmt("power mmmd-gauss %.3f, mmd-gauss %.3f, paired diff %.3f (SE %.3f); need "
                  "mmmd >= mmd - 0.05 and mmmd >= 0.8",
                  p_mmmd, p_mmd, p_mmmd - p_mmd, se)};
}

// 8. Local alternatives Q = N(0, (1 + h/sqrt(N)) I_20), paired across h:
// each replicate reuses X, the same base draw Z for Y = sqrt(scale) Z, and
// the same multipliers.
Outcome local_power() {
  const std::vector<double> hs{0, 1, 2, 3};
  const int reps = 500;
  std::vector<std::vector<signed char>> decisions(hs.size(), std::vector<signed char>(reps, -1));
  std::vector<double> scales;
  for (double h : hs) {
    const auto sc = make_scenario("local", h);
    const auto& q = std::get<MvnSpec>(sc.q.kind);
    scales.push_back(q.cov.kind == CovKind::Identity ? 1.0 : q.cov.scale);
  }
  const auto sc0 = make_scenario("local", 0.0);
  const Index d = sc0.p.dim();
  parallel_for(static_cast<std::size_t>(reps), 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t rep = begin; rep < end; ++rep) {
      const std::uint64_t cell = derive_seed(80, {rep});
      const Sample x = sample(sc0.p, sc0.m, derive_seed(cell, {1}));
      const Sample z = sample(sc0.p, sc0.n, derive_seed(cell, {2}));
      const BootstrapConfig boot{500, 0.05, derive_seed(cell, {4}), {}};
      for (std::size_t k = 0; k < hs.size(); ++k) {
        const Sample y(RowMatrix(std::sqrt(scales[k]) * z.data()));
        decisions[k][rep] = run_method(Method::MmmdGauss, x, y, boot).reject ? 1 : 0;
      }
    }
  });
  std::vector<double> power;
  for (const auto& dec : decisions)
    power.push_back(static_cast<double>(std::count(dec.begin(), dec.end(), 1)) / reps);
  bool ok = power[0] >= 0.03 && power[0] <= 0.08;
  std::string detail = fmt("d = %ld, mmmd-gauss power", static_cast<long>(d));
  for (std::size_t k = 0; k < hs.size(); ++k) detail += fmt(" h=%g:%.3f", hs[k], power[k]);
  double worst = 0.0;
  for (std::size_t k = 1; k < hs.size(); ++k) {
    const double se = paired_difference_se(decisions[k], decisions[k - 1]);
    const double drop = power[k - 1] - power[k];
    if (drop > 2.0 * se) ok = false;
    if (se > 0) worst = std::max(worst, drop / se);
  }
  return {ok, detail + fmt("; level band [0.03, 0.08] at h=0, largest drop %.2f paired SE (tol 2)",
                           worst)};
}

// 9. Monte Carlo covariance of sqrt(m+n) MMD under a fixed alternative
// against the plug-in sigma_h1.
Outcome alternative_covariance() {
  const Index m = 2000, n = 2000;
  const int reps = 2000;
  const int plugin_reps = 20;
  const KernelCollection coll({KernelSpec(KernelFamily::Gaussian, 0.5),
                               KernelSpec(KernelFamily::Gaussian, 1.0),
                               KernelSpec(KernelFamily::Gaussian, 2.0)});
  const Index r = 3;
  const DistSpec p = mvn(Vector::Zero(1), CovSpec::identity(1));
  const DistSpec q = mvn(Vector::Constant(1, 1.0), CovSpec::identity(1));
  const double root = std::sqrt(static_cast<double>(m + n));
  const double rho = sampling_ratio(m, n);

  Matrix values(reps, r);
  std::vector<Matrix> plugin(plugin_reps);
  parallel_for(static_cast<std::size_t>(reps), 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t rep = begin; rep < end; ++rep) {
      const Sample x = sample(p, m, derive_seed(90, {rep, 1}));
      const Sample y = sample(q, n, derive_seed(90, {rep, 2}));
      values.row(static_cast<Index>(rep)) = root * mmd2_vector(coll, x, y).values.transpose();
      if (rep < static_cast<std::size_t>(plugin_reps))
        plugin[rep] = estimate_alt_covariance(coll, x, y, rho).sigma_h1;
    }
  });
  Matrix plug = Matrix::Zero(r, r);
  for (const auto& s : plugin) plug += s / plugin_reps;
  const Matrix centred = values.rowwise() - values.colwise().mean();
  const Matrix mc = centred.transpose() * centred / (reps - 1);

  double worst = 0.0;
  for (Index a = 0; a < r; ++a)
    for (Index b = a; b < r; ++b) worst = std::max(worst, std::abs(mc(a, b) - plug(a, b)) / std::abs(plug(a, b)));
  return {worst <= 0.10, fmt("MC diag (%.4f, %.4f, %.4f), plug-in diag (%.4f, %.4f, %.4f), "
                             "max relative entry error %.3f (tol 0.10)",
                             mc(0, 0), mc(1, 1), mc(2, 2), plug(0, 0), plug(1, 1), plug(2, 2), worst)};
}

// 10. Perturbed-uniform density integrates to one; sampler passes a
// 50-bin chi-square goodness-of-fit test.
Outcome perturbed_uniform_check() {
  RandomStream theta_rng(100, 0);
  const int grid = 100000;
  const int bins = 50;
  const Index draws = 100000;
  const double critical =
      boost::math::quantile(boost::math::complement(boost::math::chi_squared(bins - 1), 0.01));
  double worst_integral = 0.0, worst_chi = 0.0;
  for (int count = 1; count <= 6; ++count) {
    std::vector<int> theta(static_cast<std::size_t>(count));
    for (int& t : theta) t = theta_rng.uniform() < 0.5 ? -1 : 1;
    double integral = 0.0;
    for (int i = 0; i < grid; ++i)
      integral += perturbed_uniform_density((i + 0.5) / grid, theta, kPerturbationAmplitude);
    worst_integral = std::max(worst_integral, std::abs(integral / grid - 1.0));

    const Sample s = sample_perturbed_uniform(theta, kPerturbationAmplitude, draws,
                                              derive_seed(101, {static_cast<std::uint64_t>(count)}));
    std::vector<double> observed(bins, 0.0);
    for (Index i = 0; i < draws; ++i)
      observed[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(s.data()(i, 0) * bins)))] += 1.0;
    const int per_bin = 2000;
    double chi = 0.0;
    for (int b = 0; b < bins; ++b) {
      double mass = 0.0;
      for (int k = 0; k < per_bin; ++k)
        mass += perturbed_uniform_density((b + (k + 0.5) / per_bin) / bins, theta, kPerturbationAmplitude);
      const double expected = draws * mass / (per_bin * bins);
      chi += (observed[static_cast<std::size_t>(b)] - expected) *
             (observed[static_cast<std::size_t>(b)] - expected) / expected;
    }
    worst_chi = std::max(worst_chi, chi);
  }
  return {worst_integral <= 1e-4 && worst_chi <= critical,
          fmt("P = 1..6: max |integral - 1| %.2e (tol 1e-4), max chi-square %.1f (critical %.1f, df 49)",
              worst_integral, worst_chi, critical)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// 11. Every CLI subcommand run twice gives byte-identical output.
Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / fmt("mmmd_acceptance_%d", static_cast<int>(::getpid()));
  fs::create_directories(dir);
  const std::string cli = MMMD_CLI_PATH;
  const std::string cfg = (fs::path(MMMD_CONFIG_DIR) / "smoke.json").string();
  auto path = [&](const std::string& name) { return (dir / name).string(); };

  struct Invocation {
    std::string name;
    std::string args;
    std::vector<std::string> files;
  };
  const std::vector<Invocation> runs{
      {"simulate-p", "simulate --scenario s2 --which p --n 150 --seed 5 --out {}x.csv", {"x.csv"}},
      {"simulate-q", "simulate --scenario s2 --which q --n 120 --seed 5 --out {}y.csv", {"y.csv"}},
      {"test", "test --x {}x.csv --y {}y.csv --method mmmd-mixed --alpha 0.05 --B 300 --seed 9", {}},
      {"test-swap", "test --x {}x.csv --y {}y.csv --method mmdagg-lap --B 300 --seed 9 --swap-roles", {}},
      {"experiment", "experiment --config " + cfg + " --out {}table.csv", {"table.csv"}},
      {"experiment-1-thread", "--threads 1 experiment --config " + cfg + " --out {}table.csv", {"table.csv"}},
      {"null-check", "null-check --scenario null-gauss --kernel gauss:median --m 100 --draws 5000 "
                     "--seed 3 --out {}null.csv", {"null.csv"}},
  };

  std::vector<std::string> reference;
  int failures = 0;
  std::string detail;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::vector<std::string> outputs;
    for (int attempt = 0; attempt < 2; ++attempt) {
      const std::string prefix = path(fmt("run%zu_%d_", k, attempt));
      std::string args = runs[k].args;
      const std::string x_prefix = path(fmt("run0_%d_", attempt));
      const std::string y_prefix = path(fmt("run1_%d_", attempt));
      for (std::size_t pos; (pos = args.find("{}x.csv")) != std::string::npos;)
        args.replace(pos, 2, k == 0 ? prefix : x_prefix);
      for (std::size_t pos; (pos = args.find("{}y.csv")) != std::string::npos;)
        args.replace(pos, 2, k == 1 ? prefix : y_prefix);
      for (std::size_t pos; (pos = args.find("{}")) != std::string::npos;) args.replace(pos, 2, prefix);
      const std::string out = prefix + "stdout.txt";
      const int status = std::system((cli + " " + args + " > " + out + " 2>&1").c_str());
      std::string blob = fmt("status=%d\n", status) + slurp(out);
      for (const auto& f : runs[k].files) blob += "\n--\n" + slurp(prefix + f);
      if (status != 0) {
        ++failures;
        detail += runs[k].name + " exited " + std::to_string(status) + "; ";
      }
      outputs.push_back(blob);
    }
    if (outputs[0] != outputs[1]) {
      ++failures;
      detail += runs[k].name + " differs; ";
    }
    reference.push_back(outputs[0]);
  }
  // The table must not depend on the worker count.
  const auto table_of = [](const std::string& blob) { return blob.substr(blob.find("\n--\n")); };
  if (table_of(reference[4]) != table_of(reference[5])) {
    ++failures;
    detail += "experiment table depends on thread count; ";
  }
  fs::remove_all(dir);
  return {failures == 0,
          fmt("%zu invocations run twice, byte-identical outputs and files; ", runs.size()) +
              (detail.empty() ? std::string("no differences") : detail)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0: no fixed limit
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "estimator-oracle equivalence", 10, estimator_oracle},
      {2, "centering invariance", 5, centering_invariance},
      {3, "bootstrap moment identities", 60, bootstrap_moments},
      {4, "spectral law equivalence", 120, spectral_law},
      {5, "null covariance consistency", 120, sigma_consistency},
      {6, "type-I error", 0, type_one_error},
      {7, "power ordering", 0, power_ordering},
      {8, "local power", 0, local_power},
      {9, "alternative covariance plug-in", 300, alternative_covariance},
      {10, "perturbed uniform", 60, perturbed_uniform_check},
      {11, "CLI determinism", 0, cli_determinism},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.1f s", seconds);
    if (c.limit_seconds > 0) {
      timing += fmt(" (limit %.0f s)", c.limit_seconds);
      if (seconds > c.limit_seconds) {
        out.pass = false;
        timing += " over time limit";
      }
    }
    if (!out.pass) ++failed;
    std::printf("criterion %2d %s %s: %s; %s\n", c.id, out.pass ? "PASS" : "FAIL", c.name,
                out.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
