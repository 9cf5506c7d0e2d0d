#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmmd/aggbaseline.hpp"
#include "mmmd/asymptotics.hpp"
#include "mmmd/bootstrap.hpp"
#include "mmmd/datagen.hpp"

namespace mmmd {

enum class Method { MmmdGauss, MmmdLap, MmmdMixed, MmdGauss, MmdLap, MmdaggGauss, MmdaggLap };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
std::vector<Method> all_methods();

/// Kernel grid a method uses, at the median-heuristic bandwidth.
BandwidthPreset method_preset(Method method, bool high_dim_grids);

/// Runs one method on (x, y): bandwidths from the median heuristic of the
/// pooled sample, then the MMMD, single-kernel or aggregated test.
TestResult run_method(Method method, const Sample& x, const Sample& y, const BootstrapConfig& cfg,
                      bool high_dim_grids = false);

struct GridSpec {
  std::string name;
  std::vector<double> values;
};

inline constexpr int kConfigVersion = 1;

struct ExperimentConfig {
  std::string scenario;
  ScenarioOverrides overrides;
  std::vector<Method> methods;
  GridSpec grid;
  int reps = 500;
  double alpha = 0.05;
  int B = 500;
  std::uint64_t seed = 0;
  std::optional<double> lambda;

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::filesystem::path& path);
  [[nodiscard]] nlohmann::json to_json() const;
  void validate() const;
};

struct ResultRow {
  std::string method;
  std::string grid_name;
  double grid_value = 0.0;
  double rejection_rate = 0.0;
  double mc_standard_error = 0.0;
  int reps = 0;
  int errors = 0;
  std::uint64_t seed = 0;
};

/// Rejection rates per (method, grid value). `decisions[row][rep]` keeps the
/// paired per-replicate outcomes: 1 reject, 0 accept, -1 failed.
struct ResultsTable {
  std::vector<ResultRow> rows;
  std::vector<std::vector<signed char>> decisions;
  std::vector<std::string> failures;
  bool partial = false;

  [[nodiscard]] const ResultRow& row(std::string_view method, double grid_value) const;
  [[nodiscard]] const std::vector<signed char>& decisions_for(std::string_view method,
                                                              double grid_value) const;
};

/// Replicate `rep` at grid index `g` draws its data from streams derived from
/// (seed, g, rep); every method sees the same data and multipliers.
ResultsTable run_experiment(const ExperimentConfig& cfg);

/// Standard error of a paired difference of rejection rates (McNemar counts).
double paired_difference_se(const std::vector<signed char>& a, const std::vector<signed char>& b);

TestResult run_test(const std::filesystem::path& path_x, const std::filesystem::path& path_y,
                    Method method, const BootstrapConfig& cfg, bool swap_roles = false);

/// CSV: one observation per row, optional single header line (detected by a
/// non-numeric first line).
Sample parse_sample(std::string_view text, std::string_view source = "<memory>");
Sample load_sample(const std::filesystem::path& path);
std::string format_sample(const Sample& s);
void write_sample(const Sample& s, const std::filesystem::path& path);

std::string format_table(const ResultsTable& table);
void write_table(const ResultsTable& table, const std::filesystem::path& path);

nlohmann::json result_to_json(const TestResult& result);

/// Kernel for the null-law check, written "gauss:<bw>", "lap:<bw>",
/// "gauss:median" or "gauss:median*<multiplier>".
struct KernelChoice {
  KernelFamily family = KernelFamily::Gaussian;
  std::optional<double> bandwidth;
  double multiplier = 1.0;

  static KernelChoice parse(std::string_view text);
  [[nodiscard]] KernelSpec resolve(const Sample& x) const;
};

struct NullCheckReport {
  KernelSpec kernel;
  Index m = 0;
  KsResult ks;
  Vector bootstrap;
  Vector spectral;
};

/// Compares multiplier-bootstrap draws with weighted chi-square draws from the
/// centred-Gram spectrum on one sample of size m from the scenario's P.
NullCheckReport null_check(std::string_view scenario, const KernelChoice& kernel, Index m,
                           Index draws, std::uint64_t seed);
std::string format_null_check(const NullCheckReport& report, std::size_t points = 512);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mmmd
