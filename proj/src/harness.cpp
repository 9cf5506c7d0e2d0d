#include "mmmd/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "mmmd/asymptotics.hpp"
#include "mmmd/error.hpp"
#include "mmmd/parallel.hpp"

namespace mmmd {
namespace {

constexpr std::pair<std::string_view, Method> kMethodNames[] = {
    {"mmmd-gauss", Method::MmmdGauss},     {"mmmd-lap", Method::MmmdLap},
    {"mmmd-mixed", Method::MmmdMixed},     {"mmd-gauss", Method::MmdGauss},
    {"mmd-lap", Method::MmdLap},           {"mmdagg-gauss", Method::MmdaggGauss},
    {"mmdagg-lap", Method::MmdaggLap},
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                      : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string format_double(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string format_fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

bool is_aggregated(Method m) { return m == Method::MmdaggGauss || m == Method::MmdaggLap; }
bool is_single(Method m) { return m == Method::MmdGauss || m == Method::MmdLap; }

}  // namespace

Method parse_method(std::string_view name) {
  for (const auto& [key, value] : kMethodNames)
    if (key == name) return value;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(Method method) {
  for (const auto& [key, value] : kMethodNames)
    if (value == method) return key;
  return "unknown";
}

std::vector<Method> all_methods() {
  std::vector<Method> out;
  for (const auto& entry : kMethodNames) out.push_back(entry.second);
  return out;
}

BandwidthPreset method_preset(Method method, bool high_dim_grids) {
  switch (method) {
    case Method::MmmdGauss:
    case Method::MmdaggGauss:
      return high_dim_grids ? BandwidthPreset::HighDimGauss : BandwidthPreset::GaussMMMD;
    case Method::MmmdLap:
    case Method::MmdaggLap:
      return high_dim_grids ? BandwidthPreset::HighDimLap : BandwidthPreset::LapMMMD;
    case Method::MmmdMixed:
      return high_dim_grids ? BandwidthPreset::HighDimMixed : BandwidthPreset::MixedMMMD;
    case Method::MmdGauss: return BandwidthPreset::GaussMMD;
    case Method::MmdLap: return BandwidthPreset::LapMMD;
  }
  throw ConfigError("unknown method");
}

TestResult run_method(Method method, const Sample& x, const Sample& y, const BootstrapConfig& cfg,
                      bool high_dim_grids) {
  if (x.dim() != y.dim())
    throw InputError("dimension mismatch between samples: " + std::to_string(x.dim()) + " vs " +
                     std::to_string(y.dim()));
  const double median = median_heuristic(Sample::pooled(x, y));
  const KernelCollection coll = bandwidth_grid(method_preset(method, high_dim_grids), median);
  TestResult result;
  if (is_single(method))
    result = mmd_test(x, y, coll[0], cfg);
  else if (is_aggregated(method))
    result = mmdagg_test(x, y, coll, AggWeights::uniform(coll.size()), cfg);
  else
    result = mmmd_test(x, y, coll, cfg);
  result.meta.method = std::string(to_string(method));
  return result;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  try {
    ExperimentConfig cfg;
    const int version = j.at("version").get<int>();
    if (version != kConfigVersion)
      throw ConfigError("unsupported config version " + std::to_string(version));
    const auto& sc = j.at("scenario");
    if (sc.is_string()) {
      cfg.scenario = sc.get<std::string>();
    } else {
      cfg.scenario = sc.at("name").get<std::string>();
      if (sc.contains("m")) cfg.overrides.m = sc.at("m").get<Index>();
      if (sc.contains("n")) cfg.overrides.n = sc.at("n").get<Index>();
      if (sc.contains("d")) cfg.overrides.d = sc.at("d").get<Index>();
    }
    for (const auto& m : j.at("methods")) cfg.methods.push_back(parse_method(m.get<std::string>()));
    if (j.contains("grid")) {
      cfg.grid.name = j.at("grid").at("name").get<std::string>();
      cfg.grid.values = j.at("grid").at("values").get<std::vector<double>>();
    } else {
      cfg.grid.name = make_scenario(cfg.scenario, default_grid_value(cfg.scenario)).grid_name;
      cfg.grid.values = {default_grid_value(cfg.scenario)};
    }
    cfg.reps = j.value("reps", 500);
    cfg.alpha = j.value("alpha", 0.05);
    cfg.B = j.value("B", 500);
    cfg.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("lambda") && !j.at("lambda").is_null()) cfg.lambda = j.at("lambda").get<double>();
    cfg.validate();
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("cannot parse config '" + path.string() + "': " + e.what());
  }
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["version"] = kConfigVersion;
  nlohmann::json sc = {{"name", scenario}};
  if (overrides.m) sc["m"] = *overrides.m;
  if (overrides.n) sc["n"] = *overrides.n;
  if (overrides.d) sc["d"] = *overrides.d;
  j["scenario"] = sc;
  j["methods"] = nlohmann::json::array();
  for (Method m : methods) j["methods"].push_back(std::string(to_string(m)));
  j["grid"] = {{"name", grid.name}, {"values", grid.values}};
  j["reps"] = reps;
  j["alpha"] = alpha;
  j["B"] = B;
  j["seed"] = seed;
  if (lambda) j["lambda"] = *lambda;
  return j;
}

void ExperimentConfig::validate() const {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (methods.empty()) throw ConfigError("at least one method is required");
  if (grid.values.empty()) throw ConfigError("grid needs at least one value");
  BootstrapConfig{B, alpha, seed, lambda ? LambdaRule::fixed_value(*lambda) : LambdaRule{}}.validate();
  for (double v : grid.values) {
    const ScenarioSpec sc = make_scenario(scenario, v, overrides);
    if (sc.grid_name != grid.name)
      throw ConfigError("scenario '" + scenario + "' is indexed by '" + sc.grid_name + "', not '" +
                        grid.name + "'");
  }
}

const ResultRow& ResultsTable::row(std::string_view method, double grid_value) const {
  for (const auto& r : rows)
    if (r.method == method && r.grid_value == grid_value) return r;
  throw InputError("no result row for " + std::string(method));
}

const std::vector<signed char>& ResultsTable::decisions_for(std::string_view method,
                                                            double grid_value) const {
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i].method == method && rows[i].grid_value == grid_value) return decisions[i];
  throw InputError("no result row for " + std::string(method));
}

ResultsTable run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t grids = cfg.grid.values.size();
  const std::size_t methods = cfg.methods.size();
  const auto reps = static_cast<std::size_t>(cfg.reps);
  const LambdaRule lambda_rule = cfg.lambda ? LambdaRule::fixed_value(*cfg.lambda) : LambdaRule{};

  ResultsTable table;
  table.decisions.assign(grids * methods, std::vector<signed char>(reps, -1));
  std::vector<std::string> failures(grids * methods * reps);

  parallel_for(grids * reps, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t cell = begin; cell < end; ++cell) {
      const std::size_t g = cell / reps;
      const std::size_t rep = cell % reps;
      const std::uint64_t cell_seed = derive_seed(cfg.seed, {g, rep});
      auto fail_all = [&](const std::string& what) {
        for (std::size_t k = 0; k < methods; ++k) failures[(g * methods + k) * reps + rep] = what;
      };
      try {
        RandomStream theta_rng(derive_seed(cell_seed, {3}), 0);
        const ScenarioSpec sc = make_scenario(cfg.scenario, cfg.grid.values[g], cfg.overrides, &theta_rng);
        const Sample x = sample(sc.p, sc.m, derive_seed(cell_seed, {1}));
        const Sample y = sample(sc.q, sc.n, derive_seed(cell_seed, {2}));
        const BootstrapConfig boot{cfg.B, cfg.alpha, derive_seed(cell_seed, {4}), lambda_rule};
        for (std::size_t k = 0; k < methods; ++k) {
          const std::size_t slot = g * methods + k;
          try {
            const TestResult res = run_method(cfg.methods[k], x, y, boot, sc.high_dim_grids);
            table.decisions[slot][rep] = res.reject ? 1 : 0;
          } catch (const Error& e) {
            failures[slot * reps + rep] = e.what();
          }
        }
      } catch (const Error& e) {
        fail_all(e.what());
      }
    }
  });

  for (std::size_t g = 0; g < grids; ++g) {
    for (std::size_t k = 0; k < methods; ++k) {
      const auto& dec = table.decisions[g * methods + k];
      int ok = 0, rejections = 0, errors = 0;
      for (signed char v : dec) {
        if (v < 0) {
          ++errors;
        } else {
          ++ok;
          rejections += v;
        }
      }
      ResultRow row;
      row.method = std::string(to_string(cfg.methods[k]));
      row.grid_name = cfg.grid.name;
      row.grid_value = cfg.grid.values[g];
      row.reps = ok;
      row.errors = errors;
      row.seed = cfg.seed;
      if (ok > 0) {
        row.rejection_rate = static_cast<double>(rejections) / ok;
        row.mc_standard_error = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / ok);
      }
      table.rows.push_back(row);
      if (errors > 0) table.partial = true;
    }
  }
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (failures[i].empty()) continue;
    const std::size_t slot = i / reps;
    table.failures.push_back(std::string(to_string(cfg.methods[slot % methods])) + " grid=" +
                             format_double(cfg.grid.values[slot / methods], 10) +
                             " rep=" + std::to_string(i % reps) + ": " + failures[i]);
  }
  return table;
}

double paired_difference_se(const std::vector<signed char>& a, const std::vector<signed char>& b) {
  if (a.size() != b.size()) throw InputError("paired decisions must have equal length");
  double n = 0.0, only_a = 0.0, only_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) continue;
    n += 1.0;
    if (a[i] == 1 && b[i] == 0) only_a += 1.0;
    if (a[i] == 0 && b[i] == 1) only_b += 1.0;
  }
  if (n == 0.0) return 0.0;
  const double p10 = only_a / n;
  const double p01 = only_b / n;
  return std::sqrt(std::max(0.0, p10 + p01 - (p10 - p01) * (p10 - p01)) / n);
}

TestResult run_test(const std::filesystem::path& path_x, const std::filesystem::path& path_y,
                    Method method, const BootstrapConfig& cfg, bool swap_roles) {
  Sample x = load_sample(path_x);
  Sample y = load_sample(path_y);
  if (x.dim() != y.dim())
    throw InputError("dimension mismatch: '" + path_x.string() + "' has d = " +
                     std::to_string(x.dim()) + ", '" + path_y.string() +
                     "' has d = " + std::to_string(y.dim()));
  if (swap_roles) std::swap(x, y);
  return run_method(method, x, y, cfg);
}

Sample parse_sample(std::string_view text, std::string_view source) {
  std::vector<double> values;
  std::size_t width = 0;
  Index rows = 0;
  bool first = true;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    std::string_view line = trim(raw);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    std::vector<double> parsed;
    parsed.reserve(fields.size());
    std::optional<std::size_t> bad;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_double(fields[c]);
      if (!v) {
        bad = c;
        break;
      }
      parsed.push_back(*v);
    }
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (bad) {
      if (first) {
        first = false;  // header row
        continue;
      }
      throw IoError(where + ", column " + std::to_string(*bad + 1) + ": cannot parse '" +
                    std::string(trim(fields[*bad])) + "' as a number");
    }
    first = false;
    if (width == 0) width = parsed.size();
    if (parsed.size() != width)
      throw IoError(where + ": ragged row, expected " + std::to_string(width) + " fields, found " +
                    std::to_string(parsed.size()));
    for (std::size_t c = 0; c < parsed.size(); ++c)
      if (!std::isfinite(parsed[c]))
        throw IoError(where + ", column " + std::to_string(c + 1) + ": non-finite value");
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (rows < 2)
    throw InputError(std::string(source) + ": need m >= 2 observations, found " + std::to_string(rows));
  RowMatrix data = Eigen::Map<RowMatrix>(values.data(), rows, static_cast<Index>(width));
  return Sample(std::move(data));
}

Sample load_sample(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_sample(buf.str(), path.string());
}

std::string format_sample(const Sample& s) {
  std::string out;
  for (Index j = 0; j < s.dim(); ++j) out += (j ? ",x" : "x") + std::to_string(j + 1);
  out += '\n';
  for (Index i = 0; i < s.rows(); ++i) {
    for (Index j = 0; j < s.dim(); ++j) {
      if (j) out += ',';
      out += format_double(s.data()(i, j), 17);
    }
    out += '\n';
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_sample(const Sample& s, const std::filesystem::path& path) { write_text(path, format_sample(s)); }

std::string format_table(const ResultsTable& table) {
  std::string out = "method,grid_name,grid_value,rejection_rate,mc_standard_error,reps,errors,seed\n";
  for (const auto& r : table.rows) {
    out += r.method + ',' + r.grid_name + ',' + format_double(r.grid_value, 10) + ',' +
           format_fixed(r.rejection_rate) + ',' + format_fixed(r.mc_standard_error) + ',' +
           std::to_string(r.reps) + ',' + std::to_string(r.errors) + ',' + std::to_string(r.seed) +
           '\n';
  }
  return out;
}

void write_table(const ResultsTable& table, const std::filesystem::path& path) {
  write_text(path, format_table(table));
}

nlohmann::json result_to_json(const TestResult& result) {
  nlohmann::json j;
  j["method"] = result.meta.method;
  j["statistic"] = result.statistic;
  j["threshold"] = result.threshold;
  j["p_value"] = result.p_value;
  j["reject"] = result.reject;
  j["m"] = result.meta.m;
  j["n"] = result.meta.n;
  j["r"] = result.meta.r;
  j["B"] = result.meta.B;
  j["seed"] = result.meta.seed;
  j["lambda"] = result.meta.lambda;
  j["rho_hat"] = result.meta.rho_hat;
  j["alpha"] = result.meta.alpha;
  if (!result.meta.margins.empty()) j["margins"] = result.meta.margins;
  if (result.meta.u_star) j["u_star"] = *result.meta.u_star;
  return j;
}

KernelChoice KernelChoice::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw ConfigError("kernel must look like 'gauss:<bandwidth>' or 'lap:median'");
  KernelChoice choice;
  const std::string_view family = text.substr(0, colon);
  std::string_view rest = text.substr(colon + 1);
  if (family == "gauss" || family == "gaussian")
    choice.family = KernelFamily::Gaussian;
  else if (family == "lap" || family == "laplace")
    choice.family = KernelFamily::Laplace;
  else
    throw ConfigError("unknown kernel family '" + std::string(family) + "'");
  if (rest.starts_with("median")) {
    rest.remove_prefix(6);
    if (!rest.empty()) {
      if (rest.front() != '*') throw ConfigError("expected 'median*<multiplier>'");
      const auto mult = parse_double(rest.substr(1));
      if (!mult || !(*mult > 0.0)) throw ConfigError("invalid bandwidth multiplier");
      choice.multiplier = *mult;
    }
  } else {
    const auto bw = parse_double(rest);
    if (!bw || !(*bw > 0.0)) throw ConfigError("invalid kernel bandwidth '" + std::string(rest) + "'");
    choice.bandwidth = *bw;
  }
  return choice;
}

KernelSpec KernelChoice::resolve(const Sample& x) const {
  if (bandwidth) return KernelSpec(family, *bandwidth);
  return KernelSpec(family, multiplier * median_heuristic(x));
}

NullCheckReport null_check(std::string_view scenario, const KernelChoice& kernel, Index m,
                           Index draws, std::uint64_t seed) {
  if (draws < 1) throw ConfigError("draws must be >= 1");
  const ScenarioSpec sc = make_scenario(scenario, default_grid_value(scenario));
  const Sample x = sample(sc.p, m, derive_seed(seed, {1}));
  NullCheckReport report;
  report.kernel = kernel.resolve(x);
  report.m = m;
  // Equal sample sizes: rho_hat = 1/2.
  const double rho = 0.5;
  const auto grams = centered_grams(KernelCollection({report.kernel}), x);
  report.bootstrap = multiplier_draws(grams, rho, static_cast<int>(draws), derive_seed(seed, {2})).col(0);
  report.spectral = weighted_chisq_sample(centered_gram_spectrum(grams.front()), gamma_factor(rho),
                                          draws, derive_seed(seed, {3}));
  report.ks = ks_two_sample({report.bootstrap.data(), static_cast<std::size_t>(draws)},
                            {report.spectral.data(), static_cast<std::size_t>(draws)});
  return report;
}

std::string format_null_check(const NullCheckReport& report, std::size_t points) {
  std::vector<double> a(report.bootstrap.data(), report.bootstrap.data() + report.bootstrap.size());
  std::vector<double> b(report.spectral.data(), report.spectral.data() + report.spectral.size());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::sort(pooled.begin(), pooled.end());

  auto ecdf = [](const std::vector<double>& sorted, double t) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) /
           static_cast<double>(sorted.size());
  };
  std::string out = "x,bootstrap_cdf,spectral_cdf,ks_statistic,ks_p_value\n";
  const std::string tail = ',' + format_double(report.ks.statistic, 17) + ',' +
                           format_double(report.ks.p_value, 17) + '\n';
  points = std::max<std::size_t>(2, points);
  for (std::size_t k = 0; k < points; ++k) {
    const std::size_t idx = k * (pooled.size() - 1) / (points - 1);
    const double t = pooled[idx];
    out += format_double(t, 17) + ',' + format_double(ecdf(a, t), 17) + ',' +
           format_double(ecdf(b, t), 17) + tail;
  }
  return out;
}

}  // namespace mmmd
