#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mmmd/error.hpp"
#include "mmmd/harness.hpp"

namespace py = pybind11;
using namespace mmmd;

namespace {

Sample to_sample(const Eigen::Ref<const RowMatrix>& a) { return Sample(RowMatrix(a)); }

KernelCollection to_collection(const std::vector<std::pair<std::string, double>>& kernels) {
  std::vector<KernelSpec> specs;
  for (const auto& [family, bw] : kernels) {
    if (family == "gauss" || family == "gaussian")
      specs.emplace_back(KernelFamily::Gaussian, bw);
    else if (family == "lap" || family == "laplace")
      specs.emplace_back(KernelFamily::Laplace, bw);
    else
      throw ConfigError("unknown kernel family '" + family + "'");
  }
  return KernelCollection(std::move(specs));
}

BootstrapConfig make_config(int B, double alpha, std::uint64_t seed, std::optional<double> lambda) {
  BootstrapConfig cfg{B, alpha, seed, lambda ? LambdaRule::fixed_value(*lambda) : LambdaRule{}};
  cfg.validate();
  return cfg;
}

py::dict result_dict(const TestResult& r) {
  return py::module_::import("json").attr("loads")(result_to_json(r).dump());
}

}  // namespace

PYBIND11_MODULE(_mmmd, m) {
  m.doc() = "Multiple-kernel MMD two-sample tests";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def("median_heuristic",
        [](const Eigen::Ref<const RowMatrix>& pooled) { return median_heuristic(to_sample(pooled)); },
        py::arg("pooled"));

  m.def("mmd2_unbiased",
        [](const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const RowMatrix>& y,
           const std::vector<std::pair<std::string, double>>& kernels) {
          return mmd2_vector(to_collection(kernels), to_sample(x), to_sample(y)).values;
        },
        py::arg("x"), py::arg("y"), py::arg("kernels"),
        "Unbiased MMD^2 for each (family, bandwidth) pair.");

  m.def("null_covariance",
        [](const Eigen::Ref<const RowMatrix>& x,
           const std::vector<std::pair<std::string, double>>& kernels, double rho) {
          return estimate_null_covariance(to_collection(kernels), to_sample(x), rho).sigma;
        },
        py::arg("x"), py::arg("kernels"), py::arg("rho"));

  m.def("two_sample_test",
        [](const Eigen::Ref<const RowMatrix>& x, const Eigen::Ref<const RowMatrix>& y,
           const std::string& method, double alpha, int B, std::uint64_t seed,
           std::optional<double> lambda) {
          const Sample sx = to_sample(x);
          const Sample sy = to_sample(y);
          const auto cfg = make_config(B, alpha, seed, lambda);
          TestResult r;
          {
            py::gil_scoped_release release;
            r = run_method(parse_method(method), sx, sy, cfg);
          }
          return result_dict(r);
        },
        py::arg("x"), py::arg("y"), py::arg("method") = "mmmd-gauss", py::arg("alpha") = 0.05,
        py::arg("B") = 500, py::arg("seed") = 0, py::arg("lambda_") = py::none());

  m.def("simulate",
        [](const std::string& scenario, const std::string& which, Index n, std::uint64_t seed,
           std::optional<double> grid_value) {
          if (which != "p" && which != "q") throw ConfigError("which must be 'p' or 'q'");
          RandomStream theta_rng(derive_seed(seed, {3}), 0);
          const auto sc = make_scenario(scenario, grid_value.value_or(default_grid_value(scenario)), {},
                                        &theta_rng);
          const bool is_p = which == "p";
          return RowMatrix(sample(is_p ? sc.p : sc.q, n, derive_seed(seed, {is_p ? 1u : 2u})).data());
        },
        py::arg("scenario"), py::arg("which"), py::arg("n"), py::arg("seed") = 0,
        py::arg("grid_value") = py::none());

  m.def("scenario_names", &scenario_names);
  m.def("methods", [] {
    std::vector<std::string> out;
    for (Method meth : all_methods()) out.emplace_back(to_string(meth));
    return out;
  });

  m.def("run_experiment",
        [](const std::string& config_json) {
          nlohmann::json j;
          try {
            j = nlohmann::json::parse(config_json);
          } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(std::string("cannot parse config: ") + e.what());
          }
          const auto cfg = ExperimentConfig::from_json(j);
          ResultsTable table;
          {
            py::gil_scoped_release release;
            table = run_experiment(cfg);
          }
          return format_table(table);
        },
        py::arg("config_json"), "Runs an experiment config and returns the results CSV text.");
}
