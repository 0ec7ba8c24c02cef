#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <string>

#include "blocknas/dynamic.hpp"
#include "blocknas/error.hpp"
#include "blocknas/estimator.hpp"
#include "blocknas/eval.hpp"
#include "blocknas/ilp.hpp"
#include "blocknas/manifest.hpp"
#include "blocknas/oracle.hpp"
#include "blocknas/predictor.hpp"
#include "blocknas/presets.hpp"
#include "blocknas/searchspace.hpp"

namespace py = pybind11;
using namespace blocknas;
using nlohmann::json;

namespace {

// Structured results cross the boundary as JSON text; the Python package
// decodes them into dicts.
std::string dump(const json& doc) { return doc.dump(); }

NetworkConfig to_config(const py::object& obj) {
  if (py::isinstance<py::str>(obj)) return NetworkConfig::parse(obj.cast<std::string>());
  return NetworkConfig(obj.cast<std::vector<int>>());
}

// Oracles keep a pointer to their space, so the wrapper owns a copy.
struct PyOracle {
  std::shared_ptr<const SearchSpace> space;
  std::unique_ptr<Oracle> oracle;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Block-delta performance prediction and architecture search";
  m.attr("__version__") = kVersion;

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::handle(error.ptr())(e.what());
      inst.attr("code") = to_string(e.code());
      PyErr_SetObject(error.ptr(), inst.ptr());
    }
  });

  py::class_<SearchSpace, std::shared_ptr<SearchSpace>>(m, "SearchSpace")
      .def_static("load", [](const std::string& path) {
        return std::make_shared<SearchSpace>(SearchSpace::load(path));
      })
      .def_static("from_json", [](const std::string& text) {
        return std::make_shared<SearchSpace>(SearchSpace::from_json(json::parse(text)));
      })
      .def_static("preset", [](const std::string& name, std::uint64_t seed) {
        return std::make_shared<SearchSpace>(preset_space(name, seed));
      }, py::arg("name"), py::arg("seed") = 0)
      .def("to_json", [](const SearchSpace& s) { return dump(s.to_json()); })
      .def("save", [](const SearchSpace& s, const std::string& path) { s.save(path); })
      .def_property_readonly("name", &SearchSpace::name)
      .def_property_readonly("devices", &SearchSpace::devices)
      .def_property_readonly("num_nodes", &SearchSpace::num_nodes)
      .def_property_readonly("candidate_count", &SearchSpace::candidate_count)
      .def_property_readonly("fingerprint", &SearchSpace::fingerprint)
      .def("base_config", [](const SearchSpace& s) {
        std::vector<int> out;
        for (const auto& n : s.nodes()) out.push_back(n.base_block);
        return out;
      })
      .def("network_flops", [](const SearchSpace& s, const py::object& cfg) {
        return network_flops(s, to_config(cfg));
      })
      .def("mean_flops", [](const SearchSpace& s) { return mean_space_flops(s); });

  py::class_<PyOracle>(m, "Oracle")
      .def_static("synthetic", [](std::shared_ptr<SearchSpace> space, std::uint64_t seed,
                                   double noise_sigma, const std::optional<std::string>& model) {
        SyntheticModel sm = model ? SyntheticModel::from_json(json::parse(*model), *space)
                                  : default_model(*space, seed);
        if (noise_sigma > 0.0) sm.noise_sigma = noise_sigma;
        PyOracle o{space, nullptr};
        o.oracle = std::make_unique<SyntheticOracle>(*o.space, std::move(sm));
        return o;
      }, py::arg("space"), py::arg("seed") = 0, py::arg("noise_sigma") = 0.0,
         py::arg("model") = py::none())
      .def_static("records", [](std::shared_ptr<SearchSpace> space, const std::string& path) {
        PyOracle o{space, nullptr};
        o.oracle = std::make_unique<TabularOracle>(*o.space, load_records(path, *space));
        return o;
      })
      .def("evaluate", [](const PyOracle& o, const py::object& cfg) {
        return dump(perf_to_json(o.oracle->evaluate(to_config(cfg)), o.space->devices()));
      });

  py::class_<BlockDeltaTable>(m, "DeltaTable")
      .def_static("load", [](const std::string& path) { return BlockDeltaTable::load(path); })
      .def_static("from_json", [](const std::string& text) {
        return BlockDeltaTable::from_json(json::parse(text));
      })
      .def("to_json", [](const BlockDeltaTable& t) { return dump(t.to_json()); })
      .def("save", [](const BlockDeltaTable& t, const std::string& path) { t.save(path); })
      .def_readonly("evaluations", &BlockDeltaTable::evaluations)
      .def_readonly("accuracy", &BlockDeltaTable::accuracy)
      .def_property_readonly("mode", [](const BlockDeltaTable& t) { return to_string(t.mode); })
      .def_property_readonly("base_config",
                             [](const BlockDeltaTable& t) { return t.base_config.choices(); });

  m.def("estimate", [](const SearchSpace& space, const PyOracle& oracle, const std::string& mode,
                       std::size_t samples, std::uint64_t seed, bool without_replacement) {
    switch (parse_estimation_mode(mode)) {
      case EstimationMode::kFull: return estimate_full(space, *oracle.oracle);
      case EstimationMode::kPartial:
        return estimate_partial(space, *oracle.oracle, {samples, seed, without_replacement});
      case EstimationMode::kSingle: break;
    }
    return estimate_single(space, *oracle.oracle);
  }, py::arg("space"), py::arg("oracle"), py::arg("mode") = "single", py::arg("samples") = 1,
     py::arg("seed") = 0, py::arg("without_replacement") = false,
     py::call_guard<py::gil_scoped_release>());

  m.def("predict", [](const BlockDeltaTable& table, const SearchSpace& space,
                      const py::object& cfg, const std::string& device, bool flops_scaling) {
    const NetworkConfig c = to_config(cfg);
    return dump(flops_scaling ? predict(table, space, c, device).to_json()
                              : predict_no_flops_scaling(table, space, c, device).to_json());
  }, py::arg("table"), py::arg("space"), py::arg("config"), py::arg("device"),
     py::arg("flops_scaling") = true);

  m.def("search", [](const SearchSpace& space, const BlockDeltaTable& table,
                     const std::string& device, std::optional<double> lat_budget,
                     std::optional<double> eng_budget, bool unconstrained, double time_limit,
                     const std::string& solver, const std::string& objective) {
    SearchOptions o;
    o.device = device;
    o.lat_budget = lat_budget;
    o.eng_budget = eng_budget;
    o.unconstrained = unconstrained;
    o.time_limit = time_limit;
    o.solver = parse_solver_kind(solver);
    o.objective_form = parse_objective_form(objective);
    py::gil_scoped_release release;
    return dump(search(build_problem(space, table, o)).to_json());
  }, py::arg("space"), py::arg("table"), py::arg("device"), py::arg("lat_budget") = py::none(),
     py::arg("eng_budget") = py::none(), py::arg("unconstrained") = false,
     py::arg("time_limit") = 10.0, py::arg("solver") = "auto", py::arg("objective") = "eq6");

  m.def("validate", [](const SearchSpace& space, const PyOracle& oracle,
                       const BlockDeltaTable& table, const std::string& device,
                       std::size_t samples, std::uint64_t seed, bool flops_scaling) {
    py::gil_scoped_release release;
    return dump(validate_predictor(space, *oracle.oracle, table, device,
                                   {samples, seed, flops_scaling})
                    .to_json());
  }, py::arg("space"), py::arg("oracle"), py::arg("table"), py::arg("device"),
     py::arg("samples") = 1000, py::arg("seed") = 0, py::arg("flops_scaling") = true);

  m.def("spearman", &spearman);
  m.def("kendall_tau", &kendall_tau_b);
  m.def("fit_delta_law", [](const std::vector<double>& flops, const std::vector<double>& delta) {
    json out = json::array();
    for (const auto& f : fit_delta_law(flops, delta)) out.push_back(f.to_json());
    return dump(out);
  });

  m.def("deployment_plan", [](const SearchSpace& space, const BlockDeltaTable& table,
                              const std::string& device, std::size_t k) {
    return dump(select_deployment_blocks(space, table, device, k).to_json());
  }, py::arg("space"), py::arg("table"), py::arg("device"), py::arg("k") = 5);
}
