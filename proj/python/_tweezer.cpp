#include "tweezer/config.hpp"
#include "tweezer/dcrab.hpp"
#include "tweezer/error.hpp"
#include "tweezer/experiments.hpp"
#include "tweezer/fidelity.hpp"
#include "tweezer/noise.hpp"
#include "tweezer/pulse.hpp"
#include "tweezer/spectrum.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>

namespace py = pybind11;
using namespace tweezer;

namespace {

Eigen::MatrixXcd stack(const std::vector<WaveFunction>& states) {
  if (states.empty()) return {};
  Eigen::MatrixXcd m(static_cast<long>(states.size()), states.front().size());
  for (std::size_t i = 0; i < states.size(); ++i) m.row(static_cast<long>(i)) = states[i].amplitudes().transpose();
  return m;
}

py::dict spectrum_dict(const GridSpec& spec, const TrapParams& trap, int n_states) {
  auto grid = spec.make();
  auto s = solve_spectrum(trap, grid, n_states);
  py::dict d;
  d["x"] = Eigen::VectorXd(grid->positions());
  d["energies"] = s.energies;
  d["states"] = stack(s.states);
  d["truncated"] = s.truncated;
  return d;
}

py::dict fom_dict(const FomRecord& r) {
  py::dict d;
  d["times_us"] = r.times_us;
  d["infidelity"] = r.infidelity;
  d["j_avg"] = r.average;
  d["edge_probability"] = r.edge_probability;
  d["lost"] = r.lost;
  return d;
}

py::dict optimization_dict(const OptimizationRecord& r) {
  py::dict d;
  d["best"] = r.best;
  d["initial_fom"] = r.initial_fom;
  d["best_fom"] = r.best_fom;
  d["evaluations"] = r.evaluations;
  d["superiteration_best"] = r.superiteration_best;
  d["stop_reason"] = r.stop_reason;
  return d;
}

}  // namespace

PYBIND11_MODULE(_tweezer, m) {
  m.doc() = "Thermal-ensemble atom transport in a moving optical tweezer";
  m.attr("__version__") = TWEEZER_VERSION;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<TrapParams>(m, "TrapParams")
      .def(py::init<>())
      .def(py::init([](double depth_mk, double waist_um, double center_um) {
             return TrapParams{depth_mk, waist_um, center_um};
           }),
           py::arg("depth_mk") = -1.0, py::arg("waist_um") = 0.5, py::arg("center_um") = 0.0)
      .def_readwrite("depth_mk", &TrapParams::depth_mk)
      .def_readwrite("waist_um", &TrapParams::waist_um)
      .def_readwrite("center_um", &TrapParams::center_um);

  py::class_<GridSpec>(m, "GridSpec")
      .def(py::init([](double x_min, double x_max, int n) { return GridSpec{x_min, x_max, n}; }),
           py::arg("x_min_um") = -5.0, py::arg("x_max_um") = 5.0, py::arg("n_points") = 5000)
      .def_readwrite("x_min_um", &GridSpec::x_min_um)
      .def_readwrite("x_max_um", &GridSpec::x_max_um)
      .def_readwrite("n_points", &GridSpec::n_points)
      .def_property_readonly("dx", &GridSpec::dx);

  m.def("harmonic_frequency", [](const TrapParams& t) { return harmonic_frequency(t); },
        "Harmonic trap frequency in rad/us");
  m.def("potential", [](const TrapParams& t, const GridSpec& g) { return potential_at(t, *g.make()); },
        "Trap potential on the grid in rad/us");
  m.def("solve_spectrum", &spectrum_dict, py::arg("grid"), py::arg("trap") = TrapParams{}, py::arg("n_states") = 2,
        "Lowest bound states: dict with x, energies (rad/us), states (rows) and truncated");
  m.def("boltzmann_weights", &boltzmann_weights, py::arg("energies"), py::arg("temperature_uk"), py::arg("n_states"));
  m.def("uhlmann_infidelity",
        [](const std::vector<double>& p, const std::vector<double>& q, const Eigen::MatrixXcd& overlaps) {
          return uhlmann_infidelity_from_overlaps(p, q, overlaps);
        },
        py::arg("p"), py::arg("q"), py::arg("overlaps"),
        "Infidelity of two mixed states from weights and the member overlap matrix <a_i|b_j>");
  m.def("kinematic_time_bound", [](const TrapParams& t, double d) { return kinematic_time_bound(t, d); },
        py::arg("trap"), py::arg("distance_um"));
  m.def("aod_frequency_of", &aod_frequency_of);
  m.def("position_of_aod_frequency", &position_of_aod_frequency);
  m.def("profile_quantile_halfwidth", &profile_quantile_halfwidth, py::arg("waist_um"),
        py::arg("central_fraction") = kRecaptureCentralFraction);

  py::class_<Pulse>(m, "Pulse")
      .def_static("piecewise_quadratic", &Pulse::piecewise_quadratic, py::arg("r_0"), py::arg("r_f"), py::arg("t_p"))
      .def_static("sampled", &Pulse::sampled, py::arg("times"), py::arg("values"))
      .def_static("read_csv",
                  [](const std::string& path) {
                    std::ifstream in(path);
                    if (!in) throw ConfigError("cannot open pulse file '" + path + "'");
                    return read_pulse_csv(in);
                  })
      .def("write_csv",
           [](const Pulse& p, const std::string& path, double dt, bool as_frequency) {
             std::ofstream out(path);
             write_pulse_csv(out, p, dt, as_frequency);
           },
           py::arg("path"), py::arg("dt") = 0.1, py::arg("as_frequency") = false)
      .def("__call__", [](const Pulse& p, double t) { return p(t); })
      .def("sample", &Pulse::sample, py::arg("dt"), py::arg("t_total"))
      .def("reversed", &Pulse::reversed)
      .def_property_readonly("duration", &Pulse::duration)
      .def_property_readonly("start", &Pulse::start)
      .def_property_readonly("end", &Pulse::end);

  py::class_<Scenario>(m, "Scenario")
      .def(py::init<>())
      .def_readwrite("trap", &Scenario::trap)
      .def_readwrite("distance_um", &Scenario::distance_um)
      .def_readwrite("temperature_uk", &Scenario::temperature_uk)
      .def_readwrite("n_states", &Scenario::n_states)
      .def_readwrite("grid", &Scenario::grid)
      .def_readwrite("dt_us", &Scenario::dt_us)
      .def_readwrite("hold_us", &Scenario::hold_us)
      .def_readwrite("workers", &Scenario::workers);

  py::class_<TransportProblem>(m, "TransportProblem")
      .def(py::init(&prepare_transport), py::arg("scenario"))
      .def("guess", &TransportProblem::guess, py::arg("t_p_us"))
      .def("fom", [](const TransportProblem& p, const Pulse& pulse) { return p.fom(pulse); })
      .def("evaluate", [](const TransportProblem& p, const Pulse& pulse) { return fom_dict(p.evaluate(pulse)); })
      .def_property_readonly("weights", [](const TransportProblem& p) { return p.initial.weights; })
      .def_property_readonly("energies", [](const TransportProblem& p) { return p.initial.energies; });

  py::enum_<BasisElement::Kind>(m, "BasisKind")
      .value("SINC", BasisElement::Kind::Sinc)
      .value("FOURIER", BasisElement::Kind::Fourier);

  py::class_<DcrabConfig>(m, "DcrabConfig")
      .def(py::init<>())
      .def_readwrite("superiterations", &DcrabConfig::superiterations)
      .def_readwrite("max_evaluations", &DcrabConfig::max_evaluations)
      .def_readwrite("coefficients", &DcrabConfig::coefficients)
      .def_readwrite("basis", &DcrabConfig::basis)
      .def_readwrite("max_frequency_mhz", &DcrabConfig::max_frequency_mhz)
      .def_readwrite("seed", &DcrabConfig::seed)
      .def_readwrite("target_fom", &DcrabConfig::target_fom);

  m.def("optimize_transport",
        [](const TransportProblem& problem, const Pulse& guess, const DcrabConfig& config) {
          return optimization_dict(optimize(guess, [&](const Pulse& p) { return problem.fom(p); }, config));
        },
        py::arg("problem"), py::arg("guess"), py::arg("config") = DcrabConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("optimize",
        [](const Pulse& guess, const PulseObjective& objective, const DcrabConfig& config) {
          return optimization_dict(optimize(guess, objective, config));
        },
        py::arg("guess"), py::arg("objective"), py::arg("config") = DcrabConfig{},
        "dCRAB with a Python objective taking a Pulse and returning a float");

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def(py::init<>())
      .def_static("none", &NoiseSpec::none)
      .def_readwrite("rin_amplitude", &NoiseSpec::rin_amplitude)
      .def_readwrite("depth_low_amplitude", &NoiseSpec::depth_low_amplitude)
      .def_readwrite("depth_high_amplitude", &NoiseSpec::depth_high_amplitude)
      .def_readwrite("depth_high_max_mhz", &NoiseSpec::depth_high_max_mhz)
      .def_readwrite("waist_amplitude", &NoiseSpec::waist_amplitude)
      .def_readwrite("position_amplitude_um", &NoiseSpec::position_amplitude_um)
      .def_readwrite("seed", &NoiseSpec::seed);

  m.def("sample_noise",
        [](const NoiseSpec& spec, double dt, int n_steps, std::uint64_t stream) {
          auto r = sample_realization(spec, dt, n_steps, stream);
          py::dict d;
          d["depth_factor"] = r.depth_factor;
          d["waist_factor"] = r.waist_factor;
          d["position_offset_um"] = r.position_offset;
          return d;
        },
        py::arg("spec"), py::arg("dt"), py::arg("n_steps"), py::arg("stream") = 0);
  m.def("noise_ensemble",
        [](const TransportProblem& problem, const Pulse& pulse, int n_runs, const NoiseSpec& spec) {
          auto r = noise_ensemble(problem, pulse, n_runs, spec);
          py::dict d;
          d["j_avg"] = r.j_avg;
          d["mean"] = r.mean;
          d["std"] = r.stddev;
          d["noiseless"] = r.noiseless;
          return d;
        },
        py::arg("problem"), py::arg("pulse"), py::arg("n_runs"), py::arg("spec") = NoiseSpec{});

  m.def("scan_pq",
        [](const TransportProblem& problem, const std::vector<double>& t_p_grid) {
          auto res = scan_problem(problem, t_p_grid, {});
          std::vector<double> j;
          for (const auto& p : res.points) j.push_back(p.j_avg);
          return j;
        },
        py::arg("problem"), py::arg("t_p_grid_us"), "J_avg of the piecewise quadratic pulse over a t_p grid");

  m.def("parse_config", [](const std::string& text) { return config_to_json(parse_config(text)); },
        "Resolved configuration JSON with every default filled in");
  m.def("validate_config",
        [](const std::string& text) {
          auto r = validate(parse_config(text));
          return py::make_tuple(r.errors, r.warnings);
        },
        "(errors, warnings) for a JSON configuration");
}
