#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "superrad/cloud.hpp"
#include "superrad/correlation_solver.hpp"
#include "superrad/couplings.hpp"
#include "superrad/eigenmodes.hpp"
#include "superrad/errors.hpp"
#include "superrad/exact_solver.hpp"
#include "superrad/harness.hpp"
#include "superrad/semiclassical.hpp"

namespace py = pybind11;
using namespace superrad;

namespace {

using Positions = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

Cloud to_cloud(const Positions& p) {
  Cloud c;
  c.positions.reserve(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) c.positions.emplace_back(p(i, 0), p(i, 1), p(i, 2));
  return c;
}

Positions to_positions(const Cloud& c) {
  Positions p(static_cast<Eigen::Index>(c.size()), 3);
  for (std::size_t i = 0; i < c.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = c.positions[i].transpose();
  return p;
}

TransitionSpec transition_from(const py::handle& h) {
  TransitionSpec t;
  if (py::isinstance<py::dict>(h)) {
    auto d = h.cast<py::dict>();
    t.label = d.contains("label") ? d["label"].cast<std::string>() : "g";
    if (d.contains("gamma")) t.gamma = d["gamma"].cast<double>();
    if (d.contains("lambda")) t.lambda = d["lambda"].cast<double>();
    if (d.contains("dipole")) {
      auto v = d["dipole"].cast<std::vector<double>>();
      if (v.size() != 3) throw InvalidArgument("dipole needs three components");
      t.dipole_dir = Vec3(v[0], v[1], v[2]);
    }
  } else {
    t = h.cast<TransitionSpec>();
  }
  validate_transition(t);
  return t;
}

std::vector<TransitionSpec> transitions_from(const py::object& obj) {
  std::vector<TransitionSpec> out;
  if (obj.is_none()) {
    out.push_back(TransitionSpec{"g", 1.0, 1.0, Vec3::UnitX()});
    return out;
  }
  for (auto h : obj) out.push_back(transition_from(h));
  return out;
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::dict d;
  d["n_atoms"] = tr.n_atoms;
  d["labels"] = tr.labels;
  d["t"] = py::array(py::cast(tr.t));
  d["n_excited"] = py::array(py::cast(tr.n_excited));
  py::dict pops, rates;
  for (std::size_t a = 0; a < tr.n_channels(); ++a) {
    pops[py::str(tr.labels[a])] = py::array(py::cast(tr.n_channel[a]));
    rates[py::str(tr.labels[a])] = py::array(py::cast(tr.gamma[a]));
  }
  d["populations"] = pops;
  d["gamma"] = rates;
  d["gamma_total"] = py::array(py::cast(tr.total_gamma()));
  const auto peaks = peak_stats(tr);
  d["gamma_prime_max"] = peaks.total.gamma_prime_max;
  d["t_d"] = peaks.total.t_d;
  d["warnings"] = tr.warnings;
  d["rhs_calls"] = tr.stats.rhs_calls;
  return d;
}

HorizonOptions horizon_from(double dt, double stop_fraction, double t_max) {
  HorizonOptions h;
  h.dt = dt;
  h.stop_fraction = stop_fraction;
  h.t_cap = t_max;
  return h;
}

py::dict summary_dict(const SolverSummary& s) {
  py::dict d;
  d["solver"] = to_string(s.solver);
  d["n_runs"] = s.n_runs;
  d["headline"] = s.headline;
  d["t_d"] = s.t_d;
  d["labels"] = s.labels;
  d["channel_peak"] = s.channel_peak;
  d["channel_t_d"] = s.channel_t_d;
  d["final_population"] = s.final_population;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Superradiance toolkit: exact, correlation, semiclassical and eigenmode solvers";
  m.attr("__version__") = toolkit_version();

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<CapacityError>(m, "CapacityError", base.ptr());
  py::register_exception<StiffnessError>(m, "StiffnessError", base.ptr());
  py::register_exception<AccuracyError>(m, "AccuracyError", base.ptr());
  py::register_exception<CouplingOverflow>(m, "CouplingOverflow", base.ptr());
  py::register_exception<GenerationError>(m, "GenerationError", base.ptr());
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);

  py::class_<TransitionSpec>(m, "Transition")
      .def(py::init([](std::string label, double gamma, double lambda) {
             TransitionSpec t{std::move(label), gamma, lambda, Vec3::UnitX()};
             validate_transition(t);
             return t;
           }),
           py::arg("label") = "g", py::arg("gamma") = 1.0, py::arg("lambda_") = 1.0)
      .def_readwrite("label", &TransitionSpec::label)
      .def_readwrite("gamma", &TransitionSpec::gamma)
      .def_readwrite("wavelength", &TransitionSpec::lambda)
      .def_readwrite("dipole", &TransitionSpec::dipole_dir)
      .def("__repr__", [](const TransitionSpec& t) {
        return "Transition('" + t.label + "', gamma=" + std::to_string(t.gamma) +
               ", lambda=" + std::to_string(t.lambda) + ")";
      });

  // Semiclassical model.
  m.def("shape_mu", &shape_mu, py::arg("k_sigma"));
  m.def("k_sigma_for", &k_sigma_for, py::arg("n_atoms"), py::arg("lambda3_density"));
  m.def("gamma_profile", py::vectorize(&gamma_profile), py::arg("n_atoms"), py::arg("gamma"),
        py::arg("mu"), py::arg("t"));
  m.def("delay_time", [](int n, double gamma, double mu) {
    const auto d = delay_time(n, gamma, mu);
    return py::make_tuple(d.t_d, d.at_origin);
  }, py::arg("n_atoms"), py::arg("gamma"), py::arg("mu"), "Returns (t_d, at_origin).");
  m.def("peak_rate_per_atom", &peak_rate_per_atom, py::arg("n_atoms"), py::arg("mu"));
  m.def("evolve_rate_equations",
        [](int n, const std::vector<std::tuple<std::string, double, double>>& channels, double dt,
           double stop_fraction, double t_max) {
          std::vector<RateChannel> ch;
          for (const auto& [label, gamma, mu] : channels) ch.push_back({label, gamma, mu});
          RateRunOptions o;
          o.horizon = horizon_from(dt, stop_fraction, t_max);
          return trajectory_dict(evolve_rate_equations(n, ch, o));
        },
        py::arg("n_atoms"), py::arg("channels"), py::arg("dt") = 0.01, py::arg("stop_fraction") = 0.01,
        py::arg("t_max") = 1e4, "channels: list of (label, gamma, mu).");

  // Cloud geometry.
  m.def("sigma_from_density", &sigma_from_density, py::arg("n_atoms"), py::arg("density"));
  m.def("density_from_sigma", &density_from_sigma, py::arg("n_atoms"), py::arg("sigma"));
  m.def("sample_cloud",
        [](int n, double sigma, std::uint64_t seed, double min_fraction) {
          return to_positions(sample_cloud(n, sigma, seed, min_fraction * sigma));
        },
        py::arg("n_atoms"), py::arg("sigma"), py::arg("seed"),
        py::arg("min_separation_fraction") = kDefaultMinSeparationFraction,
        "N x 3 array of positions.");

  // Couplings.
  m.def("elastic_f", py::vectorize(&elastic_f), py::arg("xi"), py::arg("phi"), py::arg("gamma") = 1.0);
  m.def("inelastic_gamma", py::vectorize(&inelastic_gamma), py::arg("xi"), py::arg("phi"),
        py::arg("gamma") = 1.0);
  m.def("couplings",
        [](const Positions& p, py::object transitions, const std::string& mode) {
          const auto set = build_coupling_set(to_cloud(p), transitions_from(transitions),
                                              coupling_mode_from_string(mode), 0.0);
          return set.g;
        },
        py::arg("positions"), py::arg("transitions") = py::none(), py::arg("mode") = "full",
        "Per-transition complex coupling matrices g_ij (zero diagonal).");

  // Eigenmodes.
  m.def("decay_spectrum",
        [](const Positions& p, py::object transition, const std::string& mode) {
          const auto t = transition.is_none() ? TransitionSpec{"g", 1.0, 1.0, Vec3::UnitX()}
                                              : transition_from(transition);
          return decay_spectrum(build_G(to_cloud(p), t, coupling_mode_from_string(mode)));
        },
        py::arg("positions"), py::arg("transition") = py::none(), py::arg("mode") = "full");
  m.def("max_decay_rate",
        [](const Positions& p, py::object transition, const std::string& mode) {
          const auto t = transition.is_none() ? TransitionSpec{"g", 1.0, 1.0, Vec3::UnitX()}
                                              : transition_from(transition);
          return max_decay_rate(build_G(to_cloud(p), t, coupling_mode_from_string(mode)));
        },
        py::arg("positions"), py::arg("transition") = py::none(), py::arg("mode") = "full");

  // Solvers.
  m.def("count_basis_pairs", &count_basis_pairs, py::arg("n_atoms"), py::arg("n_levels"));
  m.def("evolve_correlations",
        [](const Positions& p, py::object transitions, const std::string& mode, double dt,
           double stop_fraction, double t_max) {
          const auto tr = transitions_from(transitions);
          const auto set = build_coupling_set(to_cloud(p), tr, coupling_mode_from_string(mode), 0.0);
          CorrelationRunOptions o;
          o.horizon = horizon_from(dt, stop_fraction, t_max);
          py::gil_scoped_release release;
          auto run = evolve_correlations(set, tr, o);
          py::gil_scoped_acquire acquire;
          return trajectory_dict(run.trajectory);
        },
        py::arg("positions"), py::arg("transitions") = py::none(), py::arg("mode") = "full",
        py::arg("dt") = 0.01, py::arg("stop_fraction") = 0.01, py::arg("t_max") = 1e4);
  m.def("evolve_exact",
        [](const Positions& p, py::object transitions, const std::string& mode, double dt,
           double stop_fraction, double t_max) {
          const auto tr = transitions_from(transitions);
          const auto set = build_coupling_set(to_cloud(p), tr, coupling_mode_from_string(mode), 0.0);
          ExactRunOptions o;
          o.horizon = horizon_from(dt, stop_fraction, t_max);
          py::gil_scoped_release release;
          auto run = evolve_exact(set, tr, o);
          py::gil_scoped_acquire acquire;
          return trajectory_dict(run.trajectory);
        },
        py::arg("positions"), py::arg("transitions") = py::none(), py::arg("mode") = "full",
        py::arg("dt") = 0.01, py::arg("stop_fraction") = 0.01, py::arg("t_max") = 1e4);

  // Harness.
  m.def("validate_config", [](const std::string& text) {
    const auto r = validate_config(text);
    std::vector<std::pair<std::string, std::string>> issues;
    for (const auto& i : r.issues) issues.emplace_back(i.field, i.message);
    return issues;
  }, py::arg("text"), "List of (field, message); empty when the config is valid.");
  m.def("run_config",
        [](const std::string& text, int workers, double scale) {
          const auto cfg = parse_config(text);
          RunControl ctl;
          ctl.workers = workers;
          ctl.scale = scale;
          py::list out;
          if (cfg.sweep.axis == SweepAxis::kNone) {
            PointResult r;
            {
              py::gil_scoped_release release;
              r = run_point(cfg, ctl);
            }
            py::dict point;
            for (const auto& s : r.solvers) {
              auto d = summary_dict(summarize(s));
              if (!s.mean.t.empty()) d["mean"] = trajectory_dict(s.mean);
              point[py::str(to_string(s.solver))] = d;
            }
            out.append(point);
            return out;
          }
          SweepResult sw;
          {
            py::gil_scoped_release release;
            sw = run_sweep_in_memory(cfg, ctl);
          }
          for (const auto& pt : sw.points) {
            py::dict point;
            point["value"] = pt.value;
            point["ok"] = pt.ok;
            point["error"] = pt.error;
            for (const auto& s : pt.summary) point[py::str(to_string(s.solver))] = summary_dict(s);
            out.append(point);
          }
          return out;
        },
        py::arg("text"), py::arg("workers") = 1, py::arg("scale") = 1.0,
        "Runs a config in memory. Returns one dict per parameter point.");
}
