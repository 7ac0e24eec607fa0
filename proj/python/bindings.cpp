#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "entropywalks/certify.hpp"
#include "entropywalks/divergence.hpp"
#include "entropywalks/error.hpp"
#include "entropywalks/io.hpp"
#include "entropywalks/ising.hpp"
#include "entropywalks/ising_checks.hpp"
#include "entropywalks/kernel.hpp"
#include "entropywalks/runner.hpp"
#include "entropywalks/walk.hpp"

namespace py = pybind11;
using namespace ew;

namespace {

py::object to_py(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_py(v));
      return out;
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_py(v);
      return out;
    }
    default: return py::none();
  }
}

WalkLevel level_of(const std::string& s) {
  if (s == "k") return WalkLevel::KLevel;
  if (s == "ell") return WalkLevel::EllLevel;
  throw py::value_error("level must be 'k' or 'ell'");
}

}  // namespace

PYBIND11_MODULE(entropywalks, m) {
  m.doc() = "Down-up walks, Glauber dynamics and entropic independence certificates";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  py::class_<SubsetDensity>(m, "SubsetDensity")
      .def_static("make", &SubsetDensity::make, py::arg("n"), py::arg("k"), py::arg("entries"))
      .def_static("uniform", &SubsetDensity::uniform, py::arg("n"), py::arg("k"))
      .def_property_readonly("n", &SubsetDensity::ground_size)
      .def_property_readonly("k", &SubsetDensity::arity)
      .def_property_readonly("normalizer", &SubsetDensity::normalizer)
      .def("support", [](const SubsetDensity& mu) {
        std::vector<std::vector<int>> out;
        for (const auto& e : mu.entries()) out.push_back(elements_of(e.set));
        return out;
      })
      .def("probabilities", &SubsetDensity::probabilities)
      .def("probability", [](const SubsetDensity& mu, const std::vector<int>& s) {
        return mu.probability(mask_from_elements(s));
      })
      .def("__len__", &SubsetDensity::support_size);

  py::class_<SpinDensity>(m, "SpinDensity")
      .def_static("make", &SpinDensity::make, py::arg("m"), py::arg("entries"))
      .def_property_readonly("m", &SpinDensity::num_spins);

  m.def("gen_poly_eval", [](const SubsetDensity& mu, const std::vector<double>& z) { return gen_poly_eval(mu, z); });
  m.def("external_field", [](const SubsetDensity& mu, const std::vector<double>& l) { return external_field(mu, l); });
  m.def("condition_on", [](const SubsetDensity& mu, const std::vector<int>& t) { return condition_on(mu, t); });
  m.def("homogenize", &homogenize);
  m.def("r_fold", &r_fold, py::arg("mu"), py::arg("r"));
  m.def("down_project", &down_project, py::arg("nu"), py::arg("ell"));
  m.def("marginals", [](const SubsetDensity& mu) {
    const auto p = marginals(mu);
    return std::vector<double>(p.values().begin(), p.values().end());
  });

  py::class_<IsingModel>(m, "IsingModel")
      .def_static("make_ising", &IsingModel::make_ising, py::arg("J"), py::arg("h"))
      .def_static("make_rank_one", &IsingModel::make_rank_one, py::arg("u"), py::arg("v"))
      .def_static("curie_weiss", &IsingModel::curie_weiss, py::arg("n"), py::arg("delta"),
                  py::arg("field") = std::nullopt)
      .def_property_readonly("n", &IsingModel::size)
      .def_property_readonly("field", &IsingModel::field)
      .def_property_readonly("op_norm", &IsingModel::op_norm)
      .def_property_readonly("is_rank_one", &IsingModel::is_rank_one)
      .def("interaction", &IsingModel::interaction)
      .def("log_weight", &IsingModel::log_weight);

  m.def("psd_shift", &psd_shift);
  m.def("alpha_profile", [](const std::vector<double>& u) { return alpha_profile(u).alphas; });
  m.def("spin_probabilities", [](const IsingModel& model) { return spin_law(model).probabilities(); });

  py::class_<TransitionKernel>(m, "TransitionKernel")
      .def("dense", &TransitionKernel::dense)
      .def_property_readonly("row_states", [](const TransitionKernel& k) {
        return std::vector<Mask>(k.row_states().begin(), k.row_states().end());
      })
      .def_property_readonly("col_states", [](const TransitionKernel& k) {
        return std::vector<Mask>(k.col_states().begin(), k.col_states().end());
      })
      .def_property_readonly("stationary", [](const TransitionKernel& k) {
        return std::vector<double>(k.stationary().begin(), k.stationary().end());
      })
      .def_property_readonly("is_reversible", &TransitionKernel::is_reversible);

  m.def("down_operator", py::overload_cast<int, int, int>(&down_operator));
  m.def("up_operator", &up_operator);
  m.def("down_up_kernel", [](const SubsetDensity& mu, int ell, const std::string& level) {
    return down_up_kernel(mu, ell, level_of(level));
  }, py::arg("mu"), py::arg("ell"), py::arg("level") = "k");
  m.def("glauber_kernel", [](const IsingModel& model) { return glauber_kernel(model); });
  m.def("spectrum_report", [](const TransitionKernel& k) {
    const auto r = spectrum_report(k);
    py::dict d;
    d["eigenvalues"] = r.eigenvalues;
    d["gap"] = r.gap;
    d["reversible"] = r.reversible;
    return d;
  });
  m.def("spectral_gap", &spectral_gap);

  m.def("simulate_walk", [](const SubsetDensity& mu, int ell, const std::vector<int>& start, std::size_t steps,
                            std::uint64_t seed) {
    return simulate_walk(mu, ell, mask_from_elements(start), steps, seed).states;
  }, py::arg("mu"), py::arg("ell"), py::arg("start"), py::arg("steps"), py::arg("seed"));
  m.def("simulate_glauber", [](const IsingModel& model, Mask start, std::size_t steps, std::uint64_t seed) {
    return simulate_walk(model, start, steps, seed).states;
  }, py::arg("model"), py::arg("start"), py::arg("steps"), py::arg("seed"));

  m.def("divergences", [](const std::vector<double>& nu, const std::vector<double>& mu) {
    const auto d = divergences(nu, mu);
    return std::make_pair(d.kl, d.tv);
  });
  m.def("entropy_functional", [](const std::vector<double>& mu, const std::vector<double>& f) {
    return entropy_functional(mu, f);
  });
  m.def("contraction_coefficient", [](const SubsetDensity& mu, int ell, int trials, std::uint64_t seed,
                                      std::optional<double> alpha) {
    ContractionOptions o;
    o.trials = trials;
    o.seed = seed;
    o.alpha = alpha;
    return to_py(io::to_json(contraction_coefficient(mu, ell, o)));
  }, py::arg("mu"), py::arg("ell"), py::arg("trials") = 512, py::arg("seed") = 0, py::arg("alpha") = std::nullopt);
  m.def("kappa_closed_form", [](int k, int ell, double alpha) {
    const auto f = kappa_closed_form(k, ell, alpha);
    py::dict d;
    d["general"] = f.general;
    d["integer_form"] = f.integer_form;
    d["telescoped"] = f.telescoped;
    return d;
  });
  m.def("mlsi_estimate", [](const TransitionKernel& k, int starts, std::uint64_t seed) {
    MlsiOptions o;
    o.starts = starts;
    o.seed = seed;
    return to_py(io::to_json(mlsi_estimate(k, o), seed, o.contraction_trials));
  }, py::arg("kernel"), py::arg("starts") = 24, py::arg("seed") = 0);
  m.def("mixing_time", [](const TransitionKernel& k, Mask start, double eps) { return mixing_time(k, start, eps); },
        py::arg("kernel"), py::arg("start"), py::arg("epsilon") = 0.25);
  m.def("mlsi_mixing_bound", [](double rho0, const std::vector<double>& mu, double eps) {
    return mlsi_mixing_bound(rho0, mu, eps);
  });

  m.def("min_entropy_dual", [](const SubsetDensity& mu, const std::vector<double>& q) {
    const auto r = min_entropy_dual(mu, MarginalVector(q));
    py::dict d;
    d["value"] = r.value;
    d["z"] = r.z;
    d["nu"] = r.nu;
    return d;
  });
  m.def("entropic_independence_certify", [](const SubsetDensity& mu, double alpha, const std::string& mode,
                                            bool all_links, std::uint64_t seed) {
    CertifyOptions o;
    o.mode = mode == "sampled" ? CertifyMode::Sampled : CertifyMode::ExactDual;
    o.all_links = all_links;
    o.seed = seed;
    return to_py(io::to_json(entropic_independence_certify(mu, alpha, o)));
  }, py::arg("mu"), py::arg("alpha"), py::arg("mode") = "exact-dual", py::arg("all_links") = false,
     py::arg("seed") = 0);
  m.def("flc_check", [](const SubsetDensity& mu, double alpha, std::uint64_t seed) {
    FlcOptions o;
    o.seed = seed;
    return to_py(io::to_json(flc_check(mu, AlphaVector::uniform(alpha), o)));
  }, py::arg("mu"), py::arg("alpha"), py::arg("seed") = 0);
  m.def("hessian_at_ones", [](const SubsetDensity& mu, const std::vector<double>& alpha) {
    return hessian_at_ones(mu, AlphaVector::per_element(alpha));
  });
  m.def("influence_matrix", [](const SubsetDensity& mu) { return influence_bundle(mu).psi; });
  m.def("dobrushin_matrix", [](const IsingModel& model) { return dobrushin_matrix(spin_law(model)); });

  m.def("rank_one_flc_certify", [](const Eigen::VectorXd& u, const Eigen::VectorXd& h, std::size_t shifts,
                                   std::uint64_t seed) {
    return to_py(io::to_json(rank_one_flc_certify(u, h, shifts, seed)));
  }, py::arg("u"), py::arg("h"), py::arg("shifts") = 200, py::arg("seed") = 0);
  m.def("rank_one_contraction_check", [](const Eigen::VectorXd& u, const Eigen::VectorXd& h, std::size_t trials,
                                         std::uint64_t seed) {
    return to_py(io::to_json(rank_one_contraction_check(u, h, trials, seed)));
  }, py::arg("u"), py::arg("h"), py::arg("trials") = 200, py::arg("seed") = 0);
  m.def("exchange_check", [](const IsingModel& model) { return to_py(io::to_json(exchange_check(model))); });

  m.def("run_experiment", [](const std::string& path, std::optional<std::uint64_t> seed,
                             std::optional<std::string> out) {
    auto cfg = bench::load_config(path, seed);
    if (out) cfg.output_dir = *out;
    const auto r = bench::run(cfg);
    py::dict d;
    d["directory"] = r.directory.string();
    d["summary"] = to_py(r.summary);
    d["falsified"] = r.falsified;
    return d;
  }, py::arg("config"), py::arg("seed") = std::nullopt, py::arg("out") = std::nullopt);
}
