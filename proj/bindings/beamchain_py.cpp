#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <beamchain/discretize.hpp>
#include <beamchain/model.hpp>
#include <beamchain/passivity.hpp>
#include <beamchain/report.hpp>
#include <beamchain/spectral.hpp>
#include <beamchain/timestep.hpp>

namespace py = pybind11;
using namespace beamchain;

namespace {

ChainModel model_from_json(const std::string& text, bool lenient) {
    std::vector<std::string> warnings;
    return build_chain(nlohmann::json::parse(text), lenient, &warnings);
}

struct PyBundle {
    OperatorBundle bundle;

    template <class F>
    auto visit(F&& f) const {
        return std::visit(std::forward<F>(f), bundle);
    }
    int dim() const { return bundle_dim(bundle); }
    bool is_real() const { return bundle_is_real(bundle); }

    double energy(const Eigen::VectorXcd& x) const {
        return visit([&](const auto& b) {
            using S = typename std::decay_t<decltype(b)>::Vector::Scalar;
            if constexpr (std::is_same_v<S, double>) {
                if (x.size() && x.imag().cwiseAbs().maxCoeff() != 0.0)
                    throw py::type_error("real bundle expects a real state");
                return b.energy(x.real());
            } else {
                return b.energy(x);
            }
        });
    }
};

template <class F>
Eigen::VectorXcd real_or_complex_call(const PyBundle& pb, const Eigen::VectorXcd& x, F&& f) {
    return pb.visit([&](const auto& b) -> Eigen::VectorXcd {
        using S = typename std::decay_t<decltype(b)>::Vector::Scalar;
        if constexpr (std::is_same_v<S, double>) {
            if (x.size() && x.imag().cwiseAbs().maxCoeff() != 0.0)
                throw py::type_error("real bundle expects a real state");
            Eigen::VectorXd xr = x.real();
            return f(b, xr).template cast<Complex>();
        } else {
            Eigen::VectorXcd xc = x;
            return f(b, xc);
        }
    });
}

py::dict spectrum_dict(const Spectrum& s) {
    py::dict d;
    d["eigenvalues"] = s.eigenvalues;
    d["residuals"] = s.residuals;
    d["abscissa"] = s.abscissa;
    d["eigenvectors"] = s.eigenvectors;
    return d;
}

py::dict fit_dict(const DecayFit& f) {
    py::dict d;
    d["M"] = f.M;
    d["eta"] = f.eta;
    d["residual"] = f.residual;
    d["window"] = py::make_tuple(f.window[0], f.window[1]);
    d["non_decaying"] = f.non_decaying;
    return d;
}

}  // namespace

PYBIND11_MODULE(_beamchain, m) {
    m.doc() = "Port-Hamiltonian Euler-Bernoulli beam chains: discretization and "
              "stability diagnostics (C++ core)";

    py::register_exception<ChainError>(m, "ChainError");

    py::class_<ChainModel>(m, "Model")
        .def_property_readonly("segment_count", &ChainModel::segment_count)
        .def_property_readonly("total_length", &ChainModel::total_length)
        .def_property_readonly("is_real", &ChainModel::is_real)
        .def("to_json", [](const ChainModel& mdl) { return chain_to_json(mdl).dump(); })
        .def("__repr__", [](const ChainModel& mdl) {
            return "<beamchain.Model segments=" + std::to_string(mdl.segment_count()) +
                   " L=" + std::to_string(mdl.total_length()) + ">";
        });

    m.def("build_chain", &model_from_json, py::arg("document"), py::arg("lenient") = false,
          "Parse and validate a chain spec document given as a JSON string");

    m.def("validate_regularity", [](const ChainModel& mdl) {
        RegularityReport r = validate_regularity(mdl);
        py::list segs;
        for (const auto& s : r.segments) {
            py::dict d;
            d["min_rho"] = s.min_rho;
            d["min_ei"] = s.min_ei;
            d["lipschitz_rho"] = s.lipschitz_rho;
            d["lipschitz_ei"] = s.lipschitz_ei;
            segs.append(d);
        }
        py::dict out;
        out["pass"] = r.pass;
        out["segments"] = segs;
        return out;
    });

    m.def("check_jump_monotonicity", [](const ChainModel& mdl) {
        MonotonicityReport r = check_jump_monotonicity(mdl);
        py::list jct;
        for (const auto& j : r.junctions) {
            py::dict d;
            d["junction"] = j.junction;
            d["rho_minus"] = j.rho_minus;
            d["rho_plus"] = j.rho_plus;
            d["ei_minus"] = j.ei_minus;
            d["ei_plus"] = j.ei_plus;
            d["margin_rho"] = j.margin_rho;
            d["margin_ei"] = j.margin_ei;
            d["scalar_pass"] = j.scalar_pass;
            d["matrix_min_eig"] = j.matrix_min_eig;
            d["matrix_pass"] = j.matrix_pass;
            d["violated"] = j.violated;
            jct.append(d);
        }
        py::dict out;
        out["pass"] = r.pass;
        out["junctions"] = jct;
        return out;
    });

    m.def("check_boundary_matrices",
          [](const Eigen::MatrixXcd& WB, const Eigen::MatrixXcd& WC) {
              if (WB.rows() != 2 || WB.cols() != 4 || WC.rows() != 2 || WC.cols() != 4)
                  throw py::value_error("W_B and W_C must be 2x4");
              PassivityVerdict v = check_boundary_matrices(Matrix24c(WB), Matrix24c(WC));
              py::dict d;
              d["pass"] = v.pass;
              d["margin"] = v.margin;
              return d;
          });

    py::class_<PyBundle>(m, "Bundle")
        .def_property_readonly("dim", &PyBundle::dim)
        .def_property_readonly("is_real", &PyBundle::is_real)
        .def_property_readonly("beam_dim",
                               [](const PyBundle& b) {
                                   return b.visit([](const auto& bb) { return bb.beam_dim; });
                               })
        .def_property_readonly("cells",
                               [](const PyBundle& b) {
                                   return b.visit([](const auto& bb) { return bb.cells; });
                               })
        .def_property_readonly("conservative",
                               [](const PyBundle& b) {
                                   return b.visit(
                                       [](const auto& bb) { return bb.conservative; });
                               })
        .def("energy", &PyBundle::energy, py::arg("x"))
        .def("dissipation_rate",
             [](const PyBundle& b, const Eigen::VectorXcd& x) {
                 return b.visit([&](const auto& bb) {
                     using S = typename std::decay_t<decltype(bb)>::Vector::Scalar;
                     if constexpr (std::is_same_v<S, double>)
                         return bb.dissipation_rate(x.real());
                     else
                         return bb.dissipation_rate(x);
                 });
             })
        .def("power_balance",
             [](const PyBundle& b, const Eigen::VectorXcd& x) {
                 PowerBalanceBreakdown pb = b.visit([&](const auto& bb) {
                     using S = typename std::decay_t<decltype(bb)>::Vector::Scalar;
                     if constexpr (std::is_same_v<S, double>)
                         return discrete_power_balance(bb, Eigen::VectorXd(x.real()));
                     else
                         return discrete_power_balance(bb, x);
                 });
                 py::dict d;
                 d["lhs"] = pb.lhs;
                 d["rhs"] = pb.rhs;
                 py::list terms;
                 for (const auto& t : pb.terms) {
                     py::dict td;
                     td["name"] = t.name;
                     td["raw_flux"] = t.raw_flux;
                     td["closed_power"] = t.closed_power;
                     terms.append(td);
                 }
                 d["terms"] = terms;
                 return d;
             })
        .def("random_state",
             [](const PyBundle& b, unsigned seed) -> Eigen::VectorXcd {
                 return b.visit([&](const auto& bb) -> Eigen::VectorXcd {
                     return random_state(bb, seed).template cast<Complex>();
                 });
             },
             py::arg("seed") = 0)
        .def("eigenvalues",
             [](const PyBundle& b) {
                 return spectrum_dict(b.visit([](const auto& bb) { return eigenvalues(bb); }));
             })
        .def("resolvent_norm",
             [](const PyBundle& b, double beta) {
                 return b.visit([&](const auto& bb) { return resolvent_norm(bb, beta); });
             },
             py::arg("beta"))
        .def("resolvent_sweep",
             [](const PyBundle& b, double bmin, double bmax, int n) {
                 ResolventSweep sw = b.visit(
                     [&](const auto& bb) { return resolvent_sweep(bb, bmin, bmax, n); });
                 py::dict d;
                 d["betas"] = sw.betas;
                 d["norms"] = sw.norms;
                 d["sup_estimate"] = sw.sup_estimate;
                 d["argmax_beta"] = sw.argmax_beta;
                 d["has_sentinel"] = sw.has_sentinel;
                 return d;
             },
             py::arg("beta_min"), py::arg("beta_max"), py::arg("n_samples") = 64)
        .def("kernel",
             [](const PyBundle& b) {
                 KernelInfo k = b.visit([](const auto& bb) { return kernel_projection(bb); });
                 py::dict d;
                 d["dim"] = k.dim;
                 d["basis"] = k.basis;
                 d["singular_values"] = k.singular_values;
                 d["warnings"] = k.warnings;
                 return d;
             })
        .def("project_off_kernel",
             [](const PyBundle& b, const Eigen::VectorXcd& x) -> Eigen::VectorXcd {
                 return b.visit([&](const auto& bb) -> Eigen::VectorXcd {
                     KernelInfo k = kernel_projection(bb);
                     using S = typename std::decay_t<decltype(bb)>::Vector::Scalar;
                     if constexpr (std::is_same_v<S, double>)
                         return project_off_kernel(bb, k, Eigen::VectorXd(x.real()))
                             .template cast<Complex>();
                     else
                         return project_off_kernel(bb, k, x);
                 });
             })
        .def("step_midpoint",
             [](const PyBundle& b, const Eigen::VectorXcd& x, double dt) {
                 return real_or_complex_call(b, x, [&](const auto& bb, const auto& xs) {
                     return step_midpoint(bb, xs, dt);
                 });
             },
             py::arg("x"), py::arg("dt"))
        .def("simulate",
             [](const PyBundle& b, const Eigen::VectorXcd& x0, double T, double dt) {
                 EnergyTrace tr = b.visit([&](const auto& bb) {
                     using S = typename std::decay_t<decltype(bb)>::Vector::Scalar;
                     if constexpr (std::is_same_v<S, double>)
                         return simulate(bb, Eigen::VectorXd(x0.real()), T, dt);
                     else
                         return simulate(bb, x0, T, dt);
                 });
                 py::dict d;
                 d["times"] = tr.times;
                 d["energies"] = tr.energies;
                 d["config_hash"] = tr.config_hash;
                 return d;
             },
             py::arg("x0"), py::arg("T"), py::arg("dt") = 0.0)
        .def("export_matrix_market",
             [](const PyBundle& b, const std::string& pa, const std::string& pm) {
                 b.visit([&](const auto& bb) { export_matrix_market(bb, pa, pm); });
             },
             py::arg("path_A"), py::arg("path_M"));

    m.def("assemble",
          [](const ChainModel& mdl, int cells, const std::string& dissipation,
             double coefficient) {
              AssembleOptions opts;
              if (dissipation == "auto") opts.ad_mode = DissipationMode::Auto;
              else if (dissipation == "off") opts.ad_mode = DissipationMode::Off;
              else if (dissipation == "on") opts.ad_mode = DissipationMode::On;
              else throw py::value_error("dissipation must be auto|off|on");
              opts.ad_coefficient = coefficient;
              PyBundle b;
              b.bundle = assemble(normalize(mdl), Grid{cells}, opts);
              return b;
          },
          py::arg("model"), py::arg("cells") = 200, py::arg("dissipation") = "auto",
          py::arg("coefficient") = 0.01);

    m.def("uniform_beam_oracle",
          [](const std::string& closure, int k) {
              BeamClosure c;
              if (closure == "clamped-free") c = BeamClosure::ClampedFree;
              else if (closure == "pinned-pinned") c = BeamClosure::PinnedPinned;
              else if (closure == "clamped-clamped") c = BeamClosure::ClampedClamped;
              else if (closure == "clamped-pinned") c = BeamClosure::ClampedPinned;
              else throw py::value_error("unknown closure '" + closure + "'");
              return uniform_beam_oracle(c, k);
          },
          py::arg("closure"), py::arg("count"));

    m.def("fit_decay",
          [](const Eigen::VectorXd& times, const Eigen::VectorXd& energies) {
              EnergyTrace tr;
              tr.times = times;
              tr.energies = energies;
              return fit_dict(fit_decay(tr));
          },
          py::arg("times"), py::arg("energies"));

    m.def("run_report",
          [](const std::string& document, const std::string& stage, int cells, double T,
             double dt, double beta_max, int sweep_samples, unsigned seed) {
              nlohmann::json doc = nlohmann::json::parse(document);
              ChainModel mdl = build_chain(doc);
              AnalysisDefaults d;
              if (doc.contains("defaults")) {
                  const auto& dd = doc["defaults"];
                  if (dd.contains("cells")) d.cells = dd["cells"].get<int>();
                  if (dd.contains("beta_max")) d.beta_max = dd["beta_max"].get<double>();
                  if (dd.contains("sweep_samples"))
                      d.sweep_samples = dd["sweep_samples"].get<int>();
              }
              if (cells > 0) d.cells = cells;
              if (T > 0) d.T = T;
              if (dt > 0) d.dt = dt;
              if (beta_max > 0) d.beta_max = beta_max;
              if (sweep_samples > 0) d.sweep_samples = sweep_samples;
              if (seed) d.seed = seed;
              RunStage st = RunStage::Full;
              if (stage == "check") st = RunStage::Check;
              else if (stage == "spectrum") st = RunStage::Spectrum;
              else if (stage == "sweep") st = RunStage::Sweep;
              else if (stage == "simulate") st = RunStage::Simulate;
              else if (stage != "full") throw py::value_error("unknown stage '" + stage + "'");
              std::string name = doc.contains("name") ? doc["name"].get<std::string>() : "";
              RunOutputs out = run_stage(mdl, d, st, name);
              return report_to_json(out.report).dump();
          },
          py::arg("document"), py::arg("stage") = "full", py::arg("cells") = 0,
          py::arg("T") = 0.0, py::arg("dt") = 0.0, py::arg("beta_max") = 0.0,
          py::arg("sweep_samples") = 0, py::arg("seed") = 0);
}
