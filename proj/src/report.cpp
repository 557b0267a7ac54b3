#include "beamchain/report.hpp"

#include <cmath>

namespace beamchain {

using nlohmann::json;

Scenario load_scenario(const std::string& path, bool lenient,
                       std::vector<std::string>* warnings) {
    Scenario sc;
    sc.document = load_config(path);
    if (sc.document.contains("name") && sc.document["name"].is_string())
        sc.name = sc.document["name"].get<std::string>();
    if (sc.document.contains("defaults")) {
        const json& d = sc.document["defaults"];
        auto get = [&](const char* key, auto& out) {
            if (d.contains(key)) out = d[key].get<std::decay_t<decltype(out)>>();
        };
        get("cells", sc.defaults.cells);
        get("T", sc.defaults.T);
        get("dt", sc.defaults.dt);
        get("beta_max", sc.defaults.beta_max);
        get("sweep_samples", sc.defaults.sweep_samples);
        get("seed", sc.defaults.seed);
    }
    // validate eagerly so a bad scenario fails at load time
    build_chain(sc.document, lenient, warnings);
    return sc;
}

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::ExpStableCertifiedNumerically: return "exp-stable-certified-numerically";
        case Verdict::AsymptoticOnly: return "asymptotic-only";
        case Verdict::RigidMode: return "rigid-mode";
        case Verdict::HypothesesViolated: return "hypotheses-violated";
    }
    return "unknown";
}

HypothesisSection run_hypothesis_checks(const ChainModel& model) {
    HypothesisSection h;
    h.regularity = validate_regularity(model);
    h.monotonicity = check_jump_monotonicity(model);
    auto [wbl, wcl] = end_boundary_matrices(model.left_end, true);
    auto [wbr, wcr] = end_boundary_matrices(model.right_end, false);
    h.left_passivity = check_boundary_matrices(wbl, wcl);
    h.right_passivity = check_boundary_matrices(wbr, wcr);
    for (const auto& jct : model.junctions) {
        if (jct.controller) {
            h.controllers.push_back(check_controller(*jct.controller));
        } else {
            Matrix2c Kh = 0.5 * (jct.K + jct.K.adjoint());
            Eigen::SelfAdjointEigenSolver<Matrix2c> es(Kh);
            h.junction_margins.push_back(es.eigenvalues()(0));
        }
    }
    h.dissipation = classify_dissipation(model, h.controllers);

    if (model.right_end.kind == EndKind::ShearHinge)
        h.notes.push_back(
            "shear-hinge closure admits two textual readings for the shear condition's "
            "location; the right-end reading (theta(1) = 0, F(1) = 0) is implemented");
    if (!h.controllers.empty())
        h.notes.push_back(
            "controller damping certificates use the squared form kappa |D_c u_c|^2; an "
            "unsquared variant of the same condition exists and is not used");

    bool controllers_ok = true;
    for (const auto& c : h.controllers)
        controllers_ok = controllers_ok && c.passive && c.kernel_inclusion && c.internally_stable;
    bool junctions_ok = true;
    for (double m : h.junction_margins) junctions_ok = junctions_ok && m >= -kTolPsd;
    h.pass = h.regularity.pass && h.monotonicity.pass && h.left_passivity.pass &&
             h.right_passivity.pass && controllers_ok && junctions_ok;
    return h;
}

Verdict derive_verdict(const HypothesisSection& h, const std::optional<SpectralSection>& s,
                       const std::optional<DynamicSection>& d) {
    if (!h.pass) return Verdict::HypothesesViolated;
    if (s && s->kernel_dim > 0) return Verdict::RigidMode;
    if (s && d) {
        const bool spectral_stable = s->abscissa < -1e-6;
        const bool sweep_stable = s->sweep_ran && !s->sweep_sentinel &&
                                  std::isfinite(s->sweep_sup);
        const bool decay_stable = d->ran && d->fit.eta < -1e-6;
        if (spectral_stable && sweep_stable && decay_stable)
            return Verdict::ExpStableCertifiedNumerically;
    }
    return Verdict::AsymptoticOnly;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

namespace {

json passivity_json(const PassivityVerdict& v) {
    return {{"pass", v.pass}, {"margin", v.margin}};
}

json controller_json(const ControllerVerdict& v) {
    return {{"passive", v.passive},
            {"kappa", v.kappa},
            {"kernel_inclusion", v.kernel_inclusion},
            {"internally_stable", v.internally_stable},
            {"spectral_abscissa_Ac",
             std::isfinite(v.spectral_abscissa_Ac) ? v.spectral_abscissa_Ac : -1e308}};
}

}  // namespace

json report_to_json(const Report& r) {
    json out;
    out["scenario"] = r.scenario_name;
    out["config"] = r.config;

    json h;
    h["pass"] = r.hypotheses.pass;
    {
        json segs = json::array();
        for (const auto& s : r.hypotheses.regularity.segments)
            segs.push_back({{"min_rho", s.min_rho},
                            {"min_ei", s.min_ei},
                            {"lipschitz_rho", s.lipschitz_rho},
                            {"lipschitz_ei", s.lipschitz_ei}});
        h["regularity"] = {{"pass", r.hypotheses.regularity.pass}, {"segments", segs}};
    }
    {
        json jct = json::array();
        for (const auto& m : r.hypotheses.monotonicity.junctions)
            jct.push_back({{"junction", m.junction},
                           {"rho_minus", m.rho_minus},
                           {"rho_plus", m.rho_plus},
                           {"ei_minus", m.ei_minus},
                           {"ei_plus", m.ei_plus},
                           {"margin_rho", m.margin_rho},
                           {"margin_ei", m.margin_ei},
                           {"scalar_pass", m.scalar_pass},
                           {"matrix_min_eig", m.matrix_min_eig},
                           {"matrix_pass", m.matrix_pass},
                           {"violated", m.violated}});
        h["monotonicity"] = {{"pass", r.hypotheses.monotonicity.pass}, {"junctions", jct}};
    }
    h["left_passivity"] = passivity_json(r.hypotheses.left_passivity);
    h["right_passivity"] = passivity_json(r.hypotheses.right_passivity);
    h["junction_margins"] = r.hypotheses.junction_margins;
    {
        json cs = json::array();
        for (const auto& c : r.hypotheses.controllers) cs.push_back(controller_json(c));
        h["controllers"] = cs;
    }
    h["dissipation_class"] = {
        {"kind", r.hypotheses.dissipation.kind == SelectorKind::None
                     ? "none"
                     : (r.hypotheses.dissipation.kind == SelectorKind::Exponential
                            ? "exponential"
                            : "asymptotic")},
        {"selector", r.hypotheses.dissipation.selector},
        {"certified", r.hypotheses.dissipation.certified},
        {"kappa", r.hypotheses.dissipation.kappa}};
    h["notes"] = r.hypotheses.notes;
    out["hypotheses"] = h;

    if (r.spectral) {
        const auto& s = *r.spectral;
        out["spectral"] = {{"abscissa", s.abscissa},
                           {"abscissa_off_kernel", s.abscissa_off_kernel},
                           {"kernel_dim", s.kernel_dim},
                           {"max_residual", s.max_residual},
                           {"n_eigenvalues", s.n_eigenvalues},
                           {"sweep_ran", s.sweep_ran},
                           {"sweep_sup", std::isfinite(s.sweep_sup) ? s.sweep_sup : -1.0},
                           {"sweep_argmax", s.sweep_argmax},
                           {"sweep_sentinel", s.sweep_sentinel}};
    }
    if (r.dynamic) {
        const auto& d = *r.dynamic;
        out["dynamic"] = {{"ran", d.ran},
                          {"fit",
                           {{"M", d.fit.M},
                            {"eta", d.fit.eta},
                            {"residual", d.fit.residual},
                            {"window", {d.fit.window[0], d.fit.window[1]}},
                            {"non_decaying", d.fit.non_decaying}}},
                          {"T", d.T},
                          {"dt", d.dt},
                          {"initial_energy", d.initial_energy},
                          {"final_energy", d.final_energy}};
    }
    out["verdict"] = verdict_name(r.verdict);
    return out;
}

Verdict verdict_from_json(const json& report) {
    // re-derive from section contents
    HypothesisSection h;
    h.pass = report["hypotheses"]["pass"].get<bool>();
    std::optional<SpectralSection> s;
    if (report.contains("spectral")) {
        SpectralSection ss;
        ss.abscissa = report["spectral"]["abscissa"].get<double>();
        ss.kernel_dim = report["spectral"]["kernel_dim"].get<int>();
        ss.sweep_ran = report["spectral"]["sweep_ran"].get<bool>();
        double sup = report["spectral"]["sweep_sup"].get<double>();
        ss.sweep_sup = sup < 0 ? std::numeric_limits<double>::infinity() : sup;
        ss.sweep_sentinel = report["spectral"]["sweep_sentinel"].get<bool>();
        s = ss;
    }
    std::optional<DynamicSection> d;
    if (report.contains("dynamic")) {
        DynamicSection dd;
        dd.ran = report["dynamic"]["ran"].get<bool>();
        dd.fit.eta = report["dynamic"]["fit"]["eta"].get<double>();
        d = dd;
    }
    return derive_verdict(h, s, d);
}

// ---------------------------------------------------------------------------
// staged runs
// ---------------------------------------------------------------------------

namespace {

template <class Scalar>
void run_numeric(const OperatorBundleT<Scalar>& b, const AnalysisDefaults& defaults,
                 RunStage stage, RunOutputs& out) {
    SpectralSection ss;
    Spectrum spec = eigenvalues(b);
    KernelInfo kernel = kernel_projection(b);
    ss.abscissa = spec.abscissa;
    ss.kernel_dim = kernel.dim;
    const double kernel_cut = kernel.dim > 0 ? 1e-6 * std::max(1.0, spec.operator_norm) : 0.0;
    ss.abscissa_off_kernel =
        kernel.dim > 0 ? spectral_abscissa(spec, kernel_cut) : spec.abscissa;
    ss.max_residual = spec.residuals.size() ? spec.residuals.maxCoeff() : 0.0;
    ss.n_eigenvalues = static_cast<int>(spec.eigenvalues.size());
    out.spectrum = std::move(spec);

    if (stage == RunStage::Sweep || stage == RunStage::Simulate || stage == RunStage::Full) {
        ResolventSweep sw =
            kernel.dim > 0
                ? resolvent_sweep_deflated(b, kernel, 0.0, defaults.beta_max,
                                           defaults.sweep_samples)
                : resolvent_sweep(b, 0.0, defaults.beta_max, defaults.sweep_samples);
        ss.sweep_ran = true;
        ss.sweep_sup = sw.sup_estimate;
        ss.sweep_argmax = sw.argmax_beta;
        ss.sweep_sentinel = sw.has_sentinel;
        out.sweep = std::move(sw);
    }
    out.report.spectral = ss;

    if (stage == RunStage::Simulate || stage == RunStage::Full) {
        DynamicSection ds;
        const double alpha = std::abs(ss.abscissa_off_kernel);
        double T = defaults.T > 0 ? defaults.T : (alpha > 1e-9 ? 5.0 / alpha : 10.0);
        T = std::min(T, 1e4);
        const int n_modes = 12;
        double dt = defaults.dt;
        if (dt <= 0) {
            // resolve the excited mode band rather than the stiff cap
            double band = slowest_band_limit(*out.spectrum, n_modes);
            dt = band > 0 ? std::min(1e-2, 0.1 / band) : 1e-2;
            if (T / dt > 2e5) dt = T / 2e5;
        }
        auto x0 = initial_state_from_modes(b, *out.spectrum, n_modes, defaults.seed);
        if (kernel.dim > 0) x0 = project_off_kernel(b, kernel, x0);
        const double e0 = b.energy(x0);
        if (e0 > 0) x0 /= std::sqrt(e0);
        EnergyTrace tr = simulate(b, x0, T, dt);
        ds.ran = true;
        ds.T = T;
        ds.dt = dt;
        ds.initial_energy = tr.energies(0);
        ds.final_energy = tr.energies(tr.energies.size() - 1);
        ds.fit = fit_decay(tr);
        out.trace = std::move(tr);
        out.report.dynamic = ds;
    }
}

}  // namespace

RunOutputs run_stage(const ChainModel& model, const AnalysisDefaults& defaults, RunStage stage,
                     const std::string& scenario_name) {
    RunOutputs out;
    out.report.scenario_name = scenario_name;
    out.report.hypotheses = run_hypothesis_checks(model);
    out.report.config = {{"cells", defaults.cells},
                         {"T", defaults.T},
                         {"dt", defaults.dt},
                         {"beta_max", defaults.beta_max},
                         {"sweep_samples", defaults.sweep_samples},
                         {"seed", defaults.seed}};

    if (stage != RunStage::Check) {
        NormalizedModel nm = normalize(model);
        Grid grid{defaults.cells};
        OperatorBundle bundle = assemble(nm, grid);
        std::visit([&](const auto& b) { run_numeric(b, defaults, stage, out); }, bundle);
        out.report.config["artificial_dissipation"] =
            std::visit([](const auto& b) { return b.ad_used; }, bundle);
    }
    out.report.verdict =
        derive_verdict(out.report.hypotheses, out.report.spectral, out.report.dynamic);
    return out;
}

}  // namespace beamchain
