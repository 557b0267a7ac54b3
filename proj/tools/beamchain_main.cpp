#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include <beamchain/report.hpp>

namespace fs = std::filesystem;
using namespace beamchain;

namespace {

// exit codes: 0 ok, 1 hypothesis failure / unstable verdict, 2 numerical, 3 I/O
constexpr int kExitOk = 0;
constexpr int kExitHypothesis = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

struct CliOptions {
    std::string config;
    std::string out_dir = ".";
    int cells = 0;
    double T = 0.0;
    double dt = 0.0;
    double beta_max = 0.0;
    bool lenient = false;
    bool export_operators = false;
};

void add_common(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config, "chain spec document (JSON)")->required();
    cmd->add_option("--cells", opt.cells, "grid cells per segment (default 200)");
    cmd->add_option("--T", opt.T, "simulation horizon in seconds");
    cmd->add_option("--dt", opt.dt, "time step in seconds");
    cmd->add_option("--beta-max", opt.beta_max, "upper end of the resolvent sweep");
    cmd->add_option("--out", opt.out_dir, "output directory (default .)");
    cmd->add_flag("--lenient", opt.lenient, "warn about unknown config fields instead of failing");
    cmd->add_flag("--export-operators", opt.export_operators,
                  "dump A_h and M_h in Matrix Market format");
}

int run(RunStage stage, const CliOptions& opt) {
    std::vector<std::string> warnings;
    Scenario sc;
    try {
        sc = load_scenario(opt.config, opt.lenient, &warnings);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const ChainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitHypothesis;
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";

    AnalysisDefaults defaults = sc.defaults;
    if (opt.cells > 0) defaults.cells = opt.cells;
    if (opt.T > 0) defaults.T = opt.T;
    if (opt.dt > 0) defaults.dt = opt.dt;
    if (opt.beta_max > 0) defaults.beta_max = opt.beta_max;

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec) {
        std::cerr << "error: cannot create output directory " << opt.out_dir << "\n";
        return kExitIo;
    }

    RunOutputs out;
    try {
        ChainModel model = build_chain(sc.document, opt.lenient);
        out = run_stage(model, defaults, stage, sc.name.empty() ? opt.config : sc.name);
    } catch (const ChainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }

    const fs::path dir(opt.out_dir);
    {
        std::ofstream f(dir / "report.json");
        if (!f) {
            std::cerr << "error: cannot write report.json\n";
            return kExitIo;
        }
        f << report_to_json(out.report).dump(2) << "\n";
    }
    if (out.spectrum) write_spectrum_csv(*out.spectrum, (dir / "spectrum.csv").string());
    if (out.sweep) write_sweep_csv(*out.sweep, (dir / "sweep.csv").string());
    if (out.trace) write_energy_csv(*out.trace, (dir / "energy.csv").string());
    if (opt.export_operators) {
        try {
            ChainModel model = build_chain(sc.document, opt.lenient);
            OperatorBundle bundle = assemble(normalize(model), Grid{defaults.cells});
            std::visit(
                [&](const auto& b) {
                    export_matrix_market(b, (dir / "A.mtx").string(), (dir / "M.mtx").string());
                },
                bundle);
        } catch (const ChainError& e) {
            std::cerr << "error exporting operators: " << e.what() << "\n";
            return kExitNumerical;
        }
    }

    const auto& rep = out.report;
    std::cout << "scenario: " << rep.scenario_name << "\n";
    std::cout << "hypotheses: " << (rep.hypotheses.pass ? "pass" : "FAIL") << "\n";
    if (rep.hypotheses.dissipation.kind != SelectorKind::None)
        std::cout << "dissipation selector: " << rep.hypotheses.dissipation.selector
                  << " (kappa = " << rep.hypotheses.dissipation.kappa << ")\n";
    if (rep.spectral) {
        std::cout << "abscissa: " << rep.spectral->abscissa
                  << "  kernel dim: " << rep.spectral->kernel_dim << "\n";
        if (rep.spectral->sweep_ran)
            std::cout << "resolvent sup (sampled): "
                      << (rep.spectral->sweep_sentinel ? std::string("unbounded (pole hit)")
                                                       : std::to_string(rep.spectral->sweep_sup))
                      << " at beta = " << rep.spectral->sweep_argmax << "\n";
    }
    if (rep.dynamic && rep.dynamic->ran)
        std::cout << "energy fit: M = " << rep.dynamic->fit.M
                  << ", eta = " << rep.dynamic->fit.eta << " over [" << rep.dynamic->fit.window[0]
                  << ", " << rep.dynamic->fit.window[1] << "]\n";
    std::cout << "verdict: " << verdict_name(rep.verdict) << "\n";

    if (stage == RunStage::Check) return rep.hypotheses.pass ? kExitOk : kExitHypothesis;
    if (stage == RunStage::Full)
        return rep.verdict == Verdict::ExpStableCertifiedNumerically ? kExitOk
                                                                     : kExitHypothesis;
    return rep.hypotheses.pass ? kExitOk : kExitHypothesis;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beamchain - stability diagnostics for chains of Euler-Bernoulli beams"};
    app.require_subcommand(1);

    CliOptions opt;
    auto* check = app.add_subcommand("check", "validate the model and the algebraic hypotheses");
    auto* spectrum = app.add_subcommand("spectrum", "add the discrete spectrum and kernel");
    auto* sweep = app.add_subcommand("sweep", "add the resolvent sweep along the imaginary axis");
    auto* simulate = app.add_subcommand("simulate", "add the energy trajectory and decay fit");
    auto* full = app.add_subcommand("full", "run every stage and emit the combined report");
    for (auto* cmd : {check, spectrum, sweep, simulate, full}) add_common(cmd, opt);

    CLI11_PARSE(app, argc, argv);

    RunStage stage = RunStage::Check;
    if (spectrum->parsed()) stage = RunStage::Spectrum;
    else if (sweep->parsed()) stage = RunStage::Sweep;
    else if (simulate->parsed()) stage = RunStage::Simulate;
    else if (full->parsed()) stage = RunStage::Full;

    return run(stage, opt);
}
