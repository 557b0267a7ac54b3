#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "beamchain/discretize.hpp"
#include "beamchain/model.hpp"
#include "beamchain/passivity.hpp"
#include "beamchain/spectral.hpp"
#include "beamchain/timestep.hpp"

namespace beamchain {

struct AnalysisDefaults {
    int cells = 200;
    double T = 0.0;          // <= 0: derived as 5/|abscissa|
    double dt = 0.0;         // <= 0: stability-capped default
    double beta_max = 200.0;
    int sweep_samples = 256;
    unsigned seed = 20240817;
};

struct Scenario {
    std::string name;
    nlohmann::json document;
    AnalysisDefaults defaults;
};

Scenario load_scenario(const std::string& path, bool lenient = false,
                       std::vector<std::string>* warnings = nullptr);

enum class Verdict {
    ExpStableCertifiedNumerically,
    AsymptoticOnly,
    RigidMode,
    HypothesesViolated,
};

std::string verdict_name(Verdict v);

struct HypothesisSection {
    RegularityReport regularity;
    MonotonicityReport monotonicity;
    PassivityVerdict left_passivity, right_passivity;
    std::vector<double> junction_margins;        // lambda_min of Herm K per static junction
    std::vector<ControllerVerdict> controllers;  // per junction with a controller
    DissipationClass dissipation;
    std::vector<std::string> notes;
    bool pass = true;
};

struct SpectralSection {
    double abscissa = 0.0;
    double abscissa_off_kernel = 0.0;
    int kernel_dim = 0;
    double max_residual = 0.0;
    int n_eigenvalues = 0;
    bool sweep_ran = false;
    double sweep_sup = 0.0;
    double sweep_argmax = 0.0;
    bool sweep_sentinel = false;
};

struct DynamicSection {
    bool ran = false;
    DecayFit fit;
    double T = 0.0, dt = 0.0;
    double initial_energy = 0.0, final_energy = 0.0;
};

struct Report {
    std::string scenario_name;
    nlohmann::json config;  // resolved numeric settings for reproducibility
    HypothesisSection hypotheses;
    std::optional<SpectralSection> spectral;
    std::optional<DynamicSection> dynamic;
    Verdict verdict = Verdict::HypothesesViolated;
};

HypothesisSection run_hypothesis_checks(const ChainModel& model);

/// Derive the verdict purely from section contents (re-derivable from a
/// serialized report).
Verdict derive_verdict(const HypothesisSection& h, const std::optional<SpectralSection>& s,
                       const std::optional<DynamicSection>& d);

nlohmann::json report_to_json(const Report& r);
Verdict verdict_from_json(const nlohmann::json& report);

struct RunOutputs {
    Report report;
    std::optional<Spectrum> spectrum;
    std::optional<ResolventSweep> sweep;
    std::optional<EnergyTrace> trace;
};

enum class RunStage { Check, Spectrum, Sweep, Simulate, Full };

RunOutputs run_stage(const ChainModel& model, const AnalysisDefaults& defaults,
                     RunStage stage, const std::string& scenario_name = "");

}  // namespace beamchain
