#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamchain/model.hpp"

namespace beamchain {

// tolerances (see module notes): matrices here are at most (4+n)-dimensional
inline constexpr double kTolPsd = 1e-10;
inline constexpr double kTolBisect = 1e-9;

struct PassivityVerdict {
    bool pass = false;
    double margin = 0.0;          // lambda_min of the tested Hermitian matrix
    Eigen::VectorXcd witness;     // unit vector attaining the margin (on failure)
    double witness_value = 0.0;   // v* Q v at the witness
};

/// Impedance passivity test in the boundary trace pairing: W* Sigma W - Sigma >= 0 with
/// Sigma = [[0, I],[I, 0]] in 2x2 blocks, W = [W_B; W_C].
PassivityVerdict check_boundary_matrices(const Matrix24c& W_B, const Matrix24c& W_C);

struct ControllerVerdict {
    bool passive = false;
    double kappa = 0.0;           // largest kappa with the squared-input damping form PSD
    bool kernel_inclusion = false;  // ker D_c subset of ker B_c
    bool internally_stable = false;
    double spectral_abscissa_Ac = 0.0;
};

ControllerVerdict check_controller(const ControllerSpec& c);

enum class SelectorKind { None, Asymptotic, Exponential };

struct DissipationClass {
    SelectorKind kind = SelectorKind::None;
    std::string selector;                  // chosen component combination
    std::vector<std::string> certified;    // all certified combinations
    double kappa = 0.0;
};

/// Determine which damped-trace selector is certified by the left-end K0
/// structure and the right-end conservative closure.
DissipationClass classify_dissipation(const ChainModel& model,
                                      const std::vector<ControllerVerdict>& junction_verdicts);

}  // namespace beamchain
