#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamchain/discretize.hpp"

namespace beamchain {

struct Spectrum {
    Eigen::VectorXcd eigenvalues;   // sorted by real part, descending
    Eigen::VectorXd residuals;      // ||W v - lambda M v|| per eigenpair
    Eigen::MatrixXcd eigenvectors;  // columns match eigenvalues
    double abscissa = 0.0;          // max real part
    double operator_norm = 0.0;     // ||A_h|| estimate used for residual scaling
};

template <class Scalar>
Spectrum eigenvalues(const OperatorBundleT<Scalar>& b);

double spectral_abscissa(const Spectrum& s);
/// max real part over eigenvalues with |lambda| > exclude_below
double spectral_abscissa(const Spectrum& s, double exclude_below);

inline constexpr double kSentinelNorm = 1e12;       // resolvent pole detection
inline constexpr double kKernelRelTol = 1e-10;      // numerical kernel threshold
inline constexpr double kKernelWarnTol = 1e-6;      // borderline band
inline constexpr int kDenseDimLimit = 5000;

/// ||(i beta - A)^{-1}|| in the M_h-weighted operator norm; +inf sentinel when
/// i beta is (numerically) an eigenvalue.
template <class Scalar>
double resolvent_norm(const OperatorBundleT<Scalar>& b, double beta);

struct ResolventSweep {
    Eigen::VectorXd betas;
    Eigen::VectorXd norms;
    double sup_estimate = 0.0;
    double argmax_beta = 0.0;
    bool has_sentinel = false;
};

template <class Scalar>
ResolventSweep resolvent_sweep(const OperatorBundleT<Scalar>& b, double beta_min,
                               double beta_max, int n_samples);

struct KernelInfo {
    int dim = 0;
    Eigen::MatrixXcd basis;          // M_h-orthonormal kernel basis (columns)
    Eigen::VectorXd singular_values;  // smallest few singular values of A_h
    std::vector<std::string> warnings;
};

template <class Scalar>
KernelInfo kernel_projection(const OperatorBundleT<Scalar>& b);

/// Remove the kernel component: x - sum_i b_i <b_i, x>_M
template <class Scalar>
typename OperatorBundleT<Scalar>::Vector project_off_kernel(
    const OperatorBundleT<Scalar>& b, const KernelInfo& k,
    const typename OperatorBundleT<Scalar>::Vector& x);

/// Dense M-orthogonal projector onto the kernel complement (small dims only).
template <class Scalar>
Eigen::MatrixXcd kernel_complement_projector(const OperatorBundleT<Scalar>& b,
                                             const KernelInfo& k);

/// Deflated variants used when a rigid mode is present: the kernel directions
/// are shifted off zero before computing the resolvent.
template <class Scalar>
double resolvent_norm_deflated(const OperatorBundleT<Scalar>& b, const KernelInfo& k,
                               double beta);
template <class Scalar>
ResolventSweep resolvent_sweep_deflated(const OperatorBundleT<Scalar>& b, const KernelInfo& k,
                                        double beta_min, double beta_max, int n_samples);

/// Generic initial data spanned by the n_modes slowest nonzero modes; random
/// coefficients seeded for determinism, unit energy. Suited for decay-rate
/// fits where unresolved stiff modes would pollute the envelope.
template <class Scalar>
typename OperatorBundleT<Scalar>::Vector initial_state_from_modes(
    const OperatorBundleT<Scalar>& b, const Spectrum& s, int n_modes, unsigned seed,
    double exclude_below = 1e-6);

/// Largest |lambda| among the n_modes slowest nonzero modes (for step control).
double slowest_band_limit(const Spectrum& s, int n_modes, double exclude_below = 1e-6);

enum class BeamClosure { ClampedFree, PinnedPinned, ClampedClamped, ClampedPinned };

/// First k positive roots of the closure's characteristic equation,
/// bracketed bisection to 1e-12.
std::vector<double> uniform_beam_oracle(BeamClosure closure, int k);

/// Eigenfrequencies |lambda| = kappa^2 sqrt(EI/rho) / L^2 of a uniform beam.
std::vector<double> uniform_beam_frequencies(BeamClosure closure, int k, double rho, double ei,
                                             double L);

void write_spectrum_csv(const Spectrum& s, const std::string& path);
void write_sweep_csv(const ResolventSweep& s, const std::string& path);

// variant helpers
Spectrum eigenvalues(const OperatorBundle& b);
ResolventSweep resolvent_sweep(const OperatorBundle& b, double beta_min, double beta_max,
                               int n_samples);
KernelInfo kernel_projection(const OperatorBundle& b);

}  // namespace beamchain
