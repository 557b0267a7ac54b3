#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/Dense>

#include "beamchain/discretize.hpp"

namespace beamchain {

/// Implicit midpoint step: (M - dt/2 W) x+ = (M + dt/2 W) x.
/// Preserves the energy of conservative bundles exactly and inherits the
/// dissipation inequality otherwise. Factorization cached per (bundle, dt).
template <class Scalar>
class MidpointStepper {
public:
    using Vector = typename OperatorBundleT<Scalar>::Vector;
    MidpointStepper(const OperatorBundleT<Scalar>& bundle, double dt);
    Vector step(const Vector& x) const;
    double dt() const { return dt_; }

private:
    const OperatorBundleT<Scalar>* bundle_;
    double dt_;
    Eigen::PartialPivLU<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> lu_;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> rhs_;
};

template <class Scalar>
typename OperatorBundleT<Scalar>::Vector step_midpoint(
    const OperatorBundleT<Scalar>& b, const typename OperatorBundleT<Scalar>::Vector& x,
    double dt);

struct EnergyTrace {
    Eigen::VectorXd times;
    Eigen::VectorXd energies;
    uint64_t config_hash = 0;
};

/// Power-iteration estimate of |lambda|_max; default dt = 0.5/estimate capped
/// at 1e-2.
template <class Scalar>
double default_dt(const OperatorBundleT<Scalar>& b);

/// Trace of the total energy along the midpoint trajectory; dt <= 0 picks the
/// default step.
template <class Scalar>
EnergyTrace simulate(const OperatorBundleT<Scalar>& b,
                     const typename OperatorBundleT<Scalar>::Vector& x0, double T, double dt);

struct DecayFit {
    double M = 1.0;       // envelope amplitude, clamped to >= 1
    double eta = 0.0;     // envelope rate (1/s), negative when decaying
    double window[2] = {0.0, 0.0};
    double residual = 0.0;  // max log-envelope deviation over the window
    bool non_decaying = false;
};

/// Least-squares line through the log of the running peak envelope over
/// [T/10, T].
DecayFit fit_decay(const EnergyTrace& trace);

void write_energy_csv(const EnergyTrace& t, const std::string& path);

/// Deterministic pseudo-random initial state (seeded), unit energy.
template <class Scalar>
typename OperatorBundleT<Scalar>::Vector random_state(const OperatorBundleT<Scalar>& b,
                                                      unsigned seed);

}  // namespace beamchain
