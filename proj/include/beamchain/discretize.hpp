#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "beamchain/model.hpp"

namespace beamchain {

struct Grid {
    int cells_per_segment = 200;  // N >= 8, uniform spacing h = 1/N
};

enum class DissipationMode { Auto, Off, On };

struct AssembleOptions {
    DissipationMode ad_mode = DissipationMode::Auto;
    double ad_coefficient = 0.01;  // scaled spectral filter; exact on affine profiles
};

/// One dissipative quadratic contribution -(legs x)* Kh (legs x) to the
/// energy rate, kept for stable evaluation and the power-balance breakdown.
template <class Scalar>
struct DissipationTerm {
    std::string name;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> legs;  // r x dim
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> Kh;    // r x r Hermitian PSD
};

/// Discrete generator in energy form: M_h A_h = W with W split exactly into a
/// skew part and a negative semidefinite Hermitian part.
template <class Scalar>
struct OperatorBundleT {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    int n_segments = 0;
    int cells = 0;             // N per segment
    int npts = 0;              // N + 1
    int beam_dim = 0;          // 2 m (N+1)
    int n_controller = 0;
    int dim = 0;               // beam_dim + n_controller

    Eigen::VectorXd M;         // diagonal energy Gram (physical energy weights)
    Matrix W;                  // M_h A_h, exactly skew + Hermitian-PSD-negative
    Matrix A;                  // A_h = M^{-1} W
    std::vector<DissipationTerm<Scalar>> dissipation_terms;
    struct ControllerCoupling {
        int junction = 0;
        int offset = 0;  // first controller coordinate in the state
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> legs;  // 2 x dim
        ControllerSpec spec;
    };
    std::vector<ControllerCoupling> controller_couplings;
    std::vector<Eigen::VectorXd> nodal_H1, nodal_H2;  // Hamiltonian density at grid nodes
    bool conservative = true;  // no damping and no spectral filter
    double ad_used = 0.0;

    // trace extraction rows (1 x dim), physical scaling, per segment and side
    struct SegmentTraces {
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> left;   // 4 x dim: v, th, mu, F
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> right;  // 4 x dim
    };
    std::vector<SegmentTraces> trace_rows;

    std::vector<double> segment_lengths;
    std::vector<JunctionSpec> junctions;
    EndConditionSpec left_end, right_end;

    double energy(const Vector& x) const;            // 1/2 x* M x
    double dissipation_rate(const Vector& x) const;  // Re(x* M A x), stable path
    /// Re(x* W x) accumulated in extended precision straight from W.
    double dissipation_rate_direct(const Vector& x) const;
    double filter_rate(const Vector& x) const;  // spectral-filter contribution (<= 0)
    uint64_t config_hash() const;
    int index(int seg, int comp, int node) const { return seg * 2 * npts + comp * npts + node; }
};

using RealBundle = OperatorBundleT<double>;
using ComplexBundle = OperatorBundleT<std::complex<double>>;
using OperatorBundle = std::variant<RealBundle, ComplexBundle>;

OperatorBundle assemble(const NormalizedModel& nm, const Grid& grid,
                        const AssembleOptions& opts = {});

template <class Scalar>
OperatorBundleT<Scalar> assemble_typed(const NormalizedModel& nm, const Grid& grid,
                                       const AssembleOptions& opts = {});

/// Physical one-sided traces and the port maps of the pointwise control and
/// observation operators, evaluated on a discrete state.
struct TraceVector {
    struct SideTraces {
        Complex v, th, mu, F;  // velocity, angular velocity, moment, shear flux
    };
    std::vector<SideTraces> left, right;        // per segment
    std::vector<Eigen::Vector2cd> B0;           // continuity residuals per junction
    std::vector<Eigen::Vector2cd> B;            // flux ports per junction
    std::vector<Eigen::Vector2cd> C;            // collocated observation per junction
    Eigen::Vector2cd B_left, C_left, B_right, C_right;  // end ports
    std::vector<Complex> left_selector;         // v(0), th(0), mu(0), F(0)
    std::vector<Complex> right_selector;        // v(1), th(1), mu(1), F(1) of last segment
};

template <class Scalar>
TraceVector traces(const OperatorBundleT<Scalar>& b,
                   const typename OperatorBundleT<Scalar>::Vector& x);

struct PowerBalanceTerm {
    std::string name;
    double raw_flux = 0.0;      // Re[-(EI w_zz)_z conj(w_t) + (EI w_zz) conj(w_tz)] terms
    double closed_power = 0.0;  // power through the closed port
};

struct PowerBalanceBreakdown {
    double lhs = 0.0;  // Re(x* M A x)
    double rhs = 0.0;  // sum of closed port powers from discrete traces
    std::vector<PowerBalanceTerm> terms;
    double residual() const { return lhs - rhs; }
};

template <class Scalar>
PowerBalanceBreakdown discrete_power_balance(const OperatorBundleT<Scalar>& b,
                                             const typename OperatorBundleT<Scalar>::Vector& x);

template <class Scalar>
double energy(const OperatorBundleT<Scalar>& b,
              const typename OperatorBundleT<Scalar>::Vector& x);

/// Matrix Market coordinate dumps of A_h and M_h for external cross-checks.
template <class Scalar>
void export_matrix_market(const OperatorBundleT<Scalar>& b, const std::string& path_A,
                          const std::string& path_M);

// variant helpers
int bundle_dim(const OperatorBundle& b);
bool bundle_is_real(const OperatorBundle& b);

}  // namespace beamchain
