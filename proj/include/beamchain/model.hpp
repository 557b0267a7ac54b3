#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "beamchain/errors.hpp"

namespace beamchain {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using MatrixXc = Eigen::MatrixXcd;
using Matrix24c = Eigen::Matrix<Complex, 2, 4>;

/// Strictly positive samples at equispaced nodes of [0,1], interpolated
/// piecewise linearly. Lipschitz by construction.
class CoefficientProfile {
public:
    explicit CoefficientProfile(std::vector<double> samples);

    double operator()(double zeta) const;  // zeta clamped to [0,1]
    double left_limit() const { return samples_.front(); }
    double right_limit() const { return samples_.back(); }
    double min_value() const;
    /// max |slope| of the interpolant over [0,1]
    double lipschitz_unit() const;
    const std::vector<double>& samples() const { return samples_; }

private:
    std::vector<double> samples_;
};

struct BeamSegment {
    double length;           // l^j - l^{j-1}, > 0
    CoefficientProfile rho;  // mass density x cross-section area
    CoefficientProfile ei;   // flexural rigidity
};

/// Which pair of traces stays continuous across the junction.
/// 1: velocity & angular velocity; 2: velocity & moment;
/// 3: shear & angular velocity;    4: shear & moment.
enum class JunctionKind : int { K1 = 1, K2 = 2, K3 = 3, K4 = 4 };

struct ControllerSpec {
    MatrixXc A_c;  // n x n
    MatrixXc B_c;  // n x 2
    MatrixXc C_c;  // 2 x n
    Matrix2c D_c;  // 2 x 2
    int order() const { return static_cast<int>(A_c.rows()); }
    bool is_real() const;
};

struct JunctionSpec {
    JunctionKind kind = JunctionKind::K1;
    Matrix2c K = Matrix2c::Zero();
    std::optional<ControllerSpec> controller;  // replaces static K when set
};

enum class EndKind { Clamped, Pinned, Free, ShearHinge, Damped, General };

struct EndConditionSpec {
    EndKind kind = EndKind::Clamped;
    Matrix2c K0 = Matrix2c::Zero();  // Damped only
    Matrix24c W_B = Matrix24c::Zero();  // General only
    Matrix24c W_C = Matrix24c::Zero();
};

struct ChainModel {
    std::vector<BeamSegment> segments;
    std::vector<JunctionSpec> junctions;  // size = m - 1
    EndConditionSpec left_end, right_end;

    int segment_count() const { return static_cast<int>(segments.size()); }
    double total_length() const;
    bool is_real() const;  // all coupling data real -> real arithmetic downstream
};

/// Per-segment data of the chain rewritten on the unit interval:
/// Hamiltonian density H^j = diag(1/rho, ei) on zeta in [0,1] and the
/// symplectic block scale 1/length^2.
struct NormalizedSegment {
    double length;
    double p2_scale;  // 1 / length^2
    CoefficientProfile rho, ei;

    double H1(double zeta) const { return 1.0 / rho(zeta); }
    double H2(double zeta) const { return ei(zeta); }
};

struct NormalizedModel {
    std::vector<NormalizedSegment> segments;
    std::vector<JunctionSpec> junctions;
    EndConditionSpec left_end, right_end;
    bool is_real = true;

    int segment_count() const { return static_cast<int>(segments.size()); }
};

struct SegmentRegularity {
    double min_rho, min_ei;
    double lipschitz_rho, lipschitz_ei;  // physical (per meter)
};

struct RegularityReport {
    std::vector<SegmentRegularity> segments;
    bool pass = true;  // guaranteed by construction; margins recorded
    double min_coefficient() const;
};

struct JunctionMonotonicity {
    int junction = 0;
    double rho_minus = 0, rho_plus = 0, ei_minus = 0, ei_plus = 0;
    double margin_rho = 0;  // rho_plus - rho_minus, pass when >= 0
    double margin_ei = 0;   // ei_minus - ei_plus, pass when >= 0
    bool scalar_pass = true;
    double matrix_min_eig = 0;  // lambda_min of H^j(1) - H^{j+1}(0)
    bool matrix_pass = true;
    std::string violated;  // description of violated inequality, if any
};

struct MonotonicityReport {
    std::vector<JunctionMonotonicity> junctions;
    bool pass = true;
};

/// Parse and validate a ChainSpecDocument (already-parsed JSON).
/// strict = true rejects unknown fields; lenient collects warnings instead.
ChainModel build_chain(const nlohmann::json& doc, bool lenient = false,
                       std::vector<std::string>* warnings = nullptr);

/// Read a ChainSpecDocument from disk. Throws ParseError / SchemaError.
nlohmann::json load_config(const std::string& path);

RegularityReport validate_regularity(const ChainModel& model);
MonotonicityReport check_jump_monotonicity(const ChainModel& model);
NormalizedModel normalize(const ChainModel& model);

/// Boundary (W_B; W_C) pair realizing an end closure in trace coordinates
/// tau = (v, mu, sgn*F, -sgn*th), sgn = +1 left / -1 right.
std::pair<Matrix24c, Matrix24c> end_boundary_matrices(const EndConditionSpec& end,
                                                      bool left);

nlohmann::json chain_to_json(const ChainModel& model);

}  // namespace beamchain
