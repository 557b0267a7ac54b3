#include "beamchain/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace beamchain {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CoefficientProfile
// ---------------------------------------------------------------------------

CoefficientProfile::CoefficientProfile(std::vector<double> samples)
    : samples_(std::move(samples)) {
    if (samples_.size() < 2)
        throw NonPositiveCoefficient("coefficient profile needs at least 2 samples");
    for (double s : samples_)
        if (!(s > 0.0) || !std::isfinite(s))
            throw NonPositiveCoefficient("coefficient sample must be strictly positive, got " +
                                         std::to_string(s));
}

double CoefficientProfile::operator()(double zeta) const {
    const auto n = samples_.size();
    double t = std::clamp(zeta, 0.0, 1.0) * static_cast<double>(n - 1);
    auto i = std::min(static_cast<size_t>(t), n - 2);
    double frac = t - static_cast<double>(i);
    return samples_[i] * (1.0 - frac) + samples_[i + 1] * frac;
}

double CoefficientProfile::min_value() const {
    return *std::min_element(samples_.begin(), samples_.end());
}

double CoefficientProfile::lipschitz_unit() const {
    const auto n = samples_.size();
    const double dz = 1.0 / static_cast<double>(n - 1);
    double lip = 0.0;
    for (size_t i = 0; i + 1 < n; ++i)
        lip = std::max(lip, std::abs(samples_[i + 1] - samples_[i]) / dz);
    return lip;
}

// ---------------------------------------------------------------------------
// ChainModel basics
// ---------------------------------------------------------------------------

bool ControllerSpec::is_real() const {
    auto real = [](const MatrixXc& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; };
    return (A_c.size() == 0 || real(A_c)) && (B_c.size() == 0 || real(B_c)) &&
           (C_c.size() == 0 || real(C_c)) && D_c.imag().cwiseAbs().maxCoeff() == 0.0;
}

double ChainModel::total_length() const {
    double L = 0;
    for (const auto& s : segments) L += s.length;
    return L;
}

bool ChainModel::is_real() const {
    auto real2 = [](const Matrix2c& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; };
    auto real24 = [](const Matrix24c& m) { return m.imag().cwiseAbs().maxCoeff() == 0.0; };
    for (const auto& j : junctions) {
        if (!real2(j.K)) return false;
        if (j.controller && !j.controller->is_real()) return false;
    }
    for (const auto* e : {&left_end, &right_end}) {
        if (!real2(e->K0)) return false;
        if (e->kind == EndKind::General && (!real24(e->W_B) || !real24(e->W_C))) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// JSON parsing
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
    throw SchemaError("schema error at '" + where + "': " + what);
}

Complex parse_scalar(const json& v, const std::string& where) {
    if (v.is_number()) return Complex(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return Complex(v[0].get<double>(), v[1].get<double>());
    schema_fail(where, "expected number or [re, im] pair");
}

MatrixXc parse_matrix(const json& v, Eigen::Index rows, Eigen::Index cols,
                      const std::string& where) {
    if (!v.is_array()) schema_fail(where, "expected row-major array of arrays");
    if (rows >= 0 && static_cast<Eigen::Index>(v.size()) != rows)
        schema_fail(where, "expected " + std::to_string(rows) + " rows, got " +
                               std::to_string(v.size()));
    MatrixXc out(v.size(), std::max<Eigen::Index>(cols, 0));
    for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(v.size()); ++r) {
        const json& row = v[r];
        if (!row.is_array()) schema_fail(where, "row " + std::to_string(r) + " is not an array");
        if (r == 0 && cols < 0) out.resize(v.size(), row.size());
        if (static_cast<Eigen::Index>(row.size()) != out.cols())
            schema_fail(where, "inconsistent row length at row " + std::to_string(r));
        for (Eigen::Index c = 0; c < out.cols(); ++c)
            out(r, c) = parse_scalar(row[c], where);
    }
    return out;
}

void check_fields(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where, bool lenient,
                  std::vector<std::string>* warnings) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (allowed.count(it.key())) continue;
        if (lenient) {
            if (warnings)
                warnings->push_back("ignoring unknown field '" + it.key() + "' in " + where);
        } else {
            schema_fail(where, "unknown field '" + it.key() + "'");
        }
    }
}

std::vector<double> parse_positive_samples(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() < 2)
        schema_fail(where, "expected array of at least 2 samples");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) schema_fail(where, "samples must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

ControllerSpec parse_controller(const json& v, bool lenient,
                                std::vector<std::string>* warnings,
                                const std::string& where) {
    check_fields(v, {"A_c", "B_c", "C_c", "D_c"}, where, lenient, warnings);
    ControllerSpec c;
    if (!v.contains("D_c")) schema_fail(where, "controller requires D_c");
    MatrixXc D = parse_matrix(v["D_c"], 2, 2, where + ".D_c");
    c.D_c = D;
    const bool dynamic = v.contains("A_c");
    if (dynamic) {
        c.A_c = parse_matrix(v["A_c"], -1, -1, where + ".A_c");
        if (c.A_c.rows() != c.A_c.cols())
            throw DimensionMismatch("controller A_c must be square at " + where);
        const auto n = c.A_c.rows();
        if (!v.contains("B_c") || !v.contains("C_c"))
            schema_fail(where, "dynamic controller requires B_c and C_c");
        c.B_c = parse_matrix(v["B_c"], n, 2, where + ".B_c");
        c.C_c = parse_matrix(v["C_c"], 2, n, where + ".C_c");
    } else {
        if (v.contains("B_c") || v.contains("C_c"))
            throw DimensionMismatch("static controller (no A_c) must not have B_c/C_c at " +
                                    where);
        c.A_c.resize(0, 0);
        c.B_c.resize(0, 2);
        c.C_c.resize(2, 0);
    }
    return c;
}

bool herm_psd(const Matrix2c& K, double tol = 1e-12) {
    Matrix2c H = 0.5 * (K + K.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(H);
    double scale = std::max(1.0, H.norm());
    return es.eigenvalues().minCoeff() >= -tol * scale;
}

bool is_diag_k0_pattern(const Matrix2c& K0) {
    return std::abs(K0(0, 1)) == 0.0 && std::abs(K0(1, 0)) == 0.0 &&
           std::abs(K0(1, 1)) == 0.0 && K0(0, 0).real() > 0.0 &&
           K0(0, 0).imag() == 0.0;
}

bool herm_pd(const Matrix2c& K, double tol = 1e-12) {
    Matrix2c H = 0.5 * (K + K.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(H);
    return es.eigenvalues().minCoeff() > tol * std::max(1.0, H.norm());
}

EndConditionSpec parse_end(const json& v, bool left, bool lenient,
                           std::vector<std::string>* warnings,
                           const std::string& where) {
    check_fields(v, {"kind", "K0", "W_B", "W_C"}, where, lenient, warnings);
    if (!v.contains("kind")) schema_fail(where, "end condition requires 'kind'");
    const std::string kind = v["kind"].get<std::string>();
    EndConditionSpec e;
    if (kind == "clamped") e.kind = EndKind::Clamped;
    else if (kind == "pinned") e.kind = EndKind::Pinned;
    else if (kind == "free") e.kind = EndKind::Free;
    else if (kind == "shear_hinge") e.kind = EndKind::ShearHinge;
    else if (kind == "damped") e.kind = EndKind::Damped;
    else if (kind == "general") e.kind = EndKind::General;
    else schema_fail(where, "unknown end kind '" + kind + "'");

    if (e.kind == EndKind::Damped) {
        if (!left) schema_fail(where, "damped closure is supported on the left end only");
        if (!v.contains("K0")) schema_fail(where, "damped end requires K0");
        e.K0 = parse_matrix(v["K0"], 2, 2, where + ".K0");
        if (!is_diag_k0_pattern(e.K0) && !herm_pd(e.K0))
            schema_fail(where,
                        "K0 must be diag(k,0) with k>0 or have positive definite Hermitian part");
    } else if (v.contains("K0")) {
        schema_fail(where, "K0 only valid for kind 'damped'");
    }

    if (e.kind == EndKind::General) {
        if (!v.contains("W_B") || !v.contains("W_C"))
            schema_fail(where, "general end requires W_B and W_C");
        e.W_B = parse_matrix(v["W_B"], 2, 4, where + ".W_B");
        e.W_C = parse_matrix(v["W_C"], 2, 4, where + ".W_C");
        Eigen::Matrix4cd W;
        W << e.W_B, e.W_C;
        Eigen::JacobiSVD<Eigen::Matrix4cd> svd(W);
        if (svd.singularValues()(3) <= 1e-12 * svd.singularValues()(0))
            throw SingularBoundaryMatrix("stacked [W_B; W_C] is singular at " + where);
    } else if (v.contains("W_B") || v.contains("W_C")) {
        schema_fail(where, "W_B/W_C only valid for kind 'general'");
    }
    return e;
}

}  // namespace

ChainModel build_chain(const json& doc, bool lenient, std::vector<std::string>* warnings) {
    if (!doc.is_object()) throw SchemaError("chain document must be a JSON object");
    check_fields(doc,
                 {"segments", "junctions", "left_end", "right_end", "name", "description",
                  "defaults"},
                 "document", lenient, warnings);
    if (!doc.contains("segments") || !doc["segments"].is_array() || doc["segments"].empty())
        throw SchemaError("document requires a non-empty 'segments' array");

    ChainModel model;
    int si = 0;
    for (const auto& s : doc["segments"]) {
        const std::string where = "segments[" + std::to_string(si++) + "]";
        check_fields(s, {"length", "rho", "ei"}, where, lenient, warnings);
        if (!s.contains("length") || !s["length"].is_number())
            schema_fail(where, "requires numeric 'length'");
        double len = s["length"].get<double>();
        if (!(len > 0.0) || !std::isfinite(len))
            throw ZeroLengthSegment("segment length must be > 0 at " + where);
        if (!s.contains("rho") || !s.contains("ei"))
            schema_fail(where, "requires 'rho' and 'ei' sample arrays");
        model.segments.push_back(BeamSegment{
            len, CoefficientProfile(parse_positive_samples(s["rho"], where + ".rho")),
            CoefficientProfile(parse_positive_samples(s["ei"], where + ".ei"))});
    }

    const int m = model.segment_count();
    if (doc.contains("junctions")) {
        int ji = 0;
        for (const auto& j : doc["junctions"]) {
            const std::string where = "junctions[" + std::to_string(ji++) + "]";
            check_fields(j, {"kind", "K", "controller"}, where, lenient, warnings);
            JunctionSpec spec;
            if (!j.contains("kind") || !j["kind"].is_number_integer())
                schema_fail(where, "requires integer 'kind'");
            int k = j["kind"].get<int>();
            if (k < 1 || k > 4)
                schema_fail(where, "junction kind must be in {1,2,3,4}, got " + std::to_string(k));
            spec.kind = static_cast<JunctionKind>(k);
            if (j.contains("controller")) {
                if (j.contains("K"))
                    schema_fail(where, "junction takes either K or controller, not both");
                spec.controller =
                    parse_controller(j["controller"], lenient, warnings, where + ".controller");
                if (!herm_psd(spec.controller->D_c))
                    schema_fail(where + ".controller",
                                "D_c must have PSD Hermitian part for a dissipative junction");
            } else if (j.contains("K")) {
                spec.K = parse_matrix(j["K"], 2, 2, where + ".K");
                if (!herm_psd(spec.K))
                    schema_fail(where, "K must have positive semidefinite Hermitian part");
            }
            model.junctions.push_back(std::move(spec));
        }
    }
    if (static_cast<int>(model.junctions.size()) != m - 1)
        throw DimensionMismatch("expected " + std::to_string(m - 1) + " junctions for " +
                                std::to_string(m) + " segments, got " +
                                std::to_string(model.junctions.size()));

    if (!doc.contains("left_end") || !doc.contains("right_end"))
        throw SchemaError("document requires 'left_end' and 'right_end'");
    model.left_end = parse_end(doc["left_end"], true, lenient, warnings, "left_end");
    model.right_end = parse_end(doc["right_end"], false, lenient, warnings, "right_end");
    return model;
}

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& err) {
        throw ParseError("parse error in " + path + ": " + err.what());
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

double RegularityReport::min_coefficient() const {
    double v = std::numeric_limits<double>::infinity();
    for (const auto& s : segments) v = std::min({v, s.min_rho, s.min_ei});
    return v;
}

RegularityReport validate_regularity(const ChainModel& model) {
    RegularityReport rep;
    for (const auto& s : model.segments) {
        SegmentRegularity r;
        r.min_rho = s.rho.min_value();
        r.min_ei = s.ei.min_value();
        r.lipschitz_rho = s.rho.lipschitz_unit() / s.length;
        r.lipschitz_ei = s.ei.lipschitz_unit() / s.length;
        rep.segments.push_back(r);
    }
    rep.pass = rep.min_coefficient() > 0.0;
    return rep;
}

MonotonicityReport check_jump_monotonicity(const ChainModel& model) {
    MonotonicityReport rep;
    for (int j = 0; j + 1 < model.segment_count(); ++j) {
        JunctionMonotonicity r;
        r.junction = j;
        r.rho_minus = model.segments[j].rho.right_limit();
        r.rho_plus = model.segments[j + 1].rho.left_limit();
        r.ei_minus = model.segments[j].ei.right_limit();
        r.ei_plus = model.segments[j + 1].ei.left_limit();
        r.margin_rho = r.rho_plus - r.rho_minus;
        r.margin_ei = r.ei_minus - r.ei_plus;
        r.scalar_pass = r.margin_rho >= 0.0 && r.margin_ei >= 0.0;
        // matrix form: H^j(1) - H^{j+1}(0) with H = diag(1/rho, ei);
        // for diagonal densities this is PSD exactly when the scalar form holds
        double e1 = 1.0 / r.rho_minus - 1.0 / r.rho_plus;
        double e2 = r.ei_minus - r.ei_plus;
        r.matrix_min_eig = std::min(e1, e2);
        r.matrix_pass = r.matrix_min_eig >= 0.0;
        if (!r.scalar_pass) {
            std::ostringstream os;
            if (r.margin_rho < 0)
                os << "rho(l" << j + 1 << "-) = " << r.rho_minus << " > rho(l" << j + 1
                   << "+) = " << r.rho_plus;
            if (r.margin_ei < 0) {
                if (!os.str().empty()) os << "; ";
                os << "EI(l" << j + 1 << "-) = " << r.ei_minus << " < EI(l" << j + 1
                   << "+) = " << r.ei_plus;
            }
            r.violated = os.str();
            rep.pass = false;
        }
        rep.junctions.push_back(std::move(r));
    }
    return rep;
}

NormalizedModel normalize(const ChainModel& model) {
    NormalizedModel nm;
    for (const auto& s : model.segments)
        nm.segments.push_back(
            NormalizedSegment{s.length, 1.0 / (s.length * s.length), s.rho, s.ei});
    nm.junctions = model.junctions;
    nm.left_end = model.left_end;
    nm.right_end = model.right_end;
    nm.is_real = model.is_real();
    return nm;
}

// ---------------------------------------------------------------------------
// End closures as boundary matrices in trace coordinates
// tau = (v, mu, sgn*F, -sgn*th) with sgn = +1 (left) / -1 (right); each W_C
// row is the Sigma-partner of the matching W_B row.
// ---------------------------------------------------------------------------

std::pair<Matrix24c, Matrix24c> end_boundary_matrices(const EndConditionSpec& end, bool left) {
    Matrix24c WB = Matrix24c::Zero(), WC = Matrix24c::Zero();
    auto row = [](int i) {
        Eigen::RowVector4cd r = Eigen::RowVector4cd::Zero();
        r(i) = 1.0;
        return r;
    };
    switch (end.kind) {
        case EndKind::Clamped:  // v = 0 and th = 0
            WB.row(0) = row(0); WB.row(1) = row(3);
            WC.row(0) = row(2); WC.row(1) = row(1);
            break;
        case EndKind::Pinned:  // v = 0 and mu = 0
            WB.row(0) = row(0); WB.row(1) = row(1);
            WC.row(0) = row(2); WC.row(1) = row(3);
            break;
        case EndKind::Free:  // mu = 0 and F = 0
            WB.row(0) = row(1); WB.row(1) = row(2);
            WC.row(0) = row(3); WC.row(1) = row(0);
            break;
        case EndKind::ShearHinge:  // F = 0 and th = 0
            WB.row(0) = row(2); WB.row(1) = row(3);
            WC.row(0) = row(0); WC.row(1) = row(1);
            break;
        case EndKind::Damped: {
            // residuals of (-F, mu) = K0 (v, th); left end: tau3 = F, tau4 = -th
            const Matrix2c& K = end.K0;
            WB(0, 0) = -K(0, 0); WB(0, 2) = -1.0; WB(0, 3) = K(0, 1);
            WB(1, 0) = -K(1, 0); WB(1, 1) = 1.0; WB(1, 3) = K(1, 1);
            WC(0, 0) = -1.0;  // C = (-v, -th)
            WC(1, 3) = 1.0;
            break;
        }
        case EndKind::General:
            WB = end.W_B;
            WC = end.W_C;
            break;
    }
    (void)left;
    return {WB, WC};
}

nlohmann::json chain_to_json(const ChainModel& model) {
    json doc;
    auto mat_json = [](const MatrixXc& m) {
        json rows = json::array();
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < m.cols(); ++c) {
                Complex z = m(r, c);
                if (z.imag() == 0.0) row.push_back(z.real());
                else row.push_back(json::array({z.real(), z.imag()}));
            }
            rows.push_back(row);
        }
        return rows;
    };
    doc["segments"] = json::array();
    for (const auto& s : model.segments)
        doc["segments"].push_back(
            {{"length", s.length}, {"rho", s.rho.samples()}, {"ei", s.ei.samples()}});
    doc["junctions"] = json::array();
    for (const auto& j : model.junctions) {
        json jj = {{"kind", static_cast<int>(j.kind)}};
        if (j.controller) {
            json c = {{"D_c", mat_json(j.controller->D_c)}};
            if (j.controller->order() > 0) {
                c["A_c"] = mat_json(j.controller->A_c);
                c["B_c"] = mat_json(j.controller->B_c);
                c["C_c"] = mat_json(j.controller->C_c);
            }
            jj["controller"] = c;
        } else {
            jj["K"] = mat_json(j.K);
        }
        doc["junctions"].push_back(jj);
    }
    auto end_json = [&](const EndConditionSpec& e) {
        switch (e.kind) {
            case EndKind::Clamped: return json{{"kind", "clamped"}};
            case EndKind::Pinned: return json{{"kind", "pinned"}};
            case EndKind::Free: return json{{"kind", "free"}};
            case EndKind::ShearHinge: return json{{"kind", "shear_hinge"}};
            case EndKind::Damped: return json{{"kind", "damped"}, {"K0", mat_json(e.K0)}};
            case EndKind::General:
                return json{{"kind", "general"}, {"W_B", mat_json(e.W_B)},
                            {"W_C", mat_json(e.W_C)}};
        }
        return json{};
    };
    doc["left_end"] = end_json(model.left_end);
    doc["right_end"] = end_json(model.right_end);
    return doc;
}

}  // namespace beamchain
