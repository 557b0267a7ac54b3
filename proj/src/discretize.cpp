#include "beamchain/discretize.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace beamchain {

namespace {

struct SbpOps {
    Eigen::VectorXd sigma;      // diagonal norm (includes h)
    Eigen::MatrixXd stiff;      // P1 stiffness: Sigma D2 = -stiff + B S
    Eigen::RowVectorXd S0, SN;  // boundary derivative rows
};

SbpOps sbp_second_order(int N) {
    const double h = 1.0 / N;
    SbpOps ops;
    ops.sigma = Eigen::VectorXd::Constant(N + 1, h);
    ops.sigma(0) = ops.sigma(N) = h / 2;
    ops.stiff = Eigen::MatrixXd::Zero(N + 1, N + 1);
    for (int i = 0; i <= N; ++i) {
        ops.stiff(i, i) = 2.0 / h;
        if (i > 0) ops.stiff(i, i - 1) = -1.0 / h;
        if (i < N) ops.stiff(i, i + 1) = -1.0 / h;
    }
    ops.stiff(0, 0) = ops.stiff(N, N) = 1.0 / h;
    ops.S0 = Eigen::RowVectorXd::Zero(N + 1);
    ops.S0(0) = -1.5 / h; ops.S0(1) = 2.0 / h; ops.S0(2) = -0.5 / h;
    ops.SN = Eigen::RowVectorXd::Zero(N + 1);
    ops.SN(N) = 1.5 / h; ops.SN(N - 1) = -2.0 / h; ops.SN(N - 2) = 0.5 / h;
    return ops;
}

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

inline double re(double v) { return v; }
inline double re(const Complex& v) { return v.real(); }
inline double conj_prod_re(double a, double b) { return a * b; }
inline double conj_prod_re(const Complex& a, const Complex& b) {
    return (std::conj(a) * b).real();
}

template <class Scalar>
Scalar from_c(const Complex& z);
template <>
double from_c<double>(const Complex& z) { return z.real(); }
template <>
Complex from_c<Complex>(const Complex& z) { return z; }

template <class Scalar>
Complex to_c(const Scalar& v) { return Complex(v); }

template <class Scalar>
Mat<Scalar> cast_c(const MatrixXc& m) {
    Mat<Scalar> out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) out(r, c) = from_c<Scalar>(m(r, c));
    return out;
}

bool has_damping(const NormalizedModel& nm) {
    auto herm_nonzero = [](const Matrix2c& K) {
        return (0.5 * (K + K.adjoint())).norm() > 0.0;
    };
    if (nm.left_end.kind == EndKind::Damped && herm_nonzero(nm.left_end.K0)) return true;
    if (nm.left_end.kind == EndKind::General || nm.right_end.kind == EndKind::General)
        return true;  // treated as potentially dissipative
    for (const auto& j : nm.junctions) {
        if (j.controller) return true;
        if (herm_nonzero(j.K)) return true;
    }
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// assemble
// ---------------------------------------------------------------------------

template <class Scalar>
OperatorBundleT<Scalar> assemble_typed(const NormalizedModel& nm, const Grid& grid,
                                       const AssembleOptions& opts) {
    if (grid.cells_per_segment < 8)
        throw AssemblyDimension("grid needs at least 8 cells per segment, got " +
                                std::to_string(grid.cells_per_segment));
    if (nm.segments.empty()) throw AssemblyDimension("empty chain");

    const int N = grid.cells_per_segment;
    const int npts = N + 1;
    const int m = nm.segment_count();
    const SbpOps ops = sbp_second_order(N);
    const double h = 1.0 / N;

    int n_controller = 0;
    for (const auto& j : nm.junctions)
        if (j.controller) n_controller += j.controller->order();

    OperatorBundleT<Scalar> b;
    b.n_segments = m;
    b.cells = N;
    b.npts = npts;
    b.beam_dim = 2 * m * npts;
    b.n_controller = n_controller;
    b.dim = b.beam_dim + n_controller;
    b.junctions = nm.junctions;
    b.left_end = nm.left_end;
    b.right_end = nm.right_end;

    b.M = Eigen::VectorXd::Ones(b.dim);
    b.W = Mat<Scalar>::Zero(b.dim, b.dim);

    b.nodal_H1.resize(m);
    b.nodal_H2.resize(m);
    for (int j = 0; j < m; ++j) {
        b.nodal_H1[j].resize(npts);
        b.nodal_H2[j].resize(npts);
        for (int i = 0; i <= N; ++i) {
            const double z = static_cast<double>(i) / N;
            b.nodal_H1[j](i) = nm.segments[j].H1(z);
            b.nodal_H2[j](i) = nm.segments[j].H2(z);
        }
        b.segment_lengths.push_back(nm.segments[j].length);
    }

    // skew core and energy Gram
    for (int j = 0; j < m; ++j) {
        const double l = nm.segments[j].length;
        const double sc = nm.segments[j].p2_scale;
        const int r1 = b.index(j, 0, 0), r2 = b.index(j, 1, 0);
        for (int i = 0; i <= N; ++i) {
            b.M(r1 + i) = l * ops.sigma(i) * b.nodal_H1[j](i);
            b.M(r2 + i) = l * ops.sigma(i) * b.nodal_H2[j](i);
        }
        Eigen::MatrixXd B12 =
            l * sc * (b.nodal_H1[j].asDiagonal() * ops.stiff * b.nodal_H2[j].asDiagonal());
        b.W.block(r1, r2, npts, npts) += B12.template cast<Scalar>();
        b.W.block(r2, r1, npts, npts) -= B12.transpose().template cast<Scalar>();
    }

    // physical trace extraction rows: v, th, mu, F
    b.trace_rows.resize(m);
    auto trace4 = [&](int j, bool left_side) {
        Mat<Scalar> T = Mat<Scalar>::Zero(4, b.dim);
        const double l = nm.segments[j].length;
        const int r1 = b.index(j, 0, 0), r2 = b.index(j, 1, 0);
        const Eigen::RowVectorXd& S = left_side ? ops.S0 : ops.SN;
        const int node = left_side ? 0 : N;
        T(0, r1 + node) = Scalar(b.nodal_H1[j](node));
        T(2, r2 + node) = Scalar(b.nodal_H2[j](node));
        for (int i = 0; i <= N; ++i) {
            if (S(i) != 0.0) {
                T(1, r1 + i) = Scalar(S(i) * b.nodal_H1[j](i) / l);
                T(3, r2 + i) = Scalar(S(i) * b.nodal_H2[j](i) / l);
            }
        }
        return T;
    };
    for (int j = 0; j < m; ++j) {
        b.trace_rows[j].left = trace4(j, true);
        b.trace_rows[j].right = trace4(j, false);
    }

    auto add_pair = [&](const RowVec<Scalar>& a, const RowVec<Scalar>& c) {
        Mat<Scalar> P = a.adjoint() * c;
        b.W += P;
        b.W -= P.adjoint().eval();
    };
    auto add_quad = [&](const Matrix2c& K, const RowVec<Scalar>& a, const RowVec<Scalar>& c,
                        const std::string& name) {
        Mat<Scalar> legs(2, b.dim);
        legs.row(0) = a;
        legs.row(1) = c;
        Matrix2c Kh = 0.5 * (K + K.adjoint());
        Matrix2c Ks = K - Kh;
        Mat<Scalar> Qh = legs.adjoint() * cast_c<Scalar>(Kh) * legs;
        b.W -= (0.5 * (Qh + Qh.adjoint().eval())).eval();
        if (Ks.norm() > 0.0) {
            Mat<Scalar> Qs = legs.adjoint() * cast_c<Scalar>(Ks) * legs;
            b.W -= (0.5 * (Qs - Qs.adjoint().eval())).eval();
        }
        if (Kh.norm() > 0.0) {
            DissipationTerm<Scalar> term;
            term.name = name;
            term.legs = legs;
            term.Kh = cast_c<Scalar>(Kh);
            b.dissipation_terms.push_back(std::move(term));
            b.conservative = false;
        }
    };

    // ---- end closures -------------------------------------------------------
    auto close_end = [&](int j, bool left_side, const EndConditionSpec& end) {
        const Mat<Scalar>& T = left_side ? b.trace_rows[j].left : b.trace_rows[j].right;
        RowVec<Scalar> V = T.row(0), Th = T.row(1), Mu = T.row(2), F = T.row(3);
        const std::string port = left_side ? "left_end" : "right_end";
        const bool lf = left_side;
        switch (end.kind) {
            case EndKind::Clamped:
                lf ? add_pair(V, F) : add_pair(F, V);
                break;
            case EndKind::Pinned:
                if (lf) { add_pair(V, F); add_pair(Th, Mu); }
                else { add_pair(F, V); add_pair(Mu, Th); }
                break;
            case EndKind::Free:
                lf ? add_pair(Th, Mu) : add_pair(Mu, Th);
                break;
            case EndKind::ShearHinge:
                break;  // both conditions are natural in this scheme
            case EndKind::Damped:
                add_pair(Th, Mu);  // left end only (validated by the model layer)
                add_quad(end.K0, V, Th, port);
                break;
            case EndKind::General: {
                const double sgn = lf ? 1.0 : -1.0;
                Mat<Scalar> Tau(4, b.dim);
                Tau.row(0) = V;
                Tau.row(1) = Mu;
                Tau.row(2) = Scalar(sgn) * F;
                Tau.row(3) = Scalar(-sgn) * Th;
                Eigen::Matrix4cd Wm;
                Wm << end.W_B, end.W_C;
                Eigen::Matrix4cd S = Eigen::Matrix4cd::Zero();
                S(0, 2) = S(2, 0) = S(1, 3) = S(3, 1) = 1.0;
                Eigen::Matrix4cd test = Wm.adjoint() * S * Wm - S;
                Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(
                    (0.5 * (test + test.adjoint())).eval());
                if (es.eigenvalues()(0) < -1e-10 * std::max(1.0, test.norm()))
                    throw UnsupportedClosure(
                        port + ": boundary matrices are not impedance passive (margin " +
                        std::to_string(es.eigenvalues()(0)) + ")");
                Eigen::Matrix4cd Wi = Wm.inverse();
                Eigen::Matrix4cd St = Wi.adjoint() * S * Wi;
                Mat<Scalar> R = cast_c<Scalar>(end.W_B) * Tau;
                Mat<Scalar> C = cast_c<Scalar>(end.W_C) * Tau;
                Mat<Scalar> G = Tau.row(0).adjoint() * Tau.row(2) +
                                Tau.row(1).adjoint() * Tau.row(3);
                Mat<Scalar> Delta =
                    -(R.adjoint() * cast_c<Scalar>((0.5 * St.topLeftCorner(2, 2)).eval()) +
                      C.adjoint() * cast_c<Scalar>(St.bottomLeftCorner(2, 2).eval())) *
                    R;
                Mat<Scalar> total = G + Delta;
                Mat<Scalar> TH = (0.5 * (total + total.adjoint().eval())).eval();
                b.W += (total - TH).eval();
                b.W += TH;
                Matrix2c Kh = -0.5 * St.bottomRightCorner(2, 2);
                Kh = 0.5 * (Kh + Kh.adjoint().eval());
                if (Kh.norm() > 1e-13 * std::max(1.0, St.norm())) {
                    DissipationTerm<Scalar> term;
                    term.name = port;
                    term.legs = C;
                    term.Kh = cast_c<Scalar>(Kh);
                    b.dissipation_terms.push_back(std::move(term));
                    b.conservative = false;
                }
                break;
            }
        }
    };
    close_end(0, true, nm.left_end);
    close_end(m - 1, false, nm.right_end);

    // ---- junction closures ----------------------------------------------------
    int ctrl_offset = b.beam_dim;
    for (int q = 0; q + 1 < m; ++q) {
        const JunctionSpec& spec = nm.junctions[q];
        const Mat<Scalar>& Tm = b.trace_rows[q].right;
        const Mat<Scalar>& Tp = b.trace_rows[q + 1].left;
        RowVec<Scalar> Wv = 0.5 * (Tm.row(0) + Tp.row(0));
        RowVec<Scalar> Phi = 0.5 * (Tm.row(1) + Tp.row(1));
        RowVec<Scalar> MA = 0.5 * (Tm.row(2) + Tp.row(2));
        RowVec<Scalar> FA = 0.5 * (Tm.row(3) + Tp.row(3));
        RowVec<Scalar> Dv = Tm.row(0) - Tp.row(0);
        RowVec<Scalar> Dmu = Tm.row(2) - Tp.row(2);

        add_pair(FA, Dv);
        add_pair(Dmu, Phi);

        RowVec<Scalar> leg1, leg2;
        switch (spec.kind) {
            case JunctionKind::K1: leg1 = Wv; leg2 = Phi; break;
            case JunctionKind::K2: leg1 = Wv; leg2 = MA; break;
            case JunctionKind::K3: leg1 = -FA; leg2 = Phi; break;
            case JunctionKind::K4: leg1 = -FA; leg2 = MA; break;
        }
        const std::string port = "junction_" + std::to_string(q);
        if (!spec.controller) {
            if (spec.K.norm() > 0.0) add_quad(spec.K, leg1, leg2, port);
        } else {
            const ControllerSpec& c = *spec.controller;
            add_quad(c.D_c, leg1, leg2, port);
            const int n = c.order();
            typename OperatorBundleT<Scalar>::ControllerCoupling coup;
            coup.junction = q;
            coup.offset = ctrl_offset;
            coup.legs.resize(2, b.dim);
            coup.legs.row(0) = leg1;
            coup.legs.row(1) = leg2;
            coup.spec = c;
            if (n > 0) {
                Mat<Scalar> Acs = cast_c<Scalar>(c.A_c);
                Mat<Scalar> Bcs = cast_c<Scalar>(c.B_c);
                Mat<Scalar> Ccs = cast_c<Scalar>(c.C_c);
                b.W.block(0, ctrl_offset, b.dim, n) -= coup.legs.adjoint() * Ccs;
                b.W.block(ctrl_offset, 0, n, b.dim) += Bcs * coup.legs;
                b.W.block(ctrl_offset, ctrl_offset, n, n) += Acs;
                ctrl_offset += n;
            }
            b.controller_couplings.push_back(std::move(coup));
            b.conservative = false;
        }
    }

    // ---- scaled spectral filter (keeps affine profiles invariant) ------------
    bool want_ad = false;
    switch (opts.ad_mode) {
        case DissipationMode::Auto: want_ad = has_damping(nm); break;
        case DissipationMode::On: want_ad = true; break;
        case DissipationMode::Off: want_ad = false; break;
    }
    if (want_ad && opts.ad_coefficient > 0.0) {
        b.ad_used = opts.ad_coefficient;
        b.conservative = false;
        Eigen::MatrixXd D2s = Eigen::MatrixXd::Zero(npts, npts);
        for (int i = 1; i < N; ++i) {
            D2s(i, i - 1) = 1.0; D2s(i, i) = -2.0; D2s(i, i + 1) = 1.0;
        }
        for (int j = 0; j < m; ++j) {
            const double scale = opts.ad_coefficient / (nm.segments[j].length * h);
            for (int comp = 0; comp < 2; ++comp) {
                const Eigen::VectorXd& Hk = comp == 0 ? b.nodal_H1[j] : b.nodal_H2[j];
                Eigen::MatrixXd G = D2s * Hk.asDiagonal();
                Eigen::MatrixXd Q(npts, npts);
                Q.setZero();
                Q.selfadjointView<Eigen::Lower>().rankUpdate(G.transpose(), scale);
                Eigen::MatrixXd Qfull = Q.selfadjointView<Eigen::Lower>();
                const int r = b.index(j, comp, 0);
                b.W.block(r, r, npts, npts) -= Qfull.template cast<Scalar>();
            }
        }
    }

    b.A = b.M.cwiseInverse().asDiagonal() * b.W;
    return b;
}

// ---------------------------------------------------------------------------
// energy / dissipation evaluation
// ---------------------------------------------------------------------------

template <class Scalar>
double OperatorBundleT<Scalar>::energy(const Vector& x) const {
    if (x.size() != dim) throw DimensionMismatch("state size does not match bundle dim");
    long double acc = 0.0L;
    for (int i = 0; i < dim; ++i) acc += static_cast<long double>(M(i)) * std::norm(x(i));
    return 0.5 * static_cast<double>(acc);
}

template <class Scalar>
double OperatorBundleT<Scalar>::filter_rate(const Vector& x) const {
    if (ad_used == 0.0) return 0.0;
    const double h = 1.0 / cells;
    long double acc = 0.0L;
    for (int j = 0; j < n_segments; ++j) {
        const double scale = ad_used / (segment_lengths[j] * h);
        for (int comp = 0; comp < 2; ++comp) {
            const Eigen::VectorXd& Hk = comp == 0 ? nodal_H1[j] : nodal_H2[j];
            const int r = index(j, comp, 0);
            for (int i = 1; i < cells; ++i) {
                Scalar d = Scalar(Hk(i - 1)) * x(r + i - 1) -
                           Scalar(2.0 * Hk(i)) * x(r + i) + Scalar(Hk(i + 1)) * x(r + i + 1);
                acc += scale * std::norm(d);
            }
        }
    }
    return -static_cast<double>(acc);
}

template <class Scalar>
double OperatorBundleT<Scalar>::dissipation_rate(const Vector& x) const {
    if (x.size() != dim) throw DimensionMismatch("state size does not match bundle dim");
    long double acc = 0.0L;
    for (const auto& t : dissipation_terms) {
        Vector z = t.legs * x;
        acc -= static_cast<long double>(re((z.adjoint() * t.Kh * z)(0, 0)));
    }
    for (const auto& c : controller_couplings) {
        const int n = c.spec.order();
        if (n == 0) continue;  // D_c-only: covered by the dissipation term
        Vector z = c.legs * x;
        Eigen::VectorXcd zc(2), xc(n);
        zc << to_c(z(0)), to_c(z(1));
        for (int i = 0; i < n; ++i) xc(i) = to_c(x(c.offset + i));
        // Re[xc* A_c xc + xc* B_c z - z* C_c xc]; the D_c part is recorded above
        Complex v = (xc.adjoint() * (c.spec.A_c * xc + c.spec.B_c * zc))(0) -
                    (zc.adjoint() * (c.spec.C_c * xc))(0);
        acc += static_cast<long double>(v.real());
    }
    acc += static_cast<long double>(filter_rate(x));
    return static_cast<double>(acc);
}

template <class Scalar>
double OperatorBundleT<Scalar>::dissipation_rate_direct(const Vector& x) const {
    Vector y = W * x;
    long double acc = 0.0L;
    for (int i = 0; i < dim; ++i) acc += static_cast<long double>(conj_prod_re(x(i), y(i)));
    return static_cast<double>(acc);
}

template <class Scalar>
uint64_t OperatorBundleT<Scalar>::config_hash() const {
    uint64_t hash = 1469598103934665603ull;
    auto mix = [&](const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            hash ^= p[i];
            hash *= 1099511628211ull;
        }
    };
    mix(&dim, sizeof dim);
    mix(M.data(), sizeof(double) * M.size());
    mix(W.data(), sizeof(Scalar) * W.size());
    return hash;
}

// ---------------------------------------------------------------------------
// traces
// ---------------------------------------------------------------------------

template <class Scalar>
TraceVector traces(const OperatorBundleT<Scalar>& b,
                   const typename OperatorBundleT<Scalar>::Vector& x) {
    if (x.size() != b.dim) throw DimensionMismatch("state size does not match bundle dim");
    TraceVector tv;
    auto side = [&](const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& T) {
        typename OperatorBundleT<Scalar>::Vector z = T * x;
        return TraceVector::SideTraces{to_c(z(0)), to_c(z(1)), to_c(z(2)), to_c(z(3))};
    };
    for (int j = 0; j < b.n_segments; ++j) {
        tv.left.push_back(side(b.trace_rows[j].left));
        tv.right.push_back(side(b.trace_rows[j].right));
    }
    for (int q = 0; q + 1 < b.n_segments; ++q) {
        const auto& a = tv.right[q];
        const auto& c = tv.left[q + 1];
        Eigen::Vector2cd B0, B, C;
        const Complex dv = a.v - c.v, dth = a.th - c.th, dmu = a.mu - c.mu;
        const Complex gf = -a.F + c.F;
        const Complex w = 0.5 * (a.v + c.v), phi = 0.5 * (a.th + c.th);
        const Complex mua = 0.5 * (a.mu + c.mu), fa = 0.5 * (a.F + c.F);
        switch (b.junctions[q].kind) {
            case JunctionKind::K1: B0 << dv, dth; B << gf, dmu; C << w, phi; break;
            case JunctionKind::K2: B0 << dv, dmu; B << gf, dth; C << w, mua; break;
            case JunctionKind::K3: B0 << gf, dth; B << dv, dmu; C << -fa, phi; break;
            case JunctionKind::K4: B0 << gf, dmu; B << dv, dth; C << -fa, mua; break;
        }
        tv.B0.push_back(B0);
        tv.B.push_back(B);
        tv.C.push_back(C);
    }
    auto end_ports = [&](const TraceVector::SideTraces& t, const EndConditionSpec& e,
                         bool left) {
        const double sgn = left ? 1.0 : -1.0;
        Eigen::Vector4cd tau(t.v, t.mu, sgn * t.F, -sgn * t.th);
        auto [WB, WC] = end_boundary_matrices(e, left);
        return std::pair<Eigen::Vector2cd, Eigen::Vector2cd>(WB * tau, WC * tau);
    };
    std::tie(tv.B_left, tv.C_left) = end_ports(tv.left.front(), b.left_end, true);
    std::tie(tv.B_right, tv.C_right) = end_ports(tv.right.back(), b.right_end, false);
    tv.left_selector = {tv.left.front().v, tv.left.front().th, tv.left.front().mu,
                        tv.left.front().F};
    tv.right_selector = {tv.right.back().v, tv.right.back().th, tv.right.back().mu,
                         tv.right.back().F};
    return tv;
}

// ---------------------------------------------------------------------------
// power balance
// ---------------------------------------------------------------------------

template <class Scalar>
PowerBalanceBreakdown discrete_power_balance(const OperatorBundleT<Scalar>& b,
                                             const typename OperatorBundleT<Scalar>::Vector& x) {
    PowerBalanceBreakdown pb;
    pb.lhs = b.dissipation_rate(x);
    TraceVector tv = traces(b, x);

    auto raw_left = [](const TraceVector::SideTraces& t) {
        return (std::conj(t.v) * t.F - std::conj(t.mu) * t.th).real();
    };
    auto raw_right = [](const TraceVector::SideTraces& t) {
        return (-std::conj(t.v) * t.F + std::conj(t.mu) * t.th).real();
    };
    auto general_term = [&](const std::string& name) {
        for (const auto& d : b.dissipation_terms)
            if (d.name == name) {
                auto z = (d.legs * x).eval();
                return re((z.adjoint() * d.Kh * z)(0, 0)) * -1.0;
            }
        return 0.0;
    };

    {
        PowerBalanceTerm term;
        term.name = "left_end";
        term.raw_flux = raw_left(tv.left.front());
        if (b.left_end.kind == EndKind::Damped) {
            Eigen::Vector2cd z(tv.left.front().v, tv.left.front().th);
            Matrix2c Kh = 0.5 * (b.left_end.K0 + b.left_end.K0.adjoint());
            term.closed_power = -(z.adjoint() * Kh * z)(0).real();
        } else if (b.left_end.kind == EndKind::General) {
            term.closed_power = general_term("left_end");
        }
        pb.terms.push_back(term);
    }
    {
        PowerBalanceTerm term;
        term.name = "right_end";
        term.raw_flux = raw_right(tv.right.back());
        if (b.right_end.kind == EndKind::General) term.closed_power = general_term("right_end");
        pb.terms.push_back(term);
    }

    for (int q = 0; q + 1 < b.n_segments; ++q) {
        PowerBalanceTerm term;
        term.name = "junction_" + std::to_string(q);
        term.raw_flux = raw_right(tv.right[q]) + raw_left(tv.left[q + 1]);
        const JunctionSpec& spec = b.junctions[q];
        const Eigen::Vector2cd z = tv.C[q];
        if (!spec.controller) {
            Matrix2c Kh = 0.5 * (spec.K + spec.K.adjoint());
            term.closed_power = -(z.adjoint() * Kh * z)(0).real();
        } else {
            const ControllerSpec& c = *spec.controller;
            const int n = c.order();
            int offset = b.beam_dim;
            for (const auto& cc : b.controller_couplings)
                if (cc.junction == q) offset = cc.offset;
            Eigen::VectorXcd xc(n);
            for (int i = 0; i < n; ++i) xc(i) = to_c(x(offset + i));
            Complex supply = (z.adjoint() * (c.D_c * z))(0);
            Complex internal(0, 0);
            if (n > 0) {
                internal = (xc.adjoint() * (c.A_c * xc + c.B_c * z))(0);
                supply += (z.adjoint() * (c.C_c * xc))(0);
            }
            term.closed_power = internal.real() - supply.real();
        }
        pb.terms.push_back(term);
    }

    if (b.ad_used > 0.0) {
        PowerBalanceTerm term;
        term.name = "spectral_filter";
        term.raw_flux = b.filter_rate(x);
        term.closed_power = term.raw_flux;
        pb.terms.push_back(term);
    }

    pb.rhs = 0.0;
    for (const auto& t : pb.terms) pb.rhs += t.closed_power;
    return pb;
}

template <class Scalar>
double energy(const OperatorBundleT<Scalar>& b,
              const typename OperatorBundleT<Scalar>::Vector& x) {
    return b.energy(x);
}

// ---------------------------------------------------------------------------
// Matrix Market export
// ---------------------------------------------------------------------------

namespace {

void mm_entry(std::ofstream& out, int r, int c, double v) {
    out << r + 1 << ' ' << c + 1 << ' ' << v << '\n';
}
void mm_entry(std::ofstream& out, int r, int c, const Complex& v) {
    out << r + 1 << ' ' << c + 1 << ' ' << v.real() << ' ' << v.imag() << '\n';
}

}  // namespace

template <class Scalar>
void export_matrix_market(const OperatorBundleT<Scalar>& b, const std::string& path_A,
                          const std::string& path_M) {
    const bool cplx = !std::is_same_v<Scalar, double>;
    {
        std::ofstream out(path_A);
        out.precision(17);
        out << "%%MatrixMarket matrix coordinate " << (cplx ? "complex" : "real")
            << " general\n";
        int nnz = 0;
        for (int i = 0; i < b.dim; ++i)
            for (int j = 0; j < b.dim; ++j)
                if (b.A(i, j) != Scalar(0)) ++nnz;
        out << b.dim << ' ' << b.dim << ' ' << nnz << '\n';
        for (int i = 0; i < b.dim; ++i)
            for (int j = 0; j < b.dim; ++j)
                if (b.A(i, j) != Scalar(0)) mm_entry(out, i, j, b.A(i, j));
    }
    {
        std::ofstream out(path_M);
        out.precision(17);
        out << "%%MatrixMarket matrix coordinate real general\n";
        out << b.dim << ' ' << b.dim << ' ' << b.dim << '\n';
        for (int i = 0; i < b.dim; ++i) mm_entry(out, i, i, b.M(i));
    }
}

// ---------------------------------------------------------------------------

OperatorBundle assemble(const NormalizedModel& nm, const Grid& grid,
                        const AssembleOptions& opts) {
    if (nm.is_real) return assemble_typed<double>(nm, grid, opts);
    return assemble_typed<Complex>(nm, grid, opts);
}

int bundle_dim(const OperatorBundle& b) {
    return std::visit([](const auto& bb) { return bb.dim; }, b);
}

bool bundle_is_real(const OperatorBundle& b) {
    return std::holds_alternative<RealBundle>(b);
}

// explicit instantiations
template struct OperatorBundleT<double>;
template struct OperatorBundleT<Complex>;
template OperatorBundleT<double> assemble_typed<double>(const NormalizedModel&, const Grid&,
                                                        const AssembleOptions&);
template OperatorBundleT<Complex> assemble_typed<Complex>(const NormalizedModel&, const Grid&,
                                                          const AssembleOptions&);
template TraceVector traces<double>(const OperatorBundleT<double>&,
                                    const OperatorBundleT<double>::Vector&);
template TraceVector traces<Complex>(const OperatorBundleT<Complex>&,
                                     const OperatorBundleT<Complex>::Vector&);
template PowerBalanceBreakdown discrete_power_balance<double>(
    const OperatorBundleT<double>&, const OperatorBundleT<double>::Vector&);
template PowerBalanceBreakdown discrete_power_balance<Complex>(
    const OperatorBundleT<Complex>&, const OperatorBundleT<Complex>::Vector&);
template double energy<double>(const OperatorBundleT<double>&,
                               const OperatorBundleT<double>::Vector&);
template double energy<Complex>(const OperatorBundleT<Complex>&,
                                const OperatorBundleT<Complex>::Vector&);
template void export_matrix_market<double>(const OperatorBundleT<double>&, const std::string&,
                                           const std::string&);
template void export_matrix_market<Complex>(const OperatorBundleT<Complex>&, const std::string&,
                                            const std::string&);

}  // namespace beamchain
