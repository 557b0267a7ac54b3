#include "beamchain/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace beamchain {

namespace {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// similarity transform to the energy-symmetrized generator
/// A~ = D^{1/2} A D^{-1/2} with D = M_h (diagonal, SPD)
template <class Scalar>
Mat<Scalar> symmetrized(const OperatorBundleT<Scalar>& b) {
    Eigen::VectorXd d = b.M.cwiseSqrt();
    Eigen::VectorXd di = d.cwiseInverse();
    return d.asDiagonal() * b.A * di.asDiagonal();
}

Eigen::VectorXcd solve_eigs(const Eigen::MatrixXd& A, Eigen::MatrixXcd* vecs) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(A, vecs != nullptr);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailure("QR iteration failed to converge");
    if (vecs) *vecs = es.eigenvectors();
    return es.eigenvalues();
}

Eigen::VectorXcd solve_eigs(const Eigen::MatrixXcd& A, Eigen::MatrixXcd* vecs) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, vecs != nullptr);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailure("QR iteration failed to converge");
    if (vecs) *vecs = es.eigenvectors();
    return es.eigenvalues();
}

}  // namespace

template <class Scalar>
Spectrum eigenvalues(const OperatorBundleT<Scalar>& b) {
    if (b.dim > kDenseDimLimit)
        throw DimensionTooLarge("dense eigensolver limited to dim <= " +
                                std::to_string(kDenseDimLimit));
    Mat<Scalar> At = symmetrized(b);
    Eigen::MatrixXcd vecs;
    Eigen::VectorXcd lam = solve_eigs(At, &vecs);

    // sort by descending real part, then imaginary part for determinism
    std::vector<int> order(lam.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int c) {
        if (lam(a).real() != lam(c).real()) return lam(a).real() > lam(c).real();
        return lam(a).imag() < lam(c).imag();
    });

    Spectrum s;
    s.eigenvalues.resize(lam.size());
    s.eigenvectors.resize(b.dim, lam.size());
    s.residuals.resize(lam.size());
    Eigen::VectorXd dinv = b.M.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXcd Wc = b.W.template cast<Complex>();
    Eigen::MatrixXcd Mc = b.M.template cast<Complex>().asDiagonal();
    for (int i = 0; i < lam.size(); ++i) {
        const int k = order[i];
        s.eigenvalues(i) = lam(k);
        Eigen::VectorXcd x = dinv.asDiagonal() * vecs.col(k);  // back to state coords
        x.normalize();
        s.eigenvectors.col(i) = x;
        s.residuals(i) = (Wc * x - lam(k) * (Mc * x)).norm();
    }
    s.abscissa = s.eigenvalues.real().maxCoeff();
    s.operator_norm = At.norm();
    return s;
}

double spectral_abscissa(const Spectrum& s) {
    if (s.eigenvalues.size() == 0) throw EmptySpectrum("spectrum is empty");
    return s.eigenvalues.real().maxCoeff();
}

double spectral_abscissa(const Spectrum& s, double exclude_below) {
    if (s.eigenvalues.size() == 0) throw EmptySpectrum("spectrum is empty");
    double a = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < s.eigenvalues.size(); ++i)
        if (std::abs(s.eigenvalues(i)) > exclude_below)
            a = std::max(a, s.eigenvalues(i).real());
    return a;
}

// ---------------------------------------------------------------------------
// resolvent
// ---------------------------------------------------------------------------

namespace {

/// 1 / sigma_min(C) by inverse iteration on the normal equations with a
/// cached LU factorization. Returns +inf when the factorization is singular.
double inv_sigma_min(const Eigen::MatrixXcd& C) {
    const int n = static_cast<int>(C.rows());
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(C);
    // singularity check via U diagonal
    double umax = 0.0, umin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        double u = std::abs(lu.matrixLU()(i, i));
        umax = std::max(umax, u);
        umin = std::min(umin, u);
    }
    if (!(umin > 0.0) || umin < 1e-300 * std::max(1.0, umax))
        return std::numeric_limits<double>::infinity();

    std::mt19937 rng(12345);
    std::normal_distribution<double> dist;
    Eigen::VectorXcd v(n);
    for (int i = 0; i < n; ++i) v(i) = Complex(dist(rng), dist(rng));
    v.normalize();
    double mu_prev = 0.0;
    for (int it = 0; it < 60; ++it) {
        Eigen::VectorXcd y = lu.adjoint().solve(v);
        Eigen::VectorXcd z = lu.solve(y);
        double mu = z.norm();  // approximates 1/sigma_min^2
        if (!std::isfinite(mu) || mu > 1e280) return std::numeric_limits<double>::infinity();
        v = z / mu;
        if (it > 2 && std::abs(mu - mu_prev) <= 1e-10 * mu) {
            mu_prev = mu;
            break;
        }
        mu_prev = mu;
    }
    return std::sqrt(mu_prev);
}

template <class Scalar>
Eigen::MatrixXcd shifted(const OperatorBundleT<Scalar>& b, double beta) {
    Eigen::MatrixXcd At = symmetrized(b).template cast<Complex>();
    Eigen::MatrixXcd C = -At;
    C.diagonal().array() += Complex(0.0, beta);
    return C;
}

std::vector<double> sweep_samples(double beta_min, double beta_max, int n) {
    std::vector<double> pts;
    const int n_lin = n / 2, n_log = n - n_lin;
    for (int i = 0; i < n_lin; ++i)
        pts.push_back(beta_min + (beta_max - beta_min) * i / std::max(1, n_lin - 1));
    const double lo = std::max(1e-3 * std::max(std::abs(beta_max), 1.0), 1e-6);
    if (beta_max > lo) {
        for (int i = 0; i < n_log; ++i) {
            double t = static_cast<double>(i) / std::max(1, n_log - 1);
            double v = lo * std::pow(beta_max / lo, t);
            if (v >= beta_min && v <= beta_max) pts.push_back(v);
            if (-v >= beta_min && -v <= beta_max) pts.push_back(-v);
        }
    }
    pts.push_back(beta_min);
    pts.push_back(beta_max);
    if (beta_min <= 0.0 && beta_max >= 0.0) pts.push_back(0.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](double a, double c) { return std::abs(a - c) < 1e-12; }),
              pts.end());
    return pts;
}

template <class Eval>
ResolventSweep run_sweep(Eval eval, double beta_min, double beta_max, int n_samples) {
    if (n_samples < 16) n_samples = 16;
    ResolventSweep sw;
    std::vector<double> pts = sweep_samples(beta_min, beta_max, n_samples);
    std::vector<double> vals(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
        vals[i] = eval(pts[i]);
        if (!std::isfinite(vals[i]) || vals[i] > kSentinelNorm) {
            vals[i] = std::numeric_limits<double>::infinity();
            sw.has_sentinel = true;
        }
    }
    // golden-section refinement around the three largest finite samples
    std::vector<size_t> order(pts.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t c) {
        double va = std::isfinite(vals[a]) ? vals[a] : std::numeric_limits<double>::max();
        double vc = std::isfinite(vals[c]) ? vals[c] : std::numeric_limits<double>::max();
        return va > vc;
    });
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double best = 0.0, best_beta = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        double v = std::isfinite(vals[i]) ? vals[i] : kSentinelNorm;
        if (v > best) { best = v; best_beta = pts[i]; }
    }
    for (size_t t = 0; t < std::min<size_t>(3, order.size()); ++t) {
        size_t i = order[t];
        double a = i > 0 ? pts[i - 1] : pts[i];
        double c = i + 1 < pts.size() ? pts[i + 1] : pts[i];
        if (c - a <= 0) continue;
        double x1 = c - gr * (c - a), x2 = a + gr * (c - a);
        double f1 = eval(x1), f2 = eval(x2);
        // enough contractions to push a genuine pole into the sentinel range
        for (int it = 0; it < 72; ++it) {
            if (!std::isfinite(f1) || f1 > kSentinelNorm || !std::isfinite(f2) ||
                f2 > kSentinelNorm) {
                sw.has_sentinel = true;
                break;
            }
            if (f1 < f2) {
                a = x1; x1 = x2; f1 = f2;
                x2 = a + gr * (c - a); f2 = eval(x2);
            } else {
                c = x2; x2 = x1; f2 = f1;
                x1 = c - gr * (c - a); f1 = eval(x1);
            }
            double f = std::max(f1, f2), xb = f1 > f2 ? x1 : x2;
            if (f > best && std::isfinite(f)) { best = f; best_beta = xb; }
        }
        if (std::isfinite(f1) && f1 > best && f1 <= kSentinelNorm) { best = f1; best_beta = x1; }
        if (std::isfinite(f2) && f2 > best && f2 <= kSentinelNorm) { best = f2; best_beta = x2; }
    }
    sw.betas = Eigen::Map<Eigen::VectorXd>(pts.data(), pts.size());
    sw.norms.resize(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) sw.norms(i) = vals[i];
    sw.sup_estimate = sw.has_sentinel ? std::numeric_limits<double>::infinity() : best;
    sw.argmax_beta = best_beta;
    return sw;
}

}  // namespace

template <class Scalar>
double resolvent_norm(const OperatorBundleT<Scalar>& b, double beta) {
    return inv_sigma_min(shifted(b, beta));
}

template <class Scalar>
ResolventSweep resolvent_sweep(const OperatorBundleT<Scalar>& b, double beta_min,
                               double beta_max, int n_samples) {
    return run_sweep([&](double beta) { return resolvent_norm(b, beta); }, beta_min, beta_max,
                     n_samples);
}

// ---------------------------------------------------------------------------
// kernel
// ---------------------------------------------------------------------------

template <class Scalar>
KernelInfo kernel_projection(const OperatorBundleT<Scalar>& b) {
    Mat<Scalar> At = symmetrized(b);
    Eigen::MatrixXcd Ac = At.template cast<Complex>();
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(Ac, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double scale = sv.size() ? sv(0) : 0.0;
    KernelInfo k;
    int keep = std::min<int>(8, static_cast<int>(sv.size()));
    k.singular_values = sv.tail(keep);
    Eigen::VectorXd dinv = b.M.cwiseSqrt().cwiseInverse();
    std::vector<int> kernel_cols;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) <= kKernelRelTol * scale) kernel_cols.push_back(i);
        else if (sv(i) <= kKernelWarnTol * scale)
            k.warnings.push_back("borderline singular value " + std::to_string(sv(i)) +
                                 " (scale " + std::to_string(scale) + ")");
    }
    k.dim = static_cast<int>(kernel_cols.size());
    k.basis.resize(b.dim, k.dim);
    for (int i = 0; i < k.dim; ++i)
        k.basis.col(i) = dinv.asDiagonal() * svd.matrixV().col(kernel_cols[i]);
    // M-orthonormalize (Gram-Schmidt; the symmetrized basis is already near
    // orthonormal in the M inner product)
    for (int i = 0; i < k.dim; ++i) {
        for (int j = 0; j < i; ++j) {
            Complex c = (k.basis.col(j).adjoint() * (b.M.asDiagonal() * k.basis.col(i)))(0);
            k.basis.col(i) -= c * k.basis.col(j);
        }
        double n2 = std::sqrt(
            (k.basis.col(i).adjoint() * (b.M.asDiagonal() * k.basis.col(i)))(0).real());
        if (n2 > 0) k.basis.col(i) /= n2;
    }
    return k;
}

template <class Scalar>
typename OperatorBundleT<Scalar>::Vector project_off_kernel(
    const OperatorBundleT<Scalar>& b, const KernelInfo& k,
    const typename OperatorBundleT<Scalar>::Vector& x) {
    Eigen::VectorXcd xc = x.template cast<Complex>();
    for (int i = 0; i < k.dim; ++i) {
        Complex c = (k.basis.col(i).adjoint() * (b.M.asDiagonal() * xc))(0);
        xc -= c * k.basis.col(i);
    }
    if constexpr (std::is_same_v<Scalar, double>) {
        return xc.real();
    } else {
        return xc;
    }
}

template <class Scalar>
Eigen::MatrixXcd kernel_complement_projector(const OperatorBundleT<Scalar>& b,
                                             const KernelInfo& k) {
    Eigen::MatrixXcd P = Eigen::MatrixXcd::Identity(b.dim, b.dim);
    for (int i = 0; i < k.dim; ++i)
        P -= k.basis.col(i) * (k.basis.col(i).adjoint() * b.M.asDiagonal().toDenseMatrix());
    return P;
}

template <class Scalar>
double resolvent_norm_deflated(const OperatorBundleT<Scalar>& b, const KernelInfo& k,
                               double beta) {
    Eigen::MatrixXcd C = shifted(b, beta);
    // shift kernel directions off zero in the symmetrized coordinates
    Eigen::VectorXd d = b.M.cwiseSqrt();
    for (int i = 0; i < k.dim; ++i) {
        Eigen::VectorXcd y = d.asDiagonal() * k.basis.col(i);
        C += y * y.adjoint();
    }
    return inv_sigma_min(C);
}

template <class Scalar>
ResolventSweep resolvent_sweep_deflated(const OperatorBundleT<Scalar>& b, const KernelInfo& k,
                                        double beta_min, double beta_max, int n_samples) {
    return run_sweep([&](double beta) { return resolvent_norm_deflated(b, k, beta); },
                     beta_min, beta_max, n_samples);
}

// ---------------------------------------------------------------------------
// mode-band initial data
// ---------------------------------------------------------------------------

namespace {

std::vector<int> slowest_modes(const Spectrum& s, int n_modes, double exclude_below) {
    std::vector<int> idx;
    for (int i = 0; i < s.eigenvalues.size(); ++i)
        if (std::abs(s.eigenvalues(i)) > exclude_below) idx.push_back(i);
    std::sort(idx.begin(), idx.end(), [&](int a, int c) {
        return std::abs(s.eigenvalues(a)) < std::abs(s.eigenvalues(c));
    });
    if (static_cast<int>(idx.size()) > n_modes) idx.resize(n_modes);
    return idx;
}

}  // namespace

template <class Scalar>
typename OperatorBundleT<Scalar>::Vector initial_state_from_modes(
    const OperatorBundleT<Scalar>& b, const Spectrum& s, int n_modes, unsigned seed,
    double exclude_below) {
    auto idx = slowest_modes(s, n_modes, exclude_below);
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(b.dim);
    for (int i : idx) x += Complex(dist(rng), dist(rng)) * s.eigenvectors.col(i);
    typename OperatorBundleT<Scalar>::Vector out(b.dim);
    if constexpr (std::is_same_v<Scalar, double>) out = x.real();
    else out = x;
    const double e = b.energy(out);
    if (e > 0) out /= std::sqrt(e);
    return out;
}

double slowest_band_limit(const Spectrum& s, int n_modes, double exclude_below) {
    auto idx = slowest_modes(s, n_modes, exclude_below);
    double m = 0.0;
    for (int i : idx) m = std::max(m, std::abs(s.eigenvalues(i)));
    return m;
}

// ---------------------------------------------------------------------------
// uniform beam oracle
// ---------------------------------------------------------------------------

namespace {

double closure_fn(BeamClosure c, double k) {
    switch (c) {
        case BeamClosure::ClampedFree: return std::cos(k) + 1.0 / std::cosh(k);
        case BeamClosure::PinnedPinned: return std::sin(k);
        case BeamClosure::ClampedClamped: return std::cos(k) - 1.0 / std::cosh(k);
        case BeamClosure::ClampedPinned: return std::sin(k) - std::cos(k) * std::tanh(k);
    }
    throw UnsupportedClosure("unknown uniform beam closure");
}

}  // namespace

std::vector<double> uniform_beam_oracle(BeamClosure closure, int count) {
    if (count < 1 || count > 20)
        throw UnsupportedClosure("oracle supports 1..20 roots, got " + std::to_string(count));
    std::vector<double> roots;
    double x = 0.3, step = 1e-2;
    double fx = closure_fn(closure, x);
    while (static_cast<int>(roots.size()) < count && x < 200.0) {
        double x2 = x + step;
        double f2 = closure_fn(closure, x2);
        if (fx == 0.0 && x > 0.5) roots.push_back(x);
        if (fx * f2 < 0.0) {
            double lo = x, hi = x2, flo = fx;
            while (hi - lo > 1e-12) {
                double mid = 0.5 * (lo + hi);
                double fm = closure_fn(closure, mid);
                if (flo * fm <= 0.0) hi = mid;
                else { lo = mid; flo = fm; }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        x = x2;
        fx = f2;
    }
    if (static_cast<int>(roots.size()) < count)
        throw ConvergenceFailure("failed to bracket enough characteristic roots");
    roots.resize(count);
    return roots;
}

std::vector<double> uniform_beam_frequencies(BeamClosure closure, int k, double rho, double ei,
                                             double L) {
    std::vector<double> out = uniform_beam_oracle(closure, k);
    const double factor = std::sqrt(ei / rho) / (L * L);
    for (double& v : out) v = v * v * factor;
    return out;
}

// ---------------------------------------------------------------------------
// csv + variant dispatch
// ---------------------------------------------------------------------------

void write_spectrum_csv(const Spectrum& s, const std::string& path) {
    std::ofstream out(path);
    out.precision(16);
    out << "re,im,residual\n";
    for (int i = 0; i < s.eigenvalues.size(); ++i)
        out << s.eigenvalues(i).real() << ',' << s.eigenvalues(i).imag() << ','
            << s.residuals(i) << '\n';
}

void write_sweep_csv(const ResolventSweep& s, const std::string& path) {
    std::ofstream out(path);
    out.precision(16);
    out << "beta,norm\n";
    for (int i = 0; i < s.betas.size(); ++i)
        out << s.betas(i) << ',' << s.norms(i) << '\n';
}

Spectrum eigenvalues(const OperatorBundle& b) {
    return std::visit([](const auto& bb) { return eigenvalues(bb); }, b);
}

ResolventSweep resolvent_sweep(const OperatorBundle& b, double beta_min, double beta_max,
                               int n_samples) {
    return std::visit(
        [&](const auto& bb) { return resolvent_sweep(bb, beta_min, beta_max, n_samples); }, b);
}

KernelInfo kernel_projection(const OperatorBundle& b) {
    return std::visit([](const auto& bb) { return kernel_projection(bb); }, b);
}

// explicit instantiations
template Spectrum eigenvalues<double>(const OperatorBundleT<double>&);
template Spectrum eigenvalues<Complex>(const OperatorBundleT<Complex>&);
template double resolvent_norm<double>(const OperatorBundleT<double>&, double);
template double resolvent_norm<Complex>(const OperatorBundleT<Complex>&, double);
template ResolventSweep resolvent_sweep<double>(const OperatorBundleT<double>&, double, double,
                                                int);
template ResolventSweep resolvent_sweep<Complex>(const OperatorBundleT<Complex>&, double,
                                                 double, int);
template KernelInfo kernel_projection<double>(const OperatorBundleT<double>&);
template KernelInfo kernel_projection<Complex>(const OperatorBundleT<Complex>&);
template OperatorBundleT<double>::Vector project_off_kernel<double>(
    const OperatorBundleT<double>&, const KernelInfo&, const OperatorBundleT<double>::Vector&);
template OperatorBundleT<Complex>::Vector project_off_kernel<Complex>(
    const OperatorBundleT<Complex>&, const KernelInfo&,
    const OperatorBundleT<Complex>::Vector&);
template Eigen::MatrixXcd kernel_complement_projector<double>(const OperatorBundleT<double>&,
                                                              const KernelInfo&);
template Eigen::MatrixXcd kernel_complement_projector<Complex>(const OperatorBundleT<Complex>&,
                                                               const KernelInfo&);
template OperatorBundleT<double>::Vector initial_state_from_modes<double>(
    const OperatorBundleT<double>&, const Spectrum&, int, unsigned, double);
template OperatorBundleT<Complex>::Vector initial_state_from_modes<Complex>(
    const OperatorBundleT<Complex>&, const Spectrum&, int, unsigned, double);
template double resolvent_norm_deflated<double>(const OperatorBundleT<double>&,
                                                const KernelInfo&, double);
template double resolvent_norm_deflated<Complex>(const OperatorBundleT<Complex>&,
                                                 const KernelInfo&, double);
template ResolventSweep resolvent_sweep_deflated<double>(const OperatorBundleT<double>&,
                                                         const KernelInfo&, double, double, int);
template ResolventSweep resolvent_sweep_deflated<Complex>(const OperatorBundleT<Complex>&,
                                                          const KernelInfo&, double, double,
                                                          int);

}  // namespace beamchain
