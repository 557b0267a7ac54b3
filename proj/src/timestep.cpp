#include "beamchain/timestep.hpp"

#include <cmath>
#include <fstream>
#include <random>

namespace beamchain {

template <class Scalar>
MidpointStepper<Scalar>::MidpointStepper(const OperatorBundleT<Scalar>& bundle, double dt)
    : bundle_(&bundle), dt_(dt) {
    if (!(dt > 0.0)) throw SingularSystem("midpoint step requires dt > 0");
    using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    M lhs = -0.5 * dt * bundle.W;
    lhs.diagonal() += bundle.M.template cast<Scalar>();
    rhs_ = 0.5 * dt * bundle.W;
    rhs_.diagonal() += bundle.M.template cast<Scalar>();
    lu_.compute(lhs);
    double umax = 0.0, umin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < lhs.rows(); ++i) {
        double u = std::abs(lu_.matrixLU()(i, i));
        umax = std::max(umax, u);
        umin = std::min(umin, u);
    }
    if (!(umin > 1e-14 * std::max(1.0, umax)))
        throw SingularSystem("midpoint system (M - dt/2 W) is numerically singular");
}

template <class Scalar>
typename MidpointStepper<Scalar>::Vector MidpointStepper<Scalar>::step(const Vector& x) const {
    if (x.size() != bundle_->dim)
        throw DimensionMismatch("state size does not match bundle dim");
    return lu_.solve(rhs_ * x);
}

template <class Scalar>
typename OperatorBundleT<Scalar>::Vector step_midpoint(
    const OperatorBundleT<Scalar>& b, const typename OperatorBundleT<Scalar>::Vector& x,
    double dt) {
    return MidpointStepper<Scalar>(b, dt).step(x);
}

template <class Scalar>
double default_dt(const OperatorBundleT<Scalar>& b) {
    using Vector = typename OperatorBundleT<Scalar>::Vector;
    std::mt19937 rng(99);
    std::normal_distribution<double> dist;
    Vector v(b.dim);
    for (int i = 0; i < b.dim; ++i) v(i) = Scalar(dist(rng));
    v.normalize();
    double lam = 1.0;
    for (int it = 0; it < 40; ++it) {
        Vector w = b.A * v;
        lam = w.norm();
        if (lam == 0.0) break;
        v = w / lam;
    }
    if (lam <= 0.0) lam = 1.0;
    return std::min(0.5 / lam, 1e-2);
}

template <class Scalar>
EnergyTrace simulate(const OperatorBundleT<Scalar>& b,
                     const typename OperatorBundleT<Scalar>::Vector& x0, double T, double dt) {
    if (!(T > 0.0)) throw SingularSystem("simulate requires T > 0");
    if (dt <= 0.0) dt = default_dt(b);
    const double steps_d = std::ceil(T / dt);
    if (steps_d > 1e7) throw SingularSystem("simulate: T/dt exceeds 1e7 steps");
    const int steps = static_cast<int>(steps_d);

    // decimate long runs so traces stay bounded
    const int max_samples = 20000;
    const int stride = std::max(1, (steps + max_samples - 1) / max_samples);

    MidpointStepper<Scalar> stepper(b, dt);
    EnergyTrace tr;
    tr.config_hash = b.config_hash();
    const int n_samples = steps / stride + 1;
    tr.times.resize(n_samples);
    tr.energies.resize(n_samples);
    typename OperatorBundleT<Scalar>::Vector x = x0;
    tr.times(0) = 0.0;
    tr.energies(0) = b.energy(x);
    int k = 1;
    for (int s = 1; s <= steps; ++s) {
        x = stepper.step(x);
        if (s % stride == 0 && k < n_samples) {
            tr.times(k) = s * dt;
            tr.energies(k) = b.energy(x);
            ++k;
        }
    }
    tr.times.conservativeResize(k);
    tr.energies.conservativeResize(k);
    return tr;
}

DecayFit fit_decay(const EnergyTrace& trace) {
    DecayFit fit;
    const int n = static_cast<int>(trace.times.size());
    if (n < 50) throw DimensionMismatch("fit_decay needs at least 50 samples");
    const double H0 = trace.energies(0);
    if (!(H0 > 0.0)) {
        fit.non_decaying = true;
        return fit;
    }
    const double T = trace.times(n - 1);
    const double t0 = T / 10.0;
    fit.window[0] = t0;
    fit.window[1] = T;

    // running peak envelope from the right
    Eigen::VectorXd env(n);
    double peak = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        peak = std::max(peak, trace.energies(i));
        env(i) = peak;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    const double floor_e = 1e-300;
    for (int i = 0; i < n; ++i) {
        if (trace.times(i) < t0) continue;
        double y = std::log(std::max(env(i), floor_e));
        double t = trace.times(i);
        sx += t; sy += y; sxx += t * t; sxy += t * y;
        ++count;
    }
    const double denom = count * sxx - sx * sx;
    double slope = 0.0, intercept = std::log(std::max(env(0), floor_e));
    if (std::abs(denom) > 0) {
        slope = (count * sxy - sx * sy) / denom;
        intercept = (sy - slope * sx) / count;
    }
    fit.eta = slope;
    fit.M = std::max(1.0, std::exp(intercept));
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
        if (trace.times(i) < t0) continue;
        double y = std::log(std::max(env(i), floor_e));
        res = std::max(res, std::abs(y - (intercept + slope * trace.times(i))));
    }
    fit.residual = res;
    fit.non_decaying = fit.eta >= -1e-9;
    return fit;
}

void write_energy_csv(const EnergyTrace& t, const std::string& path) {
    std::ofstream out(path);
    out.precision(16);
    out << "t,energy\n";
    for (int i = 0; i < t.times.size(); ++i)
        out << t.times(i) << ',' << t.energies(i) << '\n';
}

template <class Scalar>
typename OperatorBundleT<Scalar>::Vector random_state(const OperatorBundleT<Scalar>& b,
                                                      unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    typename OperatorBundleT<Scalar>::Vector x(b.dim);
    for (int i = 0; i < b.dim; ++i) {
        if constexpr (std::is_same_v<Scalar, double>) x(i) = dist(rng);
        else x(i) = Complex(dist(rng), dist(rng));
    }
    const double e = b.energy(x);
    if (e > 0) x /= std::sqrt(e);
    return x;
}

// explicit instantiations
template class MidpointStepper<double>;
template class MidpointStepper<Complex>;
template OperatorBundleT<double>::Vector step_midpoint<double>(
    const OperatorBundleT<double>&, const OperatorBundleT<double>::Vector&, double);
template OperatorBundleT<Complex>::Vector step_midpoint<Complex>(
    const OperatorBundleT<Complex>&, const OperatorBundleT<Complex>::Vector&, double);
template double default_dt<double>(const OperatorBundleT<double>&);
template double default_dt<Complex>(const OperatorBundleT<Complex>&);
template EnergyTrace simulate<double>(const OperatorBundleT<double>&,
                                      const OperatorBundleT<double>::Vector&, double, double);
template EnergyTrace simulate<Complex>(const OperatorBundleT<Complex>&,
                                       const OperatorBundleT<Complex>::Vector&, double, double);
template OperatorBundleT<double>::Vector random_state<double>(const OperatorBundleT<double>&,
                                                              unsigned);
template OperatorBundleT<Complex>::Vector random_state<Complex>(const OperatorBundleT<Complex>&,
                                                                unsigned);

}  // namespace beamchain
