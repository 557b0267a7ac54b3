#include <doctest.h>

#include <cmath>
#include <random>

#include <beamchain/discretize.hpp>
#include <beamchain/model.hpp>
#include <beamchain/spectral.hpp>
#include <beamchain/timestep.hpp>

using namespace beamchain;
using nlohmann::json;

namespace {

json uniform_doc(const std::string& left, const std::string& right) {
    return {{"segments", {{{"length", 1.0}, {"rho", {1.0, 1.0}}, {"ei", {1.0, 1.0}}}}},
            {"junctions", json::array()},
            {"left_end", {{"kind", left}}},
            {"right_end", {{"kind", right}}}};
}

json damped_doc() {
    json doc = uniform_doc("damped", "pinned");
    doc["left_end"] = {{"kind", "damped"}, {"K0", {{1.0, 0.0}, {0.0, 1.0}}}};
    return doc;
}

RealBundle make(const json& doc, int N) {
    return assemble_typed<double>(normalize(build_chain(doc)), Grid{N});
}

}  // namespace

TEST_CASE("midpoint step conserves energy of conservative chains") {
    RealBundle b = make(uniform_doc("clamped", "free"), 32);
    Eigen::VectorXd x = random_state(b, 17);
    const double e0 = b.energy(x);
    MidpointStepper<double> stepper(b, 1e-3);
    for (int s = 0; s < 1000; ++s) x = stepper.step(x);
    CHECK(std::abs(b.energy(x) - e0) / e0 <= 1e-10);
}

TEST_CASE("midpoint step never increases energy of damped chains") {
    RealBundle b = make(damped_doc(), 32);
    Eigen::VectorXd x = random_state(b, 18);
    const double e0 = b.energy(x);
    MidpointStepper<double> stepper(b, 2e-3);
    double prev = e0;
    for (int s = 0; s < 400; ++s) {
        x = stepper.step(x);
        const double e = b.energy(x);
        CHECK(e <= prev + 1e-12 * e0);
        prev = e;
    }
}

TEST_CASE("one midpoint step multiplies an eigenvector by the Cayley factor") {
    RealBundle b = make(damped_doc(), 24);
    Spectrum s = eigenvalues(b);
    // pick a well-separated mid-spectrum eigenpair
    int pick = -1;
    for (int i = 0; i < s.eigenvalues.size(); ++i) {
        double a = std::abs(s.eigenvalues(i));
        if (a > 5.0 && a < 100.0 && s.eigenvalues(i).imag() > 0) { pick = i; break; }
    }
    REQUIRE(pick >= 0);
    const Complex lam = s.eigenvalues(pick);
    const double dt = 1e-3;
    const Complex factor = (1.0 + 0.5 * dt * lam) / (1.0 - 0.5 * dt * lam);

    ComplexBundle bc = assemble_typed<Complex>(
        normalize(build_chain(damped_doc())), Grid{24});
    Eigen::VectorXcd v = s.eigenvectors.col(pick);
    MidpointStepper<Complex> stepper(bc, dt);
    Eigen::VectorXcd v1 = stepper.step(v);
    CHECK((v1 - factor * v).norm() <= 1e-10 * v.norm() + 1e-6 * s.residuals(pick));
}

TEST_CASE("simulate") {
    SUBCASE("zero initial state gives the zero trace") {
        RealBundle b = make(uniform_doc("clamped", "free"), 16);
        EnergyTrace tr = simulate(b, Eigen::VectorXd::Zero(b.dim), 1.0, 1e-2);
        CHECK(tr.energies.maxCoeff() == 0.0);
    }
    SUBCASE("damped chain decays well below its initial energy") {
        RealBundle b = make(damped_doc(), 48);
        Spectrum s = eigenvalues(b);
        const double alpha = std::abs(s.abscissa);
        REQUIRE(alpha > 1e-3);
        Eigen::VectorXd x0 = initial_state_from_modes(b, s, 12, 19);
        const double T = 5.0 / alpha;
        const double dt = std::min(1e-2, 0.1 / slowest_band_limit(s, 12));
        EnergyTrace tr = simulate(b, x0, T, dt);
        CHECK(tr.energies(tr.energies.size() - 1) <= 1e-3 * tr.energies(0));
    }
    SUBCASE("the rigid kernel vector holds its energy") {
        json doc = {{"segments",
                     {{{"length", 1.0}, {"rho", {1.0, 1.0}}, {"ei", {1.0, 1.0}}},
                      {{"length", 1.0}, {"rho", {1.0, 1.0}}, {"ei", {1.0, 1.0}}}}},
                    {"junctions", {{{"kind", 1}, {"K", {{0.0, 0.0}, {0.0, 0.0}}}}}},
                    {"left_end", {{"kind", "damped"}, {"K0", {{1.0, 0.0}, {0.0, 0.0}}}}},
                    {"right_end", {{"kind", "free"}}}};
        RealBundle b = make(doc, 32);
        KernelInfo k = kernel_projection(b);
        REQUIRE(k.dim == 1);
        Eigen::VectorXd x0 = k.basis.col(0).real();
        EnergyTrace tr = simulate(b, x0, 10.0, 1e-2);
        const double e0 = tr.energies(0);
        CHECK(std::abs(tr.energies(tr.energies.size() - 1) - e0) <= 1e-10 * e0);
    }
    SUBCASE("identical inputs give bit-identical traces") {
        RealBundle b = make(damped_doc(), 16);
        Eigen::VectorXd x0 = random_state(b, 20);
        EnergyTrace t1 = simulate(b, x0, 0.5, 1e-3);
        EnergyTrace t2 = simulate(b, x0, 0.5, 1e-3);
        CHECK(t1.energies == t2.energies);
        CHECK(t1.config_hash == t2.config_hash);
    }
}

TEST_CASE("semigroup contraction along sampled trajectories") {
    RealBundle b = make(damped_doc(), 24);
    Eigen::VectorXd x = random_state(b, 21);
    EnergyTrace tr = simulate(b, x, 2.0, 1e-3);
    for (int i = 1; i < tr.energies.size(); ++i)
        CHECK(tr.energies(i) <= tr.energies(i - 1) + 1e-12 * tr.energies(0));
}

TEST_CASE("fit_decay") {
    SUBCASE("exact exponential trace") {
        EnergyTrace tr;
        const int n = 400;
        tr.times.resize(n);
        tr.energies.resize(n);
        for (int i = 0; i < n; ++i) {
            tr.times(i) = 10.0 * i / (n - 1);
            tr.energies(i) = 2.0 * std::exp(-0.6 * tr.times(i));
        }
        DecayFit f = fit_decay(tr);
        CHECK(f.M == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(f.eta == doctest::Approx(-0.6).epsilon(1e-6));
        CHECK_FALSE(f.non_decaying);
    }
    SUBCASE("oscillating trace fits the envelope rate") {
        EnergyTrace tr;
        const int n = 4000;
        tr.times.resize(n);
        tr.energies.resize(n);
        for (int i = 0; i < n; ++i) {
            tr.times(i) = 10.0 * i / (n - 1);
            tr.energies(i) =
                std::exp(-tr.times(i)) * (1.0 + 0.5 * std::cos(10.0 * tr.times(i)));
        }
        DecayFit f = fit_decay(tr);
        CHECK(f.eta == doctest::Approx(-1.0).epsilon(0.05));
    }
    SUBCASE("constant trace reports eta 0 with the non-decay flag") {
        EnergyTrace tr;
        const int n = 200;
        tr.times.resize(n);
        tr.energies.resize(n);
        for (int i = 0; i < n; ++i) {
            tr.times(i) = 5.0 * i / (n - 1);
            tr.energies(i) = 0.7;
        }
        DecayFit f = fit_decay(tr);
        CHECK(std::abs(f.eta) <= 1e-6);
        CHECK(f.non_decaying);
    }
    SUBCASE("too few samples rejected") {
        EnergyTrace tr;
        tr.times = Eigen::VectorXd::LinSpaced(10, 0, 1);
        tr.energies = Eigen::VectorXd::Ones(10);
        CHECK_THROWS_AS(fit_decay(tr), DimensionMismatch);
    }
}

TEST_CASE("fitted rate tracks twice the spectral abscissa") {
    RealBundle b = make(damped_doc(), 48);
    Spectrum s = eigenvalues(b);
    const double alpha = s.abscissa;
    REQUIRE(alpha < -1e-3);
    Eigen::VectorXd x0 = initial_state_from_modes(b, s, 12, 22);
    const double T = 5.0 / std::abs(alpha);
    const double dt = std::min(1e-2, 0.1 / slowest_band_limit(s, 12));
    EnergyTrace tr = simulate(b, x0, T, dt);
    DecayFit f = fit_decay(tr);
    CHECK(std::abs(f.eta - 2 * alpha) <= 0.15 * std::abs(2 * alpha));
}

TEST_CASE("projection efficacy for the rigid mode") {
    json doc = {{"segments",
                 {{{"length", 1.0}, {"rho", {1.0, 1.0}}, {"ei", {1.0, 1.0}}},
                  {{"length", 1.0}, {"rho", {1.0, 1.0}}, {"ei", {1.0, 1.0}}}}},
                {"junctions", {{{"kind", 1}, {"K", {{0.0, 0.0}, {0.0, 0.0}}}}}},
                {"left_end", {{"kind", "damped"}, {"K0", {{1.0, 0.0}, {0.0, 0.0}}}}},
                {"right_end", {{"kind", "free"}}}};
    RealBundle b = make(doc, 32);
    KernelInfo k = kernel_projection(b);
    REQUIRE(k.dim == 1);
    Spectrum s = eigenvalues(b);
    // mix plenty of kernel component into generic low-mode data
    Eigen::VectorXd raw =
        initial_state_from_modes(b, s, 12, 23) + 3.0 * k.basis.col(0).real();
    const double dt = std::min(1e-2, 0.1 / slowest_band_limit(s, 12));
    EnergyTrace tr_raw = simulate(b, raw, 30.0, dt);
    DecayFit f_raw = fit_decay(tr_raw);
    CHECK(f_raw.eta >= -0.05);  // pinned to the kernel energy floor

    Eigen::VectorXd projected = project_off_kernel(b, k, raw);
    EnergyTrace tr_p = simulate(b, projected, 30.0, dt);
    DecayFit f_p = fit_decay(tr_p);
    CHECK(f_p.eta < -1e-3);
}

TEST_CASE("default_dt is capped and positive") {
    RealBundle b = make(damped_doc(), 24);
    const double dt = default_dt(b);
    CHECK(dt > 0.0);
    CHECK(dt <= 1e-2);
}
