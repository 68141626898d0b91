#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "mvbu/dynamics.hpp"
#include "mvbu/signals.hpp"
#include "test_support.hpp"

using namespace mvbu;
using namespace mvbu::dynamics;

namespace {

LinearSystem sdof(double m, double k, double c)
{
    LinearSystem s;
    s.mass = MatrixXd::Constant(1, 1, m);
    s.stiffness = MatrixXd::Constant(1, 1, k);
    s.damping = MatrixXd::Constant(1, 1, c);
    s.influence = VectorXd::Ones(1);
    return s;
}

MatrixXd shear_stack(const std::vector<double>& k)
{
    const int n = static_cast<int>(k.size());
    MatrixXd out = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        out(i, i) += k[i];
        if (i > 0) {
            out(i - 1, i - 1) += k[i];
            out(i - 1, i) -= k[i];
            out(i, i - 1) -= k[i];
        }
    }
    return out;
}

// det(K - w2 M) for a diagonal-mass 3x3 system, expanded by hand.
double char_poly(const MatrixXd& k, const std::vector<double>& m, double w2)
{
    const double a = k(0, 0) - w2 * m[0], b = k(0, 1), c = k(0, 2);
    const double d = k(1, 0), e = k(1, 1) - w2 * m[1], f = k(1, 2);
    const double g = k(2, 0), h = k(2, 1), i = k(2, 2) - w2 * m[2];
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
}

TimeSeries zeros(std::size_t n, double dt) { return TimeSeries(dt, std::vector<double>(n, 0.0)); }

// Largest pointwise error against cos(w t) up to t_end; a single sample on a
// crest would see the phase error squared.
double free_vibration_error_at(double t_end, double dt)
{
    const auto sys = sdof(1.0, 4.0 * M_PI * M_PI, 0.0);
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt)) + 1;
    IntegrationConfig cfg;
    cfg.dt = dt;
    const auto h = integrate(sys, zeros(steps, dt), cfg, InitialConditions{VectorXd::Ones(1), VectorXd::Zero(1)});
    double err = 0.0;
    for (int i = 0; i < h.steps(); ++i)
        err = std::max(err, std::abs(h.displacement(0, i) - std::cos(2.0 * M_PI * i * dt)));
    return err;
}

} // namespace

TEST_CASE("modal_first: single degree of freedom at 1 Hz")
{
    const auto r = modal_first(MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 4.0 * M_PI * M_PI));
    CHECK(r.frequency_hz == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.shape(0) == doctest::Approx(1.0));
}

TEST_CASE("modal_first: scaling stiffness by 4 doubles the frequency")
{
    const std::vector<double> m{7.5e4, 7.3e4, 5.5e4};
    const MatrixXd mass = Eigen::Vector3d(m[0], m[1], m[2]).asDiagonal();
    const MatrixXd k = shear_stack({140e6, 110e6, 60e6});
    const double f = modal_first(mass, k).frequency_hz;
    CHECK(modal_first(mass, 4.0 * k).frequency_hz == doctest::Approx(2.0 * f).epsilon(1e-12));
}

TEST_CASE("modal_first: three-story stack against characteristic polynomial bisection")
{
    const std::vector<double> m{7.5e4, 7.3e4, 5.5e4};
    const MatrixXd mass = Eigen::Vector3d(m[0], m[1], m[2]).asDiagonal();
    const MatrixXd k = shear_stack({140e6, 110e6, 60e6});

    // Scan for the first sign change of det(K - w2 M), then bisect.
    double lo = 0.0, step = 1.0;
    const double p0 = char_poly(k, m, 0.0);
    double hi = step;
    while (char_poly(k, m, hi) * p0 > 0.0) {
        lo = hi;
        hi += step;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (char_poly(k, m, mid) * p0 > 0.0 ? lo : hi) = mid;
    }
    const double f_oracle = std::sqrt(0.5 * (lo + hi)) / (2.0 * M_PI);
    const auto r = modal_first(mass, k);
    CHECK(r.frequency_hz == doctest::Approx(f_oracle).epsilon(1e-6));
    CHECK(r.shape.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("modal_first rejects a non-symmetric stiffness")
{
    MatrixXd k = MatrixXd::Identity(2, 2);
    k(0, 1) = 0.5;
    CHECK_THROWS_AS(modal_first(MatrixXd::Identity(2, 2), k), ValidationError);
}

TEST_CASE("stiffness-proportional damping")
{
    const MatrixXd k = shear_stack({3.0, 2.0, 1.0});
    CHECK(stiffness_proportional_damping(k, 1.5, 0.0).isZero());
    CHECK(stiffness_proportional_damping(MatrixXd::Ones(1, 1), 1.0, 0.04)(0, 0) ==
          doctest::Approx(0.04 / M_PI).epsilon(1e-14));
    CHECK(stiffness_proportional_coefficient(2.5, 0.02) == doctest::Approx(0.02 / (M_PI * 2.5)));
    CHECK_THROWS_AS(stiffness_proportional_damping(k, 0.0, 0.02), ValidationError);

    // The damping ratio of the calibrated mode is recovered from the modal quantities.
    const MatrixXd mass = Eigen::Vector3d(2.0, 1.5, 1.0).asDiagonal();
    const auto mode = modal_first(mass, k);
    const MatrixXd c = stiffness_proportional_damping(k, mode.frequency_hz, 0.05);
    const VectorXd& phi = mode.shape;
    const double zeta = phi.dot(c * phi) / (2.0 * 2.0 * M_PI * mode.frequency_hz * phi.dot(mass * phi));
    CHECK(zeta == doctest::Approx(0.05).epsilon(1e-10));
}

TEST_CASE("integrate: zero excitation gives a zero history")
{
    const auto sys = sdof(2.0, 50.0, 0.3);
    IntegrationConfig cfg;
    cfg.dt = 0.01;
    const auto h = integrate(sys, zeros(500, 0.01), cfg);
    CHECK(h.steps() == 500);
    CHECK(h.displacement.isZero());
    CHECK(h.velocity.isZero());
    CHECK(h.absolute_acceleration.isZero());
}

TEST_CASE("integrate: undamped free vibration keeps its amplitude over ten cycles")
{
    const double dt = 0.01; // T / 100
    const double w = 2.0 * M_PI;
    const auto sys = sdof(1.0, w * w, 0.0);
    IntegrationConfig cfg;
    cfg.dt = dt;
    const auto h = integrate(sys, zeros(1001, dt), cfg, InitialConditions{VectorXd::Ones(1), VectorXd::Zero(1)});

    // Per-cycle peak magnitude against the unit initial amplitude.
    for (int cycle = 0; cycle < 10; ++cycle) {
        double peak = 0.0;
        for (int i = cycle * 100; i < (cycle + 1) * 100; ++i) peak = std::max(peak, std::abs(h.displacement(0, i)));
        CHECK(std::abs(peak - 1.0) < 0.01);
    }

    // Average acceleration is exactly cos(n * 2 atan(w dt / 2)), so the only
    // error against cos(w t) is the period elongation of the scheme.
    const double discrete_w = 2.0 * std::atan(0.5 * w * dt) / dt;
    double vs_discrete = 0.0, vs_exact = 0.0;
    for (int i = 0; i < h.steps(); ++i) {
        vs_discrete = std::max(vs_discrete, std::abs(h.displacement(0, i) - std::cos(discrete_w * i * dt)));
        vs_exact = std::max(vs_exact, std::abs(h.displacement(0, i) - std::cos(w * i * dt)));
    }
    CHECK(vs_discrete < 1e-9);
    const double phase_drift = (w - discrete_w) * 10.0;
    CHECK(vs_exact == doctest::Approx(std::abs(std::sin(phase_drift / 2.0)) * 2.0).epsilon(0.02));
}

TEST_CASE("integrate: second-order convergence on free vibration")
{
    const double e1 = free_vibration_error_at(2.0, 0.02);
    const double e2 = free_vibration_error_at(2.0, 0.01);
    const double e3 = free_vibration_error_at(2.0, 0.005);
    CHECK(std::log2(e1 / e2) >= 1.9);
    CHECK(std::log2(e2 / e3) >= 1.9);
    CHECK(std::log2(e2 / e3) < 2.1);
}

TEST_CASE("integrate: peak response matches a frequency-domain solution")
{
    const double dt = 0.005;
    const double fn = 2.0, zeta = 0.05;
    const double wn = 2.0 * M_PI * fn;
    const auto sys = sdof(1.0, wn * wn, 2.0 * zeta * wn);

    // Excitation followed by a quiet tail long enough for the response to decay.
    auto g = test::broadband(4000, dt, 1.0, 11);
    g.values.resize(16384, 0.0);
    IntegrationConfig cfg;
    cfg.dt = dt;
    const auto h = integrate(sys, g, cfg);

    const std::size_t n = g.size();
    auto spec = signals::rfft(g.view(), n);
    for (std::size_t j = 0; j < spec.size(); ++j) {
        const double w = 2.0 * M_PI * static_cast<double>(j) / (static_cast<double>(n) * dt);
        const std::complex<double> den(wn * wn - w * w, 2.0 * zeta * wn * w);
        spec[j] = -spec[j] / den;
    }
    const auto u = signals::irfft(spec, n);

    double peak_td = 0.0;
    for (int i = 0; i < h.steps(); ++i) peak_td = std::max(peak_td, std::abs(h.displacement(0, i)));
    CHECK(peak_td == doctest::Approx(test::max_abs(u)).epsilon(0.02));
}

TEST_CASE("integrate: energy balance on a damped three-story stack")
{
    LinearSystem sys;
    sys.mass = Eigen::Vector3d(7.5e4, 7.3e4, 5.5e4).asDiagonal();
    sys.stiffness = shear_stack({140e6, 110e6, 60e6});
    const auto mode = modal_first(sys.mass, sys.stiffness);
    sys.damping = stiffness_proportional_damping(sys.stiffness, mode.frequency_hz, 0.04);
    sys.influence = VectorXd::Ones(3);

    const double dt = 0.01;
    const auto g = test::broadband(3000, dt, 1.0, 5);
    IntegrationConfig cfg;
    cfg.dt = dt;
    const auto h = integrate(sys, g, cfg);

    const VectorXd m_iota = sys.mass * sys.influence;
    double input = 0.0, dissipated = 0.0;
    for (int i = 1; i < h.steps(); ++i) {
        const VectorXd v0 = h.velocity.col(i - 1), v1 = h.velocity.col(i);
        input += -0.5 * dt * (v0.dot(m_iota) * g.values[i - 1] + v1.dot(m_iota) * g.values[i]);
        dissipated += 0.5 * dt * (v0.dot(sys.damping * v0) + v1.dot(sys.damping * v1));
    }
    const VectorXd d = h.displacement.col(h.steps() - 1), v = h.velocity.col(h.steps() - 1);
    const double kinetic = 0.5 * v.dot(sys.mass * v);
    const double strain = 0.5 * d.dot(sys.stiffness * d);
    CHECK(input > 0.0);
    CHECK(std::abs(input - kinetic - strain - dissipated) < 0.005 * input);
}

TEST_CASE("integrate: absolute acceleration adds the ground")
{
    const auto sys = sdof(1.0, 30.0, 0.2);
    const auto g = test::broadband(400, 0.01, 0.5, 3);
    IntegrationConfig cfg;
    const auto h = integrate(sys, g, cfg);
    for (int i = 0; i < h.steps(); ++i)
        CHECK(h.absolute_acceleration(0, i) == doctest::Approx(h.acceleration(0, i) + g.values[i]).epsilon(1e-14));
}

TEST_CASE("integrate: linear restoring adapter reproduces the linear path")
{
    LinearSystem lin;
    lin.mass = Eigen::Vector3d(7.5e4, 7.3e4, 5.5e4).asDiagonal();
    lin.stiffness = shear_stack({140e6, 110e6, 60e6});
    const double a1 = stiffness_proportional_coefficient(modal_first(lin.mass, lin.stiffness).frequency_hz, 0.04);
    lin.damping = a1 * lin.stiffness;
    lin.influence = VectorXd::Ones(3);

    const auto g = test::broadband(2000, 0.01, 2.0, 17);
    IntegrationConfig cfg;
    cfg.newton_tol = 1e-6;
    const auto ref = integrate(lin, g, cfg);

    for (auto mode : {DampingMode::Constant, DampingMode::Instantaneous}) {
        NonlinearSystem<LinearRestoring> nl{lin.mass, lin.influence, LinearRestoring(lin.stiffness), mode, a1};
        const auto h = integrate(nl, g, cfg);
        const double scale = ref.displacement.cwiseAbs().maxCoeff();
        CHECK((h.displacement - ref.displacement).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    }
}

namespace {

struct Diverging {
    struct State {};
    int dof_count() const { return 1; }
    State initial_state() const { return {}; }
    RestoringEval<State> evaluate(const State&, const VectorXd& d) const
    {
        RestoringEval<State> r;
        r.force = VectorXd::Constant(1, std::abs(d(0)) > 0.0 ? std::nan("") : 0.0);
        r.tangent = MatrixXd::Ones(1, 1);
        return r;
    }
};

} // namespace

TEST_CASE("integrate: Newton failure reports the step index")
{
    NonlinearSystem<Diverging> sys{MatrixXd::Ones(1, 1), VectorXd::Ones(1), Diverging{}};
    std::vector<double> g(10, 0.0);
    g[5] = 1.0;
    IntegrationConfig cfg;
    try {
        integrate(sys, TimeSeries(0.01, g), cfg);
        FAIL("expected a NumericalError");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("step 5") != std::string::npos);
    }
}

TEST_CASE("configuration validation")
{
    IntegrationConfig cfg;
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.dt = 0.01;
    cfg.newmark_beta = 0.6;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    const auto sys = sdof(1.0, 1.0, 0.0);
    IntegrationConfig ok;
    CHECK_THROWS_AS(integrate(sys, zeros(10, 0.02), ok), ValidationError);
}
