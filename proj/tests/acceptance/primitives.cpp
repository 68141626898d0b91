// C1-C6: oracle and property checks of the building blocks.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>
#include <string>

#include "criteria.hpp"
#include "gradcheck.hpp"
#include "hysteresis_paths.hpp"
#include "mvbu/dynamics.hpp"
#include "mvbu/latent_inference.hpp"
#include "mvbu/lumped_model.hpp"
#include "mvbu/nn/tensor.hpp"
#include "mvbu/samplers.hpp"
#include "mvbu/signals.hpp"
#include "mvbu/takeda.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

namespace mvbu::acceptance {

namespace {

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

dynamics::LinearSystem sdof(double m, double k, double c)
{
    dynamics::LinearSystem s;
    s.mass = dynamics::MatrixXd::Constant(1, 1, m);
    s.stiffness = dynamics::MatrixXd::Constant(1, 1, k);
    s.damping = dynamics::MatrixXd::Constant(1, 1, c);
    s.influence = dynamics::VectorXd::Ones(1);
    return s;
}

dynamics::ResponseHistory free_vibration(double dt, std::size_t steps)
{
    dynamics::IntegrationConfig cfg;
    cfg.dt = dt;
    const TimeSeries quiet(dt, std::vector<double>(steps, 0.0));
    return dynamics::integrate(sdof(1.0, 4.0 * M_PI * M_PI, 0.0), quiet, cfg,
                               dynamics::InitialConditions{dynamics::VectorXd::Ones(1), dynamics::VectorXd::Zero(1)});
}

/// Largest pointwise error against cos(w t) up to t_end. Sampled at a single
/// time on a crest, the phase error would enter squared and overstate the order.
double max_error(double t_end, double dt)
{
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt)) + 1;
    const auto h = free_vibration(dt, steps);
    double err = 0.0;
    for (int i = 0; i < h.steps(); ++i)
        err = std::max(err, std::abs(h.displacement(0, i) - std::cos(2.0 * M_PI * i * dt)));
    return err;
}

} // namespace

Outcome check_autodiff()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    std::string worst_kind;
    for (auto kind : {nn::LayerKind::Linear, nn::LayerKind::Conv1d, nn::LayerKind::LeakyRelu,
                      nn::LayerKind::DownResidual, nn::LayerKind::UpResidual, nn::LayerKind::UpConv1d})
        for (int trial = 0; trial < 20; ++trial) {
            const double e = test::check_layer_kind(kind, rng).max_rel_error;
            if (e > worst) {
                worst = e;
                worst_kind = nn::to_string(kind);
            }
        }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst < 1e-4 && secs < 60.0,
            fmt("6 layer kinds x 20 shapes: worst relative error %.2e (%s), %.1f s", worst, worst_kind.c_str(), secs)};
}

Outcome check_probability()
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> mean(-1.5, 1.5), var(0.2, 3.0);

    // KL of 1-D pairs against quadrature of q log(q / p), log ratio written out.
    double kl_err = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double mq = mean(rng), vq = var(rng), mp = mean(rng), vp = var(rng);
        const double closed = nn::kl_diag_gaussians(std::vector{mq}, std::vector{vq}, std::vector{mp}, std::vector{vp});
        const double w = std::sqrt(vq);
        const auto f = [&](double z) {
            const double log_ratio = -0.5 * (z - mq) * (z - mq) / vq - 0.5 * std::log(vq) +
                                     0.5 * (z - mp) * (z - mp) / vp + 0.5 * std::log(vp);
            return test::normal_density(z, mq, vq) * log_ratio;
        };
        double quad = 0.0;
        for (double a = mq - 40.0 * w; a < mq + 40.0 * w; a += w) quad += test::adaptive_simpson(f, a, a + w, 1e-14);
        kl_err = std::max(kl_err, std::abs(quad - closed));
    }

    // Gaussian NLL against the sum of direct log densities.
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> xs(200), ms(200), lvs(200);
    double direct = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        xs[i] = normal(rng);
        ms[i] = normal(rng);
        lvs[i] = normal(rng);
        direct -= std::log(test::normal_density(xs[i], ms[i], std::exp(lvs[i])));
    }
    const double nll_err = std::abs(nn::gaussian_nll_value(xs, ms, lvs) - direct) / std::abs(direct);

    double quad_err = 0.0;
    std::mt19937_64 case_rng(2024);
    for (int i = 0; i < 100; ++i) {
        const auto [mx, vx, mt, vt] = test::random_latent_case(case_rng);
        const double closed = std::exp(
            inference::marginal_likelihood_closed(test::latent({mx}, {vx}), test::latent({mt}, {vt})).log_value);
        const double quad = test::latent_integral_quadrature(mx, vx, mt, vt);
        quad_err = std::max(quad_err, std::abs(closed - quad) / quad);
    }

    double worst_z = 0.0;
    std::mt19937_64 mc_rng(77);
    std::uniform_real_distribution<double> m2(-1.0, 1.0), v2(0.3, 0.9);
    for (int d = 1; d <= 10; ++d) {
        std::vector<double> mx, vx, mt, vt;
        for (int i = 0; i < d; ++i) {
            mx.push_back(m2(mc_rng));
            vx.push_back(v2(mc_rng));
            mt.push_back(m2(mc_rng));
            vt.push_back(v2(mc_rng));
        }
        const auto qx = test::latent(mx, vx), qt = test::latent(mt, vt);
        const double closed = inference::marginal_likelihood_closed(qx, qt).log_value;
        const auto mc = inference::marginal_likelihood_mc(qx, qt, 100000, 500 + d);
        worst_z = std::max(worst_z, std::abs(mc.log_value - closed) / mc.mc_std_error);
    }
    const bool pass = kl_err < 1e-6 && nll_err < 1e-6 && quad_err < 1e-6 && worst_z < 3.0;
    return {pass, fmt("KL vs quadrature %.1e, NLL vs direct %.1e (rel), closed form vs quadrature %.1e (rel, 100 "
                      "cases), MC worst %.2f SE (d = 1..10)",
                      kl_err, nll_err, quad_err, worst_z)};
}

Outcome check_integrator()
{
    // dt = T / 100 over ten cycles; unit initial displacement.
    const auto h = free_vibration(0.01, 1001);
    double amp_err = 0.0, pointwise = 0.0;
    for (int cycle = 0; cycle < 10; ++cycle) {
        double peak = 0.0;
        for (int i = cycle * 100; i < (cycle + 1) * 100; ++i) peak = std::max(peak, std::abs(h.displacement(0, i)));
        amp_err = std::max(amp_err, std::abs(peak - 1.0));
    }
    for (int i = 0; i < h.steps(); ++i)
        pointwise = std::max(pointwise, std::abs(h.displacement(0, i) - std::cos(2.0 * M_PI * i * 0.01)));

    const double e1 = max_error(2.0, 0.02), e2 = max_error(2.0, 0.01), e3 = max_error(2.0, 0.005);
    const double order = std::min(std::log2(e1 / e2), std::log2(e2 / e3));

    // Damped three-story shear stack under broadband input.
    dynamics::LinearSystem sys;
    sys.mass = Eigen::Vector3d(7.5e4, 7.3e4, 5.5e4).asDiagonal();
    sys.stiffness = dynamics::MatrixXd::Zero(3, 3);
    const double k[3] = {140e6, 110e6, 60e6};
    for (int i = 0; i < 3; ++i) {
        sys.stiffness(i, i) += k[i];
        if (i > 0) {
            sys.stiffness(i - 1, i - 1) += k[i];
            sys.stiffness(i - 1, i) -= k[i];
            sys.stiffness(i, i - 1) -= k[i];
        }
    }
    const auto mode = dynamics::modal_first(sys.mass, sys.stiffness);
    sys.damping = dynamics::stiffness_proportional_damping(sys.stiffness, mode.frequency_hz, 0.04);
    sys.influence = dynamics::VectorXd::Ones(3);
    const double dt = 0.01;
    const auto g = test::broadband(3000, dt, 1.0, 5);
    dynamics::IntegrationConfig cfg;
    cfg.dt = dt;
    const auto r = dynamics::integrate(sys, g, cfg);
    const dynamics::VectorXd m_iota = sys.mass * sys.influence;
    double input = 0.0, dissipated = 0.0;
    for (int i = 1; i < r.steps(); ++i) {
        const dynamics::VectorXd v0 = r.velocity.col(i - 1), v1 = r.velocity.col(i);
        input += -0.5 * dt * (v0.dot(m_iota) * g.values[i - 1] + v1.dot(m_iota) * g.values[i]);
        dissipated += 0.5 * dt * (v0.dot(sys.damping * v0) + v1.dot(sys.damping * v1));
    }
    const dynamics::VectorXd d = r.displacement.col(r.steps() - 1), v = r.velocity.col(r.steps() - 1);
    const double residual =
        std::abs(input - 0.5 * v.dot(sys.mass * v) - 0.5 * d.dot(sys.stiffness * d) - dissipated) / input;

    const bool pass = amp_err < 0.01 && order >= 1.9 && residual < 0.005;
    return {pass, fmt("per-cycle amplitude error %.2e (pointwise vs cos(wt) %.3f, period elongation), order %.3f, "
                      "energy residual %.2e",
                      amp_err, pointwise, order, residual)};
}

Outcome check_hysteresis()
{
    const auto law = test::table_law();
    const double kd_err = std::abs(takeda::unloading_stiffness(law, 40.0, 1568.0) - 49.0);
    const double ks_err = std::abs(takeda::slip_stiffness(law, 40.0, 1568.0, 0.0) - 11.2);
    const auto paths = test::check_random_paths(2024, 1000);

    const takeda::TakedaParameters p;
    const auto g = test::broadband(4000, 0.01, 0.3, 2);
    const auto nl = lumped::simulate_lumped(p, g, signals::NoiseSpec::none());
    double peak_drift = 0.0;
    for (int i = 0; i < 3; ++i) peak_drift = std::max(peak_drift, test::max_abs(nl.drift[i].values));
    const auto lin = dynamics::integrate(lumped::linear_system(p), g, dynamics::IntegrationConfig{});
    double lin_err = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto acc = lin.channel(lin.absolute_acceleration, i);
        double err = 0.0;
        for (std::size_t t = 0; t < acc.size(); ++t)
            err = std::max(err, std::abs(acc.values[t] - nl.floor_acceleration[i].values[t]));
        lin_err = std::max(lin_err, err / test::max_abs(acc.values));
    }
    const bool pass = kd_err < 1e-12 && ks_err < 1e-12 && paths.failures == 0 && peak_drift < p.d_c && lin_err < 0.01;
    return {pass, fmt("k_d error %.1e, k_s error %.1e; 1000 paths: %d failures, continuity %.1e Q_y, min dissipation "
                      "%.1e; sub-crack (peak drift %.2f mm) vs linear %.2e",
                      kd_err, ks_err, paths.failures, paths.worst_continuity, paths.worst_dissipation, peak_drift,
                      lin_err)};
}

Outcome check_samplers()
{
    const auto s = test::run_correlated_gaussian(3);
    const auto m = test::chain_moments(s);
    const double zx = std::abs(m.mean_x - test::kGaussMeanX) / m.se_x;
    const double zy = std::abs(m.mean_y - test::kGaussMeanY) / m.se_y;
    const double drho = std::abs(m.corr - test::kGaussRho);

    const double truth = test::double_well_ratio_quadrature();
    const double re = test::double_well_re_ratio(1);
    const double re_err = std::abs(re - truth) / truth;

    const double occupancy = test::discrete_occupancy_error(17);

    samplers::ChainConfig cfg;
    cfg.burn_in = 300;
    cfg.thin = 7;
    cfg.target_samples = 400;
    cfg.seed = 42;
    const samplers::Box box{{-2.0, -2.0}, {2.0, 2.0}};
    const std::vector<double> start{0.1, -0.1};
    const auto mh = samplers::mh_sample(test::correlated_gaussian, box, start, cfg);
    samplers::ReplicaConfig one;
    one.n_replicas = 1;
    one.exchange_interval = 50;
    one.n_exchanges = 1000;
    const auto re1 = samplers::replica_exchange_sample(test::correlated_gaussian, box, {start}, cfg, one);
    const bool identical = re1.samples == mh.samples && re1.log_target == mh.log_target;

    const bool pass = zx < 3.0 && zy < 3.0 && drho < 0.05 && re_err < 0.10 && occupancy < 0.02 && identical;
    return {pass, fmt("gaussian mean %.2f/%.2f SE, rho error %.3f; double-well ratio %.3f vs %.3f (%.1f%%); "
                      "occupancy error %.4f; one-replica RE identical to MH: %s",
                      zx, zy, drho, re, truth, 100.0 * re_err, occupancy, identical ? "yes" : "no")};
}

Outcome check_features()
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    double fft_err = 0.0;
    for (std::size_t n : {64u, 2048u, 10000u}) {
        std::vector<double> x(n);
        for (double& v : x) v = normal(rng);
        const auto back = signals::irfft(signals::rfft(x, n), n);
        for (std::size_t i = 0; i < n; ++i) fft_err = std::max(fft_err, std::abs(back[i] - x[i]));
    }

    const auto frame_in = test::broadband(2048, 0.02, 1.0, 1);
    const std::vector<TimeSeries> five(5, frame_in);
    const auto fm = signals::log_spectral_ratio_features(five, frame_in);
    const double f0 = fm.grid.frequency(0), f1 = fm.grid.frequency(511);
    const bool frame_ok = fm.channels == 5 && fm.grid.n_bins == 512 && std::abs(f0 - 0.12207) < 1e-5 &&
                          std::abs(f1 - 12.5977) < 1e-4;

    const auto lumped_in = test::broadband(10000, 0.01, 1.0, 4);
    const std::vector<TimeSeries> three(3, lumped_in);
    const auto lf = signals::frf_features(three, lumped_in);
    const bool lumped_ok = lf.channels == 6 && lf.grid.n_bins == 512 && lf.data.size() == 6u * 512u &&
                           std::abs(lf.grid.frequency(0) - 0.10) < 1e-9 && std::abs(lf.grid.frequency(511) - 5.21) < 1e-9;

    const auto x = test::broadband(10000, 0.01, 2.0, 20);
    const auto noisy = signals::add_noise(x, signals::NoiseSpec::snr(40.0, 3));
    std::vector<double> diff(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) diff[i] = noisy.values[i] - x.values[i];
    const double ratio = signals::rms(x.view()) / signals::rms(diff);

    const bool pass = fft_err < 1e-10 && frame_ok && lumped_ok && std::abs(ratio - 100.0) < 5.0;
    return {pass, fmt("FFT round trip %.1e; frame grid %.5f-%.4f Hz x %d (%d channels); lumped %dx%d over "
                      "%.2f-%.2f Hz; 40 dB RMS ratio %.2f",
                      fft_err, f0, f1, fm.grid.n_bins, fm.channels, lf.channels, lf.grid.n_bins,
                      lf.grid.frequency(0), lf.grid.frequency(511), ratio)};
}

} // namespace mvbu::acceptance
