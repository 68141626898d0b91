#include <doctest.h>

#include <cmath>

#include "mvbu/lumped_model.hpp"
#include "test_support.hpp"

using namespace mvbu;
using namespace mvbu::lumped;

namespace {

double peak(const TimeSeries& ts) { return test::max_abs(ts.values); }

} // namespace

TEST_CASE("simulate_lumped: zero ground motion gives zero response")
{
    const TimeSeries quiet(0.01, std::vector<double>(1000, 0.0));
    const auto r = simulate_lumped({}, quiet, signals::NoiseSpec::none());
    for (int i = 0; i < 3; ++i) {
        CHECK(peak(r.floor_acceleration[i]) == 0.0);
        CHECK(peak(r.drift[i]) == 0.0);
    }
}

TEST_CASE("simulate_lumped: record length is preserved")
{
    const auto g = test::broadband(10000, 0.01, 0.01, 1);
    const auto r = simulate_lumped({}, g, signals::NoiseSpec::none());
    for (int i = 0; i < 3; ++i) {
        CHECK(r.floor_acceleration[i].size() == 10000);
        CHECK(r.drift[i].size() == 10000);
    }
}

TEST_CASE("simulate_lumped: sub-crack response matches the linear model")
{
    const takeda::TakedaParameters p;
    const auto g = test::broadband(4000, 0.01, 0.3, 2);
    const auto r = simulate_lumped(p, g, signals::NoiseSpec::none());
    for (int i = 0; i < 3; ++i) REQUIRE(peak(r.drift[i]) < p.d_c);

    dynamics::IntegrationConfig cfg;
    const auto lin = dynamics::integrate(linear_system(p), g, cfg);
    for (int i = 0; i < 3; ++i) {
        const auto acc = lin.channel(lin.absolute_acceleration, i);
        double err = 0.0;
        for (std::size_t t = 0; t < acc.size(); ++t)
            err = std::max(err, std::abs(acc.values[t] - r.floor_acceleration[i].values[t]));
        CHECK(err <= 0.01 * peak(acc));
        CHECK(peak(r.floor_acceleration[i]) == doctest::Approx(peak(acc)).epsilon(0.01));
    }
}

TEST_CASE("simulate_lumped: yielding history keeps the hysteresis invariants")
{
    const takeda::TakedaParameters p;
    const auto g = test::broadband(3000, 0.01, 4.0, 3);
    const auto r = simulate_lumped(p, g, signals::NoiseSpec::none());
    CHECK(peak(r.drift[0]) > p.d_y);

    // Replay each story along its drift history; the integrator commits the
    // same step-to-step transitions.
    for (int story = 0; story < 3; ++story) {
        const auto law = takeda::story_law(p, story);
        auto s = takeda::initial_state(law);
        double work = 0.0, prev_dissipated = 0.0;
        const double scale = law.q_yield() * law.d_y;
        bool monotone_peaks = true, dissipation_ok = true, envelope_ok = true;
        for (double d : r.drift[story].values) {
            auto w = s;
            constexpr int kSub = 32;
            for (int j = 1; j <= kSub; ++j) {
                const double dj = s.d + (d - s.d) * j / kSub;
                const auto step = takeda::takeda_step(law, w, dj);
                work += 0.5 * (w.q + step.q) * (dj - w.d);
                w = step.state;
            }
            const auto next = takeda::takeda_step(law, s, d).state;
            if (next.d_max_pos < s.d_max_pos || next.d_max_neg > s.d_max_neg) monotone_peaks = false;
            const double reach = std::max({next.d_max_pos, -next.d_max_neg, std::abs(d)});
            if (std::abs(next.q) > takeda::backbone(law, reach) + 1e-9) envelope_ok = false;
            const double dissipated = work - takeda::recoverable_energy(law, next);
            if (dissipated < prev_dissipated - 1e-6 * scale) dissipation_ok = false;
            prev_dissipated = dissipated;
            s = next;
        }
        CHECK(monotone_peaks);
        CHECK(envelope_ok);
        CHECK(dissipation_ok);
        CHECK(prev_dissipated > 0.0);
    }
}

TEST_CASE("simulate_lumped: measurement noise is applied to recorded copies")
{
    const auto g = test::broadband(2000, 0.01, 0.5, 4);
    const auto clean = simulate_lumped({}, g, signals::NoiseSpec::none());
    const auto noisy = simulate_lumped({}, g, signals::NoiseSpec::absolute(0.001, 77));
    for (int i = 0; i < 3; ++i) {
        std::vector<double> diff(g.size());
        for (std::size_t t = 0; t < g.size(); ++t)
            diff[t] = noisy.floor_acceleration[i].values[t] - clean.floor_acceleration[i].values[t];
        CHECK(signals::rms(diff) == doctest::Approx(0.001).epsilon(0.1));
        CHECK(noisy.drift[i].values == clean.drift[i].values);
    }
}

TEST_CASE("damping calibrated at the initial first mode")
{
    const takeda::TakedaParameters p;
    const auto sys = build_system(p, {});
    const auto lin = linear_system(p);
    const auto mode = dynamics::modal_first(lin.mass, lin.stiffness);
    CHECK(sys.damping_coefficient == doctest::Approx(0.04 / (M_PI * mode.frequency_hz)));
    CHECK(sys.damping_mode == dynamics::DampingMode::Instantaneous);
}
