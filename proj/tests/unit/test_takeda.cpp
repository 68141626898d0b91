#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hysteresis_paths.hpp"
#include "mvbu/takeda.hpp"

using namespace mvbu::takeda;
using namespace mvbu::test;

TEST_CASE("backbone: breakpoint arithmetic")
{
    const TakedaParameters p;
    CHECK(backbone(p, 0, 4.0) == doctest::Approx(560.0).epsilon(1e-12));
    CHECK(backbone(p, 0, 8.0) == doctest::Approx(1120.0).epsilon(1e-12));
    CHECK(backbone(p, 0, 40.0) == doctest::Approx(1568.0).epsilon(1e-12));
    CHECK(table_law().q_crack() == doctest::Approx(1120.0));
    CHECK(table_law().q_yield() == doctest::Approx(1568.0));
    CHECK(backbone(p, 0, 60.0) == doctest::Approx(1568.0 + 0.02 * 140.0 * 20.0));
}

TEST_CASE("backbone: antisymmetric")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-200.0, 200.0);
    const TakedaParameters p;
    for (int i = 0; i < 100; ++i) {
        const double x = d(rng);
        for (int story = 0; story < 3; ++story) CHECK(backbone(p, story, -x) == -backbone(p, story, x));
    }
}

TEST_CASE("unloading stiffness")
{
    const auto law = table_law();
    CHECK(std::abs(unloading_stiffness(law, 40.0, 1568.0) - 49.0) < 1e-12);
    CHECK(unloading_stiffness(law, 80.0, 1568.0) == doctest::Approx(49.0 * 0.757858283).epsilon(1e-8));
    CHECK(unloading_stiffness(law, 80.0, 1568.0) == doctest::Approx(37.14).epsilon(1e-3));
    auto flat = law;
    flat.gamma = 0.0;
    CHECK(unloading_stiffness(flat, 13.0, 1568.0) == doctest::Approx(1568.0 / 32.0));
    CHECK(unloading_stiffness(flat, 170.0, 1568.0) == doctest::Approx(1568.0 / 32.0));
    CHECK(unloading_stiffness(law, 0.0, 0.0) == law.k);
}

TEST_CASE("slip stiffness")
{
    const auto law = table_law();
    CHECK(std::abs(slip_stiffness(law, 40.0, 1568.0, 0.0) - 11.2) < 1e-12);
    CHECK(std::abs(slip_stiffness(law, 160.0, 1568.0, 20.0) - 1.6) < 1e-12);
    auto flat = law;
    flat.lambda = 0.0;
    CHECK(slip_stiffness(flat, 70.0, 1568.0, 6.0) == doctest::Approx(448.0 / 64.0));
    CHECK(slip_stiffness(law, 40.0, 1568.0, 40.0) == unloading_stiffness(law, 40.0, 1568.0));
}

TEST_CASE("takeda_step: virgin elastic branch")
{
    const auto law = table_law();
    const auto s0 = initial_state(law);
    CHECK(s0.d_max_pos == law.d_c);
    CHECK(s0.d_max_neg == -law.d_c);
    for (double d : {-7.9, -3.0, 0.5, 6.0}) {
        const auto r = takeda_step(law, s0, d);
        CHECK(r.q == doctest::Approx(law.k * d).epsilon(1e-14));
        CHECK(r.tangent == law.k);
    }
}

TEST_CASE("takeda_step: full cycle to 1.2 d_y closes on the reloading target")
{
    const auto law = table_law();
    HysteresisState s = initial_state(law);
    const double amp = 1.2 * law.d_y;
    std::vector<double> path;
    for (double d = 0.0; d <= amp; d += 0.25) path.push_back(d);
    for (double d = amp; d >= -amp; d -= 0.25) path.push_back(d);
    for (double d = -amp; d <= amp + 1e-9; d += 0.25) path.push_back(d);

    double work = 0.0, prev_q = 0.0, prev_d = 0.0;
    for (double d : path) {
        const auto r = takeda_step(law, s, d);
        work += 0.5 * (prev_q + r.q) * (d - prev_d);
        prev_q = r.q;
        prev_d = d;
        s = r.state;
    }
    CHECK(work > 0.0);
    CHECK(s.d == doctest::Approx(amp));
    CHECK(s.q == doctest::Approx(backbone(law, amp)).epsilon(1e-12));
    const auto beyond = takeda_step(law, s, amp + 2.0);
    CHECK(beyond.state.branch == Branch::Backbone);
    CHECK(beyond.q == doctest::Approx(backbone(law, amp + 2.0)).epsilon(1e-12));

    // Reversal from the positive peak unloads with k_d of that peak.
    const auto down = takeda_step(law, s, amp - 1.0);
    CHECK(down.tangent == doctest::Approx(unloading_stiffness(law, amp, backbone(law, amp))));
    CHECK(branch_label(law, down.state, -1) == "unloading");
}

TEST_CASE("takeda_step: slip branch heads for the opposite peak")
{
    const auto law = table_law();
    HysteresisState s = initial_state(law);
    for (double d = 0.0; d <= 60.0; d += 1.0) s = takeda_step(law, s, d).state;
    // Down past zero force: the first target on the negative side is the crack point.
    for (double d = 60.0; d >= -law.d_c; d -= 0.5) s = takeda_step(law, s, d).state;
    CHECK(s.q == doctest::Approx(-law.q_crack()).epsilon(1e-12));
    const auto past = takeda_step(law, s, -law.d_c - 2.0);
    CHECK(past.state.branch == Branch::Backbone);
    CHECK(past.q == doctest::Approx(backbone(law, -law.d_c - 2.0)));
}

TEST_CASE("takeda_step: degenerates to linear elastic")
{
    TakedaParameters p;
    p.alpha_c = p.alpha_y = 1.0;
    p.gamma = p.lambda = 0.0;
    const auto law = story_law(p, 1);
    std::mt19937_64 rng(4);
    const auto path = random_path(rng, law.d_y, 30);
    HysteresisState s = initial_state(law);
    for (double d : path) {
        const auto r = takeda_step(law, s, d);
        CHECK(r.q == doctest::Approx(law.k * d).epsilon(1e-12).scale(law.q_yield()));
        s = r.state;
    }
}

TEST_CASE("takeda_step: invariants over 1000 random paths")
{
    const auto r = check_random_paths(2024, 1000);
    INFO("continuity " << r.worst_continuity << " envelope " << r.worst_envelope << " dissipation "
                       << r.worst_dissipation << " drop " << r.worst_drop);
    CHECK(r.failures == 0);
}

TEST_CASE("takeda_step: a step with no motion keeps the state")
{
    const auto law = table_law();
    HysteresisState s = initial_state(law);
    for (double d : {10.0, 30.0, 20.0}) s = takeda_step(law, s, d).state;
    const auto r = takeda_step(law, s, s.d);
    CHECK(r.q == s.q);
    CHECK(r.state.branch == s.branch);
}

TEST_CASE("parameter validation")
{
    TakedaParameters p;
    p.d_c = 50.0;
    CHECK_THROWS(p.validate());
    p = {};
    p.alpha_y = 0.2;
    CHECK_THROWS(p.validate());
    p = {};
    p.k[2] = 0.0;
    CHECK_THROWS(p.validate());
}
