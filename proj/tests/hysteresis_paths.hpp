#pragma once

// Random hysteresis paths and the invariants checked along them, shared by the
// unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mvbu/takeda.hpp"

namespace mvbu::test {

using namespace mvbu::takeda;

inline StoryLaw table_law() { return story_law(TakedaParameters{}, 0); }

// Parameters drawn uniformly from the training ranges.
inline TakedaParameters random_params(std::mt19937_64& rng)
{
    auto u = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    TakedaParameters p;
    p.k = {u(100, 200), u(60, 160), u(20, 120)};
    p.d_c = u(2.5, 20);
    p.d_y = u(std::max(20.0, p.d_c + 0.5), 80);
    p.alpha_c = u(0.05, 0.25);
    p.alpha_y = u(0.0, 0.05);
    p.gamma = u(0.0, 1.0);
    p.lambda = u(0.0, 1.0);
    return p;
}

// Reversal points with random amplitudes (including small inner cycles),
// visited with random increments.
inline std::vector<double> random_path(std::mt19937_64& rng, double d_y, int reversals)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> path{0.0};
    double pos = 0.0;
    int dir = unit(rng) < 0.5 ? -1 : 1;
    for (int r = 0; r < reversals; ++r) {
        const double amp = unit(rng) < 0.3 ? unit(rng) * 0.3 * d_y : unit(rng) * 3.0 * d_y;
        const double target = dir > 0 ? std::max(pos + 0.1, amp * (unit(rng) < 0.8 ? 1.0 : -0.3))
                                       : std::min(pos - 0.1, -amp * (unit(rng) < 0.8 ? 1.0 : -0.3));
        while (dir * (target - pos) > 0.0) {
            pos += dir * std::min(dir * (target - pos), 0.02 + unit(rng) * 0.8);
            path.push_back(pos);
        }
        dir = -dir;
    }
    return path;
}

struct PathCheck {
    double worst_continuity = 0.0;
    double worst_envelope = 0.0;
    double min_dissipation = 0.0;
    double worst_dissipation_drop = 0.0;
    bool peaks_monotone = true;
};

inline PathCheck run_path(const StoryLaw& law, const std::vector<double>& path)
{
    PathCheck c;
    HysteresisState s = initial_state(law);
    double work = 0.0;
    double prev_dissipated = 0.0;
    const double qy = law.q_yield();
    for (std::size_t i = 1; i < path.size(); ++i) {
        const auto direct = takeda_step(law, s, path[i]);
        const auto half = takeda_step(law, s, 0.5 * (path[i - 1] + path[i]));
        const auto split = takeda_step(law, half.state, path[i]);
        c.worst_continuity = std::max(c.worst_continuity, std::abs(direct.q - split.q) / qy);

        // Work along the exact piecewise-linear path, resolved by sub-steps.
        HysteresisState w = s;
        constexpr int kSub = 64;
        for (int j = 1; j <= kSub; ++j) {
            const double dj = path[i - 1] + (path[i] - path[i - 1]) * j / kSub;
            const auto r = takeda_step(law, w, dj);
            work += 0.5 * (w.q + r.q) * (dj - w.d);
            w = r.state;
        }
        const auto& n = direct.state;
        if (n.d_max_pos < s.d_max_pos || n.d_max_neg > s.d_max_neg) c.peaks_monotone = false;
        const double reach = std::max({n.d_max_pos, -n.d_max_neg, std::abs(path[i])});
        c.worst_envelope = std::max(c.worst_envelope, std::abs(direct.q) - std::abs(backbone(law, reach)));

        const double dissipated = work - recoverable_energy(law, n);
        c.min_dissipation = std::min(c.min_dissipation, dissipated);
        c.worst_dissipation_drop = std::max(c.worst_dissipation_drop, prev_dissipated - dissipated);
        prev_dissipated = dissipated;
        s = n;
    }
    return c;
}

struct RandomPathSummary {
    int failures = 0;
    double worst_continuity = 0.0; // / Q_y
    double worst_envelope = 0.0;
    double worst_dissipation = 0.0; // most negative, / (Q_y d_y)
    double worst_drop = 0.0;        // / (Q_y d_y)
};

/// Random parameters, story and path per trial; a trial fails on step-splitting
/// discontinuity above 1e-9 Q_y, envelope excess, negative or decreasing
/// cumulative dissipation, or a shrinking peak excursion.
inline RandomPathSummary check_random_paths(std::uint64_t seed, int trials)
{
    std::mt19937_64 rng(seed);
    RandomPathSummary out;
    for (int trial = 0; trial < trials; ++trial) {
        const auto p = random_params(rng);
        const auto law = story_law(p, trial % 3);
        const auto path = random_path(rng, p.d_y, 12);
        const auto c = run_path(law, path);
        const double energy_scale = law.q_yield() * law.d_y;
        out.worst_continuity = std::max(out.worst_continuity, c.worst_continuity);
        out.worst_envelope = std::max(out.worst_envelope, c.worst_envelope);
        out.worst_dissipation = std::min(out.worst_dissipation, c.min_dissipation / energy_scale);
        out.worst_drop = std::max(out.worst_drop, c.worst_dissipation_drop / energy_scale);
        const bool ok = c.worst_continuity < 1e-9 && c.worst_envelope < 1e-9 &&
                        c.min_dissipation > -1e-6 * energy_scale &&
                        c.worst_dissipation_drop < 1e-6 * energy_scale && c.peaks_monotone;
        if (!ok) ++out.failures;
    }
    return out;
}

} // namespace mvbu::test
