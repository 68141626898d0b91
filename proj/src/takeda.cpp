#include "mvbu/takeda.hpp"

#include <algorithm>
#include <cmath>

#include "mvbu/error.hpp"

namespace mvbu::takeda {

namespace {

int sgn(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

double peak_d(const HysteresisState& s, int side) { return side > 0 ? s.d_max_pos : s.d_max_neg; }
double peak_q(const HysteresisState& s, int side) { return side > 0 ? s.q_max_pos : s.q_max_neg; }

// Unloading slope from the peak of `side`, clamped to [secant, k].
double side_slope(const StoryLaw& law, const HysteresisState& s, int side)
{
    const double dm = std::abs(peak_d(s, side));
    const double qm = std::abs(peak_q(s, side));
    const double raw = unloading_stiffness(law, dm, qm);
    return std::clamp(raw, qm / dm, law.k);
}

// Zero-force crossing (in the frame where `side` is positive) of the line
// unloading from the peak of `side`.
double side_zero_crossing(const StoryLaw& law, const HysteresisState& s, int side)
{
    return std::abs(peak_d(s, side)) - std::abs(peak_q(s, side)) / side_slope(law, s, side);
}

double backbone_slope(const StoryLaw& law, double abs_d)
{
    if (abs_d < law.d_c) return law.k;
    if (abs_d < law.d_y) return law.alpha_c * law.k;
    return law.alpha_y * law.k;
}

struct SlipEval {
    double q;
    double slope;
};

// Force on the slip branch toward `side` that started at zero force at d0.
SlipEval slip_eval(const StoryLaw& law, const HysteresisState& s, int side, double d0, double d)
{
    const double xt = std::abs(peak_d(s, side));
    const double yt = std::abs(peak_q(s, side));
    const double x0 = side * d0;
    const double x = side * d;
    const double span = xt - x0;
    if (span <= 0.0) return {side * yt, law.k};
    const double secant = yt / span;
    const double kappa = side_slope(law, s, side);
    const double ks = std::min(slip_stiffness(law, xt, yt, x0), secant);
    const double reload_at_start = yt - kappa * span;
    if (reload_at_start <= 1e-12 * yt) {
        const double slip = ks * (x - x0);
        const double reload = yt - kappa * (xt - x);
        if (reload > slip) return {side * reload, kappa};
        return {side * slip, ks};
    }
    return {side * secant * (x - x0), secant};
}

// Reversal at the current point: build the inner line.
HysteresisState start_inner(const StoryLaw& law, const HysteresisState& s)
{
    HysteresisState n = s;
    n.parent = s.branch;
    n.parent_side = s.side;
    n.parent_d_0 = s.d_0;
    n.branch = Branch::Inner;
    n.anchor_d = s.d;
    n.anchor_q = s.q;
    n.inner_slope = reversal_slope(law, s);
    return n;
}

} // namespace

void TakedaParameters::validate() const
{
    for (double ki : k) require(ki > 0.0, "Takeda: story stiffness must be positive");
    require(d_c > 0.0 && d_c < d_y, "Takeda: requires 0 < d_c < d_y");
    require(alpha_y >= 0.0 && alpha_y <= alpha_c && alpha_c <= 1.0, "Takeda: requires 0 <= alpha_y <= alpha_c <= 1");
    require(gamma >= 0.0 && lambda >= 0.0, "Takeda: gamma and lambda must be non-negative");
}

StoryLaw story_law(const TakedaParameters& p, int story)
{
    require(story >= 0 && story < 3, "Takeda: story index out of range");
    return {p.k[story], p.d_c, p.d_y, p.alpha_c, p.alpha_y, p.gamma, p.lambda};
}

HysteresisState initial_state(const StoryLaw& law)
{
    HysteresisState s;
    s.d_max_pos = law.d_c;
    s.q_max_pos = law.q_crack();
    s.d_max_neg = -law.d_c;
    s.q_max_neg = -law.q_crack();
    return s;
}

double backbone(const StoryLaw& law, double d)
{
    const double x = std::abs(d);
    double q;
    if (x <= law.d_c)
        q = law.k * x;
    else if (x <= law.d_y)
        q = law.q_crack() + law.alpha_c * law.k * (x - law.d_c);
    else
        q = law.q_yield() + law.alpha_y * law.k * (x - law.d_y);
    return d < 0.0 ? -q : q;
}

double backbone(const TakedaParameters& p, int story, double d) { return backbone(story_law(p, story), d); }

double unloading_stiffness(const StoryLaw& law, double d_max, double q_max)
{
    if (d_max == 0.0) return law.k;
    return std::abs(q_max) / (law.d_y - law.d_c) * std::pow(std::abs(d_max / law.d_y), -law.gamma);
}

double unloading_stiffness(const StoryLaw& law, const HysteresisState& state)
{
    const int side = state.q < 0.0 ? -1 : 1;
    return unloading_stiffness(law, peak_d(state, side), peak_q(state, side));
}

double slip_stiffness(const StoryLaw& law, double d_max, double q_max, double d_0)
{
    if (d_max == d_0) return unloading_stiffness(law, d_max, q_max);
    return (law.q_yield() - law.q_crack()) / std::abs(d_max - d_0) *
           std::pow(std::abs(d_max / law.d_y), -law.lambda);
}

double reversal_slope(const StoryLaw& law, const HysteresisState& s)
{
    if (s.branch == Branch::VirginElastic) return law.k;
    if (s.branch == Branch::Inner) return s.inner_slope;
    const int a = sgn(s.q);
    if (a == 0) return law.k;
    double kappa = side_slope(law, s, a);
    // Keep the zero crossing short of the opposite peak's unloading crossing.
    const int b = -a;
    const double x_star = side_zero_crossing(law, s, b);
    const double x_anchor = b * s.d;
    const double y_anchor = std::abs(s.q);
    if (x_anchor + y_anchor / kappa > x_star) {
        if (x_star > x_anchor)
            kappa = y_anchor / (x_star - x_anchor);
        else
            kappa = std::max(kappa, law.k);
    }
    return kappa;
}

double recoverable_energy(const StoryLaw& law, const HysteresisState& s)
{
    return s.q * s.q / (2.0 * reversal_slope(law, s));
}

StepResult takeda_step(const StoryLaw& law, const HysteresisState& state, double d_new)
{
    HysteresisState s = state;
    const int dir = sgn(d_new - s.d);
    if (dir == 0) {
        double tangent = law.k;
        if (s.branch == Branch::Inner) tangent = s.inner_slope;
        else if (s.branch == Branch::Backbone) tangent = backbone_slope(law, std::abs(s.d));
        else if (s.branch == Branch::Slip) tangent = slip_eval(law, s, s.side, s.d_0, s.d).slope;
        return {s.q, tangent, s};
    }

    // A handful of transitions at most per increment; the cap only guards
    // against a logic error turning into an endless loop.
    for (int guard = 0; guard < 64; ++guard) {
        switch (s.branch) {
        case Branch::VirginElastic: {
            if (std::abs(d_new) <= law.d_c) {
                s.d = d_new;
                s.q = law.k * d_new;
                return {s.q, law.k, s};
            }
            s.d = dir * law.d_c;
            s.q = dir * law.q_crack();
            s.branch = Branch::Backbone;
            s.side = dir;
            break;
        }
        case Branch::Backbone: {
            if (dir != s.side) {
                s = start_inner(law, s);
                break;
            }
            s.d = d_new;
            s.q = backbone(law, d_new);
            if (s.side > 0 && d_new > s.d_max_pos) {
                s.d_max_pos = d_new;
                s.q_max_pos = s.q;
            } else if (s.side < 0 && d_new < s.d_max_neg) {
                s.d_max_neg = d_new;
                s.q_max_neg = s.q;
            }
            return {s.q, backbone_slope(law, std::abs(d_new)), s};
        }
        case Branch::Slip: {
            if (dir != s.side) {
                s = start_inner(law, s);
                break;
            }
            const double d_target = peak_d(s, s.side);
            if (s.side * d_new <= s.side * d_target) {
                const auto ev = slip_eval(law, s, s.side, s.d_0, d_new);
                s.d = d_new;
                s.q = ev.q;
                return {s.q, ev.slope, s};
            }
            s.d = d_target;
            s.q = peak_q(s, s.side);
            s.branch = Branch::Backbone;
            break;
        }
        case Branch::Inner: {
            // The state always lies between the zero crossing and the anchor.
            const int away = s.anchor_q > 0.0 ? -1 : (s.anchor_q < 0.0 ? 1 : dir);
            if (dir != away) {
                // Reloading toward the anchor.
                if (dir * d_new <= dir * s.anchor_d) {
                    s.d = d_new;
                    s.q = s.anchor_q + s.inner_slope * (d_new - s.anchor_d);
                    return {s.q, s.inner_slope, s};
                }
                s.d = s.anchor_d;
                s.q = s.anchor_q;
                s.branch = s.parent;
                s.side = s.parent_side;
                s.d_0 = s.parent_d_0;
                break;
            }
            const double zero = s.anchor_d - s.anchor_q / s.inner_slope;
            if (dir * d_new <= dir * zero) {
                s.d = d_new;
                s.q = s.anchor_q + s.inner_slope * (d_new - s.anchor_d);
                return {s.q, s.inner_slope, s};
            }
            s.d = zero;
            s.q = 0.0;
            s.branch = Branch::Slip;
            s.side = dir;
            s.d_0 = zero;
            break;
        }
        }
    }
    throw NumericalError("Takeda: branch resolution did not terminate");
}

std::string branch_label(const StoryLaw& law, const HysteresisState& s, int direction)
{
    switch (s.branch) {
    case Branch::VirginElastic: return "virgin-elastic";
    case Branch::Backbone: return std::abs(s.d) <= law.d_y ? "backbone-postcrack" : "backbone-postyield";
    case Branch::Slip: return "slip";
    case Branch::Inner: {
        const int toward_anchor = sgn(s.anchor_d - s.d);
        return (toward_anchor != 0 && direction == toward_anchor) ? "reloading" : "unloading";
    }
    }
    return "unknown";
}

} // namespace mvbu::takeda
