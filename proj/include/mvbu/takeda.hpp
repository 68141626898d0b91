#pragma once

// Modified Takeda-slip restoring-force rule for one story. Units inside this
// module: displacement in mm, force in kN, stiffness in kN/mm.
//
// Branch rules
//  * Virgin loading follows the trilinear backbone.
//  * A reversal on any loading branch starts an inner line anchored at the
//    reversal point. Its slope is the unloading stiffness k_d of the side the
//    anchor force lies on, clamped to [Q_max/d_max, k] of that side. If the
//    line's zero-force crossing would pass the zero-force crossing of the
//    opposite peak's unloading line, the slope is raised so it does not.
//  * Moving back toward the anchor reloads along the same line; past the
//    anchor the branch that was active there resumes.
//  * Crossing zero force at d_0 enters the slip branch toward the opposite
//    side's peak (d_max, Q_max), which is the crack point while that side is
//    virgin. The slip branch is max(k_s (d - d_0), reload line), where the
//    reload line passes through the target with that side's unloading slope
//    and k_s is capped at the secant to the target. Past the target the
//    backbone resumes and the peak is updated.
//  * d_max starts at d_c on both sides.

#include <array>
#include <string>

namespace mvbu::takeda {

/// Parameters of the three-story model. Story stiffnesses differ, the other
/// parameters are shared by all stories.
struct TakedaParameters {
    std::array<double, 3> k{140.0, 110.0, 60.0}; // kN/mm
    double d_c = 8.0;                            // mm
    double d_y = 40.0;                           // mm
    double alpha_c = 0.1;
    double alpha_y = 0.02;
    double gamma = 0.4;
    double lambda = 0.5;

    void validate() const;
};

/// Trilinear story law derived from TakedaParameters for one story.
struct StoryLaw {
    double k = 0.0;
    double d_c = 0.0;
    double d_y = 0.0;
    double alpha_c = 0.0;
    double alpha_y = 0.0;
    double gamma = 0.0;
    double lambda = 0.0;

    double q_crack() const { return k * d_c; }
    double q_yield() const { return q_crack() + alpha_c * k * (d_y - d_c); }
};

StoryLaw story_law(const TakedaParameters& p, int story);

enum class Branch { VirginElastic, Backbone, Inner, Slip };

struct HysteresisState {
    double d = 0.0;
    double q = 0.0;
    double d_max_pos = 0.0;
    double q_max_pos = 0.0;
    double d_max_neg = 0.0; // negative
    double q_max_neg = 0.0; // negative

    Branch branch = Branch::VirginElastic;
    int side = 1;       // Backbone: side; Slip: target side
    double d_0 = 0.0;   // Slip: zero-force start (slip pivot)

    // Inner line through (anchor_d, anchor_q) with slope inner_slope.
    double anchor_d = 0.0;
    double anchor_q = 0.0;
    double inner_slope = 0.0;
    Branch parent = Branch::Backbone;
    int parent_side = 1;
    double parent_d_0 = 0.0;
};

struct StepResult {
    double q = 0.0;
    double tangent = 0.0;
    HysteresisState state;
};

HysteresisState initial_state(const StoryLaw& law);

double backbone(const StoryLaw& law, double d);
double backbone(const TakedaParameters& p, int story, double d);

/// k_d = Q_max / (d_y - d_c) * |d_max / d_y|^-gamma. Falls back to k when d_max = 0.
double unloading_stiffness(const StoryLaw& law, double d_max, double q_max);
/// k_d using the peak of the side the current force lies on.
double unloading_stiffness(const StoryLaw& law, const HysteresisState& state);

/// k_s = (Q_y - Q_c) / (d_max - d_0) * |d_max / d_y|^-lambda. When d_max = d_0 the
/// branch is degenerate and the unloading stiffness of that peak is returned.
double slip_stiffness(const StoryLaw& law, double d_max, double q_max, double d_0);

/// Advance from the committed state to d_new. Motion within one call is taken
/// as monotone; branch changes inside the increment are resolved exactly.
StepResult takeda_step(const StoryLaw& law, const HysteresisState& state, double d_new);

/// Label in the {virgin-elastic, backbone-postcrack, backbone-postyield,
/// unloading, slip, reloading} vocabulary.
std::string branch_label(const StoryLaw& law, const HysteresisState& state, int direction);

/// Energy released by unloading from the current state along the line a
/// reversal would follow, q^2 / (2 slope).
double recoverable_energy(const StoryLaw& law, const HysteresisState& state);

/// Slope of the line a reversal at the current state would follow.
double reversal_slope(const StoryLaw& law, const HysteresisState& state);

} // namespace mvbu::takeda
