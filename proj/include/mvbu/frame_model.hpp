#pragma once

// Single-bay plane frame on rotational base springs. Columns are split at
// mid-height; the roof beam's bending stiffness is scaled by R to represent
// composite action with the deck. Only the two roof nodes carry mass, so the
// remaining DOFs are condensed out before integration.

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mvbu/dynamics.hpp"
#include "mvbu/signals.hpp"

namespace mvbu::frame {

inline constexpr int kNodeCount = 6;
inline constexpr int kElementCount = 5;
inline constexpr double kDampingRatio = 0.02;

struct Section {
    double area = 0.0;            // m^2
    double inertia = 0.0;         // m^4
    double section_modulus = 0.0; // m^3
};

struct Element {
    int node_i = 0; // 1-based node ids
    int node_j = 0;
    std::string section;
};

struct FrameGeometry {
    std::array<std::array<double, 2>, kNodeCount> nodes{}; // (x, y) m, node id = index + 1
    std::array<Element, kElementCount> elements{};         // element id = index + 1; element 5 is the beam
    std::map<std::string, Section> sections;
    double youngs_modulus = 205e9;
    std::map<int, double> masses; // node id -> kg, applied to ux and uy

    void validate() const;
    const Section& section_of(int element_id) const;
    double element_length(int element_id) const;
};

FrameGeometry parse_geometry(const std::string& json_text);
FrameGeometry load_geometry(const std::filesystem::path& path);
std::filesystem::path default_geometry_path();
/// Loaded once from default_geometry_path().
const FrameGeometry& default_geometry();

struct FrameParameters {
    double stiffness_ratio = 1.0; // (EI)_eq / (EI)_beam
    double k_theta_1 = 1000.0;    // kNm/rad, base spring at node 1
    double k_theta_6 = 1000.0;    // kNm/rad, base spring at node 6
};

struct FrameBounds {
    double ratio_min = 1.0, ratio_max = 10.0;
    double spring_min = 10.0, spring_max = 1e4;

    void check(const FrameParameters& p) const;
    static FrameBounds training() { return {}; }
    /// Only positivity is enforced.
    static FrameBounds open() { return {0.0, 1e300, 0.0, 1e300}; }
};

enum class BaseCondition { Springs, Clamped };

/// Full-DOF and condensed matrices for one parameter set.
struct FrameModel {
    std::vector<int> free_dofs;   // global dof (3 * node_index + {0:ux, 1:uy, 2:rz}) per free index
    dynamics::MatrixXd stiffness; // free x free, SI
    dynamics::MatrixXd recovery;  // free x 4: u_free = recovery * u_mass
    dynamics::LinearSystem condensed; // mass dofs: node 3 ux, uy; node 4 ux, uy
    FrameParameters params;

    /// Global dof of node (1-based) and component; -1 when fixed.
    int free_index(int node, int component) const;
};

inline constexpr int kMassDofNode3X = 0;
inline constexpr int kMassDofNode4X = 2;

FrameModel assemble(const FrameGeometry& geometry, const FrameParameters& params,
                    const FrameBounds& bounds = FrameBounds::training(),
                    BaseCondition base = BaseCondition::Springs);

/// Local 6x6 stiffness of a plane frame element (axial + Euler-Bernoulli).
dynamics::MatrixXd element_stiffness_local(double ea, double ei, double length);

enum class StrainLocation { Element1Bottom, Element2Bottom, Element3Top, Element4Top };

StrainLocation strain_location_from_string(const std::string& s);
std::string to_string(StrainLocation loc);
inline constexpr std::array<StrainLocation, 4> kStrainLocations{
    StrainLocation::Element1Bottom, StrainLocation::Element2Bottom, StrainLocation::Element3Top,
    StrainLocation::Element4Top};

/// End moment (N m) at a location, per unit of each free DOF displacement.
dynamics::VectorXd end_moment_row(const FrameModel& model, const FrameGeometry& geometry, StrainLocation loc);

/// Dynamic bending strain M / (E Z) from a history over the condensed DOFs.
TimeSeries recover_strain(const dynamics::ResponseHistory& history, const FrameModel& model,
                          const FrameGeometry& geometry, StrainLocation loc);

/// Strain from a displacement vector over the free DOFs.
double strain_at(const dynamics::VectorXd& u_free, const FrameModel& model, const FrameGeometry& geometry,
                 StrainLocation loc);

inline constexpr int kFrameChannels = 5;

struct FrameResponse {
    // Node 4 absolute horizontal acceleration, then strains at the four locations.
    std::array<TimeSeries, kFrameChannels> channels;
};

/// Noise uses seeds derived from noise.seed per channel.
FrameResponse simulate_frame(const FrameParameters& params, const TimeSeries& ground,
                             const signals::NoiseSpec& noise, const FrameGeometry& geometry = default_geometry(),
                             const FrameBounds& bounds = FrameBounds::training());

} // namespace mvbu::frame
