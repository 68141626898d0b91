#include "mvbu/frame_model.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mvbu/rng.hpp"

#ifndef MVBU_DATA_DIR
#define MVBU_DATA_DIR "data"
#endif

namespace mvbu::frame {

using dynamics::MatrixXd;
using dynamics::VectorXd;
using nlohmann::json;

namespace {

constexpr double kSpringToSi = 1e3; // kNm/rad -> N m/rad

int gdof(int node, int component) { return 3 * (node - 1) + component; }

// Rotation taking global (ux, uy, rz) at both ends to local axial/transverse.
MatrixXd transformation(double c, double s)
{
    MatrixXd t = MatrixXd::Zero(6, 6);
    for (int e = 0; e < 2; ++e) {
        const int o = 3 * e;
        t(o, o) = c;
        t(o, o + 1) = s;
        t(o + 1, o) = -s;
        t(o + 1, o + 1) = c;
        t(o + 2, o + 2) = 1.0;
    }
    return t;
}

struct ElementFrame {
    MatrixXd k_local;
    MatrixXd t;
    std::array<int, 6> dofs;
};

ElementFrame element_frame(const FrameGeometry& g, int id, double bending_scale)
{
    const auto& el = g.elements[id - 1];
    const auto& sec = g.section_of(id);
    const auto& a = g.nodes[el.node_i - 1];
    const auto& b = g.nodes[el.node_j - 1];
    const double len = g.element_length(id);
    ElementFrame f;
    f.k_local = element_stiffness_local(g.youngs_modulus * sec.area,
                                        bending_scale * g.youngs_modulus * sec.inertia, len);
    f.t = transformation((b[0] - a[0]) / len, (b[1] - a[1]) / len);
    for (int c = 0; c < 3; ++c) {
        f.dofs[c] = gdof(el.node_i, c);
        f.dofs[3 + c] = gdof(el.node_j, c);
    }
    return f;
}

double bending_scale(const FrameModel& m, int element_id)
{
    return element_id == kElementCount ? m.params.stiffness_ratio : 1.0;
}

struct LocationInfo {
    int element;
    bool end_j;
};

LocationInfo info(StrainLocation loc)
{
    switch (loc) {
    case StrainLocation::Element1Bottom: return {1, false};
    case StrainLocation::Element2Bottom: return {2, false};
    case StrainLocation::Element3Top: return {3, true};
    case StrainLocation::Element4Top: return {4, true};
    }
    throw ValidationError("unknown strain location");
}

} // namespace

void FrameGeometry::validate() const
{
    require(youngs_modulus > 0.0, "geometry: Young's modulus must be positive");
    for (int id = 1; id <= kElementCount; ++id) {
        const auto& el = elements[id - 1];
        require(el.node_i >= 1 && el.node_i <= kNodeCount && el.node_j >= 1 && el.node_j <= kNodeCount &&
                    el.node_i != el.node_j,
                "geometry: element " + std::to_string(id) + " has invalid nodes");
        const auto& s = section_of(id);
        require(s.area > 0.0 && s.inertia > 0.0 && s.section_modulus > 0.0,
                "geometry: section properties must be positive");
        require(element_length(id) > 0.0, "geometry: zero-length element");
    }
    require(!masses.empty(), "geometry: no lumped masses");
    for (const auto& [node, kg] : masses) {
        require(node >= 2 && node <= 5, "geometry: masses are allowed on nodes 2-5 only");
        require(kg > 0.0, "geometry: lumped masses must be positive");
    }
}

const Section& FrameGeometry::section_of(int element_id) const
{
    const auto it = sections.find(elements[element_id - 1].section);
    require(it != sections.end(), "geometry: unknown section " + elements[element_id - 1].section);
    return it->second;
}

double FrameGeometry::element_length(int element_id) const
{
    const auto& el = elements[element_id - 1];
    const auto& a = nodes[el.node_i - 1];
    const auto& b = nodes[el.node_j - 1];
    return std::hypot(b[0] - a[0], b[1] - a[1]);
}

FrameGeometry parse_geometry(const std::string& json_text)
{
    FrameGeometry g;
    try {
        const json j = json::parse(json_text);
        for (const auto& [key, _] : j.items())
            require(key == "youngs_modulus" || key == "nodes" || key == "sections" || key == "elements" ||
                        key == "masses",
                    "geometry: unknown key " + key);
        g.youngs_modulus = j.at("youngs_modulus").get<double>();
        require(j.at("nodes").size() == kNodeCount, "geometry: exactly 6 nodes required");
        for (const auto& n : j.at("nodes")) {
            const int id = n.at("id").get<int>();
            require(id >= 1 && id <= kNodeCount, "geometry: node id out of range");
            g.nodes[id - 1] = {n.at("x").get<double>(), n.at("y").get<double>()};
        }
        for (const auto& [name, s] : j.at("sections").items())
            g.sections[name] = {s.at("A").get<double>(), s.at("I").get<double>(), s.at("Z").get<double>()};
        require(j.at("elements").size() == kElementCount, "geometry: exactly 5 elements required");
        for (const auto& e : j.at("elements")) {
            const int id = e.at("id").get<int>();
            require(id >= 1 && id <= kElementCount, "geometry: element id out of range");
            g.elements[id - 1] = {e.at("i").get<int>(), e.at("j").get<int>(), e.at("section").get<std::string>()};
        }
        for (const auto& m : j.at("masses")) g.masses[m.at("node").get<int>()] = m.at("kg").get<double>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("geometry: ") + e.what());
    }
    g.validate();
    return g;
}

FrameGeometry load_geometry(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open geometry file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_geometry(ss.str());
}

std::filesystem::path default_geometry_path() { return std::filesystem::path(MVBU_DATA_DIR) / "frame_geometry.json"; }

const FrameGeometry& default_geometry()
{
    static const FrameGeometry g = load_geometry(default_geometry_path());
    return g;
}

void FrameBounds::check(const FrameParameters& p) const
{
    require(p.stiffness_ratio > 0.0 && p.k_theta_1 > 0.0 && p.k_theta_6 > 0.0,
            "frame parameters must be positive");
    require(p.stiffness_ratio >= ratio_min && p.stiffness_ratio <= ratio_max, "R outside its bounds");
    require(p.k_theta_1 >= spring_min && p.k_theta_1 <= spring_max, "k_theta_1 outside its bounds");
    require(p.k_theta_6 >= spring_min && p.k_theta_6 <= spring_max, "k_theta_6 outside its bounds");
}

MatrixXd element_stiffness_local(double ea, double ei, double l)
{
    MatrixXd k = MatrixXd::Zero(6, 6);
    const double a = ea / l;
    const double b = 12.0 * ei / (l * l * l);
    const double c = 6.0 * ei / (l * l);
    const double d = 4.0 * ei / l;
    const double e = 2.0 * ei / l;
    k(0, 0) = a;  k(0, 3) = -a;
    k(3, 0) = -a; k(3, 3) = a;
    k(1, 1) = b;  k(1, 2) = c;  k(1, 4) = -b; k(1, 5) = c;
    k(2, 1) = c;  k(2, 2) = d;  k(2, 4) = -c; k(2, 5) = e;
    k(4, 1) = -b; k(4, 2) = -c; k(4, 4) = b;  k(4, 5) = -c;
    k(5, 1) = c;  k(5, 2) = e;  k(5, 4) = -c; k(5, 5) = d;
    return k;
}

int FrameModel::free_index(int node, int component) const
{
    const int g = gdof(node, component);
    const auto it = std::find(free_dofs.begin(), free_dofs.end(), g);
    return it == free_dofs.end() ? -1 : static_cast<int>(it - free_dofs.begin());
}

FrameModel assemble(const FrameGeometry& geometry, const FrameParameters& params, const FrameBounds& bounds,
                    BaseCondition base)
{
    geometry.validate();
    bounds.check(params);

    FrameModel m;
    m.params = params;
    constexpr int n_global = 3 * kNodeCount;
    MatrixXd kg = MatrixXd::Zero(n_global, n_global);
    for (int id = 1; id <= kElementCount; ++id) {
        const auto f = element_frame(geometry, id, bending_scale(m, id));
        const MatrixXd ke = f.t.transpose() * f.k_local * f.t;
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) kg(f.dofs[r], f.dofs[c]) += ke(r, c);
    }
    if (base == BaseCondition::Springs) {
        kg(gdof(1, 2), gdof(1, 2)) += params.k_theta_1 * kSpringToSi;
        kg(gdof(6, 2), gdof(6, 2)) += params.k_theta_6 * kSpringToSi;
    }

    for (int g = 0; g < n_global; ++g) {
        const int node = g / 3 + 1;
        const int comp = g % 3;
        const bool support = node == 1 || node == kNodeCount;
        if (support && (comp < 2 || base == BaseCondition::Clamped)) continue;
        m.free_dofs.push_back(g);
    }
    const int nf = static_cast<int>(m.free_dofs.size());
    m.stiffness.resize(nf, nf);
    for (int r = 0; r < nf; ++r)
        for (int c = 0; c < nf; ++c) m.stiffness(r, c) = kg(m.free_dofs[r], m.free_dofs[c]);

    std::vector<int> master;
    std::vector<double> master_mass;
    VectorXd influence;
    for (const auto& [node, kgm] : geometry.masses)
        for (int comp = 0; comp < 2; ++comp) {
            master.push_back(m.free_index(node, comp));
            master_mass.push_back(kgm);
        }
    std::vector<int> slave;
    for (int i = 0; i < nf; ++i)
        if (std::find(master.begin(), master.end(), i) == master.end()) slave.push_back(i);

    const int nm = static_cast<int>(master.size());
    const int ns = static_cast<int>(slave.size());
    MatrixXd kmm(nm, nm), kms(nm, ns), kss(ns, ns);
    for (int r = 0; r < nm; ++r) {
        for (int c = 0; c < nm; ++c) kmm(r, c) = m.stiffness(master[r], master[c]);
        for (int c = 0; c < ns; ++c) kms(r, c) = m.stiffness(master[r], slave[c]);
    }
    for (int r = 0; r < ns; ++r)
        for (int c = 0; c < ns; ++c) kss(r, c) = m.stiffness(slave[r], slave[c]);

    Eigen::LLT<MatrixXd> kss_llt(kss);
    if (kss_llt.info() != Eigen::Success) throw NumericalError("frame: singular stiffness on massless DOFs");
    const MatrixXd back = -kss_llt.solve(kms.transpose()); // ns x nm
    MatrixXd kc = kmm + kms * back;
    kc = 0.5 * (kc + kc.transpose());
    Eigen::LLT<MatrixXd> kc_llt(kc);
    if (kc_llt.info() != Eigen::Success) throw NumericalError("frame: condensed stiffness is not positive definite");

    m.recovery = MatrixXd::Zero(nf, nm);
    for (int r = 0; r < nm; ++r) m.recovery(master[r], r) = 1.0;
    for (int r = 0; r < ns; ++r) m.recovery.row(slave[r]) = back.row(r);

    auto& sys = m.condensed;
    sys.mass = MatrixXd::Zero(nm, nm);
    sys.influence = VectorXd::Zero(nm);
    for (int r = 0; r < nm; ++r) {
        sys.mass(r, r) = master_mass[r];
        sys.influence(r) = (r % 2 == 0) ? 1.0 : 0.0; // horizontal ground motion
    }
    sys.stiffness = kc;
    const auto mode = dynamics::modal_first(sys.mass, sys.stiffness);
    sys.damping = dynamics::stiffness_proportional_damping(kc, mode.frequency_hz, kDampingRatio);
    return m;
}

StrainLocation strain_location_from_string(const std::string& s)
{
    for (auto loc : kStrainLocations)
        if (to_string(loc) == s) return loc;
    throw ValidationError("unknown strain location: " + s);
}

std::string to_string(StrainLocation loc)
{
    switch (loc) {
    case StrainLocation::Element1Bottom: return "element1-bottom";
    case StrainLocation::Element2Bottom: return "element2-bottom";
    case StrainLocation::Element3Top: return "element3-top";
    case StrainLocation::Element4Top: return "element4-top";
    }
    throw ValidationError("unknown strain location");
}

VectorXd end_moment_row(const FrameModel& model, const FrameGeometry& geometry, StrainLocation loc)
{
    const auto li = info(loc);
    const auto f = element_frame(geometry, li.element, bending_scale(model, li.element));
    const Eigen::RowVectorXd local_row = (f.k_local * f.t).row(li.end_j ? 5 : 2);
    VectorXd row = VectorXd::Zero(static_cast<Eigen::Index>(model.free_dofs.size()));
    for (int c = 0; c < 6; ++c) {
        const auto it = std::find(model.free_dofs.begin(), model.free_dofs.end(), f.dofs[c]);
        if (it != model.free_dofs.end()) row(it - model.free_dofs.begin()) += local_row(c);
    }
    return row;
}

double strain_at(const VectorXd& u_free, const FrameModel& model, const FrameGeometry& geometry, StrainLocation loc)
{
    const double ez = geometry.youngs_modulus * geometry.section_of(info(loc).element).section_modulus;
    return end_moment_row(model, geometry, loc).dot(u_free) / ez;
}

TimeSeries recover_strain(const dynamics::ResponseHistory& history, const FrameModel& model,
                          const FrameGeometry& geometry, StrainLocation loc)
{
    require(history.displacement.rows() == model.recovery.cols(), "history does not match the condensed model");
    const double ez = geometry.youngs_modulus * geometry.section_of(info(loc).element).section_modulus;
    const Eigen::RowVectorXd w = end_moment_row(model, geometry, loc).transpose() * model.recovery / ez;
    const Eigen::RowVectorXd eps = w * history.displacement;
    return TimeSeries(history.dt, std::vector<double>(eps.data(), eps.data() + eps.size()));
}

FrameResponse simulate_frame(const FrameParameters& params, const TimeSeries& ground, const signals::NoiseSpec& noise,
                             const FrameGeometry& geometry, const FrameBounds& bounds)
{
    ground.validate("ground motion");
    const auto model = assemble(geometry, params, bounds);
    dynamics::IntegrationConfig cfg;
    cfg.dt = ground.dt;
    const auto h = dynamics::integrate(model.condensed, ground, cfg);

    const int node4_x = [&] {
        int idx = 0;
        for (const auto& [node, _] : geometry.masses) {
            if (node == 4) return idx;
            idx += 2;
        }
        throw ValidationError("geometry: node 4 carries no mass, so its acceleration is not modelled");
    }();

    FrameResponse out;
    std::array<TimeSeries, kFrameChannels> clean;
    clean[0] = h.channel(h.absolute_acceleration, node4_x);
    for (int i = 0; i < 4; ++i) clean[i + 1] = recover_strain(h, model, geometry, kStrainLocations[i]);
    for (int c = 0; c < kFrameChannels; ++c)
        out.channels[c] = signals::add_noise(clean[c], noise.with_seed(derive_seed(noise.seed, c)));
    return out;
}

} // namespace mvbu::frame
