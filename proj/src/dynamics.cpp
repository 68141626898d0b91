#include "mvbu/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <numbers>

namespace mvbu::dynamics {

bool is_symmetric(const MatrixXd& a, double rel_tol)
{
    if (a.rows() != a.cols()) return false;
    const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

void LinearSystem::validate() const
{
    const auto n = mass.rows();
    require(n > 0, "linear system has no degrees of freedom");
    require(mass.cols() == n && stiffness.rows() == n && stiffness.cols() == n, "matrix size mismatch");
    require(damping.rows() == n && damping.cols() == n, "damping matrix size mismatch");
    require(influence.size() == n, "influence vector size mismatch");
    require(is_symmetric(mass), "mass matrix is not symmetric");
    require(is_symmetric(stiffness), "stiffness matrix is not symmetric");
    Eigen::LLT<MatrixXd> llt(mass);
    require(llt.info() == Eigen::Success, "mass matrix is not positive definite");
}

void IntegrationConfig::validate() const
{
    require(dt > 0.0, "integration dt must be positive");
    require(newmark_beta > 0.0 && newmark_beta <= 0.5, "Newmark beta must lie in (0, 0.5]");
    require(newmark_gamma > 0.0, "Newmark gamma must be positive");
    require(newton_tol > 0.0 && newton_max_iter > 0, "invalid Newton settings");
}

TimeSeries ResponseHistory::channel(const MatrixXd& m, int dof) const
{
    require(dof >= 0 && dof < m.rows(), "channel dof out of range");
    std::vector<double> v(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[j] = m(dof, j);
    return TimeSeries(dt, std::move(v));
}

ModalResult modal_first(const MatrixXd& mass, const MatrixXd& stiffness)
{
    require(mass.rows() == mass.cols() && stiffness.rows() == stiffness.cols() && mass.rows() == stiffness.rows(),
            "modal_first: matrix size mismatch");
    require(is_symmetric(mass), "modal_first: mass matrix is not symmetric");
    require(is_symmetric(stiffness), "modal_first: stiffness matrix is not symmetric");
    Eigen::LLT<MatrixXd> llt(mass);
    require(llt.info() == Eigen::Success, "modal_first: mass matrix is not positive definite");

    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(stiffness, mass);
    if (solver.info() != Eigen::Success) throw NumericalError("modal_first: eigen solver did not converge");

    const double omega2 = std::max(solver.eigenvalues()(0), 0.0);
    ModalResult out;
    out.frequency_hz = std::sqrt(omega2) / (2.0 * std::numbers::pi);
    VectorXd shape = solver.eigenvectors().col(0);
    Eigen::Index imax = 0;
    shape.cwiseAbs().maxCoeff(&imax);
    out.shape = shape / shape(imax);
    return out;
}

double stiffness_proportional_coefficient(double f1_hz, double zeta)
{
    require(f1_hz > 0.0, "first-mode frequency must be positive");
    require(zeta >= 0.0, "damping ratio must be non-negative");
    // zeta = a1 * omega / 2
    return zeta / (std::numbers::pi * f1_hz);
}

MatrixXd stiffness_proportional_damping(const MatrixXd& stiffness, double f1_hz, double zeta)
{
    return stiffness_proportional_coefficient(f1_hz, zeta) * stiffness;
}

ResponseHistory integrate(const LinearSystem& sys, const TimeSeries& ground, const IntegrationConfig& cfg,
                          const std::optional<InitialConditions>& init)
{
    sys.validate();
    cfg.validate();
    ground.validate("ground motion");
    require(std::abs(ground.dt - cfg.dt) <= 1e-12 * cfg.dt, "ground motion dt differs from integration dt");

    const int n = sys.dof_count();
    const int steps = static_cast<int>(ground.size());
    const double h = cfg.dt;
    const double beta = cfg.newmark_beta;
    const double gamma = cfg.newmark_gamma;

    ResponseHistory hist;
    hist.dt = h;
    hist.displacement = MatrixXd::Zero(n, steps);
    hist.velocity = MatrixXd::Zero(n, steps);
    hist.acceleration = MatrixXd::Zero(n, steps);
    hist.absolute_acceleration = MatrixXd::Zero(n, steps);

    VectorXd d = VectorXd::Zero(n);
    VectorXd v = VectorXd::Zero(n);
    if (init) {
        require(init->displacement.size() == n && init->velocity.size() == n, "initial condition size mismatch");
        d = init->displacement;
        v = init->velocity;
    }
    const VectorXd m_iota = sys.mass * sys.influence;
    const Eigen::LDLT<MatrixXd> mass_ldlt(sys.mass);
    VectorXd a = mass_ldlt.solve(VectorXd(-m_iota * ground.values[0] - sys.damping * v - sys.stiffness * d));

    const MatrixXd k_eff =
        sys.stiffness + (gamma / (beta * h)) * sys.damping + (1.0 / (beta * h * h)) * sys.mass;
    const Eigen::LDLT<MatrixXd> k_eff_ldlt(k_eff);
    if (k_eff_ldlt.info() != Eigen::Success) throw NumericalError("effective stiffness factorization failed");

    hist.displacement.col(0) = d;
    hist.velocity.col(0) = v;
    hist.acceleration.col(0) = a;
    hist.absolute_acceleration.col(0) = a + sys.influence * ground.values[0];

    for (int i = 1; i < steps; ++i) {
        const VectorXd d_pred = d + h * v + h * h * (0.5 - beta) * a;
        const VectorXd v_pred = v + h * (1.0 - gamma) * a;
        // Solve for d_{n+1} with a_{n+1} = (d - d_pred) / (beta h^2).
        const VectorXd rhs = -m_iota * ground.values[i] + sys.mass * (d_pred / (beta * h * h)) +
                             sys.damping * ((gamma / (beta * h)) * d_pred - v_pred);
        d = k_eff_ldlt.solve(rhs);
        a = (d - d_pred) / (beta * h * h);
        v = v_pred + gamma * h * a;
        if (!d.allFinite()) throw NumericalError("non-finite response at step " + std::to_string(i));
        hist.displacement.col(i) = d;
        hist.velocity.col(i) = v;
        hist.acceleration.col(i) = a;
        hist.absolute_acceleration.col(i) = a + sys.influence * ground.values[i];
    }
    return hist;
}

} // namespace mvbu::dynamics
