#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mmta/errors.hpp"

namespace mmta::dynamics {

/// Planar UAV state: position plus the motion triple [vx, vy, theta].
/// Velocities are expressed in the body frame; heading is not wrapped.
struct UavState {
    Eigen::Vector2d position = Eigen::Vector2d::Zero();
    Eigen::Vector3d motion = Eigen::Vector3d::Zero(); // vx, vy, theta

    double vx() const { return motion(0); }
    double vy() const { return motion(1); }
    double theta() const { return motion(2); }

    Eigen::Matrix<double, 5, 1> pack() const;
    static UavState unpack(const Eigen::Matrix<double, 5, 1>& z);
};

Eigen::Matrix2d rotation(double theta);

/// Weighted quadratic energy model: cost(u) = ||u - efficient_input||^2_weights.
struct EnergyParams {
    Eigen::VectorXd weights;
    Eigen::VectorXd efficient_input;
};

/// One operating mode of a robot. g_columns selects which columns of the
/// generic 3-column input matrix [k_v e1 | k_v e2 | e3] the mode keeps:
/// cruise keeps {0,2} (forward velocity, yaw rate), hover keeps {0,1}.
struct ModeSpec {
    int id = 0;
    std::string name;
    std::vector<int> g_columns;
    EnergyParams energy;

    int input_dim() const { return static_cast<int>(g_columns.size()); }

    static ModeSpec cruise(int id, double efficient_forward_speed, std::string name = "cruise");
    static ModeSpec hover(int id, std::string name = "hover");
};

/// Input matrix g of the mode's motion dynamics, 3 x input_dim.
Eigen::MatrixXd input_matrix(const ModeSpec& mode, double k_v);

/// Drift of the motion dynamics: [-k_v vx, -k_v vy, 0].
Eigen::Vector3d motion_drift(const Eigen::Vector3d& motion, double k_v);

struct UavDerivative {
    Eigen::Vector2d position;
    Eigen::Vector3d motion;
};

/// xdot = R(theta) [vx, vy]; motion_dot = drift + g u.
UavDerivative uav_derivative(const UavState& state, const ModeSpec& mode,
                             const Eigen::VectorXd& u, double k_v);

double energy_cost(const ModeSpec& mode, const Eigen::VectorXd& u);

/// cost(u) = u' Q u + c' u + constant, matching energy_cost for all u.
struct EnergyQuadratic {
    Eigen::MatrixXd Q;
    Eigen::VectorXd c;
    double constant = 0;

    double eval(const Eigen::VectorXd& u) const {
        return u.dot(Q * u) + c.dot(u) + constant;
    }
};

EnergyQuadratic energy_quadratic(const ModeSpec& mode);

struct IntegrationError : SolverError {
    explicit IntegrationError(const std::string& message, Eigen::VectorXd bad_state)
        : SolverError(message), state(std::move(bad_state)) {}
    Eigen::VectorXd state;
};

using DerivativeFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Classical fixed-step 4th-order Runge-Kutta. Throws IntegrationError (with
/// the offending state attached) if any stage derivative is non-finite.
Eigen::VectorXd rk4_step(const DerivativeFn& derivative, const Eigen::VectorXd& state, double dt);

/// RK4 step of the UAV under zero-order-hold input u in the given mode.
UavState rk4_step(const UavState& state, const ModeSpec& mode, const Eigen::VectorXd& u,
                  double k_v, double dt);

} // namespace mmta::dynamics
