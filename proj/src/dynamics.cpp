#include "mmta/dynamics.hpp"

#include <cmath>

namespace mmta::dynamics {

Eigen::Matrix<double, 5, 1> UavState::pack() const {
    Eigen::Matrix<double, 5, 1> z;
    z << position, motion;
    return z;
}

UavState UavState::unpack(const Eigen::Matrix<double, 5, 1>& z) {
    UavState s;
    s.position = z.head<2>();
    s.motion = z.tail<3>();
    return s;
}

Eigen::Matrix2d rotation(double theta) {
    Eigen::Matrix2d r;
    r << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return r;
}

ModeSpec ModeSpec::cruise(int id, double efficient_forward_speed, std::string name) {
    ModeSpec m;
    m.id = id;
    m.name = std::move(name);
    m.g_columns = {0, 2};
    m.energy.weights = Eigen::VectorXd::Ones(2);
    m.energy.efficient_input = Eigen::Vector2d(efficient_forward_speed, 0.0);
    return m;
}

ModeSpec ModeSpec::hover(int id, std::string name) {
    ModeSpec m;
    m.id = id;
    m.name = std::move(name);
    m.g_columns = {0, 1};
    m.energy.weights = Eigen::VectorXd::Ones(2);
    m.energy.efficient_input = Eigen::Vector2d::Zero();
    return m;
}

Eigen::MatrixXd input_matrix(const ModeSpec& mode, double k_v) {
    Eigen::Matrix3d full = Eigen::Matrix3d::Zero();
    full(0, 0) = k_v;
    full(1, 1) = k_v;
    full(2, 2) = 1.0;
    Eigen::MatrixXd g(3, mode.input_dim());
    for (int c = 0; c < mode.input_dim(); ++c) {
        const int col = mode.g_columns[static_cast<std::size_t>(c)];
        if (col < 0 || col > 2) {
            throw DimensionError("dynamics: mode '" + mode.name + "' keeps invalid column " +
                                 std::to_string(col));
        }
        g.col(c) = full.col(col);
    }
    return g;
}

Eigen::Vector3d motion_drift(const Eigen::Vector3d& motion, double k_v) {
    return {-k_v * motion(0), -k_v * motion(1), 0.0};
}

UavDerivative uav_derivative(const UavState& state, const ModeSpec& mode,
                             const Eigen::VectorXd& u, double k_v) {
    if (u.size() != mode.input_dim()) {
        throw DimensionError("dynamics: input has dimension " + std::to_string(u.size()) +
                             ", mode '" + mode.name + "' expects " +
                             std::to_string(mode.input_dim()));
    }
    UavDerivative d;
    d.position = rotation(state.theta()) * state.motion.head<2>();
    d.motion = motion_drift(state.motion, k_v) + input_matrix(mode, k_v) * u;
    return d;
}

double energy_cost(const ModeSpec& mode, const Eigen::VectorXd& u) {
    if (u.size() != mode.input_dim()) {
        throw DimensionError("dynamics: energy_cost input dimension mismatch for mode '" +
                             mode.name + "'");
    }
    if ((mode.energy.weights.array() < 0).any()) {
        throw ValidationError("dynamics: mode '" + mode.name + "' has negative energy weights");
    }
    const Eigen::VectorXd diff = u - mode.energy.efficient_input;
    return diff.dot(mode.energy.weights.asDiagonal() * diff);
}

EnergyQuadratic energy_quadratic(const ModeSpec& mode) {
    if ((mode.energy.weights.array() < 0).any()) {
        throw ValidationError("dynamics: mode '" + mode.name + "' has negative energy weights");
    }
    EnergyQuadratic q;
    q.Q = mode.energy.weights.asDiagonal();
    q.c = -2.0 * mode.energy.weights.cwiseProduct(mode.energy.efficient_input);
    q.constant = mode.energy.efficient_input.dot(
        mode.energy.weights.cwiseProduct(mode.energy.efficient_input));
    return q;
}

Eigen::VectorXd rk4_step(const DerivativeFn& derivative, const Eigen::VectorXd& state, double dt) {
    if (!(dt > 0)) {
        throw ValidationError("dynamics: rk4_step requires dt > 0");
    }
    auto eval = [&](const Eigen::VectorXd& z) {
        Eigen::VectorXd dz = derivative(z);
        if (!dz.allFinite()) {
            throw IntegrationError("dynamics: non-finite derivative during rk4_step", z);
        }
        return dz;
    };
    const Eigen::VectorXd k1 = eval(state);
    const Eigen::VectorXd k2 = eval(state + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = eval(state + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = eval(state + dt * k3);
    return state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

UavState rk4_step(const UavState& state, const ModeSpec& mode, const Eigen::VectorXd& u,
                  double k_v, double dt) {
    auto f = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const UavState s = UavState::unpack(z);
        const UavDerivative d = uav_derivative(s, mode, u, k_v);
        Eigen::Matrix<double, 5, 1> dz;
        dz << d.position, d.motion;
        return dz;
    };
    return UavState::unpack(rk4_step(f, state.pack(), dt));
}

} // namespace mmta::dynamics
