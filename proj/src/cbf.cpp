#include "mmta/cbf.hpp"

#include <cmath>

namespace mmta::cbf {

using dynamics::rotation;

TaskBarrier task_h(const TaskSpec& task, const Eigen::Vector2d& x) {
    TaskBarrier out;
    const Eigen::Vector2d d = x - task.target;
    out.value = -d.squaredNorm();
    out.gradient = -2.0 * d.transpose();
    return out;
}

CbfRow kinematic_row(double h, const Eigen::RowVectorXd& grad_h, const Eigen::VectorXd& f,
                     const Eigen::MatrixXd& g, LinearClassK gamma, int slack_index) {
    if (grad_h.size() != f.size() || f.size() != g.rows()) {
        throw DimensionError("cbf: kinematic_row state dimensions disagree");
    }
    const Eigen::RowVectorXd lgh = grad_h * g;
    const double lfh = grad_h * f;
    if (lgh.isZero(0.0) && !grad_h.isZero(0.0)) {
        throw HighRelativeDegreeError(
            "cbf: input does not appear in hdot (high relative degree); "
            "use high_rel_degree_row");
    }
    CbfRow row;
    row.a = lgh.transpose();
    row.b = -gamma(h) - lfh;
    row.slack_index = slack_index;
    return row;
}

FlowCoupling flow_coupling(const TaskSpec& task, const dynamics::UavState& state) {
    const Eigen::Vector2d d = state.position - task.target;
    const Eigen::Matrix2d r = rotation(state.theta());
    Eigen::Matrix2d r_theta; // dR/dtheta
    const double c = std::cos(state.theta());
    const double s = std::sin(state.theta());
    r_theta << -s, -c, c, -s;

    const Eigen::Vector2d v = state.motion.head<2>();
    FlowCoupling out;
    out.w = -2.0 * d.dot(r * v);
    out.dw_dx = -2.0 * (r * v).transpose();
    out.dw_dmotion.head<2>() = -2.0 * d.transpose() * r;
    out.dw_dmotion(2) = -2.0 * d.dot(r_theta * v);
    return out;
}

IntegralBarrier integral_h_prime(const TaskSpec& task, const dynamics::UavState& state) {
    const TaskBarrier barrier = task_h(task, state.position);
    const FlowCoupling flow = flow_coupling(task, state);
    IntegralBarrier out;
    out.value = flow.w + task.gamma1(barrier.value);
    out.d_position = flow.dw_dx + task.gamma1.slope * barrier.gradient;
    out.d_motion = flow.dw_dmotion;
    return out;
}

CbfRow high_rel_degree_row(const TaskSpec& task, const dynamics::UavState& state,
                           const dynamics::ModeSpec& mode, double k_v, int slack_index) {
    const TaskBarrier barrier = task_h(task, state.position);
    const FlowCoupling flow = flow_coupling(task, state);
    const Eigen::Vector2d xdot = rotation(state.theta()) * state.motion.head<2>();
    const Eigen::Vector3d drift = dynamics::motion_drift(state.motion, k_v);
    const Eigen::MatrixXd g = dynamics::input_matrix(mode, k_v);

    const double h_prime = flow.w + task.gamma1(barrier.value);
    // d/dt h' + gamma2(h') split into input terms a'u and the rest.
    const double lhs_const = flow.dw_dx.dot(xdot) + flow.dw_dmotion.dot(drift) +
                             task.gamma1.slope * flow.w + task.gamma2(h_prime);
    CbfRow row;
    row.a = (flow.dw_dmotion * g).transpose();
    row.b = -lhs_const;
    row.slack_index = slack_index;
    return row;
}

} // namespace mmta::cbf
