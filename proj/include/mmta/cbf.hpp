#pragma once

#include <string>

#include <Eigen/Core>

#include "mmta/dynamics.hpp"
#include "mmta/errors.hpp"

namespace mmta::cbf {

/// Linear class-K function gamma(h) = slope * h, slope > 0.
struct LinearClassK {
    double slope = 1.0;
    double operator()(double h) const { return slope * h; }
};

/// Position task: drive some robot to `target`. The barrier is
/// h(x) = -||x - target||^2, so h <= 0 and h = 0 exactly at the target.
struct TaskSpec {
    int id = 0;
    std::string name;
    Eigen::Vector2d target = Eigen::Vector2d::Zero();
    LinearClassK gamma1{5.0};
    LinearClassK gamma2{1.0};
    int n_min = 1;
    int n_max = 1;
};

struct TaskBarrier {
    double value = 0;
    Eigen::RowVector2d gradient = Eigen::RowVector2d::Zero();
};

TaskBarrier task_h(const TaskSpec& task, const Eigen::Vector2d& x);

/// One linear task-execution inequality in the mode input: a' u >= b - delta,
/// where delta is the slack variable at slack_index in the stacked layout.
struct CbfRow {
    Eigen::VectorXd a;
    double b = 0;
    int slack_index = -1;
};

/// Raised by kinematic_row when the input does not appear in hdot; the caller
/// should build the integral-barrier row instead.
struct HighRelativeDegreeError : SolverError {
    using SolverError::SolverError;
};

/// Relative-degree-one row: L_f h + L_g h u >= -gamma(h) - delta, rearranged
/// to a' u >= b - delta with a = (L_g h)', b = -gamma(h) - L_f h.
/// grad_h, f and g are all expressed over the same state coordinates.
CbfRow kinematic_row(double h, const Eigen::RowVectorXd& grad_h, const Eigen::VectorXd& f,
                     const Eigen::MatrixXd& g, LinearClassK gamma, int slack_index);

/// dh/dx f(motion) and its partials; shared by the integral barrier, the
/// degree-two row and the convergence certificates.
struct FlowCoupling {
    double w = 0;                  // dh/dx * f
    Eigen::RowVector2d dw_dx;      // over position
    Eigen::RowVector3d dw_dmotion; // over [vx, vy, theta]
};

FlowCoupling flow_coupling(const TaskSpec& task, const dynamics::UavState& state);

/// Integral barrier h' = dh/dx f + gamma1(h) with analytic partials.
struct IntegralBarrier {
    double value = 0;
    Eigen::RowVector2d d_position;
    Eigen::RowVector3d d_motion;
};

IntegralBarrier integral_h_prime(const TaskSpec& task, const dynamics::UavState& state);

/// Degree-two row: collects d/dt h' + gamma2(h') >= -delta into a' u >= b - delta.
CbfRow high_rel_degree_row(const TaskSpec& task, const dynamics::UavState& state,
                           const dynamics::ModeSpec& mode, double k_v, int slack_index);

} // namespace mmta::cbf
