#pragma once

#include <Eigen/Core>

#include "mmta/errors.hpp"

namespace mmta::qp {

/// Convex QP in standard inequality form:
///   minimize 0.5 z' H z + g' z + constant  subject to  rows z >= rhs.
/// H must be symmetric positive semidefinite with gradient orthogonal to its
/// null space (true for every problem this project assembles); variable
/// bounds are expected as rows.
struct Problem {
    Eigen::MatrixXd hessian;
    Eigen::VectorXd gradient;
    double constant = 0;
    Eigen::MatrixXd rows;
    Eigen::VectorXd rhs;

    int var_count() const { return static_cast<int>(gradient.size()); }
    int row_count() const { return static_cast<int>(rhs.size()); }
    void validate() const;
    double cost(const Eigen::VectorXd& z) const;
};

enum class Status { Optimal, Infeasible, IterationLimit };

struct Solution {
    Status status = Status::Infeasible;
    Eigen::VectorXd z;
    Eigen::VectorXd multipliers; // one per row, >= 0 at optimality
    double cost = 0;
    int iterations = 0;

    // max-norm KKT residuals of the returned point
    double stationarity = 0;
    double feasibility = 0;    // max constraint violation, >= 0
    double complementarity = 0;
};

struct Options {
    double feas_tol = 1e-9;        // working feasibility tolerance
    double infeas_decision = 1e-7; // phase-1 objective above this => infeasible
    double audit_floor = 5e-8;     // accepted absolute stationarity at optimality
    int max_iterations = 0;        // 0: picked from the problem size
    bool trace = false;            // iteration log on stderr
};

/// Primal active-set solve; finds a feasible point first when needed.
Solution solve(const Problem& problem, const Options& options = {});

/// Same, but tries `hint` as the starting point before running phase 1.
Solution solve(const Problem& problem, const Eigen::VectorXd& hint, const Options& options = {});

} // namespace mmta::qp
