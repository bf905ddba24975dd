#pragma once

#include <array>
#include <vector>

#include <Eigen/Core>

#include "mmta/allocator.hpp"
#include "mmta/cbf.hpp"
#include "mmta/dynamics.hpp"
#include "mmta/encoding.hpp"

namespace mmta::cert {

/// Block layout of the stacked certificate vector
/// phi = [gamma1(h)', u', delta', alpha_bar', 1]'.
struct PhiLayout {
    int gamma_size = 0;
    int input_size = 0;
    int delta_size = 0;
    int alpha_size = 0;

    int gamma_start() const { return 0; }
    int input_start() const { return gamma_size; }
    int delta_start() const { return gamma_size + input_size; }
    int alpha_start() const { return gamma_size + input_size + delta_size; }
    int one_index() const { return total() - 1; }
    int total() const { return gamma_size + input_size + delta_size + alpha_size + 1; }
};

/// Cardinality rows rewritten as A x <= b quadratic-form data, plus the slack
/// box as +-I rows.
struct ConstraintForms {
    Eigen::MatrixXd a_alpha;
    Eigen::VectorXd b_alpha;
    Eigen::MatrixXd a_delta;
    Eigen::VectorXd b_delta;
};

ConstraintForms quadratic_constraint_forms(const alloc::MiqpProblem& problem);

/// Task -> executing virtual robot (-1 when unassigned); derived from an
/// allocation matrix. The certificate blocks tied to the plant flow evaluate
/// each h_j at the robot executing task j.
struct AssignmentMap {
    std::vector<int> task_virtual;

    static AssignmentMap from_alpha(const Eigen::MatrixXd& alpha);
};

struct CertificateMatrices {
    PhiLayout layout;
    Eigen::MatrixXd b0;      // kinematic-row certificate block
    Eigen::MatrixXd b0_hrd;  // degree-two certificate block
    Eigen::MatrixXd b1;
    Eigen::MatrixXd b2;
    Eigen::MatrixXd b3;
    ConstraintForms forms;
    double c = 1, c1 = 1, c2 = 1;
};

/// Fills the documented upper-triangular blocks at the given state and
/// symmetrizes exactly. b0_hrd is assembled so that phi' b0_hrd phi equals
/// -Vddot - (c1+c2) Vdot - c1 c2 V with V = h'h along the zero-order-hold
/// closed-loop flow.
CertificateMatrices assemble_certificate_matrices(
    const alloc::MiqpProblem& problem, const encoding::ModeIndex& idx,
    const std::vector<dynamics::ModeSpec>& vr_modes,
    const std::vector<dynamics::UavState>& states, const std::vector<cbf::TaskSpec>& tasks,
    const AssignmentMap& assignment, double k_v, double c, double c1, double c2);

/// phi evaluated at a concrete state and solver output.
Eigen::VectorXd build_phi(const alloc::MiqpProblem& problem, const encoding::ModeIndex& idx,
                          const std::vector<dynamics::UavState>& states,
                          const std::vector<cbf::TaskSpec>& tasks,
                          const AssignmentMap& assignment,
                          const std::vector<Eigen::VectorXd>& inputs,
                          const Eigen::VectorXd& delta, const Eigen::MatrixXd& alpha);

struct JacobiResult {
    Eigen::VectorXd values;  // ascending
    Eigen::MatrixXd vectors; // columns match values
    int sweeps = 0;
};

/// Cyclic Jacobi eigensolver for symmetric matrices. Input must be symmetric
/// within 1e-12 (relative); throws ValidationError otherwise.
JacobiResult jacobi_eigensystem(const Eigen::MatrixXd& m);

/// Smallest eigenvalue; m is PSD iff the margin is >= -tol.
double psd_margin(const Eigen::MatrixXd& m);

struct TauGrid {
    double min = 1e-3;
    double max = 1e3;
    int points = 13;

    std::vector<double> values() const; // log-spaced, strictly positive
};

enum class Certificate { Kinematic, HighRelativeDegree };

struct SearchReport {
    bool feasible = false;
    std::array<double, 3> tau = {0, 0, 0};
    double margin = 0; // best min-eigenvalue over the grid
};

/// Grid search for positive tau with
/// min-eig(tau1 B1 + tau2 B2 + tau3 B3 - B0) >= -tol, B0_hrd replacing B0 for
/// the high-relative-degree certificate. Sufficient only: a grid miss does
/// not prove infeasibility.
SearchReport certificate_search(const CertificateMatrices& mats, Certificate which,
                                const TauGrid& grid, double tol = 1e-9);

} // namespace mmta::cert
