#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mmta/cbf.hpp"
#include "mmta/dynamics.hpp"
#include "mmta/encoding.hpp"
#include "mmta/qp.hpp"

namespace mmta::alloc {

struct Params {
    double l1 = 1e6;        // infeasible-assignment penalty weight
    double l2 = 1e-4;       // slack weight
    double kappa = 1e4;     // priority ratio between slacks
    double delta_max = 1e4; // slack box bound
};

/// Per-robot prioritization blocks: theta delta_[i] + phi alpha_[i] <= psi.
/// One row per (task j, mode k, other mode k') and per (task j, mode k,
/// other task j'); a row turns vacuous when its alpha entry is 0.
struct PrioritizationRows {
    Eigen::MatrixXd theta;
    Eigen::MatrixXd phi;
    Eigen::VectorXd psi;
    double kappa = 0;
    double delta_max = 0;

    int row_count() const { return static_cast<int>(psi.size()); }
};

PrioritizationRows prioritization_rows(int task_count, int mode_count, double kappa,
                                       double delta_max);

/// Index bookkeeping for the stacked decision vector z = [u; delta; alpha].
/// Inputs are stacked per virtual robot with per-mode dimensions; delta and
/// alpha hold one length-n_t block per virtual robot.
struct Layout {
    int task_count = 0;
    int vr_count = 0;
    std::vector<int> input_offset;
    std::vector<int> input_size;
    int input_total = 0;

    int slack_count() const { return task_count * vr_count; }
    int total() const { return input_total + 2 * slack_count(); }
    int delta_start() const { return input_total; }
    int alpha_start() const { return input_total + slack_count(); }
    int delta_index(int v, int j) const { return delta_start() + v * task_count + j; }
    int alpha_index(int v, int j) const { return alpha_start() + v * task_count + j; }
};

/// The assembled mixed-integer quadratic program for one control step.
struct MiqpProblem {
    Layout layout;
    Params params;

    // objective 0.5 z' diag(hessian_diag) z + gradient' z + constant
    Eigen::VectorXd hessian_diag;
    Eigen::VectorXd gradient;
    double constant = 0;

    // task-execution + prioritization + slack-box rows over z, oriented >=
    Eigen::MatrixXd rows;
    Eigen::VectorXd rhs;

    // cardinality rows over the stacked alpha block alone, oriented >=
    Eigen::MatrixXd alpha_rows;
    Eigen::VectorXd alpha_rhs;

    std::vector<PrioritizationRows> prioritization; // per robot
    std::vector<cbf::CbfRow> cbf_rows;

    Eigen::VectorXd stack_alpha(const Eigen::MatrixXd& alpha) const;
    Eigen::MatrixXd unstack_alpha(const Eigen::VectorXd& stacked) const;
    bool alpha_cardinality_ok(const Eigen::VectorXd& stacked, double tol = 1e-9) const;
};

/// Builds the full program: penalty/energy/slack objective, one CBF row per
/// (virtual robot, task), prioritization rows per robot, cardinality rows and
/// slack box bounds. Throws DimensionError naming the offending block.
MiqpProblem assemble_miqp(const encoding::ModeIndex& idx,
                          const std::vector<dynamics::ModeSpec>& vr_modes,
                          const encoding::SpecializationSet& spec,
                          const encoding::MappingMatrices& maps,
                          const std::vector<cbf::TaskSpec>& tasks,
                          const std::vector<cbf::CbfRow>& rows, const Params& params);

struct FixedAlphaResult {
    bool feasible = false;
    std::vector<Eigen::VectorXd> inputs; // per virtual robot
    Eigen::VectorXd delta;
    double cost = 0;
    qp::Solution qp;
};

/// Solves the continuous subproblem in (u, delta) for a fixed binary alpha.
/// alpha must be binary and satisfy the cardinality rows (checked; throws
/// ValidationError otherwise). Returns infeasible when the required slack
/// exceeds the box.
FixedAlphaResult solve_qp_fixed_alpha(const MiqpProblem& problem, const Eigen::MatrixXd& alpha);

struct KktWorst {
    double stationarity = 0;
    double feasibility = 0;
    double complementarity = 0;

    void absorb(const qp::Solution& s);
    void absorb(const KktWorst& other);
};

struct AllocationSolution {
    enum class Status { Optimal, Infeasible, NodeLimit };
    Status status = Status::Infeasible;
    Eigen::MatrixXd alpha; // n_t x n_vr binary
    std::vector<Eigen::VectorXd> inputs;
    Eigen::VectorXd delta;
    double cost = 0;
    qp::Solution qp;    // subproblem solution at the returned alpha
    int nodes = 0;      // relaxations solved
    KktWorst kkt_worst; // residual maxima over every subproblem touched
};

/// Exact branch-and-bound over the binary alphas: QP relaxation bounds,
/// most-fractional branching, best-bound node order, cost ties broken by the
/// lexicographically smallest stacked alpha. Deterministic.
AllocationSolution solve_allocation(const MiqpProblem& problem,
                                    const Eigen::MatrixXd* warm_alpha = nullptr,
                                    int node_limit = 20000);

/// Brute-force oracle: tries every binary alpha (guarded to
/// task_count * vr_count <= 12), filters by the cardinality rows, solves each
/// subproblem and applies the same tie-breaking as solve_allocation.
AllocationSolution enumerate_exhaustive(const MiqpProblem& problem);

} // namespace mmta::alloc
