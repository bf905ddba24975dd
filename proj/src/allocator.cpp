#include "mmta/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <limits>
#include <queue>
#include <string>

namespace mmta::alloc {

namespace {

constexpr double kTieWindow = 1e-7;
constexpr double kIntegralTol = 1e-6;

} // namespace

PrioritizationRows prioritization_rows(int task_count, int mode_count, double kappa,
                                       double delta_max) {
    if (kappa <= 1.0 || delta_max <= 0.0) {
        throw ValidationError("allocator: prioritization needs kappa > 1 and delta_max > 0");
    }
    const int cols = task_count * mode_count;
    const int n_mode = task_count * mode_count * (mode_count - 1);
    const int n_task = task_count * (task_count - 1) * mode_count;
    PrioritizationRows out;
    out.kappa = kappa;
    out.delta_max = delta_max;
    out.theta = Eigen::MatrixXd::Zero(n_mode + n_task, cols);
    out.phi = Eigen::MatrixXd::Zero(n_mode + n_task, cols);
    out.psi = Eigen::VectorXd::Constant(n_mode + n_task, delta_max);

    auto col = [&](int mode, int task) { return mode * task_count + task; };
    int r = 0;
    // delta_(k,j) <= kappa^-1 delta_(k',j) + delta_max (1 - alpha_(k,j))
    for (int j = 0; j < task_count; ++j) {
        for (int k = 0; k < mode_count; ++k) {
            for (int kp = 0; kp < mode_count; ++kp) {
                if (kp == k) {
                    continue;
                }
                out.theta(r, col(k, j)) = 1.0;
                out.theta(r, col(kp, j)) = -1.0 / kappa;
                out.phi(r, col(k, j)) = delta_max;
                ++r;
            }
        }
    }
    // delta_(k,j) <= kappa^-1 delta_(k,j') + delta_max (1 - alpha_(k,j))
    for (int j = 0; j < task_count; ++j) {
        for (int k = 0; k < mode_count; ++k) {
            for (int jp = 0; jp < task_count; ++jp) {
                if (jp == j) {
                    continue;
                }
                out.theta(r, col(k, j)) = 1.0;
                out.theta(r, col(k, jp)) = -1.0 / kappa;
                out.phi(r, col(k, j)) = delta_max;
                ++r;
            }
        }
    }
    return out;
}

Eigen::VectorXd MiqpProblem::stack_alpha(const Eigen::MatrixXd& alpha) const {
    if (alpha.rows() != layout.task_count || alpha.cols() != layout.vr_count) {
        throw DimensionError("allocator: alpha matrix has wrong shape");
    }
    Eigen::VectorXd stacked(layout.slack_count());
    for (int v = 0; v < layout.vr_count; ++v) {
        stacked.segment(v * layout.task_count, layout.task_count) = alpha.col(v);
    }
    return stacked;
}

Eigen::MatrixXd MiqpProblem::unstack_alpha(const Eigen::VectorXd& stacked) const {
    Eigen::MatrixXd alpha(layout.task_count, layout.vr_count);
    for (int v = 0; v < layout.vr_count; ++v) {
        alpha.col(v) = stacked.segment(v * layout.task_count, layout.task_count);
    }
    return alpha;
}

bool MiqpProblem::alpha_cardinality_ok(const Eigen::VectorXd& stacked, double tol) const {
    if (alpha_rows.rows() == 0) {
        return true;
    }
    return (alpha_rows * stacked - alpha_rhs).minCoeff() >= -tol;
}

MiqpProblem assemble_miqp(const encoding::ModeIndex& idx,
                          const std::vector<dynamics::ModeSpec>& vr_modes,
                          const encoding::SpecializationSet& spec,
                          const encoding::MappingMatrices& maps,
                          const std::vector<cbf::TaskSpec>& tasks,
                          const std::vector<cbf::CbfRow>& rows, const Params& params) {
    const int n_vr = idx.count();
    const int n_t = static_cast<int>(tasks.size());
    if (static_cast<int>(vr_modes.size()) != n_vr) {
        throw DimensionError("allocator: mode list does not match virtual robot count");
    }
    if (spec.vr_count() != n_vr || spec.task_count() != n_t) {
        throw DimensionError("allocator: specialization block does not match layout");
    }
    if (maps.capability.cols() != n_vr || maps.requirement.rows() != n_t ||
        maps.requirement.cols() != maps.capability.rows()) {
        throw DimensionError("allocator: mapping matrix block does not match layout");
    }
    if (static_cast<int>(rows.size()) != n_t * n_vr) {
        throw DimensionError("allocator: expected one CBF row per (virtual robot, task)");
    }

    MiqpProblem p;
    p.params = params;
    p.layout.task_count = n_t;
    p.layout.vr_count = n_vr;
    p.layout.input_offset.resize(static_cast<std::size_t>(n_vr));
    p.layout.input_size.resize(static_cast<std::size_t>(n_vr));
    int off = 0;
    for (int v = 0; v < n_vr; ++v) {
        p.layout.input_offset[static_cast<std::size_t>(v)] = off;
        p.layout.input_size[static_cast<std::size_t>(v)] = vr_modes[static_cast<std::size_t>(v)].input_dim();
        off += vr_modes[static_cast<std::size_t>(v)].input_dim();
    }
    p.layout.input_total = off;

    const int n = p.layout.total();
    p.hessian_diag = Eigen::VectorXd::Zero(n);
    p.gradient = Eigen::VectorXd::Zero(n);
    p.constant = 0;

    for (int v = 0; v < n_vr; ++v) {
        const auto& mode = vr_modes[static_cast<std::size_t>(v)];
        const dynamics::EnergyQuadratic q = dynamics::energy_quadratic(mode);
        const int uo = p.layout.input_offset[static_cast<std::size_t>(v)];
        for (int c = 0; c < mode.input_dim(); ++c) {
            p.hessian_diag(uo + c) = 2.0 * q.Q(c, c);
            p.gradient(uo + c) = q.c(c);
        }
        p.constant += q.constant;
        for (int j = 0; j < n_t; ++j) {
            p.hessian_diag(p.layout.delta_index(v, j)) = 2.0 * params.l2 * spec.support(j, v);
            p.hessian_diag(p.layout.alpha_index(v, j)) = 2.0 * params.l1 * spec.penalty(j, v);
        }
    }

    // continuous rows: CBF, prioritization (negated to >=), delta box
    int prio_total = 0;
    std::vector<int> robot_first_vr;
    {
        int robot = -1;
        for (int v = 0; v < n_vr; ++v) {
            if (idx.robot_mode(v).first != robot) {
                robot = idx.robot_mode(v).first;
                robot_first_vr.push_back(v);
            }
        }
    }
    const int n_robots = static_cast<int>(robot_first_vr.size());
    p.prioritization.reserve(static_cast<std::size_t>(n_robots));
    for (int i = 0; i < n_robots; ++i) {
        const int first = robot_first_vr[static_cast<std::size_t>(i)];
        const int modes = (i + 1 < n_robots ? robot_first_vr[static_cast<std::size_t>(i) + 1] : n_vr) - first;
        p.prioritization.push_back(prioritization_rows(n_t, modes, params.kappa, params.delta_max));
        prio_total += p.prioritization.back().row_count();
    }

    const int n_cbf = n_t * n_vr;
    const int n_box = 2 * p.layout.slack_count();
    p.rows = Eigen::MatrixXd::Zero(n_cbf + prio_total + n_box, n);
    p.rhs = Eigen::VectorXd::Zero(n_cbf + prio_total + n_box);

    p.cbf_rows = rows;
    for (const auto& row : rows) {
        if (row.slack_index < 0 || row.slack_index >= p.layout.slack_count()) {
            throw DimensionError("allocator: CBF row slack index out of range");
        }
        const int v = row.slack_index / n_t;
        if (row.a.size() != p.layout.input_size[static_cast<std::size_t>(v)]) {
            throw DimensionError("allocator: CBF row input block does not match mode " +
                                 vr_modes[static_cast<std::size_t>(v)].name);
        }
        const int r = row.slack_index; // one row per slack, in slack order
        p.rows.block(r, p.layout.input_offset[static_cast<std::size_t>(v)], 1, row.a.size()) =
            row.a.transpose();
        p.rows(r, p.layout.delta_start() + row.slack_index) = 1.0;
        p.rhs(r) = row.b;
    }

    int r = n_cbf;
    for (int i = 0; i < n_robots; ++i) {
        const auto& blocks = p.prioritization[static_cast<std::size_t>(i)];
        const int first = robot_first_vr[static_cast<std::size_t>(i)];
        const int d0 = p.layout.delta_start() + first * n_t;
        const int a0 = p.layout.alpha_start() + first * n_t;
        const int cols = static_cast<int>(blocks.theta.cols());
        for (int k = 0; k < blocks.row_count(); ++k, ++r) {
            p.rows.block(r, d0, 1, cols) = -blocks.theta.row(k);
            p.rows.block(r, a0, 1, cols) = -blocks.phi.row(k);
            p.rhs(r) = -blocks.psi(k);
        }
    }
    for (int s = 0; s < p.layout.slack_count(); ++s) {
        p.rows(r, p.layout.delta_start() + s) = 1.0;
        p.rhs(r) = -params.delta_max;
        ++r;
        p.rows(r, p.layout.delta_start() + s) = -1.0;
        p.rhs(r) = -params.delta_max;
        ++r;
    }

    // cardinality rows over stacked alpha: one-task-per-robot, capability
    // requirements, per-task robot count limits
    const int n_c = static_cast<int>(maps.capability.rows());
    const int n_alloc_rows = n_robots + n_t * n_c + 2 * n_t;
    p.alpha_rows = Eigen::MatrixXd::Zero(n_alloc_rows, p.layout.slack_count());
    p.alpha_rhs = Eigen::VectorXd::Zero(n_alloc_rows);
    r = 0;
    for (int i = 0; i < n_robots; ++i) {
        const int first = robot_first_vr[static_cast<std::size_t>(i)];
        const int last = i + 1 < n_robots ? robot_first_vr[static_cast<std::size_t>(i) + 1] : n_vr;
        for (int v = first; v < last; ++v) {
            for (int j = 0; j < n_t; ++j) {
                p.alpha_rows(r, v * n_t + j) = -1.0;
            }
        }
        p.alpha_rhs(r) = -1.0;
        ++r;
    }
    for (int j = 0; j < n_t; ++j) {
        for (int l = 0; l < n_c; ++l, ++r) {
            for (int v = 0; v < n_vr; ++v) {
                p.alpha_rows(r, v * n_t + j) = maps.capability(l, v);
            }
            p.alpha_rhs(r) = maps.requirement(j, l);
        }
    }
    for (int j = 0; j < n_t; ++j) {
        if (tasks[static_cast<std::size_t>(j)].n_min > tasks[static_cast<std::size_t>(j)].n_max) {
            throw ValidationError("allocator: task '" + tasks[static_cast<std::size_t>(j)].name +
                                  "' has n_min > n_max");
        }
        for (int v = 0; v < n_vr; ++v) {
            p.alpha_rows(r, v * n_t + j) = 1.0;
            p.alpha_rows(r + 1, v * n_t + j) = -1.0;
        }
        p.alpha_rhs(r) = tasks[static_cast<std::size_t>(j)].n_min;
        p.alpha_rhs(r + 1) = -tasks[static_cast<std::size_t>(j)].n_max;
        r += 2;
    }
    return p;
}

namespace {

// Continuous QP over (u, delta, free alphas) with the fixed alphas folded
// into the right-hand sides and the cost constant.
struct NodeQp {
    qp::Problem problem;
    std::vector<int> vars;       // z index per QP variable
    std::vector<int> free_alpha; // stacked-alpha indices kept as variables
    bool trivially_infeasible = false;
};

NodeQp build_node_qp(const MiqpProblem& p, const std::vector<std::int8_t>& fix) {
    const int n_alpha = p.layout.slack_count();
    NodeQp node;
    node.vars.reserve(static_cast<std::size_t>(p.layout.total()));
    for (int i = 0; i < p.layout.alpha_start(); ++i) {
        node.vars.push_back(i);
    }
    for (int s = 0; s < n_alpha; ++s) {
        if (fix[static_cast<std::size_t>(s)] < 0) {
            node.vars.push_back(p.layout.alpha_start() + s);
            node.free_alpha.push_back(s);
        }
    }
    const int nv = static_cast<int>(node.vars.size());
    std::vector<int> where(static_cast<std::size_t>(p.layout.total()), -1);
    for (int i = 0; i < nv; ++i) {
        where[static_cast<std::size_t>(node.vars[static_cast<std::size_t>(i)])] = i;
    }

    qp::Problem& q = node.problem;
    q.hessian = Eigen::MatrixXd::Zero(nv, nv);
    q.gradient = Eigen::VectorXd::Zero(nv);
    q.constant = p.constant;
    for (int i = 0; i < nv; ++i) {
        const int zi = node.vars[static_cast<std::size_t>(i)];
        q.hessian(i, i) = p.hessian_diag(zi);
        q.gradient(i) = p.gradient(zi);
    }
    for (int s = 0; s < n_alpha; ++s) {
        const std::int8_t f = fix[static_cast<std::size_t>(s)];
        if (f >= 0) {
            const int zi = p.layout.alpha_start() + s;
            const double val = static_cast<double>(f);
            q.constant += 0.5 * p.hessian_diag(zi) * val * val + p.gradient(zi) * val;
        }
    }

    const int n_free_alpha = static_cast<int>(node.free_alpha.size());
    const int m_cont = static_cast<int>(p.rows.rows());
    const int m_alpha = static_cast<int>(p.alpha_rows.rows());
    std::vector<Eigen::VectorXd> kept_rows;
    std::vector<double> kept_rhs;
    kept_rows.reserve(static_cast<std::size_t>(m_cont + m_alpha + 2 * n_free_alpha));

    auto map_row = [&](const Eigen::RowVectorXd& full_row, double rhs, bool alpha_only) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(nv);
        double b = rhs;
        bool any_free = false;
        const int base = alpha_only ? p.layout.alpha_start() : 0;
        for (int c = 0; c < full_row.size(); ++c) {
            const double coeff = full_row(c);
            if (coeff == 0.0) {
                continue;
            }
            const int zi = base + c;
            const int local = where[static_cast<std::size_t>(zi)];
            if (local >= 0) {
                row(local) = coeff;
                any_free = true;
            } else {
                const int s = zi - p.layout.alpha_start();
                b -= coeff * static_cast<double>(fix[static_cast<std::size_t>(s)]);
            }
        }
        if (!any_free) {
            if (b > 1e-9) {
                node.trivially_infeasible = true;
            }
            return;
        }
        // unit-norm rows: the box-bound coefficients span 1e-4..1e4 and
        // unnormalized they wreck ratio tests and multiplier scales
        const double norm = row.cwiseAbs().maxCoeff();
        kept_rows.push_back(row / norm);
        kept_rhs.push_back(b / norm);
    };

    for (int i = 0; i < m_cont; ++i) {
        map_row(p.rows.row(i), p.rhs(i), false);
    }
    for (int i = 0; i < m_alpha; ++i) {
        map_row(p.alpha_rows.row(i), p.alpha_rhs(i), true);
    }
    // box 0 <= alpha <= 1 for the relaxed binaries
    for (int s : node.free_alpha) {
        const int local = where[static_cast<std::size_t>(p.layout.alpha_start() + s)];
        Eigen::VectorXd lo = Eigen::VectorXd::Zero(nv);
        lo(local) = 1.0;
        kept_rows.push_back(lo);
        kept_rhs.push_back(0.0);
        Eigen::VectorXd hi = Eigen::VectorXd::Zero(nv);
        hi(local) = -1.0;
        kept_rows.push_back(hi);
        kept_rhs.push_back(-1.0);
    }

    q.rows = Eigen::MatrixXd::Zero(static_cast<int>(kept_rows.size()), nv);
    q.rhs = Eigen::VectorXd::Zero(static_cast<int>(kept_rows.size()));
    for (int i = 0; i < static_cast<int>(kept_rows.size()); ++i) {
        q.rows.row(i) = kept_rows[static_cast<std::size_t>(i)].transpose();
        q.rhs(i) = kept_rhs[static_cast<std::size_t>(i)];
    }
    return node;
}

FixedAlphaResult run_fixed(const MiqpProblem& p, const Eigen::VectorXd& stacked,
                           const Eigen::VectorXd* hint) {
    std::vector<std::int8_t> fix(static_cast<std::size_t>(p.layout.slack_count()));
    for (int s = 0; s < p.layout.slack_count(); ++s) {
        fix[static_cast<std::size_t>(s)] = static_cast<std::int8_t>(std::lround(stacked(s)));
    }
    NodeQp node = build_node_qp(p, fix);
    FixedAlphaResult out;
    if (node.trivially_infeasible) {
        return out;
    }
    Eigen::VectorXd start = Eigen::VectorXd::Zero(node.problem.var_count());
    if (hint != nullptr && hint->size() == node.problem.var_count()) {
        start = *hint;
    }
    out.qp = qp::solve(node.problem, start);
    if (out.qp.status == qp::Status::IterationLimit) {
        throw SolverError("allocator: QP iteration limit on fixed-assignment subproblem");
    }
    if (out.qp.status != qp::Status::Optimal) {
        return out;
    }
    out.feasible = true;
    out.cost = out.qp.cost;
    out.inputs.resize(static_cast<std::size_t>(p.layout.vr_count));
    for (int v = 0; v < p.layout.vr_count; ++v) {
        out.inputs[static_cast<std::size_t>(v)] =
            out.qp.z.segment(p.layout.input_offset[static_cast<std::size_t>(v)],
                             p.layout.input_size[static_cast<std::size_t>(v)]);
    }
    out.delta = out.qp.z.segment(p.layout.input_total, p.layout.slack_count());
    return out;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (int i = 0; i < a.size(); ++i) {
        if (a(i) != b(i)) {
            return a(i) < b(i);
        }
    }
    return false;
}

struct Candidate {
    Eigen::VectorXd stacked;
    FixedAlphaResult result;
};

// Shared tie-breaking fold: scan candidates in lexicographically ascending
// alpha order, replacing the leader only on a strict cost win. Equal-cost
// (within the window) later candidates are lexicographically larger and lose.
int fold_candidates(std::vector<Candidate>& candidates) {
    std::vector<int> order(candidates.size());
    for (int i = 0; i < static_cast<int>(order.size()); ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return lex_less(candidates[static_cast<std::size_t>(a)].stacked,
                        candidates[static_cast<std::size_t>(b)].stacked);
    });
    int best = -1;
    for (int i : order) {
        if (best == -1 ||
            candidates[static_cast<std::size_t>(i)].result.cost <
                candidates[static_cast<std::size_t>(best)].result.cost - kTieWindow) {
            best = i;
        }
    }
    return best;
}

void finish_solution(const MiqpProblem& p, AllocationSolution& sol, std::vector<Candidate>& cands) {
    if (std::getenv("MMTA_BB_DEBUG") != nullptr) {
        for (const auto& c : cands) {
            std::string bits;
            for (int s = 0; s < c.stacked.size(); ++s) {
                bits += c.stacked(s) > 0.5 ? '1' : '0';
            }
            std::fprintf(stderr, "candidate %s cost %.12g\n", bits.c_str(), c.result.cost);
        }
    }
    const int best = fold_candidates(cands);
    if (best == -1) {
        if (sol.status != AllocationSolution::Status::NodeLimit) {
            sol.status = AllocationSolution::Status::Infeasible;
        }
        return;
    }
    Candidate& c = cands[static_cast<std::size_t>(best)];
    if (sol.status != AllocationSolution::Status::NodeLimit) {
        sol.status = AllocationSolution::Status::Optimal;
    }
    sol.alpha = p.unstack_alpha(c.stacked);
    sol.inputs = std::move(c.result.inputs);
    sol.delta = std::move(c.result.delta);
    sol.cost = c.result.cost;
    sol.qp = std::move(c.result.qp);
}

} // namespace

void KktWorst::absorb(const qp::Solution& s) {
    if (s.status != qp::Status::Optimal) {
        return; // infeasible probes carry no meaningful residuals
    }
    stationarity = std::max(stationarity, s.stationarity);
    feasibility = std::max(feasibility, s.feasibility);
    complementarity = std::max(complementarity, s.complementarity);
}

void KktWorst::absorb(const KktWorst& other) {
    stationarity = std::max(stationarity, other.stationarity);
    feasibility = std::max(feasibility, other.feasibility);
    complementarity = std::max(complementarity, other.complementarity);
}

FixedAlphaResult solve_qp_fixed_alpha(const MiqpProblem& problem, const Eigen::MatrixXd& alpha) {
    const Eigen::VectorXd stacked = problem.stack_alpha(alpha);
    for (int s = 0; s < stacked.size(); ++s) {
        if (stacked(s) != 0.0 && stacked(s) != 1.0) {
            throw ValidationError("allocator: fixed alpha must be binary");
        }
    }
    if (!problem.alpha_cardinality_ok(stacked)) {
        throw ValidationError("allocator: fixed alpha violates the cardinality rows");
    }
    return run_fixed(problem, stacked, nullptr);
}

AllocationSolution solve_allocation(const MiqpProblem& problem, const Eigen::MatrixXd* warm_alpha,
                                    int node_limit) {
    const int n_alpha = problem.layout.slack_count();
    AllocationSolution sol;
    std::vector<Candidate> candidates;
    double incumbent = std::numeric_limits<double>::infinity();

    Eigen::VectorXd root_hint; // full-z warm start for the root relaxation
    if (warm_alpha != nullptr) {
        const Eigen::VectorXd stacked = problem.stack_alpha(*warm_alpha);
        bool binary = true;
        for (int s = 0; s < n_alpha && binary; ++s) {
            binary = stacked(s) == 0.0 || stacked(s) == 1.0;
        }
        if (binary && problem.alpha_cardinality_ok(stacked)) {
            FixedAlphaResult warm = run_fixed(problem, stacked, nullptr);
            sol.kkt_worst.absorb(warm.qp);
            if (warm.feasible) {
                incumbent = warm.cost;
                root_hint = Eigen::VectorXd(problem.layout.total());
                root_hint << warm.qp.z, stacked;
                candidates.push_back({stacked, std::move(warm)});
            }
        }
    }

    struct Node {
        std::vector<std::int8_t> fix;
        Eigen::VectorXd relax_z; // in node-local variable order
        std::vector<int> vars;
        std::vector<int> free_alpha;
        double bound = 0;
        bool integral = false;
        int id = 0;
    };
    auto cmp = [](const Node& a, const Node& b) {
        if (a.bound != b.bound) {
            return a.bound > b.bound;
        }
        return a.id > b.id;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);
    int next_id = 0;
    int relaxations = 0;

    const bool bb_debug = std::getenv("MMTA_BB_DEBUG") != nullptr;
    auto eval_node = [&](std::vector<std::int8_t> fix, const Eigen::VectorXd* hint) -> bool {
        NodeQp nq = build_node_qp(problem, fix);
        if (nq.trivially_infeasible) {
            return true;
        }
        Eigen::VectorXd start = Eigen::VectorXd::Zero(nq.problem.var_count());
        if (hint != nullptr && hint->size() == nq.problem.var_count()) {
            start = *hint;
        }
        const qp::Solution relax = qp::solve(nq.problem, start);
        ++relaxations;
        sol.kkt_worst.absorb(relax);
        if (bb_debug) {
            std::string pat;
            for (std::int8_t f : fix) {
                pat += f < 0 ? '.' : static_cast<char>('0' + f);
            }
            std::fprintf(stderr, "node %s status=%d cost=%.12g inc=%.12g\n", pat.c_str(),
                         static_cast<int>(relax.status), relax.cost, incumbent);
        }
        if (relax.status == qp::Status::IterationLimit) {
            throw SolverError("allocator: QP iteration limit on relaxation");
        }
        if (relax.status != qp::Status::Optimal) {
            return true;
        }
        if (relax.cost > incumbent + kTieWindow) {
            return true; // pruned by bound
        }
        Node node;
        node.fix = std::move(fix);
        node.vars = std::move(nq.vars);
        node.free_alpha = std::move(nq.free_alpha);
        node.relax_z = relax.z;
        node.bound = relax.cost;
        node.id = next_id++;
        const int base = problem.layout.input_total; // local offset of delta block
        node.integral = true;
        for (std::size_t i = 0; i < node.free_alpha.size(); ++i) {
            const double x =
                node.relax_z(base + problem.layout.slack_count() + static_cast<int>(i));
            if (std::min(x, 1.0 - x) > kIntegralTol) {
                node.integral = false;
                break;
            }
        }
        open.push(std::move(node));
        return true;
    };

    std::vector<std::int8_t> root_fix(static_cast<std::size_t>(n_alpha), std::int8_t{-1});
    eval_node(std::move(root_fix), root_hint.size() > 0 ? &root_hint : nullptr);

    while (!open.empty()) {
        if (relaxations > node_limit) {
            sol.status = AllocationSolution::Status::NodeLimit;
            break;
        }
        Node node = open.top();
        open.pop();
        if (node.bound > incumbent + kTieWindow) {
            break; // best-bound order: everything left is worse
        }
        const int local_alpha = problem.layout.input_total + problem.layout.slack_count();
        auto consider = [&](const Eigen::VectorXd& stacked, const Eigen::VectorXd* hint) {
            if (!problem.alpha_cardinality_ok(stacked)) {
                return;
            }
            for (const auto& c : candidates) {
                if ((c.stacked - stacked).cwiseAbs().maxCoeff() == 0.0) {
                    return; // already solved this assignment
                }
            }
            FixedAlphaResult fixed = run_fixed(problem, stacked, hint);
            sol.kkt_worst.absorb(fixed.qp);
            if (fixed.feasible) {
                incumbent = std::min(incumbent, fixed.cost);
                candidates.push_back({stacked, std::move(fixed)});
            }
        };
        if (node.free_alpha.empty()) {
            Eigen::VectorXd stacked(n_alpha);
            for (int s = 0; s < n_alpha; ++s) {
                stacked(s) = static_cast<double>(node.fix[static_cast<std::size_t>(s)]);
            }
            Eigen::VectorXd hint =
                node.relax_z.head(problem.layout.input_total + problem.layout.slack_count());
            consider(stacked, &hint);
            continue;
        }
        if (node.integral) {
            // tighten the incumbent from the rounded point, but keep
            // branching: tied assignments may hide elsewhere in the subtree
            // and the lexicographic rule must see them all
            Eigen::VectorXd stacked(n_alpha);
            int fi = 0;
            for (int s = 0; s < n_alpha; ++s) {
                if (node.fix[static_cast<std::size_t>(s)] >= 0) {
                    stacked(s) = static_cast<double>(node.fix[static_cast<std::size_t>(s)]);
                } else {
                    stacked(s) = std::round(node.relax_z(local_alpha + fi));
                    ++fi;
                }
            }
            Eigen::VectorXd hint =
                node.relax_z.head(problem.layout.input_total + problem.layout.slack_count());
            consider(stacked, &hint);
        }

        // branch on the most fractional relaxed alpha (smallest index on
        // ties; integral nodes descend by smallest free index)
        int branch = node.free_alpha.front();
        double best_frac = -1.0;
        for (std::size_t i = 0; i < node.free_alpha.size(); ++i) {
            const double x = node.relax_z(local_alpha + static_cast<int>(i));
            const double frac = std::min(x, 1.0 - x);
            if (frac > best_frac + 1e-12) {
                best_frac = frac;
                branch = node.free_alpha[i];
            }
        }
        for (std::int8_t val : {std::int8_t{0}, std::int8_t{1}}) {
            std::vector<std::int8_t> child_fix = node.fix;
            child_fix[static_cast<std::size_t>(branch)] = val;
            // child hint: parent relaxation with the branched variable removed
            Eigen::VectorXd hint(node.relax_z.size() - 1);
            int w = 0;
            for (std::size_t i = 0; i < node.vars.size(); ++i) {
                if (node.vars[i] == problem.layout.alpha_start() + branch) {
                    continue;
                }
                hint(w++) = node.relax_z(static_cast<int>(i));
            }
            eval_node(std::move(child_fix), &hint);
            if (relaxations > node_limit) {
                break;
            }
        }
    }
    if (relaxations > node_limit) {
        sol.status = AllocationSolution::Status::NodeLimit;
    }

    sol.nodes = relaxations;
    finish_solution(problem, sol, candidates);
    return sol;
}

AllocationSolution enumerate_exhaustive(const MiqpProblem& problem) {
    const int n_alpha = problem.layout.slack_count();
    if (n_alpha > 12) {
        throw ValidationError("allocator: enumerate_exhaustive limited to 12 binaries, got " +
                              std::to_string(n_alpha));
    }
    AllocationSolution sol;
    std::vector<Candidate> candidates;
    double best_cost = std::numeric_limits<double>::infinity();
    int best = -1;

    // counter bits mapped so that enumeration runs in lexicographically
    // ascending stacked-alpha order (entry 0 is the most significant bit)
    for (std::uint32_t mask = 0; mask < (1u << n_alpha); ++mask) {
        Eigen::VectorXd stacked(n_alpha);
        for (int s = 0; s < n_alpha; ++s) {
            stacked(s) = (mask >> (n_alpha - 1 - s)) & 1u ? 1.0 : 0.0;
        }
        if (!problem.alpha_cardinality_ok(stacked)) {
            continue;
        }
        FixedAlphaResult fixed = run_fixed(problem, stacked, nullptr);
        sol.kkt_worst.absorb(fixed.qp);
        ++sol.nodes;
        if (!fixed.feasible) {
            continue;
        }
        candidates.push_back({std::move(stacked), std::move(fixed)});
        if (best == -1 || candidates.back().result.cost < best_cost - kTieWindow) {
            best_cost = candidates.back().result.cost;
            best = static_cast<int>(candidates.size()) - 1;
        }
    }
    if (best == -1) {
        sol.status = AllocationSolution::Status::Infeasible;
        return sol;
    }
    sol.status = AllocationSolution::Status::Optimal;
    Candidate& c = candidates[static_cast<std::size_t>(best)];
    sol.alpha = problem.unstack_alpha(c.stacked);
    sol.inputs = std::move(c.result.inputs);
    sol.delta = std::move(c.result.delta);
    sol.cost = c.result.cost;
    sol.qp = std::move(c.result.qp);
    return sol;
}

} // namespace mmta::alloc
