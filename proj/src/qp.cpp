#include "mmta/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace mmta::qp {

namespace {

// Symmetric-indefinite KKT system
//   [H Cw'; Cw 0] [p; y] = [r1; r2]
// solved as a min-norm least-squares problem (rank-revealing COD) with
// iterative refinement. The penalty weights put ~1e10 of scale spread into
// the blocks, so the matrix is Jacobi-equilibrated first; refinement runs
// against the unscaled system. The systems met here are always consistent:
// H is PSD with gradient orthogonal to ker(H), so every equality-constrained
// subproblem attains its minimum.
class KktSolver {
public:
    KktSolver(const Eigen::MatrixXd& hessian, const Eigen::MatrixXd& active_rows) {
        const int n = static_cast<int>(hessian.rows());
        const int w = static_cast<int>(active_rows.rows());
        kkt_.setZero(n + w, n + w);
        kkt_.topLeftCorner(n, n) = hessian;
        if (w > 0) {
            kkt_.topRightCorner(n, w) = active_rows.transpose();
            kkt_.bottomLeftCorner(w, n) = active_rows;
        }
        scale_.resize(n + w);
        for (int i = 0; i < n + w; ++i) {
            const double row_max = kkt_.row(i).cwiseAbs().maxCoeff();
            scale_(i) = row_max > 0 ? 1.0 / std::sqrt(row_max) : 1.0;
        }
        const Eigen::MatrixXd scaled =
            scale_.asDiagonal() * kkt_ * scale_.asDiagonal();
        cod_.setThreshold(1e-12);
        cod_.compute(scaled);
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        Eigen::VectorXd x = scale_.asDiagonal() * cod_.solve(scale_.asDiagonal() * rhs);
        // refinement with extended-precision residuals pushes the solution
        // accuracy past the double roundoff of the large penalty scales
        for (int round = 0; round < 4; ++round) {
            const Eigen::VectorXd residual = residual_ld(rhs, x);
            x += scale_.asDiagonal() * cod_.solve(scale_.asDiagonal() * residual);
        }
        return x;
    }

private:
    Eigen::VectorXd residual_ld(const Eigen::VectorXd& rhs, const Eigen::VectorXd& x) const {
        const int n = static_cast<int>(kkt_.rows());
        Eigen::VectorXd out(n);
        for (int i = 0; i < n; ++i) {
            long double acc = rhs(i);
            for (int j = 0; j < n; ++j) {
                acc -= static_cast<long double>(kkt_(i, j)) * static_cast<long double>(x(j));
            }
            out(i) = static_cast<double>(acc);
        }
        return out;
    }

    Eigen::MatrixXd kkt_;
    Eigen::VectorXd scale_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod_;
};

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& rows, const std::vector<int>& which) {
    Eigen::MatrixXd out(static_cast<int>(which.size()), rows.cols());
    for (int i = 0; i < static_cast<int>(which.size()); ++i) {
        out.row(i) = rows.row(which[static_cast<std::size_t>(i)]);
    }
    return out;
}

void fill_residuals(const Problem& p, Solution& sol) {
    const int n = p.var_count();
    const int m = p.row_count();
    // residuals accumulated in extended precision: the products mix 1e6
    // penalty scales with 1e-10 slacks and plain double dot products would
    // report their own roundoff instead
    sol.stationarity = 0.0;
    for (int i = 0; i < n; ++i) {
        long double acc = p.gradient(i);
        for (int j = 0; j < n; ++j) {
            acc += static_cast<long double>(p.hessian(i, j)) * sol.z(j);
        }
        for (int r = 0; r < m; ++r) {
            acc -= static_cast<long double>(p.rows(r, i)) * sol.multipliers(r);
        }
        sol.stationarity = std::max(sol.stationarity, std::abs(static_cast<double>(acc)));
    }
    sol.feasibility = 0.0;
    sol.complementarity = 0.0;
    for (int r = 0; r < m; ++r) {
        long double acc = -p.rhs(r);
        for (int j = 0; j < n; ++j) {
            acc += static_cast<long double>(p.rows(r, j)) * sol.z(j);
        }
        const double slack = static_cast<double>(acc);
        sol.feasibility = std::max(sol.feasibility, -slack);
        sol.complementarity =
            std::max(sol.complementarity, std::abs(sol.multipliers(r) * slack));
    }
    sol.feasibility = std::max(sol.feasibility, 0.0);
    sol.cost = p.cost(sol.z);
}

// Primal active-set iteration from a feasible point. Blocking rows are added
// one at a time; rows are dropped on negative multipliers (most negative,
// switching to smallest-index once degenerate stalling is detected).
Solution active_set_from_feasible(const Problem& p, Eigen::VectorXd z, const Options& opt) {
    const int n = p.var_count();
    const int m = p.row_count();
    const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : 200 + 30 * (n + m);

    std::vector<char> in_working(static_cast<std::size_t>(m), 0);
    std::vector<int> working;
    int stalled_steps = 0;
    bool bland = false;
    bool no_progress = false;
    int restarts = 0;

    Solution sol;
    sol.multipliers = Eigen::VectorXd::Zero(m);

    for (int iter = 0; iter < max_iter; ++iter) {
        const Eigen::MatrixXd active = gather_rows(p.rows, working);
        const int w = static_cast<int>(working.size());
        const Eigen::VectorXd grad = p.hessian * z + p.gradient;

        Eigen::VectorXd rhs(n + w);
        rhs.head(n) = -grad;
        rhs.tail(w).setZero();
        const KktSolver kkt(p.hessian, active);
        const Eigen::VectorXd py = kkt.solve(rhs);
        const Eigen::VectorXd step = py.head(n);
        const Eigen::VectorXd y = py.tail(w);

        const double step_scale = 1.0 + z.cwiseAbs().maxCoeff();
        // the step is spent when it vanishes, when it can no longer buy any
        // cost, or when the previous full step bought nothing (the KKT solve
        // bottomed out at its conditioning floor)
        const double model_decrease = -(grad.dot(step) + 0.5 * step.dot(p.hessian * step));
        const bool spent = no_progress ||
                           step.cwiseAbs().maxCoeff() <= 1e-12 * step_scale ||
                           model_decrease <= 1e-13 * (1.0 + std::abs(p.cost(z)));
        no_progress = false;
        if (spent) {
            // stationary on the working set; check multipliers (lambda = -y)
            const Eigen::VectorXd lambda = -y;
            const double lambda_tol =
                1e-9 * (1.0 + (w > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0));
            int drop = -1;
            double most_negative = -lambda_tol;
            for (int i = 0; i < w; ++i) {
                if (lambda(i) < most_negative) {
                    if (bland) {
                        if (drop == -1 || working[static_cast<std::size_t>(i)] <
                                              working[static_cast<std::size_t>(drop)]) {
                            drop = i;
                        }
                    } else {
                        most_negative = lambda(i);
                        drop = i;
                    }
                }
            }
            if (opt.trace) {
                std::fprintf(stderr, "iter %d stationary |W|=%d drop=%d lambda_min=%.3e\n", iter,
                             w, drop, w > 0 ? lambda.minCoeff() : 0.0);
            }
            if (drop == -1) {
                // polish: resolve the equality-constrained problem in absolute
                // form to clear drift accumulated over partial steps. The
                // working set may hold numerically dependent rows (degenerate
                // vertices), which would make the absolute system
                // inconsistent, so polish on a rank-revealing basis of it;
                // dependent rows keep zero multipliers.
                std::vector<int> basis;
                if (w > 0) {
                    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(active.transpose());
                    qr.setThreshold(1e-10);
                    const int rank = static_cast<int>(qr.rank());
                    basis.reserve(static_cast<std::size_t>(rank));
                    for (int i = 0; i < rank; ++i) {
                        basis.push_back(working[static_cast<std::size_t>(
                            qr.colsPermutation().indices()(i))]);
                    }
                }
                const int rank = static_cast<int>(basis.size());
                const Eigen::MatrixXd active_basis = gather_rows(p.rows, basis);
                const KktSolver polish_kkt(p.hessian, active_basis);
                // incremental Newton correction from the current iterate:
                // clears both the stationarity drift and the residual slack
                // on the basis rows while staying local
                Eigen::VectorXd polish_rhs(n + rank);
                polish_rhs.head(n) = -(p.hessian * z + p.gradient);
                for (int i = 0; i < rank; ++i) {
                    const int row = basis[static_cast<std::size_t>(i)];
                    polish_rhs(n + i) = p.rhs(row) - p.rows.row(row) * z;
                }
                const Eigen::VectorXd zy = polish_kkt.solve(polish_rhs);
                const Eigen::VectorXd z_polished = z + zy.head(n);
                bool ok = true;
                for (int i = 0; i < m && ok; ++i) {
                    ok = p.rows.row(i) * z_polished - p.rhs(i) >= -opt.feas_tol;
                }
                sol.status = Status::Optimal;
                sol.multipliers.setZero();
                if (ok) {
                    z = z_polished;
                    for (int i = 0; i < rank; ++i) {
                        sol.multipliers(basis[static_cast<std::size_t>(i)]) = -zy(n + i);
                    }
                } else {
                    for (int i = 0; i < w; ++i) {
                        sol.multipliers(working[static_cast<std::size_t>(i)]) = -y(i);
                    }
                }
                sol.z = z;
                sol.iterations = iter;
                fill_residuals(p, sol);
                // audit: a conclusion reached over a degenerate stretch can
                // carry junk multipliers or a drifted iterate; restart on a
                // fresh working set rather than report a false optimum. The
                // absolute floor covers legitimately tiny-gradient stops
                // (phase-1 endgames).
                const double grad_scale =
                    (p.hessian * z + p.gradient).cwiseAbs().maxCoeff();
                const double z_scale = 1.0 + z.cwiseAbs().maxCoeff();
                const bool audit_ok =
                    sol.stationarity <= std::max(opt.audit_floor, 1e-12 * grad_scale) &&
                    sol.feasibility <= std::max(opt.audit_floor, 1e-10 * z_scale) &&
                    sol.complementarity <=
                        std::max(opt.audit_floor, 1e-12 * grad_scale * z_scale);
                if (!audit_ok) {
                    if (restarts < 2) {
                        ++restarts;
                        for (int i : working) {
                            in_working[static_cast<std::size_t>(i)] = 0;
                        }
                        working.clear();
                        stalled_steps = 0;
                        bland = false;
                        no_progress = false;
                        continue;
                    }
                    sol.status = Status::IterationLimit;
                }
                return sol;
            }
            in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = 0;
            working.erase(working.begin() + drop);
            if (++stalled_steps > n + m) {
                bland = true;
            }
            continue;
        }

        // ratio test over rows outside the working set; the step length is
        // also capped so one degenerate stretch cannot wander z arbitrarily
        double t = std::min(1.0, 1e4 * step_scale / step.cwiseAbs().maxCoeff());
        int blocker = -1;
        for (int i = 0; i < m; ++i) {
            if (in_working[static_cast<std::size_t>(i)]) {
                continue;
            }
            const double directional = p.rows.row(i) * step;
            const double noise =
                1e-13 * (p.rows.row(i).cwiseAbs() * step.cwiseAbs()).value();
            if (directional >= -noise) {
                continue; // row not decreasing along the step
            }
            const double slack = std::max(0.0, (p.rows.row(i) * z).value() - p.rhs(i));
            const double ratio = slack / (-directional);
            if (ratio < t - 1e-15 * (1.0 + t)) {
                t = ratio;
                blocker = i;
            } else if (blocker != -1 && ratio <= t + 1e-15 * (1.0 + t) && i < blocker) {
                blocker = i;
            }
        }

        if (opt.trace) {
            std::fprintf(stderr, "iter %d |p|=%.3e t=%.3e blocker=%d |W|=%d cost=%.9e\n", iter,
                         step.cwiseAbs().maxCoeff(), t, blocker,
                         static_cast<int>(working.size()), p.cost(z + t * step));
        }
        const double cost_before = p.cost(z);
        z += t * step;
        const double actual_decrease = cost_before - p.cost(z);
        const bool progressed = actual_decrease > 1e-12 * (1.0 + std::abs(cost_before));
        if (blocker != -1 && t < 1.0) {
            in_working[static_cast<std::size_t>(blocker)] = 1;
            working.push_back(blocker);
        } else if (!progressed) {
            no_progress = true; // full step bought nothing: check multipliers
        }
        if (!progressed) {
            if (++stalled_steps > n + m) {
                bland = true;
            }
        } else {
            stalled_steps = 0;
            bland = false;
        }
    }

    sol.status = Status::IterationLimit;
    sol.z = z;
    sol.iterations = max_iter;
    fill_residuals(p, sol);
    return sol;
}

// Minimal-violation feasibility problem: one artificial variable t bounding
// every violated row, minimized as 0.5 t^2. Optimal t is the smallest uniform
// relaxation making the rows consistent; > 0 means infeasible.
struct PhaseOneResult {
    bool feasible = false;
    bool clean = true;
    Eigen::VectorXd z;
};

PhaseOneResult phase_one(const Problem& p, const Eigen::VectorXd& start, const Options& opt) {
    const int n = p.var_count();
    const int m = p.row_count();

    Problem aux;
    aux.hessian = Eigen::MatrixXd::Zero(n + 1, n + 1);
    aux.hessian(n, n) = 2.0;
    aux.gradient = Eigen::VectorXd::Zero(n + 1);
    aux.rows = Eigen::MatrixXd(m, n + 1);
    aux.rows.leftCols(n) = p.rows;
    aux.rows.col(n).setOnes();
    aux.rhs = p.rhs;

    Eigen::VectorXd z0(n + 1);
    z0.head(n) = start;
    double worst = 0.0;
    if (m > 0) {
        worst = (p.rhs - p.rows * start).maxCoeff();
    }
    z0(n) = std::max(0.0, worst) + 1.0;

    // the artificial objective legitimately stops with gradient 2t, t up to
    // the infeasibility decision; widen the audit floor accordingly
    Options aux_opt = opt;
    aux_opt.audit_floor = std::max(opt.audit_floor, 4.0 * opt.infeas_decision);
    const Solution aux_sol = active_set_from_feasible(aux, z0, aux_opt);
    PhaseOneResult out;
    out.clean = aux_sol.status == Status::Optimal;
    out.z = aux_sol.z.head(n);
    out.feasible = out.clean && aux_sol.z(n) <= opt.infeas_decision;
    return out;
}

} // namespace

void Problem::validate() const {
    if (hessian.rows() != hessian.cols() || hessian.rows() != gradient.size()) {
        throw DimensionError("qp: hessian/gradient dimensions disagree");
    }
    if (rows.rows() != rhs.size() || (rows.rows() > 0 && rows.cols() != gradient.size())) {
        throw DimensionError("qp: constraint rows/rhs dimensions disagree");
    }
    const double asym = (hessian - hessian.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * (1.0 + hessian.cwiseAbs().maxCoeff())) {
        throw ValidationError("qp: hessian is not symmetric");
    }
}

double Problem::cost(const Eigen::VectorXd& z) const {
    return 0.5 * z.dot(hessian * z) + gradient.dot(z) + constant;
}

Solution solve(const Problem& problem, const Options& options) {
    return solve(problem, Eigen::VectorXd::Zero(problem.var_count()), options);
}

namespace {

void debug_dump(const Problem& p, const Eigen::VectorXd& hint, const char* where) {
    const char* path = std::getenv("MMTA_QP_DUMP");
    if (path == nullptr) {
        return;
    }
    static bool dumped = false;
    if (dumped) {
        return;
    }
    dumped = true;
    FILE* f = std::fopen(path, "w");
    if (f == nullptr) {
        return;
    }
    std::fprintf(f, "%d %d %s\n", p.var_count(), p.row_count(), where);
    auto dump = [&](const Eigen::MatrixXd& m) {
        for (int i = 0; i < m.rows(); ++i) {
            for (int j = 0; j < m.cols(); ++j) {
                std::fprintf(f, "%.17g ", m(i, j));
            }
            std::fprintf(f, "\n");
        }
    };
    dump(p.hessian);
    dump(p.gradient.transpose());
    dump(p.rows);
    dump(p.rhs.transpose());
    dump(hint.transpose());
    std::fclose(f);
}

} // namespace

namespace {

Solution solve_from(const Problem& problem, const Eigen::VectorXd& start, const Options& options,
                    bool* phase1_failed) {
    Eigen::VectorXd current = start;
    Solution sol;
    // degenerate stretches can leave the iterate slightly infeasible; phase-1
    // repairs it and the descent resumes, so failed conclusions get a couple
    // of repair rounds before giving up
    for (int attempt = 0; attempt < 3; ++attempt) {
        bool feasible = true;
        if (problem.row_count() > 0) {
            feasible = (problem.rows * current - problem.rhs).minCoeff() >= -options.feas_tol;
        }
        Eigen::VectorXd feasible_start = current;
        if (!feasible) {
            const PhaseOneResult p1 = phase_one(problem, current, options);
            if (!p1.clean) {
                *phase1_failed = true;
                sol = Solution{};
                sol.status = Status::IterationLimit;
                sol.z = p1.z;
                sol.multipliers = Eigen::VectorXd::Zero(problem.row_count());
                fill_residuals(problem, sol);
                return sol;
            }
            if (!p1.feasible) {
                if (std::getenv("MMTA_QP_DUMP_INFEAS") != nullptr) {
                    debug_dump(problem, start, "infeasible");
                }
                sol = Solution{};
                sol.status = Status::Infeasible;
                sol.z = p1.z;
                sol.multipliers = Eigen::VectorXd::Zero(problem.row_count());
                fill_residuals(problem, sol);
                return sol;
            }
            feasible_start = p1.z;
        }
        sol = active_set_from_feasible(problem, feasible_start, options);
        if (sol.status != Status::IterationLimit) {
            return sol;
        }
        current = sol.z;
    }
    return sol;
}

} // namespace

Solution solve(const Problem& problem, const Eigen::VectorXd& hint, const Options& options) {
    problem.validate();
    if (hint.size() != problem.var_count()) {
        throw DimensionError("qp: start hint has wrong dimension");
    }

    bool phase1_failed = false;
    Solution sol = solve_from(problem, hint, options, &phase1_failed);
    if (sol.status == Status::IterationLimit && !hint.isZero(0.0)) {
        // a poor warm start can walk the active set into a degenerate corner;
        // a cold start takes a different trajectory
        phase1_failed = false;
        sol = solve_from(problem, Eigen::VectorXd::Zero(problem.var_count()), options,
                         &phase1_failed);
    }
    if (sol.status == Status::IterationLimit) {
        debug_dump(problem, hint, phase1_failed ? "phase1" : "phase2");
    }
    return sol;
}

} // namespace mmta::qp
