#include "mmta/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmta::cert {

using dynamics::rotation;

ConstraintForms quadratic_constraint_forms(const alloc::MiqpProblem& problem) {
    ConstraintForms out;
    // cardinality rows are stored >=; the quadratic rewriting uses <=
    out.a_alpha = -problem.alpha_rows;
    out.b_alpha = -problem.alpha_rhs;

    const int n_d = problem.layout.slack_count();
    out.a_delta = Eigen::MatrixXd::Zero(2 * n_d, n_d);
    out.a_delta.topRows(n_d).setIdentity();
    out.a_delta.bottomRows(n_d) = -Eigen::MatrixXd::Identity(n_d, n_d);
    out.b_delta = Eigen::VectorXd::Constant(2 * n_d, problem.params.delta_max);
    return out;
}

AssignmentMap AssignmentMap::from_alpha(const Eigen::MatrixXd& alpha) {
    AssignmentMap map;
    map.task_virtual.assign(static_cast<std::size_t>(alpha.rows()), -1);
    for (int j = 0; j < alpha.rows(); ++j) {
        for (int v = 0; v < alpha.cols(); ++v) {
            if (alpha(j, v) > 0.5) {
                map.task_virtual[static_cast<std::size_t>(j)] = v;
                break;
            }
        }
    }
    return map;
}

namespace {

// writes block and its mirror, keeping the matrix exactly symmetric
void set_block(Eigen::MatrixXd& m, int row, int col, const Eigen::MatrixXd& value) {
    m.block(row, col, value.rows(), value.cols()) = value;
    if (row != col) {
        m.block(col, row, value.cols(), value.rows()) = value.transpose();
    }
}

} // namespace

CertificateMatrices assemble_certificate_matrices(
    const alloc::MiqpProblem& problem, const encoding::ModeIndex& idx,
    const std::vector<dynamics::ModeSpec>& vr_modes,
    const std::vector<dynamics::UavState>& states, const std::vector<cbf::TaskSpec>& tasks,
    const AssignmentMap& assignment, double k_v, double c, double c1, double c2) {
    const int n_t = problem.layout.task_count;
    const int n_vr = problem.layout.vr_count;
    if (static_cast<int>(tasks.size()) != n_t ||
        static_cast<int>(assignment.task_virtual.size()) != n_t) {
        throw DimensionError("certificates: task blocks do not match layout");
    }
    if (static_cast<int>(vr_modes.size()) != n_vr) {
        throw DimensionError("certificates: mode list does not match layout");
    }

    CertificateMatrices mats;
    mats.c = c;
    mats.c1 = c1;
    mats.c2 = c2;
    mats.layout.gamma_size = n_t;
    mats.layout.input_size = problem.layout.input_total;
    mats.layout.delta_size = problem.layout.slack_count();
    mats.layout.alpha_size = problem.layout.slack_count();
    mats.forms = quadratic_constraint_forms(problem);

    const PhiLayout& L = mats.layout;
    const int n = L.total();
    mats.b0 = Eigen::MatrixXd::Zero(n, n);
    mats.b0_hrd = Eigen::MatrixXd::Zero(n, n);
    mats.b1 = Eigen::MatrixXd::Zero(n, n);
    mats.b2 = Eigen::MatrixXd::Zero(n, n);
    mats.b3 = Eigen::MatrixXd::Zero(n, n);

    // ---- plant-flow rows: h_j at the robot executing task j
    Eigen::MatrixXd b0_gamma_one = Eigen::MatrixXd::Zero(n_t, 1);
    Eigen::MatrixXd hrd_gamma_one = Eigen::MatrixXd::Zero(n_t, 1);
    Eigen::MatrixXd hrd_gamma_u = Eigen::MatrixXd::Zero(n_t, L.input_size);
    double w_norm_sq = 0;
    set_block(mats.b0, L.gamma_start(), L.gamma_start(),
              c * Eigen::MatrixXd::Identity(n_t, n_t));
    Eigen::MatrixXd hrd_gamma_gamma = Eigen::MatrixXd::Zero(n_t, n_t);

    for (int j = 0; j < n_t; ++j) {
        const int v = assignment.task_virtual[static_cast<std::size_t>(j)];
        if (v < 0) {
            continue; // unassigned: no flow contribution
        }
        const auto [robot, mode_k] = idx.robot_mode(v);
        (void)mode_k;
        const dynamics::UavState& st = states.at(static_cast<std::size_t>(robot));
        const auto& task = tasks[static_cast<std::size_t>(j)];
        const double slope = task.gamma1.slope;
        const cbf::FlowCoupling flow = cbf::flow_coupling(task, st);
        const Eigen::Vector2d xdot = rotation(st.theta()) * st.motion.head<2>();
        const Eigen::Vector3d drift = dynamics::motion_drift(st.motion, k_v);
        const Eigen::MatrixXd g =
            dynamics::input_matrix(vr_modes[static_cast<std::size_t>(v)], k_v);

        // kinematic certificate: the position dynamics carry no direct input,
        // so the gamma-u block vanishes and only dgamma/dh dh/dx f remains
        b0_gamma_one(j, 0) = slope * flow.w;

        // degree-two certificate, scaled so phi' B0' phi reproduces the
        // second-order flow identity with the gamma1(h) block of phi
        hrd_gamma_gamma(j, j) = -c1 * c2 / (slope * slope);
        hrd_gamma_u.block(j, problem.layout.input_offset[static_cast<std::size_t>(v)], 1,
                          g.cols()) = (-1.0 / slope) * (flow.dw_dmotion * g);
        hrd_gamma_one(j, 0) =
            (-1.0 / slope) *
            (flow.dw_dx.dot(xdot) + flow.dw_dmotion.dot(drift) + (c1 + c2) * flow.w);
        w_norm_sq += flow.w * flow.w;
    }
    set_block(mats.b0, L.gamma_start(), L.one_index(), b0_gamma_one);
    set_block(mats.b0_hrd, L.gamma_start(), L.gamma_start(), hrd_gamma_gamma);
    set_block(mats.b0_hrd, L.gamma_start(), L.input_start(), hrd_gamma_u);
    set_block(mats.b0_hrd, L.gamma_start(), L.one_index(), hrd_gamma_one);
    mats.b0_hrd(L.one_index(), L.one_index()) = -2.0 * w_norm_sq;

    // ---- task-row block B1: pairs each row's slack with its own robot data
    Eigen::MatrixXd b1_gamma_delta = Eigen::MatrixXd::Zero(n_t, L.delta_size);
    Eigen::MatrixXd b1_delta_one = Eigen::MatrixXd::Zero(L.delta_size, 1);
    for (int v = 0; v < n_vr; ++v) {
        const auto [robot, mode_k] = idx.robot_mode(v);
        (void)mode_k;
        const dynamics::UavState& st = states.at(static_cast<std::size_t>(robot));
        for (int j = 0; j < n_t; ++j) {
            const int d = v * n_t + j;
            b1_gamma_delta(j, d) = -0.5;
            // L_f h over the full state flow
            b1_delta_one(d, 0) =
                -0.5 * cbf::flow_coupling(tasks[static_cast<std::size_t>(j)], st).w;
        }
    }
    set_block(mats.b1, L.gamma_start(), L.delta_start(), b1_gamma_delta);
    set_block(mats.b1, L.delta_start(), L.delta_start(),
              -Eigen::MatrixXd::Identity(L.delta_size, L.delta_size));
    set_block(mats.b1, L.delta_start(), L.one_index(), b1_delta_one);
    // B1(2,3) = -1/2 L_g h' is identically zero for this robot model
    // (the barrier has no direct input channel)

    // ---- prioritization block B2 from the per-robot stacks
    Eigen::MatrixXd b2_delta_alpha = Eigen::MatrixXd::Zero(L.delta_size, L.alpha_size);
    Eigen::MatrixXd b2_alpha_alpha = Eigen::MatrixXd::Zero(L.alpha_size, L.alpha_size);
    Eigen::MatrixXd b2_alpha_one = Eigen::MatrixXd::Zero(L.alpha_size, 1);
    {
        int block_start = 0;
        for (const auto& pr : problem.prioritization) {
            const int cols = static_cast<int>(pr.theta.cols());
            b2_delta_alpha.block(block_start, block_start, cols, cols) =
                0.5 * pr.theta.transpose() * pr.phi;
            b2_alpha_alpha.block(block_start, block_start, cols, cols) =
                pr.phi.transpose() * pr.phi;
            b2_alpha_one.block(block_start, 0, cols, 1) = -0.5 * pr.phi.transpose() * pr.psi;
            block_start += cols;
        }
        if (block_start != L.delta_size) {
            throw DimensionError("certificates: prioritization stack does not match layout");
        }
    }
    set_block(mats.b2, L.delta_start(), L.alpha_start(), b2_delta_alpha);
    set_block(mats.b2, L.alpha_start(), L.alpha_start(), b2_alpha_alpha);
    set_block(mats.b2, L.alpha_start(), L.one_index(), b2_alpha_one);

    // ---- constraint-form block B3
    set_block(mats.b3, L.delta_start(), L.delta_start(),
              mats.forms.a_delta.transpose() * mats.forms.a_delta);
    set_block(mats.b3, L.delta_start(), L.one_index(),
              Eigen::MatrixXd(-0.5 * mats.forms.a_delta.transpose() * mats.forms.b_delta));
    set_block(mats.b3, L.alpha_start(), L.alpha_start(),
              mats.forms.a_alpha.transpose() * mats.forms.a_alpha);
    set_block(mats.b3, L.alpha_start(), L.one_index(),
              Eigen::MatrixXd(-0.5 * mats.forms.a_alpha.transpose() * mats.forms.b_alpha));

    return mats;
}

Eigen::VectorXd build_phi(const alloc::MiqpProblem& problem, const encoding::ModeIndex& idx,
                          const std::vector<dynamics::UavState>& states,
                          const std::vector<cbf::TaskSpec>& tasks,
                          const AssignmentMap& assignment,
                          const std::vector<Eigen::VectorXd>& inputs,
                          const Eigen::VectorXd& delta, const Eigen::MatrixXd& alpha) {
    const int n_t = problem.layout.task_count;
    PhiLayout L;
    L.gamma_size = n_t;
    L.input_size = problem.layout.input_total;
    L.delta_size = problem.layout.slack_count();
    L.alpha_size = problem.layout.slack_count();

    Eigen::VectorXd phi = Eigen::VectorXd::Zero(L.total());
    for (int j = 0; j < n_t; ++j) {
        const int v = assignment.task_virtual[static_cast<std::size_t>(j)];
        if (v < 0) {
            continue;
        }
        const auto [robot, mode_k] = idx.robot_mode(v);
        (void)mode_k;
        const auto& task = tasks[static_cast<std::size_t>(j)];
        const double h =
            cbf::task_h(task, states.at(static_cast<std::size_t>(robot)).position).value;
        phi(L.gamma_start() + j) = task.gamma1(h);
    }
    for (int v = 0; v < problem.layout.vr_count; ++v) {
        phi.segment(L.input_start() + problem.layout.input_offset[static_cast<std::size_t>(v)],
                    problem.layout.input_size[static_cast<std::size_t>(v)]) =
            inputs.at(static_cast<std::size_t>(v));
    }
    phi.segment(L.delta_start(), L.delta_size) = delta;
    phi.segment(L.alpha_start(), L.alpha_size) = problem.stack_alpha(alpha);
    phi(L.one_index()) = 1.0;
    return phi;
}

JacobiResult jacobi_eigensystem(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (m.cols() != n) {
        throw DimensionError("certificates: eigensystem needs a square matrix");
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ValidationError("certificates: eigensystem input is not symmetric");
    }

    Eigen::MatrixXd a = 0.5 * (m + m.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    JacobiResult out;

    const int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                off += a(p, q) * a(p, q);
            }
        }
        if (std::sqrt(2.0 * off) <= 1e-14 * scale * n) {
            out.sweeps = sweep;
            break;
        }
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) {
                    continue;
                }
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cos_r = 1.0 / std::sqrt(t * t + 1.0);
                const double sin_r = t * cos_r;
                // two-sided rotation in the (p, q) plane
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = cos_r * akp - sin_r * akq;
                    a(k, q) = sin_r * akp + cos_r * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = cos_r * apk - sin_r * aqk;
                    a(q, k) = sin_r * apk + cos_r * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = cos_r * vkp - sin_r * vkq;
                    v(k, q) = sin_r * vkp + cos_r * vkq;
                }
            }
        }
        out.sweeps = sweep + 1;
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
        out.vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return out;
}

double psd_margin(const Eigen::MatrixXd& m) {
    return jacobi_eigensystem(m).values(0);
}

std::vector<double> TauGrid::values() const {
    if (points < 1 || !(min > 0) || !(max >= min)) {
        throw ValidationError("certificates: tau grid must be positive with points >= 1");
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(points));
    if (points == 1) {
        out.push_back(min);
        return out;
    }
    const double log_min = std::log10(min);
    const double log_max = std::log10(max);
    for (int i = 0; i < points; ++i) {
        out.push_back(std::pow(10.0, log_min + (log_max - log_min) * i / (points - 1)));
    }
    return out;
}

SearchReport certificate_search(const CertificateMatrices& mats, Certificate which,
                                const TauGrid& grid, double tol) {
    const std::vector<double> taus = grid.values();
    if (taus.empty()) {
        throw ValidationError("certificates: empty tau grid");
    }
    const Eigen::MatrixXd& b0 =
        which == Certificate::HighRelativeDegree ? mats.b0_hrd : mats.b0;

    SearchReport report;
    report.margin = -std::numeric_limits<double>::infinity();
    for (double t1 : taus) {
        for (double t2 : taus) {
            for (double t3 : taus) {
                const Eigen::MatrixXd m = t1 * mats.b1 + t2 * mats.b2 + t3 * mats.b3 - b0;
                const double margin = psd_margin(m);
                if (margin > report.margin) {
                    report.margin = margin;
                    report.tau = {t1, t2, t3};
                }
            }
        }
    }
    report.feasible = report.margin >= -tol;
    return report;
}

} // namespace mmta::cert
