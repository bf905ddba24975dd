#include "mmta/simulation.hpp"

#include <cmath>
#include <limits>

namespace mmta::sim {

namespace {

std::vector<Eigen::Vector2d> positions_of(const std::vector<dynamics::UavState>& states) {
    std::vector<Eigen::Vector2d> out;
    out.reserve(states.size());
    for (const auto& s : states) {
        out.push_back(s.position);
    }
    return out;
}

// ballistic flow of an idle robot: zero input, velocity bleeds off through
// the motion drift
dynamics::UavState integrate_idle(const dynamics::UavState& state, double k_v, double dt) {
    auto f = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const dynamics::UavState s = dynamics::UavState::unpack(z);
        Eigen::Matrix<double, 5, 1> dz;
        dz.head<2>() = dynamics::rotation(s.theta()) * s.motion.head<2>();
        dz.tail<3>() = dynamics::motion_drift(s.motion, k_v);
        return dz;
    };
    return dynamics::UavState::unpack(dynamics::rk4_step(f, state.pack(), dt));
}

} // namespace

StepResult simulation_step(const scenario::Scenario& sc,
                           const std::vector<dynamics::UavState>& states, double t,
                           const alloc::AllocationSolution* previous) {
    const int n_t = sc.task_count();
    const int n_vr = sc.mode_index.count();

    const encoding::SpecializationSet spec = encoding::apply_region_restriction(
        sc.base_spec, sc.restrictions, sc.mode_index, positions_of(states));

    std::vector<cbf::CbfRow> rows;
    rows.reserve(static_cast<std::size_t>(n_t * n_vr));
    for (int v = 0; v < n_vr; ++v) {
        const auto [robot, mode_k] = sc.mode_index.robot_mode(v);
        (void)mode_k;
        for (int j = 0; j < n_t; ++j) {
            rows.push_back(cbf::high_rel_degree_row(
                sc.tasks[static_cast<std::size_t>(j)], states[static_cast<std::size_t>(robot)],
                sc.vr_modes[static_cast<std::size_t>(v)], sc.params.k_v, v * n_t + j));
        }
    }

    const alloc::MiqpProblem problem =
        alloc::assemble_miqp(sc.mode_index, sc.vr_modes, spec, sc.maps, sc.tasks, rows,
                             sc.params.allocation());

    StepResult result;
    result.solution = alloc::solve_allocation(
        problem, previous != nullptr && previous->status == alloc::AllocationSolution::Status::Optimal
                     ? &previous->alpha
                     : nullptr);

    StepRecord& rec = result.record;
    rec.t = t;
    rec.solver_status = result.solution.status;
    rec.robots.resize(static_cast<std::size_t>(sc.robot_count()));
    rec.task_h.resize(n_t);
    for (int j = 0; j < n_t; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& st : states) {
            best = std::max(best,
                            cbf::task_h(sc.tasks[static_cast<std::size_t>(j)], st.position).value);
        }
        rec.task_h(j) = best;
    }
    for (int i = 0; i < sc.robot_count(); ++i) {
        rec.robots[static_cast<std::size_t>(i)].state = states[static_cast<std::size_t>(i)];
    }

    if (result.solution.status != alloc::AllocationSolution::Status::Optimal) {
        rec.alpha = Eigen::MatrixXd::Zero(n_t, n_vr);
        rec.delta = Eigen::VectorXd::Zero(n_t * n_vr);
        result.next_states = states;
        return result;
    }

    rec.alpha = result.solution.alpha;
    rec.delta = result.solution.delta;

    result.next_states = states;
    for (int v = 0; v < n_vr; ++v) {
        for (int j = 0; j < n_t; ++j) {
            if (result.solution.alpha(j, v) <= 0.5) {
                continue;
            }
            const auto [robot, mode_k] = sc.mode_index.robot_mode(v);
            (void)mode_k;
            RobotRecord& rr = rec.robots[static_cast<std::size_t>(robot)];
            rr.active_virtual = v;
            rr.active_task = j;
            const Eigen::VectorXd& u = result.solution.inputs[static_cast<std::size_t>(v)];
            rr.input = u;
            rr.energy = dynamics::energy_cost(sc.vr_modes[static_cast<std::size_t>(v)], u);
        }
    }
    for (int i = 0; i < sc.robot_count(); ++i) {
        const RobotRecord& rr = rec.robots[static_cast<std::size_t>(i)];
        if (rr.active_virtual >= 0) {
            result.next_states[static_cast<std::size_t>(i)] = dynamics::rk4_step(
                states[static_cast<std::size_t>(i)],
                sc.vr_modes[static_cast<std::size_t>(rr.active_virtual)],
                rr.input, sc.params.k_v, sc.params.dt);
        } else {
            result.next_states[static_cast<std::size_t>(i)] =
                integrate_idle(states[static_cast<std::size_t>(i)], sc.params.k_v, sc.params.dt);
        }
    }
    return result;
}

Trace run_simulation(const scenario::Scenario& sc, const RunOptions& options) {
    scenario::Scenario run = sc;
    if (options.dt) {
        run.params.dt = *options.dt;
    }
    if (options.t_end) {
        run.params.t_end = *options.t_end;
    }
    if (!(run.params.dt > 0) || run.params.t_end < run.params.dt) {
        throw ValidationError("simulation: dt/t_end out of range");
    }

    Trace trace;
    trace.dt = run.params.dt;
    for (const auto& r : run.graph.robots) {
        trace.robot_ids.push_back(r.id);
    }
    trace.task_ids = run.graph.tasks;
    for (const auto& m : run.vr_modes) {
        trace.vr_names.push_back(m.name);
    }
    for (int v = 0; v < run.mode_index.count(); ++v) {
        trace.vr_owner.push_back(run.mode_index.robot_mode(v).first);
    }

    int cert_stride = 0;
    if (options.check_certificates) {
        cert_stride = std::max(1, static_cast<int>(std::llround(
                                      1.0 / (options.cert_sample_hz * run.params.dt))));
    }

    std::vector<dynamics::UavState> states = run.initial_states;
    alloc::AllocationSolution previous;
    bool have_previous = false;

    const int steps = run.step_count();
    for (int k = 0; k < steps; ++k) {
        const double t = k * run.params.dt;
        StepResult step = simulation_step(run, states, t, have_previous ? &previous : nullptr);
        trace.kkt_worst.absorb(step.solution.kkt_worst);

        if (step.solution.status != alloc::AllocationSolution::Status::Optimal) {
            trace.records.push_back(std::move(step.record));
            trace.aborted = true;
            trace.abort_reason =
                step.solution.status == alloc::AllocationSolution::Status::Infeasible
                    ? "allocation infeasible at t=" + std::to_string(t)
                    : "node limit reached at t=" + std::to_string(t);
            return trace;
        }

        if (cert_stride > 0 && k % cert_stride == 0) {
            const cert::AssignmentMap assignment =
                cert::AssignmentMap::from_alpha(step.solution.alpha);
            // rebuild the step's program for the certificate blocks
            const encoding::SpecializationSet spec = encoding::apply_region_restriction(
                run.base_spec, run.restrictions, run.mode_index, positions_of(states));
            std::vector<cbf::CbfRow> rows;
            for (int v = 0; v < run.mode_index.count(); ++v) {
                const auto [robot, mode_k] = run.mode_index.robot_mode(v);
                (void)mode_k;
                for (int j = 0; j < run.task_count(); ++j) {
                    rows.push_back(cbf::high_rel_degree_row(
                        run.tasks[static_cast<std::size_t>(j)],
                        states[static_cast<std::size_t>(robot)],
                        run.vr_modes[static_cast<std::size_t>(v)], run.params.k_v,
                        v * run.task_count() + j));
                }
            }
            const alloc::MiqpProblem problem =
                alloc::assemble_miqp(run.mode_index, run.vr_modes, spec, run.maps, run.tasks,
                                     rows, run.params.allocation());
            const cert::CertificateMatrices mats = cert::assemble_certificate_matrices(
                problem, run.mode_index, run.vr_modes, states, run.tasks, assignment,
                run.params.k_v, run.params.c, run.params.c1, run.params.c2);
            step.record.certificate = cert::certificate_search(
                mats, cert::Certificate::HighRelativeDegree, run.params.tau_grid);
        }

        states = step.next_states;
        previous = std::move(step.solution);
        have_previous = true;
        trace.records.push_back(std::move(step.record));
    }
    return trace;
}

} // namespace mmta::sim
