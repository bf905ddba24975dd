#include <cmath>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mmta/scenario.hpp"
#include "mmta/simulation.hpp"
#include "mmta/trace_io.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitSolver = 2;
constexpr int kExitIo = 3;

int run_simulate(const std::string& scenario_path, const std::string& out_dir,
                 const mmta::sim::RunOptions& options) {
    const mmta::scenario::Scenario sc = mmta::scenario::load_scenario(scenario_path);
    const mmta::sim::Trace trace = mmta::sim::run_simulation(sc, options);
    mmta::trace_io::export_traces(trace, out_dir);
    std::cout << "simulated '" << sc.name << "': " << trace.records.size() << " steps, traces in "
              << out_dir << "\n";
    if (trace.aborted) {
        std::cerr << "run aborted: " << trace.abort_reason << "\n";
        return kExitSolver;
    }
    return 0;
}

int run_validate(const std::string& scenario_path) {
    const mmta::scenario::Scenario sc = mmta::scenario::load_scenario(scenario_path);
    std::cout << "scenario '" << sc.name << "' is valid: " << sc.robot_count() << " robots, "
              << sc.mode_index.count() << " virtual robots, " << sc.task_count() << " tasks, "
              << sc.restrictions.size() << " restrictions\n";
    return 0;
}

int run_certify(const std::string& scenario_path, double at) {
    const mmta::scenario::Scenario sc = mmta::scenario::load_scenario(scenario_path);

    mmta::sim::RunOptions options;
    options.check_certificates = false;
    options.t_end = std::max(sc.params.dt, at + sc.params.dt);

    // drive the closed loop up to the requested time, then report once
    std::vector<mmta::dynamics::UavState> states = sc.initial_states;
    mmta::alloc::AllocationSolution previous;
    bool have_previous = false;
    const int target_step = static_cast<int>(std::llround(at / sc.params.dt));
    mmta::sim::StepResult step;
    for (int k = 0; k <= target_step; ++k) {
        step = mmta::sim::simulation_step(sc, states, k * sc.params.dt,
                                          have_previous ? &previous : nullptr);
        if (step.solution.status != mmta::alloc::AllocationSolution::Status::Optimal) {
            std::cerr << "allocation not solvable at t=" << k * sc.params.dt << "\n";
            return kExitSolver;
        }
        states = step.next_states;
        previous = step.solution;
        have_previous = true;
    }

    const auto assignment = mmta::cert::AssignmentMap::from_alpha(previous.alpha);
    const auto spec_positions = [&]() {
        std::vector<Eigen::Vector2d> p;
        for (const auto& s : step.record.robots) {
            p.push_back(s.state.position);
        }
        return p;
    }();
    const auto spec = mmta::encoding::apply_region_restriction(sc.base_spec, sc.restrictions,
                                                               sc.mode_index, spec_positions);
    std::vector<mmta::cbf::CbfRow> rows;
    for (int v = 0; v < sc.mode_index.count(); ++v) {
        const auto [robot, mode_k] = sc.mode_index.robot_mode(v);
        (void)mode_k;
        for (int j = 0; j < sc.task_count(); ++j) {
            rows.push_back(mmta::cbf::high_rel_degree_row(
                sc.tasks[static_cast<std::size_t>(j)],
                step.record.robots[static_cast<std::size_t>(robot)].state,
                sc.vr_modes[static_cast<std::size_t>(v)], sc.params.k_v,
                v * sc.task_count() + j));
        }
    }
    const auto problem = mmta::alloc::assemble_miqp(sc.mode_index, sc.vr_modes, spec, sc.maps,
                                                    sc.tasks, rows, sc.params.allocation());
    std::vector<mmta::dynamics::UavState> record_states;
    for (const auto& r : step.record.robots) {
        record_states.push_back(r.state);
    }
    const auto mats = mmta::cert::assemble_certificate_matrices(
        problem, sc.mode_index, sc.vr_modes, record_states, sc.tasks, assignment, sc.params.k_v,
        sc.params.c, sc.params.c1, sc.params.c2);
    const auto report = mmta::cert::certificate_search(
        mats, mmta::cert::Certificate::HighRelativeDegree, sc.params.tau_grid);

    std::cout << "certificate report at t=" << target_step * sc.params.dt << "\n"
              << "  feasible: " << (report.feasible ? "yes" : "no (grid search is sufficient only)")
              << "\n"
              << "  tau: " << report.tau[0] << " " << report.tau[1] << " " << report.tau[2] << "\n"
              << "  margin (smallest eigenvalue): " << report.margin << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-mode multi-robot task allocation simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir = "out";
    double dt = -1;
    double t_end = -1;
    bool check_certs = false;
    double cert_hz = 1.0;
    double at = 0.0;

    auto* simulate = app.add_subcommand("simulate", "run a scenario and export CSV traces");
    simulate->add_option("--scenario", scenario_path, "scenario file")->required();
    simulate->add_option("--out", out_dir, "output directory");
    simulate->add_option("--dt", dt, "integration step override [s]");
    simulate->add_option("--t-end", t_end, "end time override [s]");
    simulate->add_flag("--check-certificates", check_certs, "sample convergence certificates");
    simulate->add_option("--cert-sample-hz", cert_hz, "certificate sampling rate [Hz]");

    auto* validate = app.add_subcommand("validate", "parse and validate a scenario file");
    validate->add_option("--scenario", scenario_path, "scenario file")->required();

    auto* certify = app.add_subcommand("certify", "one-shot certificate report");
    certify->add_option("--scenario", scenario_path, "scenario file")->required();
    certify->add_option("--at", at, "simulation time of the report [s]");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            mmta::sim::RunOptions options;
            options.check_certificates = check_certs;
            options.cert_sample_hz = cert_hz;
            if (dt > 0) {
                options.dt = dt;
            }
            if (t_end > 0) {
                options.t_end = t_end;
            }
            return run_simulate(scenario_path, out_dir, options);
        }
        if (validate->parsed()) {
            return run_validate(scenario_path);
        }
        return run_certify(scenario_path, at);
    } catch (const mmta::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const mmta::DimensionError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const mmta::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const mmta::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    }
}
