#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmta/allocator.hpp"
#include "mmta/certificates.hpp"
#include "mmta/scenario.hpp"

namespace mmta::sim {

struct RobotRecord {
    dynamics::UavState state;        // at the start of the step
    int active_virtual = -1;         // executing virtual robot, -1 if idle
    int active_task = -1;
    Eigen::Vector2d input = Eigen::Vector2d::Zero(); // applied input (zero when idle)
    double energy = 0;
};

struct StepRecord {
    double t = 0;
    std::vector<RobotRecord> robots;
    Eigen::VectorXd task_h; // per task: max over robots of h_j(x_i)
    Eigen::MatrixXd alpha;
    Eigen::VectorXd delta;
    alloc::AllocationSolution::Status solver_status = alloc::AllocationSolution::Status::Optimal;
    std::optional<cert::SearchReport> certificate;
};

struct Trace {
    std::vector<std::string> robot_ids;
    std::vector<std::string> task_ids;
    std::vector<std::string> vr_names; // mode name per virtual robot
    std::vector<int> vr_owner;         // owning robot per virtual robot
    double dt = 0;
    std::vector<StepRecord> records;
    alloc::KktWorst kkt_worst;
    bool aborted = false;
    std::string abort_reason;
};

struct StepResult {
    std::vector<dynamics::UavState> next_states;
    alloc::AllocationSolution solution;
    StepRecord record;
};

/// One closed-loop step: apply region restrictions, build degree-two rows,
/// assemble and solve the allocation program (warm-started), apply the
/// selected mode's input per robot (zero when idle) and integrate dt.
/// A non-optimal solve returns the diagnostic record with unchanged states.
StepResult simulation_step(const scenario::Scenario& sc,
                           const std::vector<dynamics::UavState>& states, double t,
                           const alloc::AllocationSolution* previous);

struct RunOptions {
    bool check_certificates = false;
    double cert_sample_hz = 1.0;
    std::optional<double> dt;
    std::optional<double> t_end;
};

/// Drives simulation_step from t = 0 to t_end. Deterministic for a fixed
/// scenario. Solver failures terminate early with the partial trace flagged.
Trace run_simulation(const scenario::Scenario& sc, const RunOptions& options = {});

} // namespace mmta::sim
