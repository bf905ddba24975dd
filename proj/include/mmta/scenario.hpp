#pragma once

#include <string>
#include <vector>

#include "mmta/allocator.hpp"
#include "mmta/cbf.hpp"
#include "mmta/certificates.hpp"
#include "mmta/dynamics.hpp"
#include "mmta/encoding.hpp"

namespace mmta::scenario {

struct SimParams {
    double k_v = 4.0;
    double l1 = 1e6;
    double l2 = 1e-4;
    double kappa = 1e4;
    double delta_max = 1e4;
    double v_x_eff = 2.0;
    double gamma1 = 5.0;
    double gamma2 = 1.0;
    double dt = 0.01;
    double t_end = 10.0;
    double c = 1.0;
    double c1 = 1.0;
    double c2 = 1.0;
    cert::TauGrid tau_grid;

    alloc::Params allocation() const { return {l1, l2, kappa, delta_max}; }
};

/// A fully resolved simulation setup: the encoding graph with its derived
/// matrices, per-robot initial states and mode specs, tasks and no-go rules.
struct Scenario {
    std::string name;
    SimParams params;

    encoding::EncodingGraph graph;
    encoding::ModeIndex mode_index;
    encoding::MappingMatrices maps;
    encoding::SpecializationSet base_spec;

    std::vector<dynamics::UavState> initial_states;  // per robot
    std::vector<dynamics::ModeSpec> vr_modes;        // per virtual robot
    std::vector<std::string> vr_mode_types;          // "cruise" / "hover" per virtual robot
    std::vector<cbf::TaskSpec> tasks;
    std::vector<encoding::RegionRestriction> restrictions;

    int robot_count() const { return graph.robot_count(); }
    int task_count() const { return static_cast<int>(tasks.size()); }
    int step_count() const;
};

/// Parses and validates a scenario file (versioned JSON schema, documented in
/// the README). Unset parameters take the defaults above. Throws
/// ValidationError with the offending field, or IoError.
Scenario load_scenario(const std::string& path);

/// Same, from an in-memory document.
Scenario parse_scenario(const std::string& json_text);

} // namespace mmta::scenario
