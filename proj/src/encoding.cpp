#include "mmta/encoding.hpp"

#include <set>
#include <unordered_set>

namespace mmta::encoding {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) {
        throw ValidationError("encoding: " + message);
    }
}

} // namespace

void EncodingGraph::validate() const {
    std::unordered_set<std::string> seen;
    for (const auto& r : robots) {
        require(seen.insert(r.id).second, "duplicate robot id '" + r.id + "'");
        require(!r.modes.empty(), "robot '" + r.id + "' has no modes");
        std::unordered_set<std::string> mode_seen;
        for (const auto& m : r.modes) {
            require(mode_seen.insert(m).second,
                    "robot '" + r.id + "' lists mode '" + m + "' twice");
        }
    }
    auto check_unique = [&](const std::vector<std::string>& ids, const char* what) {
        std::unordered_set<std::string> s;
        for (const auto& id : ids) {
            require(s.insert(id).second, std::string("duplicate ") + what + " id '" + id + "'");
        }
    };
    check_unique(features, "feature");
    check_unique(capabilities, "capability");
    check_unique(tasks, "task");

    for (const auto& e : mode_feature_edges) {
        require(e[0] >= 0 && e[0] < robot_count(), "mode-feature edge references unknown robot");
        require(e[1] >= 0 && e[1] < static_cast<int>(robots[e[0]].modes.size()),
                "mode-feature edge references unknown mode");
        require(e[2] >= 0 && e[2] < feature_count(), "mode-feature edge references unknown feature");
    }
    for (const auto& e : feature_capability_edges) {
        require(e[0] >= 0 && e[0] < feature_count(),
                "feature-capability edge references unknown feature");
        require(e[1] >= 0 && e[1] < capability_count(),
                "feature-capability edge references unknown capability");
    }
    for (const auto& e : task_capability_edges) {
        require(e[0] >= 0 && e[0] < task_count(), "task-capability edge references unknown task");
        require(e[1] >= 0 && e[1] < capability_count(),
                "task-capability edge references unknown capability");
    }
}

int ModeIndex::at(int robot, int mode) const {
    auto it = forward.find({robot, mode});
    if (it == forward.end()) {
        throw ValidationError("encoding: no virtual robot for (robot " + std::to_string(robot) +
                              ", mode " + std::to_string(mode) + ")");
    }
    return it->second;
}

std::pair<int, int> ModeIndex::robot_mode(int v) const {
    if (v < 0 || v >= count()) {
        throw ValidationError("encoding: virtual robot index " + std::to_string(v) +
                              " out of range");
    }
    return pairs[static_cast<std::size_t>(v)];
}

ModeIndex build_mode_index(const EncodingGraph& graph) {
    graph.validate();
    ModeIndex idx;
    for (int i = 0; i < graph.robot_count(); ++i) {
        const int modes = static_cast<int>(graph.robots[i].modes.size());
        for (int k = 0; k < modes; ++k) {
            const int v = idx.count();
            idx.pairs.emplace_back(i, k);
            const bool inserted = idx.forward.emplace(std::make_pair(i, k), v).second;
            if (!inserted) {
                throw ValidationError("encoding: duplicate (robot, mode) pair");
            }
        }
    }
    return idx;
}

MappingMatrices mapping_matrices(const EncodingGraph& graph, const ModeIndex& idx) {
    MappingMatrices maps;
    maps.capability = Eigen::MatrixXi::Zero(graph.capability_count(), idx.count());
    maps.requirement = Eigen::MatrixXi::Zero(graph.task_count(), graph.capability_count());

    // feature -> capabilities reachable from it
    std::vector<std::vector<int>> feature_caps(static_cast<std::size_t>(graph.feature_count()));
    for (const auto& e : graph.feature_capability_edges) {
        feature_caps[static_cast<std::size_t>(e[0])].push_back(e[1]);
    }
    for (const auto& e : graph.mode_feature_edges) {
        const int v = idx.at(e[0], e[1]);
        for (int cap : feature_caps[static_cast<std::size_t>(e[2])]) {
            maps.capability(cap, v) = 1;
        }
    }
    for (const auto& e : graph.task_capability_edges) {
        maps.requirement(e[0], e[1]) = 1;
    }
    return maps;
}

SpecializationSet specialization_and_penalty(const MappingMatrices& maps) {
    const int n_t = static_cast<int>(maps.requirement.rows());
    const int n_vr = static_cast<int>(maps.capability.cols());
    SpecializationSet out;
    out.support = Eigen::MatrixXd::Zero(n_t, n_vr);
    out.penalty = Eigen::MatrixXd::Zero(n_t, n_vr);

    // support(j, v) = 1 iff (requirement * capability column v)_j > 0,
    // i.e. 1 - kron applied to the count vector.
    const Eigen::MatrixXi counts = maps.requirement * maps.capability;
    for (int v = 0; v < n_vr; ++v) {
        for (int j = 0; j < n_t; ++j) {
            const double s = counts(j, v) > 0 ? 1.0 : 0.0;
            out.support(j, v) = s;
            out.penalty(j, v) = 1.0 - s;
        }
    }
    return out;
}

SpecializationSet apply_region_restriction(const SpecializationSet& spec,
                                           const std::vector<RegionRestriction>& restrictions,
                                           const ModeIndex& idx,
                                           const std::vector<Eigen::Vector2d>& robot_positions) {
    SpecializationSet out = spec;
    for (const auto& rule : restrictions) {
        for (int v : rule.virtual_robots) {
            const auto [robot, mode] = idx.robot_mode(v);
            (void)mode;
            if (robot < 0 || robot >= static_cast<int>(robot_positions.size())) {
                throw ValidationError("encoding: restriction references robot without state");
            }
            if (rule.region.contains(robot_positions[static_cast<std::size_t>(robot)])) {
                out.support.col(v).setZero();
                out.penalty.col(v).setOnes();
            }
        }
    }
    return out;
}

} // namespace mmta::encoding
