#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mmta/errors.hpp"

namespace mmta::encoding {

struct RobotSpec {
    std::string id;
    std::vector<std::string> modes;
};

/// Layered task encoding: robots carry modes, modes carry features, features
/// grant capabilities, tasks require capabilities. Edges are index triples /
/// pairs into the node lists.
struct EncodingGraph {
    std::vector<RobotSpec> robots;
    std::vector<std::string> features;
    std::vector<std::string> capabilities;
    std::vector<std::string> tasks;

    std::vector<std::array<int, 3>> mode_feature_edges;       // (robot, mode, feature)
    std::vector<std::array<int, 2>> feature_capability_edges; // (feature, capability)
    std::vector<std::array<int, 2>> task_capability_edges;    // (task, capability)

    int robot_count() const { return static_cast<int>(robots.size()); }
    int feature_count() const { return static_cast<int>(features.size()); }
    int capability_count() const { return static_cast<int>(capabilities.size()); }
    int task_count() const { return static_cast<int>(tasks.size()); }

    // Throws ValidationError on dangling edge endpoints, duplicate ids,
    // or robots without modes.
    void validate() const;
};

/// Bijection between virtual-robot indices and (robot, mode) pairs, ordered
/// (0,0),...,(0,m0-1),(1,0),... Everything downstream indexes virtual robots
/// through this.
struct ModeIndex {
    std::vector<std::pair<int, int>> pairs;   // virtual index -> (robot, mode)
    std::map<std::pair<int, int>, int> forward;

    int count() const { return static_cast<int>(pairs.size()); }
    int at(int robot, int mode) const;
    std::pair<int, int> robot_mode(int v) const;
};

ModeIndex build_mode_index(const EncodingGraph& graph);

/// capability: n_c x n_vr, entry (l, v) = 1 iff virtual robot v reaches
/// capability l through at least one of its features.
/// requirement: n_t x n_c, entry (j, l) = 1 iff task j requires capability l.
struct MappingMatrices {
    Eigen::MatrixXi capability;
    Eigen::MatrixXi requirement;
};

MappingMatrices mapping_matrices(const EncodingGraph& graph, const ModeIndex& idx);

/// Diagonals of the per-virtual-robot specialization and penalty matrices,
/// stored column-wise (n_t x n_vr). support + penalty == 1 elementwise.
struct SpecializationSet {
    Eigen::MatrixXd support;
    Eigen::MatrixXd penalty;

    int task_count() const { return static_cast<int>(support.rows()); }
    int vr_count() const { return static_cast<int>(support.cols()); }
};

SpecializationSet specialization_and_penalty(const MappingMatrices& maps);

/// Closed axis-aligned rectangle; boundary points count as inside.
struct Region {
    double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

    bool contains(const Eigen::Vector2d& p) const {
        return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
    }
};

/// A region plus the set of virtual robots whose support gets zeroed when the
/// owning robot's position lies inside the region.
struct RegionRestriction {
    Region region;
    std::vector<int> virtual_robots;
};

SpecializationSet apply_region_restriction(const SpecializationSet& spec,
                                           const std::vector<RegionRestriction>& restrictions,
                                           const ModeIndex& idx,
                                           const std::vector<Eigen::Vector2d>& robot_positions);

} // namespace mmta::encoding
