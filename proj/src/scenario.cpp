#include "mmta/scenario.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace mmta::scenario {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
    throw ValidationError("scenario: " + message);
}

double number_or(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j.at(key).is_number()) {
        fail(std::string("params.") + key + " must be a number");
    }
    return j.at(key).get<double>();
}

Eigen::Vector2d point_field(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        fail(where + " must be a [x, y] pair");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

int index_of(const std::vector<std::string>& ids, const std::string& id,
             const std::string& what) {
    for (int i = 0; i < static_cast<int>(ids.size()); ++i) {
        if (ids[static_cast<std::size_t>(i)] == id) {
            return i;
        }
    }
    fail("unknown " + what + " '" + id + "'");
}

} // namespace

int Scenario::step_count() const {
    return static_cast<int>(std::llround(params.t_end / params.dt));
}

Scenario parse_scenario(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(std::string("parse error: ") + e.what());
    }

    if (!doc.contains("version") || !doc.at("version").is_number_integer()) {
        fail("missing integer field 'version'");
    }
    if (doc.at("version").get<int>() != 1) {
        fail("unsupported schema version " + doc.at("version").dump());
    }

    Scenario sc;
    sc.name = doc.value("name", std::string("unnamed"));

    const json params = doc.value("params", json::object());
    sc.params.k_v = number_or(params, "k_v", sc.params.k_v);
    sc.params.l1 = number_or(params, "l1", sc.params.l1);
    sc.params.l2 = number_or(params, "l2", sc.params.l2);
    sc.params.kappa = number_or(params, "kappa", sc.params.kappa);
    sc.params.delta_max = number_or(params, "delta_max", sc.params.delta_max);
    sc.params.v_x_eff = number_or(params, "v_x_eff", sc.params.v_x_eff);
    sc.params.gamma1 = number_or(params, "gamma1", sc.params.gamma1);
    sc.params.gamma2 = number_or(params, "gamma2", sc.params.gamma2);
    sc.params.dt = number_or(params, "dt", sc.params.dt);
    sc.params.t_end = number_or(params, "t_end", sc.params.t_end);
    sc.params.c = number_or(params, "c", sc.params.c);
    sc.params.c1 = number_or(params, "c1", sc.params.c1);
    sc.params.c2 = number_or(params, "c2", sc.params.c2);
    if (params.contains("tau_grid")) {
        const json& g = params.at("tau_grid");
        sc.params.tau_grid.min = number_or(g, "min", sc.params.tau_grid.min);
        sc.params.tau_grid.max = number_or(g, "max", sc.params.tau_grid.max);
        sc.params.tau_grid.points =
            static_cast<int>(number_or(g, "points", sc.params.tau_grid.points));
    }

    if (!(sc.params.dt > 0)) {
        fail("params.dt must be > 0");
    }
    if (sc.params.t_end < sc.params.dt) {
        fail("params.t_end must be >= params.dt");
    }
    if (!(sc.params.k_v > 0) || !(sc.params.kappa > 1) || !(sc.params.delta_max > 0)) {
        fail("params.k_v, params.kappa, params.delta_max out of range");
    }
    if (!(sc.params.gamma1 > 0) || !(sc.params.gamma2 > 0)) {
        fail("class-K slopes gamma1/gamma2 must be > 0");
    }
    if (!(sc.params.c > 0) || !(sc.params.c1 > 0) || !(sc.params.c2 > 0)) {
        fail("certificate scalars c, c1, c2 must be > 0");
    }

    // node lists
    for (const char* key : {"features", "capabilities", "tasks", "robots"}) {
        if (!doc.contains(key) || !doc.at(key).is_array()) {
            fail(std::string("missing array field '") + key + "'");
        }
    }
    for (const auto& f : doc.at("features")) {
        sc.graph.features.push_back(f.get<std::string>());
    }
    for (const auto& c : doc.at("capabilities")) {
        sc.graph.capabilities.push_back(c.get<std::string>());
    }

    for (const auto& fc : doc.value("feature_capabilities", json::array())) {
        if (!fc.is_array() || fc.size() != 2) {
            fail("feature_capabilities entries must be [feature, capability] pairs");
        }
        sc.graph.feature_capability_edges.push_back(
            {index_of(sc.graph.features, fc[0].get<std::string>(), "feature"),
             index_of(sc.graph.capabilities, fc[1].get<std::string>(), "capability")});
    }

    int task_id = 0;
    for (const auto& t : doc.at("tasks")) {
        cbf::TaskSpec task;
        task.id = task_id++;
        task.name = t.value("id", "task_" + std::to_string(task.id));
        sc.graph.tasks.push_back(task.name);
        if (!t.contains("target")) {
            fail("task '" + task.name + "' has no target");
        }
        task.target = point_field(t.at("target"), "task '" + task.name + "' target");
        task.gamma1.slope = sc.params.gamma1;
        task.gamma2.slope = sc.params.gamma2;
        task.n_min = t.value("n_min", 1);
        task.n_max = t.value("n_max", 1);
        if (task.n_min > task.n_max || task.n_min < 0) {
            fail("task '" + task.name + "' has invalid robot count bounds");
        }
        for (const auto& cap : t.value("capabilities", json::array())) {
            sc.graph.task_capability_edges.push_back(
                {task.id, index_of(sc.graph.capabilities, cap.get<std::string>(), "capability")});
        }
        sc.tasks.push_back(task);
    }

    int robot_i = 0;
    for (const auto& r : doc.at("robots")) {
        encoding::RobotSpec spec;
        spec.id = r.value("id", "robot_" + std::to_string(robot_i));

        dynamics::UavState st;
        if (!r.contains("position")) {
            fail("robot '" + spec.id + "' has no position");
        }
        st.position = point_field(r.at("position"), "robot '" + spec.id + "' position");
        if (r.contains("velocity")) {
            st.motion.head<2>() = point_field(r.at("velocity"), "robot '" + spec.id + "' velocity");
        }
        st.motion(2) = r.value("heading", 0.0);
        if (!st.pack().allFinite()) {
            fail("robot '" + spec.id + "' has a non-finite initial state");
        }
        sc.initial_states.push_back(st);

        if (!r.contains("modes") || !r.at("modes").is_array() || r.at("modes").empty()) {
            fail("robot '" + spec.id + "' needs a non-empty mode list");
        }
        int mode_k = 0;
        for (const auto& m : r.at("modes")) {
            const std::string mode_name = m.value("name", "mode_" + std::to_string(mode_k));
            const std::string type = m.value("type", "");
            dynamics::ModeSpec mode;
            if (type == "cruise") {
                mode = dynamics::ModeSpec::cruise(mode_k, sc.params.v_x_eff, mode_name);
            } else if (type == "hover") {
                mode = dynamics::ModeSpec::hover(mode_k, mode_name);
            } else {
                fail("robot '" + spec.id + "' mode '" + mode_name +
                     "' has unknown type '" + type + "' (expected cruise or hover)");
            }
            spec.modes.push_back(mode_name);
            sc.vr_modes.push_back(mode);
            sc.vr_mode_types.push_back(type);
            for (const auto& f : m.value("features", json::array())) {
                sc.graph.mode_feature_edges.push_back(
                    {robot_i, mode_k, index_of(sc.graph.features, f.get<std::string>(), "feature")});
            }
            ++mode_k;
        }
        sc.graph.robots.push_back(spec);
        ++robot_i;
    }

    sc.graph.validate();
    sc.mode_index = encoding::build_mode_index(sc.graph);
    sc.maps = encoding::mapping_matrices(sc.graph, sc.mode_index);
    sc.base_spec = encoding::specialization_and_penalty(sc.maps);

    for (const auto& rule : doc.value("restrictions", json::array())) {
        if (!rule.contains("rect") || !rule.at("rect").is_array() || rule.at("rect").size() != 4) {
            fail("restriction needs rect: [xmin, ymin, xmax, ymax]");
        }
        encoding::RegionRestriction rr;
        rr.region.xmin = rule.at("rect")[0].get<double>();
        rr.region.ymin = rule.at("rect")[1].get<double>();
        rr.region.xmax = rule.at("rect")[2].get<double>();
        rr.region.ymax = rule.at("rect")[3].get<double>();
        if (rr.region.xmin > rr.region.xmax || rr.region.ymin > rr.region.ymax) {
            fail("restriction rect is inverted");
        }
        const std::string type = rule.value("mode_type", "");
        if (type != "cruise" && type != "hover") {
            fail("restriction mode_type must be cruise or hover");
        }
        for (int v = 0; v < sc.mode_index.count(); ++v) {
            if (sc.vr_mode_types[static_cast<std::size_t>(v)] == type) {
                rr.virtual_robots.push_back(v);
            }
        }
        sc.restrictions.push_back(std::move(rr));
    }

    return sc;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("scenario: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

} // namespace mmta::scenario
