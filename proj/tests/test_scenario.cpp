#include <doctest.h>

#include <string>

#include "mmta/scenario.hpp"

using namespace mmta;
using scenario::Scenario;

namespace {

const std::string kScenarioDir = MMTA_SCENARIO_DIR;

std::string minimal_scenario(const std::string& params_json) {
    return R"({
      "version": 1,
      "name": "mini",
      "params": )" + params_json + R"(,
      "features": ["wing"],
      "capabilities": ["flying"],
      "feature_capabilities": [["wing", "flying"]],
      "tasks": [{"id": "go", "target": [1.0, 0.0], "capabilities": ["flying"]}],
      "robots": [{
        "id": "r0", "position": [0.0, 0.0],
        "modes": [{"name": "cruise", "type": "cruise", "features": ["wing"]}]
      }],
      "restrictions": []
    })";
}

} // namespace

TEST_CASE("bundled scenario files") {
    SUBCASE("single uav: one robot with two modes, one task") {
        const Scenario sc = scenario::load_scenario(kScenarioDir + "/single_uav.json");
        CHECK(sc.robot_count() == 1);
        CHECK(sc.mode_index.count() == 2);
        CHECK(sc.task_count() == 1);
        CHECK(sc.restrictions.empty());
        CHECK(sc.vr_mode_types[0] == "cruise");
        CHECK(sc.vr_mode_types[1] == "hover");
        // both modes fly, so both support the task
        CHECK(sc.base_spec.support.minCoeff() == 1.0);
    }
    SUBCASE("band: three robots, one cruise-only, two tasks, one no-cruise band") {
        const Scenario sc = scenario::load_scenario(kScenarioDir + "/band_mud.json");
        CHECK(sc.robot_count() == 3);
        CHECK(sc.mode_index.count() == 5);
        CHECK(sc.task_count() == 2);
        REQUIRE(sc.restrictions.size() == 1);
        // the rule touches every cruise virtual robot
        CHECK(sc.restrictions[0].virtual_robots == std::vector<int>{0, 1, 3});
        CHECK(sc.graph.robots[0].modes.size() == 1);
    }
    SUBCASE("paper defaults fill unset parameters") {
        const Scenario sc = scenario::load_scenario(kScenarioDir + "/single_uav.json");
        CHECK(sc.params.k_v == 4.0);
        CHECK(sc.params.l1 == 1e6);
        CHECK(sc.params.l2 == 1e-4);
        CHECK(sc.params.kappa == 1e4);
        CHECK(sc.params.delta_max == 1e4);
        CHECK(sc.params.v_x_eff == 2.0);
        CHECK(sc.params.gamma1 == 5.0);
        CHECK(sc.params.gamma2 == 1.0);
    }
}

TEST_CASE("scenario validation") {
    SUBCASE("defaults applied when params are empty") {
        const Scenario sc = scenario::parse_scenario(minimal_scenario("{}"));
        CHECK(sc.params.dt == 0.01);
        CHECK(sc.params.t_end == 10.0);
        CHECK(sc.params.l1 == 1e6);
        CHECK(sc.tasks[0].gamma1.slope == 5.0);
        CHECK(sc.tasks[0].n_min == 1);
        CHECK(sc.tasks[0].n_max == 1);
    }
    SUBCASE("zero dt is rejected") {
        CHECK_THROWS_AS(scenario::parse_scenario(minimal_scenario(R"({"dt": 0.0})")),
                        ValidationError);
    }
    SUBCASE("t_end below dt is rejected") {
        CHECK_THROWS_AS(
            scenario::parse_scenario(minimal_scenario(R"({"dt": 0.5, "t_end": 0.1})")),
            ValidationError);
    }
    SUBCASE("unknown references are named in the error") {
        std::string text = minimal_scenario("{}");
        const auto at = text.find("\"wing\", \"flying\"");
        REQUIRE(at != std::string::npos);
        text.replace(at, 16, "\"wingg\", \"flying\"");
        CHECK_THROWS_WITH_AS(scenario::parse_scenario(text),
                             doctest::Contains("unknown feature 'wingg'"), ValidationError);
    }
    SUBCASE("parse errors surface") {
        CHECK_THROWS_AS(scenario::parse_scenario("{oops"), ValidationError);
    }
    SUBCASE("missing files surface as io errors") {
        CHECK_THROWS_AS(scenario::load_scenario("/nonexistent/file.json"), IoError);
    }
    SUBCASE("modes need a known type") {
        std::string text = minimal_scenario("{}");
        const auto at = text.find("\"type\": \"cruise\"");
        REQUIRE(at != std::string::npos);
        text.replace(at, 16, "\"type\": \"walk\"");
        CHECK_THROWS_AS(scenario::parse_scenario(text), ValidationError);
    }
}
