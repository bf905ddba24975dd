// Acceptance suite: runs every top-level requirement and prints one
// pass/fail line each. Exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmta/certificates.hpp"
#include "mmta/scenario.hpp"
#include "mmta/simulation.hpp"
#include "mmta/trace_io.hpp"

using namespace mmta;

namespace {

const std::string kScenarioDir = MMTA_SCENARIO_DIR;

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            detail = what;
        }
    }
};

double task_distance(const sim::StepRecord& rec, int j) {
    return std::sqrt(std::max(0.0, -rec.task_h(j)));
}

// ---------------------------------------------------------------- criteria 1+4+8 state
sim::Trace g_single_trace;
sim::Trace g_band_trace;
alloc::KktWorst g_instances_kkt;

bool criterion_single_uav(Check& c) {
    const auto sc = scenario::load_scenario(kScenarioDir + "/single_uav.json");
    g_single_trace = sim::run_simulation(sc);
    const sim::Trace& tr = g_single_trace;
    c.require(!tr.aborted, "run aborted: " + tr.abort_reason);
    c.require(tr.records.size() == 1000, "expected 1000 records");
    if (!c.ok) {
        return false;
    }
    // cruise active at t = 0
    const auto& first = tr.records.front().robots[0];
    c.require(first.active_virtual == 0 && tr.vr_names[0] == "cruise",
              "cruise mode not active at t=0");
    // completed by t = 10 with a hover phase before completion
    double completed_at = -1;
    for (const auto& rec : tr.records) {
        if (task_distance(rec, 0) <= 0.05) {
            completed_at = rec.t;
            break;
        }
    }
    c.require(completed_at >= 0, "task never reached 0.05 m");
    bool hover_before_done = false;
    for (const auto& rec : tr.records) {
        if (completed_at >= 0 && rec.t > completed_at) {
            break;
        }
        if (rec.robots[0].active_virtual == 1) {
            hover_before_done = true;
        }
    }
    c.require(hover_before_done, "no switch to hovering before completion");
    c.require(task_distance(tr.records.back(), 0) <= 0.05,
              "final distance above 0.05 m");
    return c.ok;
}

bool criterion_band(Check& c) {
    const auto sc = scenario::load_scenario(kScenarioDir + "/band_mud.json");
    g_band_trace = sim::run_simulation(sc);
    const sim::Trace& tr = g_band_trace;
    c.require(!tr.aborted, "run aborted: " + tr.abort_reason);
    if (!c.ok) {
        return false;
    }
    const auto& region = sc.restrictions.at(0).region;

    // entry of the cruise-only robot (index 0) into the band
    double entry_t = -1;
    for (const auto& rec : tr.records) {
        if (region.contains(rec.robots[0].state.position)) {
            entry_t = rec.t;
            break;
        }
    }
    c.require(entry_t >= 0, "cruise-only robot never entered the band");
    if (!c.ok) {
        return false;
    }
    // speed below 0.05 within one second of entry, and stays down
    double slow_t = -1;
    for (const auto& rec : tr.records) {
        if (rec.t < entry_t) {
            continue;
        }
        if (rec.robots[0].state.motion.head<2>().norm() < 0.05) {
            slow_t = rec.t;
            break;
        }
    }
    c.require(slow_t >= 0 && slow_t - entry_t <= 1.0,
              "cruise-only robot did not stop within 1 s of entry");

    // the robot idle before the entry acquires the orphaned task within 1 s
    int idle_robot = -1;
    for (int i = 0; i < static_cast<int>(tr.robot_ids.size()); ++i) {
        bool idle = true;
        for (const auto& rec : tr.records) {
            if (rec.t >= entry_t) {
                break;
            }
            idle = idle && rec.robots[static_cast<std::size_t>(i)].active_virtual < 0;
        }
        if (idle) {
            idle_robot = i;
        }
    }
    c.require(idle_robot >= 0, "no previously-idle robot found");
    if (c.ok) {
        double acquired_t = -1;
        for (const auto& rec : tr.records) {
            if (rec.t < entry_t) {
                continue;
            }
            if (rec.robots[static_cast<std::size_t>(idle_robot)].active_virtual >= 0) {
                acquired_t = rec.t;
                break;
            }
        }
        c.require(acquired_t >= 0 && acquired_t - entry_t <= 1.0,
                  "orphaned task not acquired within 1 s");
    }
    // both tasks done by t = 10
    for (int j = 0; j < 2; ++j) {
        c.require(task_distance(tr.records.back(), j) <= 0.05,
                  "task " + tr.task_ids[static_cast<std::size_t>(j)] + " above 0.05 m at t=10");
    }
    // restriction safety: no assignment for the cruise-only robot inside
    for (const auto& rec : tr.records) {
        if (region.contains(rec.robots[0].state.position)) {
            c.require(rec.robots[0].active_virtual < 0,
                      "cruise-only robot held a task inside the band");
        }
    }
    return c.ok;
}

// ---------------------------------------------------------------- criterion 3
struct Instance {
    encoding::ModeIndex idx;
    std::vector<dynamics::ModeSpec> modes;
    std::vector<cbf::TaskSpec> tasks;
    alloc::MiqpProblem problem;
};

Instance random_instance(std::mt19937& rng) {
    std::uniform_real_distribution<double> coord(-3.0, 3.0);
    std::uniform_real_distribution<double> vel(-1.0, 1.0);
    encoding::EncodingGraph graph;
    Instance inst;
    const int n_c = 1 + static_cast<int>(rng() % 2);
    for (int c = 0; c < n_c; ++c) {
        graph.features.push_back("f" + std::to_string(c));
        graph.capabilities.push_back("c" + std::to_string(c));
        graph.feature_capability_edges.push_back({c, c});
    }
    const int n_r = 1 + static_cast<int>(rng() % 3);
    std::vector<dynamics::UavState> states;
    int n_vr = 0;
    for (int i = 0; i < n_r; ++i) {
        encoding::RobotSpec r;
        r.id = "r" + std::to_string(i);
        const int m = 1 + static_cast<int>(rng() % 2);
        for (int k = 0; k < m; ++k) {
            r.modes.push_back("m" + std::to_string(k));
            for (int c = 0; c < n_c; ++c) {
                if (rng() % 3 != 0) {
                    graph.mode_feature_edges.push_back({i, k, c});
                }
            }
            if (rng() & 1) {
                inst.modes.push_back(dynamics::ModeSpec::cruise(k, 2.0));
            } else {
                inst.modes.push_back(dynamics::ModeSpec::hover(k));
            }
        }
        graph.robots.push_back(r);
        dynamics::UavState st;
        st.position = {coord(rng), coord(rng)};
        st.motion << vel(rng), vel(rng), vel(rng);
        states.push_back(st);
        n_vr += m;
    }
    const int max_tasks = std::max(1, 12 / n_vr);
    const int n_t = 1 + static_cast<int>(rng() % std::min(2, max_tasks));
    for (int j = 0; j < n_t; ++j) {
        graph.tasks.push_back("t" + std::to_string(j));
        cbf::TaskSpec t;
        t.id = j;
        t.name = graph.tasks.back();
        t.target = {coord(rng), coord(rng)};
        t.gamma1.slope = 5.0;
        t.gamma2.slope = 1.0;
        t.n_min = static_cast<int>(rng() % 2);
        t.n_max = std::max(1, t.n_min + static_cast<int>(rng() % 2));
        graph.task_capability_edges.push_back(
            {j, static_cast<int>(rng() % static_cast<unsigned>(n_c))});
        inst.tasks.push_back(t);
    }
    inst.idx = encoding::build_mode_index(graph);
    const auto maps = encoding::mapping_matrices(graph, inst.idx);
    const auto spec = encoding::specialization_and_penalty(maps);
    std::vector<cbf::CbfRow> rows;
    for (int v = 0; v < inst.idx.count(); ++v) {
        const auto [robot, mode_k] = inst.idx.robot_mode(v);
        (void)mode_k;
        for (int j = 0; j < n_t; ++j) {
            rows.push_back(cbf::high_rel_degree_row(inst.tasks[static_cast<std::size_t>(j)],
                                                    states[static_cast<std::size_t>(robot)],
                                                    inst.modes[static_cast<std::size_t>(v)], 4.0,
                                                    v * n_t + j));
        }
    }
    inst.problem =
        alloc::assemble_miqp(inst.idx, inst.modes, spec, maps, inst.tasks, rows, {});
    return inst;
}

bool criterion_oracle_equivalence(Check& c) {
    std::mt19937 rng(4242);
    int solved = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Instance inst = random_instance(rng);
        const auto bb = alloc::solve_allocation(inst.problem);
        const auto ex = alloc::enumerate_exhaustive(inst.problem);
        g_instances_kkt.absorb(bb.kkt_worst);
        g_instances_kkt.absorb(ex.kkt_worst);
        c.require(bb.status == ex.status, "status mismatch on instance " + std::to_string(trial));
        if (bb.status != alloc::AllocationSolution::Status::Optimal) {
            continue;
        }
        ++solved;
        c.require(std::abs(bb.cost - ex.cost) <= 1e-6,
                  "cost mismatch on instance " + std::to_string(trial));
        c.require((bb.alpha - ex.alpha).cwiseAbs().maxCoeff() == 0.0,
                  "assignment mismatch on instance " + std::to_string(trial));
    }
    c.require(solved >= 20, "too few solvable instances: " + std::to_string(solved));
    return c.ok;
}

bool criterion_kkt(Check& c) {
    char buf[160];
    alloc::KktWorst worst = g_instances_kkt;
    worst.absorb(g_single_trace.kkt_worst);
    worst.absorb(g_band_trace.kkt_worst);
    std::snprintf(buf, sizeof(buf), "stationarity %.2e feasibility %.2e complementarity %.2e",
                  worst.stationarity, worst.feasibility, worst.complementarity);
    c.detail = buf;
    c.require(worst.stationarity <= 1e-7, std::string("stationarity too large: ") + buf);
    c.require(worst.feasibility <= 1e-7, std::string("feasibility too large: ") + buf);
    c.require(worst.complementarity <= 1e-7, std::string("complementarity too large: ") + buf);
    return c.ok;
}

bool criterion_invariance(Check& c) {
    // the zero-slack row controller needs gamma2 > gamma1/2 for a stable
    // excess-speed channel; inside the numerically complete 1e-4 ball zero
    // input holds the row within ~1e-7 (see the unit suite for the analysis)
    std::mt19937 rng(4141);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double k_v = 4.0;
    const double dt = 0.01;
    for (int trial = 0; trial < 20; ++trial) {
        cbf::TaskSpec task;
        task.target = {dist(rng), dist(rng)};
        task.gamma1.slope = trial % 3 == 0 ? 2.0 : 5.0;
        task.gamma2.slope = trial % 3 == 0 ? 2.0 : 5.0;
        dynamics::UavState s;
        s.position = task.target + Eigen::Vector2d(0.5 + unit(rng), 0.5 + unit(rng));
        s.motion(2) = dist(rng);
        const Eigen::Vector2d to_target = task.target - s.position;
        const double d = to_target.norm();
        const Eigen::Vector2d body_dir =
            dynamics::rotation(s.motion(2)).transpose() * to_target.normalized();
        s.motion.head<2>() =
            task.gamma1.slope / 2.0 * d * (trial % 2 == 0 ? 1.000001 : 1.02) * body_dir;
        c.require(cbf::integral_h_prime(task, s).value >= 0.0, "bad start state");

        const auto mode = dynamics::ModeSpec::hover(1);
        for (int k = 0; k < 1000 && c.ok; ++k) {
            const cbf::CbfRow row = cbf::high_rel_degree_row(task, s, mode, k_v, 0);
            Eigen::Vector2d u = Eigen::Vector2d::Zero();
            const double aa = row.a.squaredNorm();
            const bool complete = (s.position - task.target).norm() <= 1e-4;
            if (!complete && aa > 1e-12 && row.b > 0) {
                u = row.a * (row.b / aa);
            }
            const double h_prime = cbf::integral_h_prime(task, s).value;
            c.require(h_prime >= -1e-3,
                      "h' dropped to " + std::to_string(h_prime) + " in trial " +
                          std::to_string(trial));
            s = dynamics::rk4_step(s, mode, u, k_v, dt);
        }
    }
    return c.ok;
}

bool criterion_certificate_oracle(Check& c) {
    // reproduce the Lyapunov identity at random states (frozen-input flow)
    std::mt19937 rng(71);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> vel(-1.5, 1.5);
    int tested = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n_tasks = 1 + (trial % 2);
        encoding::EncodingGraph graph;
        graph.features = {"f0"};
        graph.capabilities = {"c0"};
        graph.feature_capability_edges = {{0, 0}};
        std::vector<dynamics::ModeSpec> modes;
        std::vector<dynamics::UavState> states;
        for (int i = 0; i < n_tasks; ++i) {
            graph.robots.push_back({"r" + std::to_string(i), {"cruise", "hover"}});
            graph.mode_feature_edges.push_back({i, 0, 0});
            graph.mode_feature_edges.push_back({i, 1, 0});
            modes.push_back(dynamics::ModeSpec::cruise(0, 2.0));
            modes.push_back(dynamics::ModeSpec::hover(1));
            dynamics::UavState st;
            st.position = {coord(rng), coord(rng)};
            st.motion << vel(rng), vel(rng), coord(rng);
            states.push_back(st);
        }
        std::vector<cbf::TaskSpec> tasks;
        for (int j = 0; j < n_tasks; ++j) {
            graph.tasks.push_back("t" + std::to_string(j));
            graph.task_capability_edges.push_back({j, 0});
            cbf::TaskSpec t;
            t.id = j;
            t.target = {coord(rng), coord(rng)};
            t.gamma1.slope = 5.0;
            t.gamma2.slope = 1.0;
            tasks.push_back(t);
        }
        const auto idx = encoding::build_mode_index(graph);
        const auto maps = encoding::mapping_matrices(graph, idx);
        const auto spec = encoding::specialization_and_penalty(maps);
        std::vector<cbf::CbfRow> rows;
        for (int v = 0; v < idx.count(); ++v) {
            const auto [robot, mode_k] = idx.robot_mode(v);
            (void)mode_k;
            for (int j = 0; j < n_tasks; ++j) {
                rows.push_back(cbf::high_rel_degree_row(tasks[static_cast<std::size_t>(j)],
                                                        states[static_cast<std::size_t>(robot)],
                                                        modes[static_cast<std::size_t>(v)], 4.0,
                                                        v * n_tasks + j));
            }
        }
        const auto problem = alloc::assemble_miqp(idx, modes, spec, maps, tasks, rows, {});

        cert::AssignmentMap map;
        std::vector<Eigen::VectorXd> inputs(static_cast<std::size_t>(idx.count()));
        for (int v = 0; v < idx.count(); ++v) {
            inputs[static_cast<std::size_t>(v)] = Eigen::Vector2d(vel(rng), vel(rng));
        }
        for (int j = 0; j < n_tasks; ++j) {
            map.task_virtual.push_back(2 * j + (trial % 2));
        }
        const auto mats = cert::assemble_certificate_matrices(problem, idx, modes, states, tasks,
                                                              map, 4.0, 1.0, 1.0, 1.0);
        Eigen::VectorXd delta = Eigen::VectorXd::Constant(problem.layout.slack_count(), 0.3);
        Eigen::MatrixXd alpha = Eigen::MatrixXd::Zero(n_tasks, idx.count());
        for (int j = 0; j < n_tasks; ++j) {
            alpha(j, map.task_virtual[static_cast<std::size_t>(j)]) = 1.0;
        }
        const Eigen::VectorXd phi =
            cert::build_phi(problem, idx, states, tasks, map, inputs, delta, alpha);
        const double quad = phi.dot(mats.b0_hrd * phi);

        auto lyapunov = [&](const std::vector<dynamics::UavState>& st) {
            double v = 0;
            for (int j = 0; j < n_tasks; ++j) {
                const auto [robot, mode_k] =
                    idx.robot_mode(map.task_virtual[static_cast<std::size_t>(j)]);
                (void)mode_k;
                const double h =
                    cbf::task_h(tasks[static_cast<std::size_t>(j)],
                                st[static_cast<std::size_t>(robot)].position)
                        .value;
                v += h * h;
            }
            return v;
        };
        auto advance = [&](std::vector<dynamics::UavState> st, double dt_signed) {
            for (int j = 0; j < n_tasks; ++j) {
                const int vr = map.task_virtual[static_cast<std::size_t>(j)];
                const auto [robot, mode_k] = idx.robot_mode(vr);
                (void)mode_k;
                const auto& mode = modes[static_cast<std::size_t>(vr)];
                const Eigen::VectorXd& u = inputs[static_cast<std::size_t>(vr)];
                auto field = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
                    const auto sx = dynamics::UavState::unpack(z);
                    const auto d = dynamics::uav_derivative(sx, mode, u, 4.0);
                    Eigen::Matrix<double, 5, 1> dz;
                    dz << d.position, d.motion;
                    return (dt_signed < 0 ? -1.0 : 1.0) * dz;
                };
                st[static_cast<std::size_t>(robot)] = dynamics::UavState::unpack(
                    dynamics::rk4_step(field, st[static_cast<std::size_t>(robot)].pack(),
                                       std::abs(dt_signed)));
            }
            return st;
        };
        const double eps = 1e-3;
        const double v0 = lyapunov(states);
        const double vp = lyapunov(advance(states, eps));
        const double vm = lyapunov(advance(states, -eps));
        const double vdot = (vp - vm) / (2 * eps);
        const double vddot = (vp - 2 * v0 + vm) / (eps * eps);
        const double reference = -vddot - 2.0 * vdot - v0;
        c.require(std::abs(quad - reference) <= 1e-3 * (1.0 + std::abs(reference)),
                  "flow identity off at trial " + std::to_string(trial));
        ++tested;
    }
    c.require(tested == 20, "incomplete oracle sweep");

    // eigensolver against closed forms
    std::uniform_real_distribution<double> dist(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Matrix2d m2;
        const double a = dist(rng);
        const double b = dist(rng);
        const double d = dist(rng);
        m2 << a, b, b, d;
        const double mean = (a + d) / 2;
        const double radius = std::sqrt((a - d) * (a - d) / 4 + b * b);
        const auto e2 = cert::jacobi_eigensystem(m2);
        c.require(std::abs(e2.values(0) - (mean - radius)) <= 1e-10 &&
                      std::abs(e2.values(1) - (mean + radius)) <= 1e-10,
                  "2x2 eigenvalues off");

        Eigen::Matrix3d m3;
        for (int i = 0; i < 3; ++i) {
            for (int j = i; j < 3; ++j) {
                m3(i, j) = dist(rng);
                m3(j, i) = m3(i, j);
            }
        }
        const double q = m3.trace() / 3.0;
        const Eigen::Matrix3d bmat = m3 - q * Eigen::Matrix3d::Identity();
        const double p = std::sqrt((bmat * bmat).trace() / 6.0);
        double r = bmat.determinant() / 2.0 / (p * p * p);
        r = std::clamp(r, -1.0, 1.0);
        const double phi3 = std::acos(r) / 3.0;
        double lam[3];
        lam[0] = q + 2 * p * std::cos(phi3);
        lam[2] = q + 2 * p * std::cos(phi3 + 2 * M_PI / 3.0);
        lam[1] = 3 * q - lam[0] - lam[2];
        std::sort(lam, lam + 3);
        const auto e3 = cert::jacobi_eigensystem(m3);
        for (int i = 0; i < 3; ++i) {
            c.require(std::abs(e3.values(i) - lam[i]) <= 1e-10, "3x3 eigenvalues off");
        }
    }
    return c.ok;
}

bool criterion_encoding(Check& c) {
    std::mt19937 rng(1717);
    // penalty equals identity minus S S-pseudoinverse, via the explicit
    // diagonal pseudo-inverse
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + static_cast<int>(rng() % 6);
        Eigen::VectorXd s(n);
        for (int i = 0; i < n; ++i) {
            s(i) = (rng() & 1) ? 1.0 : 0.0;
        }
        Eigen::MatrixXd S = s.asDiagonal();
        Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            if (S(i, i) != 0.0) {
                pinv(i, i) = 1.0 / S(i, i);
            }
        }
        const Eigen::MatrixXd penalty = Eigen::MatrixXd::Identity(n, n) - S * pinv;
        for (int i = 0; i < n && c.ok; ++i) {
            c.require(penalty(i, i) == 1.0 - s(i), "penalty diagonal mismatch");
            for (int j = 0; j < n; ++j) {
                if (i != j) {
                    c.require(penalty(i, j) == 0.0, "penalty off-diagonal nonzero");
                }
            }
        }
    }
    // bijectivity and ordering of the mode index on random mode counts
    for (int trial = 0; trial < 100 && c.ok; ++trial) {
        encoding::EncodingGraph g;
        const int robots = 1 + static_cast<int>(rng() % 5);
        for (int i = 0; i < robots; ++i) {
            encoding::RobotSpec r;
            r.id = "r" + std::to_string(i);
            const int modes = 1 + static_cast<int>(rng() % 4);
            for (int k = 0; k < modes; ++k) {
                r.modes.push_back("m" + std::to_string(k));
            }
            g.robots.push_back(r);
        }
        const auto idx = encoding::build_mode_index(g);
        for (int v = 0; v < idx.count() && c.ok; ++v) {
            const auto [i, k] = idx.robot_mode(v);
            c.require(idx.at(i, k) == v, "mode index not a bijection");
            if (v > 0) {
                c.require(idx.robot_mode(v - 1) < idx.robot_mode(v),
                          "mode index ordering broken");
            }
        }
    }
    return c.ok;
}

bool criterion_determinism(Check& c) {
    const auto sc = scenario::load_scenario(kScenarioDir + "/single_uav.json");
    const auto dir_a = std::filesystem::temp_directory_path() / "mmta_accept_a";
    const auto dir_b = std::filesystem::temp_directory_path() / "mmta_accept_b";
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    trace_io::export_traces(sim::run_simulation(sc), dir_a.string());
    trace_io::export_traces(sim::run_simulation(sc), dir_b.string());
    for (const auto& entry : std::filesystem::directory_iterator(dir_a)) {
        std::ifstream fa(entry.path(), std::ios::binary);
        std::ifstream fb(dir_b / entry.path().filename(), std::ios::binary);
        c.require(fb.good(), "missing file in second run");
        const std::string a((std::istreambuf_iterator<char>(fa)), {});
        const std::string b((std::istreambuf_iterator<char>(fb)), {});
        c.require(a == b, "byte difference in " + entry.path().filename().string());
    }
    std::filesystem::remove_all(dir_a);
    std::filesystem::remove_all(dir_b);
    return c.ok;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<bool(Check&)> run;
        double time_limit_s;
    };
    const std::vector<Criterion> criteria = {
        {"1 single-uav mode switching", criterion_single_uav, 30.0},
        {"2 multi-uav restriction resilience", criterion_band, 60.0},
        {"3 allocation oracle equivalence (50 instances)", criterion_oracle_equivalence, 60.0},
        {"4 qp optimality residuals", criterion_kkt, 60.0},
        {"5 degree-two barrier forward invariance", criterion_invariance, 60.0},
        {"6 certificate flow identity and eigensolver", criterion_certificate_oracle, 60.0},
        {"7 encoding properties", criterion_encoding, 60.0},
        {"8 run determinism", criterion_determinism, 60.0},
    };

    int failures = 0;
    for (const auto& crit : criteria) {
        Check check;
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        try {
            ok = crit.run(check);
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (elapsed > crit.time_limit_s) {
            ok = false;
            check.detail = "time limit exceeded";
        }
        std::printf("%s criterion %s (%.1f s%s%s)\n", ok && check.ok ? "PASS" : "FAIL", crit.name,
                    elapsed, check.detail.empty() ? "" : "; ",
                    check.detail.c_str());
        if (!(ok && check.ok)) {
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
