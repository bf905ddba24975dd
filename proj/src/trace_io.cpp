#include "mmta/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace mmta::trace_io {

namespace fs = std::filesystem;

namespace {

constexpr double kCompletionRadius = 0.05;

std::string fmt(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const std::string& where) {
    double x = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw IoError("trace: bad number '" + s + "' in " + where);
    }
    return x;
}

std::string sanitize(const std::string& id) {
    std::string out;
    for (char c : id) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    }
    return out;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path);
    if (!f) {
        throw IoError("trace: cannot write '" + path.string() + "'");
    }
    return f;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::ifstream f(path);
    if (!f) {
        throw IoError("trace: cannot read '" + path.string() + "'");
    }
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        rows.push_back(split(line));
    }
    return rows;
}

const char* status_name(alloc::AllocationSolution::Status s) {
    switch (s) {
    case alloc::AllocationSolution::Status::Optimal:
        return "optimal";
    case alloc::AllocationSolution::Status::Infeasible:
        return "infeasible";
    case alloc::AllocationSolution::Status::NodeLimit:
        return "node_limit";
    }
    return "unknown";
}

alloc::AllocationSolution::Status status_from(const std::string& s) {
    if (s == "optimal") {
        return alloc::AllocationSolution::Status::Optimal;
    }
    if (s == "infeasible") {
        return alloc::AllocationSolution::Status::Infeasible;
    }
    if (s == "node_limit") {
        return alloc::AllocationSolution::Status::NodeLimit;
    }
    throw IoError("trace: unknown solver status '" + s + "'");
}

} // namespace

void export_traces(const sim::Trace& trace, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) {
        throw IoError("trace: cannot create '" + out_dir + "': " + ec.message());
    }
    const fs::path dir(out_dir);
    const int n_r = static_cast<int>(trace.robot_ids.size());
    const int n_t = static_cast<int>(trace.task_ids.size());
    const int n_vr = static_cast<int>(trace.vr_names.size());

    // per-robot trajectories
    for (int i = 0; i < n_r; ++i) {
        char idx[8];
        std::snprintf(idx, sizeof(idx), "%02d", i);
        auto f = open_out(dir / ("trajectory_" + std::string(idx) + "_" +
                                 sanitize(trace.robot_ids[static_cast<std::size_t>(i)]) + ".csv"));
        f << "t,x,y,vx,vy,theta,mode,energy,u1,u2\n";
        for (const auto& rec : trace.records) {
            const sim::RobotRecord& rr = rec.robots[static_cast<std::size_t>(i)];
            const std::string mode =
                rr.active_virtual >= 0
                    ? trace.vr_names[static_cast<std::size_t>(rr.active_virtual)]
                    : "none";
            f << fmt(rec.t) << ',' << fmt(rr.state.position.x()) << ','
              << fmt(rr.state.position.y()) << ',' << fmt(rr.state.vx()) << ','
              << fmt(rr.state.vy()) << ',' << fmt(rr.state.theta()) << ',' << mode << ','
              << fmt(rr.energy) << ',' << fmt(rr.input(0)) << ',' << fmt(rr.input(1)) << '\n';
        }
    }

    // allocation matrix and slacks
    {
        auto f = open_out(dir / "allocation.csv");
        f << "t,status";
        for (int v = 0; v < n_vr; ++v) {
            for (int j = 0; j < n_t; ++j) {
                f << ",a_" << sanitize(trace.task_ids[static_cast<std::size_t>(j)]) << "_v" << v;
            }
        }
        for (int v = 0; v < n_vr; ++v) {
            for (int j = 0; j < n_t; ++j) {
                f << ",d_" << sanitize(trace.task_ids[static_cast<std::size_t>(j)]) << "_v" << v;
            }
        }
        f << '\n';
        for (const auto& rec : trace.records) {
            f << fmt(rec.t) << ',' << status_name(rec.solver_status);
            for (int v = 0; v < n_vr; ++v) {
                for (int j = 0; j < n_t; ++j) {
                    f << ',' << fmt(rec.alpha(j, v));
                }
            }
            for (int s = 0; s < rec.delta.size(); ++s) {
                f << ',' << fmt(rec.delta(s));
            }
            f << '\n';
        }
    }

    // per-task barrier values
    {
        auto f = open_out(dir / "tasks.csv");
        f << 't';
        for (const auto& id : trace.task_ids) {
            f << ",h_" << sanitize(id);
        }
        f << '\n';
        for (const auto& rec : trace.records) {
            f << fmt(rec.t);
            for (int j = 0; j < n_t; ++j) {
                f << ',' << fmt(rec.task_h(j));
            }
            f << '\n';
        }
    }

    // sampled certificate reports
    {
        auto f = open_out(dir / "certificates.csv");
        f << "step,t,tau1,tau2,tau3,margin,feasible\n";
        for (std::size_t k = 0; k < trace.records.size(); ++k) {
            const auto& rec = trace.records[k];
            if (!rec.certificate) {
                continue;
            }
            const cert::SearchReport& c = *rec.certificate;
            f << k << ',' << fmt(rec.t) << ',' << fmt(c.tau[0]) << ',' << fmt(c.tau[1]) << ','
              << fmt(c.tau[2]) << ',' << fmt(c.margin) << ',' << (c.feasible ? 1 : 0) << '\n';
        }
    }

    // run metadata (needed to reload the trace losslessly)
    {
        auto f = open_out(dir / "meta.csv");
        f << "key,value\n";
        f << "dt," << fmt(trace.dt) << '\n';
        f << "aborted," << (trace.aborted ? 1 : 0) << '\n';
        f << "abort_reason," << trace.abort_reason << '\n';
        f << "vr_names,";
        for (int v = 0; v < n_vr; ++v) {
            f << (v ? ";" : "") << trace.vr_names[static_cast<std::size_t>(v)];
        }
        f << '\n';
        f << "vr_owner,";
        for (std::size_t v = 0; v < trace.vr_owner.size(); ++v) {
            f << (v ? ";" : "") << trace.vr_owner[v];
        }
        f << '\n';
        f << "robot_ids,";
        for (int i = 0; i < n_r; ++i) {
            f << (i ? ";" : "") << trace.robot_ids[static_cast<std::size_t>(i)];
        }
        f << '\n';
        f << "task_ids,";
        for (int j = 0; j < n_t; ++j) {
            f << (j ? ";" : "") << trace.task_ids[static_cast<std::size_t>(j)];
        }
        f << '\n';
    }

    // human-readable summary
    {
        auto f = open_out(dir / "summary.txt");
        f << "records: " << trace.records.size() << "\n";
        for (int j = 0; j < n_t; ++j) {
            double completed_at = -1;
            for (const auto& rec : trace.records) {
                if (std::sqrt(std::max(0.0, -rec.task_h(j))) <= kCompletionRadius) {
                    completed_at = rec.t;
                    break;
                }
            }
            const double final_dist =
                trace.records.empty()
                    ? 0.0
                    : std::sqrt(std::max(0.0, -trace.records.back().task_h(j)));
            f << "task " << trace.task_ids[static_cast<std::size_t>(j)] << ": ";
            if (completed_at >= 0) {
                f << "completed at t=" << fmt(completed_at);
            } else {
                f << "not completed";
            }
            f << ", final distance " << fmt(final_dist) << "\n";
        }
        for (int i = 0; i < n_r; ++i) {
            double total = 0;
            for (const auto& rec : trace.records) {
                total += rec.robots[static_cast<std::size_t>(i)].energy * trace.dt;
            }
            f << "robot " << trace.robot_ids[static_cast<std::size_t>(i)]
              << ": total energy " << fmt(total) << "\n";
        }
        if (trace.aborted) {
            f << "aborted: " << trace.abort_reason << "\n";
        }
    }
}

sim::Trace import_traces(const std::string& dir_in) {
    const fs::path dir(dir_in);
    sim::Trace trace;

    // metadata first: ids, names, dt
    std::map<std::string, std::string> meta;
    for (const auto& row : read_csv(dir / "meta.csv")) {
        if (row.size() >= 2 && row[0] != "key") {
            std::string value = row[1];
            for (std::size_t i = 2; i < row.size(); ++i) {
                value += "," + row[i];
            }
            meta[row[0]] = value;
        }
    }
    auto split_ids = [](const std::string& s) {
        std::vector<std::string> out;
        if (s.empty()) {
            return out;
        }
        std::string cur;
        for (char c : s) {
            if (c == ';') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        out.push_back(cur);
        return out;
    };
    trace.dt = parse_double(meta["dt"], "meta.csv dt");
    trace.aborted = meta["aborted"] == "1";
    trace.abort_reason = meta["abort_reason"];
    trace.vr_names = split_ids(meta["vr_names"]);
    trace.robot_ids = split_ids(meta["robot_ids"]);
    trace.task_ids = split_ids(meta["task_ids"]);
    for (const auto& owner : split_ids(meta["vr_owner"])) {
        trace.vr_owner.push_back(static_cast<int>(parse_double(owner, "meta.csv vr_owner")));
    }

    const int n_r = static_cast<int>(trace.robot_ids.size());
    const int n_t = static_cast<int>(trace.task_ids.size());
    const int n_vr = static_cast<int>(trace.vr_names.size());

    // allocation drives the record count
    const auto alloc_rows = read_csv(dir / "allocation.csv");
    const std::size_t n_records = alloc_rows.size() - 1;
    trace.records.resize(n_records);
    for (std::size_t k = 0; k < n_records; ++k) {
        const auto& row = alloc_rows[k + 1];
        sim::StepRecord& rec = trace.records[k];
        rec.t = parse_double(row.at(0), "allocation.csv");
        rec.solver_status = status_from(row.at(1));
        rec.alpha = Eigen::MatrixXd::Zero(n_t, n_vr);
        rec.delta = Eigen::VectorXd::Zero(n_t * n_vr);
        std::size_t col = 2;
        for (int v = 0; v < n_vr; ++v) {
            for (int j = 0; j < n_t; ++j) {
                rec.alpha(j, v) = parse_double(row.at(col++), "allocation.csv");
            }
        }
        for (int s = 0; s < n_t * n_vr; ++s) {
            rec.delta(s) = parse_double(row.at(col++), "allocation.csv");
        }
        rec.robots.resize(static_cast<std::size_t>(n_r));
    }

    // trajectories
    std::vector<fs::path> traj_files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("trajectory_", 0) == 0) {
            traj_files.push_back(entry.path());
        }
    }
    std::sort(traj_files.begin(), traj_files.end());
    if (static_cast<int>(traj_files.size()) != n_r) {
        throw IoError("trace: trajectory file count does not match meta robot list");
    }
    for (int i = 0; i < n_r; ++i) {
        const auto rows = read_csv(traj_files[static_cast<std::size_t>(i)]);
        if (rows.size() - 1 != n_records) {
            throw IoError("trace: trajectory row count mismatch in " +
                          traj_files[static_cast<std::size_t>(i)].string());
        }
        for (std::size_t k = 0; k < n_records; ++k) {
            const auto& row = rows[k + 1];
            sim::RobotRecord& rr = trace.records[k].robots[static_cast<std::size_t>(i)];
            rr.state.position.x() = parse_double(row.at(1), "trajectory");
            rr.state.position.y() = parse_double(row.at(2), "trajectory");
            rr.state.motion(0) = parse_double(row.at(3), "trajectory");
            rr.state.motion(1) = parse_double(row.at(4), "trajectory");
            rr.state.motion(2) = parse_double(row.at(5), "trajectory");
            rr.energy = parse_double(row.at(7), "trajectory");
            rr.input(0) = parse_double(row.at(8), "trajectory");
            rr.input(1) = parse_double(row.at(9), "trajectory");
            // active pair re-derived from the allocation matrix
            rr.active_virtual = -1;
            rr.active_task = -1;
        }
    }
    // active assignments re-derived from the allocation matrix and ownership
    for (std::size_t k = 0; k < n_records; ++k) {
        sim::StepRecord& rec = trace.records[k];
        for (int v = 0; v < n_vr; ++v) {
            for (int j = 0; j < n_t; ++j) {
                if (rec.alpha(j, v) > 0.5) {
                    const int robot = trace.vr_owner.at(static_cast<std::size_t>(v));
                    rec.robots.at(static_cast<std::size_t>(robot)).active_virtual = v;
                    rec.robots.at(static_cast<std::size_t>(robot)).active_task = j;
                }
            }
        }
    }

    // tasks
    {
        const auto rows = read_csv(dir / "tasks.csv");
        if (rows.size() - 1 != n_records) {
            throw IoError("trace: tasks.csv row count mismatch");
        }
        for (std::size_t k = 0; k < n_records; ++k) {
            trace.records[k].task_h.resize(n_t);
            for (int j = 0; j < n_t; ++j) {
                trace.records[k].task_h(j) =
                    parse_double(rows[k + 1].at(static_cast<std::size_t>(j) + 1), "tasks.csv");
            }
        }
    }

    // certificates
    {
        const auto rows = read_csv(dir / "certificates.csv");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            const std::size_t k =
                static_cast<std::size_t>(parse_double(row.at(0), "certificates.csv"));
            cert::SearchReport rep;
            rep.tau[0] = parse_double(row.at(2), "certificates.csv");
            rep.tau[1] = parse_double(row.at(3), "certificates.csv");
            rep.tau[2] = parse_double(row.at(4), "certificates.csv");
            rep.margin = parse_double(row.at(5), "certificates.csv");
            rep.feasible = row.at(6) == "1";
            trace.records.at(k).certificate = rep;
        }
    }
    return trace;
}

} // namespace mmta::trace_io
