#include "cbsp/hydraulics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cbsp/errors.hpp"

namespace cbsp {

namespace {

constexpr double kPi = 3.14159265358979323846;

double to_number(const std::string& tok, int line) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw ParseError("malformed number '" + tok + "'", line);
    return v;
}

struct Record {
    double time_s;
    std::string element;
    int kind;  // 0 flow, 1 demand, 2 volume
    double value;
    int line;
};

int kind_code(const std::string& k, int line) {
    if (k == "flow") return 0;
    if (k == "demand") return 1;
    if (k == "volume") return 2;
    throw ParseError("unknown record kind '" + k + "'", line);
}

// Net tank inflow (m^3/s) at one snapshot, from signed link flows.
double tank_net_inflow(const NetworkTopology& topo, const HydraulicSnapshot& s, int node) {
    double net = 0.0;
    for (int li : topo.links_in(node)) net += s.link_flow_m3s[li];
    for (int li : topo.links_out(node)) net -= s.link_flow_m3s[li];
    return net;
}

HydraulicProfile assemble(const NetworkTopology& topo, std::vector<Record> records,
                          std::string scenario_id, double expected_dt_s) {
    std::vector<double> times;
    for (const Record& r : records) times.push_back(r.time_s);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    if (times.empty()) throw ValidationError("hydraulic trace is empty");

    double dt = 0.0;
    if (times.size() >= 2) {
        dt = times[1] - times[0];
        if (!(dt > 0.0)) throw ValidationError("hydraulic timestamps are not increasing");
        for (size_t i = 1; i < times.size(); ++i) {
            double step = times[i] - times[i - 1];
            if (std::abs(step - dt) > 1e-9 * std::max(1.0, dt))
                throw ValidationError("hydraulic timestamps are not uniformly spaced (at t=" +
                                      std::to_string(times[i]) + ")");
        }
        if (expected_dt_s > 0.0 && std::abs(dt - expected_dt_s) > 1e-9 * expected_dt_s)
            throw ValidationError("hydraulic step in trace (" + std::to_string(dt) +
                                  " s) does not match the configured step (" +
                                  std::to_string(expected_dt_s) + " s)");
    } else {
        if (!(expected_dt_s > 0.0))
            throw ValidationError(
                "single-snapshot trace needs an explicit hydraulic step length");
        dt = expected_dt_s;
    }

    std::map<double, int> step_of;
    for (size_t i = 0; i < times.size(); ++i) step_of[times[i]] = static_cast<int>(i);

    HydraulicProfile p;
    p.scenario_id = std::move(scenario_id);
    p.dt_hydraulic_s = dt;
    p.snapshots.resize(times.size());
    const int n_nodes = static_cast<int>(topo.nodes().size());
    const int n_links = static_cast<int>(topo.links().size());
    std::vector<std::vector<char>> have_flow(times.size(), std::vector<char>(n_links, 0));
    std::vector<std::vector<char>> have_vol(times.size(), std::vector<char>(n_nodes, 0));
    for (size_t i = 0; i < times.size(); ++i) {
        HydraulicSnapshot& s = p.snapshots[i];
        s.time_s = times[i];
        s.link_flow_m3s.assign(n_links, 0.0);
        s.pipe_velocity_m_s.assign(n_links, 0.0);
        s.junction_demand_m3s.assign(n_nodes, 0.0);
        s.tank_volume_m3.assign(n_nodes, 0.0);
    }

    for (const Record& r : records) {
        int step = step_of.at(r.time_s);
        HydraulicSnapshot& s = p.snapshots[step];
        if (r.kind == 0) {
            int li = topo.link_index(r.element);
            if (li < 0)
                throw ParseError("flow record for unknown link '" + r.element + "'", r.line);
            s.link_flow_m3s[li] = r.value;
            have_flow[step][li] = 1;
        } else if (r.kind == 1) {
            int ni = topo.node_index(r.element);
            if (ni < 0 || topo.node(ni).kind != NodeKind::Junction)
                throw ParseError("demand record for unknown junction '" + r.element + "'",
                                 r.line);
            if (r.value < 0.0)
                throw ValidationError("negative demand at junction '" + r.element + "'");
            s.junction_demand_m3s[ni] = r.value;
        } else {
            int ni = topo.node_index(r.element);
            if (ni < 0 || topo.node(ni).kind != NodeKind::Tank)
                throw ParseError("volume record for unknown tank '" + r.element + "'", r.line);
            if (!(r.value > 0.0))
                throw ValidationError("nonpositive volume for tank '" + r.element + "'");
            s.tank_volume_m3[ni] = r.value;
            have_vol[step][ni] = 1;
        }
    }

    for (size_t step = 0; step < times.size(); ++step) {
        HydraulicSnapshot& s = p.snapshots[step];
        for (int li = 0; li < n_links; ++li) {
            const Link& l = topo.link(li);
            if (l.kind == LinkKind::Pipe) {
                if (!have_flow[step][li])
                    throw ValidationError("pipe '" + l.id + "' has no flow at t=" +
                                          std::to_string(times[step]) + " s");
                double area = kPi * l.pipe->radius_m * l.pipe->radius_m;
                s.pipe_velocity_m_s[li] = std::abs(s.link_flow_m3s[li]) / area;
            }
        }
        for (int ni = 0; ni < n_nodes; ++ni) {
            if (topo.node(ni).kind == NodeKind::Tank && !have_vol[step][ni])
                throw ValidationError("tank '" + topo.node(ni).id + "' has no volume at t=" +
                                      std::to_string(times[step]) + " s");
        }
    }
    return p;
}

}  // namespace

double HydraulicProfile::tank_volume_at(const NetworkTopology& topo, int tank_node,
                                        double t_s) const {
    if (snapshots.empty()) throw ValidationError("profile has no snapshots");
    if (topo.node(tank_node).kind != NodeKind::Tank)
        throw ValidationError("node '" + topo.node(tank_node).id + "' is not a tank");
    const double t0 = snapshots.front().time_s;
    const double t_end = t0 + total_period_s();
    if (t_s < t0 - 1e-9 || t_s > t_end + 1e-9)
        throw ValidationError("time " + std::to_string(t_s) + " s outside the hydraulic trace");
    t_s = std::clamp(t_s, t0, t_end);
    int k = std::min(static_cast<int>((t_s - t0) / dt_hydraulic_s), step_count() - 1);
    double local = t_s - snapshots[k].time_s;
    if (k + 1 < step_count()) {
        double a = snapshots[k].tank_volume_m3[tank_node];
        double b = snapshots[k + 1].tank_volume_m3[tank_node];
        return a + (b - a) * (local / dt_hydraulic_s);
    }
    // Final step: no bounding snapshot on the right, so extend along the
    // step's net inflow.
    return snapshots[k].tank_volume_m3[tank_node] +
           local * tank_net_inflow(topo, snapshots[k], tank_node);
}

nlohmann::ordered_json MassBalanceReport::to_json() const {
    nlohmann::ordered_json j;
    j["tol_rel"] = tol_rel;
    j["passed"] = passed();
    j["violations"] = nlohmann::ordered_json::array();
    for (const auto& v : violations) {
        j["violations"].push_back({{"step", v.step},
                                   {"time_s", v.time_s},
                                   {"junction", v.junction},
                                   {"residual", v.residual}});
    }
    return j;
}

HydraulicProfile load_profile(const NetworkTopology& topo, std::istream& csv,
                              std::string scenario_id, double expected_dt_s) {
    std::vector<Record> records;
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(csv, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) {
            // trim spaces
            size_t a = cell.find_first_not_of(" \t");
            size_t b = cell.find_last_not_of(" \t");
            cells.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
        }
        if (!saw_header) {
            if (cells.size() < 4 || cells[0] != "time_s" || cells[1] != "element" ||
                cells[2] != "kind" || cells[3] != "value")
                throw ParseError("expected header 'time_s,element,kind,value'", line_no);
            saw_header = true;
            continue;
        }
        if (cells.size() != 4)
            throw ParseError("expected 4 fields, got " + std::to_string(cells.size()), line_no);
        Record r;
        r.time_s = to_number(cells[0], line_no);
        r.element = cells[1];
        r.kind = kind_code(cells[2], line_no);
        r.value = to_number(cells[3], line_no);
        r.line = line_no;
        records.push_back(std::move(r));
    }
    if (!saw_header) throw ParseError("empty hydraulics file");
    return assemble(topo, std::move(records), std::move(scenario_id), expected_dt_s);
}

HydraulicProfile load_profile_text(const NetworkTopology& topo, const std::string& csv,
                                   std::string scenario_id, double expected_dt_s) {
    std::istringstream in(csv);
    return load_profile(topo, in, std::move(scenario_id), expected_dt_s);
}

HydraulicProfile load_profile_json(const NetworkTopology& topo, const nlohmann::json& records,
                                   std::string scenario_id, double expected_dt_s) {
    std::vector<Record> recs;
    for (const auto& jr : records) {
        Record r;
        r.time_s = jr.at("time_s").get<double>();
        r.element = jr.at("element").get<std::string>();
        r.kind = kind_code(jr.at("kind").get<std::string>(), 0);
        r.value = jr.at("value").get<double>();
        r.line = 0;
        recs.push_back(std::move(r));
    }
    return assemble(topo, std::move(recs), std::move(scenario_id), expected_dt_s);
}

HydraulicProfile load_profile_file(const NetworkTopology& topo, const std::string& path,
                                   std::string scenario_id, double expected_dt_s) {
    std::ifstream in(path);
    // Unreadable is an environment problem, not a syntax problem.
    if (!in) throw Error("cannot open '" + path + "'");
    if (path.size() > 5 && path.compare(path.size() - 5, 5, ".json") == 0) {
        nlohmann::json j = nlohmann::json::parse(in);
        return load_profile_json(topo, j, std::move(scenario_id), expected_dt_s);
    }
    return load_profile(topo, in, std::move(scenario_id), expected_dt_s);
}

MassBalanceReport validate_mass_balance(const NetworkTopology& topo,
                                        const HydraulicProfile& profile, double tol_rel) {
    MassBalanceReport report;
    report.tol_rel = tol_rel;
    for (int step = 0; step < profile.step_count(); ++step) {
        const HydraulicSnapshot& s = profile.snapshots[step];
        for (int ni = 0; ni < static_cast<int>(topo.nodes().size()); ++ni) {
            if (topo.node(ni).kind != NodeKind::Junction) continue;
            double in = 0.0, out = 0.0, mag = 0.0;
            for (int li : topo.links_at(ni)) {
                double q = s.link_flow_m3s[li];
                // Flow-sign orientation: a positive flow runs from..to, a
                // negative one the other way.
                bool into = (topo.link(li).to == ni) == (q >= 0.0);
                (into ? in : out) += std::abs(q);
                mag += std::abs(q);
            }
            double residual = std::abs(in - s.junction_demand_m3s[ni] - out) /
                              std::max(1e-9, mag);
            if (residual > tol_rel)
                report.violations.push_back(
                    {step, s.time_s, topo.node(ni).id, residual});
        }
    }
    return report;
}

void ScenarioSet::validate() const {
    if (!topology) throw ValidationError("scenario set has no topology");
    std::set<std::string> ids;
    for (const HydraulicProfile& p : profiles) {
        if (!ids.insert(p.scenario_id).second)
            throw ValidationError("duplicate scenario id '" + p.scenario_id + "'");
        if (p.snapshots.empty())
            throw ValidationError("scenario '" + p.scenario_id + "' is empty");
        if (std::abs(p.dt_hydraulic_s - profiles.front().dt_hydraulic_s) > 1e-9 ||
            p.step_count() != profiles.front().step_count())
            throw ValidationError("scenario '" + p.scenario_id +
                                  "' disagrees on hydraulic step or period");
    }
}

}  // namespace cbsp
