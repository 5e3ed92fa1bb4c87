#include "cbsp/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "cbsp/errors.hpp"
#include "cbsp/util.hpp"
#include "cbsp/wq_dynamics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace cbsp {

namespace {

const char* kKnownKeys[] = {
    "topology",       "scenarios",        "output_dir",       "dt_wq_s",
    "dt_hydraulic_s", "n_stations",       "metric",           "pool_include",
    "pool_exclude",   "mu",               "weighting",        "critical_steps",
    "critical_rule",  "critical_percentile", "seeds",         "booster_scaling",
    "booster_flow_m3s", "booster_floor_m3s", "partition",     "jobs",
    "mass_balance_tol", "backup",
};

[[noreturn]] void bad_key(const std::string& key, const char* expected) {
    throw ValidationError("config key '" + key + "' must be " + expected);
}

double as_number(const json& j, const std::string& key) {
    if (!j.is_number()) bad_key(key, "a number");
    return j.get<double>();
}

int as_int(const json& j, const std::string& key) {
    if (!j.is_number_integer()) bad_key(key, "an integer");
    return j.get<int>();
}

std::string as_string(const json& j, const std::string& key) {
    if (!j.is_string()) bad_key(key, "a string");
    return j.get<std::string>();
}

std::vector<std::string> as_string_list(const json& j, const std::string& key) {
    if (!j.is_array()) bad_key(key, "an array of strings");
    std::vector<std::string> out;
    for (const json& v : j) {
        if (!v.is_string()) bad_key(key, "an array of strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

MetricKind to_metric_kind(const std::string& name) {
    if (name == "trace") return MetricKind::Trace;
    if (name == "logdet") return MetricKind::LogDet;
    throw ValidationError("unknown metric '" + name + "' (expected trace or logdet)");
}

int effective_jobs(int configured) {
    if (configured > 0) return configured;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Pool = explicit include list (or every node), minus the exclusions.
PlacementConfig make_placement(const RunConfig& cfg, const NetworkTopology& topo,
                               MetricKind kind) {
    PlacementConfig pc;
    pc.n_stations = cfg.n_stations;
    pc.metric = kind;
    pc.wq = cfg.wq_params();
    pc.jobs = effective_jobs(cfg.jobs);
    if (cfg.n_stations < 1) throw ValidationError("n_stations must be at least 1");

    std::vector<NodeId> pool = cfg.pool_include;
    if (pool.empty())
        for (const Node& n : topo.nodes()) pool.push_back(n.id);
    for (const NodeId& ex : cfg.pool_exclude) {
        if (topo.node_index(ex) < 0)
            throw ValidationError("pool exclusion '" + ex + "' is not a node");
        pool.erase(std::remove(pool.begin(), pool.end(), ex), pool.end());
    }
    if (pool.empty()) throw ValidationError("candidate pool is empty");
    pc.pool = std::move(pool);
    return pc;
}

fs::path output_file(const RunConfig& cfg, const std::string& name) {
    fs::path dir = cfg.output_dir.empty() ? fs::path(".") : fs::path(cfg.output_dir);
    fs::create_directories(dir);
    return dir / name;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw Error("cannot write '" + p.string() + "'");
    return f;
}

void common_header(std::ostream& out, const char* what, const std::string& hash) {
    out << "# " << kToolName << " " << kToolVersion << " " << what << "\n";
    out << "# config " << hash << "\n";
}

// District map file: { "districts": { "name": ["J1", ...], ... } }
std::map<NodeId, std::string> load_districts(const std::string& path,
                                             const NetworkTopology& topo) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open district map '" + path + "'");
    json j;
    try {
        j = json::parse(f, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("district map: ") + e.what());
    }
    if (!j.is_object() || !j.contains("districts") || !j["districts"].is_object())
        throw ValidationError("district map needs a top-level 'districts' object");
    std::map<NodeId, std::string> district_of;
    for (const auto& [name, members] : j["districts"].items()) {
        for (const NodeId& id : as_string_list(members, "districts." + name)) {
            if (topo.node_index(id) < 0)
                throw ValidationError("district '" + name + "' lists unknown node '" + id +
                                      "'");
            if (!district_of.emplace(id, name).second)
                throw ValidationError("node '" + id + "' appears in more than one district");
        }
    }
    return district_of;
}

CriticalSpec critical_spec(const RunConfig& cfg) {
    if (!cfg.critical_rule.empty() && cfg.critical_rule != "peak-demand")
        throw ValidationError("unknown critical_rule '" + cfg.critical_rule +
                              "' (expected peak-demand)");
    CriticalSpec spec;
    spec.steps = cfg.critical_steps;
    spec.peak_demand = cfg.critical_rule == "peak-demand";
    spec.percentile = cfg.critical_percentile;
    return spec;
}

std::string join(const std::vector<NodeId>& ids) {
    std::string s;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) s += ' ';
        s += ids[i];
    }
    return s;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("run config must be a JSON object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : kKnownKeys) known = known || item.key() == k;
        if (!known) throw ValidationError("unknown config key '" + item.key() + "'");
    }

    RunConfig c;
    if (j.contains("topology")) c.topology = as_string(j["topology"], "topology");
    if (j.contains("scenarios")) {
        if (!j["scenarios"].is_array()) bad_key("scenarios", "an array");
        for (const json& s : j["scenarios"]) {
            if (!s.is_object() || !s.contains("id") || !s.contains("hydraulics"))
                bad_key("scenarios", "an array of {id, hydraulics} objects");
            c.scenarios.push_back({as_string(s["id"], "scenarios.id"),
                                   as_string(s["hydraulics"], "scenarios.hydraulics")});
        }
    }
    if (j.contains("output_dir")) c.output_dir = as_string(j["output_dir"], "output_dir");
    if (j.contains("dt_wq_s")) c.dt_wq_s = as_number(j["dt_wq_s"], "dt_wq_s");
    if (j.contains("dt_hydraulic_s"))
        c.dt_hydraulic_s = as_number(j["dt_hydraulic_s"], "dt_hydraulic_s");
    if (j.contains("n_stations")) c.n_stations = as_int(j["n_stations"], "n_stations");
    if (j.contains("metric")) c.metric = as_string(j["metric"], "metric");
    if (j.contains("pool_include"))
        c.pool_include = as_string_list(j["pool_include"], "pool_include");
    if (j.contains("pool_exclude"))
        c.pool_exclude = as_string_list(j["pool_exclude"], "pool_exclude");
    if (j.contains("mu")) {
        if (!j["mu"].is_array() || j["mu"].size() != 4) bad_key("mu", "an array of 4 numbers");
        for (int i = 0; i < 4; ++i) c.mu[i] = as_number(j["mu"][i], "mu");
    }
    if (j.contains("weighting")) c.weighting = as_string(j["weighting"], "weighting");
    if (j.contains("critical_steps")) {
        if (!j["critical_steps"].is_array()) bad_key("critical_steps", "an array of integers");
        for (const json& v : j["critical_steps"])
            c.critical_steps.push_back(as_int(v, "critical_steps"));
    }
    if (j.contains("critical_rule"))
        c.critical_rule = as_string(j["critical_rule"], "critical_rule");
    if (j.contains("critical_percentile"))
        c.critical_percentile = as_number(j["critical_percentile"], "critical_percentile");
    if (j.contains("seeds")) c.seeds = as_int(j["seeds"], "seeds");
    if (j.contains("booster_scaling"))
        c.booster_scaling = as_string(j["booster_scaling"], "booster_scaling");
    if (j.contains("booster_flow_m3s"))
        c.booster_flow_m3s = as_number(j["booster_flow_m3s"], "booster_flow_m3s");
    if (j.contains("booster_floor_m3s"))
        c.booster_floor_m3s = as_number(j["booster_floor_m3s"], "booster_floor_m3s");
    if (j.contains("partition")) c.partition = as_string(j["partition"], "partition");
    if (j.contains("jobs")) c.jobs = as_int(j["jobs"], "jobs");
    if (j.contains("mass_balance_tol"))
        c.mass_balance_tol = as_number(j["mass_balance_tol"], "mass_balance_tol");
    if (j.contains("backup")) {
        const json& b = j["backup"];
        if (!b.is_object()) bad_key("backup", "an object");
        if (b.contains("fixed")) c.backup.fixed = as_string_list(b["fixed"], "backup.fixed");
        if (b.contains("failed")) c.backup.failed = as_string(b["failed"], "backup.failed");
        if (b.contains("t_fail_s"))
            c.backup.t_fail_s = as_number(b["t_fail_s"], "backup.t_fail_s");
        if (b.contains("horizon_s"))
            c.backup.horizon_s = as_number(b["horizon_s"], "backup.horizon_s");
    }
    return c;
}

ordered_json RunConfig::to_json() const {
    ordered_json j;
    j["topology"] = topology;
    j["scenarios"] = ordered_json::array();
    for (const ScenarioRef& s : scenarios)
        j["scenarios"].push_back({{"id", s.id}, {"hydraulics", s.hydraulics}});
    j["output_dir"] = output_dir;
    j["dt_wq_s"] = dt_wq_s;
    j["dt_hydraulic_s"] = dt_hydraulic_s;
    j["n_stations"] = n_stations;
    j["metric"] = metric;
    j["pool_include"] = pool_include;
    j["pool_exclude"] = pool_exclude;
    j["mu"] = mu;
    j["weighting"] = weighting;
    j["critical_steps"] = critical_steps;
    j["critical_rule"] = critical_rule;
    j["critical_percentile"] = critical_percentile;
    j["seeds"] = seeds;
    j["booster_scaling"] = booster_scaling;
    j["booster_flow_m3s"] = booster_flow_m3s;
    j["booster_floor_m3s"] = booster_floor_m3s;
    j["partition"] = partition;
    j["jobs"] = jobs;
    j["mass_balance_tol"] = mass_balance_tol;
    j["backup"] = {{"fixed", backup.fixed},
                   {"failed", backup.failed},
                   {"t_fail_s", backup.t_fail_s},
                   {"horizon_s", backup.horizon_s}};
    return j;
}

std::string RunConfig::hash() const {
    ordered_json j = to_json();
    j.erase("output_dir");  // neither affects any computed number
    j.erase("jobs");
    return hex64(fnv1a(j.dump()));
}

std::vector<std::string> RunConfig::metric_list() const {
    if (metric == "trace" || metric == "logdet") return {metric};
    if (metric == "both") return {"trace", "logdet"};
    throw ValidationError("unknown metric '" + metric + "' (expected trace, logdet or both)");
}

WQParams RunConfig::wq_params() const {
    if (!(dt_wq_s > 0.0)) throw ValidationError("dt_wq_s must be positive");
    WQParams wq;
    wq.dt_wq_s = dt_wq_s;
    if (booster_scaling == "auto") {
        wq.booster.scaling = BoosterConfig::Scaling::Auto;
        if (!(booster_floor_m3s > 0.0))
            throw ValidationError("booster_floor_m3s must be positive");
        wq.booster.floor_m3s = booster_floor_m3s;
    } else if (booster_scaling == "fixed") {
        wq.booster.scaling = BoosterConfig::Scaling::Fixed;
        if (!(booster_flow_m3s > 0.0))
            throw ValidationError("booster_scaling 'fixed' needs booster_flow_m3s > 0");
        wq.booster.flow_m3s = booster_flow_m3s;
    } else if (booster_scaling == "unit") {
        wq.booster.scaling = BoosterConfig::Scaling::Unit;
    } else {
        throw ValidationError("unknown booster_scaling '" + booster_scaling +
                              "' (expected auto, fixed or unit)");
    }
    return wq;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(f, nullptr, true, true);  // comments allowed
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return RunConfig::from_json(j);
}

LoadedRun load_inputs(const RunConfig& cfg) {
    if (cfg.topology.empty()) throw ValidationError("config needs a topology path");
    if (cfg.scenarios.empty()) throw ValidationError("config needs at least one scenario");
    LoadedRun run;
    run.topo = parse_inp_file(cfg.topology);
    for (const ScenarioRef& s : cfg.scenarios)
        run.profiles.push_back(
            load_profile_file(run.topo, s.hydraulics, s.id, cfg.dt_hydraulic_s));
    ScenarioSet set{&run.topo, run.profiles};
    set.validate();
    return run;
}

std::string timeline_csv_name(const std::string& metric, const std::string& scenario) {
    return "timeline_" + metric + "_" + scenario + ".csv";
}

void write_timeline_csv(std::ostream& out, const PlacementTimeline& tl,
                        const std::string& metric, const std::string& config_hash) {
    common_header(out, "timeline", config_hash);
    out << "# metric " << metric << "\n";
    out << "# scenario " << tl.scenario_id << "\n";
    out << "# dt-hydraulic-s " << num12(tl.dt_hydraulic_s) << "\n";
    if (metric == "logdet")
        out << "# epsilon = 1e-12 * max(trace(W_pool)/n_x, 1e-288), shared within a step\n";
    out << "scenario,step,time_s,rank,node,gain,sc_prefix,dimsrs\n";
    for (const StepPlacement& sp : tl.steps) {
        out << "# step-info step=" << sp.step << " n_x=" << sp.n_states
            << " demand_m3s=" << num12(sp.total_demand_m3s) << " epsilon=" << num12(sp.epsilon)
            << "\n";
        for (size_t r = 0; r < sp.selected.size(); ++r)
            out << tl.scenario_id << ',' << sp.step << ',' << num12(sp.time_s) << ',' << r + 1
                << ',' << sp.selected[r] << ',' << num12(sp.gains[r]) << ','
                << int(sp.sc_flags[r]) << ',' << sp.dimsrs_final << "\n";
    }
}

PlacementTimeline read_timeline_csv(std::istream& in) {
    PlacementTimeline tl;
    StepPlacement cur;
    bool open = false;
    auto flush = [&] {
        if (open) tl.steps.push_back(cur);
        cur = StepPlacement{};
        open = false;
    };
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.rfind("# scenario ", 0) == 0) tl.scenario_id = line.substr(11);
            else if (line.rfind("# dt-hydraulic-s ", 0) == 0)
                tl.dt_hydraulic_s = std::strtod(line.c_str() + 17, nullptr);
            else if (line.rfind("# step-info ", 0) == 0) {
                flush();
                if (std::sscanf(line.c_str(), "# step-info step=%d n_x=%d demand_m3s=%lf epsilon=%lf",
                                &cur.step, &cur.n_states, &cur.total_demand_m3s,
                                &cur.epsilon) != 4)
                    throw ParseError("malformed step-info line", line_no);
                open = true;
            }
            continue;
        }
        if (line.rfind("scenario,", 0) == 0) continue;  // column header
        std::vector<std::string> cell;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');) cell.push_back(c);
        if (cell.size() != 8) throw ParseError("expected 8 columns in a timeline row", line_no);
        if (!open) throw ParseError("timeline row before any step-info line", line_no);
        if (std::stoi(cell[1]) != cur.step)
            throw ParseError("timeline row does not match its step-info header", line_no);
        cur.time_s = std::strtod(cell[2].c_str(), nullptr);
        cur.selected.push_back(cell[4]);
        cur.gains.push_back(std::strtod(cell[5].c_str(), nullptr));
        cur.sc_flags.push_back(cell[6] == "1");
        cur.dimsrs_final = std::stoi(cell[7]);
        if (static_cast<int>(cur.selected.size()) != std::stoi(cell[3]))
            throw ParseError("timeline ranks are out of order", line_no);
    }
    flush();
    for (const StepPlacement& sp : tl.steps)
        tl.n_stations = std::max(tl.n_stations, static_cast<int>(sp.selected.size()));
    return tl;
}

void cmd_validate(const RunConfig& cfg, std::ostream& out) {
    LoadedRun run = load_inputs(cfg);
    for (const std::string& w : run.topo.warnings) out << "warning: " << w << "\n";
    TopologyCounts c = run.topo.counts();
    out << "topology: " << c.junctions << " junctions, " << c.reservoirs << " reservoirs, "
        << c.tanks << " tanks, " << c.pipes << " pipes, " << c.pumps << " pumps, " << c.valves
        << " valves\n";

    WQParams wq = cfg.wq_params();
    for (const HydraulicProfile& p : run.profiles) {
        MassBalanceReport mb = validate_mass_balance(run.topo, p, cfg.mass_balance_tol);
        if (!mb.passed()) {
            size_t shown = std::min<size_t>(mb.violations.size(), 10);
            for (size_t i = 0; i < shown; ++i) {
                const MassBalanceViolation& v = mb.violations[i];
                out << "scenario " << p.scenario_id << " step " << v.step << " t="
                    << num12(v.time_s) << " s junction " << v.junction << " residual "
                    << num12(v.residual) << "\n";
            }
            throw ValidationError("scenario '" + p.scenario_id + "': flow continuity fails at " +
                                  std::to_string(mb.violations.size()) + " junction-step(s)");
        }
        int nx_min = 0, nx_max = 0;
        for (int step = 0; step < p.step_count(); ++step) {
            StateSpace ss = build_state_matrix(run.topo, p, wq, step);
            if (step == 0)
                nx_min = nx_max = ss.index.size();
            else {
                nx_min = std::min(nx_min, ss.index.size());
                nx_max = std::max(nx_max, ss.index.size());
            }
        }
        out << "scenario " << p.scenario_id << ": " << p.step_count() << " steps, dt "
            << num12(p.dt_hydraulic_s) << " s, states " << nx_min << ".." << nx_max
            << ", mass balance ok\n";
    }
    out << "ok\n";
}

void cmd_place(const RunConfig& cfg, std::ostream& out) {
    LoadedRun run = load_inputs(cfg);
    std::map<NodeId, std::string> district_of;
    if (!cfg.partition.empty()) district_of = load_districts(cfg.partition, run.topo);
    const std::string hash = cfg.hash();

    for (const std::string& metric_name : cfg.metric_list()) {
        PlacementConfig pc = make_placement(cfg, run.topo, to_metric_kind(metric_name));
        for (const HydraulicProfile& p : run.profiles) {
            if (district_of.empty()) {
                PlacementTimeline tl = solve_timeline(run.topo, p, pc);
                fs::path path =
                    output_file(cfg, timeline_csv_name(metric_name, p.scenario_id));
                std::ofstream f = open_out(path);
                write_timeline_csv(f, tl, metric_name, hash);
                out << "wrote " << path.string() << " (" << tl.steps.size() << " steps, "
                    << tl.n_stations << " stations)\n";
            } else {
                std::map<std::string, PlacementTimeline> per =
                    partition_solve(run.topo, p, district_of, pc);
                for (const auto& [district, tl] : per) {
                    fs::path path = output_file(
                        cfg, timeline_csv_name(metric_name, p.scenario_id + "_" + district));
                    std::ofstream f = open_out(path);
                    write_timeline_csv(f, tl, metric_name, hash);
                    out << "wrote " << path.string() << " (district " << district << ", "
                        << tl.steps.size() << " steps, " << tl.n_stations << " stations)\n";
                }
            }
        }
    }
}

void cmd_weigh(const RunConfig& cfg, std::ostream& out) {
    if (cfg.weighting != "sc" && cfg.weighting != "dimsrs" && cfg.weighting != "both")
        throw ValidationError("unknown weighting '" + cfg.weighting +
                              "' (expected sc, dimsrs or both)");
    CriticalSpec crit = critical_spec(cfg);
    if (cfg.scenarios.empty()) throw ValidationError("config needs at least one scenario");

    for (const std::string& metric_name : cfg.metric_list()) {
        std::vector<PlacementTimeline> timelines;
        for (const ScenarioRef& s : cfg.scenarios) {
            fs::path path = fs::path(cfg.output_dir.empty() ? "." : cfg.output_dir) /
                            timeline_csv_name(metric_name, s.id);
            std::ifstream f(path);
            if (!f)
                throw ValidationError("missing timeline '" + path.string() +
                                      "'; run the place command first");
            PlacementTimeline tl = read_timeline_csv(f);
            if (tl.scenario_id != s.id)
                throw ValidationError("timeline '" + path.string() +
                                      "' belongs to scenario '" + tl.scenario_id + "'");
            timelines.push_back(std::move(tl));
        }

        ordered_json j;
        j["tool"] = std::string(kToolName) + " " + kToolVersion;
        j["config"] = cfg.hash();
        j["metric"] = metric_name;
        j["mu"] = cfg.mu;
        j["critical"] = {{"steps", cfg.critical_steps},
                         {"rule", cfg.critical_rule},
                         {"percentile", cfg.critical_percentile}};
        std::string winner;
        if (cfg.weighting == "sc" || cfg.weighting == "both") {
            WeightReport r = weigh_sets(timelines, cfg.mu, crit);
            j["sc"] = r.to_json();
            winner = join(r.winner);
        }
        if (cfg.weighting == "dimsrs" || cfg.weighting == "both") {
            WeightReport r = weigh_sets_by_dimsrs(timelines, cfg.mu, crit);
            j["dimsrs"] = r.to_json();
            if (winner.empty()) winner = join(r.winner);
        }

        fs::path path = output_file(cfg, "weights_" + metric_name + ".json");
        std::ofstream f = open_out(path);
        f << j.dump(2) << "\n";
        out << "wrote " << path.string() << " (winner: " << winner << ")\n";
    }
}

void cmd_compare(const RunConfig& cfg, std::ostream& out) {
    if (cfg.seeds < 1) throw ValidationError("seeds must be at least 1");
    LoadedRun run = load_inputs(cfg);
    std::vector<long long> seeds;
    for (int s = 1; s <= cfg.seeds; ++s) seeds.push_back(s);
    const std::string hash = cfg.hash();

    for (const std::string& metric_name : cfg.metric_list()) {
        PlacementConfig pc = make_placement(cfg, run.topo, to_metric_kind(metric_name));
        for (const HydraulicProfile& p : run.profiles) {
            std::vector<ComparisonRow> rows = compare_strategies(run.topo, p, pc, seeds);
            fs::path path = output_file(
                cfg, "comparison_" + metric_name + "_" + p.scenario_id + ".csv");
            std::ofstream f = open_out(path);
            common_header(f, "comparison", hash);
            f << "# scenario " << p.scenario_id << "\n";
            f << "# relative_pct is against the full candidate pool of the same step\n";
            f << "step,strategy,seed,metric,value,relative_pct\n";
            for (const ComparisonRow& r : rows)
                f << r.step << ',' << r.strategy << ',' << r.seed << ',' << r.metric << ','
                  << num12(r.value) << ',' << num12(r.relative_pct) << "\n";
            out << "wrote " << path.string() << " (" << rows.size() << " rows)\n";
        }
    }
}

void cmd_backup(const RunConfig& cfg, std::ostream& out) {
    if (cfg.backup.failed.empty())
        throw ValidationError("backup needs backup.failed, the station that went down");
    if (cfg.backup.fixed.empty())
        throw ValidationError("backup needs backup.fixed, the stations placed beforehand");
    if (std::find(cfg.backup.fixed.begin(), cfg.backup.fixed.end(), cfg.backup.failed) ==
        cfg.backup.fixed.end())
        throw ValidationError("backup.failed must be one of backup.fixed");
    if (!(cfg.backup.horizon_s > 0.0))
        throw ValidationError("backup.horizon_s must be positive");

    LoadedRun run = load_inputs(cfg);
    const std::string hash = cfg.hash();
    for (const std::string& metric_name : cfg.metric_list()) {
        PlacementConfig pc = make_placement(cfg, run.topo, to_metric_kind(metric_name));
        for (const HydraulicProfile& p : run.profiles) {
            BackupReport r =
                backup_replacement(run.topo, p, pc, cfg.backup.fixed, cfg.backup.failed,
                                   cfg.backup.t_fail_s, cfg.backup.horizon_s);
            fs::path path =
                output_file(cfg, "backup_" + metric_name + "_" + p.scenario_id + ".csv");
            std::ofstream f = open_out(path);
            common_header(f, "backup", hash);
            f << "# scenario " << p.scenario_id << "\n";
            f << "# failed " << r.failed << "\n";
            f << "# window " << num12(r.t_fail_s) << " .. " << num12(r.t_fail_s + r.horizon_s)
              << " s\n";
            f << "# most-frequent " << r.most_frequent << "\n";
            f << "step,time_s,replacement,gain\n";
            for (const BackupStep& b : r.steps)
                f << b.step << ',' << num12(b.time_s) << ',' << b.node << ','
                  << num12(b.gain) << "\n";
            out << "wrote " << path.string() << " (replacement: "
                << (r.most_frequent.empty() ? "none" : r.most_frequent) << ")\n";
        }
    }
}

void cmd_summary(const RunConfig& cfg, std::ostream& out) {
    LoadedRun run = load_inputs(cfg);
    WQParams wq = cfg.wq_params();
    TopologyCounts c = run.topo.counts();

    ordered_json j;
    j["tool"] = std::string(kToolName) + " " + kToolVersion;
    j["config"] = cfg.hash();
    j["topology"] = {{"junctions", c.junctions}, {"reservoirs", c.reservoirs},
                     {"tanks", c.tanks},         {"pipes", c.pipes},
                     {"pumps", c.pumps},         {"valves", c.valves},
                     {"bulk_rate_per_s", run.topo.bulk_rate_per_s()},
                     {"weakly_connected", run.topo.weakly_connected()},
                     {"warnings", run.topo.warnings}};
    j["scenarios"] = ordered_json::array();
    for (const HydraulicProfile& p : run.profiles) {
        MassBalanceReport mb = validate_mass_balance(run.topo, p, cfg.mass_balance_tol);
        double worst = 0.0;
        MassBalanceReport all = validate_mass_balance(run.topo, p, 0.0);
        for (const MassBalanceViolation& v : all.violations) worst = std::max(worst, v.residual);
        int nx_min = 0, nx_max = 0;
        for (int step = 0; step < p.step_count(); ++step) {
            int nx = build_state_matrix(run.topo, p, wq, step).index.size();
            if (step == 0)
                nx_min = nx_max = nx;
            else {
                nx_min = std::min(nx_min, nx);
                nx_max = std::max(nx_max, nx);
            }
        }
        j["scenarios"].push_back({{"id", p.scenario_id},
                                  {"steps", p.step_count()},
                                  {"dt_hydraulic_s", p.dt_hydraulic_s},
                                  {"period_s", p.total_period_s()},
                                  {"mass_balance_ok", mb.passed()},
                                  {"worst_residual", worst},
                                  {"states_min", nx_min},
                                  {"states_max", nx_max}});
    }

    fs::path path = output_file(cfg, "summary.json");
    std::ofstream f = open_out(path);
    f << j.dump(2) << "\n";
    out << "wrote " << path.string() << "\n";
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out,
                std::ostream& err) {
    try {
        if (name == "validate") cmd_validate(cfg, out);
        else if (name == "place") cmd_place(cfg, out);
        else if (name == "weigh") cmd_weigh(cfg, out);
        else if (name == "compare") cmd_compare(cfg, out);
        else if (name == "backup") cmd_backup(cfg, out);
        else if (name == "summary") cmd_summary(cfg, out);
        else throw ValidationError("unknown command '" + name + "'");
        return 0;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace cbsp
