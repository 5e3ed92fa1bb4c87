#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cbsp/hydraulics.hpp"
#include "cbsp/network.hpp"
#include "cbsp/placement.hpp"

namespace cbsp {

struct ScenarioRef {
    std::string id;
    std::string hydraulics;  // CSV or JSON trace path
};

struct BackupSpec {
    std::vector<NodeId> fixed;
    NodeId failed;
    double t_fail_s = 0.0;
    double horizon_s = 3600.0;
};

// Everything one invocation needs, read from a JSON file and optionally
// overridden by command-line flags.  Serializes back canonically so the
// output headers can carry a stable fingerprint of the run.
struct RunConfig {
    std::string topology;  // INP path
    std::vector<ScenarioRef> scenarios;
    std::string output_dir = ".";

    double dt_wq_s = 10.0;
    double dt_hydraulic_s = 0.0;  // 0 = take the spacing from the trace
    int n_stations = 1;
    std::string metric = "trace";  // trace | logdet | both
    std::vector<NodeId> pool_include;  // empty = every node
    std::vector<NodeId> pool_exclude;

    std::array<double, 4> mu{0.25, 0.25, 0.25, 0.25};
    std::string weighting = "sc";  // sc | dimsrs | both
    std::vector<int> critical_steps;
    std::string critical_rule;  // "" | "peak-demand"
    double critical_percentile = 0.90;

    int seeds = 25;  // random-strategy draws per step in `compare`
    std::string booster_scaling = "auto";  // auto | fixed | unit
    double booster_flow_m3s = 0.0;
    double booster_floor_m3s = 1e-6;

    std::string partition;  // district-map JSON path; empty = whole network
    int jobs = 0;           // worker threads; 0 = one per core
    double mass_balance_tol = 1e-6;
    BackupSpec backup;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::ordered_json to_json() const;
    std::string hash() const;  // 16-hex-digit fingerprint of to_json()

    // Resolved single metrics ("both" expands), validated booster/step
    // fields.  Both throw ValidationError on inconsistent settings.
    std::vector<std::string> metric_list() const;
    WQParams wq_params() const;
};

RunConfig load_run_config(const std::string& path);

// Parsed topology plus every scenario's trace, cross-validated as a set.
struct LoadedRun {
    NetworkTopology topo;
    std::vector<HydraulicProfile> profiles;
};
LoadedRun load_inputs(const RunConfig& cfg);

// Subcommand bodies.  They throw (ParseError, ValidationError, ...) instead
// of returning codes; progress lines go to `out`.
void cmd_validate(const RunConfig& cfg, std::ostream& out);
void cmd_place(const RunConfig& cfg, std::ostream& out);
void cmd_weigh(const RunConfig& cfg, std::ostream& out);
void cmd_compare(const RunConfig& cfg, std::ostream& out);
void cmd_backup(const RunConfig& cfg, std::ostream& out);
void cmd_summary(const RunConfig& cfg, std::ostream& out);

// Exit-code contract around the bodies above: 0 success, 1 when the input
// was rejected (parse or validation), 2 for any other failure.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out,
                std::ostream& err);

// Timeline CSVs: written by `place`, read back by `weigh`.
std::string timeline_csv_name(const std::string& metric, const std::string& scenario);
void write_timeline_csv(std::ostream& out, const PlacementTimeline& tl,
                        const std::string& metric, const std::string& config_hash);
PlacementTimeline read_timeline_csv(std::istream& in);

}  // namespace cbsp
