#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "cbsp/controllability.hpp"
#include "cbsp/hydraulics.hpp"
#include "cbsp/network.hpp"
#include "cbsp/wq_dynamics.hpp"

namespace cbsp {

struct PlacementConfig {
    int n_stations = 1;
    MetricKind metric = MetricKind::Trace;
    std::vector<NodeId> pool;  // empty selects every node
    WQParams wq;
    int jobs = 1;
};

// Greedy result for one hydraulic step.
struct StepPlacement {
    int step = 0;
    double time_s = 0.0;
    std::vector<NodeId> selected;      // in pick order
    std::vector<double> gains;         // marginal metric gain per pick
    std::vector<std::uint8_t> sc_flags;  // structural controllability per prefix
    int dimsrs_final = 0;              // for the full selected set
    int n_states = 0;
    double total_demand_m3s = 0.0;
    double epsilon = 0.0;  // LogDet regularization shared by this step's sets
};

struct PlacementTimeline {
    std::string scenario_id;
    int n_stations = 0;
    double dt_hydraulic_s = 0.0;
    std::vector<StepPlacement> steps;
};

struct GreedyPick {
    NodeId node;
    double gain = 0.0;
    bool sc_after = false;
};

// One greedy pick on a prepared step model, given the stations already in
// place ("already" may include nodes outside the candidate pool; their
// input columns still count toward the baseline).  Ties go to the
// lexicographically smallest node id.
GreedyPick greedy_step(const StateSpace& ss, int horizon, MetricKind metric,
                       const std::vector<NodeId>& pool, const std::vector<NodeId>& already);

// Greedy placement at every hydraulic step of the profile.
PlacementTimeline solve_timeline(const NetworkTopology& topo, const HydraulicProfile& profile,
                                 const PlacementConfig& config);

// Which (scenario, step) cells count as critical for the weighting's last
// addend: an explicit step list, steps whose total demand reaches the given
// per-scenario percentile, or both.
struct CriticalSpec {
    std::vector<int> steps;
    bool peak_demand = false;
    double percentile = 0.90;
};

struct SetWeight {
    std::vector<NodeId> set;  // sorted member ids
    int appearances = 0;
    double term_frequency = 0.0;        // how often this exact set was picked
    double term_controllability = 0.0;  // sc share, or mean dimsrs/n_x
    double term_members = 0.0;          // pooled appearance share of the members
    double term_critical = 0.0;         // 1 when picked at a critical cell
    double weight = 0.0;
};

struct WeightReport {
    std::array<double, 4> mu{1.0, 1.0, 1.0, 0.0};
    bool dimsrs_based = false;
    int scenarios = 0;
    int steps_per_scenario = 0;
    int n_stations = 0;
    std::vector<SetWeight> sets;  // by descending weight
    std::vector<NodeId> winner;
    std::vector<std::pair<NodeId, int>> node_appearances;  // by node id
    nlohmann::ordered_json to_json() const;
};

// Aggregates per-step selections into weighted candidate sets:
//   w(S) = mu1 * appearance share + mu2 * controllability share
//        + mu3 * member appearance share + mu4 * critical indicator.
// The controllability addend is the structural flag's share of this set's
// appearances; the *_by_dimsrs variant uses mean dimsrs / n_x instead.
WeightReport weigh_sets(const std::vector<PlacementTimeline>& timelines,
                        const std::array<double, 4>& mu, const CriticalSpec& critical = {});
WeightReport weigh_sets_by_dimsrs(const std::vector<PlacementTimeline>& timelines,
                                  const std::array<double, 4>& mu,
                                  const CriticalSpec& critical = {});

struct ComparisonRow {
    int step = 0;
    std::string strategy;  // greedy | random | uniform
    long long seed = -1;   // -1 for greedy/uniform
    std::string metric;    // trace | logdet
    double value = 0.0;
    double relative_pct = 0.0;  // against the full candidate pool
};

// Greedy versus seeded random subsets versus the whole pool, per step.
// Values of one step share the same LogDet regularization so the pool is a
// true upper bound.
std::vector<ComparisonRow> compare_strategies(const NetworkTopology& topo,
                                              const HydraulicProfile& profile,
                                              const PlacementConfig& config,
                                              const std::vector<long long>& seeds);

// Independent per-district solves; water crossing into a district over a cut
// link acts as an always-on exogenous input there.  Every node must be
// assigned to exactly one district.
std::map<std::string, PlacementTimeline> partition_solve(
    const NetworkTopology& topo, const HydraulicProfile& profile,
    const std::map<NodeId, std::string>& district_of, const PlacementConfig& config);

struct BackupStep {
    int step = 0;
    double time_s = 0.0;
    NodeId node;
    double gain = 0.0;
};

struct BackupReport {
    NodeId failed;
    double t_fail_s = 0.0;
    double horizon_s = 0.0;
    std::vector<BackupStep> steps;
    NodeId most_frequent;  // empty when no step falls in the window
};

// Best single replacement for a failed station over the steps whose start
// lies in [t_fail, t_fail + horizon): the surviving stations stay fixed and
// the candidate pool excludes every originally fixed station.
BackupReport backup_replacement(const NetworkTopology& topo, const HydraulicProfile& profile,
                                const PlacementConfig& config,
                                const std::vector<NodeId>& fixed, const NodeId& failed,
                                double t_fail_s, double horizon_s);

}  // namespace cbsp
