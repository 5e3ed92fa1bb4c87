#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "cbsp/network.hpp"

namespace cbsp {

// One hydraulic step's worth of operating state.  Flows are signed against
// the declared link direction; all units are SI (m^3/s, m/s, m^3).
struct HydraulicSnapshot {
    double time_s = 0.0;
    std::vector<double> link_flow_m3s;        // per link
    std::vector<double> pipe_velocity_m_s;    // per link, 0 for pumps/valves
    std::vector<double> junction_demand_m3s;  // per node, 0 for non-junctions
    std::vector<double> tank_volume_m3;       // per node, 0 for non-tanks
};

class HydraulicProfile {
public:
    std::string scenario_id;
    double dt_hydraulic_s = 0.0;
    std::vector<HydraulicSnapshot> snapshots;

    int step_count() const { return static_cast<int>(snapshots.size()); }
    double total_period_s() const { return step_count() * dt_hydraulic_s; }
    const HydraulicSnapshot& snapshot(int step) const { return snapshots.at(step); }

    // Tank volume at an arbitrary time in [0, total period]: linear between
    // bounding snapshots; inside the final step the snapshot's net tank
    // inflow extends the line.
    double tank_volume_at(const NetworkTopology& topo, int tank_node, double t_s) const;
};

struct MassBalanceViolation {
    int step = 0;
    double time_s = 0.0;
    NodeId junction;
    double residual = 0.0;
};

struct MassBalanceReport {
    double tol_rel = 0.0;
    std::vector<MassBalanceViolation> violations;
    bool passed() const { return violations.empty(); }
    nlohmann::ordered_json to_json() const;
};

// Long-format records, one row per (time, element, quantity):
//   time_s,element,kind,value     with kind in {flow, demand, volume}.
// Pipes must have a flow at every timestamp; junction demands default to 0;
// tanks must have volumes.  Pipe velocities are derived as |q| / (pi r^2).
// `expected_dt_s` (when > 0) is checked against the timestamp spacing and is
// required if the trace holds a single snapshot.
HydraulicProfile load_profile(const NetworkTopology& topo, std::istream& csv,
                              std::string scenario_id, double expected_dt_s = 0.0);
HydraulicProfile load_profile_text(const NetworkTopology& topo, const std::string& csv,
                                   std::string scenario_id, double expected_dt_s = 0.0);
HydraulicProfile load_profile_json(const NetworkTopology& topo, const nlohmann::json& records,
                                   std::string scenario_id, double expected_dt_s = 0.0);
HydraulicProfile load_profile_file(const NetworkTopology& topo, const std::string& path,
                                   std::string scenario_id, double expected_dt_s = 0.0);

// Per-junction flow continuity check:
//   residual = |sum(q_in) - demand - sum(q_out)| / max(1e-9, sum(|q| over incident links))
// evaluated with flows oriented by sign at every step.
MassBalanceReport validate_mass_balance(const NetworkTopology& topo,
                                        const HydraulicProfile& profile,
                                        double tol_rel = 1e-6);

// Scenarios over one topology; all profiles must share the hydraulic step
// and total period, and scenario ids must be unique.
struct ScenarioSet {
    const NetworkTopology* topology = nullptr;
    std::vector<HydraulicProfile> profiles;
    void validate() const;
};

}  // namespace cbsp
