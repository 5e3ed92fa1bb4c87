#pragma once

#include <string>
#include <utility>
#include <vector>

namespace cbsp {

// Self-contained test networks with matching hydraulic traces.  All of them
// are generated, never hand-edited, so the numbers in the CSV text are
// bit-exact against the construction formulas (flows are printed with 17
// significant digits and volumes follow v(k+1) = v(k) + net * dt).
struct Fixture {
    std::string name;
    std::string inp;
    // scenario id -> hydraulics CSV text
    std::vector<std::pair<std::string, std::string>> scenarios;
};

// Reservoir -> pump -> junction -> 1 km pipe -> tank.  Ten filling hours
// (07:00-17:00, pipe at 1 m/s) and fourteen draining hours (pump off, pipe
// reversed at 0.7 m/s).
Fixture three_node_fixture();

// Variants of the three-node trace that must fail validation: one with a
// step whose velocity crosses the whole pipe, one with a junction imbalance.
std::string three_node_overshoot_csv();
std::string three_node_unbalanced_csv();

// Closed tank -> pipe -> junction -> pipe -> tank loop with steady
// circulation, zero demand and zero decay: the mass-conservation testbed.
Fixture ring_fixture();

// Nine junctions, a reservoir behind a pump, and a tank on a side branch;
// four scenarios with different demand patterns, filling windows and
// draining routes, so pipes see different flow-direction sequences.
Fixture net1_like_fixture();

// A 30-junction supply chain sized to roughly a thousand states, with a
// steady 24 h trace; exercises throughput, not physics.
Fixture scale_fixture();

// Parse-level networks (no traces) with fixed element counts:
//   36/1/0 junction/reservoir/tank, 58 pipes;
std::string fos_like_inp();
//   90/2/3, 114 pipes, 2 pumps;
std::string net3_like_inp();
//   388/1/7, 429 pipes, 11 pumps, 4 valves.
std::string ctown_like_inp();

}  // namespace cbsp
