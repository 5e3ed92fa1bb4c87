#include <cmath>
#include <string>

#include "doctest.h"

#include "cbsp/errors.hpp"
#include "cbsp/fixtures.hpp"
#include "cbsp/hydraulics.hpp"
#include "cbsp/network.hpp"

using namespace cbsp;

namespace {

// A -> P_in -> J -> P_out -> B, with B a tank so volumes have a home.
const char* kTriad = R"([JUNCTIONS]
J 10

[RESERVOIRS]
A 50

[TANKS]
B 20 5 1 10 12

[PIPES]
P_in  A J 100 200
P_out J B 100 200

[OPTIONS]
UNITS LPS
)";

NetworkTopology triad() { return parse_inp_text(kTriad); }

std::string triad_csv(double q_in, double q_out, double demand, int steps = 2) {
    std::string csv = "time_s,element,kind,value\n";
    double volume = 100.0;
    for (int k = 0; k < steps; ++k) {
        double t = 3600.0 * k;
        csv += std::to_string(t) + ",P_in,flow," + std::to_string(q_in) + "\n";
        csv += std::to_string(t) + ",P_out,flow," + std::to_string(q_out) + "\n";
        csv += std::to_string(t) + ",J,demand," + std::to_string(demand) + "\n";
        csv += std::to_string(t) + ",B,volume," + std::to_string(volume) + "\n";
        volume += q_out * 3600.0;
    }
    return csv;
}

}  // namespace

TEST_CASE("three-node trace loads with derived velocities") {
    NetworkTopology topo = parse_inp_text(three_node_fixture().inp);
    HydraulicProfile p =
        load_profile_text(topo, three_node_fixture().scenarios[0].second, "base");

    CHECK(p.scenario_id == "base");
    CHECK(p.step_count() == 24);
    CHECK(p.dt_hydraulic_s == 3600.0);
    CHECK(p.total_period_s() == 86400.0);

    int p1 = topo.link_index("P1");
    int pu1 = topo.link_index("PU1");
    int j1 = topo.node_index("J1");
    int tk1 = topo.node_index("TK1");

    // The fixture writes flows as velocity * area with the loader's own area
    // expression, so the derived velocities come back exactly.
    CHECK(p.snapshot(7).pipe_velocity_m_s[p1] == 1.0);
    CHECK(p.snapshot(0).pipe_velocity_m_s[p1] == 0.7);
    CHECK(p.snapshot(0).link_flow_m3s[p1] < 0.0);  // draining toward J1
    CHECK(p.snapshot(0).pipe_velocity_m_s[pu1] == 0.0);  // pumps carry no velocity

    CHECK(p.snapshot(0).junction_demand_m3s[j1] > 0.0);
    CHECK(p.snapshot(0).tank_volume_m3[tk1] == 800.0);
}

TEST_CASE("tank volume interpolates between snapshots and extends past the last") {
    NetworkTopology topo = triad();
    int b = topo.node_index("B");

    // 100 -> 130 over the first step; the final step keeps filling at
    // q_out = 0.005 m^3/s by construction of triad_csv.
    HydraulicProfile p = load_profile_text(topo, triad_csv(0.006, 0.005, 0.001), "t");
    REQUIRE(p.step_count() == 2);
    CHECK(p.snapshot(1).tank_volume_m3[b] == doctest::Approx(118.0));

    CHECK(p.tank_volume_at(topo, b, 0.0) == doctest::Approx(100.0));
    CHECK(p.tank_volume_at(topo, b, 1800.0) == doctest::Approx(109.0));
    CHECK(p.tank_volume_at(topo, b, 3600.0) == doctest::Approx(118.0));
    // Inside the final step the net tank inflow extends the line.
    CHECK(p.tank_volume_at(topo, b, 3600.0 + 2000.0) == doctest::Approx(118.0 + 2000 * 0.005));
    CHECK(p.tank_volume_at(topo, b, 7200.0) == doctest::Approx(136.0));

    CHECK_THROWS_AS(p.tank_volume_at(topo, b, -1.0), ValidationError);
    CHECK_THROWS_AS(p.tank_volume_at(topo, b, 7200.0 + 1.0), ValidationError);
    CHECK_THROWS_AS(p.tank_volume_at(topo, topo.node_index("J"), 0.0), ValidationError);
}

TEST_CASE("trace rejections name the offending element and time") {
    NetworkTopology topo = triad();

    SUBCASE("missing header") {
        CHECK_THROWS_WITH_AS(load_profile_text(topo, "t,e,k,v\n0,P_in,flow,1\n", "x"),
                             doctest::Contains("time_s,element,kind,value"), ParseError);
    }
    SUBCASE("unknown link") {
        CHECK_THROWS_WITH_AS(
            load_profile_text(topo, "time_s,element,kind,value\n0,GHOST,flow,1\n", "x",
                              3600.0),
            doctest::Contains("unknown link 'GHOST'"), ParseError);
    }
    SUBCASE("pipe without a flow") {
        std::string csv =
            "time_s,element,kind,value\n0,P_in,flow,0.01\n0,B,volume,100\n";
        CHECK_THROWS_WITH_AS(load_profile_text(topo, csv, "x", 3600.0),
                             doctest::Contains("pipe 'P_out' has no flow"), ValidationError);
    }
    SUBCASE("tank without a volume") {
        std::string csv =
            "time_s,element,kind,value\n0,P_in,flow,0.01\n0,P_out,flow,0.01\n";
        CHECK_THROWS_WITH_AS(load_profile_text(topo, csv, "x", 3600.0),
                             doctest::Contains("tank 'B' has no volume"), ValidationError);
    }
    SUBCASE("negative demand") {
        std::string csv = triad_csv(0.006, 0.005, 0.001) + "3600,J,demand,-0.5\n";
        CHECK_THROWS_WITH_AS(load_profile_text(topo, csv, "x"),
                             doctest::Contains("negative demand at junction 'J'"),
                             ValidationError);
    }
    SUBCASE("nonpositive tank volume") {
        std::string csv =
            "time_s,element,kind,value\n0,P_in,flow,0.01\n0,P_out,flow,0.01\n0,B,volume,0\n";
        CHECK_THROWS_WITH_AS(load_profile_text(topo, csv, "x", 3600.0),
                             doctest::Contains("tank 'B'"), ValidationError);
    }
    SUBCASE("uneven spacing") {
        std::string csv = triad_csv(0.006, 0.005, 0.001) +
                          "5400,P_in,flow,0.006\n5400,P_out,flow,0.005\n5400,B,volume,130\n";
        CHECK_THROWS_WITH_AS(load_profile_text(topo, csv, "x"),
                             doctest::Contains("uniformly spaced"), ValidationError);
    }
    SUBCASE("single snapshot needs an expected step") {
        std::string csv = triad_csv(0.006, 0.005, 0.001, 1);
        CHECK_THROWS_AS(load_profile_text(topo, csv, "x"), ValidationError);
        HydraulicProfile p = load_profile_text(topo, csv, "x", 3600.0);
        CHECK(p.dt_hydraulic_s == 3600.0);
    }
    SUBCASE("expected step disagrees with the trace") {
        CHECK_THROWS_AS(load_profile_text(topo, triad_csv(0.006, 0.005, 0.001), "x", 1800.0),
                        ValidationError);
    }
    SUBCASE("bad record kind") {
        CHECK_THROWS_WITH_AS(
            load_profile_text(topo, "time_s,element,kind,value\n0,P_in,pressure,1\n", "x"),
            doctest::Contains("unknown record kind 'pressure'"), ParseError);
    }
}

TEST_CASE("comments, blank lines and CR line ends are tolerated") {
    NetworkTopology topo = triad();
    std::string csv =
        "# produced by a solver\r\ntime_s,element,kind,value\r\n\r\n"
        "0, P_in, flow, 0.01\r\n0,P_out,flow,0.01\r\n# mid comment\r\n0,B,volume,100\r\n";
    HydraulicProfile p = load_profile_text(topo, csv, "x", 3600.0);
    CHECK(p.step_count() == 1);
    CHECK(p.snapshot(0).link_flow_m3s[topo.link_index("P_in")] == doctest::Approx(0.01));
    // Junction demand was never mentioned: defaults to zero.
    CHECK(p.snapshot(0).junction_demand_m3s[topo.node_index("J")] == 0.0);
}

TEST_CASE("JSON records load the same as CSV") {
    NetworkTopology topo = triad();
    HydraulicProfile a = load_profile_text(topo, triad_csv(0.006, 0.005, 0.001), "s");
    nlohmann::json records = nlohmann::json::array();
    for (int k = 0; k < 2; ++k) {
        double t = 3600.0 * k;
        double volume = k == 0 ? 100.0 : 118.0;
        records.push_back({{"time_s", t}, {"element", "P_in"}, {"kind", "flow"}, {"value", 0.006}});
        records.push_back(
            {{"time_s", t}, {"element", "P_out"}, {"kind", "flow"}, {"value", 0.005}});
        records.push_back({{"time_s", t}, {"element", "J"}, {"kind", "demand"}, {"value", 0.001}});
        records.push_back({{"time_s", t}, {"element", "B"}, {"kind", "volume"}, {"value", volume}});
    }
    HydraulicProfile b = load_profile_json(topo, records, "s");
    REQUIRE(b.step_count() == a.step_count());
    for (int k = 0; k < a.step_count(); ++k) {
        CHECK(b.snapshot(k).link_flow_m3s == a.snapshot(k).link_flow_m3s);
        CHECK(b.snapshot(k).junction_demand_m3s == a.snapshot(k).junction_demand_m3s);
        CHECK(b.snapshot(k).tank_volume_m3[topo.node_index("B")] ==
              doctest::Approx(a.snapshot(k).tank_volume_m3[topo.node_index("B")]));
    }
}

TEST_CASE("flow continuity residuals are relative to incident link flow") {
    NetworkTopology topo = triad();

    SUBCASE("balanced junction passes") {
        HydraulicProfile p = load_profile_text(topo, triad_csv(0.006, 0.005, 0.001), "s");
        CHECK(validate_mass_balance(topo, p).passed());
    }
    SUBCASE("imbalance reported with the worked residual") {
        // in 2.0, out 1.6, demand 0.5: residual = 0.1 / 3.6.
        HydraulicProfile p = load_profile_text(topo, triad_csv(2.0, 1.6, 0.5), "s");
        MassBalanceReport r = validate_mass_balance(topo, p, 1e-6);
        REQUIRE_FALSE(r.passed());
        CHECK(r.violations.size() == 2);  // both steps
        CHECK(r.violations[0].junction == "J");
        CHECK(r.violations[0].residual == doctest::Approx(0.1 / 3.6));
        CHECK(r.violations[1].time_s == 3600.0);

        // A loose tolerance accepts the same trace.
        CHECK(validate_mass_balance(topo, p, 0.05).passed());

        nlohmann::json j = r.to_json();
        CHECK(j["passed"] == false);
        CHECK(j["violations"].size() == 2);
    }
    SUBCASE("flow signs orient the balance") {
        // Reversed P_out still balances when its sign says water arrives at J.
        std::string csv =
            "time_s,element,kind,value\n0,P_in,flow,0.004\n0,P_out,flow,-0.006\n"
            "0,J,demand,0.01\n0,B,volume,100\n";
        HydraulicProfile p = load_profile_text(topo, csv, "s", 3600.0);
        CHECK(validate_mass_balance(topo, p).passed());
    }
}

TEST_CASE("scenario sets demand consistent shape") {
    NetworkTopology topo = triad();
    HydraulicProfile a = load_profile_text(topo, triad_csv(0.006, 0.005, 0.001), "a");
    HydraulicProfile b = load_profile_text(topo, triad_csv(0.007, 0.006, 0.001), "b");

    ScenarioSet ok{&topo, {a, b}};
    CHECK_NOTHROW(ok.validate());

    ScenarioSet dup{&topo, {a, a}};
    CHECK_THROWS_WITH_AS(dup.validate(), doctest::Contains("duplicate scenario id"),
                         ValidationError);

    HydraulicProfile shorter = load_profile_text(topo, triad_csv(0.006, 0.005, 0.001, 1), "c", 3600.0);
    ScenarioSet uneven{&topo, {a, shorter}};
    CHECK_THROWS_AS(uneven.validate(), ValidationError);
}

TEST_CASE("all four looped-network scenarios balance to machine precision") {
    NetworkTopology topo = parse_inp_text(net1_like_fixture().inp);
    for (const auto& [id, csv] : net1_like_fixture().scenarios) {
        HydraulicProfile p = load_profile_text(topo, csv, id);
        MassBalanceReport r = validate_mass_balance(topo, p, 1e-9);
        INFO("scenario ", id);
        CHECK(r.passed());
    }
}
