#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"

#include "cbsp/errors.hpp"
#include "cbsp/fixtures.hpp"
#include "cbsp/placement.hpp"
#include "support/oracles.hpp"

using namespace cbsp;

namespace {

WQParams unit_params() {
    WQParams wq;
    wq.booster.scaling = BoosterConfig::Scaling::Unit;
    return wq;
}

struct Loaded {
    NetworkTopology topo;
    HydraulicProfile profile;
};

Loaded three_node() {
    Fixture fx = three_node_fixture();
    NetworkTopology topo = parse_inp_text(fx.inp);
    HydraulicProfile p = load_profile_text(topo, fx.scenarios[0].second, "base");
    return {std::move(topo), std::move(p)};
}

// All-identity toy system: every candidate column is a unit vector, so all
// marginal gains tie and only the id order can decide.
Loaded stagnant_net() {
    NetworkTopology topo = parse_inp_text(
        "[JUNCTIONS]\nJ 10\n[RESERVOIRS]\nA 50\n[TANKS]\nT 20 5 1 50 40\n"
        "[PIPES]\nP1 A J 100 200\nP2 J T 100 200\n[OPTIONS]\nUNITS LPS\n");
    HydraulicProfile p = load_profile_text(
        topo, "time_s,element,kind,value\n0,P1,flow,0\n0,P2,flow,0\n0,T,volume,500\n",
        "still", 3600.0);
    return {std::move(topo), std::move(p)};
}

// Hand-built timeline for the aggregation tests; every step picks `sel[k]`.
PlacementTimeline make_timeline(const std::string& id,
                                const std::vector<std::vector<NodeId>>& sel,
                                const std::vector<double>& demand = {},
                                const std::vector<std::uint8_t>& sc = {},
                                const std::vector<int>& dims = {}, int n_states = 10) {
    PlacementTimeline tl;
    tl.scenario_id = id;
    tl.n_stations = sel.empty() ? 0 : static_cast<int>(sel.front().size());
    tl.dt_hydraulic_s = 3600.0;
    for (size_t k = 0; k < sel.size(); ++k) {
        StepPlacement sp;
        sp.step = static_cast<int>(k);
        sp.time_s = 3600.0 * static_cast<double>(k);
        sp.selected = sel[k];
        sp.gains.assign(sel[k].size(), 1.0);
        sp.sc_flags.assign(sel[k].size(), sc.empty() ? 1 : sc[k]);
        sp.dimsrs_final = dims.empty() ? n_states : dims[k];
        sp.n_states = n_states;
        sp.total_demand_m3s = demand.empty() ? 1.0 : demand[k];
        tl.steps.push_back(std::move(sp));
    }
    return tl;
}

const SetWeight& find_set(const WeightReport& r, std::vector<NodeId> key) {
    std::sort(key.begin(), key.end());
    for (const SetWeight& sw : r.sets)
        if (sw.set == key) return sw;
    REQUIRE(false);
    return r.sets.front();
}

}  // namespace

TEST_CASE("greedy picks match exhaustive search when trace is the score") {
    Loaded net = three_node();
    WQParams wq = unit_params();
    for (int step : {0, 7}) {
        StateSpace ss = build_state_matrix(net.topo, net.profile, wq, step);
        std::vector<NodeId> pool = {"J1", "R1", "TK1"};

        GreedyPick first = greedy_step(ss, 360, MetricKind::Trace, pool, {});
        GreedyPick second = greedy_step(ss, 360, MetricKind::Trace, pool, {first.node});
        std::vector<NodeId> greedy_set = {first.node, second.node};
        std::sort(greedy_set.begin(), greedy_set.end());

        oracle::BestSet best = oracle::exhaustive_best(ss, 360, MetricKind::Trace, pool, 2);
        CHECK(greedy_set == best.set);
        // Trace adds per column, so the greedy total is the optimum exactly.
        CHECK(first.gain + second.gain == doctest::Approx(best.value).epsilon(1e-9));
        CHECK(first.gain >= second.gain);
    }
}

TEST_CASE("ties fall back to the smallest node id") {
    Loaded net = stagnant_net();
    StateSpace ss = build_state_matrix(net.topo, net.profile, unit_params(), 0);
    GreedyPick p = greedy_step(ss, 360, MetricKind::Trace, {}, {});
    CHECK(p.node == "A");
    GreedyPick q = greedy_step(ss, 360, MetricKind::Trace, {}, {"A"});
    CHECK(q.node == "J");
    CHECK(p.gain == doctest::Approx(q.gain));  // identical unit columns

    SUBCASE("taken and unknown candidates are policed") {
        CHECK_THROWS_AS(greedy_step(ss, 360, MetricKind::Trace, {"A"}, {"A"}),
                        ValidationError);
        CHECK_THROWS_WITH_AS(greedy_step(ss, 360, MetricKind::Trace, {"GHOST"}, {}),
                             doctest::Contains("GHOST"), ValidationError);
        CHECK_THROWS_AS(greedy_step(ss, 360, MetricKind::Trace, {"A", "A"}, {}),
                        ValidationError);
    }
}

TEST_CASE("timeline solves every hydraulic step") {
    Loaded net = three_node();
    PlacementConfig cfg;
    cfg.n_stations = 2;
    cfg.wq = unit_params();

    PlacementTimeline tl = solve_timeline(net.topo, net.profile, cfg);
    CHECK(tl.scenario_id == "base");
    CHECK(tl.n_stations == 2);
    REQUIRE(tl.steps.size() == 24);
    for (const StepPlacement& sp : tl.steps) {
        CHECK(sp.selected.size() == 2);
        CHECK(sp.gains.size() == 2);
        CHECK(sp.sc_flags.size() == 2);
        CHECK(sp.gains[0] >= sp.gains[1]);
        CHECK(sp.epsilon > 0.0);  // recorded even when trace ignores it
        CHECK(sp.n_states == (sp.step >= 7 && sp.step < 17 ? 104 : 146));
        CHECK(sp.dimsrs_final > 0);
        CHECK(sp.dimsrs_final <= sp.n_states);
    }

    SUBCASE("log-det runs record their shared regularization") {
        cfg.metric = MetricKind::LogDet;
        cfg.n_stations = 1;
        PlacementTimeline ld = solve_timeline(net.topo, net.profile, cfg);
        for (const StepPlacement& sp : ld.steps) CHECK(sp.epsilon > 0.0);
    }
    SUBCASE("budget must fit the pool") {
        cfg.n_stations = 4;  // only 3 nodes exist
        CHECK_THROWS_AS(solve_timeline(net.topo, net.profile, cfg), ValidationError);
        cfg.n_stations = 0;
        CHECK_THROWS_AS(solve_timeline(net.topo, net.profile, cfg), ValidationError);
    }
    SUBCASE("worker count changes nothing") {
        PlacementConfig par = cfg;
        par.jobs = 8;
        PlacementTimeline a = solve_timeline(net.topo, net.profile, cfg);
        PlacementTimeline b = solve_timeline(net.topo, net.profile, par);
        REQUIRE(a.steps.size() == b.steps.size());
        for (size_t k = 0; k < a.steps.size(); ++k) {
            CHECK(a.steps[k].selected == b.steps[k].selected);
            CHECK(a.steps[k].gains == b.steps[k].gains);
        }
    }
}

TEST_CASE("set weighting aggregates selections") {
    std::vector<NodeId> A = {"A"}, B = {"B"};

    SUBCASE("frequency term crowns the most common set") {
        std::vector<std::vector<NodeId>> sel = {A, A, A, A, A, B, B, B};
        WeightReport r = weigh_sets({make_timeline("s1", sel)}, {1.0, 0.0, 0.0, 0.0});
        CHECK(r.winner == A);
        CHECK(find_set(r, A).term_frequency == doctest::Approx(5.0 / 8.0));
        CHECK(find_set(r, B).term_frequency == doctest::Approx(3.0 / 8.0));
        CHECK(find_set(r, A).appearances == 5);
    }
    SUBCASE("member term pools nodes across sets") {
        std::vector<std::vector<NodeId>> sel = {{"A", "B"}, {"A", "B"}, {"A", "B"},
                                                {"A", "C"}};
        WeightReport r = weigh_sets({make_timeline("s1", sel)}, {0.0, 0.0, 1.0, 0.0});
        // A appears 4 times, B 3, C 1; two stations over four cells.
        CHECK(find_set(r, {"A", "B"}).term_members == doctest::Approx(7.0 / 8.0));
        CHECK(find_set(r, {"A", "C"}).term_members == doctest::Approx(5.0 / 8.0));
        auto counts = r.node_appearances;
        REQUIRE(counts.size() == 3);
        CHECK(counts[0] == std::pair<NodeId, int>("A", 4));
        CHECK(counts[1] == std::pair<NodeId, int>("B", 3));
    }
    SUBCASE("controllability term is the structural share") {
        std::vector<std::vector<NodeId>> sel = {A, A, A, A};
        WeightReport r = weigh_sets({make_timeline("s1", sel, {}, {1, 1, 0, 0})},
                                    {0.0, 1.0, 0.0, 0.0});
        CHECK(find_set(r, A).term_controllability == doctest::Approx(0.5));
    }
    SUBCASE("dimsrs flavor averages the reachable share") {
        std::vector<std::vector<NodeId>> sel = {A, A};
        WeightReport r = weigh_sets_by_dimsrs(
            {make_timeline("s1", sel, {}, {}, {8, 4}, 10)}, {0.0, 1.0, 0.0, 0.0});
        CHECK(r.dimsrs_based);
        CHECK(find_set(r, A).term_controllability == doctest::Approx(0.6));
    }
    SUBCASE("explicit critical steps tag their sets") {
        std::vector<std::vector<NodeId>> sel = {A, B, A, B};
        CriticalSpec crit;
        crit.steps = {1};
        WeightReport r = weigh_sets({make_timeline("s1", sel)}, {0.0, 0.0, 0.0, 1.0}, crit);
        CHECK(find_set(r, B).term_critical == 1.0);
        CHECK(find_set(r, A).term_critical == 0.0);
        CHECK(r.winner == B);
    }
    SUBCASE("peak-demand criticality uses a nearest-rank percentile") {
        std::vector<std::vector<NodeId>> sel;
        std::vector<double> demand;
        for (int k = 0; k < 10; ++k) {
            sel.push_back(k >= 8 ? B : A);
            demand.push_back(1.0 + k);
        }
        CriticalSpec crit;
        crit.peak_demand = true;
        crit.percentile = 0.90;
        WeightReport r =
            weigh_sets({make_timeline("s1", sel, demand)}, {0.0, 0.0, 0.0, 1.0}, crit);
        // rank ceil(0.9 * 10) = 9 -> threshold is the 9th smallest demand
        // (9.0), so only the last two steps are critical; both picked B.
        CHECK(find_set(r, B).term_critical == 1.0);
        CHECK(find_set(r, A).term_critical == 0.0);
    }
    SUBCASE("step order does not matter") {
        std::vector<std::vector<NodeId>> fwd = {A, A, B, A, B};
        std::vector<std::vector<NodeId>> rev(fwd.rbegin(), fwd.rend());
        WeightReport a = weigh_sets({make_timeline("s1", fwd)}, {0.4, 0.3, 0.2, 0.0});
        WeightReport b = weigh_sets({make_timeline("s1", rev)}, {0.4, 0.3, 0.2, 0.0});
        REQUIRE(a.sets.size() == b.sets.size());
        for (size_t i = 0; i < a.sets.size(); ++i) {
            CHECK(a.sets[i].set == b.sets[i].set);
            CHECK(a.sets[i].weight == doctest::Approx(b.sets[i].weight));
        }
        CHECK(a.winner == b.winner);
    }
    SUBCASE("scaling all mu together rescales weights, not the ranking") {
        std::vector<std::vector<NodeId>> sel = {A, A, B, {"C"}, B, A};
        auto tl = make_timeline("s1", sel);
        WeightReport one = weigh_sets({tl}, {0.25, 0.25, 0.25, 0.25});
        WeightReport two = weigh_sets({tl}, {0.5, 0.5, 0.5, 0.5});
        REQUIRE(one.sets.size() == two.sets.size());
        for (size_t i = 0; i < one.sets.size(); ++i) {
            CHECK(one.sets[i].set == two.sets[i].set);
            CHECK(two.sets[i].weight == doctest::Approx(2.0 * one.sets[i].weight));
        }
        CHECK(one.winner == two.winner);
    }
    SUBCASE("inconsistent timelines are rejected") {
        auto t1 = make_timeline("s1", {A, B});
        auto t2 = make_timeline("s2", {A});
        CHECK_THROWS_WITH_AS(weigh_sets({t1, t2}, {1, 0, 0, 0}),
                             doctest::Contains("different step grids"), ValidationError);
        auto t3 = make_timeline("s2", {{"A", "B"}, {"A", "B"}});
        CHECK_THROWS_WITH_AS(weigh_sets({t1, t3}, {1, 0, 0, 0}),
                             doctest::Contains("station budgets"), ValidationError);
        CHECK_THROWS_AS(weigh_sets({}, {1, 0, 0, 0}), ValidationError);
    }
    SUBCASE("report serializes its terms") {
        WeightReport r = weigh_sets({make_timeline("s1", {A, B, A})}, {1, 1, 1, 0});
        nlohmann::ordered_json j = r.to_json();
        CHECK(j["winner"] == std::vector<std::string>{"A"});
        CHECK(j["n_stations"] == 1);
        CHECK(j["sets"].size() == 2);
        CHECK(j["sets"][0]["terms"].contains("frequency"));
        CHECK(j["controllability_term"] == "sc");
    }
}

TEST_CASE("strategy comparison brackets greedy between random and the pool") {
    Loaded net = three_node();
    PlacementConfig cfg;
    cfg.n_stations = 2;
    cfg.wq = unit_params();
    std::vector<long long> seeds = {1, 2, 3};

    std::vector<ComparisonRow> rows = compare_strategies(net.topo, net.profile, cfg, seeds);
    REQUIRE(rows.size() == 24 * (1 + seeds.size() + 1));

    std::map<int, double> greedy_value, uniform_value;
    for (const ComparisonRow& r : rows) {
        if (r.strategy == "greedy") greedy_value[r.step] = r.value;
        if (r.strategy == "uniform") uniform_value[r.step] = r.value;
    }
    for (const ComparisonRow& r : rows) {
        CHECK(r.metric == "trace");
        CHECK(r.relative_pct <= 100.0 + 1e-9);
        if (r.strategy == "random") {
            CHECK(r.value <= greedy_value[r.step] + 1e-9);  // greedy is optimal for trace
            CHECK(r.seed >= 1);
        }
        if (r.strategy == "uniform") CHECK(r.relative_pct == doctest::Approx(100.0));
        CHECK(r.value <= uniform_value[r.step] + 1e-9);
    }

    SUBCASE("identical seeds reproduce identical rows") {
        std::vector<ComparisonRow> again =
            compare_strategies(net.topo, net.profile, cfg, seeds);
        REQUIRE(again.size() == rows.size());
        for (size_t i = 0; i < rows.size(); ++i) {
            CHECK(rows[i].strategy == again[i].strategy);
            CHECK(rows[i].value == again[i].value);
            CHECK(rows[i].seed == again[i].seed);
        }
    }
}

TEST_CASE("district solves mirror the whole-network solve when trivial") {
    Loaded net = three_node();
    PlacementConfig cfg;
    cfg.n_stations = 2;
    cfg.wq = unit_params();

    std::map<NodeId, std::string> everyone = {
        {"J1", "all"}, {"R1", "all"}, {"TK1", "all"}};
    auto by_district = partition_solve(net.topo, net.profile, everyone, cfg);
    REQUIRE(by_district.size() == 1);
    const PlacementTimeline& part = by_district.at("all");
    PlacementTimeline whole = solve_timeline(net.topo, net.profile, cfg);
    CHECK(part.scenario_id == "base/all");
    REQUIRE(part.steps.size() == whole.steps.size());
    for (size_t k = 0; k < whole.steps.size(); ++k) {
        CHECK(part.steps[k].selected == whole.steps[k].selected);
        CHECK(part.steps[k].gains == whole.steps[k].gains);
    }
}

TEST_CASE("district budgets clamp to the district size") {
    Loaded net = three_node();
    PlacementConfig cfg;
    cfg.n_stations = 2;
    cfg.wq = unit_params();

    std::map<NodeId, std::string> split = {
        {"R1", "west"}, {"J1", "east"}, {"TK1", "east"}};
    auto result = partition_solve(net.topo, net.profile, split, cfg);
    REQUIRE(result.size() == 2);
    CHECK(result.at("west").steps.front().selected == std::vector<NodeId>{"R1"});
    CHECK(result.at("east").steps.front().selected.size() == 2);
    // The east district imports pump water while filling; its picks stay
    // inside the district regardless.
    for (const StepPlacement& sp : result.at("east").steps)
        for (const NodeId& id : sp.selected) CHECK(id != "R1");

    SUBCASE("partition must cover every node exactly") {
        std::map<NodeId, std::string> missing = {{"R1", "west"}, {"J1", "east"}};
        CHECK_THROWS_WITH_AS(partition_solve(net.topo, net.profile, missing, cfg),
                             doctest::Contains("TK1"), ValidationError);
        std::map<NodeId, std::string> unknown = {
            {"R1", "west"}, {"J1", "east"}, {"TK1", "east"}, {"GHOST", "east"}};
        CHECK_THROWS_WITH_AS(partition_solve(net.topo, net.profile, unknown, cfg),
                             doctest::Contains("GHOST"), ValidationError);
    }
}

TEST_CASE("backup replacement re-picks inside the failure window") {
    Loaded net = three_node();
    PlacementConfig cfg;
    cfg.n_stations = 1;
    cfg.wq = unit_params();
    std::vector<NodeId> fixed = {"R1", "TK1"};

    SUBCASE("window selects the steps and the candidates exclude the fixed") {
        BackupReport r =
            backup_replacement(net.topo, net.profile, cfg, fixed, "TK1", 0.0, 7200.0);
        REQUIRE(r.steps.size() == 2);
        CHECK(r.steps[0].step == 0);
        CHECK(r.steps[1].step == 1);
        CHECK(r.steps[0].node == "J1");  // the only non-fixed node
        CHECK(r.most_frequent == "J1");
        CHECK(r.steps[0].gain > 0.0);
        CHECK(r.failed == "TK1");
    }
    SUBCASE("half-open window boundaries") {
        BackupReport r =
            backup_replacement(net.topo, net.profile, cfg, fixed, "TK1", 3600.0, 3600.0);
        REQUIRE(r.steps.size() == 1);
        CHECK(r.steps[0].step == 1);
    }
    SUBCASE("empty window leaves no recommendation") {
        BackupReport r =
            backup_replacement(net.topo, net.profile, cfg, fixed, "TK1", 9e6, 3600.0);
        CHECK(r.steps.empty());
        CHECK(r.most_frequent.empty());
    }
    SUBCASE("validation") {
        CHECK_THROWS_WITH_AS(
            backup_replacement(net.topo, net.profile, cfg, fixed, "J1", 0.0, 3600.0),
            doctest::Contains("not among the fixed"), ValidationError);
        CHECK_THROWS_AS(
            backup_replacement(net.topo, net.profile, cfg, fixed, "TK1", 0.0, -1.0),
            ValidationError);
        CHECK_THROWS_AS(backup_replacement(net.topo, net.profile, cfg, {"R1", "GHOST"},
                                           "GHOST", 0.0, 3600.0),
                        ValidationError);
        // Every node fixed: nothing left to propose.
        CHECK_THROWS_AS(backup_replacement(net.topo, net.profile, cfg,
                                           {"R1", "TK1", "J1"}, "TK1", 0.0, 3600.0),
                        ValidationError);
    }
}
