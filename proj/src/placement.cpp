#include "cbsp/placement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <thread>

#include "cbsp/errors.hpp"
#include "cbsp/structural.hpp"

namespace cbsp {

namespace {

int horizon_steps(const HydraulicProfile& profile, const WQParams& params) {
    if (!(params.dt_wq_s > 0.0))
        throw ValidationError("water-quality step must be positive");
    double ratio = profile.dt_hydraulic_s / params.dt_wq_s;
    if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::llround(ratio)) > 1e-9)
        throw ValidationError("water-quality step must evenly divide the hydraulic step");
    return static_cast<int>(std::llround(ratio));
}

// Node-id -> node-index map for the nodes present in a state layout.
std::map<NodeId, int> scope_nodes(const StateIndex& ix) {
    std::map<NodeId, int> m;
    for (int pos = 0; pos < ix.size(); ++pos) {
        const StateLabel& l = ix.label(pos);
        if (l.kind == StateKind::Junction || l.kind == StateKind::Reservoir ||
            l.kind == StateKind::Tank)
            m.emplace(ix.name(pos), l.element);
    }
    return m;
}

// Candidate evaluation for one hydraulic step: cached single-station
// Gramians (or traces), a fixed baseline (exogenous inputs plus stations
// already in place), and one shared LogDet regularization so every set
// evaluated in this step is comparable.
struct StepModel {
    const StateSpace* ss = nullptr;
    MetricKind metric = MetricKind::Trace;
    int horizon = 0;
    int n_x = 0;

    std::vector<NodeId> cand_names;  // sorted ascending
    std::vector<int> cand_nodes;
    std::vector<int> cand_rows;
    std::vector<double> cand_trace;
    std::vector<Eigen::MatrixXd> cand_W;

    double base_trace = 0.0;
    Eigen::MatrixXd base_W;
    std::vector<int> base_rows;  // input rows of `already` + exogenous
    double eps = 0.0;

    double base_value() const {
        if (metric == MetricKind::Trace) return base_trace;
        return logdet_psd(base_W, eps);
    }
    // Metric value of base + the given candidates (indices into cand_*).
    double value(const std::vector<int>& picks) const {
        if (metric == MetricKind::Trace) {
            double v = base_trace;
            for (int c : picks) v += cand_trace[c];
            return v;
        }
        Eigen::MatrixXd W = base_W;
        for (int c : picks) W += cand_W[c];
        return logdet_psd(W, eps);
    }
    // Normalized LogDet (>= 0, zero for an empty Gramian); identity for Trace.
    double normalized(double v) const {
        if (metric == MetricKind::Trace) return v;
        return v - n_x * std::log(eps);
    }
};

StepModel make_model(const StateSpace& ss, MetricKind metric, int horizon,
                     const std::vector<NodeId>& pool, const std::vector<NodeId>& already) {
    StepModel m;
    m.ss = &ss;
    m.metric = metric;
    m.horizon = horizon;
    m.n_x = ss.index.size();

    std::map<NodeId, int> nodes = scope_nodes(ss.index);
    auto resolve = [&](const NodeId& id) {
        auto it = nodes.find(id);
        if (it == nodes.end())
            throw ValidationError("node '" + id + "' is not part of this model");
        return it->second;
    };

    std::set<NodeId> taken(already.begin(), already.end());
    std::vector<NodeId> pool_sorted = pool;
    if (pool_sorted.empty())
        for (const auto& [id, node] : nodes) pool_sorted.push_back(id);
    std::sort(pool_sorted.begin(), pool_sorted.end());
    if (std::adjacent_find(pool_sorted.begin(), pool_sorted.end()) != pool_sorted.end())
        throw ValidationError("candidate pool has duplicate entries");

    const bool want_W = metric == MetricKind::LogDet;
    double total_trace = 0.0;

    // Baseline: exogenous imports plus already-placed stations.
    Eigen::MatrixXd B_base(m.n_x, 0);
    {
        std::vector<int> already_nodes;
        for (const NodeId& id : already) already_nodes.push_back(resolve(id));
        B_base = ss.input_matrix(already_nodes, /*with_exogenous=*/true);
        for (int node : already_nodes) m.base_rows.push_back(ss.index.node_state(node));
        for (const ExogenousInput& e : ss.exogenous) m.base_rows.push_back(e.row);
        std::sort(m.base_rows.begin(), m.base_rows.end());
    }
    if (B_base.cols() > 0) {
        m.base_trace = gramian_trace(ss.A, B_base, horizon);
        if (want_W) m.base_W = gramian(ss.A, B_base, horizon).W;
    }
    if (want_W && m.base_W.size() == 0) m.base_W = Eigen::MatrixXd::Zero(m.n_x, m.n_x);
    total_trace += m.base_trace;

    for (const NodeId& id : pool_sorted) {
        int node = resolve(id);
        if (taken.count(id)) continue;
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m.n_x, 1);
        b(ss.index.node_state(node), 0) = ss.candidate_entry[node];
        double tr = gramian_trace(ss.A, b, horizon);
        m.cand_names.push_back(id);
        m.cand_nodes.push_back(node);
        m.cand_rows.push_back(ss.index.node_state(node));
        m.cand_trace.push_back(tr);
        if (want_W) m.cand_W.push_back(gramian(ss.A, b, horizon).W);
        total_trace += tr;
    }

    LogDetOptions opt;
    m.eps = opt.epsilon_rel *
            std::max(m.n_x > 0 ? total_trace / m.n_x : 0.0, opt.floor);
    return m;
}

struct GreedyRun {
    std::vector<int> order;  // candidate indices in pick order
    std::vector<double> gains;
    std::vector<std::uint8_t> sc_flags;
    double final_value = 0.0;
};

bool prefix_sc(const StepModel& m, const std::vector<int>& picks) {
    std::vector<int> rows = m.base_rows;
    for (int c : picks) rows.push_back(m.cand_rows[c]);
    return structurally_controllable(binarize(m.ss->A, rows));
}

int prefix_dimsrs(const StepModel& m, const std::vector<int>& picks) {
    std::vector<int> rows = m.base_rows;
    for (int c : picks) rows.push_back(m.cand_rows[c]);
    return dimsrs(binarize(m.ss->A, rows));
}

GreedyRun run_greedy(const StepModel& m, int n_picks) {
    if (n_picks > static_cast<int>(m.cand_names.size()))
        throw ValidationError("asked for more stations than there are candidates");
    GreedyRun run;
    double cur = m.base_value();
    std::vector<char> used(m.cand_names.size(), 0);
    std::vector<int> chosen;
    for (int r = 0; r < n_picks; ++r) {
        int best = -1;
        double best_val = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < static_cast<int>(m.cand_names.size()); ++c) {
            if (used[c]) continue;
            chosen.push_back(c);
            double v = m.value(chosen);
            chosen.pop_back();
            // strict '>' keeps the earliest (lexicographically smallest)
            // candidate on ties, since cand_names is sorted
            if (v > best_val) {
                best_val = v;
                best = c;
            }
        }
        // n_picks <= cand_names.size() guarantees an unused candidate exists
        if (best < 0) throw Error("greedy pass found no candidate");
        used[best] = 1;
        chosen.push_back(best);
        run.order.push_back(best);
        run.gains.push_back(best_val - cur);
        cur = best_val;
        run.sc_flags.push_back(prefix_sc(m, chosen) ? 1 : 0);
    }
    run.final_value = cur;
    return run;
}

}  // namespace

GreedyPick greedy_step(const StateSpace& ss, int horizon, MetricKind metric,
                       const std::vector<NodeId>& pool, const std::vector<NodeId>& already) {
    StepModel m = make_model(ss, metric, horizon, pool, already);
    if (m.cand_names.empty())
        throw ValidationError("no remaining candidates to pick from");
    GreedyRun run = run_greedy(m, 1);
    return {m.cand_names[run.order[0]], run.gains[0], run.sc_flags[0] != 0};
}

namespace {

PlacementTimeline solve_impl(const NetworkTopology& topo, const HydraulicProfile& profile,
                             const PlacementConfig& config, const std::vector<int>* district,
                             const std::string& label) {
    int horizon = horizon_steps(profile, config.wq);
    if (config.n_stations < 1) throw ValidationError("station budget must be at least 1");

    PlacementTimeline tl;
    tl.scenario_id = label;
    tl.dt_hydraulic_s = profile.dt_hydraulic_s;
    tl.steps.resize(profile.step_count());

    auto do_step = [&](int k) {
        StateSpace ss = build_state_matrix(topo, profile, config.wq, k, 0, district);
        StepModel m = make_model(ss, config.metric, horizon, config.pool, {});
        // A district can be smaller than the global budget.
        int n_eff = std::min<int>(config.n_stations, m.cand_names.size());
        if (!district && n_eff < config.n_stations)
            throw ValidationError("station budget exceeds the candidate pool");
        if (n_eff < 1)
            throw ValidationError("candidate pool is empty");
        GreedyRun run = run_greedy(m, n_eff);

        StepPlacement& sp = tl.steps[k];
        sp.step = k;
        sp.time_s = profile.snapshot(k).time_s;
        for (size_t r = 0; r < run.order.size(); ++r) {
            sp.selected.push_back(m.cand_names[run.order[r]]);
            sp.gains.push_back(run.gains[r]);
        }
        sp.sc_flags = run.sc_flags;
        std::vector<int> all_picks(run.order.begin(), run.order.end());
        sp.dimsrs_final = prefix_dimsrs(m, all_picks);
        sp.n_states = ss.index.size();
        sp.epsilon = m.eps;
        double demand = 0.0;
        const HydraulicSnapshot& snap = profile.snapshot(k);
        for (int n = 0; n < static_cast<int>(topo.nodes().size()); ++n)
            if (ss.index.in_scope_node(n)) demand += snap.junction_demand_m3s[n];
        sp.total_demand_m3s = demand;
    };

    int jobs = std::clamp(config.jobs, 1, profile.step_count());
    if (jobs <= 1) {
        for (int k = 0; k < profile.step_count(); ++k) do_step(k);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(jobs);
        for (int w = 0; w < jobs; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (int k = next.fetch_add(1); k < profile.step_count();
                         k = next.fetch_add(1))
                        do_step(k);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : workers) t.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    tl.n_stations = tl.steps.empty() ? config.n_stations
                                     : static_cast<int>(tl.steps.front().selected.size());
    return tl;
}

}  // namespace

PlacementTimeline solve_timeline(const NetworkTopology& topo, const HydraulicProfile& profile,
                                 const PlacementConfig& config) {
    return solve_impl(topo, profile, config, nullptr, profile.scenario_id);
}

namespace {

std::set<int> critical_cells(const PlacementTimeline& tl, const CriticalSpec& spec) {
    std::set<int> crit(spec.steps.begin(), spec.steps.end());
    if (spec.peak_demand && !tl.steps.empty()) {
        std::vector<double> demands;
        for (const StepPlacement& sp : tl.steps) demands.push_back(sp.total_demand_m3s);
        std::vector<double> sorted = demands;
        std::sort(sorted.begin(), sorted.end());
        // nearest-rank percentile
        int rank = std::max(1, static_cast<int>(std::ceil(spec.percentile * sorted.size())));
        double threshold = sorted[rank - 1];
        for (size_t k = 0; k < demands.size(); ++k)
            if (demands[k] >= threshold) crit.insert(static_cast<int>(k));
    }
    return crit;
}

WeightReport weigh_common(const std::vector<PlacementTimeline>& timelines,
                          const std::array<double, 4>& mu, const CriticalSpec& critical,
                          bool dimsrs_based) {
    if (timelines.empty()) throw ValidationError("no timelines to weigh");
    const int T = static_cast<int>(timelines.front().steps.size());
    const int n_s = timelines.front().n_stations;
    for (const PlacementTimeline& tl : timelines) {
        if (static_cast<int>(tl.steps.size()) != T)
            throw ValidationError("timelines cover different step grids");
        if (tl.n_stations != n_s)
            throw ValidationError("timelines use different station budgets");
    }
    const int N = static_cast<int>(timelines.size());

    struct Agg {
        int count = 0;
        int sc_count = 0;
        double dimsrs_frac = 0.0;
        bool critical = false;
    };
    std::map<std::vector<NodeId>, Agg> sets;
    std::map<NodeId, int> node_count;

    for (const PlacementTimeline& tl : timelines) {
        std::set<int> crit = critical_cells(tl, critical);
        for (const StepPlacement& sp : tl.steps) {
            std::vector<NodeId> key = sp.selected;
            std::sort(key.begin(), key.end());
            Agg& a = sets[key];
            ++a.count;
            if (!sp.sc_flags.empty() && sp.sc_flags.back()) ++a.sc_count;
            if (sp.n_states > 0)
                a.dimsrs_frac += static_cast<double>(sp.dimsrs_final) / sp.n_states;
            if (crit.count(sp.step)) a.critical = true;
            for (const NodeId& id : sp.selected) ++node_count[id];
        }
    }

    WeightReport report;
    report.mu = mu;
    report.dimsrs_based = dimsrs_based;
    report.scenarios = N;
    report.steps_per_scenario = T;
    report.n_stations = n_s;
    const double cells = static_cast<double>(N) * T;
    for (const auto& [key, a] : sets) {
        SetWeight sw;
        sw.set = key;
        sw.appearances = a.count;
        sw.term_frequency = a.count / cells;
        sw.term_controllability = dimsrs_based
                                      ? a.dimsrs_frac / a.count
                                      : static_cast<double>(a.sc_count) / a.count;
        double members = 0.0;
        for (const NodeId& id : key) members += node_count.at(id);
        sw.term_members = members / (n_s * cells);
        sw.term_critical = a.critical ? 1.0 : 0.0;
        sw.weight = mu[0] * sw.term_frequency + mu[1] * sw.term_controllability +
                    mu[2] * sw.term_members + mu[3] * sw.term_critical;
        report.sets.push_back(std::move(sw));
    }
    std::sort(report.sets.begin(), report.sets.end(), [](const SetWeight& a, const SetWeight& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.term_frequency != b.term_frequency) return a.term_frequency > b.term_frequency;
        return a.set < b.set;
    });
    if (!report.sets.empty()) report.winner = report.sets.front().set;
    for (const auto& [id, c] : node_count) report.node_appearances.emplace_back(id, c);
    return report;
}

}  // namespace

WeightReport weigh_sets(const std::vector<PlacementTimeline>& timelines,
                        const std::array<double, 4>& mu, const CriticalSpec& critical) {
    return weigh_common(timelines, mu, critical, false);
}

WeightReport weigh_sets_by_dimsrs(const std::vector<PlacementTimeline>& timelines,
                                  const std::array<double, 4>& mu,
                                  const CriticalSpec& critical) {
    return weigh_common(timelines, mu, critical, true);
}

nlohmann::ordered_json WeightReport::to_json() const {
    nlohmann::ordered_json j;
    j["mu"] = mu;
    j["controllability_term"] = dimsrs_based ? "dimsrs" : "sc";
    j["scenarios"] = scenarios;
    j["steps_per_scenario"] = steps_per_scenario;
    j["n_stations"] = n_stations;
    j["winner"] = winner;
    j["sets"] = nlohmann::ordered_json::array();
    for (const SetWeight& sw : sets) {
        nlohmann::ordered_json js;
        js["set"] = sw.set;
        js["appearances"] = sw.appearances;
        js["terms"] = {{"frequency", sw.term_frequency},
                       {"controllability", sw.term_controllability},
                       {"members", sw.term_members},
                       {"critical", sw.term_critical}};
        js["weight"] = sw.weight;
        j["sets"].push_back(std::move(js));
    }
    nlohmann::ordered_json appearances;
    for (const auto& [id, c] : node_appearances) appearances[id] = c;
    j["node_appearances"] = std::move(appearances);
    return j;
}

namespace {

// Uniform integer in [0, m) by rejection, stable across platforms.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t m) {
    std::uint64_t threshold = (0 - m) % m;
    std::uint64_t v;
    do {
        v = rng();
    } while (v < threshold);
    return v % m;
}

std::vector<int> sample_k(std::mt19937_64& rng, int n, int k) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k; ++i) {
        int j = i + static_cast<int>(bounded(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

std::vector<ComparisonRow> compare_strategies(const NetworkTopology& topo,
                                              const HydraulicProfile& profile,
                                              const PlacementConfig& config,
                                              const std::vector<long long>& seeds) {
    int horizon = horizon_steps(profile, config.wq);
    const char* metric_name = config.metric == MetricKind::Trace ? "trace" : "logdet";
    std::vector<ComparisonRow> rows;
    for (int k = 0; k < profile.step_count(); ++k) {
        StateSpace ss = build_state_matrix(topo, profile, config.wq, k);
        StepModel m = make_model(ss, config.metric, horizon, config.pool, {});
        int pool_n = static_cast<int>(m.cand_names.size());
        if (config.n_stations > pool_n)
            throw ValidationError("station budget exceeds the candidate pool");

        std::vector<int> all(pool_n);
        std::iota(all.begin(), all.end(), 0);
        double full_value = m.value(all);
        double full_norm = m.normalized(full_value);
        auto relative = [&](double v) {
            double nv = m.normalized(v);
            return full_norm > 0.0 ? 100.0 * nv / full_norm : 100.0;
        };

        GreedyRun greedy = run_greedy(m, config.n_stations);
        rows.push_back({k, "greedy", -1, metric_name, greedy.final_value,
                        relative(greedy.final_value)});
        for (long long seed : seeds) {
            std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
            std::vector<int> picks = sample_k(rng, pool_n, config.n_stations);
            double v = m.value(picks);
            rows.push_back({k, "random", seed, metric_name, v, relative(v)});
        }
        rows.push_back({k, "uniform", -1, metric_name, full_value, relative(full_value)});
    }
    return rows;
}

std::map<std::string, PlacementTimeline> partition_solve(
    const NetworkTopology& topo, const HydraulicProfile& profile,
    const std::map<NodeId, std::string>& district_of, const PlacementConfig& config) {
    std::map<std::string, std::vector<int>> districts;
    for (const auto& [id, district] : district_of) {
        int node = topo.node_index(id);
        if (node < 0) throw ValidationError("partition names unknown node '" + id + "'");
        if (district.empty()) throw ValidationError("node '" + id + "' has an empty district");
        districts[district].push_back(node);
    }
    for (const Node& n : topo.nodes())
        if (!district_of.count(n.id))
            throw ValidationError("node '" + n.id + "' is missing from the partition");
    for (auto& [name, nodes] : districts) std::sort(nodes.begin(), nodes.end());

    std::map<std::string, PlacementTimeline> result;
    for (const auto& [name, nodes] : districts) {
        PlacementConfig local = config;
        // Restrict an explicit pool to this district's nodes.
        if (!local.pool.empty()) {
            std::vector<NodeId> kept;
            for (const NodeId& id : local.pool) {
                int node = topo.node_index(id);
                if (node >= 0 && district_of.at(id) == name) kept.push_back(id);
            }
            local.pool = std::move(kept);
            if (local.pool.empty()) continue;  // no candidates here
        }
        result[name] =
            solve_impl(topo, profile, local, &nodes, profile.scenario_id + "/" + name);
    }
    return result;
}

BackupReport backup_replacement(const NetworkTopology& topo, const HydraulicProfile& profile,
                                const PlacementConfig& config,
                                const std::vector<NodeId>& fixed, const NodeId& failed,
                                double t_fail_s, double horizon_s) {
    if (std::find(fixed.begin(), fixed.end(), failed) == fixed.end())
        throw ValidationError("failed station '" + failed + "' is not among the fixed ones");
    if (horizon_s < 0.0) throw ValidationError("backup horizon must be nonnegative");
    for (const NodeId& id : fixed)
        if (topo.node_index(id) < 0)
            throw ValidationError("fixed station '" + id + "' is not a network node");

    int horizon = horizon_steps(profile, config.wq);
    std::vector<NodeId> already;
    for (const NodeId& id : fixed)
        if (id != failed) already.push_back(id);

    // Candidates: the configured pool minus every originally fixed station.
    std::vector<NodeId> pool = config.pool;
    if (pool.empty())
        for (const Node& n : topo.nodes()) pool.push_back(n.id);
    std::set<NodeId> fixed_set(fixed.begin(), fixed.end());
    std::erase_if(pool, [&](const NodeId& id) { return fixed_set.count(id) > 0; });
    if (pool.empty()) throw ValidationError("no replacement candidates remain");

    BackupReport report;
    report.failed = failed;
    report.t_fail_s = t_fail_s;
    report.horizon_s = horizon_s;

    for (int k = 0; k < profile.step_count(); ++k) {
        double t = profile.snapshot(k).time_s;
        if (t < t_fail_s || t >= t_fail_s + horizon_s) continue;
        StateSpace ss = build_state_matrix(topo, profile, config.wq, k);
        GreedyPick pick = greedy_step(ss, horizon, config.metric, pool, already);
        report.steps.push_back({k, t, pick.node, pick.gain});
    }

    std::map<NodeId, int> counts;
    for (const BackupStep& bs : report.steps) ++counts[bs.node];
    int best = 0;
    for (const auto& [id, c] : counts) {
        if (c > best) {
            best = c;
            report.most_frequent = id;
        }
    }
    return report;
}

}  // namespace cbsp
