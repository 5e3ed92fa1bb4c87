#include "cbsp/wq_dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cbsp/errors.hpp"
#include "cbsp/util.hpp"

namespace cbsp {

namespace {

// Velocities below this are indistinguishable from stagnation; treating them
// as advecting would blow up the cell count with no physical content.
constexpr double kStagnantVelocity = 1e-8;  // m/s
// Upper bound on cells per pipe; past this the grid only coarsens (lambda
// drops below 1) which keeps the scheme stable and bounded.
constexpr int kMaxSegments = 5000;

const char* kind_name(StateKind k) {
    switch (k) {
        case StateKind::Junction: return "junction";
        case StateKind::Reservoir: return "reservoir";
        case StateKind::Tank: return "tank";
        case StateKind::Pipe: return "pipe";
        case StateKind::Pump: return "pump";
        case StateKind::Valve: return "valve";
    }
    return "?";
}

// First-order loss rate inside a pipe: bulk decay plus the wall/film term.
double pipe_rate(double bulk_per_s, const PipeProps& p) {
    double sum = p.wall_rate_m_per_s + p.mass_transfer_m_per_s;
    double wall = 0.0;
    if (sum > 0.0 && p.radius_m > 0.0)
        wall = 2.0 * p.wall_rate_m_per_s * p.mass_transfer_m_per_s / (p.radius_m * sum);
    return bulk_per_s + wall;
}

}  // namespace

PipeSegmentation segmentize(double length_m, double velocity_m_s, double dt_wq_s) {
    if (!(length_m > 0.0)) throw ValidationError("pipe length must be positive");
    if (!(dt_wq_s > 0.0)) throw ValidationError("water-quality step must be positive");
    if (velocity_m_s < 0.0) throw ValidationError("velocity must be a magnitude");
    PipeSegmentation s;
    if (velocity_m_s < kStagnantVelocity) {
        s.segments = 1;
        s.seg_length_m = length_m;
        s.courant = 0.0;
        return s;
    }
    double travel = velocity_m_s * dt_wq_s;
    if (travel > length_m * (1.0 + 1e-12))
        throw ValidationError("water crosses the whole pipe in one step (v dt = " +
                              std::to_string(travel) + " m > L = " +
                              std::to_string(length_m) + " m)");
    s.segments = std::min(static_cast<int>(length_m / travel), kMaxSegments);
    if (s.segments < 1) s.segments = 1;
    s.seg_length_m = length_m / s.segments;
    s.courant = travel / s.seg_length_m;
    return s;
}

nlohmann::ordered_json StateIndex::to_json() const {
    nlohmann::ordered_json j;
    j["n_states"] = size();
    j["states"] = nlohmann::ordered_json::array();
    for (int i = 0; i < size(); ++i) {
        const StateLabel& l = labels_[i];
        nlohmann::ordered_json js;
        js["pos"] = i;
        js["name"] = names_[i];
        js["kind"] = kind_name(l.kind);
        if (l.kind == StateKind::Pipe) js["segment"] = l.segment;
        j["states"].push_back(std::move(js));
    }
    return j;
}

Eigen::SparseVector<double> StateSpace::candidate_column(int node) const {
    int row = index.node_state(node);
    if (row < 0) throw ValidationError("node is outside this model's scope");
    Eigen::SparseVector<double> b(index.size());
    b.insert(row) = candidate_entry[node];
    return b;
}

Eigen::MatrixXd StateSpace::input_matrix(const std::vector<int>& nodes,
                                         bool with_exogenous) const {
    int n_exo = with_exogenous ? static_cast<int>(exogenous.size()) : 0;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(index.size(), nodes.size() + n_exo);
    for (size_t c = 0; c < nodes.size(); ++c) {
        int row = index.node_state(nodes[c]);
        if (row < 0) throw ValidationError("node is outside this model's scope");
        B(row, c) = candidate_entry[nodes[c]];
    }
    for (int e = 0; e < n_exo; ++e)
        B(exogenous[e].row, nodes.size() + e) += exogenous[e].coefficient;
    return B;
}

void StateSpace::dump_matrix(std::ostream& out) const {
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
            trips.emplace_back(it.row(), it.col(), it.value());
    std::sort(trips.begin(), trips.end(), [](const auto& a, const auto& b) {
        return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
    });
    out << "# " << index.size() << " states, " << trips.size() << " entries\n";
    for (const auto& t : trips)
        out << t.row() << " " << t.col() << " " << num12(t.value()) << "\n";
}

StateSpace build_state_matrix(const NetworkTopology& topo, const HydraulicProfile& profile,
                              const WQParams& params, int step, int substep,
                              const std::vector<int>* district) {
    if (step < 0 || step >= profile.step_count())
        throw ValidationError("hydraulic step index out of range");
    if (!(params.dt_wq_s > 0.0))
        throw ValidationError("water-quality step must be positive");
    const double dt = params.dt_wq_s;
    const double ratio = profile.dt_hydraulic_s / dt;
    if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::llround(ratio)) > 1e-9)
        throw ValidationError("water-quality step must evenly divide the hydraulic step");
    const int substeps = static_cast<int>(std::llround(ratio));
    if (substep < 0 || substep >= substeps)
        throw ValidationError("substep index out of range");

    const HydraulicSnapshot& snap = profile.snapshot(step);
    const int n_nodes = static_cast<int>(topo.nodes().size());
    const int n_links = static_cast<int>(topo.links().size());

    std::vector<char> node_in(n_nodes, 1);
    if (district) {
        node_in.assign(n_nodes, 0);
        for (int n : *district) {
            if (n < 0 || n >= n_nodes) throw ValidationError("district node index out of range");
            node_in[n] = 1;
        }
    }
    std::vector<char> link_in(n_links);
    for (int l = 0; l < n_links; ++l)
        link_in[l] = node_in[topo.link(l).from] && node_in[topo.link(l).to];

    // ---- state layout ------------------------------------------------------
    StateSpace ss;
    ss.dt_wq_s = dt;
    ss.hydraulic_step = step;
    StateIndex& ix = ss.index;
    ix.node_state_.assign(n_nodes, -1);
    ix.link_state_.assign(n_links, -1);
    ix.seg_.assign(n_links, PipeSegmentation{});
    ix.reversed_.assign(n_links, 0);

    auto add_state = [&ix](StateKind kind, int element, int segment, std::string name) {
        ix.labels_.push_back({kind, element, segment});
        ix.names_.push_back(std::move(name));
        return static_cast<int>(ix.labels_.size()) - 1;
    };

    for (int n = 0; n < n_nodes; ++n) {
        if (!node_in[n]) continue;
        StateKind k = StateKind::Junction;
        if (topo.node(n).kind == NodeKind::Reservoir) k = StateKind::Reservoir;
        if (topo.node(n).kind == NodeKind::Tank) k = StateKind::Tank;
        ix.node_state_[n] = add_state(k, n, 0, topo.node(n).id);
    }
    for (int l = 0; l < n_links; ++l) {
        if (!link_in[l]) continue;
        const Link& link = topo.link(l);
        if (link.kind == LinkKind::Pipe) {
            try {
                ix.seg_[l] = segmentize(link.pipe->length_m, snap.pipe_velocity_m_s[l], dt);
            } catch (const ValidationError& e) {
                throw ValidationError("pipe '" + link.id + "' at step " +
                                      std::to_string(step) + ": " + e.what());
            }
            ix.reversed_[l] = snap.link_flow_m3s[l] < 0.0;
            ix.link_state_[l] = static_cast<int>(ix.labels_.size());
            for (int s = 0; s < ix.seg_[l].segments; ++s)
                add_state(StateKind::Pipe, l, s, link.id + "[" + std::to_string(s) + "]");
        } else {
            StateKind k = link.kind == LinkKind::Pump ? StateKind::Pump : StateKind::Valve;
            ix.link_state_[l] = add_state(k, l, 0, link.id);
        }
    }
    const int n_x = ix.size();

    // Flow-oriented endpoints of a link: positive flow runs from->to.
    auto upstream_node = [&](int l) {
        return snap.link_flow_m3s[l] >= 0.0 ? topo.link(l).from : topo.link(l).to;
    };
    auto downstream_node = [&](int l) {
        return snap.link_flow_m3s[l] >= 0.0 ? topo.link(l).to : topo.link(l).from;
    };
    // State that feeds a link's downstream node: last cell of a pipe, the
    // link state itself otherwise.  Only meaningful for in-scope links.
    auto outlet_state = [&](int l) {
        if (topo.link(l).kind == LinkKind::Pipe)
            return ix.link_state_[l] + ix.seg_[l].segments - 1;
        return ix.link_state_[l];
    };

    const double t_sub = snap.time_s + substep * dt;
    const double kb = topo.bulk_rate_per_s();

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(n_x) * 2);
    ss.candidate_entry.assign(n_nodes, 0.0);

    // Booster input entry under the configured scaling; `denom` is the
    // divisor appearing in the host row, `throughput` drives the Auto rule.
    auto booster_entry = [&](double denom, double throughput, bool tank, double v_next) {
        const BoosterConfig& bc = params.booster;
        switch (bc.scaling) {
            case BoosterConfig::Scaling::Unit:
                return 1.0;
            case BoosterConfig::Scaling::Fixed:
                return tank ? bc.flow_m3s * dt / v_next : bc.flow_m3s / denom;
            case BoosterConfig::Scaling::Auto: {
                double qb = std::max(bc.auto_fraction * throughput, bc.floor_m3s);
                return tank ? qb * dt / v_next : qb / denom;
            }
        }
        return 1.0;
    };

    for (int n = 0; n < n_nodes; ++n) {
        int row = ix.node_state_[n];
        if (row < 0) continue;
        const Node& node = topo.node(n);

        double q_in_total = 0.0, q_out_total = 0.0;
        std::vector<std::pair<int, double>> inflows;  // (link, |q|), in-scope or not
        for (int l : topo.links_at(n)) {
            double q = snap.link_flow_m3s[l];
            if (q == 0.0) continue;
            if (downstream_node(l) == n) {
                inflows.emplace_back(l, std::abs(q));
                q_in_total += std::abs(q);
            } else {
                q_out_total += std::abs(q);
            }
        }

        if (node.kind == NodeKind::Reservoir) {
            // A reservoir imposes its own concentration; inflows are ignored.
            trips.emplace_back(row, row, 1.0);
            ss.candidate_entry[n] = 1.0;
            continue;
        }

        if (node.kind == NodeKind::Junction) {
            double denom = snap.junction_demand_m3s[n] + q_out_total;
            if (denom > 0.0) {
                for (auto [l, q] : inflows) {
                    double coeff = q / denom;
                    if (link_in[l])
                        trips.emplace_back(row, outlet_state(l), coeff);
                    else
                        ss.exogenous.push_back({topo.link(l).id, row, coeff});
                }
            } else {
                trips.emplace_back(row, row, 1.0);
            }
            ss.candidate_entry[n] =
                booster_entry(denom > 0.0 ? denom : 1.0,
                              std::max(denom, q_in_total), false, 0.0);
            continue;
        }

        // Tank: volume-weighted mixing with first-order bulk decay.
        double v_now = profile.tank_volume_at(topo, n, t_sub);
        double v_next = profile.tank_volume_at(topo, n, t_sub + dt);
        if (!(v_now > 0.0) || !(v_next > 0.0))
            throw ValidationError("tank '" + node.id + "' has nonpositive volume at step " +
                                  std::to_string(step));
        trips.emplace_back(row, row, (v_now * (1.0 - kb * dt) - q_out_total * dt) / v_next);
        for (auto [l, q] : inflows) {
            double coeff = q * dt / v_next;
            if (link_in[l])
                trips.emplace_back(row, outlet_state(l), coeff);
            else
                ss.exogenous.push_back({topo.link(l).id, row, coeff});
        }
        ss.candidate_entry[n] =
            booster_entry(v_next, std::max(q_in_total, q_out_total), true, v_next);
    }

    for (int l = 0; l < n_links; ++l) {
        int begin = ix.link_state_[l];
        if (begin < 0) continue;
        const Link& link = topo.link(l);
        double q = snap.link_flow_m3s[l];

        if (link.kind != LinkKind::Pipe) {
            // Pumps and valves pass the upstream concentration through; with
            // no flow they hold their last value.
            if (q != 0.0)
                trips.emplace_back(begin, ix.node_state_[upstream_node(l)], 1.0);
            else
                trips.emplace_back(begin, begin, 1.0);
            continue;
        }

        const PipeSegmentation& seg = ix.seg_[l];
        double k_loss = pipe_rate(kb, *link.pipe);
        double self = (1.0 - seg.courant) - dt * k_loss;
        for (int s = 0; s < seg.segments; ++s) {
            trips.emplace_back(begin + s, begin + s, self);
            if (seg.courant > 0.0)
                trips.emplace_back(begin + s,
                                   s == 0 ? ix.node_state_[upstream_node(l)] : begin + s - 1,
                                   seg.courant);
        }
    }

    ss.A.resize(n_x, n_x);
    ss.A.setFromTriplets(trips.begin(), trips.end());
    ss.A.makeCompressed();
    return ss;
}

Eigen::VectorXd remap_state(const StateSpace& prev, const StateSpace& next,
                            const Eigen::VectorXd& x_prev) {
    const StateIndex& pi = prev.index;
    const StateIndex& ni = next.index;
    if (x_prev.size() != pi.size())
        throw ValidationError("state vector does not match the source layout");
    if (pi.node_state_.size() != ni.node_state_.size() ||
        pi.link_state_.size() != ni.link_state_.size())
        throw ValidationError("state layouts belong to different networks");

    Eigen::VectorXd x = Eigen::VectorXd::Zero(ni.size());
    for (size_t n = 0; n < pi.node_state_.size(); ++n) {
        int a = pi.node_state_[n], b = ni.node_state_[n];
        if ((a < 0) != (b < 0))
            throw ValidationError("state layouts cover different node sets");
        if (a >= 0) x[b] = x_prev[a];
    }
    for (size_t l = 0; l < pi.link_state_.size(); ++l) {
        int a = pi.link_state_[l], b = ni.link_state_[l];
        if ((a < 0) != (b < 0))
            throw ValidationError("state layouts cover different link sets");
        if (a < 0) continue;
        int m = pi.seg_[l].segments, n2 = ni.seg_[l].segments;
        if (m == 0) {  // pump or valve: a single carried-over value
            x[b] = x_prev[a];
            continue;
        }
        // Old cell averages in the pipe's declared direction.
        std::vector<double> old_vals(m);
        for (int j = 0; j < m; ++j)
            old_vals[j] = x_prev[a + (pi.pipe_reversed(static_cast<int>(l)) ? m - 1 - j : j)];
        // Conservative resample onto the new uniform grid.
        for (int i = 0; i < n2; ++i) {
            double lo = static_cast<double>(i) / n2, hi = static_cast<double>(i + 1) / n2;
            double acc = 0.0;
            int j0 = std::max(0, static_cast<int>(lo * m));
            for (int j = j0; j < m; ++j) {
                double jlo = static_cast<double>(j) / m, jhi = static_cast<double>(j + 1) / m;
                if (jlo >= hi) break;
                double w = std::min(hi, jhi) - std::max(lo, jlo);
                if (w > 0.0) acc += w * old_vals[j];
            }
            int pos = b + (ni.pipe_reversed(static_cast<int>(l)) ? n2 - 1 - i : i);
            x[pos] = acc * n2;
        }
    }
    return x;
}

}  // namespace cbsp
