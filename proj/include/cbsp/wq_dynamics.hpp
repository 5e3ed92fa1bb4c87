#pragma once

#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "json.hpp"

#include "cbsp/hydraulics.hpp"
#include "cbsp/network.hpp"

namespace cbsp {

// Split of one pipe into equal advection cells for a given carrier velocity:
//   segments   n = floor(L / (v dt)), at least 1
//   cell size  dx = L / n
//   courant    lambda = v dt / dx, in (0, 1]; 0 for stagnant pipes (n = 1).
// Throws ValidationError when v dt > L (water would overshoot the pipe).
struct PipeSegmentation {
    int segments = 0;
    double seg_length_m = 0.0;
    double courant = 0.0;
};

PipeSegmentation segmentize(double length_m, double velocity_m_s, double dt_wq_s);

enum class StateKind { Junction, Reservoir, Tank, Pipe, Pump, Valve };

struct WQParams;
struct StateSpace;

struct StateLabel {
    StateKind kind = StateKind::Junction;
    int element = -1;  // node index, or link index for pipe/pump/valve states
    int segment = 0;   // pipe states only; 0-based, counted along the flow
};

// Maps every network element of one hydraulic step to contiguous state
// positions: nodes first (topology order), then links (topology order),
// pipes expanding into their segment chains oriented by current flow.
class StateIndex {
public:
    int size() const { return static_cast<int>(labels_.size()); }
    const StateLabel& label(int pos) const { return labels_[pos]; }
    const std::string& name(int pos) const { return names_[pos]; }
    int node_state(int node) const { return node_state_[node]; }      // -1 if absent
    int link_state_begin(int link) const { return link_state_[link]; }  // -1 if absent
    const PipeSegmentation& pipe_segmentation(int link) const { return seg_[link]; }
    bool pipe_reversed(int link) const { return reversed_[link] != 0; }
    bool in_scope_node(int node) const { return node_state_[node] >= 0; }
    bool in_scope_link(int link) const { return link_state_[link] >= 0; }

    nlohmann::ordered_json to_json() const;

private:
    friend StateSpace build_state_matrix(const NetworkTopology&, const HydraulicProfile&,
                                         const WQParams&, int, int, const std::vector<int>*);
    friend Eigen::VectorXd remap_state(const StateSpace&, const StateSpace&,
                                       const Eigen::VectorXd&);
    std::vector<StateLabel> labels_;
    std::vector<std::string> names_;
    std::vector<int> node_state_;
    std::vector<int> link_state_;
    std::vector<PipeSegmentation> seg_;
    std::vector<char> reversed_;
};

// How a booster's injected concentration is scaled into the update row of
// its host node.
struct BoosterConfig {
    enum class Scaling {
        Auto,   // q_B = max(fraction * local throughput, floor)
        Fixed,  // q_B given explicitly
        Unit,   // the input column entry itself is 1
    };
    Scaling scaling = Scaling::Auto;
    double flow_m3s = 0.0;        // Fixed only
    double floor_m3s = 1e-6;      // Auto only
    double auto_fraction = 0.01;  // Auto only
};

struct WQParams {
    double dt_wq_s = 10.0;
    BoosterConfig booster;
};

// A boundary import column for district sub-models: water arriving over a
// cut link, treated as an always-on external input at the receiving row.
struct ExogenousInput {
    LinkId link;
    int row = -1;
    double coefficient = 0.0;
};

// One hydraulic step's concentration update x(t + dt) = A x(t) + B u(t),
// with one candidate input column available per in-scope node.
struct StateSpace {
    Eigen::SparseMatrix<double> A;
    StateIndex index;
    double dt_wq_s = 0.0;
    int hydraulic_step = -1;
    std::vector<double> candidate_entry;  // per node index; row is node_state
    std::vector<ExogenousInput> exogenous;

    Eigen::SparseVector<double> candidate_column(int node) const;
    Eigen::MatrixXd input_matrix(const std::vector<int>& nodes,
                                 bool with_exogenous = true) const;
    // Coordinate-format dump of A (row col value per line), for inspection.
    void dump_matrix(std::ostream& out) const;
};

// Builds the update for `step`, evaluating tank volumes at
// `substep * dt_wq` past the step start (0 gives the step's frozen matrix).
// `district` (when non-null) restricts the model to those nodes plus the
// links between them; cut links flowing inward become exogenous inputs.
StateSpace build_state_matrix(const NetworkTopology& topo, const HydraulicProfile& profile,
                              const WQParams& params, int step, int substep = 0,
                              const std::vector<int>* district = nullptr);

// Carries a concentration vector across a re-segmentation boundary:
// node/pump/valve states copy over, pipe cells resample the piecewise-
// constant profile conservatively, honoring flow-direction flips.
Eigen::VectorXd remap_state(const StateSpace& prev, const StateSpace& next,
                            const Eigen::VectorXd& x_prev);

}  // namespace cbsp
