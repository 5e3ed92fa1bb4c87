#pragma once

#include <string>
#include <vector>

#include "cbsp/controllability.hpp"

namespace cbsp {

// Zero/nonzero pattern of a system pair (A, B), stored row-wise:
// state_deps[i] holds the states k with A(i,k) != 0, input_deps[i] the
// inputs j with B(i,j) != 0.
struct StructurePair {
    int n_states = 0;
    int n_inputs = 0;
    std::vector<std::vector<int>> state_deps;
    std::vector<std::vector<int>> input_deps;
};

// Entries with |value| <= 1e-300 count as structural zeros.
StructurePair binarize(const SpMat& A, const Eigen::MatrixXd& B);
// Same, for the common case of single-entry input columns: input j touches
// row input_rows[j] only.
StructurePair binarize(const SpMat& A, const std::vector<int>& input_rows);

struct Reachability {
    bool all_reached = false;
    std::vector<int> unreachable;  // state positions, ascending
};

// Which states can be reached from some input along directed influence
// edges (input j -> row i where B(i,j) != 0; state k -> row i where
// A(i,k) != 0).
Reachability input_reachability(const StructurePair& sp);

// Generic (structural) rank of the composite pattern [A B]: maximum
// bipartite matching between rows and the union of state/input columns.
int s_rank(const StructurePair& sp);

// Structural controllability: every state input-reachable and
// s_rank([A B]) = n_states.
bool structurally_controllable(const StructurePair& sp);
bool structurally_controllable(const SpMat& A, const Eigen::MatrixXd& B);

// Generic dimension of the input-reachable subsystem: the matching is
// restricted to reachable rows and to columns of reachable states plus all
// inputs.  Equals n_states exactly when the pair is structurally
// controllable; 0 for B = 0.
int dimsrs(const StructurePair& sp);
int dimsrs(const SpMat& A, const Eigen::MatrixXd& B);

}  // namespace cbsp
