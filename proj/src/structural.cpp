#include "cbsp/structural.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "cbsp/errors.hpp"

namespace cbsp {

namespace {

constexpr double kZeroTol = 1e-300;

// Hopcroft-Karp maximum matching.  Left vertices are rows; right vertices
// are columns of the pattern being ranked.  `allow_left` / `allow_right`
// restrict the matching to a subproblem (dimsrs); null means everything.
class Matcher {
public:
    Matcher(int n_left, int n_right) : adj_(n_left), match_l_(n_left, -1), match_r_(n_right, -1) {}

    void add_edge(int l, int r) { adj_[l].push_back(r); }

    int solve() {
        int matched = 0;
        while (bfs()) {
            for (int l = 0; l < static_cast<int>(adj_.size()); ++l)
                if (match_l_[l] < 0 && dfs(l)) ++matched;
        }
        return matched;
    }

private:
    static constexpr int kInf = 1 << 30;

    bool bfs() {
        std::queue<int> q;
        dist_.assign(adj_.size(), kInf);
        for (int l = 0; l < static_cast<int>(adj_.size()); ++l) {
            if (match_l_[l] < 0) {
                dist_[l] = 0;
                q.push(l);
            }
        }
        bool found = false;
        while (!q.empty()) {
            int l = q.front();
            q.pop();
            for (int r : adj_[l]) {
                int l2 = match_r_[r];
                if (l2 < 0) {
                    found = true;
                } else if (dist_[l2] == kInf) {
                    dist_[l2] = dist_[l] + 1;
                    q.push(l2);
                }
            }
        }
        return found;
    }

    bool dfs(int l) {
        for (int r : adj_[l]) {
            int l2 = match_r_[r];
            if (l2 < 0 || (dist_[l2] == dist_[l] + 1 && dfs(l2))) {
                match_l_[l] = r;
                match_r_[r] = l;
                return true;
            }
        }
        dist_[l] = kInf;
        return false;
    }

    std::vector<std::vector<int>> adj_;
    std::vector<int> match_l_, match_r_, dist_;
};

}  // namespace

StructurePair binarize(const SpMat& A, const Eigen::MatrixXd& B) {
    if (A.rows() != A.cols()) throw ValidationError("A must be square");
    if (B.rows() != A.rows()) throw ValidationError("B row count must match A");
    StructurePair sp;
    sp.n_states = static_cast<int>(A.rows());
    sp.n_inputs = static_cast<int>(B.cols());
    sp.state_deps.assign(sp.n_states, {});
    sp.input_deps.assign(sp.n_states, {});
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            if (std::abs(it.value()) > kZeroTol)
                sp.state_deps[it.row()].push_back(static_cast<int>(it.col()));
    for (auto& deps : sp.state_deps) std::sort(deps.begin(), deps.end());
    for (int i = 0; i < sp.n_states; ++i)
        for (int j = 0; j < sp.n_inputs; ++j)
            if (std::abs(B(i, j)) > kZeroTol) sp.input_deps[i].push_back(j);
    return sp;
}

StructurePair binarize(const SpMat& A, const std::vector<int>& input_rows) {
    StructurePair sp = binarize(A, Eigen::MatrixXd::Zero(A.rows(), 0));
    sp.n_inputs = static_cast<int>(input_rows.size());
    for (int j = 0; j < sp.n_inputs; ++j) {
        int row = input_rows[j];
        if (row < 0 || row >= sp.n_states)
            throw ValidationError("input row outside the state space");
        sp.input_deps[row].push_back(j);
    }
    return sp;
}

Reachability input_reachability(const StructurePair& sp) {
    // Influence edges point from column entity to row: seed with rows that
    // see an input, then follow A's pattern transitively.
    std::vector<char> seen(sp.n_states, 0);
    std::queue<int> q;
    for (int i = 0; i < sp.n_states; ++i) {
        if (!sp.input_deps[i].empty()) {
            seen[i] = 1;
            q.push(i);
        }
    }
    // Forward edges state k -> rows i with A(i,k) != 0 need the transpose
    // of state_deps.
    std::vector<std::vector<int>> fanout(sp.n_states);
    for (int i = 0; i < sp.n_states; ++i)
        for (int k : sp.state_deps[i]) fanout[k].push_back(i);
    while (!q.empty()) {
        int k = q.front();
        q.pop();
        for (int i : fanout[k]) {
            if (!seen[i]) {
                seen[i] = 1;
                q.push(i);
            }
        }
    }
    Reachability r;
    for (int i = 0; i < sp.n_states; ++i)
        if (!seen[i]) r.unreachable.push_back(i);
    r.all_reached = r.unreachable.empty();
    return r;
}

int s_rank(const StructurePair& sp) {
    Matcher m(sp.n_states, sp.n_states + sp.n_inputs);
    for (int i = 0; i < sp.n_states; ++i) {
        for (int k : sp.state_deps[i]) m.add_edge(i, k);
        for (int j : sp.input_deps[i]) m.add_edge(i, sp.n_states + j);
    }
    return m.solve();
}

bool structurally_controllable(const StructurePair& sp) {
    if (sp.n_states == 0) return true;
    return input_reachability(sp).all_reached && s_rank(sp) == sp.n_states;
}

bool structurally_controllable(const SpMat& A, const Eigen::MatrixXd& B) {
    return structurally_controllable(binarize(A, B));
}

int dimsrs(const StructurePair& sp) {
    Reachability r = input_reachability(sp);
    std::vector<char> reachable(sp.n_states, 1);
    for (int i : r.unreachable) reachable[i] = 0;
    Matcher m(sp.n_states, sp.n_states + sp.n_inputs);
    for (int i = 0; i < sp.n_states; ++i) {
        if (!reachable[i]) continue;
        for (int k : sp.state_deps[i])
            if (reachable[k]) m.add_edge(i, k);
        for (int j : sp.input_deps[i]) m.add_edge(i, sp.n_states + j);
    }
    return m.solve();
}

int dimsrs(const SpMat& A, const Eigen::MatrixXd& B) {
    return dimsrs(binarize(A, B));
}

}  // namespace cbsp
