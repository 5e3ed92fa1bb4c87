#include <random>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"

#include "cbsp/structural.hpp"

using namespace cbsp;

namespace {

SpMat sparse_from(const std::vector<Eigen::Triplet<double>>& trips, int n) {
    SpMat a(n, n);
    a.setFromTriplets(trips.begin(), trips.end());
    return a;
}

// Dense realization of a pattern with independent random values; generic
// rank questions become numeric ones with probability one.
Eigen::MatrixXd realize(const StructurePair& sp, std::mt19937& rng) {
    std::uniform_real_distribution<double> val(0.2, 1.8);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(sp.n_states, sp.n_states + sp.n_inputs);
    for (int i = 0; i < sp.n_states; ++i) {
        for (int k : sp.state_deps[i]) m(i, k) = val(rng);
        for (int j : sp.input_deps[i]) m(i, sp.n_states + j) = val(rng);
    }
    return m;
}

int numeric_rank(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    double tol = std::max(m.rows(), m.cols()) * 1e-12 * svd.singularValues().maxCoeff();
    return static_cast<int>((svd.singularValues().array() > tol).count());
}

StructurePair random_pattern(std::mt19937& rng, int n, int m) {
    std::uniform_int_distribution<int> pos(0, n - 1);
    std::uniform_int_distribution<int> deg(0, 2);
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < n; ++i)
        for (int d = deg(rng); d-- > 0;) trips.emplace_back(i, pos(rng), 1.0);
    std::vector<int> rows(m);
    for (int j = 0; j < m; ++j) rows[j] = pos(rng);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, m);
    for (int j = 0; j < m; ++j) b(rows[j], j) = 1.0;
    return binarize(sparse_from(trips, n), b);
}

}  // namespace

TEST_CASE("binarize keeps true entries and drops hard zeros") {
    SpMat a = sparse_from({{0, 0, 0.5}, {1, 0, 1e-299}, {1, 1, 0.0}}, 2);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 1);
    b(1, 0) = -2.0;
    StructurePair sp = binarize(a, b);
    CHECK(sp.n_states == 2);
    CHECK(sp.n_inputs == 1);
    CHECK(sp.state_deps[0] == std::vector<int>{0});
    // 1e-299 survives the threshold, the explicit 0 does not.
    CHECK(sp.state_deps[1] == std::vector<int>{0});
    CHECK(sp.input_deps[1] == std::vector<int>{0});
    CHECK(sp.input_deps[0].empty());

    StructurePair direct = binarize(a, std::vector<int>{1});
    CHECK(direct.input_deps == sp.input_deps);
}

TEST_CASE("input reachability walks influence edges") {
    // 0 <- 1 <- 2, with 3 isolated; input enters at state 2.
    SpMat a = sparse_from({{0, 1, 1.0}, {1, 2, 1.0}, {3, 3, 1.0}}, 4);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 1);
    b(2, 0) = 1.0;
    Reachability r = input_reachability(binarize(a, b));
    CHECK_FALSE(r.all_reached);
    CHECK(r.unreachable == std::vector<int>{3});

    b(3, 0) = 1.0;  // now the input also touches the island
    r = input_reachability(binarize(a, b));
    CHECK(r.all_reached);
    CHECK(r.unreachable.empty());
}

TEST_CASE("structural rank is the maximum row-column matching") {
    SUBCASE("chain plus input matches every row") {
        SpMat a = sparse_from({{1, 0, 1.0}, {2, 1, 1.0}}, 3);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 1);
        b(0, 0) = 1.0;
        CHECK(s_rank(binarize(a, b)) == 3);
    }
    SUBCASE("two rows fighting over one column cap at one") {
        SpMat a = sparse_from({{0, 2, 1.0}, {1, 2, 1.0}}, 3);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 0);
        StructurePair sp = binarize(a, b);
        CHECK(s_rank(sp) == 1);
    }
    SUBCASE("generic rank equals the rank of a random realization") {
        std::mt19937 rng(17);
        for (int trial = 0; trial < 40; ++trial) {
            StructurePair sp = random_pattern(rng, 7 + trial % 5, 1 + trial % 3);
            CHECK(s_rank(sp) == numeric_rank(realize(sp, rng)));
        }
    }
}

TEST_CASE("structural controllability needs reachability and full rank") {
    SUBCASE("controllable chain") {
        SpMat a = sparse_from({{1, 0, 1.0}, {2, 1, 1.0}}, 3);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 1);
        b(0, 0) = 1.0;
        CHECK(structurally_controllable(a, b));
        CHECK(dimsrs(a, b) == 3);
    }
    SUBCASE("reachable but rank-deficient") {
        // Both sinks fed by state 0: rows 1 and 2 fight over that single
        // column, so the matching tops out at two rows.
        SpMat a = sparse_from({{1, 0, 1.0}, {2, 0, 1.0}}, 3);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 1);
        b(0, 0) = 1.0;
        StructurePair sp = binarize(a, b);
        CHECK(input_reachability(sp).all_reached);
        CHECK(s_rank(sp) == 2);
        CHECK_FALSE(structurally_controllable(sp));
        CHECK(dimsrs(sp) == 2);
    }
    SUBCASE("full rank but unreachable") {
        SpMat a = sparse_from({{0, 0, 1.0}, {1, 1, 1.0}}, 2);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 1);
        b(0, 0) = 1.0;
        StructurePair sp = binarize(a, b);
        CHECK(s_rank(sp) == 2);
        CHECK_FALSE(input_reachability(sp).all_reached);
        CHECK_FALSE(structurally_controllable(sp));
        CHECK(dimsrs(sp) == 1);
    }
    SUBCASE("no input at all") {
        SpMat a = sparse_from({{0, 0, 1.0}}, 2);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 0);
        CHECK_FALSE(structurally_controllable(a, b));
        CHECK(dimsrs(a, b) == 0);
    }
}

TEST_CASE("reachable-subsystem dimension is monotone in the input set") {
    std::mt19937 rng(23);
    std::uniform_int_distribution<int> pos(0, 9);
    for (int trial = 0; trial < 30; ++trial) {
        StructurePair small = random_pattern(rng, 10, 2);
        // Same dynamics, one extra input somewhere.
        StructurePair big = small;
        big.n_inputs = 3;
        big.input_deps[pos(rng)].push_back(2);
        int d_small = dimsrs(small);
        int d_big = dimsrs(big);
        CHECK(d_big >= d_small);
        CHECK(d_big <= 10);
        CHECK(structurally_controllable(big) == (d_big == 10));
        CHECK(structurally_controllable(small) == (d_small == 10));
    }
}

TEST_CASE("dimension of the reachable subsystem ignores unreachable rank") {
    // Reachable part: chain 0 -> 1.  Unreachable part: a full-rank 2-cycle
    // {2,3} that must not inflate the count.
    SpMat a = sparse_from({{1, 0, 1.0}, {2, 3, 1.0}, {3, 2, 1.0}}, 4);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(4, 1);
    b(0, 0) = 1.0;
    StructurePair sp = binarize(a, b);
    CHECK(s_rank(sp) == 4);
    CHECK(dimsrs(sp) == 2);
    CHECK_FALSE(structurally_controllable(sp));
}
