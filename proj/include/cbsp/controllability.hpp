#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "cbsp/network.hpp"

namespace cbsp {

using SpMat = Eigen::SparseMatrix<double>;

// Finite-horizon reachability Gramian
//   W = sum_{k=0}^{horizon-1} A^k B B^T (A^T)^k
// accumulated by propagating X <- A X; the stacked [B, AB, ...] block matrix
// is never materialized.
struct Gramian {
    Eigen::MatrixXd W;
    int horizon = 0;
    int hydraulic_step = -1;
    std::vector<NodeId> stations;
};

Gramian gramian(const SpMat& A, const Eigen::MatrixXd& B, int horizon);

// trace(W) without forming W: the running sum of ||A^k B||_F^2.
double gramian_trace(const SpMat& A, const Eigen::MatrixXd& B, int horizon);

// The stacked block matrix [B, AB, ..., A^{horizon-1} B]; test and
// small-system use only.
Eigen::MatrixXd controllability_matrix(const SpMat& A, const Eigen::MatrixXd& B, int horizon);

// Numerical rank of the stacked block matrix, singular values thresholded at
// max(rows, cols) * machine-eps * sigma_max.
int kalman_rank(const SpMat& A, const Eigen::MatrixXd& B, int horizon);

enum class MetricKind { Trace, LogDet };

struct MetricValue {
    MetricKind kind = MetricKind::Trace;
    double value = 0.0;
    double epsilon = 0.0;  // regularization actually applied (LogDet only)
};

// Regularization for log det(W + eps I):
//   eps = eps_rel * max(trace(W) / n, floor)
// keeping the argument comfortably inside double range even for W = 0.
struct LogDetOptions {
    double epsilon_rel = 1e-12;
    double floor = 1e-288;
};

double logdet_epsilon(const Eigen::MatrixXd& W, const LogDetOptions& opt = {});

// Scalar score of a Gramian.  Pass `fixed_epsilon` >= 0 to pin the LogDet
// regularization (needed when several candidate sets must share one eps);
// negative derives it from W via `logdet_epsilon`.
MetricValue metric(const Gramian& g, MetricKind kind, double fixed_epsilon = -1.0);

// log det(W + eps I) via Cholesky, falling back to a symmetric eigensolve;
// throws NumericError if W + eps I is indefinite beyond round-off.
double logdet_psd(const Eigen::MatrixXd& W, double eps);

}  // namespace cbsp
