#include "cbsp/controllability.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cbsp/errors.hpp"

namespace cbsp {

namespace {

void check_shapes(const SpMat& A, const Eigen::MatrixXd& B, int horizon) {
    if (A.rows() != A.cols()) throw ValidationError("A must be square");
    if (B.rows() != A.rows()) throw ValidationError("B row count must match A");
    if (horizon < 1) throw ValidationError("horizon must be at least 1");
}

}  // namespace

Gramian gramian(const SpMat& A, const Eigen::MatrixXd& B, int horizon) {
    check_shapes(A, B, horizon);
    const Eigen::Index n = A.rows();
    Gramian g;
    g.horizon = horizon;
    g.W = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd X = B;
    for (int k = 0; k < horizon; ++k) {
        g.W.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0);
        if (k + 1 < horizon) X = A * X;
    }
    g.W.triangularView<Eigen::StrictlyUpper>() = g.W.transpose();
    return g;
}

double gramian_trace(const SpMat& A, const Eigen::MatrixXd& B, int horizon) {
    check_shapes(A, B, horizon);
    double tr = 0.0;
    Eigen::MatrixXd X = B;
    for (int k = 0; k < horizon; ++k) {
        tr += X.squaredNorm();
        if (k + 1 < horizon) X = A * X;
    }
    return tr;
}

Eigen::MatrixXd controllability_matrix(const SpMat& A, const Eigen::MatrixXd& B, int horizon) {
    check_shapes(A, B, horizon);
    const Eigen::Index n = A.rows(), m = B.cols();
    Eigen::MatrixXd C(n, m * horizon);
    Eigen::MatrixXd X = B;
    for (int k = 0; k < horizon; ++k) {
        C.middleCols(k * m, m) = X;
        if (k + 1 < horizon) X = A * X;
    }
    return C;
}

int kalman_rank(const SpMat& A, const Eigen::MatrixXd& B, int horizon) {
    Eigen::MatrixXd C = controllability_matrix(A, B, horizon);
    if (C.size() == 0) return 0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(C);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    double tol = std::max(C.rows(), C.cols()) *
                 std::numeric_limits<double>::epsilon() * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++rank;
    return rank;
}

double logdet_epsilon(const Eigen::MatrixXd& W, const LogDetOptions& opt) {
    double mean_diag = W.rows() > 0 ? W.trace() / static_cast<double>(W.rows()) : 0.0;
    return opt.epsilon_rel * std::max(mean_diag, opt.floor);
}

double logdet_psd(const Eigen::MatrixXd& W, double eps) {
    if (W.rows() != W.cols()) throw ValidationError("W must be square");
    Eigen::MatrixXd M = W;
    M.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() == Eigen::Success) {
        double ld = 0.0;
        const Eigen::MatrixXd& packed = llt.matrixLLT();
        for (Eigen::Index i = 0; i < M.rows(); ++i) ld += std::log(packed(i, i));
        return 2.0 * ld;
    }
    // Cholesky can fail on a PSD-up-to-round-off matrix; decide via the
    // spectrum instead and reject only genuine indefiniteness.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success)
        throw NumericError("eigendecomposition failed on a Gramian");
    const auto& ev = es.eigenvalues();
    double scale = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
    double ld = 0.0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) <= 0.0) {
            if (ev(i) < -1e-10 * std::max(scale, 1.0))
                throw NumericError("Gramian is indefinite beyond round-off");
            ld += std::log(std::numeric_limits<double>::min());
        } else {
            ld += std::log(ev(i));
        }
    }
    return ld;
}

MetricValue metric(const Gramian& g, MetricKind kind, double fixed_epsilon) {
    MetricValue m;
    m.kind = kind;
    if (kind == MetricKind::Trace) {
        m.value = g.W.trace();
        return m;
    }
    m.epsilon = fixed_epsilon >= 0.0 ? fixed_epsilon : logdet_epsilon(g.W);
    m.value = logdet_psd(g.W, m.epsilon);
    return m;
}

}  // namespace cbsp
