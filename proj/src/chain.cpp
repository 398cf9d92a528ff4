#include "slowfast/chain.hpp"

#include <Eigen/SVD>
#include <sstream>

#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

void check_generator(const Eigen::MatrixXd& Q) {
    if (Q.rows() != Q.cols() || Q.rows() < 1)
        throw Error("chain: generator must be square and non-empty");
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        for (Eigen::Index j = 0; j < Q.cols(); ++j) {
            if (i != j && Q(i, j) < -1e-12) {
                std::ostringstream msg;
                msg << "chain: negative off-diagonal rate q(" << i + 1 << ","
                    << j + 1 << ") = " << Q(i, j);
                throw Error(msg.str());
            }
        }
        if (std::abs(Q.row(i).sum()) > 1e-10) {
            std::ostringstream msg;
            msg << "chain: generator row " << i + 1
                << " sums to " << Q.row(i).sum();
            throw Error(msg.str());
        }
    }
}

}  // namespace

InvariantMeasure invariant_measure(const Eigen::MatrixXd& Q) {
    check_generator(Q);
    const Eigen::Index L = Q.rows();

    Eigen::MatrixXd A(L + 1, L);
    A.topRows(L) = Q.transpose();
    A.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(L + 1);
    rhs(L) = 1.0;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(L - 1) <= 0.0 || sv(0) / sv(L - 1) > 1e12)
        throw NotIrreducibleError(
            "chain: stationary system is singular beyond tolerance "
            "(reducible generator)");

    InvariantMeasure out;
    out.mu = svd.solve(rhs);
    out.residual = (out.mu.transpose() * Q).cwiseAbs().maxCoeff();
    return out;
}

GammaMatrix gamma_of_constant_rates(const Eigen::MatrixXd& Q_at_x) {
    check_generator(Q_at_x);
    // With unit densities, Gamma_ij = lambda([0, q_ij(x)]) = q_ij(x).
    return GammaMatrix{Q_at_x};
}

GammaMatrix gamma_of_controlled_rates(const Eigen::MatrixXd& Q_at_x,
                                      const Eigen::MatrixXd& c) {
    check_generator(Q_at_x);
    if (c.rows() != Q_at_x.rows() || c.cols() != Q_at_x.cols())
        throw Error("chain: control matrix dimension mismatch");

    const Eigen::Index L = Q_at_x.rows();
    GammaMatrix out;
    out.gamma.setZero(L, L);
    for (Eigen::Index i = 0; i < L; ++i) {
        for (Eigen::Index j = 0; j < L; ++j)
            if (i != j) out.gamma(i, j) = c(i, j) * Q_at_x(i, j);
        out.gamma(i, i) = -out.gamma.row(i).sum();
    }
    return out;
}

}  // namespace slowfast
