#include "slowfast/poisson.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <sstream>

#include "slowfast/chain.hpp"
#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

Eigen::MatrixXd drift_table(const RegimeModel& model, const Eigen::VectorXd& x) {
    Eigen::MatrixXd b(model.L, model.d);
    Eigen::VectorXd row(model.d);
    for (int i = 0; i < model.L; ++i) {
        model.drift(x, i, row);
        b.row(i) = row;
    }
    return b;
}

}  // namespace

Eigen::VectorXd averaged_drift(const RegimeModel& model, const Eigen::VectorXd& x) {
    const auto inv = invariant_measure(model.generator_at(x));
    return drift_table(model, x).transpose() * inv.mu;
}

PoissonSolution solve_poisson(const RegimeModel& model, const Eigen::VectorXd& x) {
    const Eigen::MatrixXd Q = model.generator_at(x);
    const auto inv = invariant_measure(Q);
    const Eigen::MatrixXd b = drift_table(model, x);

    PoissonSolution out;
    out.x = x;
    out.bbar = b.transpose() * inv.mu;

    // One decomposition serves all slow coordinates: [Q; mu^T] phi_k = [-btilde_k; 0].
    const Eigen::MatrixXd btilde =
        b - Eigen::VectorXd::Ones(model.L) * out.bbar.transpose();
    Eigen::MatrixXd A(model.L + 1, model.L);
    A.topRows(model.L) = Q;
    A.bottomRows(1) = inv.mu.transpose();
    Eigen::MatrixXd rhs(model.L + 1, model.d);
    rhs.topRows(model.L) = -btilde;
    rhs.bottomRows(1).setZero();

    out.phi = A.colPivHouseholderQr().solve(rhs);
    out.residual = (Q * out.phi + btilde).cwiseAbs().maxCoeff();
    out.centering = (out.phi.transpose() * inv.mu).cwiseAbs().maxCoeff();

    if (out.residual > 1e-8) {
        std::ostringstream msg;
        msg << "solve_poisson: residual " << out.residual
            << " above tolerance at x = [" << x.transpose() << "]";
        throw IllConditionedError(msg.str(), out.residual);
    }
    return out;
}

Eigen::MatrixXd jacobian_bbar(const RegimeModel& model, const Eigen::VectorXd& x,
                              double h_fd) {
    if (!(h_fd > 0.0)) throw Error("jacobian_bbar: h_fd must be positive");
    Eigen::MatrixXd jac(model.d, model.d);
    Eigen::VectorXd probe = x;
    for (int k = 0; k < model.d; ++k) {
        probe(k) = x(k) + h_fd;
        const Eigen::VectorXd plus = averaged_drift(model, probe);
        probe(k) = x(k) - h_fd;
        const Eigen::VectorXd minus = averaged_drift(model, probe);
        probe(k) = x(k);
        jac.col(k) = (plus - minus) / (2.0 * h_fd);
    }
    return jac;
}

double default_jacobian_step(const Eigen::VectorXd& x) {
    return 1e-5 * (1.0 + x.norm());
}

EffectiveCovariance effective_covariance(const RegimeModel& model,
                                         const Eigen::VectorXd& x) {
    const auto sol = solve_poisson(model, x);
    const auto inv = invariant_measure(model.generator_at(x));
    const Eigen::MatrixXd Q = model.generator_at(x);

    Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(model.d, model.d);
    Eigen::MatrixXd sigma(model.d, model.d);
    for (int j = 0; j < model.L; ++j) {
        model.diffusion(x, j, sigma);
        lambda.noalias() += inv.mu(j) * (sigma * sigma.transpose());
    }
    for (const auto& [i, j] : model.support) {
        const Eigen::VectorXd dphi = sol.phi.row(j) - sol.phi.row(i);
        lambda.noalias() += inv.mu(i) * Q(i, j) * (dphi * dphi.transpose());
    }
    lambda = 0.5 * (lambda + lambda.transpose()).eval();

    EffectiveCovariance out;
    out.lambda = lambda;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lambda);
    const Eigen::VectorXd& vals = eig.eigenvalues();
    // relative truncation, with an absolute floor for assemblies that are
    // zero up to roundoff (squared solver noise)
    const double cutoff =
        std::max(1e-10 * vals.cwiseAbs().maxCoeff(), 1e-28);
    Eigen::VectorXd inv_vals = Eigen::VectorXd::Zero(model.d);
    out.rank = 0;
    for (int k = 0; k < model.d; ++k) {
        if (vals(k) > cutoff && vals(k) > 0.0) {
            inv_vals(k) = 1.0 / vals(k);
            ++out.rank;
        }
    }
    out.pinv = eig.eigenvectors() * inv_vals.asDiagonal() *
               eig.eigenvectors().transpose();
    return out;
}

}  // namespace slowfast
