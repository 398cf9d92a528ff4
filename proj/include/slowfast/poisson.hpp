#pragma once

#include <Eigen/Dense>

#include "slowfast/model.hpp"

namespace slowfast {

/// Solution of the frozen-x corrector equation Q(x) Phi = -(b - bbar) with
/// mu-weighted centering, plus the averaged drift at x.
struct PoissonSolution {
    Eigen::VectorXd x;
    Eigen::MatrixXd phi;   ///< L x d, row i = Phi(x, i)
    Eigen::VectorXd bbar;  ///< averaged drift at x
    double residual = 0.0;  ///< ||Q Phi + (b - bbar)||_inf
    double centering = 0.0;  ///< ||sum_i Phi(x,i) mu_i||_inf
};

/// Effective control-authority covariance
///   Lambda(x) = sum_j mu_j sigma_j sigma_j^T
///             + sum_{(i,j) in support} mu_i q_ij (Phi_j - Phi_i)(Phi_j - Phi_i)^T
/// with its pseudo-inverse (relative truncation 1e-10) and rank.
struct EffectiveCovariance {
    Eigen::MatrixXd lambda;
    Eigen::MatrixXd pinv;
    int rank = 0;
};

/// bbar(x) = sum_i b(x,i) mu_i^x.
Eigen::VectorXd averaged_drift(const RegimeModel& model, const Eigen::VectorXd& x);

/// Solves, per slow coordinate, the (L+1)-row least-squares system
/// [Q(x); mu^T] phi = [-(b - bbar); 0]. Throws IllConditionedError when the
/// residual exceeds 1e-8.
PoissonSolution solve_poisson(const RegimeModel& model, const Eigen::VectorXd& x);

/// Central finite differences of the averaged drift, column k =
/// (bbar(x + h e_k) - bbar(x - h e_k)) / (2h).
Eigen::MatrixXd jacobian_bbar(const RegimeModel& model, const Eigen::VectorXd& x,
                              double h_fd);

/// Step used by jacobian_bbar callers that do not choose one: 1e-5 (1 + ||x||).
double default_jacobian_step(const Eigen::VectorXd& x);

/// Assembles Lambda(x) from mu, sigma, q and Phi.
EffectiveCovariance effective_covariance(const RegimeModel& model,
                                         const Eigen::VectorXd& x);

}  // namespace slowfast
