#pragma once

#include <Eigen/Dense>

namespace slowfast {

/// Stationary distribution of an x-frozen generator.
struct InvariantMeasure {
    Eigen::VectorXd mu;    ///< probabilities per regime
    double residual = 0.0;  ///< ||mu^T Q||_inf
};

/// A rate-perturbation generator Gamma^theta(x).
struct GammaMatrix {
    Eigen::MatrixXd gamma;
};

/// Unique probability vector with mu Q = 0, via the augmented least-squares
/// system [Q^T; 1^T] mu = [0; 1]. Throws NotIrreducibleError when the stacked
/// system has condition number above 1e12.
InvariantMeasure invariant_measure(const Eigen::MatrixXd& Q);

/// Gamma with unit densities: equals the input generator.
GammaMatrix gamma_of_constant_rates(const Eigen::MatrixXd& Q_at_x);

/// Gamma with constant density c_ij on each support interval [0, q_ij(x)]:
/// off-diagonals c_ij * q_ij(x), diagonal completing zero row sums.
GammaMatrix gamma_of_controlled_rates(const Eigen::MatrixXd& Q_at_x,
                                      const Eigen::MatrixXd& c);

}  // namespace slowfast
