#pragma once

#include <Eigen/Dense>
#include <map>
#include <utility>
#include <vector>

#include "slowfast/model.hpp"
#include "slowfast/simulate.hpp"

namespace slowfast {

/// Optimal controls and cost of the pointwise drift-matching problem at one
/// state x with required control drift v.
struct PointwiseRate {
    Eigen::VectorXd x;
    Eigen::VectorXd v;
    double cost = 0.0;  ///< +inf when infeasible
    Eigen::MatrixXd u_star;  ///< L x d optimal Brownian controls per regime
    std::map<std::pair<int, int>, double> c_star;  ///< per support pair
    bool feasible = true;
};

/// Rate-functional value of a deviation path.
struct RateEvaluation {
    double value = 0.0;  ///< +inf if any knot is infeasible
    std::vector<PointwiseRate> per_knot;
    Eigen::VectorXd grid;
    double first_infeasible_time = -1.0;  ///< valid when value is +inf
};

/// Minimum-cost controls reproducing drift v at x: with pi fixed to mu^x and
/// jump densities constant on each support interval, the closed form is
/// multiplier = Lambda(x)^+ v, u*_j = sigma_j^T multiplier, c*_ij =
/// (Phi_j - Phi_i)^T multiplier, cost = v^T Lambda^+ v / 2. Infeasible when
/// ||Lambda Lambda^+ v - v|| > 1e-8 (1 + ||v||).
PointwiseRate pointwise_rate(const RegimeModel& model, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& v);

/// Independent check of the constant-density reduction: discretizes each jump
/// density on a uniform grid of z_grid_size cells over [0, zeta] (cells
/// weighted by their overlap with the support interval, zero-overlap cells
/// masked) and solves the equality-constrained QP by a dense KKT solve.
/// Returns the minimal cost, +inf when v is unreachable.
double pointwise_rate_qp_oracle(const RegimeModel& model,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& v, int z_grid_size);

/// Time integral of pointwise costs along eta: v = eta' - grad_bbar(xbar) eta
/// with central differences inside and second-order one-sided stencils at the
/// ends, trapezoidal in time. Requires eta(0) = 0 and matching grids.
RateEvaluation rate_functional(const RegimeModel& model,
                               const AveragedPath& averaged,
                               const Eigen::MatrixXd& eta);

/// Minimizer of the rate functional over paths with eta(0) = 0, eta(T) = a on
/// an n_knots-step grid, by solving the KKT conditions of the discretized
/// linear-quadratic problem. Returns the value and the optimal path (grid of
/// n_knots + 1 points). Throws InfeasibleError when a is outside the
/// reachable subspace.
std::pair<double, Eigen::MatrixXd> min_rate_to_target(
    const RegimeModel& model, const AveragedPath& averaged,
    const Eigen::VectorXd& a, double T, int n_knots);

}  // namespace slowfast
