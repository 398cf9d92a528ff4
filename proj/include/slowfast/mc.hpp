#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "slowfast/model.hpp"
#include "slowfast/simulate.hpp"

namespace slowfast {

enum class TailEvent {
    kTerminal,  ///< eta_1(T) >= a
    kSup,       ///< sup_t ||eta(t)|| >= a
};

/// Monte Carlo tail estimate at one epsilon.
struct TailEstimate {
    double eps = 0.0;
    double h_eps = 0.0;
    double threshold = 0.0;
    std::int64_t n_paths = 0;
    double p_hat = 0.0;
    double std_err = 0.0;            ///< sqrt(p(1-p)/n)
    double decay_rate = 0.0;         ///< -log(p_hat)/h_eps^2; +inf when p_hat = 0
    double decay_rate_lower = 0.0;   ///< rule-of-three lower confidence bound
};

/// Step rule for the epsilon scan: dt(eps) = min(dt_cap, eps * eps_fraction).
struct DtRule {
    double dt_cap = 1e-3;
    double eps_fraction = 0.1;
    double operator()(double eps) const {
        const double dt = eps * eps_fraction;
        return dt < dt_cap ? dt : dt_cap;
    }
};

/// Simulates n_paths coupled paths, forms eta = (x - xbar)/(sqrt(eps) h) with
/// h = eps^(-h_exponent), and counts the tail event. A threshold a <= -1e300
/// is the always-true sentinel. Counters are reduced in path-index order, so
/// results are identical for any worker count.
TailEstimate estimate_tail(const RegimeModel& model, double eps,
                           double h_exponent, const Eigen::VectorXd& x0, int y0,
                           double T, double dt, double a, TailEvent event,
                           std::int64_t n_paths, std::uint64_t seed,
                           int workers = 0);

/// One TailEstimate per epsilon (grid must be decreasing), dt per the rule.
std::vector<TailEstimate> mdp_scan(const RegimeModel& model,
                                   const std::vector<double>& eps_grid,
                                   double h_exponent, double a, double T,
                                   const DtRule& dt_rule, TailEvent event,
                                   std::int64_t n_paths, std::uint64_t seed,
                                   int workers = 0);

/// CLT-scale self-consistency check: empirical covariance of eta(T) at h = 1
/// against the Lyapunov flow S' = J S + S J^T + Lambda, S(0) = 0, integrated
/// by RK4 along the averaged path.
struct CltCheck {
    Eigen::MatrixXd empirical_cov;
    Eigen::MatrixXd predicted_cov;
    double max_rel_dev = 0.0;
};

CltCheck clt_check(const RegimeModel& model, double eps,
                   const Eigen::VectorXd& x0, int y0, double T, double dt,
                   std::int64_t n_paths, std::uint64_t seed, int workers = 0);

namespace detail {
/// Runs fn(path_index) for 0 <= path_index < n on `workers` threads
/// (0 = hardware concurrency) over contiguous blocks. fn must only write to
/// per-path slots.
void parallel_paths(std::int64_t n, int workers,
                    const std::function<void(std::int64_t)>& fn);
}  // namespace detail

}  // namespace slowfast
