#include "slowfast/mc.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <thread>

#include "slowfast/errors.hpp"
#include "slowfast/poisson.hpp"
#include "slowfast/rate.hpp"

namespace slowfast {

namespace detail {

void parallel_paths(std::int64_t n, int workers,
                    const std::function<void(std::int64_t)>& fn) {
    int w = workers > 0 ? workers
                        : static_cast<int>(std::thread::hardware_concurrency());
    if (w < 1) w = 1;
    if (w == 1 || n < 2 * w) {
        for (std::int64_t p = 0; p < n; ++p) fn(p);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(w));
    for (int t = 0; t < w; ++t) {
        const std::int64_t lo = n * t / w;
        const std::int64_t hi = n * (t + 1) / w;
        pool.emplace_back([lo, hi, &fn] {
            for (std::int64_t p = lo; p < hi; ++p) fn(p);
        });
    }
    for (auto& th : pool) th.join();
}

namespace {

/// Per-path tail statistics against a precomputed averaged grid.
struct TailObserver {
    const Eigen::MatrixXd* xbar;
    double scale = 0.0;  // 1/(sqrt(eps) h)
    double sup_norm = 0.0;
    Eigen::VectorXd eta_terminal;

    void on_knot(int k, double, const Eigen::VectorXd& x, int) {
        eta_terminal = scale * (x - xbar->row(k).transpose());
        const double norm = eta_terminal.norm();
        if (norm > sup_norm) sup_norm = norm;
    }
    void on_jump(double, int, int) {}
};

}  // namespace
}  // namespace detail

TailEstimate estimate_tail(const RegimeModel& model, double eps,
                           double h_exponent, const Eigen::VectorXd& x0, int y0,
                           double T, double dt, double a, TailEvent event,
                           std::int64_t n_paths, std::uint64_t seed,
                           int workers) {
    if (!(h_exponent > 0.0) || !(h_exponent < 0.5))
        throw Error("estimate_tail: h_exponent must be in (0, 0.5)");
    if (n_paths < 1) throw Error("estimate_tail: n_paths must be positive");

    const double h_eps = std::pow(eps, -h_exponent);
    const double scale = 1.0 / (std::sqrt(eps) * h_eps);
    const AveragedPath averaged = solve_averaged(model, x0, T, dt);

    std::vector<std::uint8_t> hit(static_cast<std::size_t>(n_paths), 0);
    detail::parallel_paths(n_paths, workers, [&](std::int64_t p) {
        detail::TailObserver obs;
        obs.xbar = &averaged.x;
        obs.scale = scale;
        obs.eta_terminal.resize(model.d);
        detail::walk_coupled(model, eps, x0, y0, T, dt, seed,
                             static_cast<std::uint64_t>(p),
                             detail::NullControl{}, obs);
        const double stat =
            event == TailEvent::kTerminal ? obs.eta_terminal(0) : obs.sup_norm;
        hit[static_cast<std::size_t>(p)] = stat >= a ? 1 : 0;
    });

    std::int64_t count = 0;
    for (std::int64_t p = 0; p < n_paths; ++p)
        count += hit[static_cast<std::size_t>(p)];

    TailEstimate out;
    out.eps = eps;
    out.h_eps = h_eps;
    out.threshold = a;
    out.n_paths = n_paths;
    out.p_hat = static_cast<double>(count) / static_cast<double>(n_paths);
    out.std_err =
        std::sqrt(out.p_hat * (1.0 - out.p_hat) / static_cast<double>(n_paths));
    const double h2 = h_eps * h_eps;
    out.decay_rate = out.p_hat > 0.0
                         ? -std::log(out.p_hat) / h2
                         : std::numeric_limits<double>::infinity();
    // rule-of-three upper bound on p gives a lower confidence bound on decay
    const double p_upper = std::min(
        1.0, out.p_hat + 3.0 * (1.0 - out.p_hat) / static_cast<double>(n_paths));
    out.decay_rate_lower = -std::log(p_upper) / h2;
    return out;
}

std::vector<TailEstimate> mdp_scan(const RegimeModel& model,
                                   const std::vector<double>& eps_grid,
                                   double h_exponent, double a, double T,
                                   const DtRule& dt_rule, TailEvent event,
                                   std::int64_t n_paths, std::uint64_t seed,
                                   int workers) {
    if (eps_grid.empty()) throw Error("mdp_scan: eps_grid must be non-empty");
    for (std::size_t k = 1; k < eps_grid.size(); ++k)
        if (eps_grid[k] > eps_grid[k - 1])
            throw Error("mdp_scan: eps_grid must be decreasing");

    std::vector<TailEstimate> out;
    out.reserve(eps_grid.size());
    const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(model.d);
    for (const double eps : eps_grid)
        out.push_back(estimate_tail(model, eps, h_exponent, x0, 0, T,
                                    dt_rule(eps), a, event, n_paths, seed,
                                    workers));
    return out;
}

CltCheck clt_check(const RegimeModel& model, double eps,
                   const Eigen::VectorXd& x0, int y0, double T, double dt,
                   std::int64_t n_paths, std::uint64_t seed, int workers) {
    if (n_paths < 1000) throw Error("clt_check: n_paths must be >= 1000");
    const AveragedPath averaged = solve_averaged(model, x0, T, dt);
    const double scale = 1.0 / std::sqrt(eps);  // h = 1

    Eigen::MatrixXd terminals(n_paths, model.d);
    detail::parallel_paths(n_paths, workers, [&](std::int64_t p) {
        detail::TailObserver obs;
        obs.xbar = &averaged.x;
        obs.scale = scale;
        obs.eta_terminal.resize(model.d);
        detail::walk_coupled(model, eps, x0, y0, T, dt, seed,
                             static_cast<std::uint64_t>(p),
                             detail::NullControl{}, obs);
        terminals.row(p) = obs.eta_terminal;
    });

    CltCheck out;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(model.d);
    for (std::int64_t p = 0; p < n_paths; ++p)
        mean += terminals.row(p).transpose();
    mean /= static_cast<double>(n_paths);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(model.d, model.d);
    for (std::int64_t p = 0; p < n_paths; ++p) {
        const Eigen::VectorXd delta = terminals.row(p).transpose() - mean;
        cov.noalias() += delta * delta.transpose();
    }
    out.empirical_cov = cov / static_cast<double>(n_paths - 1);

    // Lyapunov flow S' = J S + S J^T + Lambda along the averaged path, RK4
    // with midpoint data from neighbouring knots.
    const Eigen::Index n = averaged.times.size() - 1;
    std::vector<Eigen::MatrixXd> jac(static_cast<std::size_t>(n) + 1);
    std::vector<Eigen::MatrixXd> lam(static_cast<std::size_t>(n) + 1);
    for (Eigen::Index k = 0; k <= n; ++k) {
        const Eigen::VectorXd x = averaged.x.row(k);
        jac[static_cast<std::size_t>(k)] =
            jacobian_bbar(model, x, default_jacobian_step(x));
        lam[static_cast<std::size_t>(k)] = effective_covariance(model, x).lambda;
    }
    const auto flow = [](const Eigen::MatrixXd& J, const Eigen::MatrixXd& L,
                         const Eigen::MatrixXd& S) -> Eigen::MatrixXd {
        return J * S + S * J.transpose() + L;
    };
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(model.d, model.d);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto& J0 = jac[static_cast<std::size_t>(k)];
        const auto& J1 = jac[static_cast<std::size_t>(k + 1)];
        const auto& L0 = lam[static_cast<std::size_t>(k)];
        const auto& L1 = lam[static_cast<std::size_t>(k + 1)];
        const Eigen::MatrixXd Jm = 0.5 * (J0 + J1);
        const Eigen::MatrixXd Lm = 0.5 * (L0 + L1);
        const Eigen::MatrixXd k1 = flow(J0, L0, S);
        const Eigen::MatrixXd k2 = flow(Jm, Lm, S + 0.5 * dt * k1);
        const Eigen::MatrixXd k3 = flow(Jm, Lm, S + 0.5 * dt * k2);
        const Eigen::MatrixXd k4 = flow(J1, L1, S + dt * k3);
        S += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    out.predicted_cov = S;

    const double denom = S.cwiseAbs().maxCoeff();
    const Eigen::MatrixXd diff = out.empirical_cov - out.predicted_cov;
    out.max_rel_dev = denom > 1e-14 ? diff.cwiseAbs().maxCoeff() / denom
                                    : diff.cwiseAbs().maxCoeff();
    return out;
}

}  // namespace slowfast
