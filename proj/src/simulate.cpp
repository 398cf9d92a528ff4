#include "slowfast/simulate.hpp"

#include <cmath>

#include "slowfast/poisson.hpp"

namespace slowfast {

namespace {

/// Records the full trajectory into a CoupledPath.
struct PathRecorder {
    CoupledPath* path;
    void on_knot(int k, double t, const Eigen::VectorXd& x, int y) {
        path->times(k) = t;
        path->x.row(k) = x;
        path->y[static_cast<std::size_t>(k)] = y;
    }
    void on_jump(double t, int from, int to) {
        path->jump_log.push_back({t, from, to});
    }
};

CoupledPath make_empty_path(const RegimeModel& model, double T, double dt,
                            std::uint64_t seed) {
    const int n = detail::grid_steps(T, dt);
    CoupledPath path;
    path.times.resize(n + 1);
    path.x.resize(n + 1, model.d);
    path.y.resize(static_cast<std::size_t>(n) + 1);
    path.seed = seed;
    return path;
}

}  // namespace

AveragedPath solve_averaged(const RegimeModel& model, const Eigen::VectorXd& x0,
                            double T, double dt) {
    if (x0.size() != model.d) throw Error("solve_averaged: x0 dimension mismatch");
    const int n = detail::grid_steps(T, dt);

    AveragedPath path;
    path.times.resize(n + 1);
    path.x.resize(n + 1, model.d);

    Eigen::VectorXd x = x0;
    path.times(0) = 0.0;
    path.x.row(0) = x;
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd k1 = averaged_drift(model, x);
        const Eigen::VectorXd k2 = averaged_drift(model, x + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = averaged_drift(model, x + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = averaged_drift(model, x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        path.times(k + 1) = static_cast<double>(k + 1) * dt;
        path.x.row(k + 1) = x;
    }
    return path;
}

CoupledPath simulate_coupled(const RegimeModel& model, double eps,
                             const Eigen::VectorXd& x0, int y0, double T,
                             double dt, std::uint64_t seed,
                             std::uint64_t path_index) {
    if (!(eps > 0.0)) throw Error("simulate_coupled: eps must be positive");
    CoupledPath path = make_empty_path(model, T, dt, seed);
    PathRecorder recorder{&path};
    detail::walk_coupled(model, eps, x0, y0, T, dt, seed, path_index,
                         detail::NullControl{}, recorder);
    return path;
}

CoupledPath simulate_controlled(const RegimeModel& model, double eps,
                                double h_eps, const Eigen::VectorXd& x0, int y0,
                                double T, double dt, std::uint64_t seed,
                                const DriftControl& u_star,
                                const JumpControl& c_star,
                                std::uint64_t path_index) {
    if (!(eps > 0.0)) throw Error("simulate_controlled: eps must be positive");
    if (!(h_eps > 0.0)) throw Error("simulate_controlled: h_eps must be positive");

    detail::FeedbackControl ctl;
    ctl.u = u_star ? &u_star : nullptr;
    ctl.c = c_star ? &c_star : nullptr;
    ctl.sqrt_eps_h = std::sqrt(eps) * h_eps;

    // Declared dominating intensity: zeta times the grid sup of phi.
    double phi_sup = 1.0;
    if (ctl.c) {
        const int n = detail::grid_steps(T, dt);
        phi_sup = 0.0;
        for (int k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k) * dt;
            for (const auto& [i, j] : model.support) {
                const double phi = 1.0 + ctl.sqrt_eps_h * c_star(t, i, j);
                if (phi < 0.0) {
                    std::ostringstream msg;
                    msg << "simulate_controlled: phi(" << i + 1 << "," << j + 1
                        << ") = " << phi << " is negative at t = " << t;
                    throw Error(msg.str());
                }
                phi_sup = std::max(phi_sup, phi);
            }
        }
    }
    ctl.phi_sup = phi_sup;

    CoupledPath path = make_empty_path(model, T, dt, seed);
    PathRecorder recorder{&path};
    detail::walk_coupled(model, eps, x0, y0, T, dt, seed, path_index, ctl,
                         recorder);
    return path;
}

DeviationPath deviation_path(const CoupledPath& coupled,
                             const AveragedPath& averaged, double eps,
                             double h_eps) {
    if (coupled.times.size() != averaged.times.size() ||
        (coupled.times - averaged.times).cwiseAbs().maxCoeff() > 1e-12)
        throw Error("deviation_path: grid mismatch between coupled and averaged paths");
    if (!(eps > 0.0) || !(h_eps > 0.0))
        throw Error("deviation_path: eps and h_eps must be positive");

    DeviationPath out;
    out.times = coupled.times;
    out.eta = (coupled.x - averaged.x) / (std::sqrt(eps) * h_eps);
    out.epsilon = eps;
    out.h_eps = h_eps;
    return out;
}

}  // namespace slowfast
