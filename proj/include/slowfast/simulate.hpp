#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <vector>

#include "slowfast/errors.hpp"
#include "slowfast/model.hpp"
#include "slowfast/rng.hpp"

namespace slowfast {

/// Deterministic trajectory of the averaged ODE on a uniform grid.
struct AveragedPath {
    Eigen::VectorXd times;
    Eigen::MatrixXd x;  ///< (N+1) x d
};

struct JumpEvent {
    double time;
    int from;
    int to;
};

/// Sampled trajectory of the coupled (or controlled) system. Regimes are
/// 0-based here; file output uses 1-based labels. y follows the
/// right-continuous convention at jump times.
struct CoupledPath {
    Eigen::VectorXd times;
    Eigen::MatrixXd x;  ///< (N+1) x d
    std::vector<int> y;
    std::vector<JumpEvent> jump_log;
    std::uint64_t seed = 0;
};

struct DeviationPath {
    Eigen::VectorXd times;
    Eigen::MatrixXd eta;  ///< (N+1) x d
    double epsilon = 0.0;
    double h_eps = 0.0;
};

/// Per-regime Brownian control u_i(t), filled into the last argument.
using DriftControl =
    std::function<void(double, int, Eigen::Ref<Eigen::VectorXd>)>;
/// Per-pair jump-control density c_ij(t).
using JumpControl = std::function<double(double, int, int)>;

/// Default step rule: min(1e-3, eps/10), keeping the frozen-x thinning
/// approximation accurate relative to the switching speed.
inline double default_dt(double eps) { return std::min(1e-3, eps / 10.0); }

/// Classical RK4 for dxbar = bbar(xbar) dt.
AveragedPath solve_averaged(const RegimeModel& model, const Eigen::VectorXd& x0,
                            double T, double dt);

/// Euler-Maruyama in x with exact thinning of the switching process between
/// Euler knots; q_ij is evaluated with x frozen at the last knot.
CoupledPath simulate_coupled(const RegimeModel& model, double eps,
                             const Eigen::VectorXd& x0, int y0, double T,
                             double dt, std::uint64_t seed,
                             std::uint64_t path_index = 0);

/// As simulate_coupled, with drift tilted by sqrt(eps) h(eps) sigma u*_Y(t)
/// and acceptance bands stretched to q_ij phi_ij(t), phi_ij = 1 + sqrt(eps)
/// h(eps) c*_ij(t). The dominating intensity uses zeta times the grid sup of
/// phi; a candidate whose phi exceeds that sup, or is negative, is an error.
CoupledPath simulate_controlled(const RegimeModel& model, double eps,
                                double h_eps, const Eigen::VectorXd& x0, int y0,
                                double T, double dt, std::uint64_t seed,
                                const DriftControl& u_star,
                                const JumpControl& c_star,
                                std::uint64_t path_index = 0);

/// eta(t_k) = (x(t_k) - xbar(t_k)) / (sqrt(eps) h_eps). Grids must agree.
DeviationPath deviation_path(const CoupledPath& coupled,
                             const AveragedPath& averaged, double eps,
                             double h_eps);

namespace detail {

/// Number of uniform grid steps, validating that dt divides T.
inline int grid_steps(double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0))
        throw Error("simulate: T and dt must be positive");
    const auto n = static_cast<long long>(std::llround(T / dt));
    if (n < 1 || std::abs(static_cast<double>(n) * dt - T) > 1e-9 * std::max(1.0, T))
        throw Error("simulate: dt does not divide T within rounding");
    return static_cast<int>(n);
}

struct NullControl {
    static constexpr bool active = false;
};

struct FeedbackControl {
    static constexpr bool active = true;
    const DriftControl* u = nullptr;
    const JumpControl* c = nullptr;
    double sqrt_eps_h = 0.0;
    double phi_sup = 1.0;
};

/// Core path walker shared by the coupled and controlled simulators and the
/// Monte Carlo engine. Observer receives on_knot(k, t, x, y) for k = 0..N and
/// on_jump(t, from, to) for accepted switches. No allocation after setup.
template <class Observer, class Control>
void walk_coupled(const RegimeModel& model, double eps,
                  const Eigen::VectorXd& x0, int y0, double T, double dt,
                  std::uint64_t seed, std::uint64_t path_index,
                  const Control& ctl, Observer& obs) {
    if (y0 < 0 || y0 >= model.L) throw Error("simulate: y0 out of range");
    if (x0.size() != model.d) throw Error("simulate: x0 dimension mismatch");
    const int num_steps = grid_steps(T, dt);
    const auto targets = model.targets_by_regime();

    double zeta_dom = model.zeta;
    if constexpr (Control::active) zeta_dom = model.zeta * ctl.phi_sup;

    const double inv_eps = 1.0 / eps;
    const double sqrt_eps_dt = std::sqrt(eps * dt);
    const PathRng rng(seed, path_index);

    Eigen::VectorXd x = x0;
    Eigen::VectorXd x_frozen(model.d);
    Eigen::VectorXd drift_accum(model.d);
    Eigen::VectorXd coeff(model.d);
    Eigen::VectorXd u_ctl(model.d);
    Eigen::VectorXd noise(model.d);
    Eigen::MatrixXd sigma(model.d, model.d);
    Eigen::MatrixXd Q(model.L, model.L);
    int y = y0;

    obs.on_knot(0, 0.0, x, y);

    const int gauss_blocks = (model.d + 1) / 2;
    for (int k = 0; k < num_steps; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        const double t1 = static_cast<double>(k + 1) * dt;
        x_frozen = x;
        const int y_step = y;
        bool q_ready = false;

        drift_accum.setZero();
        double seg_start = t0;
        double s = t0;
        std::uint32_t jump_draw = 0;
        for (;;) {
            const auto& tgt = targets[static_cast<std::size_t>(y)];
            if (tgt.empty()) break;
            const double rate =
                inv_eps * zeta_dom * static_cast<double>(tgt.size());
            if (!(rate > 0.0)) break;
            const auto u2 = rng.uniforms(static_cast<std::uint64_t>(k),
                                         RngChannel::kJump, jump_draw++);
            s += -std::log(u2[0]) / rate;
            if (s > t1) break;

            if (!q_ready) {
                model.generator(x_frozen, Q);
                q_ready = true;
            }
            const double mark = u2[1] * zeta_dom * static_cast<double>(tgt.size());
            auto band = static_cast<std::size_t>(mark / zeta_dom);
            if (band >= tgt.size()) band = tgt.size() - 1;
            const int j = tgt[band];
            const double rem = mark - static_cast<double>(band) * zeta_dom;

            const double q_ij = Q(y, j);
            if (q_ij > model.zeta) {
                std::ostringstream msg;
                msg << "simulate: sampled rate q(" << y + 1 << "," << j + 1
                    << ") = " << q_ij << " exceeds zeta = " << model.zeta
                    << " at x = [" << x_frozen.transpose() << "]";
                throw ZetaViolatedError(msg.str());
            }
            double width = q_ij;
            if constexpr (Control::active) {
                double phi = 1.0;
                if (ctl.c) {
                    phi = 1.0 + ctl.sqrt_eps_h * (*ctl.c)(s, y, j);
                    if (phi < 0.0) {
                        std::ostringstream msg;
                        msg << "simulate: controlled rate multiplier phi("
                            << y + 1 << "," << j + 1 << ") = " << phi
                            << " is negative at t = " << s;
                        throw Error(msg.str());
                    }
                    if (phi > ctl.phi_sup * (1.0 + 1e-12)) {
                        std::ostringstream msg;
                        msg << "simulate: phi(" << y + 1 << "," << j + 1
                            << ") = " << phi << " at t = " << s
                            << " exceeds the dominating sup " << ctl.phi_sup;
                        throw ZetaViolatedError(msg.str());
                    }
                }
                width = q_ij * phi;
            }
            if (rem < width) {
                // accepted switch: close the drift segment at the jump time
                model.drift(x_frozen, y, coeff);
                if constexpr (Control::active) {
                    if (ctl.u) {
                        (*ctl.u)(seg_start, y, u_ctl);
                        model.diffusion(x_frozen, y, sigma);
                        coeff.noalias() += ctl.sqrt_eps_h * (sigma * u_ctl);
                    }
                }
                drift_accum += (s - seg_start) * coeff;
                seg_start = s;
                obs.on_jump(s, y, j);
                y = j;
            }
        }
        model.drift(x_frozen, y, coeff);
        if constexpr (Control::active) {
            if (ctl.u) {
                (*ctl.u)(seg_start, y, u_ctl);
                model.diffusion(x_frozen, y, sigma);
                coeff.noalias() += ctl.sqrt_eps_h * (sigma * u_ctl);
            }
        }
        drift_accum += (t1 - seg_start) * coeff;
        x += drift_accum;

        model.diffusion(x_frozen, y_step, sigma);
        if (!sigma.isZero(0.0)) {
            for (int g = 0; g < gauss_blocks; ++g) {
                const auto z = rng.gaussians(static_cast<std::uint64_t>(k),
                                             static_cast<std::uint32_t>(g));
                noise[2 * g] = z[0];
                if (2 * g + 1 < model.d) noise[2 * g + 1] = z[1];
            }
            x.noalias() += sqrt_eps_dt * (sigma * noise);
        }
        obs.on_knot(k + 1, t1, x, y);
    }
}

}  // namespace detail
}  // namespace slowfast
