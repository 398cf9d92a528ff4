#include "slowfast/rate.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <limits>

#include "slowfast/chain.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/poisson.hpp"

namespace slowfast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Everything the pointwise problem needs at one state.
struct LocalProblem {
    Eigen::VectorXd mu;
    Eigen::MatrixXd Q;
    Eigen::MatrixXd phi;  // L x d
    std::vector<Eigen::MatrixXd> sigma;
    EffectiveCovariance cov;
};

LocalProblem local_problem(const RegimeModel& model, const Eigen::VectorXd& x) {
    LocalProblem lp;
    lp.Q = model.generator_at(x);
    lp.mu = invariant_measure(lp.Q).mu;
    lp.phi = solve_poisson(model, x).phi;
    lp.sigma.reserve(static_cast<std::size_t>(model.L));
    for (int i = 0; i < model.L; ++i) lp.sigma.push_back(model.diffusion_at(x, i));
    lp.cov = effective_covariance(model, x);
    return lp;
}

Eigen::MatrixXd pseudo_inverse_psd(const Eigen::MatrixXd& G, int* rank = nullptr) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const Eigen::VectorXd& vals = eig.eigenvalues();
    const double cutoff =
        std::max(1e-10 * vals.cwiseAbs().maxCoeff(), 1e-28);
    Eigen::VectorXd inv_vals = Eigen::VectorXd::Zero(G.rows());
    int r = 0;
    for (int k = 0; k < G.rows(); ++k) {
        if (vals(k) > cutoff && vals(k) > 0.0) {
            inv_vals(k) = 1.0 / vals(k);
            ++r;
        }
    }
    if (rank) *rank = r;
    return eig.eigenvectors() * inv_vals.asDiagonal() *
           eig.eigenvectors().transpose();
}

/// Linear interpolation of a grid path at time t.
Eigen::VectorXd interp_path(const AveragedPath& path, double t) {
    const Eigen::Index n = path.times.size() - 1;
    const double t0 = path.times(0);
    const double tn = path.times(n);
    if (t <= t0) return path.x.row(0);
    if (t >= tn) return path.x.row(n);
    const double step = (tn - t0) / static_cast<double>(n);
    const auto k = std::min<Eigen::Index>(
        n - 1, static_cast<Eigen::Index>(std::floor((t - t0) / step)));
    const double w = (t - path.times(k)) / (path.times(k + 1) - path.times(k));
    return (1.0 - w) * path.x.row(k) + w * path.x.row(k + 1);
}

}  // namespace

PointwiseRate pointwise_rate(const RegimeModel& model, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& v) {
    const LocalProblem lp = local_problem(model, x);

    PointwiseRate out;
    out.x = x;
    out.v = v;
    out.u_star.setZero(model.L, model.d);

    const Eigen::VectorXd multiplier = lp.cov.pinv * v;
    const double gap = (lp.cov.lambda * multiplier - v).norm();
    if (gap > 1e-8 * (1.0 + v.norm())) {
        out.feasible = false;
        out.cost = kInf;
        return out;
    }

    out.feasible = true;
    out.cost = 0.5 * v.dot(multiplier);
    for (int j = 0; j < model.L; ++j)
        out.u_star.row(j) = (lp.sigma[static_cast<std::size_t>(j)].transpose() *
                             multiplier)
                                .transpose();
    for (const auto& [i, j] : model.support) {
        const Eigen::VectorXd dphi = lp.phi.row(j) - lp.phi.row(i);
        out.c_star[{i, j}] = dphi.dot(multiplier);
    }
    return out;
}

double pointwise_rate_qp_oracle(const RegimeModel& model,
                                const Eigen::VectorXd& x,
                                const Eigen::VectorXd& v, int z_grid_size) {
    if (z_grid_size < 2) throw Error("qp oracle: z_grid_size must be >= 2");
    const LocalProblem lp = local_problem(model, x);
    const int d = model.d;
    const int L = model.L;
    const double cell = model.zeta / static_cast<double>(z_grid_size);

    // Decision vector: u_1..u_L (d each), then one density value per support
    // pair per cell overlapping [0, q_ij(x)]. Cost and constraint weights of a
    // cell both carry its overlap measure.
    struct Cell {
        int pair;
        double weight;  // mu_i * overlap
    };
    std::vector<Cell> cells;
    std::vector<Eigen::VectorXd> pair_dirs;  // mu_i q? no: direction Phi_j - Phi_i
    pair_dirs.reserve(model.support.size());
    for (std::size_t p = 0; p < model.support.size(); ++p) {
        const auto& [i, j] = model.support[p];
        pair_dirs.emplace_back(lp.phi.row(j) - lp.phi.row(i));
        const double q = lp.Q(i, j);
        for (int c = 0; c < z_grid_size; ++c) {
            const double lo = cell * static_cast<double>(c);
            const double overlap = std::clamp(q - lo, 0.0, cell);
            if (overlap > 0.0)
                cells.push_back({static_cast<int>(p), lp.mu(i) * overlap});
        }
    }

    const int n = L * d + static_cast<int>(cells.size());
    Eigen::VectorXd h_diag(n);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, n);
    for (int j = 0; j < L; ++j) {
        h_diag.segment(j * d, d).setConstant(std::max(lp.mu(j), 1e-300));
        A.block(0, j * d, d, d) = lp.mu(j) * lp.sigma[static_cast<std::size_t>(j)];
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const int col = L * d + static_cast<int>(c);
        h_diag(col) = cells[c].weight;
        A.col(col) = cells[c].weight * pair_dirs[static_cast<std::size_t>(cells[c].pair)];
    }

    // KKT system of min (1/2) x^T H x s.t. A x = v.
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + d, n + d);
    kkt.topLeftCorner(n, n) = h_diag.asDiagonal();
    kkt.topRightCorner(n, d) = A.transpose();
    kkt.bottomLeftCorner(d, n) = A;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + d);
    rhs.tail(d) = v;

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
    const Eigen::VectorXd z = cod.solve(rhs);
    const Eigen::VectorXd sol = z.head(n);

    const double constraint_gap = (A * sol - v).norm();
    if (constraint_gap > 1e-6 * (1.0 + v.norm())) {
        // Distinguish a genuinely unreachable v from a solver failure.
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> range(A);
        const Eigen::VectorXd proj = A * range.solve(v);
        if ((proj - v).norm() <= 1e-8 * (1.0 + v.norm()))
            throw NumericalError(
                "qp oracle: KKT system singular beyond tolerance although v is "
                "in range");
        return kInf;
    }
    return 0.5 * sol.dot(h_diag.asDiagonal() * sol);
}

RateEvaluation rate_functional(const RegimeModel& model,
                               const AveragedPath& averaged,
                               const Eigen::MatrixXd& eta) {
    const Eigen::Index n_knots = averaged.times.size();
    if (eta.rows() != n_knots || eta.cols() != model.d)
        throw Error("rate_functional: eta grid mismatch");
    if (n_knots < 3)
        throw Error("rate_functional: need at least 3 grid points");
    if (eta.row(0).cwiseAbs().maxCoeff() > 1e-12)
        throw Error("rate_functional: eta(0) must be zero");
    const double dt = averaged.times(1) - averaged.times(0);

    RateEvaluation out;
    out.grid = averaged.times;
    out.per_knot.reserve(static_cast<std::size_t>(n_knots));

    const Eigen::Index last = n_knots - 1;
    for (Eigen::Index k = 0; k < n_knots; ++k) {
        Eigen::VectorXd deta(model.d);
        if (k == 0)
            deta = (-3.0 * eta.row(0) + 4.0 * eta.row(1) - eta.row(2)) / (2.0 * dt);
        else if (k == last)
            deta = (3.0 * eta.row(last) - 4.0 * eta.row(last - 1) +
                    eta.row(last - 2)) /
                   (2.0 * dt);
        else
            deta = (eta.row(k + 1) - eta.row(k - 1)) / (2.0 * dt);

        const Eigen::VectorXd xbar = averaged.x.row(k);
        const Eigen::MatrixXd jac =
            jacobian_bbar(model, xbar, default_jacobian_step(xbar));
        const Eigen::VectorXd v = deta - jac * eta.row(k).transpose();

        out.per_knot.push_back(pointwise_rate(model, xbar, v));
        if (!out.per_knot.back().feasible) {
            out.value = kInf;
            out.first_infeasible_time = averaged.times(k);
            return out;
        }
    }

    double total = 0.0;
    for (Eigen::Index k = 0; k + 1 < n_knots; ++k)
        total += 0.5 * dt *
                 (out.per_knot[static_cast<std::size_t>(k)].cost +
                  out.per_knot[static_cast<std::size_t>(k + 1)].cost);
    out.value = total;
    return out;
}

std::pair<double, Eigen::MatrixXd> min_rate_to_target(
    const RegimeModel& model, const AveragedPath& averaged,
    const Eigen::VectorXd& a, double T, int n_knots) {
    if (n_knots < 8) throw Error("min_rate_to_target: n_knots must be >= 8");
    if (a.size() != model.d) throw Error("min_rate_to_target: target dimension mismatch");
    const int n = n_knots;
    const double dt = T / static_cast<double>(n);

    // Stage data along the averaged path.
    std::vector<Eigen::MatrixXd> lambda(static_cast<std::size_t>(n));
    std::vector<Eigen::MatrixXd> step_mat(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = dt * static_cast<double>(k);
        const Eigen::VectorXd xbar = interp_path(averaged, t);
        lambda[static_cast<std::size_t>(k)] =
            effective_covariance(model, xbar).lambda;
        step_mat[static_cast<std::size_t>(k)] =
            Eigen::MatrixXd::Identity(model.d, model.d) +
            dt * jacobian_bbar(model, xbar, default_jacobian_step(xbar));
    }

    // KKT solution of the discretized problem after eliminating the state
    // recursion: v_k = Lambda_k B_k^T m with B_k the transition product from
    // step k+1 to N, and m solving the reachability Gramian equation.
    std::vector<Eigen::MatrixXd> transition(static_cast<std::size_t>(n));
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(model.d, model.d);
    for (int k = n - 1; k >= 0; --k) {
        transition[static_cast<std::size_t>(k)] = acc;
        acc = acc * step_mat[static_cast<std::size_t>(k)];
    }
    Eigen::MatrixXd gramian = Eigen::MatrixXd::Zero(model.d, model.d);
    for (int k = 0; k < n; ++k) {
        const auto& B = transition[static_cast<std::size_t>(k)];
        gramian.noalias() += dt * B * lambda[static_cast<std::size_t>(k)] * B.transpose();
    }
    gramian = 0.5 * (gramian + gramian.transpose()).eval();

    const Eigen::MatrixXd gram_pinv = pseudo_inverse_psd(gramian);
    const Eigen::VectorXd m = gram_pinv * a;
    if ((gramian * m - a).norm() > 1e-8 * (1.0 + a.norm()))
        throw InfeasibleError(
            "min_rate_to_target: target outside the reachable subspace");

    Eigen::MatrixXd path(n + 1, model.d);
    path.row(0).setZero();
    double value = 0.5 * a.dot(m);
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd v = lambda[static_cast<std::size_t>(k)] *
                                  (transition[static_cast<std::size_t>(k)].transpose() * m);
        path.row(k + 1) =
            (step_mat[static_cast<std::size_t>(k)] * path.row(k).transpose() +
             dt * v)
                .transpose();
    }
    return {value, path};
}

}  // namespace slowfast
