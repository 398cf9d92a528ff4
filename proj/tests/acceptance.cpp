// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "slowfast/chain.hpp"
#include "slowfast/mc.hpp"
#include "slowfast/poisson.hpp"
#include "slowfast/rate.hpp"
#include "slowfast/simulate.hpp"

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

const std::map<std::string, double> kReference{
    {"q12", 1.0}, {"q21", 2.0}, {"b1", 1.0}, {"b2", -2.0}, {"sigma", 0.0}};

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

std::vector<Eigen::VectorXd> probe_grid(const RegimeModel& model, int n) {
    std::vector<Eigen::VectorXd> out;
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd x(model.d);
        for (int c = 0; c < model.d; ++c)
            x(c) = -2.0 + 4.0 * ((k + 17 * c) % n) / (n - 1);
        out.push_back(x);
    }
    return out;
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            if (!detail.str().empty()) detail << "; ";
            detail << what;
        }
    }
};

// ---------------------------------------------------------------- criterion 1
Outcome invariant_measure_suite() {
    Outcome out;
    std::mt19937_64 gen(20260810);
    std::uniform_int_distribution<int> pick_L(2, 8);
    double worst_residual = 0.0, worst_sum = 0.0, worst_min = 1.0;
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::MatrixXd Q = testing_oracles::random_generator(pick_L(gen), gen);
        const auto inv = invariant_measure(Q);
        worst_residual = std::max(worst_residual, inv.residual);
        worst_sum = std::max(worst_sum, std::abs(inv.mu.sum() - 1.0));
        worst_min = std::min(worst_min, inv.mu.minCoeff());
    }
    for (const auto& name : builtin_model_names()) {
        const auto model = build_builtin(name, {});
        for (const auto& x : probe_grid(model, 100)) {
            const auto inv = invariant_measure(model.generator_at(x));
            worst_residual = std::max(worst_residual, inv.residual);
            worst_sum = std::max(worst_sum, std::abs(inv.mu.sum() - 1.0));
            worst_min = std::min(worst_min, inv.mu.minCoeff());
        }
    }
    out.detail << "max ||mu Q||_inf = " << worst_residual
               << ", max |sum mu - 1| = " << worst_sum
               << ", min mass = " << worst_min;
    out.require(worst_residual < 1e-10, "stationarity residual above 1e-10");
    out.require(worst_sum <= 1e-12, "mass normalization off by more than 1e-12");
    out.require(worst_min > 0.0, "non-positive stationary mass");
    return out;
}

// ---------------------------------------------------------------- criterion 2
Outcome poisson_suite() {
    Outcome out;
    std::mt19937_64 gen(4096);
    std::uniform_int_distribution<int> pick_L(2, 8);
    double worst_residual = 0.0, worst_centering = 0.0;

    const auto check_model = [&](const RegimeModel& model, const Eigen::VectorXd& x) {
        const auto sol = solve_poisson(model, x);
        worst_residual = std::max(worst_residual, sol.residual);
        worst_centering = std::max(worst_centering, sol.centering);
    };
    for (int rep = 0; rep < 200; ++rep) {
        const auto model = testing_oracles::random_model(pick_L(gen), 1 + rep % 3, gen);
        check_model(model, Eigen::VectorXd::Zero(model.d));
    }
    for (const auto& name : builtin_model_names()) {
        const auto model = build_builtin(name, {});
        for (const auto& x : probe_grid(model, 100)) check_model(model, x);
    }

    const auto reference = build_builtin("two-state-constant", kReference);
    const auto hand = solve_poisson(reference, scalar(0.0));
    out.require(std::abs(hand.phi(0, 0) - 1.0 / 3.0) < 1e-12 &&
                    std::abs(hand.phi(1, 0) + 2.0 / 3.0) < 1e-12,
                "two-state hand values missed");

    double worst_quadrature = 0.0;
    std::uniform_int_distribution<int> small_L(3, 5);
    for (int rep = 0; rep < 25; ++rep) {
        const auto model = testing_oracles::random_model(small_L(gen), 1 + rep % 3, gen);
        const Eigen::VectorXd x = Eigen::VectorXd::Zero(model.d);
        const auto sol = solve_poisson(model, x);
        Eigen::MatrixXd b(model.L, model.d);
        for (int i = 0; i < model.L; ++i) b.row(i) = model.drift_at(x, i);
        const Eigen::MatrixXd btilde =
            b - Eigen::VectorXd::Ones(model.L) * sol.bbar.transpose();
        const Eigen::MatrixXd ref =
            testing_oracles::quadrature_phi(model.generator_at(x), btilde);
        worst_quadrature =
            std::max(worst_quadrature, (sol.phi - ref).cwiseAbs().maxCoeff());
    }
    out.detail << "max residual = " << worst_residual
               << ", max centering = " << worst_centering
               << ", max quadrature gap = " << worst_quadrature;
    out.require(worst_residual < 1e-10, "corrector residual above 1e-10");
    out.require(worst_centering < 1e-10, "centering above 1e-10");
    out.require(worst_quadrature < 1e-6, "semigroup quadrature gap above 1e-6");
    return out;
}

// ---------------------------------------------------------------- criterion 3
Outcome rate_oracle_suite() {
    Outcome out;
    std::mt19937_64 gen(31415);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick_L(2, 5);
    std::uniform_int_distribution<int> pick_d(1, 3);
    double worst_gap = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto model = testing_oracles::random_model(pick_L(gen), pick_d(gen), gen);
        const Eigen::VectorXd x = Eigen::VectorXd::Zero(model.d);
        Eigen::VectorXd v(model.d);
        for (int k = 0; k < model.d; ++k) v(k) = normal(gen);
        const double closed = pointwise_rate(model, x, v).cost;
        const double oracle = pointwise_rate_qp_oracle(model, x, v, 16);
        worst_gap = std::max(worst_gap,
                             std::abs(closed - oracle) / (1.0 + std::abs(oracle)));
    }
    const auto reference = build_builtin("two-state-constant", kReference);
    const double ref_cost = pointwise_rate(reference, scalar(0.0), scalar(1.0)).cost;
    out.detail << "max relative gap = " << worst_gap
               << ", reference cost = " << ref_cost;
    out.require(worst_gap <= 1e-6, "closed form vs oracle above 1e-6 relative");
    out.require(std::abs(ref_cost - 0.375) <= 1e-9, "reference 3/8 missed");
    return out;
}

// ---------------------------------------------------------------- criterion 4
Outcome lq_optimality() {
    Outcome out;
    const auto model = build_builtin("two-state-constant", kReference);
    const double grid_dt = 1.0 / 256.0;
    const auto avg = solve_averaged(model, scalar(0.0), 1.0, grid_dt);
    const auto [value, best_path] = min_rate_to_target(model, avg, scalar(1.0), 1.0, 256);
    out.detail << "min value = " << value;
    out.require(std::abs(value - 0.375) <= 1e-3 * 0.375,
                "min value misses 0.375 beyond 1e-3 relative");

    std::mt19937_64 gen(2222);
    std::normal_distribution<double> normal(0.0, 0.35);
    double closest = 1e300;
    int violations = 0;
    for (int rep = 0; rep < 20; ++rep) {
        Eigen::MatrixXd eta(avg.times.size(), 1);
        const double a1 = normal(gen), a2 = normal(gen), a3 = normal(gen);
        for (Eigen::Index k = 0; k < avg.times.size(); ++k) {
            const double t = avg.times(k);
            eta(k, 0) = t + a1 * std::sin(M_PI * t) + a2 * std::sin(2 * M_PI * t) +
                        a3 * std::sin(3 * M_PI * t);
        }
        const double cost = rate_functional(model, avg, eta).value;
        if (value > cost + 1e-9) ++violations;
        closest = std::min(closest, cost);
    }
    out.detail << ", closest hand path = " << closest;
    out.require(violations == 0, "a hand path undercut the optimum");
    return out;
}

// ---------------------------------------------------------------- criterion 5
Outcome averaging_scaling() {
    Outcome out;
    const auto model = build_builtin("two-state-tanh", {});
    const int seeds = 100;
    const auto mean_sup = [&](double eps) {
        const double dt = default_dt(eps);
        const auto avg = solve_averaged(model, scalar(0.3), 1.0, dt);
        std::vector<double> sup(seeds);
        detail::parallel_paths(seeds, 0, [&](std::int64_t s) {
            const auto path =
                simulate_coupled(model, eps, scalar(0.3), 0, 1.0, dt, 77001,
                                 static_cast<std::uint64_t>(s));
            sup[static_cast<std::size_t>(s)] =
                (path.x - avg.x).rowwise().norm().maxCoeff();
        });
        double total = 0.0;
        for (const double v : sup) total += v;
        return total / seeds;
    };
    for (const double eps : {4e-3, 1e-3}) {
        const double ratio = mean_sup(eps) / mean_sup(eps / 4.0);
        out.detail << "ratio(eps=" << eps << ") = " << ratio << "  ";
        out.require(ratio >= 1.4 && ratio <= 2.8, "ratio outside [1.4, 2.8]");
    }
    return out;
}

// ---------------------------------------------------------------- criterion 6
Outcome clt_covariance() {
    Outcome out;
    const auto model = build_builtin("two-state-constant", kReference);
    const double eps = 1e-3;
    const auto check = clt_check(model, eps, scalar(0.0), 0, 1.0,
                                 default_dt(eps), 10000, 90210);
    out.detail << "empirical = " << check.empirical_cov(0, 0)
               << ", predicted = " << check.predicted_cov(0, 0)
               << ", rel dev = " << check.max_rel_dev;
    out.require(std::abs(check.predicted_cov(0, 0) - 4.0 / 3.0) < 1e-9,
                "Lyapunov prediction is not 4/3");
    out.require(check.max_rel_dev <= 0.10, "empirical variance off by more than 10%");
    return out;
}

// ---------------------------------------------------------------- criterion 7
Outcome mdp_decay_trend() {
    Outcome out;
    const auto model = build_builtin("two-state-constant", kReference);
    const std::vector<double> grid{0.08, 0.04, 0.02, 0.01};
    const auto scan = mdp_scan(model, grid, 0.3, 1.0, 1.0, DtRule{},
                               TailEvent::kSup, 1000000, 20250810, 0);

    const double target = 0.375;
    std::vector<double> dev, se;
    for (const auto& est : scan) {
        dev.push_back(std::abs(est.decay_rate - target));
        se.push_back(est.std_err / (est.p_hat * est.h_eps * est.h_eps));
        out.detail << "eps=" << est.eps << ": p=" << est.p_hat
                   << " decay=" << est.decay_rate << "  ";
    }
    out.require(dev.back() <= 0.30 * target,
                "decay at eps=0.01 outside 30% of 0.375");
    int inversions = 0;
    bool inversion_too_big = false;
    for (std::size_t k = 0; k + 1 < dev.size(); ++k) {
        if (dev[k + 1] > dev[k]) {
            ++inversions;
            if (dev[k + 1] - dev[k] > 2.0 * (se[k] + se[k + 1]))
                inversion_too_big = true;
        }
    }
    out.require(inversions <= 1, "more than one trend inversion");
    out.require(!inversion_too_big, "trend inversion beyond combined errors");
    return out;
}

// ---------------------------------------------------------------- criterion 8
Outcome controlled_tracking() {
    Outcome out;
    const auto model = build_builtin("two-state-constant", kReference);
    const JumpControl c_star = [](double, int from, int) {
        return from == 0 ? -0.75 : 0.75;
    };
    const int seeds = 100;
    const auto mean_err = [&](double eps) {
        const double h_eps = std::pow(eps, -0.3);
        const double dt = default_dt(eps);
        const auto avg = solve_averaged(model, scalar(0.0), 1.0, dt);
        std::vector<double> err(seeds);
        detail::parallel_paths(seeds, 0, [&](std::int64_t s) {
            const auto path = simulate_controlled(
                model, eps, h_eps, scalar(0.0), 0, 1.0, dt, 606060,
                DriftControl{}, c_star, static_cast<std::uint64_t>(s));
            const auto dev_path = deviation_path(path, avg, eps, h_eps);
            double worst = 0.0;
            for (Eigen::Index k = 0; k < dev_path.times.size(); ++k)
                worst = std::max(
                    worst, std::abs(dev_path.eta(k, 0) - dev_path.times(k)));
            err[static_cast<std::size_t>(s)] = worst;
        });
        double total = 0.0;
        for (const double v : err) total += v;
        return total / seeds;
    };
    const double coarse = mean_err(0.04);
    const double fine = mean_err(0.01);
    out.detail << "mean sup error: eps=0.04 -> " << coarse
               << ", eps=0.01 -> " << fine;
    out.require(fine < coarse, "tracking error did not shrink with eps");
    return out;
}

// ---------------------------------------------------------------- criterion 9
Outcome cli_determinism() {
    Outcome out;
    const fs::path dir =
        fs::temp_directory_path() / "slowfast_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream cfg(dir / "config.toml");
        cfg << "x0 = [0.0]\ny0 = 1\nT = 1.0\ndt = 0.001\n"
               "[model]\nname = \"two-state-constant\"\n"
               "q12 = 1.0\nq21 = 2.0\nb1 = 1.0\nb2 = -2.0\nsigma = 0.0\n"
               "[analyze]\nknots = 7\n"
               "[simulate]\neps = 0.01\nseed = 42\n"
               "[mc]\neps_grid = [0.08, 0.04]\nh_exponent = 0.3\na = 1.0\n"
               "event = \"sup\"\nn_paths = 20000\nseed = 9\ntarget_knots = 64\n";
    }
    const auto run = [&](const std::string& cmd, const std::string& sub) {
        const std::string full = std::string(SLOWFAST_CLI_BIN) + " " + cmd +
                                 " --config " + (dir / "config.toml").string() +
                                 " --out " + (dir / sub).string() +
                                 " > /dev/null 2>&1";
        return std::system(full.c_str()) == 0;
    };
    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        return buf.str();
    };
    for (const std::string cmd : {"analyze", "simulate", "mc"}) {
        out.require(run(cmd + " --workers 1", cmd + "_w1"), cmd + " (workers 1) failed");
        out.require(run(cmd + " --workers 8", cmd + "_w8"), cmd + " (workers 8) failed");
        const std::string file =
            cmd == "analyze" ? "analyze.csv" : (cmd == "simulate" ? "simulate.csv" : "mc.csv");
        const std::string w1 = slurp(dir / (cmd + "_w1") / file);
        const std::string w8 = slurp(dir / (cmd + "_w8") / file);
        out.require(!w1.empty() && w1 == w8, cmd + " output differs across workers");
    }
    // and a straight rerun is byte-identical too
    out.require(run("mc --workers 8", "mc_again"), "mc rerun failed");
    out.require(slurp(dir / "mc_w8" / "mc.csv") == slurp(dir / "mc_again" / "mc.csv"),
                "mc rerun differs");
    fs::remove_all(dir);
    return out;
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::vector<Criterion> criteria = {
        {1, "invariant-measure suite", 5.0, invariant_measure_suite},
        {2, "poisson-equation suite", 10.0, poisson_suite},
        {3, "rate-oracle suite", 30.0, rate_oracle_suite},
        {4, "LQ optimality", 10.0, lq_optimality},
        {5, "averaging scaling", 120.0, averaging_scaling},
        {6, "CLT-scale covariance", 120.0, clt_covariance},
        {7, "MDP decay trend", 900.0 * std::max(1.0, 8.0 / hw), mdp_decay_trend},
        {8, "controlled tracking", 180.0, controlled_tracking},
        {9, "determinism", 600.0, cli_determinism},
    };

    bool all_pass = true;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail << "exception: " << e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        if (elapsed > criterion.budget_seconds) {
            outcome.pass = false;
            outcome.detail << "; over time budget";
        }
        all_pass = all_pass && outcome.pass;
        std::printf("[%s] criterion %d: %s (%s) [%.1f s]\n",
                    outcome.pass ? "PASS" : "FAIL", criterion.id, criterion.name,
                    outcome.detail.str().c_str(), elapsed);
        std::fflush(stdout);
    }
    return all_pass ? 0 : 1;
}
