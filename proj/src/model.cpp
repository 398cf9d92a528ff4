#include "slowfast/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "slowfast/chain.hpp"
#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

/// Parameter map with defaults; rejects unknown keys on finish().
class Params {
public:
    Params(std::string model, const std::map<std::string, double>& p)
        : model_(std::move(model)), params_(p) {}

    double get(const std::string& key, double def) {
        used_.insert(key);
        const auto it = params_.find(key);
        return it == params_.end() ? def : it->second;
    }

    int get_int(const std::string& key, int def) {
        const double v = get(key, static_cast<double>(def));
        if (std::abs(v - std::round(v)) > 1e-9)
            fail(key, "must be an integer");
        return static_cast<int>(std::llround(v));
    }

    double get_positive(const std::string& key, double def) {
        const double v = get(key, def);
        if (!(v > 0.0)) fail(key, "must be positive");
        return v;
    }

    void fail(const std::string& key, const std::string& why) const {
        throw ConfigError("model " + model_ + ": parameter '" + key + "' " + why);
    }

    void finish() const {
        for (const auto& [key, value] : params_) {
            (void)value;
            if (!used_.count(key))
                throw ConfigError("model " + model_ + ": unknown parameter '" +
                                  key + "'");
        }
    }

private:
    std::string model_;
    std::map<std::string, double> params_;
    std::set<std::string> used_;
};

bool strongly_connected(int L, const std::vector<std::pair<int, int>>& edges) {
    if (L == 1) return true;
    const auto reach = [&](bool forward) {
        std::vector<char> seen(static_cast<std::size_t>(L), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            for (const auto& [i, j] : edges) {
                const int from = forward ? i : j;
                const int to = forward ? j : i;
                if (from == node && !seen[static_cast<std::size_t>(to)]) {
                    seen[static_cast<std::size_t>(to)] = 1;
                    stack.push_back(to);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    };
    return reach(true) && reach(false);
}

void require_connected_support(const RegimeModel& model) {
    if (!strongly_connected(model.L, model.support))
        throw ConfigError("model " + model.name +
                          ": parameter out of range (support graph is not "
                          "strongly connected)");
}

/// tanh-modulated rate alpha + beta * tanh(x_1); validated alpha > |beta|.
struct TanhRate {
    double alpha = 0.0;
    double beta = 0.0;
    double operator()(double x1) const { return alpha + beta * std::tanh(x1); }
    double sup() const { return alpha + std::abs(beta); }
};

TanhRate tanh_rate(Params& p, const std::string& alpha_key,
                   const std::string& beta_key, double alpha_def,
                   double beta_def) {
    TanhRate r{p.get(alpha_key, alpha_def), p.get(beta_key, beta_def)};
    if (r.alpha < 0.0) p.fail(alpha_key, "must be non-negative");
    if (r.alpha > 0.0 && !(r.alpha > std::abs(r.beta)))
        p.fail(beta_key, "must satisfy |beta| < alpha so rates stay positive");
    if (r.alpha == 0.0 && r.beta != 0.0)
        p.fail(beta_key, "must be zero when the base rate is zero");
    return r;
}

RegimeModel two_state_constant(const std::map<std::string, double>& params) {
    Params p("two-state-constant", params);
    const double q12 = p.get_positive("q12", 1.0);
    const double q21 = p.get_positive("q21", 2.0);
    const double b1 = p.get("b1", 1.0);
    const double b2 = p.get("b2", -2.0);
    const double sigma = p.get("sigma", 0.0);
    const int d = p.get_int("d", 1);
    if (d < 1) p.fail("d", "must be >= 1");
    p.finish();

    RegimeModel m;
    m.name = "two-state-constant";
    m.d = d;
    m.L = 2;
    m.zeta = std::max(q12, q21) + 1.0;
    m.support = {{0, 1}, {1, 0}};
    m.drift = [b1, b2](const Eigen::Ref<const Eigen::VectorXd>&, int i,
                       Eigen::Ref<Eigen::VectorXd> out) {
        out.setConstant(i == 0 ? b1 : b2);
    };
    m.diffusion = [sigma](const Eigen::Ref<const Eigen::VectorXd>&, int,
                          Eigen::Ref<Eigen::MatrixXd> out) {
        out.setZero();
        out.diagonal().setConstant(sigma);
    };
    m.generator = [q12, q21](const Eigen::Ref<const Eigen::VectorXd>&,
                             Eigen::Ref<Eigen::MatrixXd> out) {
        out(0, 0) = -q12;
        out(0, 1) = q12;
        out(1, 0) = q21;
        out(1, 1) = -q21;
    };
    return m;
}

RegimeModel two_state_tanh(const std::map<std::string, double>& params) {
    Params p("two-state-tanh", params);
    const TanhRate r12 = tanh_rate(p, "alpha12", "beta12", 1.0, 0.5);
    const TanhRate r21 = tanh_rate(p, "alpha21", "beta21", 2.0, -0.5);
    const double b1 = p.get("b1", 1.0);
    const double b2 = p.get("b2", -1.0);
    const double kappa = p.get("kappa", 0.5);
    const double s1 = p.get("sigma1", 0.3);
    const double s2 = p.get("sigma2", 0.6);
    const int d = p.get_int("d", 1);
    if (d < 1) p.fail("d", "must be >= 1");
    if (kappa < 0.0) p.fail("kappa", "must be non-negative");
    p.finish();

    RegimeModel m;
    m.name = "two-state-tanh";
    m.d = d;
    m.L = 2;
    m.zeta = std::max(r12.sup(), r21.sup()) + 1.0;
    if (r12.alpha > 0.0) m.support.emplace_back(0, 1);
    if (r21.alpha > 0.0) m.support.emplace_back(1, 0);
    m.drift = [b1, b2, kappa](const Eigen::Ref<const Eigen::VectorXd>& x, int i,
                              Eigen::Ref<Eigen::VectorXd> out) {
        out.setConstant(i == 0 ? b1 : b2);
        out -= kappa * x;
    };
    m.diffusion = [s1, s2](const Eigen::Ref<const Eigen::VectorXd>&, int i,
                           Eigen::Ref<Eigen::MatrixXd> out) {
        out.setZero();
        out.diagonal().setConstant(i == 0 ? s1 : s2);
    };
    m.generator = [r12, r21](const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::MatrixXd> out) {
        const double q12 = r12(x(0));
        const double q21 = r21(x(0));
        out(0, 0) = -q12;
        out(0, 1) = q12;
        out(1, 0) = q21;
        out(1, 1) = -q21;
    };
    require_connected_support(m);
    return m;
}

RegimeModel three_state_tanh(const std::map<std::string, double>& params) {
    Params p("three-state-tanh", params);
    std::array<std::array<TanhRate, 3>, 3> rates;
    const double alpha_def[3][3] = {{0.0, 1.0, 0.6}, {1.5, 0.0, 0.8}, {0.7, 1.2, 0.0}};
    const double beta_def[3][3] = {{0.0, 0.3, -0.15}, {0.4, 0.0, 0.2}, {-0.2, 0.35, 0.0}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const std::string suffix =
                std::to_string(i + 1) + std::to_string(j + 1);
            rates[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                tanh_rate(p, "alpha" + suffix, "beta" + suffix,
                          alpha_def[i][j], beta_def[i][j]);
        }
    }
    const double b1 = p.get("b1", 1.0);
    const double b2 = p.get("b2", 0.0);
    const double b3 = p.get("b3", -1.0);
    const double kappa = p.get("kappa", 0.4);
    const double s1 = p.get("sigma1", 0.2);
    const double s2 = p.get("sigma2", 0.4);
    const double s3 = p.get("sigma3", 0.3);
    const int d = p.get_int("d", 1);
    if (d < 1) p.fail("d", "must be >= 1");
    if (kappa < 0.0) p.fail("kappa", "must be non-negative");
    p.finish();

    RegimeModel m;
    m.name = "three-state-tanh";
    m.d = d;
    m.L = 3;
    double sup_q = 0.0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const auto& r =
                rates[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            if (r.alpha > 0.0) {
                m.support.emplace_back(i, j);
                sup_q = std::max(sup_q, r.sup());
            }
        }
    }
    m.zeta = sup_q + 1.0;
    m.drift = [b1, b2, b3, kappa](const Eigen::Ref<const Eigen::VectorXd>& x,
                                  int i, Eigen::Ref<Eigen::VectorXd> out) {
        out.setConstant(i == 0 ? b1 : (i == 1 ? b2 : b3));
        out -= kappa * x;
    };
    m.diffusion = [s1, s2, s3](const Eigen::Ref<const Eigen::VectorXd>&, int i,
                               Eigen::Ref<Eigen::MatrixXd> out) {
        out.setZero();
        out.diagonal().setConstant(i == 0 ? s1 : (i == 1 ? s2 : s3));
    };
    m.generator = [rates](const Eigen::Ref<const Eigen::VectorXd>& x,
                          Eigen::Ref<Eigen::MatrixXd> out) {
        const double x1 = x(0);
        for (int i = 0; i < 3; ++i) {
            double row = 0.0;
            for (int j = 0; j < 3; ++j) {
                if (i == j) continue;
                const double q =
                    rates[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)](x1);
                out(i, j) = q;
                row += q;
            }
            out(i, i) = -row;
        }
    };
    require_connected_support(m);
    return m;
}

RegimeModel linear_2d(const std::map<std::string, double>& params) {
    Params p("linear-2d", params);
    const double a1 = p.get_positive("a1", 1.0);
    const double a2 = p.get_positive("a2", 0.5);
    const double w = p.get("w", 0.8);
    const double c = p.get("c", 1.0);
    const TanhRate r12 = tanh_rate(p, "q12", "q12_amp", 1.0, 0.3);
    const TanhRate r21 = tanh_rate(p, "q21", "q21_amp", 1.5, -0.4);
    const double s1 = p.get("sigma1", 0.4);
    const double s1b = p.get("sigma1b", 0.2);
    const double s2 = p.get("sigma2", 0.3);
    const double s2b = p.get("sigma2b", 0.0);
    p.finish();

    Eigen::Matrix2d A1;
    A1 << -a1, w, -w, -a1;
    Eigen::Matrix2d A2;
    A2 << -a2, -w, w, -a2;
    const Eigen::Vector2d c1(c, 0.0);
    const Eigen::Vector2d c2(-c, 0.0);

    RegimeModel m;
    m.name = "linear-2d";
    m.d = 2;
    m.L = 2;
    m.zeta = std::max(r12.sup(), r21.sup()) + 1.0;
    if (r12.alpha > 0.0) m.support.emplace_back(0, 1);
    if (r21.alpha > 0.0) m.support.emplace_back(1, 0);
    m.drift = [A1, A2, c1, c2](const Eigen::Ref<const Eigen::VectorXd>& x,
                               int i, Eigen::Ref<Eigen::VectorXd> out) {
        if (i == 0)
            out = A1 * x + c1;
        else
            out = A2 * x + c2;
    };
    m.diffusion = [s1, s1b, s2, s2b](const Eigen::Ref<const Eigen::VectorXd>&,
                                     int i, Eigen::Ref<Eigen::MatrixXd> out) {
        out.setZero();
        if (i == 0) {
            out(0, 0) = s1;
            out(1, 1) = s1b;
        } else {
            out(0, 0) = s2;
            out(1, 1) = s2b;
        }
    };
    m.generator = [r12, r21](const Eigen::Ref<const Eigen::VectorXd>& x,
                             Eigen::Ref<Eigen::MatrixXd> out) {
        const double q12 = r12(x(0));
        const double q21 = r21(x(0));
        out(0, 0) = -q12;
        out(0, 1) = q12;
        out(1, 0) = q21;
        out(1, 1) = -q21;
    };
    require_connected_support(m);
    return m;
}

RegimeModel single_regime(const std::map<std::string, double>& params) {
    Params p("single-regime", params);
    const double b0 = p.get("b", 0.0);
    const double kappa = p.get("kappa", 0.0);
    const double sigma = p.get("sigma", 1.0);
    const int d = p.get_int("d", 1);
    if (d < 1) p.fail("d", "must be >= 1");
    if (kappa < 0.0) p.fail("kappa", "must be non-negative");
    p.finish();

    RegimeModel m;
    m.name = "single-regime";
    m.d = d;
    m.L = 1;
    m.zeta = 1.0;
    m.drift = [b0, kappa](const Eigen::Ref<const Eigen::VectorXd>& x, int,
                          Eigen::Ref<Eigen::VectorXd> out) {
        out.setConstant(b0);
        out -= kappa * x;
    };
    m.diffusion = [sigma](const Eigen::Ref<const Eigen::VectorXd>&, int,
                          Eigen::Ref<Eigen::MatrixXd> out) {
        out.setZero();
        out.diagonal().setConstant(sigma);
    };
    m.generator = [](const Eigen::Ref<const Eigen::VectorXd>&,
                     Eigen::Ref<Eigen::MatrixXd> out) { out.setZero(); };
    return m;
}

}  // namespace

std::vector<std::vector<int>> RegimeModel::targets_by_regime() const {
    std::vector<std::vector<int>> targets(static_cast<std::size_t>(L));
    for (const auto& [i, j] : support)
        targets[static_cast<std::size_t>(i)].push_back(j);
    for (auto& list : targets) std::sort(list.begin(), list.end());
    return targets;
}

std::vector<std::string> builtin_model_names() {
    return {"two-state-constant", "two-state-tanh", "three-state-tanh",
            "linear-2d", "single-regime"};
}

RegimeModel build_builtin(const std::string& name,
                          const std::map<std::string, double>& params) {
    if (name == "two-state-constant") return two_state_constant(params);
    if (name == "two-state-tanh") return two_state_tanh(params);
    if (name == "three-state-tanh") return three_state_tanh(params);
    if (name == "linear-2d") return linear_2d(params);
    if (name == "single-regime") return single_regime(params);
    throw ConfigError("unknown model name '" + name + "'");
}

ModelValidationReport validate_model(const RegimeModel& model,
                                     const std::vector<Eigen::VectorXd>& samples,
                                     double h_fd) {
    if (samples.empty()) throw Error("validate_model: samples must be non-empty");
    if (!(h_fd > 0.0)) throw Error("validate_model: h_fd must be positive");

    ModelValidationReport report;
    report.irreducible_everywhere = true;
    report.min_invariant_mass = std::numeric_limits<double>::infinity();
    report.rate_bounds.upper = 0.0;
    report.rate_bounds.lower = model.support.empty()
                                   ? std::numeric_limits<double>::infinity()
                                   : std::numeric_limits<double>::infinity();

    Eigen::MatrixXd Q(model.L, model.L);
    Eigen::MatrixXd Qp(model.L, model.L), Qm(model.L, model.L);
    Eigen::VectorXd bp(model.d), bm(model.d);
    Eigen::MatrixXd sp(model.d, model.d), sm(model.d, model.d);

    bool solved_any = false;
    for (const auto& x : samples) {
        model.generator(x, Q);
        for (int i = 0; i < model.L; ++i) {
            const double row_sum = Q.row(i).sum();
            if (std::abs(row_sum) > 1e-10) {
                std::ostringstream msg;
                msg << "validate_model: generator row " << i + 1 << " sums to "
                    << row_sum << " at x = [" << x.transpose() << "]";
                throw Error(msg.str());
            }
            for (int j = 0; j < model.L; ++j) {
                if (i == j) continue;
                if (Q(i, j) < -1e-12) {
                    std::ostringstream msg;
                    msg << "validate_model: negative rate q(" << i + 1 << ","
                        << j + 1 << ") = " << Q(i, j) << " at x = ["
                        << x.transpose() << "]";
                    throw Error(msg.str());
                }
                report.rate_bounds.upper =
                    std::max(report.rate_bounds.upper, Q(i, j));
            }
        }
        for (const auto& [i, j] : model.support)
            report.rate_bounds.lower = std::min(report.rate_bounds.lower, Q(i, j));

        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < model.L; ++i)
            for (int j = 0; j < model.L; ++j)
                if (i != j && Q(i, j) > 1e-12) edges.emplace_back(i, j);
        if (!strongly_connected(model.L, edges))
            report.irreducible_everywhere = false;

        try {
            const auto inv = invariant_measure(Q);
            report.min_invariant_mass =
                std::min(report.min_invariant_mass, inv.mu.minCoeff());
            solved_any = true;
        } catch (const NotIrreducibleError&) {
            report.irreducible_everywhere = false;
        }

        // central difference quotients per coordinate
        Eigen::VectorXd xp = x, xm = x;
        for (int k = 0; k < model.d; ++k) {
            xp(k) = x(k) + h_fd;
            xm(k) = x(k) - h_fd;
            for (int i = 0; i < model.L; ++i) {
                model.drift(xp, i, bp);
                model.drift(xm, i, bm);
                report.lipschitz_estimates.drift =
                    std::max(report.lipschitz_estimates.drift,
                             (bp - bm).norm() / (2.0 * h_fd));
                model.diffusion(xp, i, sp);
                model.diffusion(xm, i, sm);
                report.lipschitz_estimates.diffusion =
                    std::max(report.lipschitz_estimates.diffusion,
                             (sp - sm).norm() / (2.0 * h_fd));
            }
            model.generator(xp, Qp);
            model.generator(xm, Qm);
            double l1_sup = 0.0;
            for (int i = 0; i < model.L; ++i) {
                double row = 0.0;
                for (int j = 0; j < model.L; ++j)
                    if (i != j) row += std::abs(Qp(i, j) - Qm(i, j));
                l1_sup = std::max(l1_sup, row);
            }
            report.lipschitz_estimates.generator =
                std::max(report.lipschitz_estimates.generator,
                         l1_sup / (2.0 * h_fd));
            xp(k) = x(k);
            xm(k) = x(k);
        }
    }
    if (!solved_any) report.min_invariant_mass = 0.0;
    return report;
}

}  // namespace slowfast
