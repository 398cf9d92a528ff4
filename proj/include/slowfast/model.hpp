#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace slowfast {

/// Coefficient bundle of one slow-fast system.
///
/// Evaluators are pure (same inputs give bit-identical outputs), hold no
/// mutable state, and fill caller-owned storage so the simulation hot loop
/// never allocates. Regimes are 0-based in this API; CSV output and config
/// files use 1-based labels.
struct RegimeModel {
    using DriftFn =
        std::function<void(const Eigen::Ref<const Eigen::VectorXd>&, int,
                           Eigen::Ref<Eigen::VectorXd>)>;
    using DiffusionFn =
        std::function<void(const Eigen::Ref<const Eigen::VectorXd>&, int,
                           Eigen::Ref<Eigen::MatrixXd>)>;
    using GeneratorFn = std::function<void(const Eigen::Ref<const Eigen::VectorXd>&,
                                           Eigen::Ref<Eigen::MatrixXd>)>;

    std::string name;
    int d = 0;  ///< slow-process dimension
    int L = 0;  ///< number of regimes
    DriftFn drift;          ///< b(x, i) -> R^d
    DiffusionFn diffusion;  ///< sigma(x, i) -> R^{d x d}
    GeneratorFn generator;  ///< Q(x) -> R^{L x L}
    double zeta = 0.0;      ///< declared jump-intensity bound
    std::vector<std::pair<int, int>> support;  ///< pairs (i,j), i != j, with q_ij > 0 somewhere

    Eigen::VectorXd drift_at(const Eigen::VectorXd& x, int i) const {
        Eigen::VectorXd out(d);
        drift(x, i, out);
        return out;
    }
    Eigen::MatrixXd diffusion_at(const Eigen::VectorXd& x, int i) const {
        Eigen::MatrixXd out(d, d);
        diffusion(x, i, out);
        return out;
    }
    Eigen::MatrixXd generator_at(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd out(L, L);
        generator(x, out);
        return out;
    }

    /// Targets of each regime under the support set, ascending. Band order in
    /// the thinning simulator follows this ordering.
    std::vector<std::vector<int>> targets_by_regime() const;
};

/// Sampled estimates for the standing assumptions.
struct ModelValidationReport {
    struct LipschitzEstimates {
        double drift = 0.0;      ///< max difference quotient of b
        double diffusion = 0.0;  ///< max difference quotient of sigma (Frobenius)
        double generator = 0.0;  ///< max difference quotient of Q (l1 row sup)
    };
    struct RateBounds {
        double upper = 0.0;  ///< sampled sup of off-diagonal rates
        double lower = 0.0;  ///< sampled inf of rates over the support pairs
    };

    LipschitzEstimates lipschitz_estimates;
    RateBounds rate_bounds;
    bool irreducible_everywhere = false;
    double min_invariant_mass = 0.0;
};

/// Names of the built-in model families.
std::vector<std::string> builtin_model_names();

/// Instantiates a built-in parametric model.
///
/// Families: "two-state-constant", "two-state-tanh", "three-state-tanh",
/// "linear-2d", "single-regime". Unknown parameter keys and out-of-range
/// values (e.g. a tanh amplitude that can make a rate negative, or a support
/// graph that is not strongly connected) raise ConfigError. zeta is the
/// analytic sup of the rates over the family plus one.
RegimeModel build_builtin(const std::string& name,
                          const std::map<std::string, double>& params);

/// Samples assumption diagnostics over the given points. Difference quotients
/// use central differences with step h_fd per coordinate; irreducibility is
/// strong connectivity of {(i,j): q_ij(x) > 1e-12} at every sample. A row-sum
/// violation above 1e-10 raises Error naming the sample and row.
ModelValidationReport validate_model(const RegimeModel& model,
                                     const std::vector<Eigen::VectorXd>& samples,
                                     double h_fd);

}  // namespace slowfast
