#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slowfast/mc.hpp"
#include "slowfast/model.hpp"

namespace slowfast {

/// Experiment description parsed from the flat-section key-value config file.
/// Unknown sections or keys are rejected with the offending line number.
struct ExperimentConfig {
    // [model]
    std::string model_name;
    std::map<std::string, double> model_params;

    // top level
    Eigen::VectorXd x0;
    int y0 = 0;  ///< 0-based internally; 1-based in the file
    double T = 1.0;
    double dt = 1e-3;
    std::string output_dir = ".";

    struct Analyze {
        int knots = 11;
    };
    struct Simulate {
        double eps = 0.01;
        std::uint64_t seed = 1;
    };
    struct Rate {
        std::string path_file;
    };
    struct Mc {
        std::vector<double> eps_grid;
        double h_exponent = 0.3;
        double a = 1.0;
        TailEvent event = TailEvent::kSup;
        std::int64_t n_paths = 0;
        std::uint64_t seed = 1;
        DtRule dt_rule;
        int target_knots = 0;  ///< >0: emit target_rate from min_rate_to_target
    };
    struct Validate {
        int num_samples = 100;
        double radius = 2.0;
        double h_fd = 1e-5;
    };

    std::optional<Analyze> analyze;
    std::optional<Simulate> simulate;
    std::optional<Rate> rate;
    std::optional<Mc> mc;
    std::optional<Validate> validate;

    /// FNV-1a hash of the canonical serialization of all semantically
    /// meaningful fields (output_dir excluded: it changes where files go, not
    /// what is computed). Formatting, comments and key order do not affect it.
    std::string hash() const;

    RegimeModel build_model() const;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

}  // namespace slowfast
