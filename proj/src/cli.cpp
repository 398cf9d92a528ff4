#include "slowfast/cli.hpp"

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <iostream>

#include "slowfast/chain.hpp"
#include "slowfast/csv.hpp"
#include "slowfast/errors.hpp"
#include "slowfast/mc.hpp"
#include "slowfast/poisson.hpp"
#include "slowfast/rate.hpp"
#include "slowfast/rng.hpp"
#include "slowfast/simulate.hpp"

namespace slowfast {

namespace {

namespace fs = std::filesystem;

struct Context {
    ExperimentConfig config;  // overrides already applied
    RegimeModel model;
    Eigen::VectorXd x0;
    std::string out_dir;
    std::string hash;
    std::uint64_t master_seed = 0;
    int workers = 0;
};

Context make_context(const ExperimentConfig& raw, const CliOptions& opts,
                     std::uint64_t default_seed) {
    Context ctx;
    ctx.config = raw;
    if (opts.seed_override) {
        if (ctx.config.simulate) ctx.config.simulate->seed = *opts.seed_override;
        if (ctx.config.mc) ctx.config.mc->seed = *opts.seed_override;
    }
    ctx.model = ctx.config.build_model();
    if (ctx.config.x0.size() == 0)
        ctx.x0 = Eigen::VectorXd::Zero(ctx.model.d);
    else if (ctx.config.x0.size() == ctx.model.d)
        ctx.x0 = ctx.config.x0;
    else
        throw ConfigError("config: x0 has dimension " +
                          std::to_string(ctx.config.x0.size()) + ", model needs " +
                          std::to_string(ctx.model.d));
    if (ctx.config.y0 >= ctx.model.L)
        throw ConfigError("config: y0 = " + std::to_string(ctx.config.y0 + 1) +
                          " exceeds the number of regimes " +
                          std::to_string(ctx.model.L));
    ctx.out_dir = opts.out_override ? *opts.out_override : ctx.config.output_dir;
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + ctx.out_dir + "'");
    ctx.hash = ctx.config.hash();
    ctx.master_seed = default_seed;
    ctx.workers = opts.workers;
    return ctx;
}

std::string out_path(const Context& ctx, const std::string& name) {
    return (fs::path(ctx.out_dir) / name).string();
}

std::string stamp(const Context& ctx) {
    return "config_hash=" + ctx.hash +
           " master_seed=" + std::to_string(ctx.master_seed);
}

Eigen::VectorXd interp_row(const AveragedPath& path, double t) {
    const Eigen::Index n = path.times.size() - 1;
    if (t <= path.times(0)) return path.x.row(0);
    if (t >= path.times(n)) return path.x.row(n);
    const double step = (path.times(n) - path.times(0)) / static_cast<double>(n);
    const auto k = std::min<Eigen::Index>(
        n - 1, static_cast<Eigen::Index>(std::floor(t / step)));
    const double w = (t - path.times(k)) / step;
    return (1.0 - w) * path.x.row(k) + w * path.x.row(k + 1);
}

}  // namespace

std::vector<std::string> run_analyze(const ExperimentConfig& config,
                                     const CliOptions& opts) {
    Context ctx = make_context(config, opts, 0);
    const int knots = ctx.config.analyze ? ctx.config.analyze->knots
                                         : ExperimentConfig::Analyze{}.knots;
    const AveragedPath averaged =
        solve_averaged(ctx.model, ctx.x0, ctx.config.T, ctx.config.dt);

    const int L = ctx.model.L;
    const int d = ctx.model.d;
    std::vector<std::string> header{"t"};
    for (int i = 1; i <= L; ++i) header.push_back("mu_" + std::to_string(i));
    for (int i = 1; i <= L; ++i)
        for (int k = 1; k <= d; ++k)
            header.push_back("phi_" + std::to_string(i) + "_" + std::to_string(k));
    for (int k = 1; k <= d; ++k) header.push_back("bbar_" + std::to_string(k));
    for (int r = 1; r <= d; ++r)
        for (int c = 1; c <= d; ++c)
            header.push_back("gradbbar_" + std::to_string(r) + "_" +
                             std::to_string(c));
    for (int r = 1; r <= d; ++r)
        for (int c = 1; c <= d; ++c)
            header.push_back("lambda_" + std::to_string(r) + "_" +
                             std::to_string(c));

    CsvWriter csv(out_path(ctx, "analyze.csv"));
    csv.set_comment(stamp(ctx));
    csv.set_header(header);
    for (int j = 0; j < knots; ++j) {
        const double t =
            ctx.config.T * static_cast<double>(j) / static_cast<double>(knots - 1);
        const Eigen::VectorXd x = interp_row(averaged, t);
        const auto inv = invariant_measure(ctx.model.generator_at(x));
        const auto sol = solve_poisson(ctx.model, x);
        const Eigen::MatrixXd jac =
            jacobian_bbar(ctx.model, x, default_jacobian_step(x));
        const auto cov = effective_covariance(ctx.model, x);

        Eigen::VectorXd row(1 + L + L * d + d + 2 * d * d);
        Eigen::Index at = 0;
        row(at++) = t;
        for (int i = 0; i < L; ++i) row(at++) = inv.mu(i);
        for (int i = 0; i < L; ++i)
            for (int k = 0; k < d; ++k) row(at++) = sol.phi(i, k);
        for (int k = 0; k < d; ++k) row(at++) = sol.bbar(k);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) row(at++) = jac(r, c);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) row(at++) = cov.lambda(r, c);
        csv.add_row_reals(row);
    }
    csv.write();
    return {out_path(ctx, "analyze.csv")};
}

std::vector<std::string> run_simulate(const ExperimentConfig& config,
                                      const CliOptions& opts) {
    if (!config.simulate)
        throw ConfigError("config: the simulate command needs a [simulate] section");
    Context ctx = make_context(config, opts, 0);
    ctx.master_seed = ctx.config.simulate->seed;

    const CoupledPath path =
        simulate_coupled(ctx.model, ctx.config.simulate->eps, ctx.x0,
                         ctx.config.y0, ctx.config.T, ctx.config.dt,
                         ctx.master_seed);

    std::vector<std::string> header{"t"};
    for (int k = 1; k <= ctx.model.d; ++k)
        header.push_back("x_" + std::to_string(k));
    header.push_back("y");

    CsvWriter csv(out_path(ctx, "simulate.csv"));
    csv.set_comment(stamp(ctx));
    csv.set_header(header);
    for (Eigen::Index k = 0; k < path.times.size(); ++k) {
        std::vector<std::string> row{format_real(path.times(k))};
        for (int c = 0; c < ctx.model.d; ++c)
            row.push_back(format_real(path.x(k, c)));
        row.push_back(std::to_string(path.y[static_cast<std::size_t>(k)] + 1));
        csv.add_row(row);
    }
    csv.write();

    CsvWriter jumps(out_path(ctx, "jumps.csv"));
    jumps.set_comment(stamp(ctx));
    jumps.set_header({"t", "from", "to"});
    for (const auto& event : path.jump_log)
        jumps.add_row({format_real(event.time), std::to_string(event.from + 1),
                       std::to_string(event.to + 1)});
    jumps.write();
    return {out_path(ctx, "simulate.csv"), out_path(ctx, "jumps.csv")};
}

std::vector<std::string> run_rate(const ExperimentConfig& config,
                                  const CliOptions& opts) {
    if (!config.rate)
        throw ConfigError("config: the rate command needs a [rate] section");
    Context ctx = make_context(config, opts, 0);
    if (!fs::exists(ctx.config.rate->path_file))
        throw ConfigError("config: path_file '" + ctx.config.rate->path_file +
                          "' does not exist");

    const CsvTable table = read_csv(ctx.config.rate->path_file);
    const int t_col = table.column("t");
    if (t_col < 0) throw IoError("path file: missing 't' column");
    const int d = ctx.model.d;
    std::vector<int> cols(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
        int c = table.column("eta_" + std::to_string(k + 1));
        if (c < 0) c = table.column("x_" + std::to_string(k + 1));
        if (c < 0)
            throw IoError("path file: missing column eta_" +
                          std::to_string(k + 1) + " (or x_" +
                          std::to_string(k + 1) + ")");
        cols[static_cast<std::size_t>(k)] = c;
    }

    const Eigen::Index n = table.data.rows();
    if (n < 3) throw Error("rate: path needs at least 3 knots");
    const Eigen::VectorXd times = table.data.col(t_col);
    const double dt = times(1) - times(0);
    if (std::abs(times(0)) > 1e-12) throw Error("rate: path grid must start at 0");
    for (Eigen::Index k = 1; k < n; ++k)
        if (std::abs(times(k) - times(k - 1) - dt) > 1e-9)
            throw Error("rate: path grid must be uniform");

    Eigen::MatrixXd eta(n, d);
    for (int k = 0; k < d; ++k)
        eta.col(k) = table.data.col(cols[static_cast<std::size_t>(k)]);

    const AveragedPath averaged =
        solve_averaged(ctx.model, ctx.x0, times(n - 1), dt);
    const RateEvaluation eval = rate_functional(ctx.model, averaged, eta);

    std::vector<std::string> header{"t", "cost", "feasible"};
    for (int k = 1; k <= d; ++k) header.push_back("v_" + std::to_string(k));
    for (int i = 1; i <= ctx.model.L; ++i)
        for (int k = 1; k <= d; ++k)
            header.push_back("u_" + std::to_string(i) + "_" + std::to_string(k));
    for (const auto& [i, j] : ctx.model.support)
        header.push_back("c_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));

    CsvWriter csv(out_path(ctx, "rate.csv"));
    csv.set_comment(stamp(ctx) + " value=" + format_real(eval.value));
    csv.set_header(header);
    for (std::size_t k = 0; k < eval.per_knot.size(); ++k) {
        const PointwiseRate& pr = eval.per_knot[k];
        std::vector<std::string> row{format_real(eval.grid(static_cast<Eigen::Index>(k))),
                                     format_real(pr.cost),
                                     pr.feasible ? "1" : "0"};
        for (int c = 0; c < d; ++c) row.push_back(format_real(pr.v(c)));
        for (int i = 0; i < ctx.model.L; ++i)
            for (int c = 0; c < d; ++c)
                row.push_back(format_real(pr.feasible ? pr.u_star(i, c) : 0.0));
        for (const auto& pair : ctx.model.support) {
            const auto it = pr.c_star.find(pair);
            row.push_back(format_real(it == pr.c_star.end() ? 0.0 : it->second));
        }
        csv.add_row(row);
    }
    csv.write();
    std::cout << "value = " << format_real(eval.value) << "\n";
    return {out_path(ctx, "rate.csv")};
}

std::vector<std::string> run_mc(const ExperimentConfig& config,
                                const CliOptions& opts) {
    if (!config.mc)
        throw ConfigError("config: the mc command needs an [mc] section");
    Context ctx = make_context(config, opts, 0);
    const auto& mc = *ctx.config.mc;
    ctx.master_seed = mc.seed;

    double target_rate = std::numeric_limits<double>::quiet_NaN();
    if (mc.target_knots > 0) {
        const AveragedPath averaged =
            solve_averaged(ctx.model, ctx.x0, ctx.config.T, ctx.config.dt);
        Eigen::VectorXd a_vec = Eigen::VectorXd::Zero(ctx.model.d);
        a_vec(0) = mc.a;
        target_rate = min_rate_to_target(ctx.model, averaged, a_vec,
                                         ctx.config.T, mc.target_knots)
                          .first;
    }

    const auto estimates =
        mdp_scan(ctx.model, mc.eps_grid, mc.h_exponent, mc.a, ctx.config.T,
                 mc.dt_rule, mc.event, mc.n_paths, mc.seed, ctx.workers);

    std::vector<std::string> header{"eps",     "h_eps",      "a",
                                    "n_paths", "p_hat",      "std_err",
                                    "decay_rate", "decay_rate_lower"};
    if (mc.target_knots > 0) header.push_back("target_rate");
    CsvWriter csv(out_path(ctx, "mc.csv"));
    csv.set_comment(stamp(ctx));
    csv.set_header(header);
    for (const auto& est : estimates) {
        std::vector<std::string> row{
            format_real(est.eps),      format_real(est.h_eps),
            format_real(est.threshold), std::to_string(est.n_paths),
            format_real(est.p_hat),    format_real(est.std_err),
            format_real(est.decay_rate), format_real(est.decay_rate_lower)};
        if (mc.target_knots > 0) row.push_back(format_real(target_rate));
        csv.add_row(row);
    }
    csv.write();
    return {out_path(ctx, "mc.csv")};
}

std::vector<std::string> run_validate(const ExperimentConfig& config,
                                      const CliOptions& opts) {
    Context ctx = make_context(config, opts, 0);
    const auto block = ctx.config.validate ? *ctx.config.validate
                                           : ExperimentConfig::Validate{};

    // deterministic sample cloud in [-radius, radius]^d
    std::vector<Eigen::VectorXd> samples;
    samples.reserve(static_cast<std::size_t>(block.num_samples));
    const PathRng rng(0, 0);
    for (int s = 0; s < block.num_samples; ++s) {
        Eigen::VectorXd x(ctx.model.d);
        for (int k = 0; k < ctx.model.d; ++k) {
            const auto u = rng.uniforms(static_cast<std::uint64_t>(s),
                                        RngChannel::kBrownian,
                                        static_cast<std::uint32_t>(k));
            x(k) = block.radius * (2.0 * u[0] - 1.0);
        }
        samples.push_back(std::move(x));
    }
    const ModelValidationReport report =
        validate_model(ctx.model, samples, block.h_fd);

    CsvWriter csv(out_path(ctx, "validate.csv"));
    csv.set_comment(stamp(ctx));
    csv.set_header({"lipschitz_b", "lipschitz_sigma", "lipschitz_q",
                    "kappa_upper", "kappa_lower", "irreducible_everywhere",
                    "min_invariant_mass"});
    csv.add_row({format_real(report.lipschitz_estimates.drift),
                 format_real(report.lipschitz_estimates.diffusion),
                 format_real(report.lipschitz_estimates.generator),
                 format_real(report.rate_bounds.upper),
                 format_real(report.rate_bounds.lower),
                 report.irreducible_everywhere ? "1" : "0",
                 format_real(report.min_invariant_mass)});
    csv.write();
    std::cout << "irreducible_everywhere = "
              << (report.irreducible_everywhere ? "true" : "false")
              << ", min_invariant_mass = "
              << format_real(report.min_invariant_mass) << "\n";
    return {out_path(ctx, "validate.csv")};
}

int cli_main(int argc, char** argv) {
    CLI::App app{"slow-fast regime-switching SDE toolkit"};
    app.require_subcommand(1);

    struct Command {
        std::string name;
        std::string help;
        std::vector<std::string> (*fn)(const ExperimentConfig&, const CliOptions&);
    };
    const std::vector<Command> commands = {
        {"analyze", "invariant measure, corrector and covariance along the averaged path", &run_analyze},
        {"simulate", "sample one coupled trajectory", &run_simulate},
        {"rate", "evaluate the deviation cost of a path file", &run_rate},
        {"mc", "tail-probability scan over epsilon", &run_mc},
        {"validate", "sampled assumption diagnostics for the model", &run_validate},
    };

    struct SubState {
        CLI::App* cmd = nullptr;
        CliOptions opts;
        std::uint64_t seed = 0;
        bool seed_given = false;
        std::string out;
        bool out_given = false;
    };
    std::vector<SubState> states(commands.size());
    for (std::size_t i = 0; i < commands.size(); ++i) {
        auto& st = states[i];
        st.cmd = app.add_subcommand(commands[i].name, commands[i].help);
        st.cmd->add_option("--config", st.opts.config_path, "config file")
            ->required();
        st.cmd->add_option("--workers", st.opts.workers,
                           "worker threads (0 = auto)");
        st.cmd->add_option("--seed", st.seed, "override the config seed")
            ->each([&st](const std::string&) { st.seed_given = true; });
        st.cmd->add_option("--out", st.out, "override output_dir")
            ->each([&st](const std::string&) { st.out_given = true; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (!states[i].cmd->parsed()) continue;
            CliOptions opts = states[i].opts;
            if (states[i].seed_given) opts.seed_override = states[i].seed;
            if (states[i].out_given) opts.out_override = states[i].out;
            const ExperimentConfig cfg = parse_config_file(opts.config_path);
            const auto files = commands[i].fn(cfg, opts);
            for (const auto& f : files) std::cout << "wrote " << f << "\n";
        }
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericalError;
    }
}

}  // namespace slowfast
