#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slowfast/config.hpp"
#include "slowfast/csv.hpp"
#include "slowfast/errors.hpp"

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("slowfast_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SLOWFAST_CLI_BIN) + " " + args +
                            " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

const char* kReferenceConfig = R"(
# reference two-state experiment
x0 = [0.0]
y0 = 1
T = 1.0
dt = 0.001

[model]
name = "two-state-constant"
q12 = 1.0
q21 = 2.0
b1 = 1.0
b2 = -2.0
sigma = 0.0
d = 1

[analyze]
knots = 5

[simulate]
eps = 0.01
seed = 42

[mc]
eps_grid = [0.08, 0.04]
h_exponent = 0.3
a = 1.0
event = "sup"
n_paths = 2000
seed = 7
target_knots = 64
)";

}  // namespace

TEST_CASE("config parsing accepts the reference file and rejects noise") {
    const auto cfg = parse_config_text(kReferenceConfig);
    CHECK(cfg.model_name == "two-state-constant");
    CHECK(cfg.model_params.at("q21") == 2.0);
    CHECK(cfg.y0 == 0);
    CHECK(cfg.T == 1.0);
    REQUIRE(cfg.mc.has_value());
    CHECK(cfg.mc->eps_grid.size() == 2);
    CHECK(cfg.mc->event == TailEvent::kSup);
    CHECK(cfg.mc->target_knots == 64);

    CHECK_THROWS_AS(parse_config_text("nonsense = 1\n[model]\nname=\"x\"\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nname = \"two-state-constant\"\n"
                                      "[bogus]\nkey = 1\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse_config_text("[model]\nname = \"two-state-constant\"\n"
                                      "[mc]\nn_paths = 10\n"),
                    ConfigError);  // missing eps_grid
    CHECK_THROWS_AS(parse_config_text("T = -1\n[model]\nname = \"two-state-constant\"\n"),
                    ConfigError);
    // line numbers in messages
    try {
        parse_config_text("[model]\nname = \"two-state-constant\"\nwhat = ??\n");
        CHECK(false);
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("config hash tracks semantics, not formatting") {
    const auto base = parse_config_text(kReferenceConfig);
    std::string reformatted = kReferenceConfig;
    reformatted += "\n# another comment line\n";
    CHECK(parse_config_text(reformatted).hash() == base.hash());

    std::string changed = kReferenceConfig;
    const auto at = changed.find("b1 = 1.0");
    changed.replace(at, 8, "b1 = 1.5");
    CHECK(parse_config_text(changed).hash() != base.hash());
}

TEST_CASE("analyze emits the stationary law along the averaged path") {
    TempDir dir;
    write_file(dir.path / "config.toml", kReferenceConfig);
    const std::string cfg = (dir.path / "config.toml").string();
    REQUIRE(run_cli("analyze --config " + cfg + " --out " + dir.path.string()) == 0);

    const auto table = read_csv((dir.path / "analyze.csv").string());
    REQUIRE(table.data.rows() == 5);
    const int mu1 = table.column("mu_1");
    const int mu2 = table.column("mu_2");
    const int lambda = table.column("lambda_1_1");
    REQUIRE(mu1 >= 0);
    REQUIRE(mu2 >= 0);
    REQUIRE(lambda >= 0);
    for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
        CHECK(table.data(r, mu1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
        CHECK(table.data(r, mu2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(table.data(r, lambda) == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
    }

    // rerun is byte-identical
    const std::string first = slurp(dir.path / "analyze.csv");
    REQUIRE(run_cli("analyze --config " + cfg + " --out " + dir.path.string()) == 0);
    CHECK(slurp(dir.path / "analyze.csv") == first);
}

TEST_CASE("flat drift config gives zero corrector columns") {
    TempDir dir;
    write_file(dir.path / "config.toml", R"(
x0 = [0.0]
T = 0.5
dt = 0.001
[model]
name = "two-state-constant"
b1 = 0.4
b2 = 0.4
[analyze]
knots = 3
)");
    REQUIRE(run_cli("analyze --config " + (dir.path / "config.toml").string() +
                    " --out " + dir.path.string()) == 0);
    const auto table = read_csv((dir.path / "analyze.csv").string());
    for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
        CHECK(std::abs(table.data(r, table.column("phi_1_1"))) < 1e-12);
        CHECK(std::abs(table.data(r, table.column("phi_2_1"))) < 1e-12);
    }
}

TEST_CASE("simulate then rate round-trips through the path file") {
    TempDir dir;
    write_file(dir.path / "config.toml", kReferenceConfig);
    const std::string cfg = (dir.path / "config.toml").string();
    REQUIRE(run_cli("simulate --config " + cfg + " --out " + dir.path.string()) == 0);
    CHECK(fs::exists(dir.path / "simulate.csv"));
    CHECK(fs::exists(dir.path / "jumps.csv"));

    // different seed, same schema, different content
    REQUIRE(run_cli("simulate --config " + cfg + " --seed 43 --out " +
                    (dir.path / "alt").string()) == 0);
    const auto a = read_csv((dir.path / "simulate.csv").string());
    const auto b = read_csv((dir.path / "alt" / "simulate.csv").string());
    CHECK(a.header == b.header);
    CHECK((a.data.col(1) - b.data.col(1)).cwiseAbs().maxCoeff() > 0.0);

    std::string rate_cfg = kReferenceConfig;
    rate_cfg += "\n[rate]\npath_file = \"" +
                (dir.path / "simulate.csv").string() + "\"\n";
    write_file(dir.path / "rate.toml", rate_cfg);
    REQUIRE(run_cli("rate --config " + (dir.path / "rate.toml").string() +
                    " --out " + dir.path.string()) == 0);
    const auto rate_table = read_csv((dir.path / "rate.csv").string());
    CHECK(rate_table.column("cost") >= 0);
    CHECK(rate_table.column("c_1_2") >= 0);
}

TEST_CASE("rate on the zero path reports zero cost") {
    TempDir dir;
    std::ostringstream path_csv;
    path_csv << "t,eta_1\n";
    for (int k = 0; k <= 100; ++k) path_csv << 0.01 * k << ",0\n";
    write_file(dir.path / "zero.csv", path_csv.str());

    std::string cfg = R"(
x0 = [0.0]
T = 1.0
dt = 0.01
[model]
name = "two-state-constant"
[rate]
)";
    cfg += "path_file = \"" + (dir.path / "zero.csv").string() + "\"\n";
    write_file(dir.path / "config.toml", cfg);
    REQUIRE(run_cli("rate --config " + (dir.path / "config.toml").string() +
                    " --out " + dir.path.string()) == 0);
    const auto table = read_csv((dir.path / "rate.csv").string());
    const int cost = table.column("cost");
    for (Eigen::Index r = 0; r < table.data.rows(); ++r)
        CHECK(table.data(r, cost) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("mc runs the scan and carries the configured target") {
    TempDir dir;
    write_file(dir.path / "config.toml", kReferenceConfig);
    REQUIRE(run_cli("mc --config " + (dir.path / "config.toml").string() +
                    " --out " + dir.path.string()) == 0);
    const auto table = read_csv((dir.path / "mc.csv").string());
    REQUIRE(table.data.rows() == 2);
    const int target = table.column("target_rate");
    REQUIRE(target >= 0);
    CHECK(table.data(0, target) == doctest::Approx(0.375).epsilon(1e-3));
    CHECK(table.data(1, target) == doctest::Approx(0.375).epsilon(1e-3));
    CHECK(table.data(0, table.column("eps")) == 0.08);
    CHECK(table.data(0, table.column("p_hat")) >= 0.0);
}

TEST_CASE("mc output is byte-identical across worker counts") {
    TempDir dir;
    write_file(dir.path / "config.toml", kReferenceConfig);
    const std::string cfg = (dir.path / "config.toml").string();
    REQUIRE(run_cli("mc --config " + cfg + " --workers 1 --out " +
                    (dir.path / "w1").string()) == 0);
    REQUIRE(run_cli("mc --config " + cfg + " --workers 8 --out " +
                    (dir.path / "w8").string()) == 0);
    CHECK(slurp(dir.path / "w1" / "mc.csv") == slurp(dir.path / "w8" / "mc.csv"));
}

TEST_CASE("validate reports the zoo diagnostics") {
    TempDir dir;
    write_file(dir.path / "config.toml", R"(
[model]
name = "two-state-tanh"
[validate]
num_samples = 50
radius = 2.0
)");
    REQUIRE(run_cli("validate --config " + (dir.path / "config.toml").string() +
                    " --out " + dir.path.string()) == 0);
    const auto table = read_csv((dir.path / "validate.csv").string());
    CHECK(table.data(0, table.column("irreducible_everywhere")) == 1.0);
    CHECK(table.data(0, table.column("min_invariant_mass")) > 0.0);
    CHECK(table.data(0, table.column("kappa_lower")) > 0.0);
}

TEST_CASE("exit codes") {
    TempDir dir;
    // missing config file
    CHECK(run_cli("analyze --config " + (dir.path / "nope.toml").string()) == 2);
    // unknown key
    write_file(dir.path / "bad.toml",
               "junk = 1\n[model]\nname = \"two-state-constant\"\n");
    CHECK(run_cli("analyze --config " + (dir.path / "bad.toml").string()) == 2);
    // regime label out of range
    write_file(dir.path / "y0.toml",
               "y0 = 5\n[model]\nname = \"two-state-constant\"\n[simulate]\neps = 0.1\n");
    CHECK(run_cli("simulate --config " + (dir.path / "y0.toml").string() +
                  " --out " + dir.path.string()) == 2);
    // rate on a path that does not start at zero -> numerical error
    write_file(dir.path / "off.csv", "t,eta_1\n0,0.5\n0.5,0.6\n1.0,0.7\n");
    write_file(dir.path / "off.toml",
               "x0 = [0.0]\nT = 1.0\ndt = 0.5\n[model]\nname = \"two-state-constant\"\n"
               "[rate]\npath_file = \"" + (dir.path / "off.csv").string() + "\"\n");
    CHECK(run_cli("rate --config " + (dir.path / "off.toml").string() +
                  " --out " + dir.path.string()) == 3);
    // missing referenced path file -> config error
    write_file(dir.path / "miss.toml",
               "[model]\nname = \"two-state-constant\"\n"
               "[rate]\npath_file = \"" + (dir.path / "absent.csv").string() + "\"\n");
    CHECK(run_cli("rate --config " + (dir.path / "miss.toml").string() +
                  " --out " + dir.path.string()) == 2);
    // bad usage
    CHECK(run_cli("analyze") == 2);
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("the stamped hash changes only with semantic edits") {
    TempDir dir;
    write_file(dir.path / "config.toml", kReferenceConfig);
    const std::string cfg = (dir.path / "config.toml").string();
    REQUIRE(run_cli("analyze --config " + cfg + " --out " +
                    (dir.path / "a").string()) == 0);

    std::string spaced = kReferenceConfig;
    spaced += "\n\n# trailing comment\n";
    write_file(dir.path / "config2.toml", spaced);
    REQUIRE(run_cli("analyze --config " + (dir.path / "config2.toml").string() +
                    " --out " + (dir.path / "b").string()) == 0);
    CHECK(slurp(dir.path / "a" / "analyze.csv") ==
          slurp(dir.path / "b" / "analyze.csv"));

    std::string changed = kReferenceConfig;
    const auto at = changed.find("q21 = 2.0");
    changed.replace(at, 9, "q21 = 2.5");
    write_file(dir.path / "config3.toml", changed);
    REQUIRE(run_cli("analyze --config " + (dir.path / "config3.toml").string() +
                    " --out " + (dir.path / "c").string()) == 0);
    const std::string line_a = slurp(dir.path / "a" / "analyze.csv").substr(0, 40);
    const std::string line_c = slurp(dir.path / "c" / "analyze.csv").substr(0, 40);
    CHECK(line_a != line_c);
}
