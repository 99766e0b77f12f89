/*
* Copyright (C) 2026 The vsir authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace vsir_test;
namespace fs = std::filesystem;

namespace
{

const std::string kSmall = R"([domain]
dim = 2

[kernel]
type = gaussian_bump
sigma = 0.25
floor = 0.05

[infectivity.initial]
type = markov
a = 1
rho = 0.3

[infectivity.new]
type = hump
a = 1.2
p = 0.5
h_min = 2
h_max = 4

[initial_condition]
frac_S = 0.95
frac_I = 0.05
frac_R = 0
density_S = uniform
density_I = gaussian_mixture
density_I.weights = 1
density_I.centers = 0.3 0.3
density_I.sigmas = 0.15
density_R = uniform

[run]
gamma = 0.5
horizon = 4
population_size = 400
seed = 77
snapshot_times = 0:4:0.5
grid = 8
dt = 0.02
)";

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("vsir_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const fs::path& path, const std::string& text)
{
    std::ofstream(path) << text;
    return path;
}

std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cli(const std::string& args, const fs::path& log, const std::string& env = "")
{
    const std::string cmd = env + " \"" VSIR_CLI_PATH "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status      = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string replace(std::string text, const std::string& from, const std::string& to)
{
    const auto pos = text.find(from);
    if (pos == std::string::npos) {
        throw std::invalid_argument("no '" + from + "' in config text");
    }
    return text.replace(pos, from.size(), to);
}

std::vector<fs::path> shipped_configs()
{
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(fs::path(VSIR_SOURCE_DIR) / "configs")) {
        if (e.path().extension() == ".ini") {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

TEST(ConfigIo, ShippedConfigsRoundTrip)
{
    const auto files = shipped_configs();
    ASSERT_GE(files.size(), 5u);
    for (const auto& f : files) {
        const auto cfg  = load_config(f.string());
        const auto text = to_ini(cfg);
        EXPECT_EQ(to_ini(parse_config(text)), text) << f;
        EXPECT_TRUE(validate_config(cfg.experiment).empty()) << f;
    }
}

TEST(ConfigIo, ParsesTheSmallConfig)
{
    const auto cfg = parse_config(kSmall);
    const auto& e  = cfg.experiment;
    EXPECT_EQ(e.domain.dim, 2u);
    EXPECT_EQ(e.gamma, 0.5);
    EXPECT_EQ(e.population_size, 400u);
    EXPECT_EQ(e.master_seed, 77u);
    EXPECT_EQ(e.snapshot_times.size(), 9u);
    EXPECT_EQ(e.snapshot_times.back(), 4.0);
    EXPECT_EQ(cfg.grid, 8u);
    EXPECT_EQ(cfg.dt, 0.02);
    EXPECT_FALSE(cfg.study);
    EXPECT_EQ(e.kernel.name(), "gaussian_bump");
    EXPECT_EQ(e.infectivity_new.name(), "hump");
    EXPECT_EQ(e.truncation, RateMode::Raw);
}

TEST(ConfigIo, SnapshotListsAndRanges)
{
    auto cfg = parse_config(replace(kSmall, "0:4:0.5", "0, 1.5, 4"));
    EXPECT_EQ(cfg.experiment.snapshot_times, (std::vector<double>{0.0, 1.5, 4.0}));
    cfg = parse_config(replace(kSmall, "0:4:0.5", "0:1:0.1"));
    EXPECT_EQ(cfg.experiment.snapshot_times.size(), 11u);
    EXPECT_EQ(cfg.experiment.snapshot_times.back(), 1.0);
    EXPECT_THROW(parse_config(replace(kSmall, "0:4:0.5", "0:4")), ConfigError);
    EXPECT_THROW(parse_config(replace(kSmall, "0:4:0.5", "4:0:1")), ConfigError);
    EXPECT_THROW(parse_config(replace(kSmall, "0:4:0.5", "0:4:0")), ConfigError);
}

TEST(ConfigIo, MalformedInputIsReported)
{
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            parse_config(text);
            ADD_FAILURE() << "accepted config, expected '" << needle << "'";
        }
        catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_error(replace(kSmall, "sigma = 0.25", "sigma = 0.25\nwidth = 3"), "unknown key");
    expect_error(kSmall + "\n[solver]\nx = 1\n", "unknown section");
    expect_error(replace(kSmall, "rho = 0.3", "rho = 0.3\nrho = 0.4"), "duplicate");
    expect_error(replace(kSmall, "horizon = 4\n", ""), "missing key");
    expect_error(replace(kSmall, "horizon = 4", "horizon = four"), "expected a number");
    expect_error(replace(kSmall, "type = gaussian_bump", "type = cauchy"), "unknown kernel");
    expect_error(replace(kSmall, "dt = 0.02", "dt = 0.02\nmode = clipped"), "mode");
    expect_error(replace(kSmall, "[kernel]\ntype = gaussian_bump\nsigma = 0.25\nfloor = 0.05\n", ""), "missing section");
    expect_error("stray = 1\n" + kSmall, "outside of any section");
    EXPECT_THROW(load_config("/nonexistent/vsir.ini"), IoError);
}

TEST(ConfigIo, StudySection)
{
    const auto cfg = parse_config(kSmall + "\n[study]\nn_ladder = 100, 200, 400\nreplicates = 5\n"
                                           "test_functions = const, hat\ncomponents = S, I\n");
    ASSERT_TRUE(cfg.study);
    EXPECT_EQ(cfg.study->n_ladder, (std::vector<std::size_t>{100, 200, 400}));
    EXPECT_EQ(cfg.study->replicates, 5u);
    EXPECT_EQ(cfg.study->test_functions, (std::vector<std::string>{"const", "hat"}));
    EXPECT_EQ(cfg.study->components, (std::vector<Measure>{Measure::S, Measure::I}));
    EXPECT_THROW(parse_config(kSmall + "\n[study]\nn_ladder = 400, 200, 800\n"), ConfigError);
    EXPECT_THROW(parse_config(kSmall + "\n[study]\ncomponents = S, Q\n"), ConfigError);
}

TEST(SlopeFit, RecoversAnExactPowerLaw)
{
    const std::vector<double> n{250, 500, 1000, 2000, 4000};
    std::vector<double> y;
    for (double v : n) {
        y.push_back(3.0 / std::sqrt(v));
    }
    const auto fit = fit_loglog_slope(n, y);
    EXPECT_NEAR(fit.slope, -0.5, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-10);
    EXPECT_NEAR(fit.ci_low, -0.5, 1e-6);
    EXPECT_NEAR(fit.ci_high, -0.5, 1e-6);
    EXPECT_EQ(fit.points, 5u);
}

TEST(SlopeFit, IntervalMatchesAHandComputation)
{
    // log-log points (0,0), (1,1), (2,3): slope 1.5, residuals (1/6, -1/3, 1/6), t_{0.975,1} = 12.7062
    const double e = std::exp(1.0);
    const auto fit = fit_loglog_slope({1.0, e, e * e}, {1.0, e, e * e * e});
    EXPECT_NEAR(fit.slope, 1.5, 1e-12);
    const double se = std::sqrt((1.0 / 36 + 1.0 / 9 + 1.0 / 36) / 1.0 / 2.0);
    EXPECT_NEAR(fit.ci_high - fit.slope, 12.706204736 * se, 1e-7);
}

TEST(SlopeFit, NeedsThreePoints)
{
    try {
        fit_loglog_slope({1.0, 2.0}, {1.0, 0.5});
        FAIL();
    }
    catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "slope fit needs ≥ 3 points");
    }
    EXPECT_THROW(fit_loglog_slope({1.0, 2.0, 4.0}, {1.0, 0.0, 1.0}), std::invalid_argument);
}

TEST(Study, SamplingNoiseDecaysLikeInverseRootN)
{
    // zero infectivity: only recoveries, the distance is pure sampling noise of order N^{-1/2}
    auto cfg = parse_config(replace(replace(kSmall, "a = 1.2", "a = 0"), "a = 1\n", "a = 0\n") +
                            "\n[study]\nn_ladder = 250, 500, 1000, 2000, 4000\nreplicates = 20\n");
    const auto dir = scratch("study_noise");
    RunOptions opt;
    opt.out_dir  = dir;
    opt.threads  = 4;
    const auto r = run_convergence(cfg, opt);
    EXPECT_EQ(r.failures, 0u);
    EXPECT_GT(r.fit.slope, -0.65);
    EXPECT_LT(r.fit.slope, -0.35);
    for (const char* f : {"study.csv", "study_summary.csv", "manifest.txt", "telemetry.txt"}) {
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    }
    EXPECT_EQ(read_file(dir / "study_summary.csv").rfind("# vsir study_summary v1\n", 0), 0u);
}

TEST(Cli, ExitCodesAndOutputs)
{
    const auto dir = scratch("cli_codes");
    const auto cfg = write_file(dir / "small.ini", kSmall);
    const auto log = dir / "log.txt";

    EXPECT_EQ(cli("validate --config " + cfg.string(), log), 0);
    EXPECT_EQ(read_file(log), "ok\n");

    const auto bad = write_file(dir / "gamma.ini", replace(kSmall, "gamma = 0.5", "gamma = 1.5"));
    EXPECT_EQ(cli("validate --config " + bad.string(), log), 2);
    EXPECT_NE(read_file(log).find("gamma must lie in [0,1]"), std::string::npos);
    EXPECT_EQ(cli("sim --config " + bad.string() + " --out " + (dir / "bad").string(), log), 2);
    EXPECT_NE(read_file(log).find("gamma must lie in [0,1]"), std::string::npos);

    const auto broken = write_file(dir / "broken.ini", replace(kSmall, "dim = 2", "dims = 2"));
    EXPECT_EQ(cli("sim --config " + broken.string(), log), 2);
    EXPECT_EQ(cli("sim --config " + (dir / "missing.ini").string(), log), 1);
    EXPECT_EQ(cli("frobnicate", log), 1);
    EXPECT_EQ(cli("sim", log), 1);

    EXPECT_EQ(cli("sim --config " + cfg.string() + " --out " + (dir / "sim").string(), log), 0);
    for (const char* f : {"events.csv", "snapshots.csv", "manifest.txt"}) {
        EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;
    }
    EXPECT_EQ(read_file(dir / "sim" / "events.csv").rfind("# vsir events v1\n", 0), 0u);

    EXPECT_EQ(cli("meanfield --halving --config " + cfg.string() + " --out " + (dir / "mf").string(), log), 0);
    for (const char* f : {"solution.csv", "pairings.csv", "apriori.txt", "manifest.txt", "halving.csv"}) {
        EXPECT_TRUE(fs::exists(dir / "mf" / f)) << f;
    }
    EXPECT_NE(read_file(log).find("a priori bounds: pass"), std::string::npos);
    // the oracle needs a constant kernel
    EXPECT_EQ(cli("meanfield --homogeneous --config " + cfg.string() + " --out " + (dir / "mf2").string(), log), 2);
}

TEST(Cli, RerunsAreByteIdentical)
{
    const auto dir = scratch("cli_rerun");
    const auto cfg = write_file(dir / "small.ini", kSmall);
    const auto log = dir / "log.txt";
    ASSERT_EQ(cli("sim --config " + cfg.string() + " --out " + (dir / "a").string(), log), 0);
    ASSERT_EQ(cli("sim --threads 3 --config " + cfg.string() + " --out " + (dir / "b").string(), log), 0);
    ASSERT_EQ(cli("sim --seed 78 --config " + cfg.string() + " --out " + (dir / "c").string(), log), 0);
    for (const char* f : {"events.csv", "snapshots.csv"}) {
        EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
    }
    EXPECT_NE(read_file(dir / "a" / "events.csv"), read_file(dir / "c" / "events.csv"));
}

TEST(Cli, HomogeneousMeanFieldWithoutInfectives)
{
    const auto dir  = scratch("cli_homog");
    const auto text = replace(replace(replace(replace(kSmall, "type = gaussian_bump\nsigma = 0.25\nfloor = 0.05",
                                                      "type = constant\nk = 1"),
                                              "density_I = gaussian_mixture\ndensity_I.weights = 1\n"
                                              "density_I.centers = 0.3 0.3\ndensity_I.sigmas = 0.15",
                                              "density_I = uniform"),
                                      "frac_S = 0.95", "frac_S = 1"),
                              "frac_I = 0.05", "frac_I = 0");
    const auto cfg = write_file(dir / "flat.ini", text);
    const auto log = dir / "log.txt";
    ASSERT_EQ(cli("meanfield --homogeneous --config " + cfg.string() + " --out " + (dir / "mf").string(), log), 0)
        << read_file(log);
    EXPECT_TRUE(fs::exists(dir / "mf" / "oracle.csv"));
    EXPECT_NE(read_file(log).find("oracle sup error: 0\n"), std::string::npos) << read_file(log);

    const auto sol = solve_stepping(parse_config(text).experiment, SpatialGrid(2, 8), {});
    for (std::size_t r = 0; r < sol.records(); ++r) {
        EXPECT_NEAR(sol.pair_record(r, Measure::S, one), 1.0, 1e-14);
    }
}

TEST(Cli, OutputDirectoryFromEnvironment)
{
    const auto dir = scratch("cli_env");
    const auto cfg = write_file(dir / "small.ini", kSmall);
    const auto log = dir / "log.txt";
    ASSERT_EQ(cli("sim --config " + cfg.string(), log, "VSIR_OUT_DIR=" + (dir / "env").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "env" / "events.csv"));
    ASSERT_EQ(cli("sim --config " + cfg.string() + " --out " + (dir / "flag").string(), log,
                  "VSIR_OUT_DIR=" + (dir / "env2").string()),
              0);
    EXPECT_TRUE(fs::exists(dir / "flag" / "events.csv"));
    EXPECT_FALSE(fs::exists(dir / "env2"));
}
