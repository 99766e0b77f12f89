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
#include "vsir/vsir.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace
{

// 0 success, 1 usage or I/O failure, 2 invalid configuration, 3 run failure
int run(int argc, char** argv)
{
    CLI::App app{"Spatial SIR with varying infectivity: stochastic simulation and mean-field limit"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> grid;
    std::optional<double> dt;
    std::string mode;
    unsigned threads = 1;
    bool halving     = false;
    bool homogeneous = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (default: $VSIR_OUT_DIR, then ./vsir_out)");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--mode", mode, "rate normalization")->check(CLI::IsMember({"raw", "truncated"}));
    };
    auto* sim = app.add_subcommand("sim", "simulate the finite-N system");
    common(sim);
    sim->add_option("--seed", seed, "master seed (overrides [run] seed)");

    auto* mf = app.add_subcommand("meanfield", "solve the limit system on a grid");
    common(mf);
    mf->add_option("--grid", grid, "nodes per axis")->check(CLI::PositiveNumber);
    mf->add_option("--dt", dt, "time step")->check(CLI::PositiveNumber);
    mf->add_flag("--halving", halving, "also solve at dt/2, dt/4, dt/8 and report ratios");
    mf->add_flag("--homogeneous", homogeneous, "also run the scalar oracle (constant kernel, uniform densities)");

    auto* conv = app.add_subcommand("converge", "N-ladder convergence study");
    common(conv);
    conv->add_option("--seed", seed, "master seed");
    conv->add_option("--grid", grid, "reference grid nodes per axis")->check(CLI::PositiveNumber);
    conv->add_option("--dt", dt, "reference time step")->check(CLI::PositiveNumber);

    auto* val = app.add_subcommand("validate", "check a configuration");
    val->add_option("--config", config_path, "INI configuration file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    vsir::RunOptions opt;
    if (!out.empty()) {
        opt.out_dir = out;
    }
    else if (const char* env = std::getenv("VSIR_OUT_DIR"); env && *env) {
        opt.out_dir = env;
    }
    else {
        opt.out_dir = "vsir_out";
    }
    opt.seed        = seed;
    opt.grid        = grid;
    opt.dt          = dt;
    opt.threads     = threads;
    opt.halving     = halving;
    opt.homogeneous = homogeneous;
    opt.log         = &std::cerr;
    if (!mode.empty()) {
        opt.mode = vsir::parse_mode(mode);
    }

    try {
        const auto cfg = vsir::load_config(config_path);
        if (val->parsed()) {
            const auto violations = vsir::validate_config(cfg.experiment);
            for (const auto& v : violations) {
                std::cout << "violation: " << v << "\n";
            }
            if (!violations.empty()) {
                return 2;
            }
            std::cout << "ok\n";
            return 0;
        }
        if (sim->parsed()) {
            const auto s = vsir::run_sim(cfg, opt);
            std::cout << "events: " << s.events << ", candidates: " << s.stats.candidates
                      << ", omega_N: " << (s.omega_N ? "holds" : "fails") << "\n";
        }
        else if (mf->parsed()) {
            const auto s = vsir::run_meanfield(cfg, opt);
            std::cout << "a priori bounds: " << (s.apriori.passed() ? "pass" : "fail") << "\n";
            if (s.halving) {
                for (double r : s.halving->ratios) {
                    std::cout << "halving ratio: " << r << "\n";
                }
            }
            if (s.oracle_error) {
                std::cout << "oracle sup error: " << *s.oracle_error << "\n";
            }
        }
        else if (conv->parsed()) {
            const auto r = vsir::run_convergence(cfg, opt);
            for (const auto& p : r.ladder) {
                std::cout << "N=" << p.N << " mean=" << p.mean << " se=" << p.std_error
                          << " omega_N=" << p.omega_fraction << "\n";
            }
            std::cout << "slope=" << r.fit.slope << " ci95=[" << r.fit.ci_low << ", " << r.fit.ci_high << "]\n";
        }
        std::cout << "output: " << opt.out_dir.string() << "\n";
        return 0;
    }
    catch (const vsir::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    catch (const vsir::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace

int main(int argc, char** argv)
{
    return run(argc, argv);
}
