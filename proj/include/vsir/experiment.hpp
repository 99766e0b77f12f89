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
#pragma once

#include "vsir/config_io.hpp"
#include "vsir/denominator.hpp"
#include "vsir/errors.hpp"
#include "vsir/mean_field.hpp"
#include "vsir/measure_lab.hpp"
#include "vsir/oracle.hpp"
#include "vsir/parallel.hpp"
#include "vsir/stochastic_sim.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include <chrono>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace vsir
{

inline constexpr const char* version = "1.0.0";

/// Command-line overrides shared by the subcommands.
struct RunOptions {
    std::filesystem::path out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> grid;
    std::optional<double> dt;
    std::optional<RateMode> mode;
    unsigned threads = 1;
    bool halving     = false; // meanfield: also solve at dt/2, dt/4, dt/8
    bool homogeneous = false; // meanfield: also run the scalar oracle
    std::ostream* log = nullptr;
};

/// CSV file whose first line names the schema and its version.
class CsvWriter
{
public:
    CsvWriter(const std::filesystem::path& path, const std::string& schema, const std::string& header)
        : m_path(path)
    {
        fmt::format_to(std::back_inserter(m_buffer), "# vsir {} v1\n{}\n", schema, header);
    }

    template <class... Args>
    void row(fmt::format_string<Args...> format, Args&&... args)
    {
        fmt::format_to(std::back_inserter(m_buffer), format, std::forward<Args>(args)...);
        m_buffer.push_back('\n');
    }

    void close()
    {
        write_text(m_path, std::string(m_buffer.data(), m_buffer.size()));
    }

    static void write_text(const std::filesystem::path& path, const std::string& text)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw IoError("cannot write '" + path.string() + "'");
        }
        out << text;
        if (!out) {
            throw IoError("write to '" + path.string() + "' failed");
        }
    }

private:
    std::filesystem::path m_path;
    fmt::memory_buffer m_buffer;
};

inline void prepare_output_dir(const std::filesystem::path& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }
}

/// Throws ConfigError listing every violation.
inline void require_valid(const ExperimentConfig& config)
{
    const auto violations = validate_config(config);
    if (!violations.empty()) {
        std::string msg = "invalid configuration:";
        for (const auto& v : violations) {
            msg += "\n  - " + v;
        }
        throw ConfigError(msg);
    }
}

inline ConfigFile apply_overrides(ConfigFile cfg, const RunOptions& opt)
{
    if (opt.seed) {
        cfg.experiment.master_seed = *opt.seed;
    }
    if (opt.grid) {
        cfg.grid = *opt.grid;
    }
    if (opt.dt) {
        cfg.dt = *opt.dt;
    }
    if (opt.mode) {
        cfg.experiment.truncation = *opt.mode;
    }
    return cfg;
}

inline std::string coordinates_header(std::size_t dim, const char* prefix)
{
    std::string h;
    for (std::size_t a = 0; a < dim; ++a) {
        h += fmt::format(",{}{}", prefix, a + 1);
    }
    return h;
}

inline std::string coordinates(ConstPoint x)
{
    std::string s;
    for (double v : x) {
        s += "," + format_number(v);
    }
    return s;
}

inline void write_pairings(CsvWriter& csv, const std::vector<double>& times, const std::vector<TestFunction>& library,
                           const std::function<double(double, Measure, const TestFunction&)>& pair)
{
    for (double t : times) {
        for (Measure m : {Measure::S, Measure::I, Measure::R, Measure::F}) {
            for (const auto& phi : library) {
                csv.row("{:.17g},{},{},{:.17g}", t, to_string(m), phi.name(), pair(t, m, phi));
            }
        }
    }
}

struct SimRunSummary {
    SimStats stats;
    std::size_t events = 0;
    double c_hat       = 0.0;
    double floor       = 0.0;
    bool omega_N       = false;
    double min_denominator = 0.0;
};

/// sim: events.csv, snapshots.csv and manifest.txt.
inline SimRunSummary run_sim(const ConfigFile& input, const RunOptions& opt)
{
    const ConfigFile cfg = apply_overrides(input, opt);
    const auto& config   = cfg.experiment;
    require_valid(config);
    prepare_output_dir(opt.out_dir);

    SimRunSummary sum;
    sum.c_hat = estimate_c_hat(config.kernel, config.initial, config.domain.dim, opt.threads);
    sum.floor = config.truncation_floor.value_or(sum.c_hat);

    auto pop = std::make_shared<const Population>(sample_population(config));
    SimOptions so;
    so.mode             = config.truncation;
    so.truncation_floor = sum.floor;
    so.threads          = opt.threads;
    const auto res      = simulate(config, pop, so);
    sum.stats           = res.stats;
    sum.events          = res.log.events.size();
    sum.min_denominator = res.min_denominator;

    const auto probes = vertex_probe_points(config.domain.dim, 16);
    const auto dens   = empirical_denominators(config.kernel, *pop, opt.threads);
    sum.omega_N       = omega_N_holds(config.kernel, *pop, sum.c_hat, probes, dens);

    std::vector<double> eta(pop->size(), 0.0);
    for (const auto& r : res.log.records) {
        eta[r.id] = r.eta;
    }
    const std::size_t dim = config.domain.dim;
    CsvWriter events(opt.out_dir / "events.csv", "events", "time,id,kind" + coordinates_header(dim, "x") + ",eta");
    for (const auto& e : res.log.events) {
        events.row("{:.17g},{},{}{},{:.17g}", e.time, e.id, to_string(e.kind), coordinates(pop->position(e.id)),
                   eta[e.id]);
    }
    events.close();

    const auto library = default_test_functions(dim);
    CsvWriter snaps(opt.out_dir / "snapshots.csv", "snapshots", "t,measure,phi,value");
    write_pairings(snaps, config.snapshot_times, library, [&](double t, Measure m, const TestFunction& phi) {
        return pair_snapshot(res.trajectory, t, m, phi);
    });
    snaps.close();

    std::string manifest = fmt::format("# vsir manifest v1\ncommand = sim\nversion = {}\nseed = {}\nmode = {}\n"
                                       "c_hat = {:.17g}\ntruncation_floor = {:.17g}\nomega_N = {}\n"
                                       "min_denominator = {:.17g}\nevents = {}\ncandidates = {}\naccepted = {}\n"
                                       "\n# configuration\n",
                                       version, config.master_seed, to_string(config.truncation), sum.c_hat,
                                       sum.floor, sum.omega_N ? "holds" : "fails", sum.min_denominator, sum.events,
                                       sum.stats.candidates, sum.stats.accepted);
    CsvWriter::write_text(opt.out_dir / "manifest.txt", manifest + to_ini(cfg));
    return sum;
}

struct MeanFieldRunSummary {
    AprioriReport apriori;
    std::optional<HalvingReport> halving;
    std::optional<double> oracle_error;
};

/// meanfield: solution.csv, pairings.csv, apriori.txt, manifest.txt (+ halving.csv, oracle.csv).
inline MeanFieldRunSummary run_meanfield(const ConfigFile& input, const RunOptions& opt)
{
    const ConfigFile cfg = apply_overrides(input, opt);
    const auto& config   = cfg.experiment;
    require_valid(config);
    prepare_output_dir(opt.out_dir);

    const SpatialGrid grid(config.domain.dim, cfg.grid);
    SolverOptions so;
    so.dt            = cfg.dt;
    so.record_stride = 0;
    so.record_times  = config.snapshot_times;
    so.mode          = config.truncation;
    so.threads       = opt.threads;
    double c_hat     = 0.0;
    if (config.truncation == RateMode::Truncated) {
        c_hat               = estimate_c_hat(config.kernel, config.initial, config.domain.dim, opt.threads);
        so.truncation_floor = config.truncation_floor.value_or(c_hat);
    }
    const auto sol = solve_stepping(config, grid, so);

    MeanFieldRunSummary sum;
    sum.apriori = check_apriori_bounds(sol, config);

    const std::size_t dim = config.domain.dim;
    CsvWriter solution(opt.out_dir / "solution.csv", "solution",
                       "t" + coordinates_header(dim, "node_x") + ",muS,muF,muI,muR,Gamma");
    for (std::size_t r = 0; r < sol.records(); ++r) {
        const auto S = sol.field(Measure::S, r), F = sol.field(Measure::F, r), I = sol.field(Measure::I, r),
                   R = sol.field(Measure::R, r), G = sol.gamma_field(r);
        for (std::size_t a = 0; a < sol.nodes(); ++a) {
            solution.row("{:.17g}{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", sol.times[r], coordinates(grid.node(a)),
                         S[a], F[a], I[a], R[a], G[a]);
        }
    }
    solution.close();

    const auto library = default_test_functions(dim);
    CsvWriter pairs(opt.out_dir / "pairings.csv", "snapshots", "t,measure,phi,value");
    write_pairings(pairs, sol.times, library, [&](double t, Measure m, const TestFunction& phi) {
        return pair_meanfield(sol, t, m, phi).value;
    });
    pairs.close();

    const auto& a = sum.apriori;
    std::string report = fmt::format(
        "# vsir apriori v1\nS_max = {:.17g}\nmu_sup = {:.17g}\nS_bounded = {}\nS_violations = {}\n"
        "d_inf = {:.17g}\nd_positive = {}\nkernel_mass_sup = {:.17g}\nC = {:.17g}\nF_max = {:.17g}\n"
        "F_bound = {:.17g}\nF_bounded = {}\npassed = {}\n",
        a.S_max, a.mu_sup, a.S_bounded, a.S_violations, a.d_inf, a.d_positive, a.kernel_mass_sup, a.C, a.F_max,
        a.F_bound, a.F_bounded, a.passed());
    CsvWriter::write_text(opt.out_dir / "apriori.txt", report);

    if (opt.halving) {
        sum.halving = step_halving_study(config, grid, so, 3, config.snapshot_times);
        CsvWriter h(opt.out_dir / "halving.csv", "halving", "dt,sup_diff_to_half,ratio");
        for (std::size_t i = 0; i < sum.halving->differences.size(); ++i) {
            const double ratio = i < sum.halving->ratios.size() ? sum.halving->ratios[i] : std::nan("");
            h.row("{:.17g},{:.17g},{:.17g}", sum.halving->dts[i], sum.halving->differences[i], ratio);
        }
        h.close();
    }
    if (opt.homogeneous) {
        const auto orc = homogeneous_oracle(config, sol.dt);
        CsvWriter o(opt.out_dir / "oracle.csv", "oracle", "t,S,I,R,F,err_S,err_I,err_R");
        double worst = 0.0;
        for (std::size_t r = 0; r < sol.records(); ++r) {
            const std::size_t k = orc.index(sol.times[r]);
            const double es = std::abs(sol.pair_record(r, Measure::S, [](ConstPoint) { return 1.0; }) - orc.S[k]);
            const double ei = std::abs(sol.pair_record(r, Measure::I, [](ConstPoint) { return 1.0; }) - orc.I[k]);
            const double er = std::abs(sol.pair_record(r, Measure::R, [](ConstPoint) { return 1.0; }) - orc.R[k]);
            worst = std::max({worst, es, ei, er});
            o.row("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", orc.times[k], orc.S[k], orc.I[k],
                  orc.R[k], orc.F[k], es, ei, er);
        }
        o.close();
        sum.oracle_error = worst;
    }

    std::string manifest = fmt::format("# vsir manifest v1\ncommand = meanfield\nversion = {}\nmode = {}\n"
                                       "grid = {}\ndt = {:.17g}\nsteps = {}\ntruncation_floor = {:.17g}\n"
                                       "apriori = {}\n",
                                       version, to_string(config.truncation), cfg.grid, sol.dt, sol.steps,
                                       so.truncation_floor, a.passed() ? "pass" : "fail");
    if (sum.oracle_error) {
        manifest += fmt::format("oracle_sup_error = {:.17g}\n", *sum.oracle_error);
    }
    CsvWriter::write_text(opt.out_dir / "manifest.txt", manifest + "\n# configuration\n" + to_ini(cfg));
    return sum;
}

struct SlopeFit {
    double slope     = 0.0;
    double intercept = 0.0;
    double ci_low    = 0.0;
    double ci_high   = 0.0;
    std::size_t points = 0;
};

/// Least squares of log(y) on log(x) with a two-sided 95% Student-t interval for the slope.
inline SlopeFit fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("slope fit needs paired samples");
    }
    if (x.size() < 3) {
        throw ConfigError("slope fit needs ≥ 3 points");
    }
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::invalid_argument("slope fit needs positive values");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit fit;
    fit.points    = n;
    fit.slope     = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ssr    = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - fit.intercept - fit.slope * lx[i];
        ssr += r * r;
    }
    const double se = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
    const boost::math::students_t t(static_cast<double>(n - 2));
    const double q = boost::math::quantile(boost::math::complement(t, 0.025));
    fit.ci_low     = fit.slope - q * se;
    fit.ci_high    = fit.slope + q * se;
    return fit;
}

struct ReplicateResult {
    std::size_t N         = 0;
    std::size_t replicate = 0;
    std::uint64_t seed    = 0;
    bool ok               = false;
    std::string error;
    TrajectoryDistance distance;
    bool omega_N = false;
    SimStats stats;
    std::size_t events = 0;
    double seconds     = 0.0; // wall clock, telemetry only
};

struct LadderPoint {
    std::size_t N = 0;
    double mean   = 0.0;
    double std_error = 0.0;
    double omega_fraction = 0.0;
    std::size_t failures  = 0;
    std::uint64_t candidates = 0;
    std::size_t events = 0;
    double seconds     = 0.0;
};

struct StudyReport {
    std::vector<LadderPoint> ladder;
    std::vector<ReplicateResult> replicates;
    SlopeFit fit;
    std::size_t failures = 0;
    double c_hat         = 0.0;
    double wall_seconds  = 0.0;
};

inline std::uint64_t replicate_seed(std::uint64_t master, std::size_t N, std::size_t replicate)
{
    return derive_seed(master, {static_cast<std::uint64_t>(StreamTag::Replicate), N, replicate});
}

/// One replicate of the study, reproducible in isolation from (master seed, N, index).
inline ReplicateResult run_replicate(const ExperimentConfig& base, const MeanFieldSolution& reference,
                                     const std::vector<TestFunction>& library, const std::vector<Measure>& components,
                                     double c_hat, std::size_t N, std::size_t replicate)
{
    ReplicateResult r;
    r.N         = N;
    r.replicate = replicate;
    r.seed      = replicate_seed(base.master_seed, N, replicate);
    const auto start = std::chrono::steady_clock::now();
    try {
        ExperimentConfig config = base;
        config.population_size  = N;
        auto pop                = std::make_shared<const Population>(sample_population(config, r.seed));
        SimOptions so;
        so.mode             = config.truncation;
        so.truncation_floor = config.truncation_floor.value_or(c_hat);
        const auto res      = simulate(config, pop, so);
        r.stats             = res.stats;
        r.events            = res.log.events.size();
        r.distance          = trajectory_distance(res.trajectory, reference, library, components);
        const auto probes   = vertex_probe_points(config.domain.dim, 16);
        const auto dens     = empirical_denominators(config.kernel, *pop, 1);
        r.omega_N           = omega_N_holds(config.kernel, *pop, c_hat, probes, dens);
        r.ok                = true;
    }
    catch (const std::exception& e) {
        r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

/// Reference solution shared by every replicate of a study.
inline MeanFieldSolution study_reference(const ConfigFile& cfg, double c_hat, unsigned threads)
{
    const auto& config = cfg.experiment;
    SolverOptions so;
    so.dt               = cfg.dt;
    so.record_stride    = 0;
    so.record_times     = config.snapshot_times;
    so.mode             = config.truncation;
    so.truncation_floor = config.truncation_floor.value_or(c_hat);
    so.threads          = threads;
    return solve_stepping(config, SpatialGrid(config.domain.dim, cfg.grid), so);
}

/// Aggregates replicate rows into per-N statistics and the log-log slope.
inline void summarize_study(StudyReport& rep, const std::vector<std::size_t>& ladder)
{
    rep.ladder.clear();
    rep.failures = 0;
    for (std::size_t N : ladder) {
        LadderPoint p;
        p.N = N;
        std::vector<double> d;
        std::size_t omega = 0;
        for (const auto& r : rep.replicates) {
            if (r.N != N) {
                continue;
            }
            p.seconds += r.seconds;
            if (!r.ok) {
                ++p.failures;
                continue;
            }
            d.push_back(r.distance.aggregate);
            omega += r.omega_N ? 1 : 0;
            p.candidates += r.stats.candidates;
            p.events += r.events;
        }
        rep.failures += p.failures;
        if (!d.empty()) {
            p.mean = std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
            double ss = 0.0;
            for (double v : d) {
                ss += (v - p.mean) * (v - p.mean);
            }
            p.std_error        = d.size() > 1 ? std::sqrt(ss / static_cast<double>(d.size() - 1) / d.size()) : 0.0;
            p.omega_fraction = static_cast<double>(omega) / static_cast<double>(d.size());
        }
        rep.ladder.push_back(p);
    }
    std::vector<double> xs, ys;
    for (const auto& p : rep.ladder) {
        if (p.mean > 0.0) {
            xs.push_back(static_cast<double>(p.N));
            ys.push_back(p.mean);
        }
    }
    rep.fit = fit_loglog_slope(xs, ys);
}

/**
 * converge: study.csv (one row per replicate, phi and component),
 * study_summary.csv, manifest.txt and the non-deterministic telemetry.txt.
 */
inline StudyReport run_convergence(const ConfigFile& input, const RunOptions& opt)
{
    const ConfigFile cfg = apply_overrides(input, opt);
    if (!cfg.study) {
        throw ConfigError("converge needs a [study] section");
    }
    const auto& spec   = *cfg.study;
    const auto& config = cfg.experiment;
    if (spec.n_ladder.size() < 3) {
        throw ConfigError("slope fit needs ≥ 3 points");
    }
    require_valid(config);
    prepare_output_dir(opt.out_dir);
    const auto start = std::chrono::steady_clock::now();

    StudyReport rep;
    rep.c_hat            = estimate_c_hat(config.kernel, config.initial, config.domain.dim, opt.threads);
    const auto reference = study_reference(cfg, rep.c_hat, opt.threads);
    const auto library   = select_test_functions(config.domain.dim, spec.test_functions);

    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t N : spec.n_ladder) {
        for (std::size_t m = 0; m < spec.replicates; ++m) {
            jobs.emplace_back(N, m);
        }
    }
    rep.replicates.resize(jobs.size());
    // largest populations first so the pool stays busy
    std::vector<std::size_t> order(jobs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return jobs[a].first > jobs[b].first;
    });
    parallel_for(0, jobs.size(), opt.threads, [&](std::size_t j) {
        const std::size_t idx = order[j];
        rep.replicates[idx] = run_replicate(config, reference, library, spec.components, rep.c_hat, jobs[idx].first,
                                            jobs[idx].second);
    });
    if (opt.log) {
        for (const auto& r : rep.replicates) {
            if (!r.ok) {
                *opt.log << "warning: replicate " << r.replicate << " at N=" << r.N << " failed: " << r.error
                         << "\n";
            }
        }
    }
    summarize_study(rep, spec.n_ladder);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    CsvWriter rows(opt.out_dir / "study.csv", "study", "N,replicate,phi,component,sup_err,aggregate");
    for (const auto& r : rep.replicates) {
        if (!r.ok) {
            continue;
        }
        for (const auto& e : r.distance.entries) {
            rows.row("{},{},{},{},{:.17g},{:.17g}", r.N, r.replicate, e.phi, to_string(e.component), e.sup_error,
                     r.distance.aggregate);
        }
    }
    rows.close();

    CsvWriter summary(opt.out_dir / "study_summary.csv", "study_summary",
                      "N,replicates,failures,mean_aggregate,stderr_aggregate,omega_N_fraction,candidates,events");
    for (const auto& p : rep.ladder) {
        summary.row("{},{},{},{:.17g},{:.17g},{:.17g},{},{}", p.N, spec.replicates, p.failures, p.mean, p.std_error,
                    p.omega_fraction, p.candidates, p.events);
    }
    summary.row("# slope = {:.17g}, ci95 = [{:.17g}, {:.17g}], intercept = {:.17g}, points = {}", rep.fit.slope,
                rep.fit.ci_low, rep.fit.ci_high, rep.fit.intercept, rep.fit.points);
    summary.close();

    std::string manifest = fmt::format("# vsir manifest v1\ncommand = converge\nversion = {}\nseed = {}\nmode = {}\n"
                                       "c_hat = {:.17g}\nreference_grid = {}\nreference_dt = {:.17g}\n"
                                       "replicate_seed = derive(master, replicate tag, N, index)\n"
                                       "failures = {}\n\n# configuration\n",
                                       version, config.master_seed, to_string(config.truncation), rep.c_hat, cfg.grid,
                                       reference.dt, rep.failures);
    CsvWriter::write_text(opt.out_dir / "manifest.txt", manifest + to_ini(cfg));

    std::string tele = fmt::format("wall_seconds = {:.3f}\nthreads = {}\n", rep.wall_seconds, opt.threads);
    for (const auto& p : rep.ladder) {
        tele += fmt::format("N = {}: replicate_seconds = {:.3f}, candidates = {}, candidates_per_second = {:.0f}\n",
                            p.N, p.seconds, p.candidates, p.seconds > 0 ? p.candidates / p.seconds : 0.0);
    }
    CsvWriter::write_text(opt.out_dir / "telemetry.txt", tele);

    if (10 * rep.failures > rep.replicates.size()) {
        throw std::runtime_error(fmt::format("study failed: {} of {} replicates failed", rep.failures,
                                             rep.replicates.size()));
    }
    return rep;
}

} // namespace vsir
