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

#include <boost/math/tools/roots.hpp>
#include <gtest/gtest.h>

using namespace vsir_test;

namespace
{

using Guess = MeanFieldSolver::PicardGuess;

double total(const MeanFieldSolution& sol, std::size_t r, Measure m)
{
    return sol.pair_record(r, m, one);
}

double sup_difference(const MeanFieldSolution& a, const MeanFieldSolution& b)
{
    double d = 0.0;
    for (const auto& pair : {std::pair{&a.S, &b.S}, std::pair{&a.F, &b.F}, std::pair{&a.I, &b.I},
                             std::pair{&a.R, &b.R}}) {
        for (std::size_t i = 0; i < pair.first->size(); ++i) {
            d = std::max(d, std::abs((*pair.first)[i] - (*pair.second)[i]));
        }
    }
    return d;
}

// sup over the oracle nodes of the total-mass discrepancy in S, I, R, F
double oracle_error(const ExperimentConfig& config, std::size_t grid_n, double dt, double oracle_dt)
{
    SolverOptions opt;
    opt.dt            = dt;
    opt.record_stride = static_cast<std::size_t>(std::lround(oracle_dt / dt));
    const auto sol    = solve_stepping(config, SpatialGrid(config.domain.dim, grid_n), opt);
    const auto ref    = homogeneous_oracle(config, oracle_dt);
    double err       = 0.0;
    for (std::size_t r = 0; r < sol.records(); ++r) {
        const auto k = ref.index(sol.times[r]);
        err          = std::max({err, std::abs(total(sol, r, Measure::S) - ref.S[k]),
                                 std::abs(total(sol, r, Measure::I) - ref.I[k]),
                                 std::abs(total(sol, r, Measure::R) - ref.R[k]),
                                 std::abs(total(sol, r, Measure::F) - ref.F[k])});
    }
    return err;
}

ExperimentConfig small_heterogeneous(double gamma, double horizon = 5.0)
{
    auto c           = heterogeneous(gamma, horizon);
    c.snapshot_times = time_range(0.0, horizon, 0.5);
    return c;
}

} // namespace

TEST(MeanField, NoInfectiousKeepsTheInitialState)
{
    auto config           = heterogeneous(0.5);
    config.initial.frac_S = 1.0;
    config.initial.frac_I = 0.0;
    const auto sol        = solve_stepping(config, SpatialGrid(2, 16), {});
    for (std::size_t r = 0; r < sol.records(); ++r) {
        for (std::size_t a = 0; a < sol.nodes(); ++a) {
            ASSERT_EQ(sol.field(Measure::S, r)[a], sol.initial_S[a]);
            ASSERT_EQ(sol.field(Measure::F, r)[a], 0.0);
            ASSERT_EQ(sol.field(Measure::I, r)[a], 0.0);
        }
    }
}

TEST(MeanField, ZeroInfectivityOnlyRecovers)
{
    auto config = homogeneous_markov(0.0, 0.5);
    const auto sol = solve_stepping(config, SpatialGrid(2, 4), {});
    for (std::size_t r = 0; r < sol.records(); ++r) {
        const double t = sol.times[r];
        EXPECT_NEAR(total(sol, r, Measure::S), 0.99, 1e-14);
        EXPECT_NEAR(total(sol, r, Measure::I), 0.01 * std::exp(-0.5 * t), 1e-14);
        EXPECT_NEAR(total(sol, r, Measure::R), 0.01 * -std::expm1(-0.5 * t), 1e-14);
    }
}

TEST(MeanField, MatchesTheHomogeneousOracleForExponentialLaws)
{
    for (double gamma : {0.0, 0.5, 1.0}) {
        auto config   = homogeneous_markov(0.5, 0.25, gamma);
        config.kernel = Kernel(ConstantKernel{0.6});
        EXPECT_LT(oracle_error(config, 8, 1e-3, 1e-3), 5e-3) << "gamma " << gamma;
    }
}

TEST(MeanField, MatchesTheHomogeneousOracleForCompactLaws)
{
    auto config                = homogeneous_markov();
    config.horizon             = 20.0;
    config.infectivity_initial = InfectivityModel(FixedDurationInfectivity{0.8, 3.0});
    config.infectivity_new     = InfectivityModel(HumpInfectivity{1.5, 1.0, 2.0, 5.0});
    EXPECT_LT(oracle_error(config, 4, 1e-3, 1e-2), 5e-3);

    TabulatedInfectivity tab;
    tab.pieces             = 2;
    tab.levels             = {0.0, 0.6, 1.2};
    tab.level_probs        = {0.2, 0.5, 0.3};
    tab.durations          = {1.0, 2.5};
    tab.duration_probs     = {0.5, 0.5};
    config.infectivity_new = InfectivityModel(tab);
    EXPECT_LT(oracle_error(config, 4, 1e-3, 1e-2), 5e-3);
}

TEST(MeanField, OracleRefusesHeterogeneousInput)
{
    EXPECT_THROW(homogeneous_oracle(heterogeneous(0.5), 1e-2), ConfigError);
    auto config   = homogeneous_markov();
    config.kernel = Kernel(GaussianBumpKernel{0.3, 0.1});
    EXPECT_THROW(homogeneous_oracle(config, 1e-2), ConfigError);
}

TEST(MeanField, FinalSizeOfTheMarkovEpidemic)
{
    // S_inf = S_0 exp(-(a / rho)(1 - S_inf)) for a constant kernel equal to one
    auto config    = homogeneous_markov(0.5, 0.25);
    config.horizon = 200.0;
    SolverOptions opt;
    opt.record_stride = 0;
    const auto sol    = solve_stepping(config, SpatialGrid(2, 2), opt);
    auto f            = [](double s) {
        return s - 0.99 * std::exp(-2.0 * (1.0 - s));
    };
    boost::math::tools::eps_tolerance<double> tol(50);
    const auto [lo, hi] = boost::math::tools::bisect(f, 1e-6, 0.5, tol);
    const double R_inf  = 1.0 - 0.5 * (lo + hi);
    EXPECT_NEAR(R_inf, 0.8002, 1e-3);
    EXPECT_NEAR(total(sol, sol.records() - 1, Measure::R), R_inf, 1e-2);
}

TEST(MeanField, ConservationPositivityAndMonotoneS)
{
    for (double gamma : {0.0, 0.5, 1.0}) {
        const auto config = heterogeneous(gamma);
        const auto sol    = solve_stepping(config, SpatialGrid(2, 24), {});
        for (std::size_t r = 0; r < sol.records(); ++r) {
            const auto S = sol.field(Measure::S, r), I = sol.field(Measure::I, r), R = sol.field(Measure::R, r),
                       F = sol.field(Measure::F, r);
            for (std::size_t a = 0; a < sol.nodes(); ++a) {
                ASSERT_NEAR(S[a] + I[a] + R[a], sol.mu_bar[a], 1e-10);
                ASSERT_GE(S[a], 0.0);
                ASSERT_GE(I[a], -1e-14);
                ASSERT_GE(R[a], 0.0);
                ASSERT_GE(F[a], 0.0);
                if (r > 0) {
                    ASSERT_LE(S[a], sol.field(Measure::S, r - 1)[a]);
                }
            }
        }
    }
}

TEST(MeanField, SusceptibleFollowsTheCumulativeRate)
{
    const auto config = heterogeneous(0.5, 10.0);
    SolverOptions opt;
    opt.dt         = 5e-3;
    const auto sol = solve_stepping(config, SpatialGrid(2, 12), opt);
    double gamma_sup = 0.0;
    for (double g : sol.Gamma) {
        gamma_sup = std::max(gamma_sup, g);
    }
    std::vector<double> trapezoid(sol.nodes(), 0.0);
    for (std::size_t r = 0; r < sol.records(); ++r) {
        const auto S   = sol.field(Measure::S, r);
        const auto cum = sol.cumulative_field(r);
        if (r > 0) {
            const auto g0 = sol.gamma_field(r - 1), g1 = sol.gamma_field(r);
            for (std::size_t a = 0; a < sol.nodes(); ++a) {
                trapezoid[a] += 0.5 * sol.dt * (g0[a] + g1[a]);
            }
        }
        for (std::size_t a = 0; a < sol.nodes(); ++a) {
            ASSERT_EQ(S[a], sol.initial_S[a] * std::exp(-cum[a]));
            ASSERT_LE(std::abs(cum[a] - trapezoid[a]), 0.5 * sol.dt * gamma_sup + 1e-12);
        }
    }
}

TEST(MeanField, StepHalvingShowsFirstOrderConvergence)
{
    const auto config = small_heterogeneous(0.5);
    SolverOptions opt;
    opt.dt        = 0.04;
    const auto rep = step_halving_study(config, SpatialGrid(2, 8), opt, 4, {1.0, 2.0, 3.0, 4.0, 5.0});
    ASSERT_EQ(rep.ratios.size(), 3u);
    for (double ratio : rep.ratios) {
        EXPECT_GE(ratio, 1.8);
        EXPECT_LE(ratio, 2.2);
    }
}

TEST(MeanField, GridRefinementConverges)
{
    const auto config = small_heterogeneous(0.5);
    auto final_total  = [&](std::size_t n) {
        SolverOptions opt;
        opt.record_stride = 0;
        const auto sol    = solve_stepping(config, SpatialGrid(2, n), opt);
        return total(sol, sol.records() - 1, Measure::R);
    };
    const double fine = final_total(96);
    const double e12  = std::abs(final_total(12) - fine);
    const double e24  = std::abs(final_total(24) - fine);
    const double e48  = std::abs(final_total(48) - fine);
    EXPECT_LT(e24, e12);
    EXPECT_LT(e48, e24);
    EXPECT_LT(e48, 1e-3);
}

TEST(MeanField, MoreInfectivityInfectsMore)
{
    double previous = -1.0;
    for (double a : {0.5, 1.0, 1.5, 2.0}) {
        auto config                = heterogeneous(0.5, 10.0);
        config.infectivity_initial = InfectivityModel(MarkovInfectivity{a, 0.25});
        config.infectivity_new     = InfectivityModel(MarkovInfectivity{a, 0.25});
        SolverOptions opt;
        opt.record_stride = 0;
        const auto sol    = solve_stepping(config, SpatialGrid(2, 12), opt);
        const double ever = 1.0 - total(sol, sol.records() - 1, Measure::S);
        EXPECT_GT(ever, previous) << a;
        previous = ever;
    }
}

TEST(MeanField, AprioriBoundsHold)
{
    for (double gamma : {0.0, 0.5, 1.0}) {
        const auto config = heterogeneous(gamma);
        const auto sol    = solve_stepping(config, SpatialGrid(2, 16), {});
        const auto rep    = check_apriori_bounds(sol, config);
        EXPECT_TRUE(rep.passed()) << gamma;
        EXPECT_EQ(rep.S_violations, 0u);
        EXPECT_LE(rep.F_max, rep.F_bound);
        EXPECT_GT(rep.d_inf, 0.0);
    }
}

TEST(MeanField, TruncationBelowTheInfimumChangesNothing)
{
    const auto config = heterogeneous(0.5, 5.0);
    SolverOptions raw, trunc;
    trunc.mode             = RateMode::Truncated;
    const auto a           = solve_stepping(config, SpatialGrid(2, 12), raw);
    trunc.truncation_floor = *std::min_element(a.denominators.begin(), a.denominators.end());
    const auto b           = solve_stepping(config, SpatialGrid(2, 12), trunc);
    EXPECT_EQ(sup_difference(a, b), 0.0);
}

TEST(MeanField, InvalidSettingsAreRejected)
{
    const auto config = heterogeneous(0.5);
    SolverOptions opt;
    opt.dt = 0.0;
    EXPECT_THROW(solve_stepping(config, SpatialGrid(2, 8), opt), ConfigError);
    opt.dt   = 1e-2;
    opt.mode = RateMode::Truncated;
    EXPECT_THROW(solve_stepping(config, SpatialGrid(2, 8), opt), ConfigError);
    EXPECT_THROW(solve_stepping(config, SpatialGrid(3, 4), {}), ConfigError);
    // population absent from half the box and a short-range kernel: d vanishes there
    auto flat                = config;
    flat.kernel              = Kernel(TopHatKernel{0.01, 1.0});
    flat.initial.density_S   = Density(PiecewiseConstantDensity{2, {2.0, 0.0, 2.0, 0.0}});
    flat.initial.density_I   = flat.initial.density_S;
    EXPECT_THROW(solve_stepping(flat, SpatialGrid(2, 8), {}), ConfigError);
}

TEST(Picard, SteppingSolutionIsAFixedPoint)
{
    const auto config = small_heterogeneous(0.5);
    const MeanFieldSolver solver(config, SpatialGrid(2, 8), {});
    const auto stepping = solver.solve_stepping();
    const auto sol      = solver.solve_picard(Guess::ZeroForce, 1e-10, 5, &stepping);
    ASSERT_TRUE(sol.picard);
    EXPECT_LE(sol.picard->iterations, 2u);
    EXPECT_LT(sup_difference(sol, stepping), 1e-10);
}

TEST(Picard, GuessesConvergeToTheSameSolution)
{
    const auto config = small_heterogeneous(0.5);
    const MeanFieldSolver solver(config, SpatialGrid(2, 8), {});
    const double tol = 1e-9;
    const auto zero  = solver.solve_picard(Guess::ZeroForce, tol, 500);
    const auto full  = solver.solve_picard(Guess::MaximalForce, tol, 500);
    EXPECT_LT(sup_difference(zero, full), 10.0 * tol);
    EXPECT_LT(sup_difference(zero, solver.solve_stepping()), 10.0 * tol);
    for (double q : zero.picard->contraction) {
        EXPECT_LT(q, 1.0);
    }
}

TEST(Picard, NoInfectiousConvergesAtOnce)
{
    auto config           = small_heterogeneous(0.5);
    config.initial.frac_S = 1.0;
    config.initial.frac_I = 0.0;
    const auto sol        = solve_picard(config, SpatialGrid(2, 6), {}, 1e-12, 10);
    EXPECT_EQ(sol.picard->iterations, 1u);
    EXPECT_EQ(sol.picard->residuals.front(), 0.0);
}

TEST(Picard, ReportsNonConvergence)
{
    const auto config = small_heterogeneous(0.5);
    try {
        solve_picard(config, SpatialGrid(2, 6), {}, 1e-14, 2, Guess::MaximalForce);
        FAIL() << "expected NonConvergenceError";
    }
    catch (const NonConvergenceError& e) {
        EXPECT_GT(e.residual(), 1e-14);
    }
}

TEST(Picard, RejectsMismatchedInitialGuess)
{
    const auto config = small_heterogeneous(0.5);
    const MeanFieldSolver coarse(config, SpatialGrid(2, 6), {});
    const MeanFieldSolver fine(config, SpatialGrid(2, 8), {});
    const auto guess = coarse.solve_stepping();
    EXPECT_THROW(fine.solve_picard(Guess::ZeroForce, 1e-8, 5, &guess), ConfigError);
}
