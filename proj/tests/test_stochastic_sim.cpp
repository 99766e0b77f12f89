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

#include <map>

using namespace vsir_test;

namespace
{

double kval(const Kernel& kernel, ConstPoint x, ConstPoint y)
{
    return kernel.visit([&](const auto& k) {
        return k(x, y);
    });
}

InfectivityTrajectory constant_level(double level, double lambda_star)
{
    return InfectivityTrajectory({{0.0, level, 0.0}}, std::numeric_limits<double>::infinity(), lambda_star);
}

std::shared_ptr<const Population> three_individuals()
{
    // id 0 susceptible, ids 1 and 2 infectious
    return std::make_shared<const Population>(2, std::vector<double>{0.2, 0.3, 0.5, 0.5, 0.8, 0.1}, 1, 2, 0, 3);
}

// Infection rate written with unnormalized sums and the N^{gamma-1} prefactor.
double direct_rate(const ExperimentConfig& c, const Population& pop, std::size_t i,
                   const std::map<std::size_t, double>& levels)
{
    const double n = static_cast<double>(pop.size());
    double s       = 0.0;
    for (const auto& [j, level] : levels) {
        double denom = 0.0;
        for (std::size_t l = 0; l < pop.size(); ++l) {
            denom += kval(c.kernel, pop.position(l), pop.position(j));
        }
        s += kval(c.kernel, pop.position(i), pop.position(j)) * level / std::pow(denom, c.gamma);
    }
    return s / std::pow(n, 1.0 - c.gamma);
}

} // namespace

TEST(GammaN, HomogeneousReduction)
{
    auto config   = homogeneous_markov(0.5, 0.25, 1.0);
    auto pop      = std::make_shared<const Population>(2, std::vector<double>(20, 0.5), 9, 1, 0, 1);
    SimState state(config, pop, {});
    const std::vector<double> x{0.1, 0.9};
    EXPECT_EQ(state.gamma_N(0.0, x), 0.0);
    state.infect(9, 0.0, constant_level(0.5, 0.5));
    EXPECT_DOUBLE_EQ(state.gamma_N(1.0, x), 0.05);
    EXPECT_DOUBLE_EQ(state.thinning_bound(0), config.lambda_star());
}

TEST(GammaN, MatchesTheUnnormalizedRate)
{
    for (double gamma : {0.0, 0.5, 1.0}) {
        auto config   = heterogeneous(gamma);
        config.kernel = Kernel(GaussianBumpKernel{0.3, 0.0});
        const auto pop = three_individuals();
        SimState state(config, pop, {});
        state.infect(1, 0.0, constant_level(0.7, 1.0));
        state.infect(2, 0.0, constant_level(0.4, 1.0));
        const double expected = direct_rate(config, *pop, 0, {{1, 0.7}, {2, 0.4}});
        EXPECT_NEAR(state.gamma_N(2.0, pop->position(0)), expected, 1e-15) << "gamma " << gamma;
        EXPECT_LE(state.gamma_N(2.0, pop->position(0)), state.thinning_bound(0));
    }
}

TEST(GammaN, RawAndTruncatedAgreeAboveTheFloor)
{
    auto config            = heterogeneous(0.5);
    config.population_size = 600;
    auto pop               = std::make_shared<const Population>(sample_population(config, 4));
    const double c_hat     = estimate_c_hat(config.kernel, config.initial, 2);
    const auto dens        = empirical_denominators(config.kernel, *pop);
    ASSERT_TRUE(omega_N_holds(config.kernel, *pop, c_hat, vertex_probe_points(2, 16), dens));
    SimOptions raw, trunc;
    trunc.mode             = RateMode::Truncated;
    trunc.truncation_floor = c_hat;
    SimState a(config, pop, raw), b(config, pop, trunc);
    RandomStream rng(derive_seed(4, StreamTag::Test, 0));
    for (std::size_t j = 570; j < 600; ++j) {
        a.infect(j, 0.0, constant_level(1.0, 1.0));
        b.infect(j, 0.0, constant_level(1.0, 1.0));
    }
    for (int trial = 0; trial < 200; ++trial) {
        const std::vector<double> x{rng.uniform(), rng.uniform()};
        ASSERT_EQ(a.gamma_N(1.0, x), b.gamma_N(1.0, x));
    }
    for (std::size_t i = 0; i < 570; ++i) {
        ASSERT_EQ(a.thinning_bound(i), b.thinning_bound(i));
    }
}

TEST(Thinning, FrozenStateAcceptanceRate)
{
    auto config    = heterogeneous(0.5);
    const auto pop = three_individuals();
    SimState state(config, pop, {});
    state.infect(1, 0.0, constant_level(0.6, 1.0));
    state.infect(2, 0.0, constant_level(0.9, 1.0));
    const double rate  = state.gamma_N(0.0, pop->position(0));
    const double bound = state.thinning_bound(0);
    const double p     = rate / bound;
    ASSERT_GT(p, 0.0);
    ASSERT_LT(p, 1.0);
    CandidateStream stream(derive_seed(10, StreamTag::Test, 0), bound);
    const std::size_t M  = 200000;
    std::size_t accepted = 0;
    for (std::size_t k = 0; k < M; ++k) {
        accepted += state.accepts(0, 0.0, stream.mark()) ? 1 : 0;
    }
    const double phat = static_cast<double>(accepted) / M;
    EXPECT_LT(std::abs(phat - p), 4.0 * std::sqrt(p * (1.0 - p) / M));
}

TEST(Simulate, NoInfectiousMeansNoEvents)
{
    auto config            = heterogeneous(0.5);
    config.initial.frac_S  = 1.0;
    config.initial.frac_I  = 0.0;
    config.population_size = 300;
    const auto res         = simulate(config, sample_population(config), {});
    EXPECT_TRUE(res.log.events.empty());
    const auto& traj = res.trajectory;
    for (const auto& s : traj.snapshots()) {
        EXPECT_EQ(traj.pair(s, Measure::S, one), 1.0);
    }
}

TEST(Simulate, ZeroInfectivityOnlyRecovers)
{
    auto config                = homogeneous_markov(0.0, 0.5);
    config.initial.frac_S      = 0.9;
    config.initial.frac_I      = 0.1;
    config.population_size     = 200;
    const auto res             = simulate(config, sample_population(config), {});
    std::size_t recoveries     = 0;
    for (const auto& e : res.log.events) {
        ASSERT_EQ(e.kind, EventKind::Recovery);
        ++recoveries;
    }
    EXPECT_EQ(recoveries, 20u); // all eta < 40 with overwhelming probability
    const auto& last = res.trajectory.snapshots().back();
    EXPECT_EQ(res.trajectory.pair(last, Measure::I, one), 0.0);
    EXPECT_NEAR(res.trajectory.pair(last, Measure::S, one), 0.9, 1e-14);
}

TEST(Simulate, EventLogInvariants)
{
    for (double gamma : {0.0, 1.0}) {
        auto config            = heterogeneous(gamma);
        config.population_size = 800;
        SimOptions opt;
        opt.check_dominance = true;
        const auto pop      = sample_population(config, 21);
        const auto res      = simulate(config, pop, opt);
        EXPECT_LE(res.stats.max_rate_to_bound, 1.0);
        EXPECT_GT(res.stats.accepted, 10u);

        std::map<std::size_t, InfectionRecord> records;
        for (const auto& r : res.log.records) {
            ASSERT_TRUE(records.emplace(r.id, r).second) << "second infection of " << r.id;
        }
        std::vector<int> stage(pop.size());
        for (std::size_t i = 0; i < pop.size(); ++i) {
            stage[i] = static_cast<int>(pop.initial_compartment(i));
        }
        double last = 0.0;
        for (const auto& e : res.log.events) {
            ASSERT_GE(e.time, last);
            last = e.time;
            if (e.kind == EventKind::Infection) {
                ASSERT_EQ(stage[e.id], 0);
                stage[e.id] = 1;
                ASSERT_EQ(records.at(e.id).infection_time, e.time);
            }
            else {
                ASSERT_EQ(stage[e.id], 1);
                stage[e.id] = 2;
                const auto& r = records.at(e.id);
                ASSERT_EQ(e.time, r.infection_time + r.eta);
            }
        }
    }
}

TEST(Simulate, SnapshotsAreConservativeAndMonotone)
{
    auto config            = heterogeneous(0.5);
    config.population_size = 1000;
    const auto res         = simulate(config, sample_population(config, 8), {});
    const auto& traj       = res.trajectory;
    const auto library     = default_test_functions(2);
    ASSERT_EQ(traj.snapshots().size(), config.snapshot_times.size());
    double prev_S = 2.0, prev_R = -1.0;
    for (const auto& s : traj.snapshots()) {
        for (const auto& phi : library) {
            ASSERT_EQ(traj.pair_union(s, phi), traj.population().pair_total(phi)) << phi.name();
            const double sum = traj.pair(s, Measure::S, phi) + traj.pair(s, Measure::I, phi) +
                               traj.pair(s, Measure::R, phi);
            ASSERT_NEAR(sum, traj.population().pair_total(phi), 1e-14);
        }
        const double S = traj.pair(s, Measure::S, one), R = traj.pair(s, Measure::R, one);
        EXPECT_LE(S, prev_S);
        EXPECT_GE(R, prev_R);
        prev_S = S;
        prev_R = R;
        const double force = traj.pair(s, Measure::F, one);
        EXPECT_GE(force, 0.0);
        EXPECT_LE(force, config.lambda_star() * (1.0 - S));
        for (std::size_t i = 0; i < s.force.size(); ++i) {
            if (s.compartments[i] != Compartment::Infectious) {
                ASSERT_EQ(s.force[i], 0.0);
            }
        }
    }
}

TEST(Simulate, RawAndTruncatedLogsCoincideOnOmegaN)
{
    auto config            = heterogeneous(0.5);
    config.population_size = 1500;
    auto pop               = std::make_shared<const Population>(sample_population(config, 31));
    const double c_hat     = estimate_c_hat(config.kernel, config.initial, 2);
    ASSERT_TRUE(omega_N_holds(config.kernel, *pop, c_hat, vertex_probe_points(2, 16),
                              empirical_denominators(config.kernel, *pop)));
    SimOptions trunc;
    trunc.mode             = RateMode::Truncated;
    trunc.truncation_floor = c_hat;
    const auto a           = simulate(config, pop, {});
    const auto b           = simulate(config, pop, trunc);
    EXPECT_GT(a.log.events.size(), 100u);
    EXPECT_TRUE(a.log == b.log);
}

TEST(Simulate, TruncationChangesRatesOffOmegaN)
{
    // a forced floor above every denominator makes the two modes differ
    auto config            = heterogeneous(0.5);
    config.population_size = 500;
    auto pop               = std::make_shared<const Population>(sample_population(config, 32));
    SimOptions trunc;
    trunc.mode             = RateMode::Truncated;
    trunc.truncation_floor = 10.0;
    EXPECT_FALSE(simulate(config, pop, {}).log == simulate(config, pop, trunc).log);
}

TEST(Simulate, ThreadCountDoesNotChangeTheLog)
{
    auto config            = heterogeneous(1.0);
    config.population_size = 1200;
    auto pop               = std::make_shared<const Population>(sample_population(config, 41));
    SimOptions one_thread, four;
    four.threads = 4;
    EXPECT_TRUE(simulate(config, pop, one_thread).log == simulate(config, pop, four).log);
}

TEST(PairSnapshot, ExamplesAndLookup)
{
    auto config            = homogeneous_markov();
    config.population_size = 10000;
    config.horizon         = 1.0;
    config.snapshot_times  = {0.0, 1.0};
    const auto res         = simulate(config, sample_population(config, 3), {});
    EXPECT_EQ(pair_snapshot(res.trajectory, 0.0, Measure::S, one), 0.99);
    const double x1 = pair_snapshot(res.trajectory, 0.0, Measure::S, [](ConstPoint x) {
        return x[0];
    });
    EXPECT_LT(std::abs(x1 - 0.5 * 0.99), 3.0 * std::sqrt(1.0 / 12.0) / 100.0);
    EXPECT_THROW(pair_snapshot(res.trajectory, 0.5, Measure::S, one), LookupError);
}

TEST(Simulate, RejectsNonPositiveHorizon)
{
    auto config    = homogeneous_markov();
    config.horizon = 0.0;
    EXPECT_THROW(simulate(config, sample_population(config), {}), ConfigError);
}
