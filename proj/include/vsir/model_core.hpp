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

#include "vsir/density.hpp"
#include "vsir/errors.hpp"
#include "vsir/geometry.hpp"
#include "vsir/infectivity.hpp"
#include "vsir/kernel.hpp"
#include "vsir/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vsir
{

enum class Compartment : std::uint8_t
{
    Susceptible = 0,
    Infectious  = 1,
    Recovered   = 2,
};

/// The four normalized empirical (or limiting) measures: susceptible,
/// infectious, recovered and force of infection.
enum class Measure
{
    S,
    I,
    R,
    F,
};

inline const char* to_string(Measure m)
{
    static const char* names[] = {"S", "I", "R", "F"};
    return names[static_cast<int>(m)];
}

enum class RateMode
{
    Raw,
    Truncated,
};

inline const char* to_string(RateMode m)
{
    return m == RateMode::Raw ? "raw" : "truncated";
}

struct InitialCondition {
    double frac_S = 1.0;
    double frac_I = 0.0;
    double frac_R = 0.0;
    Density density_S;
    Density density_I;
    Density density_R;

    /// Density of the whole population, frac_S pi_S + frac_I pi_I + frac_R pi_R.
    double total_density(ConstPoint x) const
    {
        double v = 0.0;
        if (frac_S > 0.0) {
            v += frac_S * density_S(x);
        }
        if (frac_I > 0.0) {
            v += frac_I * density_I(x);
        }
        if (frac_R > 0.0) {
            v += frac_R * density_R(x);
        }
        return v;
    }
};

struct ExperimentConfig {
    Domain domain;
    double gamma   = 1.0;
    double horizon = 1.0;
    Kernel kernel;
    bool allow_discontinuous_kernel = false;
    InfectivityModel infectivity_initial;
    InfectivityModel infectivity_new;
    InitialCondition initial;
    std::size_t population_size = 1;
    std::uint64_t master_seed   = 0;
    std::vector<double> snapshot_times{0.0};
    RateMode truncation = RateMode::Raw;
    /// Floor c used by the truncated rate; estimated from the limit denominator when unset.
    std::optional<double> truncation_floor;

    /// max of the two infectivity bounds.
    double lambda_star() const
    {
        return std::max(infectivity_initial.lambda_star(), infectivity_new.lambda_star());
    }
};

/// Read-only view of one individual.
struct Individual {
    std::size_t id;
    ConstPoint position;
    Compartment initial_compartment;
    std::optional<double> infection_time;
    std::uint64_t trajectory_seed;
};

/// N individuals with static positions. Ids [0, S) are susceptible at time 0,
/// [S, S+I) infectious, the rest recovered.
class Population
{
public:
    Population() = default;
    Population(std::size_t dim, std::vector<double> positions, std::size_t n_s, std::size_t n_i, std::size_t n_r,
               std::uint64_t master_seed)
        : m_dim(dim)
        , m_positions(std::move(positions))
        , m_counts{n_s, n_i, n_r}
        , m_master_seed(master_seed)
    {
        if (m_positions.size() != dim * (n_s + n_i + n_r)) {
            throw ConfigError("population positions do not match the subgroup counts");
        }
    }

    std::size_t size() const
    {
        return m_counts[0] + m_counts[1] + m_counts[2];
    }
    std::size_t dim() const
    {
        return m_dim;
    }
    std::size_t initial_count(Compartment c) const
    {
        return m_counts[static_cast<int>(c)];
    }
    Compartment initial_compartment(std::size_t id) const
    {
        if (id < m_counts[0]) {
            return Compartment::Susceptible;
        }
        return id < m_counts[0] + m_counts[1] ? Compartment::Infectious : Compartment::Recovered;
    }
    ConstPoint position(std::size_t id) const
    {
        return {m_positions.data() + id * m_dim, m_dim};
    }
    const std::vector<double>& positions() const
    {
        return m_positions;
    }
    std::uint64_t master_seed() const
    {
        return m_master_seed;
    }
    std::uint64_t trajectory_seed(std::size_t id) const
    {
        return derive_seed(m_master_seed, StreamTag::Trajectory, id);
    }
    std::uint64_t candidate_seed(std::size_t id) const
    {
        return derive_seed(m_master_seed, StreamTag::Candidates, id);
    }
    Individual individual(std::size_t id) const
    {
        const auto c = initial_compartment(id);
        return {id, position(id), c, c == Compartment::Infectious ? std::optional<double>(0.0) : std::nullopt,
                trajectory_seed(id)};
    }

    /// (mu^N, phi) with mu^N normalized by 1/N, summed in id order.
    template <class Fn>
    double pair_total(Fn&& phi) const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            s += phi(position(i));
        }
        return s / static_cast<double>(size());
    }

private:
    std::size_t m_dim = 0;
    std::vector<double> m_positions;
    std::size_t m_counts[3] = {0, 0, 0};
    std::uint64_t m_master_seed = 0;
};

struct SubgroupCounts {
    std::size_t susceptible;
    std::size_t infectious;
    std::size_t recovered;
};

/// Nearest integer, ties to even.
inline long long round_half_even(double x)
{
    const double f = std::floor(x);
    const double d = x - f;
    auto r         = static_cast<long long>(f);
    if (d > 0.5 || (d == 0.5 && r % 2 != 0)) {
        ++r;
    }
    return r;
}

/// S = round(N frac_S), I = round(N frac_I), R = N - S - I, ties rounded to even.
inline SubgroupCounts subgroup_counts(std::size_t n, const InitialCondition& ic)
{
    const auto s = round_half_even(static_cast<double>(n) * ic.frac_S);
    const auto i = round_half_even(static_cast<double>(n) * ic.frac_I);
    const auto r = static_cast<long long>(n) - s - i;
    if (s < 0 || i < 0 || r < 0) {
        throw ConfigError("rounded subgroup counts are negative (S=" + std::to_string(s) +
                          ", I=" + std::to_string(i) + ", R=" + std::to_string(r) + ")");
    }
    return {static_cast<std::size_t>(s), static_cast<std::size_t>(i), static_cast<std::size_t>(r)};
}

/// Pure function of (config, seed): positions of individual `id` come from its own substream.
inline Population sample_population(const ExperimentConfig& config, std::uint64_t seed)
{
    const auto counts   = subgroup_counts(config.population_size, config.initial);
    const std::size_t d = config.domain.dim;
    const std::size_t n = config.population_size;
    std::vector<double> positions(n * d);
    for (std::size_t id = 0; id < n; ++id) {
        RandomStream rng(derive_seed(seed, StreamTag::Position, id));
        const Density& density = id < counts.susceptible                       ? config.initial.density_S
                                 : id < counts.susceptible + counts.infectious ? config.initial.density_I
                                                                               : config.initial.density_R;
        density.sample(rng, std::span<double>(positions.data() + id * d, d));
    }
    return Population(d, std::move(positions), counts.susceptible, counts.infectious, counts.recovered, seed);
}

inline Population sample_population(const ExperimentConfig& config)
{
    return sample_population(config, config.master_seed);
}

namespace detail
{
inline std::size_t validation_nodes_per_axis(std::size_t dim)
{
    switch (dim) {
    case 1:
        return 4096;
    case 2:
        return 128;
    case 3:
        return 40;
    default:
        return 8;
    }
}
} // namespace detail

/**
 * Checks the type invariants and the numeric content of the regularity
 * assumptions: densities integrate to one, the population density is
 * bounded above and away from zero, K stays bounded below near the
 * diagonal, and the limiting denominator is positive.
 */
inline std::vector<std::string> validate_config(const ExperimentConfig& config)
{
    std::vector<std::string> v;
    const auto& ic = config.initial;
    const std::size_t dim = config.domain.dim;

    if (dim == 0) {
        v.emplace_back("domain dimension must be at least 1");
        return v;
    }
    if (!(config.gamma >= 0.0 && config.gamma <= 1.0)) {
        v.emplace_back("gamma must lie in [0,1] (got " + std::to_string(config.gamma) + ")");
    }
    if (!(config.horizon > 0.0)) {
        v.emplace_back("horizon T must be positive");
    }
    if (config.population_size < 1) {
        v.emplace_back("population size N must be at least 1");
    }
    for (std::size_t k = 0; k < config.snapshot_times.size(); ++k) {
        const double t = config.snapshot_times[k];
        if (!(t >= 0.0 && t <= config.horizon)) {
            v.emplace_back("snapshot time " + std::to_string(t) + " outside [0,T]");
        }
        if (k > 0 && !(t > config.snapshot_times[k - 1])) {
            v.emplace_back("snapshot times must be strictly increasing");
        }
    }
    if (config.truncation_floor && !(*config.truncation_floor > 0.0)) {
        v.emplace_back("truncation floor c must be positive");
    }
    for (double f : {ic.frac_S, ic.frac_I, ic.frac_R}) {
        if (!(f >= 0.0 && f <= 1.0)) {
            v.emplace_back("fractions must lie in [0,1]");
            break;
        }
    }
    if (std::abs(ic.frac_S + ic.frac_I + ic.frac_R - 1.0) > 1e-12) {
        v.emplace_back("fractions do not sum to 1");
    }
    else if (config.population_size >= 1) {
        try {
            subgroup_counts(config.population_size, ic);
        }
        catch (const ConfigError& e) {
            v.emplace_back(e.what());
        }
    }
    for (auto& msg : config.kernel.violations()) {
        v.push_back(std::move(msg));
    }
    if (!config.kernel.is_continuous() && !config.allow_discontinuous_kernel) {
        v.emplace_back("kernel " + config.kernel.name() +
                       " is discontinuous; set allow_discontinuous_kernel to use it");
    }
    for (auto& msg : config.infectivity_initial.violations()) {
        v.push_back("infectivity.initial: " + msg);
    }
    for (auto& msg : config.infectivity_new.violations()) {
        v.push_back("infectivity.new: " + msg);
    }
    if (!v.empty()) {
        return v;
    }

    // Densities and the population density on a midpoint validation grid.
    const SpatialGrid grid(dim, detail::validation_nodes_per_axis(dim));
    const std::pair<const char*, const Density*> densities[] = {
        {"density_S", &ic.density_S}, {"density_I", &ic.density_I}, {"density_R", &ic.density_R}};
    for (const auto& [name, density] : densities) {
        if (const auto* pc = std::get_if<PiecewiseConstantDensity>(&density->variant())) {
            std::size_t cells = 1;
            for (std::size_t a = 0; a < dim; ++a) {
                cells *= pc->cells_per_axis;
            }
            if (pc->cells_per_axis == 0 || pc->values.size() != cells) {
                v.push_back(std::string(name) + ": piecewise-constant table has the wrong number of cells");
                continue;
            }
        }
        if (const auto* gm = std::get_if<GaussianMixtureDensity>(&density->variant())) {
            bool shape_ok = !gm->components.empty();
            for (const auto& c : gm->components) {
                shape_ok = shape_ok && c.center.size() == dim && c.sigma > 0.0 && c.weight >= 0.0;
            }
            if (!shape_ok) {
                v.push_back(std::string(name) + ": gaussian mixture components are malformed");
                continue;
            }
        }
        double integral = 0.0;
        double lowest   = std::numeric_limits<double>::infinity();
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const double f = (*density)(grid.node(g));
            integral += f * grid.weight();
            lowest = std::min(lowest, f);
        }
        if (lowest < 0.0) {
            v.push_back(std::string(name) + " takes negative values");
        }
        if (std::abs(integral - 1.0) > 1e-3) {
            v.push_back(std::string(name) + " does not integrate to 1 (quadrature gives " + std::to_string(integral) +
                        ")");
        }
    }
    double mu_inf = std::numeric_limits<double>::infinity();
    double mu_sup = 0.0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double f = ic.total_density(grid.node(g));
        mu_inf = std::min(mu_inf, f);
        mu_sup = std::max(mu_sup, f);
    }
    if (!(mu_inf > 0.0)) {
        v.emplace_back("inf mu_bar = 0: the population density must be bounded away from zero");
    }
    if (!std::isfinite(mu_sup)) {
        v.emplace_back("sup mu_bar is not finite");
    }

    // Near-diagonal lower bound: K(y, y + r e) > 0 for short displacements.
    const double r_check = 0.05;
    const SpatialGrid probes(dim, dim <= 2 ? 16 : 6);
    double k_low = std::numeric_limits<double>::infinity();
    std::vector<double> shifted(dim);
    for (std::size_t g = 0; g < probes.size(); ++g) {
        const auto y = probes.node(g);
        for (std::size_t a = 0; a < dim; ++a) {
            for (double sign : {-1.0, 1.0}) {
                std::copy(y.begin(), y.end(), shifted.begin());
                shifted[a] = std::clamp(y[a] + sign * r_check, 0.0, 1.0);
                k_low = std::min(k_low, config.kernel(y, shifted));
            }
        }
        k_low = std::min(k_low, config.kernel(y, y));
    }
    if (!(k_low > 0.0)) {
        v.emplace_back("kernel is not bounded below near the diagonal (K = 0 at distance " + std::to_string(r_check) +
                       ")");
    }

    // inf_y of the limiting denominator, on a coarse midpoint quadrature.
    const SpatialGrid coarse(dim, dim <= 2 ? 32 : 8);
    const auto probe_pts = vertex_probe_points(dim, dim <= 2 ? 16 : 4);
    std::vector<double> mu(coarse.size());
    for (std::size_t g = 0; g < coarse.size(); ++g) {
        mu[g] = ic.total_density(coarse.node(g));
    }
    double d_inf = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p * dim < probe_pts.size(); ++p) {
        ConstPoint y(probe_pts.data() + p * dim, dim);
        double d = 0.0;
        for (std::size_t g = 0; g < coarse.size(); ++g) {
            d += coarse.weight() * config.kernel(coarse.node(g), y) * mu[g];
        }
        d_inf = std::min(d_inf, d);
    }
    if (!(d_inf > 0.0)) {
        v.emplace_back("limit denominator inf_y int K(z,y) mu_bar(dz) is not positive");
    }
    return v;
}

} // namespace vsir
