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

#include "vsir/geometry.hpp"
#include "vsir/kernel.hpp"
#include "vsir/model_core.hpp"
#include "vsir/parallel.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace vsir
{

/// d^N(y) = (1/N) sum_l K(X^l, y), summed in id order.
inline double empirical_denominator(const Kernel& kernel, const Population& population, ConstPoint y)
{
    return kernel.visit([&](const auto& k) {
        double s = 0.0;
        for (std::size_t l = 0; l < population.size(); ++l) {
            s += k(population.position(l), y);
        }
        return s / static_cast<double>(population.size());
    });
}

/// d^N(X^j) for every individual j. O(N^2), parallel over targets.
inline std::vector<double> empirical_denominators(const Kernel& kernel, const Population& population,
                                                  unsigned threads = 1)
{
    std::vector<double> out(population.size());
    parallel_for(0, population.size(), threads, [&](std::size_t j) {
        out[j] = empirical_denominator(kernel, population, population.position(j));
    });
    return out;
}

/// Values of the limiting population density mu_bar at the grid nodes.
inline std::vector<double> density_on_grid(const InitialCondition& ic, const SpatialGrid& grid)
{
    std::vector<double> mu(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        mu[g] = ic.total_density(grid.node(g));
    }
    return mu;
}

/// d(y) = int K(z, y) mu_bar(z) dz by midpoint quadrature; `mu` holds mu_bar at the nodes.
inline double limit_denominator(const Kernel& kernel, std::span<const double> mu, const SpatialGrid& grid,
                                ConstPoint y)
{
    return kernel.visit([&](const auto& k) {
        double s = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            s += k(grid.node(g), y) * mu[g];
        }
        return s * grid.weight();
    });
}

/// Denominator values on a query set with the estimated infimum.
struct DenominatorField {
    std::size_t dim = 0;
    std::vector<double> points; // flattened query points
    std::vector<double> values;
    double c_hat = 0.0;

    std::size_t size() const
    {
        return values.size();
    }
    ConstPoint point(std::size_t i) const
    {
        return {points.data() + i * dim, dim};
    }
};

/// Limit denominator on the (n+1)^d vertex probes using an m^d quadrature grid.
inline DenominatorField limit_denominator_field(const Kernel& kernel, const InitialCondition& ic, std::size_t dim,
                                                std::size_t probes_per_axis, std::size_t quadrature_per_axis,
                                                unsigned threads = 1)
{
    const SpatialGrid grid(dim, quadrature_per_axis);
    const auto mu = density_on_grid(ic, grid);
    DenominatorField field;
    field.dim    = dim;
    field.points = vertex_probe_points(dim, probes_per_axis);
    field.values.resize(field.points.size() / dim);
    parallel_for(0, field.values.size(), threads, [&](std::size_t p) {
        field.values[p] = limit_denominator(kernel, mu, grid, field.point(p));
    });
    field.c_hat = *std::min_element(field.values.begin(), field.values.end());
    return field;
}

/**
 * Estimate of c = inf_y d(y): grid minimization over boundary-inclusive
 * probes, repeated once on a refined probe set and quadrature, keeping the
 * smaller value.
 */
inline double estimate_c_hat(const Kernel& kernel, const InitialCondition& ic, std::size_t dim, unsigned threads = 1)
{
    const std::size_t probes = dim <= 2 ? 16 : 4;
    const std::size_t quad   = dim <= 2 ? 64 : 12;
    const auto coarse        = limit_denominator_field(kernel, ic, dim, probes, quad, threads);
    const auto fine          = limit_denominator_field(kernel, ic, dim, 2 * probes, 2 * quad, threads);
    return std::min(coarse.c_hat, fine.c_hat);
}

inline double truncation_floor(const ExperimentConfig& config, unsigned threads = 1)
{
    return config.truncation_floor ? *config.truncation_floor
                                   : estimate_c_hat(config.kernel, config.initial, config.domain.dim, threads);
}

/// Minimum of the empirical denominator over the probe points and the individuals' own positions.
inline double empirical_denominator_min(const Kernel& kernel, const Population& population,
                                        std::span<const double> probe_points,
                                        std::span<const double> individual_denominators = {})
{
    const std::size_t dim = population.dim();
    double lowest         = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p * dim < probe_points.size(); ++p) {
        lowest = std::min(lowest, empirical_denominator(kernel, population, ConstPoint(probe_points.data() + p * dim, dim)));
    }
    for (double d : individual_denominators) {
        lowest = std::min(lowest, d);
    }
    return lowest;
}

/**
 * Surrogate of the event {inf_y d^N(y) > c/2}: the infimum is taken over
 * `probe_points` and, when given, the precomputed denominators at the
 * individuals (the only points where the rate actually uses them).
 */
inline bool omega_N_holds(const Kernel& kernel, const Population& population, double c_hat,
                          std::span<const double> probe_points, std::span<const double> individual_denominators = {})
{
    return empirical_denominator_min(kernel, population, probe_points, individual_denominators) > 0.5 * c_hat;
}

} // namespace vsir
