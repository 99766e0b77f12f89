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
#include "vsir/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

namespace vsir
{

struct UniformDensity {
    double operator()(ConstPoint) const
    {
        return 1.0;
    }
    double sup_bound(std::size_t) const
    {
        return 1.0;
    }
};

/// Mixture of isotropic Gaussians, each truncated to [0,1]^d and renormalized.
struct GaussianMixtureDensity {
    struct Component {
        double weight = 1.0;
        std::vector<double> center;
        double sigma = 0.1;
    };
    std::vector<Component> components;

    static double axis_mass(double c, double sigma)
    {
        const double s = sigma * std::numbers::sqrt2;
        return 0.5 * (std::erf((1.0 - c) / s) - std::erf(-c / s));
    }

    double operator()(ConstPoint x) const
    {
        double total = 0.0;
        for (const auto& comp : components) {
            double value = comp.weight;
            for (std::size_t a = 0; a < x.size(); ++a) {
                const double z = (x[a] - comp.center[a]) / comp.sigma;
                value *= std::exp(-0.5 * z * z) / (comp.sigma * std::sqrt(2.0 * std::numbers::pi) *
                                                   axis_mass(comp.center[a], comp.sigma));
            }
            total += value;
        }
        return total;
    }

    double sup_bound(std::size_t dim) const
    {
        double bound = 0.0;
        for (const auto& comp : components) {
            double peak = comp.weight;
            for (std::size_t a = 0; a < dim; ++a) {
                peak /= comp.sigma * std::sqrt(2.0 * std::numbers::pi) * axis_mass(comp.center[a], comp.sigma);
            }
            bound += peak;
        }
        return bound;
    }
};

/// Constant on each of the m^d cells of a regular partition of [0,1]^d.
struct PiecewiseConstantDensity {
    std::size_t cells_per_axis = 1;
    std::vector<double> values; // index i_0 + m*i_1 + ...

    double operator()(ConstPoint x) const
    {
        std::size_t index  = 0;
        std::size_t stride = 1;
        for (double c : x) {
            auto i = static_cast<std::size_t>(c * static_cast<double>(cells_per_axis));
            i      = std::min(i, cells_per_axis - 1);
            index += i * stride;
            stride *= cells_per_axis;
        }
        return values.at(index);
    }

    double sup_bound(std::size_t) const
    {
        return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    }
};

/// A probability density on D that can be evaluated pointwise and sampled.
class Density
{
public:
    using Variant = std::variant<UniformDensity, GaussianMixtureDensity, PiecewiseConstantDensity>;

    Density()
        : m_impl(UniformDensity{})
    {
    }
    Density(Variant impl)
        : m_impl(std::move(impl))
    {
    }

    double operator()(ConstPoint x) const
    {
        return std::visit([&](const auto& d) {
            return d(x);
        }, m_impl);
    }

    double sup_bound(std::size_t dim) const
    {
        return std::visit([&](const auto& d) {
            return d.sup_bound(dim);
        }, m_impl);
    }

    const Variant& variant() const
    {
        return m_impl;
    }

    bool is_uniform() const
    {
        return std::holds_alternative<UniformDensity>(m_impl);
    }

    /// Rejection sampling against sup_bound with a uniform proposal on the box.
    void sample(RandomStream& rng, std::span<double> out) const
    {
        const double bound = sup_bound(out.size());
        if (!(bound > 0.0)) {
            throw ConfigError("density has no positive mass to sample from");
        }
        for (;;) {
            for (auto& c : out) {
                c = rng.uniform();
            }
            if (is_uniform() || rng.uniform() * bound < (*this)(out)) {
                return;
            }
        }
    }

private:
    Variant m_impl;
};

} // namespace vsir
