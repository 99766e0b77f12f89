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

#include "vsir/errors.hpp"
#include "vsir/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace vsir
{

struct ConstantKernel {
    double k = 1.0;

    double operator()(ConstPoint, ConstPoint) const
    {
        return k;
    }
};

/// k on the closed ball of radius r, 0 outside. Discontinuous.
struct TopHatKernel {
    double radius = 0.1;
    double height = 1.0;

    double operator()(ConstPoint x, ConstPoint y) const
    {
        return squared_distance(x, y) <= radius * radius ? height : 0.0;
    }
};

/// floor + (1 - floor) exp(-|x-y|^2 / (2 sigma^2)).
struct GaussianBumpKernel {
    double sigma = 0.2;
    double floor = 0.0;

    double operator()(ConstPoint x, ConstPoint y) const
    {
        return floor + (1.0 - floor) * std::exp(-squared_distance(x, y) / (2.0 * sigma * sigma));
    }

    /// One-dimensional factor; the bump part is a product of these over the axes.
    double axis_factor(double dx) const
    {
        return std::exp(-dx * dx / (2.0 * sigma * sigma));
    }
};

/// floor + (1 - floor) exp(-|x-y| / scale).
struct ExpDecayKernel {
    double scale = 0.2;
    double floor = 0.0;

    double operator()(ConstPoint x, ConstPoint y) const
    {
        return floor + (1.0 - floor) * std::exp(-std::sqrt(squared_distance(x, y)) / scale);
    }
};

/// Interaction kernel K : D x D -> [0,1].
class Kernel
{
public:
    using Variant = std::variant<ConstantKernel, TopHatKernel, GaussianBumpKernel, ExpDecayKernel>;

    Kernel()
        : m_impl(ConstantKernel{})
    {
    }
    Kernel(Variant impl)
        : m_impl(std::move(impl))
    {
    }

    /// Domain-checked evaluation.
    double eval(const Domain& domain, ConstPoint x, ConstPoint y) const
    {
        domain.require(x);
        domain.require(y);
        return (*this)(x, y);
    }

    double operator()(ConstPoint x, ConstPoint y) const
    {
        return std::visit([&](const auto& k) {
            return k(x, y);
        }, m_impl);
    }

    /// Calls fn with the concrete kernel functor, for inner loops.
    template <class Fn>
    decltype(auto) visit(Fn&& fn) const
    {
        return std::visit(std::forward<Fn>(fn), m_impl);
    }

    const Variant& variant() const
    {
        return m_impl;
    }

    bool is_constant() const
    {
        return std::holds_alternative<ConstantKernel>(m_impl);
    }

    bool is_continuous() const
    {
        return !std::holds_alternative<TopHatKernel>(m_impl);
    }

    std::string name() const
    {
        switch (m_impl.index()) {
        case 0:
            return "constant";
        case 1:
            return "top_hat";
        case 2:
            return "gaussian_bump";
        default:
            return "exp_decay";
        }
    }

    /// Parameter violations: values must stay inside [0,1].
    std::vector<std::string> violations() const
    {
        std::vector<std::string> out;
        std::visit(
            [&](const auto& k) {
                using K = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<K, ConstantKernel>) {
                    if (!(k.k > 0.0 && k.k <= 1.0)) {
                        out.emplace_back("kernel constant k must lie in (0,1]");
                    }
                }
                else if constexpr (std::is_same_v<K, TopHatKernel>) {
                    if (!(k.height > 0.0 && k.height <= 1.0)) {
                        out.emplace_back("kernel top_hat height must lie in (0,1]");
                    }
                    if (!(k.radius > 0.0)) {
                        out.emplace_back("kernel top_hat radius must be positive");
                    }
                }
                else if constexpr (std::is_same_v<K, GaussianBumpKernel>) {
                    if (!(k.sigma > 0.0)) {
                        out.emplace_back("kernel gaussian_bump sigma must be positive");
                    }
                    if (!(k.floor >= 0.0 && k.floor <= 1.0)) {
                        out.emplace_back("kernel gaussian_bump floor must lie in [0,1]");
                    }
                }
                else {
                    if (!(k.scale > 0.0)) {
                        out.emplace_back("kernel exp_decay scale must be positive");
                    }
                    if (!(k.floor >= 0.0 && k.floor <= 1.0)) {
                        out.emplace_back("kernel exp_decay floor must lie in [0,1]");
                    }
                }
            },
            m_impl);
        return out;
    }

private:
    Variant m_impl;
};

/// Truncated power (max(x, c/2))^gamma used in place of x^gamma for the normalization.
inline double phi_trunc(double x, double c, double gamma)
{
    return std::pow(std::max(x, 0.5 * c), gamma);
}

} // namespace vsir
