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

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace vsir
{

using ConstPoint = std::span<const double>;

/// The compact set D = [0,1]^d.
struct Domain {
    std::size_t dim = 2;

    bool contains(ConstPoint x) const
    {
        if (x.size() != dim) {
            return false;
        }
        for (double c : x) {
            if (!(c >= 0.0 && c <= 1.0)) {
                return false;
            }
        }
        return true;
    }

    void require(ConstPoint x) const
    {
        if (!contains(x)) {
            throw DomainError("point outside the domain [0,1]^" + std::to_string(dim));
        }
    }

    double volume() const
    {
        return 1.0;
    }
};

inline double squared_distance(ConstPoint x, ConstPoint y)
{
    double s = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        const double d = x[a] - y[a];
        s += d * d;
    }
    return s;
}

/**
 * Tensor-product midpoint grid over [0,1]^d. Node g has multi-index
 * (i_0, ..., i_{d-1}) with g = i_0 + n*i_1 + n^2*i_2 + ...; coordinate
 * (i_a + 1/2)/n along axis a; weight 1/n^d.
 */
class SpatialGrid
{
public:
    SpatialGrid() = default;

    SpatialGrid(std::size_t dim, std::size_t nodes_per_axis)
        : m_dim(dim)
        , m_n(nodes_per_axis)
    {
        if (dim == 0 || nodes_per_axis == 0) {
            throw ConfigError("grid needs at least one dimension and one node per axis");
        }
        std::size_t total = 1;
        for (std::size_t a = 0; a < dim; ++a) {
            total *= nodes_per_axis;
        }
        m_coords.resize(total * dim);
        for (std::size_t g = 0; g < total; ++g) {
            std::size_t rest = g;
            for (std::size_t a = 0; a < dim; ++a) {
                m_coords[g * dim + a] = (static_cast<double>(rest % m_n) + 0.5) / static_cast<double>(m_n);
                rest /= m_n;
            }
        }
        m_weight = 1.0 / static_cast<double>(total);
    }

    std::size_t dim() const
    {
        return m_dim;
    }
    std::size_t nodes_per_axis() const
    {
        return m_n;
    }
    std::size_t size() const
    {
        return m_dim == 0 ? 0 : m_coords.size() / m_dim;
    }
    ConstPoint node(std::size_t g) const
    {
        return {m_coords.data() + g * m_dim, m_dim};
    }
    double weight() const
    {
        return m_weight;
    }
    double axis_coordinate(std::size_t i) const
    {
        return (static_cast<double>(i) + 0.5) / static_cast<double>(m_n);
    }
    const std::vector<double>& coordinates() const
    {
        return m_coords;
    }

private:
    std::size_t m_dim = 0;
    std::size_t m_n   = 0;
    std::vector<double> m_coords;
    double m_weight = 0.0;
};

/// Probe points (i_a / n) including the boundary of the box: (n+1)^d points.
inline std::vector<double> vertex_probe_points(std::size_t dim, std::size_t n)
{
    std::size_t per_axis = n + 1;
    std::size_t total    = 1;
    for (std::size_t a = 0; a < dim; ++a) {
        total *= per_axis;
    }
    std::vector<double> pts(total * dim);
    for (std::size_t g = 0; g < total; ++g) {
        std::size_t rest = g;
        for (std::size_t a = 0; a < dim; ++a) {
            pts[g * dim + a] = static_cast<double>(rest % per_axis) / static_cast<double>(n);
            rest /= per_axis;
        }
    }
    return pts;
}

} // namespace vsir
