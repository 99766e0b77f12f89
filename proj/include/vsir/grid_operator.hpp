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

#include "vsir/denominator.hpp"
#include "vsir/errors.hpp"
#include "vsir/geometry.hpp"
#include "vsir/kernel.hpp"
#include "vsir/parallel.hpp"

#include <cmath>
#include <memory>
#include <vector>

namespace vsir
{

/**
 * Discretized integral operator (A g)(x_a) = sum_b w K(x_a, y_b) g_b on a
 * midpoint grid. Constant kernels reduce to a sum, Gaussian bumps are
 * applied axis by axis, everything else uses a dense matrix.
 */
class GridKernelOperator
{
public:
    GridKernelOperator(const Kernel& kernel, const SpatialGrid& grid, unsigned threads = 1)
        : m_grid(grid)
        , m_threads(threads)
    {
        const std::size_t g = grid.size();
        if (const auto* c = std::get_if<ConstantKernel>(&kernel.variant())) {
            m_kind     = Kind::Constant;
            m_constant = c->k;
        }
        else if (const auto* gb = std::get_if<GaussianBumpKernel>(&kernel.variant())) {
            m_kind     = Kind::Separable;
            m_constant = gb->floor;
            m_scale    = 1.0 - gb->floor;
            const std::size_t n = grid.nodes_per_axis();
            m_axis.resize(n * n);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    m_axis[i * n + j] = gb->axis_factor(grid.axis_coordinate(i) - grid.axis_coordinate(j));
                }
            }
        }
        else {
            m_kind = Kind::Dense;
            m_dense.resize(g * g);
            parallel_for(0, g, threads, [&](std::size_t a) {
                for (std::size_t b = 0; b < g; ++b) {
                    m_dense[a * g + b] = kernel(grid.node(a), grid.node(b));
                }
            });
        }
    }

    /// out = A in; `out` and `in` have grid.size() entries.
    void apply(std::span<const double> in, std::span<double> out) const
    {
        const std::size_t g = m_grid.size();
        const double w      = m_grid.weight();
        switch (m_kind) {
        case Kind::Constant: {
            double s = 0.0;
            for (double v : in) {
                s += v;
            }
            std::fill(out.begin(), out.end(), m_constant * w * s);
            break;
        }
        case Kind::Separable: {
            const std::size_t n   = m_grid.nodes_per_axis();
            const std::size_t dim = m_grid.dim();
            m_buffer.assign(in.begin(), in.end());
            m_scratch.resize(g);
            std::size_t stride = 1;
            for (std::size_t a = 0; a < dim; ++a) {
                // lines along axis a: base indices with digit a equal to zero
                for (std::size_t base = 0; base < g; ++base) {
                    if ((base / stride) % n != 0) {
                        continue;
                    }
                    for (std::size_t i = 0; i < n; ++i) {
                        const double* row = m_axis.data() + i * n;
                        double s          = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                            s += row[j] * m_buffer[base + j * stride];
                        }
                        m_scratch[base + i * stride] = s;
                    }
                }
                m_buffer.swap(m_scratch);
                stride *= n;
            }
            double total = 0.0;
            if (m_constant != 0.0) {
                for (double v : in) {
                    total += v;
                }
            }
            for (std::size_t a = 0; a < g; ++a) {
                out[a] = w * (m_constant * total + m_scale * m_buffer[a]);
            }
            break;
        }
        case Kind::Dense:
            parallel_for(0, g, m_dense.size() > 1000000 ? m_threads : 1, [&](std::size_t a) {
                const double* row = m_dense.data() + a * g;
                double s          = 0.0;
                for (std::size_t b = 0; b < g; ++b) {
                    s += row[b] * in[b];
                }
                out[a] = w * s;
            });
            break;
        }
    }

    bool spatially_constant() const
    {
        return m_kind == Kind::Constant;
    }

private:
    enum class Kind
    {
        Constant,
        Separable,
        Dense,
    };

    SpatialGrid m_grid;
    unsigned m_threads;
    Kind m_kind       = Kind::Dense;
    double m_constant = 0.0;
    double m_scale    = 1.0;
    std::vector<double> m_axis;
    std::vector<double> m_dense;
    mutable std::vector<double> m_buffer;
    mutable std::vector<double> m_scratch;
};

} // namespace vsir
