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
#include "vsir/mean_field.hpp"
#include "vsir/stochastic_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsir
{

/// Bounded Lipschitz test function on the box, with a stored sup-norm and Lipschitz constant.
class TestFunction
{
public:
    enum class Family
    {
        Constant,
        Monomial, // x_a (b < 0) or x_a x_b
        Bump,     // exp(-|x - c|^2 / (2 s^2))
        Hat,      // max(0, 1 - |x - c| / r)
    };

    static TestFunction constant()
    {
        TestFunction f(Family::Constant, "const");
        f.m_sup = 1.0;
        f.m_lip = 0.0;
        return f;
    }

    static TestFunction monomial(int a, int b = -1)
    {
        TestFunction f(Family::Monomial, b < 0 ? "x" + std::to_string(a + 1)
                                               : "x" + std::to_string(a + 1) + "x" + std::to_string(b + 1));
        f.m_a   = a;
        f.m_b   = b;
        f.m_sup = 1.0;
        f.m_lip = b < 0 ? 1.0 : (a == b ? 2.0 : std::sqrt(2.0));
        return f;
    }

    static TestFunction bump(std::vector<double> center, double scale, std::string name)
    {
        if (!(scale > 0.0)) {
            throw std::invalid_argument("bump scale must be positive");
        }
        TestFunction f(Family::Bump, std::move(name));
        f.m_center = std::move(center);
        f.m_width  = scale;
        f.m_sup    = 1.0;
        f.m_lip    = 1.0 / (scale * std::sqrt(std::exp(1.0)));
        return f;
    }

    static TestFunction hat(std::vector<double> center, double radius, std::string name)
    {
        if (!(radius > 0.0)) {
            throw std::invalid_argument("hat radius must be positive");
        }
        TestFunction f(Family::Hat, std::move(name));
        f.m_center = std::move(center);
        f.m_width  = radius;
        f.m_sup    = 1.0;
        f.m_lip    = 1.0 / radius;
        return f;
    }

    /// c * phi, with the constants rescaled.
    TestFunction scaled(double c) const
    {
        TestFunction f = *this;
        f.m_scale *= c;
        f.m_name = fmt_scale(c) + "*" + m_name;
        return f;
    }

    double operator()(ConstPoint x) const
    {
        double v = 1.0;
        switch (m_family) {
        case Family::Constant:
            break;
        case Family::Monomial:
            v = x[m_a] * (m_b < 0 ? 1.0 : x[m_b]);
            break;
        case Family::Bump:
            v = std::exp(-squared_distance(x, m_center) / (2.0 * m_width * m_width));
            break;
        case Family::Hat:
            v = std::max(0.0, 1.0 - std::sqrt(squared_distance(x, m_center)) / m_width);
            break;
        }
        return m_scale * v;
    }

    Family family() const
    {
        return m_family;
    }
    const std::string& name() const
    {
        return m_name;
    }
    /// Bounds valid on [0,1]^d.
    double sup_norm() const
    {
        return std::abs(m_scale) * m_sup;
    }
    double lipschitz() const
    {
        return std::abs(m_scale) * m_lip;
    }

private:
    TestFunction(Family family, std::string name)
        : m_family(family)
        , m_name(std::move(name))
    {
    }

    static std::string fmt_scale(double c)
    {
        std::string s = std::to_string(c);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') {
            s.pop_back();
        }
        return s;
    }

    Family m_family;
    std::string m_name;
    int m_a = 0, m_b = -1;
    std::vector<double> m_center;
    double m_width = 1.0;
    double m_scale = 1.0;
    double m_sup   = 1.0;
    double m_lip   = 0.0;
};

/// Constants, coordinates and their degree-2 products, two bumps at different scales and a hat.
inline std::vector<TestFunction> default_test_functions(std::size_t dim)
{
    std::vector<TestFunction> lib{TestFunction::constant()};
    for (std::size_t a = 0; a < dim; ++a) {
        lib.push_back(TestFunction::monomial(static_cast<int>(a)));
    }
    for (std::size_t a = 0; a < dim; ++a) {
        for (std::size_t b = a; b < dim; ++b) {
            lib.push_back(TestFunction::monomial(static_cast<int>(a), static_cast<int>(b)));
        }
    }
    lib.push_back(TestFunction::bump(std::vector<double>(dim, 0.5), 0.2, "bump_center"));
    lib.push_back(TestFunction::bump(std::vector<double>(dim, 0.25), 0.1, "bump_corner"));
    lib.push_back(TestFunction::hat(std::vector<double>(dim, 0.75), 0.25, "hat"));
    return lib;
}

/// Selects functions by name; "all" or an empty selection returns the whole default library.
inline std::vector<TestFunction> select_test_functions(std::size_t dim, const std::vector<std::string>& names)
{
    auto lib = default_test_functions(dim);
    if (names.empty() || (names.size() == 1 && names.front() == "all")) {
        return lib;
    }
    std::vector<TestFunction> out;
    for (const auto& n : names) {
        auto it = std::find_if(lib.begin(), lib.end(), [&](const TestFunction& f) {
            return f.name() == n;
        });
        if (it == lib.end()) {
            throw ConfigError("unknown test function '" + n + "'");
        }
        out.push_back(*it);
    }
    return out;
}

inline constexpr std::array<Measure, 4> all_measures{Measure::S, Measure::F, Measure::I, Measure::R};

struct ComponentDistance {
    std::string phi;
    Measure component;
    double sup_error;
};

struct TrajectoryDistance {
    std::vector<ComponentDistance> entries; // phi-major, components in the requested order
    double aggregate = 0.0;
    bool interpolated = false;              // some mean-field pairing needed interpolation in time
};

namespace detail
{

inline void check_library(const std::vector<TestFunction>& library, const std::vector<Measure>& components)
{
    if (library.empty()) {
        throw std::invalid_argument("test-function library is empty");
    }
    if (components.empty()) {
        throw std::invalid_argument("no measure components selected");
    }
}

template <class Left, class Right>
TrajectoryDistance distance_over(const std::vector<double>& times, const std::vector<TestFunction>& library,
                                 const std::vector<Measure>& components, Left&& left, Right&& right)
{
    TrajectoryDistance d;
    for (const auto& phi : library) {
        for (Measure m : components) {
            double sup = 0.0;
            for (double t : times) {
                const auto [l, li] = left(t, m, phi);
                const auto [r, ri] = right(t, m, phi);
                d.interpolated     = d.interpolated || li || ri;
                sup                = std::max(sup, std::abs(l - r));
            }
            d.entries.push_back({phi.name(), m, sup});
            d.aggregate = std::max(d.aggregate, sup);
        }
    }
    return d;
}

} // namespace detail

/// sup over the snapshot times of |(mu^N_t, phi) - (mu_bar_t, phi)| per phi and component.
inline TrajectoryDistance trajectory_distance(const EpidemicTrajectory& emp, const MeanFieldSolution& mf,
                                              const std::vector<TestFunction>& library,
                                              std::vector<Measure> components = {all_measures.begin(),
                                                                                 all_measures.end()})
{
    detail::check_library(library, components);
    std::vector<double> times;
    for (const auto& s : emp.snapshots()) {
        times.push_back(s.time);
    }
    return detail::distance_over(
        times, library, components,
        [&](double t, Measure m, const TestFunction& phi) {
            return std::pair{emp.pair(emp.at(t), m, phi), false};
        },
        [&](double t, Measure m, const TestFunction& phi) {
            const auto p = pair_meanfield(mf, t, m, phi);
            return std::pair{p.value, p.interpolated};
        });
}

/// Distance between two mean-field solutions at the given times.
inline TrajectoryDistance trajectory_distance(const MeanFieldSolution& a, const MeanFieldSolution& b,
                                              const std::vector<double>& times,
                                              const std::vector<TestFunction>& library,
                                              std::vector<Measure> components = {all_measures.begin(),
                                                                                 all_measures.end()})
{
    detail::check_library(library, components);
    auto side = [](const MeanFieldSolution& s) {
        return [&s](double t, Measure m, const TestFunction& phi) {
            const auto p = pair_meanfield(s, t, m, phi);
            return std::pair{p.value, p.interpolated};
        };
    };
    return detail::distance_over(times, library, components, side(a), side(b));
}

/// Same distance between two empirical trajectories sharing snapshot times.
inline TrajectoryDistance trajectory_distance(const EpidemicTrajectory& a, const EpidemicTrajectory& b,
                                              const std::vector<TestFunction>& library,
                                              std::vector<Measure> components = {all_measures.begin(),
                                                                                 all_measures.end()})
{
    detail::check_library(library, components);
    std::vector<double> times;
    for (const auto& s : a.snapshots()) {
        times.push_back(s.time);
    }
    auto side = [](const EpidemicTrajectory& e) {
        return [&e](double t, Measure m, const TestFunction& phi) {
            return std::pair{e.pair(e.at(t), m, phi), false};
        };
    };
    return detail::distance_over(times, library, components, side(a), side(b));
}

} // namespace vsir
