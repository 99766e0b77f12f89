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
#include "vsir/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace vsir
{

/**
 * One individual's infectivity as a function of the time since infection.
 * Piecewise linear and right-continuous: on [start_k, start_{k+1}) the value
 * is value_k + slope_k * (t - start_k); zero before 0 and from eta on.
 */
class InfectivityTrajectory
{
public:
    struct Piece {
        double start = 0.0;
        double value = 0.0;
        double slope = 0.0;
    };

    InfectivityTrajectory() = default;
    InfectivityTrajectory(std::vector<Piece> pieces, double eta, double lambda_star)
        : m_pieces(std::move(pieces))
        , m_eta(eta)
        , m_lambda_star(lambda_star)
    {
    }

    double operator()(double t) const
    {
        if (!(t >= 0.0) || t >= m_eta || m_pieces.empty()) {
            return 0.0;
        }
        std::size_t k = 0;
        while (k + 1 < m_pieces.size() && m_pieces[k + 1].start <= t) {
            ++k;
        }
        const auto& p = m_pieces[k];
        const double v = p.slope == 0.0 ? p.value : p.value + p.slope * (t - p.start);
        return std::clamp(v, 0.0, m_lambda_star);
    }

    double eta() const
    {
        return m_eta;
    }
    const std::vector<Piece>& pieces() const
    {
        return m_pieces;
    }

private:
    std::vector<Piece> m_pieces;
    double m_eta         = 0.0;
    double m_lambda_star = 0.0;
};

/// lambda(t) = a on [0, eta), eta ~ Exponential(rho).
struct MarkovInfectivity {
    double a   = 1.0;
    double rho = 1.0;
};

/// lambda(t) = a on [0, h).
struct FixedDurationInfectivity {
    double a = 1.0;
    double h = 1.0;
};

/// Linear rise to a at time p, linear decay to 0 at h ~ Uniform[h_min, h_max].
struct HumpInfectivity {
    double a     = 1.0;
    double p     = 0.5;
    double h_min = 1.0;
    double h_max = 1.0;
};

/**
 * `pieces` consecutive constant pieces; each level is drawn i.i.d. from the
 * (levels, level_probs) table and each piece length i.i.d. from the
 * (durations, duration_probs) table. eta is the end of the last piece with a
 * positive level.
 */
struct TabulatedInfectivity {
    std::size_t pieces = 1;
    std::vector<double> levels{1.0};
    std::vector<double> level_probs{1.0};
    std::vector<double> durations{1.0};
    std::vector<double> duration_probs{1.0};
};

/// Law of a random infectivity trajectory, with its mean and duration law.
class InfectivityModel
{
public:
    using Variant = std::variant<MarkovInfectivity, FixedDurationInfectivity, HumpInfectivity, TabulatedInfectivity>;

    /// mean(t) = coefficient * exp(-rate t) and survival(t) = exp(-rate t).
    struct Exponential {
        double coefficient;
        double rate;
    };

    InfectivityModel()
        : InfectivityModel(MarkovInfectivity{})
    {
    }

    InfectivityModel(Variant impl)
        : m_impl(std::move(impl))
    {
        if (auto* tab = std::get_if<TabulatedInfectivity>(&m_impl); tab && violations().empty()) {
            build_tables(*tab);
        }
    }

    const Variant& variant() const
    {
        return m_impl;
    }

    std::string name() const
    {
        static const char* names[] = {"markov", "fixed_duration", "hump", "tabulated"};
        return names[m_impl.index()];
    }

    std::vector<std::string> violations() const
    {
        std::vector<std::string> out;
        auto probs_ok = [](const std::vector<double>& p) {
            double s = 0.0;
            for (double v : p) {
                if (!(v >= 0.0)) {
                    return false;
                }
                s += v;
            }
            return std::abs(s - 1.0) <= 1e-12;
        };
        std::visit(
            [&](const auto& m) {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, MarkovInfectivity>) {
                    if (!(m.a >= 0.0)) {
                        out.emplace_back("markov level a must be nonnegative");
                    }
                    if (!(m.rho > 0.0)) {
                        out.emplace_back("markov rate rho must be positive");
                    }
                }
                else if constexpr (std::is_same_v<M, FixedDurationInfectivity>) {
                    if (!(m.a >= 0.0)) {
                        out.emplace_back("fixed_duration level a must be nonnegative");
                    }
                    if (!(m.h > 0.0)) {
                        out.emplace_back("fixed_duration h must be positive");
                    }
                }
                else if constexpr (std::is_same_v<M, HumpInfectivity>) {
                    if (!(m.a >= 0.0)) {
                        out.emplace_back("hump level a must be nonnegative");
                    }
                    if (!(m.p > 0.0 && m.p < m.h_min && m.h_min <= m.h_max)) {
                        out.emplace_back("hump needs 0 < p < h_min <= h_max");
                    }
                }
                else {
                    if (m.pieces == 0) {
                        out.emplace_back("tabulated needs at least one piece");
                    }
                    if (m.levels.empty() || m.levels.size() != m.level_probs.size() || !probs_ok(m.level_probs)) {
                        out.emplace_back("tabulated level table must be nonempty with probabilities summing to 1");
                    }
                    if (m.durations.empty() || m.durations.size() != m.duration_probs.size() ||
                        !probs_ok(m.duration_probs)) {
                        out.emplace_back("tabulated duration table must be nonempty with probabilities summing to 1");
                    }
                    for (double v : m.levels) {
                        if (!(v >= 0.0)) {
                            out.emplace_back("tabulated levels must be nonnegative");
                            break;
                        }
                    }
                    for (double v : m.durations) {
                        if (!(v > 0.0)) {
                            out.emplace_back("tabulated durations must be positive");
                            break;
                        }
                    }
                }
            },
            m_impl);
        return out;
    }

    /// Deterministic bound lambda* >= lambda(t) for every sample path.
    double lambda_star() const
    {
        return std::visit(
            [](const auto& m) -> double {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, TabulatedInfectivity>) {
                    return m.levels.empty() ? 0.0 : *std::max_element(m.levels.begin(), m.levels.end());
                }
                else {
                    return m.a;
                }
            },
            m_impl);
    }

    InfectivityTrajectory sample(RandomStream& rng) const
    {
        using Piece = InfectivityTrajectory::Piece;
        const double star = lambda_star();
        return std::visit(
            [&](const auto& m) -> InfectivityTrajectory {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, MarkovInfectivity>) {
                    return {{Piece{0.0, m.a, 0.0}}, rng.exponential(m.rho), star};
                }
                else if constexpr (std::is_same_v<M, FixedDurationInfectivity>) {
                    return {{Piece{0.0, m.a, 0.0}}, m.h, star};
                }
                else if constexpr (std::is_same_v<M, HumpInfectivity>) {
                    const double h = m.h_min == m.h_max ? m.h_min : rng.uniform(m.h_min, m.h_max);
                    return {{Piece{0.0, 0.0, m.a / m.p}, Piece{m.p, m.a, -m.a / (h - m.p)}}, h, star};
                }
                else {
                    std::vector<Piece> pieces;
                    double start   = 0.0;
                    double eta     = 0.0;
                    std::size_t kept = 0;
                    for (std::size_t k = 0; k < m.pieces; ++k) {
                        const double level = m.levels[rng.discrete(m_level_cdf)];
                        const double len   = m.durations[rng.discrete(m_duration_cdf)];
                        pieces.push_back(Piece{start, level, 0.0});
                        start += len;
                        if (level > 0.0) {
                            eta  = start;
                            kept = pieces.size();
                        }
                    }
                    pieces.resize(kept);
                    return {std::move(pieces), eta, star};
                }
            },
            m_impl);
    }

    /// E[lambda(t)]; zero for t < 0.
    double mean(double t) const
    {
        if (t < 0.0) {
            return 0.0;
        }
        return std::visit(
            [&](const auto& m) -> double {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, MarkovInfectivity>) {
                    return m.a * std::exp(-m.rho * t);
                }
                else if constexpr (std::is_same_v<M, FixedDurationInfectivity>) {
                    return t < m.h ? m.a : 0.0;
                }
                else if constexpr (std::is_same_v<M, HumpInfectivity>) {
                    if (t < m.p) {
                        return m.a * t / m.p;
                    }
                    if (t >= m.h_max) {
                        return 0.0;
                    }
                    if (m.h_min == m.h_max) {
                        return m.a * (m.h_max - t) / (m.h_max - m.p);
                    }
                    // E[(h - t)/(h - p); h > t] for h uniform on [h_min, h_max]
                    const double lo = std::max(t, m.h_min);
                    const double integral = (m.h_max - lo) - (t - m.p) * std::log((m.h_max - m.p) / (lo - m.p));
                    return m.a * integral / (m.h_max - m.h_min);
                }
                else {
                    return m_mean_level * (1.0 - sum_cdf(m.pieces, t));
                }
            },
            m_impl);
    }

    /// F(t) = P(eta <= t); zero for t < 0.
    double duration_cdf(double t) const
    {
        if (t < 0.0) {
            return 0.0;
        }
        return std::visit(
            [&](const auto& m) -> double {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, MarkovInfectivity>) {
                    return -std::expm1(-m.rho * t);
                }
                else if constexpr (std::is_same_v<M, FixedDurationInfectivity>) {
                    return t >= m.h ? 1.0 : 0.0;
                }
                else if constexpr (std::is_same_v<M, HumpInfectivity>) {
                    if (t >= m.h_max) {
                        return 1.0;
                    }
                    if (t < m.h_min) {
                        return 0.0;
                    }
                    return (t - m.h_min) / (m.h_max - m.h_min);
                }
                else {
                    double f = 0.0;
                    for (std::size_t k = 0; k <= m.pieces; ++k) {
                        f += m_last_positive_prob[k] * sum_cdf(k, t);
                    }
                    return std::min(f, 1.0);
                }
            },
            m_impl);
    }

    /// F^c(t) = 1 - F(t).
    double survival(double t) const
    {
        if (const auto* m = std::get_if<MarkovInfectivity>(&m_impl); m && t >= 0.0) {
            return std::exp(-m->rho * t);
        }
        return 1.0 - duration_cdf(t);
    }

    /// Set when the mean and the survival are both pure exponentials.
    std::optional<Exponential> exponential_form() const
    {
        if (const auto* m = std::get_if<MarkovInfectivity>(&m_impl)) {
            return Exponential{m->a, m->rho};
        }
        return std::nullopt;
    }

    /// Smallest u with mean(t) = 0 and duration_cdf(t) = 1 for all t >= u (infinite if none).
    double support_end() const
    {
        return std::visit(
            [&](const auto& m) -> double {
                using M = std::decay_t<decltype(m)>;
                if constexpr (std::is_same_v<M, MarkovInfectivity>) {
                    return std::numeric_limits<double>::infinity();
                }
                else if constexpr (std::is_same_v<M, FixedDurationInfectivity>) {
                    return m.h;
                }
                else if constexpr (std::is_same_v<M, HumpInfectivity>) {
                    return m.h_max;
                }
                else {
                    return m.pieces * *std::max_element(m.durations.begin(), m.durations.end());
                }
            },
            m_impl);
    }

private:
    // P(S_k <= t), S_k the sum of k piece lengths.
    double sum_cdf(std::size_t k, double t) const
    {
        const auto& dist = m_sum_cdf[k];
        auto it = std::upper_bound(dist.begin(), dist.end(), t, [](double v, const auto& e) {
            return v < e.first;
        });
        return it == dist.begin() ? 0.0 : std::prev(it)->second;
    }

    void build_tables(const TabulatedInfectivity& m)
    {
        m_level_cdf.clear();
        m_duration_cdf.clear();
        std::partial_sum(m.level_probs.begin(), m.level_probs.end(), std::back_inserter(m_level_cdf));
        std::partial_sum(m.duration_probs.begin(), m.duration_probs.end(), std::back_inserter(m_duration_cdf));
        m_level_cdf.back()    = 1.0;
        m_duration_cdf.back() = 1.0;

        double p_zero = 0.0;
        m_mean_level  = 0.0;
        for (std::size_t i = 0; i < m.levels.size(); ++i) {
            m_mean_level += m.levels[i] * m.level_probs[i];
            if (m.levels[i] == 0.0) {
                p_zero += m.level_probs[i];
            }
        }
        // Exact law of the partial sums by convolution of the duration table.
        std::map<double, double> law{{0.0, 1.0}};
        m_sum_cdf.assign(m.pieces + 1, {});
        for (std::size_t k = 0; k <= m.pieces; ++k) {
            double acc = 0.0;
            for (const auto& [v, p] : law) {
                acc += p;
                m_sum_cdf[k].emplace_back(v, acc);
            }
            if (k == m.pieces) {
                break;
            }
            std::map<double, double> next;
            for (const auto& [v, p] : law) {
                for (std::size_t i = 0; i < m.durations.size(); ++i) {
                    next[v + m.durations[i]] += p * m.duration_probs[i];
                }
            }
            law = std::move(next);
        }
        // Index of the last positive level: k* = k with probability (1 - p0) p0^(m-k).
        m_last_positive_prob.assign(m.pieces + 1, 0.0);
        m_last_positive_prob[0] = std::pow(p_zero, static_cast<double>(m.pieces));
        for (std::size_t k = 1; k <= m.pieces; ++k) {
            m_last_positive_prob[k] = (1.0 - p_zero) * std::pow(p_zero, static_cast<double>(m.pieces - k));
        }
    }

    Variant m_impl;
    std::vector<double> m_level_cdf;
    std::vector<double> m_duration_cdf;
    double m_mean_level = 0.0;
    std::vector<std::vector<std::pair<double, double>>> m_sum_cdf;
    std::vector<double> m_last_positive_prob;
};

} // namespace vsir
