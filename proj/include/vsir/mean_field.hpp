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
#include "vsir/grid_operator.hpp"
#include "vsir/infectivity.hpp"
#include "vsir/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace vsir
{

struct SolverOptions {
    double dt = 1e-2;
    /// Record every `record_stride`-th step (0: only the times below and the endpoints).
    std::size_t record_stride = 1;
    /// Extra record times, snapped to the nearest step.
    std::vector<double> record_times;
    RateMode mode           = RateMode::Raw;
    double truncation_floor = 0.0;
    unsigned threads        = 1;
};

struct PicardReport {
    std::size_t iterations = 0;
    std::vector<double> residuals;          // sup-norm distance between successive iterates
    std::vector<double> weighted_residuals; // same, with the time weight exp(-beta t)
    std::vector<double> contraction;        // ratios of successive weighted residuals
    double beta = 0.0;
};

/// Gridded solution of the limit system at the recorded time steps.
class MeanFieldSolution
{
public:
    SpatialGrid grid;
    double dt         = 0.0;
    std::size_t steps = 0;
    double gamma      = 1.0;
    RateMode mode     = RateMode::Raw;
    double truncation_floor = 0.0;

    std::vector<double> times;
    std::vector<std::size_t> step_index;

    std::vector<double> mu_bar;
    std::vector<double> initial_S, initial_I, initial_R;
    std::vector<double> denominators; // d(y_g)
    std::vector<double> norms;        // d^gamma or Phi(d)

    // records x nodes, row-major by record
    std::vector<double> S, F, I, R, Gamma, cumulative_gamma;

    std::optional<PicardReport> picard;

    std::size_t records() const
    {
        return times.size();
    }
    std::size_t nodes() const
    {
        return grid.size();
    }

    std::span<const double> field(Measure which, std::size_t r) const
    {
        const std::vector<double>* v = nullptr;
        switch (which) {
        case Measure::S:
            v = &S;
            break;
        case Measure::I:
            v = &I;
            break;
        case Measure::R:
            v = &R;
            break;
        case Measure::F:
            v = &F;
            break;
        }
        return {v->data() + r * nodes(), nodes()};
    }
    std::span<const double> gamma_field(std::size_t r) const
    {
        return {Gamma.data() + r * nodes(), nodes()};
    }
    std::span<const double> cumulative_field(std::size_t r) const
    {
        return {cumulative_gamma.data() + r * nodes(), nodes()};
    }

    /// Record whose time matches t up to rounding.
    std::optional<std::size_t> record_index(double t) const
    {
        const double tol = 1e-9 * std::max(1.0, std::abs(t));
        auto it          = std::lower_bound(times.begin(), times.end(), t - tol);
        if (it != times.end() && std::abs(*it - t) <= tol) {
            return static_cast<std::size_t>(it - times.begin());
        }
        return std::nullopt;
    }

    template <class Fn>
    double pair_record(std::size_t r, Measure which, Fn&& phi) const
    {
        const auto f = field(which, r);
        double s     = 0.0;
        for (std::size_t g = 0; g < nodes(); ++g) {
            s += phi(grid.node(g)) * f[g];
        }
        return s * grid.weight();
    }
};

struct MeanFieldPairing {
    double value;
    bool interpolated;
};

/// sum_g w phi(y_g) density(t, y_g); linear interpolation between records when t is not recorded.
template <class Fn>
MeanFieldPairing pair_meanfield(const MeanFieldSolution& sol, double t, Measure which, Fn&& phi)
{
    if (auto r = sol.record_index(t)) {
        return {sol.pair_record(*r, which, phi), false};
    }
    if (sol.times.empty() || t < sol.times.front() || t > sol.times.back()) {
        throw LookupError("time " + std::to_string(t) + " outside the solved interval");
    }
    const auto hi    = static_cast<std::size_t>(std::upper_bound(sol.times.begin(), sol.times.end(), t) - sol.times.begin());
    const auto lo    = hi - 1;
    const double th  = (t - sol.times[lo]) / (sol.times[hi] - sol.times[lo]);
    const double vlo = sol.pair_record(lo, which, phi);
    const double vhi = sol.pair_record(hi, which, phi);
    return {(1.0 - th) * vlo + th * vhi, true};
}

namespace detail
{

/// Past fluxes f_0, f_1, ... per node: the last `window` in a ring, older ones summed.
class FluxHistory
{
public:
    FluxHistory(std::size_t nodes, std::size_t window)
        : m_nodes(nodes)
        , m_window(window)
        , m_ring(nodes * window)
        , m_older(nodes, 0.0)
        , m_total(nodes, 0.0)
    {
    }

    void push(std::span<const double> f)
    {
        if (m_window > 0) {
            double* slot = m_ring.data() + (m_count % m_window) * m_nodes;
            if (m_count >= m_window) {
                for (std::size_t g = 0; g < m_nodes; ++g) {
                    m_older[g] += slot[g];
                }
            }
            std::copy(f.begin(), f.end(), slot);
        }
        for (std::size_t g = 0; g < m_nodes; ++g) {
            m_total[g] += f[g];
        }
        ++m_count;
    }

    std::size_t count() const
    {
        return m_count;
    }
    std::size_t window() const
    {
        return m_window;
    }
    /// Flux pushed `lag` steps ago (1 = most recent), lag <= min(count, window).
    const double* lagged(std::size_t lag) const
    {
        return m_ring.data() + ((m_count - lag) % m_window) * m_nodes;
    }
    const std::vector<double>& older() const
    {
        return m_older;
    }
    const std::vector<double>& total() const
    {
        return m_total;
    }

private:
    std::size_t m_nodes;
    std::size_t m_window;
    std::size_t m_count = 0;
    std::vector<double> m_ring;
    std::vector<double> m_older;
    std::vector<double> m_total;
};

/**
 * value_k = sum_{m<k} h((k-m) dt) f_m. Exponential kernels use the exact
 * recursion v_k = e^{-rate dt} (v_{k-1} + c f_{k-1}); compactly supported ones
 * sum over the window and add `tail` times the older fluxes.
 */
class HistoryConvolution
{
public:
    static HistoryConvolution exponential(double coefficient, double rate, double dt, std::size_t nodes)
    {
        HistoryConvolution c;
        c.m_exponential = true;
        c.m_coefficient = coefficient;
        c.m_decay       = std::exp(-rate * dt);
        c.m_acc.assign(nodes, 0.0);
        return c;
    }

    template <class Fn>
    static HistoryConvolution windowed(Fn&& h, double dt, std::size_t window, double tail)
    {
        HistoryConvolution c;
        c.m_lag_values.resize(window);
        for (std::size_t j = 1; j <= window; ++j) {
            c.m_lag_values[j - 1] = h(static_cast<double>(j) * dt);
        }
        c.m_tail = tail;
        return c;
    }

    void on_push(std::span<const double> f)
    {
        if (m_exponential) {
            for (std::size_t g = 0; g < m_acc.size(); ++g) {
                m_acc[g] = m_decay * (m_acc[g] + m_coefficient * f[g]);
            }
        }
    }

    /// out += value at the current step.
    void add_to(const FluxHistory& hist, std::span<double> out) const
    {
        if (m_exponential) {
            for (std::size_t g = 0; g < out.size(); ++g) {
                out[g] += m_acc[g];
            }
            return;
        }
        if (m_tail != 0.0) {
            const auto& older = hist.older();
            for (std::size_t g = 0; g < out.size(); ++g) {
                out[g] += m_tail * older[g];
            }
        }
        const std::size_t lags = std::min(hist.count(), hist.window());
        for (std::size_t j = 1; j <= lags; ++j) {
            const double h = j <= m_lag_values.size() ? m_lag_values[j - 1] : m_tail;
            if (h == 0.0) {
                continue;
            }
            const double* f = hist.lagged(j);
            for (std::size_t g = 0; g < out.size(); ++g) {
                out[g] += h * f[g];
            }
        }
    }

private:
    bool m_exponential   = false;
    double m_coefficient = 0.0;
    double m_decay       = 0.0;
    std::vector<double> m_acc;
    std::vector<double> m_lag_values;
    double m_tail = 0.0;
};

} // namespace detail

/**
 * Solver for the limit densities on a midpoint grid with time step dt:
 *   Gamma_k = A (F_k / norm(d)),
 *   S_k     = S_0 exp(-sum_{m<k} Gamma_m dt),
 *   f_m     = S_m - S_{m+1}                         (infection flux),
 *   F_k     = lambda0(t_k) I_0 + sum_{m<k} lambda(t_k - t_m) f_m,
 *   I_k     = I_0 F0^c(t_k) + sum_{m<k} F^c(t_k - t_m) f_m,
 *   R_k     = R_0 + I_0 F0(t_k) + sum_{m<k} F(t_k - t_m) f_m.
 * Using the exact loss f_m for I and R keeps S + I + R = mu_bar to rounding.
 */
class MeanFieldSolver
{
public:
    MeanFieldSolver(const ExperimentConfig& config, const SpatialGrid& grid, SolverOptions options)
        : m_config(config)
        , m_grid(grid)
        , m_options(std::move(options))
        , m_op(config.kernel, grid, m_options.threads)
    {
        if (!(m_options.dt > 0.0)) {
            throw ConfigError("time step dt must be positive");
        }
        if (!(config.horizon > 0.0)) {
            throw ConfigError("horizon T must be positive");
        }
        if (grid.dim() != config.domain.dim) {
            throw ConfigError("grid dimension differs from the domain dimension");
        }
        m_steps = static_cast<std::size_t>(std::ceil(config.horizon / m_options.dt - 1e-9));
        m_dt    = config.horizon / static_cast<double>(m_steps);

        const std::size_t g = grid.size();
        const auto& ic      = config.initial;
        m_S0.resize(g);
        m_I0.resize(g);
        m_R0.resize(g);
        m_mu.resize(g);
        for (std::size_t a = 0; a < g; ++a) {
            const auto x = grid.node(a);
            m_S0[a]      = ic.frac_S > 0.0 ? ic.frac_S * ic.density_S(x) : 0.0;
            m_I0[a]      = ic.frac_I > 0.0 ? ic.frac_I * ic.density_I(x) : 0.0;
            m_R0[a]      = ic.frac_R > 0.0 ? ic.frac_R * ic.density_R(x) : 0.0;
            m_mu[a]      = m_S0[a] + m_I0[a] + m_R0[a];
        }
        m_den.resize(g);
        m_op.apply(m_mu, m_den);
        m_norm.resize(g);
        m_inv_norm.resize(g);
        for (std::size_t a = 0; a < g; ++a) {
            if (!(m_den[a] > 0.0)) {
                throw ConfigError("limit denominator is not positive on the grid; the population density or kernel "
                                  "violates the lower-bound assumption");
            }
            m_norm[a] = m_options.mode == RateMode::Raw
                            ? std::pow(m_den[a], config.gamma)
                            : phi_trunc(m_den[a], m_options.truncation_floor, config.gamma);
            m_inv_norm[a] = 1.0 / m_norm[a];
        }
        if (m_options.mode == RateMode::Truncated && !(m_options.truncation_floor > 0.0)) {
            throw ConfigError("truncated mode needs a positive floor c");
        }

        m_record.assign(m_steps + 1, false);
        m_record.front() = true;
        m_record.back()  = true;
        if (m_options.record_stride > 0) {
            for (std::size_t k = 0; k <= m_steps; k += m_options.record_stride) {
                m_record[k] = true;
            }
        }
        for (double t : m_options.record_times) {
            const double k = std::round(t / m_dt);
            if (k >= 0.0 && k <= static_cast<double>(m_steps)) {
                m_record[static_cast<std::size_t>(k)] = true;
            }
        }

        const auto& law   = config.infectivity_new;
        const double supp = law.support_end();
        m_window          = std::isfinite(supp) ? static_cast<std::size_t>(std::ceil(supp / m_dt)) + 1 : 0;
        if (!law.exponential_form() && m_window == 0) {
            throw ConfigError("infectivity law without exponential form must have bounded support");
        }
    }

    double dt() const
    {
        return m_dt;
    }
    std::size_t steps() const
    {
        return m_steps;
    }

    MeanFieldSolution solve_stepping() const
    {
        const std::size_t g = m_grid.size();
        auto sol            = empty_solution();
        auto hist           = make_history();
        auto conv           = make_convolutions();

        std::vector<double> S(m_S0), cum(g, 0.0), F(g), G(g), scaled(g), flux(g), I(g), R(g);
        for (std::size_t k = 0; k <= m_steps; ++k) {
            const double t = static_cast<double>(k) * m_dt;
            force_at(t, hist, conv, F);
            gamma_from_force(F, scaled, G);
            if (m_record[k]) {
                compartments_at(t, hist, conv, I, R);
                store(sol, k, S, F, I, R, G, cum);
            }
            if (k == m_steps) {
                break;
            }
            for (std::size_t a = 0; a < g; ++a) {
                cum[a] += G[a] * m_dt;
                const double next = m_S0[a] * std::exp(-cum[a]);
                flux[a]           = S[a] - next;
                S[a]              = next;
            }
            push(hist, conv, flux);
        }
        return sol;
    }

    enum class PicardGuess
    {
        ZeroForce,
        MaximalForce, // F = lambda* mu_bar, S = S_0
    };

    /**
     * Successive substitution of (S, F) into the right-hand sides of the
     * first two equations of the limit system, until the sup-norm change
     * drops below tol. `initial` overrides the built-in guesses.
     */
    MeanFieldSolution solve_picard(PicardGuess guess, double tol, std::size_t max_iter,
                                   const MeanFieldSolution* initial = nullptr) const
    {
        const std::size_t g = m_grid.size();
        const std::size_t n = m_steps + 1;
        std::vector<double> S_old(n * g), F_old(n * g), S_new(n * g), F_new(n * g);
        if (initial) {
            if (initial->steps != m_steps || initial->nodes() != g || initial->records() != n) {
                throw ConfigError("Picard initial guess must record every step on the same grid");
            }
            S_old = initial->S;
            F_old = initial->F;
        }
        else {
            for (std::size_t k = 0; k < n; ++k) {
                std::copy(m_S0.begin(), m_S0.end(), S_old.begin() + k * g);
                for (std::size_t a = 0; a < g; ++a) {
                    F_old[k * g + a] = guess == PicardGuess::ZeroForce ? 0.0 : m_config.lambda_star() * m_mu[a];
                }
            }
        }

        PicardReport report;
        report.beta = contraction_weight();
        MeanFieldSolution sol;
        for (std::size_t it = 1; it <= max_iter; ++it) {
            sol = picard_sweep(S_old, F_old, S_new, F_new);
            double res = 0.0, wres = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double weight = std::exp(-report.beta * static_cast<double>(k) * m_dt);
                double local        = 0.0;
                for (std::size_t a = 0; a < g; ++a) {
                    local = std::max({local, std::abs(S_new[k * g + a] - S_old[k * g + a]),
                                      std::abs(F_new[k * g + a] - F_old[k * g + a])});
                }
                res  = std::max(res, local);
                wres = std::max(wres, weight * local);
            }
            if (!report.weighted_residuals.empty() && report.weighted_residuals.back() > 0.0) {
                report.contraction.push_back(wres / report.weighted_residuals.back());
            }
            report.residuals.push_back(res);
            report.weighted_residuals.push_back(wres);
            report.iterations = it;
            S_old.swap(S_new);
            F_old.swap(F_new);
            if (res < tol) {
                sol.picard = report;
                return sol;
            }
        }
        throw NonConvergenceError("Picard iteration did not converge in " + std::to_string(max_iter) +
                                      " iterations (residual " + std::to_string(report.residuals.back()) + ")",
                                  report.residuals.back());
    }

    /// Lipschitz-type rate used to weight time in the Picard residual: sup_x sum_b w K / norm times (1 + lambda*) mu_max.
    double contraction_weight() const
    {
        std::vector<double> ones(m_grid.size()), kappa(m_grid.size());
        for (std::size_t a = 0; a < ones.size(); ++a) {
            ones[a] = m_inv_norm[a];
        }
        m_op.apply(ones, kappa);
        const double k_sup  = *std::max_element(kappa.begin(), kappa.end());
        const double mu_sup = *std::max_element(m_mu.begin(), m_mu.end());
        return 2.0 * k_sup * std::max(1.0, mu_sup) * (1.0 + m_config.lambda_star());
    }

private:
    MeanFieldSolution empty_solution() const
    {
        MeanFieldSolution sol;
        sol.grid             = m_grid;
        sol.dt               = m_dt;
        sol.steps            = m_steps;
        sol.gamma            = m_config.gamma;
        sol.mode             = m_options.mode;
        sol.truncation_floor = m_options.truncation_floor;
        sol.mu_bar           = m_mu;
        sol.initial_S        = m_S0;
        sol.initial_I        = m_I0;
        sol.initial_R        = m_R0;
        sol.denominators     = m_den;
        sol.norms            = m_norm;
        return sol;
    }

    detail::FluxHistory make_history() const
    {
        return detail::FluxHistory(m_grid.size(), m_config.infectivity_new.exponential_form() ? 0 : m_window);
    }

    struct Convolutions {
        detail::HistoryConvolution lambda;
        detail::HistoryConvolution survival;
        std::optional<detail::HistoryConvolution> cdf; // unset: F(u) = 1 - F^c(u), use total - survival
    };

    Convolutions make_convolutions() const
    {
        using detail::HistoryConvolution;
        const auto& law = m_config.infectivity_new;
        if (auto e = law.exponential_form()) {
            return {HistoryConvolution::exponential(e->coefficient, e->rate, m_dt, m_grid.size()),
                    HistoryConvolution::exponential(1.0, e->rate, m_dt, m_grid.size()), std::nullopt};
        }
        return {HistoryConvolution::windowed([&](double u) {
                    return law.mean(u);
                }, m_dt, m_window, 0.0),
                HistoryConvolution::windowed([&](double u) {
                    return law.survival(u);
                }, m_dt, m_window, 0.0),
                HistoryConvolution::windowed([&](double u) {
                    return law.duration_cdf(u);
                }, m_dt, m_window, 1.0)};
    }

    void push(detail::FluxHistory& hist, Convolutions& conv, std::span<const double> flux) const
    {
        hist.push(flux);
        conv.lambda.on_push(flux);
        conv.survival.on_push(flux);
        if (conv.cdf) {
            conv.cdf->on_push(flux);
        }
    }

    void force_at(double t, const detail::FluxHistory& hist, const Convolutions& conv, std::span<double> F) const
    {
        const double l0 = m_config.infectivity_initial.mean(t);
        for (std::size_t a = 0; a < F.size(); ++a) {
            F[a] = l0 * m_I0[a];
        }
        conv.lambda.add_to(hist, F);
    }

    void gamma_from_force(std::span<const double> F, std::span<double> scaled, std::span<double> G) const
    {
        for (std::size_t a = 0; a < F.size(); ++a) {
            scaled[a] = F[a] * m_inv_norm[a];
        }
        m_op.apply(scaled, G);
    }

    void compartments_at(double t, const detail::FluxHistory& hist, const Convolutions& conv, std::span<double> I,
                         std::span<double> R) const
    {
        const double surv0 = m_config.infectivity_initial.survival(t);
        const double cdf0  = m_config.infectivity_initial.duration_cdf(t);
        for (std::size_t a = 0; a < I.size(); ++a) {
            I[a] = m_I0[a] * surv0;
        }
        conv.survival.add_to(hist, I);
        if (conv.cdf) {
            for (std::size_t a = 0; a < R.size(); ++a) {
                R[a] = m_R0[a] + m_I0[a] * cdf0;
            }
            conv.cdf->add_to(hist, R);
        }
        else {
            std::vector<double> surv(I.size(), 0.0);
            conv.survival.add_to(hist, surv);
            const auto& total = hist.total();
            for (std::size_t a = 0; a < R.size(); ++a) {
                R[a] = m_R0[a] + m_I0[a] * cdf0 + (total[a] - surv[a]);
            }
        }
    }

    void store(MeanFieldSolution& sol, std::size_t k, std::span<const double> S, std::span<const double> F,
               std::span<const double> I, std::span<const double> R, std::span<const double> G,
               std::span<const double> cum) const
    {
        sol.times.push_back(static_cast<double>(k) * m_dt);
        sol.step_index.push_back(k);
        sol.S.insert(sol.S.end(), S.begin(), S.end());
        sol.F.insert(sol.F.end(), F.begin(), F.end());
        sol.I.insert(sol.I.end(), I.begin(), I.end());
        sol.R.insert(sol.R.end(), R.begin(), R.end());
        sol.Gamma.insert(sol.Gamma.end(), G.begin(), G.end());
        sol.cumulative_gamma.insert(sol.cumulative_gamma.end(), cum.begin(), cum.end());
    }

    // One application of the trajectory map; also assembles the records of the image.
    MeanFieldSolution picard_sweep(const std::vector<double>& S_old, const std::vector<double>& F_old,
                                   std::vector<double>& S_new, std::vector<double>& F_new) const
    {
        const std::size_t g = m_grid.size();
        auto sol            = empty_solution();
        auto hist           = make_history();
        auto conv           = make_convolutions();
        std::vector<double> cum(g, 0.0), G(g), scaled(g), flux(g), I(g), R(g);
        for (std::size_t k = 0; k <= m_steps; ++k) {
            const double t = static_cast<double>(k) * m_dt;
            std::span<const double> F_k(F_old.data() + k * g, g);
            std::span<const double> S_k(S_old.data() + k * g, g);
            std::span<double> S_next(S_new.data() + k * g, g);
            std::span<double> F_next(F_new.data() + k * g, g);
            gamma_from_force(F_k, scaled, G);
            for (std::size_t a = 0; a < g; ++a) {
                S_next[a] = m_S0[a] * std::exp(-cum[a]);
            }
            force_at(t, hist, conv, F_next);
            if (m_record[k]) {
                compartments_at(t, hist, conv, I, R);
                store(sol, k, S_next, F_next, I, R, G, cum);
            }
            for (std::size_t a = 0; a < g; ++a) {
                flux[a] = -S_k[a] * std::expm1(-G[a] * m_dt);
                cum[a] += G[a] * m_dt;
            }
            push(hist, conv, flux);
        }
        return sol;
    }

    ExperimentConfig m_config;
    SpatialGrid m_grid;
    SolverOptions m_options;
    GridKernelOperator m_op;
    std::size_t m_steps = 0;
    double m_dt         = 0.0;
    std::size_t m_window = 0;
    std::vector<double> m_S0, m_I0, m_R0, m_mu, m_den, m_norm, m_inv_norm;
    std::vector<bool> m_record;
};

inline MeanFieldSolution solve_stepping(const ExperimentConfig& config, const SpatialGrid& grid, SolverOptions options)
{
    return MeanFieldSolver(config, grid, std::move(options)).solve_stepping();
}

inline MeanFieldSolution solve_picard(const ExperimentConfig& config, const SpatialGrid& grid, SolverOptions options,
                                      double tol, std::size_t max_iter,
                                      MeanFieldSolver::PicardGuess guess = MeanFieldSolver::PicardGuess::ZeroForce)
{
    return MeanFieldSolver(config, grid, std::move(options)).solve_picard(guess, tol, max_iter);
}

struct AprioriReport {
    double mu_sup     = 0.0;
    double S_max      = 0.0;
    bool S_bounded    = false; // ||S(t)|| <= ||mu_bar||
    std::size_t S_violations = 0; // nodes where S(t, x) > S(0, x) or S increases between records
    double d_inf      = 0.0;
    bool d_positive   = false;
    double kernel_mass_sup = 0.0; // sup_x int K(x, y) dy
    double C          = 0.0;
    double F_max      = 0.0;
    double F_bound    = 0.0; // lambda* C exp(lambda* C T)
    bool F_bounded    = false;

    bool passed() const
    {
        return S_bounded && S_violations == 0 && d_positive && F_bounded;
    }
};

/**
 * Checks the a priori bounds on a solved system. The force bound uses
 * C = max(||mu_bar||, ||mu_bar|| sup_x int K(x, y) dy / norm(inf d)), the
 * constant that appears when Gronwall is applied to the force equation.
 */
inline AprioriReport check_apriori_bounds(const MeanFieldSolution& sol, const ExperimentConfig& config)
{
    AprioriReport rep;
    const std::size_t g = sol.nodes();
    rep.mu_sup          = *std::max_element(sol.mu_bar.begin(), sol.mu_bar.end());
    rep.d_inf           = *std::min_element(sol.denominators.begin(), sol.denominators.end());
    rep.d_positive      = rep.d_inf > 0.0;

    GridKernelOperator op(config.kernel, sol.grid);
    std::vector<double> ones(g, 1.0), mass(g);
    op.apply(ones, mass);
    rep.kernel_mass_sup = *std::max_element(mass.begin(), mass.end());

    const double norm_inf = sol.mode == RateMode::Raw ? std::pow(rep.d_inf, sol.gamma)
                                                      : phi_trunc(rep.d_inf, sol.truncation_floor, sol.gamma);
    rep.C                 = std::max(rep.mu_sup, rep.mu_sup * rep.kernel_mass_sup / norm_inf);
    const double ls       = config.lambda_star();
    rep.F_bound           = ls * rep.C * std::exp(ls * rep.C * config.horizon);

    for (std::size_t r = 0; r < sol.records(); ++r) {
        const auto S = sol.field(Measure::S, r);
        const auto F = sol.field(Measure::F, r);
        for (std::size_t a = 0; a < g; ++a) {
            rep.S_max = std::max(rep.S_max, S[a]);
            rep.F_max = std::max(rep.F_max, F[a]);
            if (S[a] > sol.initial_S[a]) {
                ++rep.S_violations;
            }
            else if (r > 0 && S[a] > sol.field(Measure::S, r - 1)[a]) {
                ++rep.S_violations;
            }
        }
    }
    rep.S_bounded = rep.S_max <= rep.mu_sup;
    rep.F_bounded = rep.F_max <= rep.F_bound;
    return rep;
}

struct HalvingReport {
    std::vector<double> dts;          // dt, dt/2, ...
    std::vector<double> differences;  // sup |u_dt - u_{dt/2}| over compared times, nodes and S, F, I, R
    std::vector<double> ratios;       // differences[i] / differences[i + 1]
};

/// Solves at dt, dt/2, ..., dt/2^halvings and compares successive solutions at `compare_times`.
inline HalvingReport step_halving_study(const ExperimentConfig& config, const SpatialGrid& grid, SolverOptions options,
                                        std::size_t halvings, const std::vector<double>& compare_times)
{
    HalvingReport rep;
    options.record_stride = 0;
    options.record_times  = compare_times;
    std::optional<MeanFieldSolution> previous;
    double dt = options.dt;
    for (std::size_t h = 0; h <= halvings; ++h, dt *= 0.5) {
        options.dt = dt;
        auto sol   = solve_stepping(config, grid, options);
        rep.dts.push_back(sol.dt);
        if (previous) {
            double diff = 0.0;
            for (double t : compare_times) {
                const auto r0 = previous->record_index(t);
                const auto r1 = sol.record_index(t);
                if (!r0 || !r1) {
                    throw ConfigError("comparison time " + std::to_string(t) + " is not a multiple of every step size");
                }
                for (Measure m : {Measure::S, Measure::F, Measure::I, Measure::R}) {
                    const auto u0 = previous->field(m, *r0);
                    const auto u1 = sol.field(m, *r1);
                    for (std::size_t a = 0; a < u0.size(); ++a) {
                        diff = std::max(diff, std::abs(u0[a] - u1[a]));
                    }
                }
            }
            rep.differences.push_back(diff);
        }
        previous = std::move(sol);
    }
    for (std::size_t i = 0; i + 1 < rep.differences.size(); ++i) {
        rep.ratios.push_back(rep.differences[i] / rep.differences[i + 1]);
    }
    return rep;
}

} // namespace vsir
