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
#include "vsir/model_core.hpp"

#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <vector>

namespace vsir
{

/// Spatially constant solution: totals S, I, R and force F sampled every `dt`.
struct HomogeneousSeries {
    double dt = 0.0;
    std::vector<double> times, S, I, R, F;

    std::size_t index(double t) const
    {
        const double k = std::round(t / dt);
        if (k < 0.0 || k >= static_cast<double>(times.size()) || std::abs(k * dt - t) > 1e-9 * std::max(1.0, t)) {
            throw LookupError("time " + std::to_string(t) + " is not an oracle node");
        }
        return static_cast<std::size_t>(k);
    }
};

namespace detail
{

inline double homogeneous_contact_rate(const ExperimentConfig& config)
{
    const auto* k = std::get_if<ConstantKernel>(&config.kernel.variant());
    if (!k) {
        throw ConfigError("homogeneous oracle needs a constant kernel (got " + config.kernel.name() + ")");
    }
    const auto& ic = config.initial;
    const bool uniform = (ic.frac_S == 0.0 || ic.density_S.is_uniform()) &&
                         (ic.frac_I == 0.0 || ic.density_I.is_uniform()) &&
                         (ic.frac_R == 0.0 || ic.density_R.is_uniform());
    if (!uniform) {
        throw ConfigError("homogeneous oracle needs spatially uniform initial densities");
    }
    // Gamma = k F / d^gamma with d = k on the unit box
    return std::pow(k->k, 1.0 - config.gamma);
}

} // namespace detail

/**
 * Scalar reduction of the limit system for a constant kernel and uniform
 * densities, computed on a step dt/substeps independently of the grid solver.
 * Two exponential laws give the SIR-type ODE
 *   S' = -kappa F S, J' = -rho0 J, I' = kappa F S - rho I, R' = rho0 J + rho I,
 *   F = a0 J + a I   (J: initially infected still infectious),
 * integrated with classical RK4. Otherwise the Volterra form is stepped directly.
 */
inline HomogeneousSeries homogeneous_oracle(const ExperimentConfig& config, double dt, std::size_t substeps = 10)
{
    const double kappa = detail::homogeneous_contact_rate(config);
    const auto& ic     = config.initial;
    const auto steps   = static_cast<std::size_t>(std::ceil(config.horizon / dt - 1e-9));
    HomogeneousSeries out;
    out.dt        = config.horizon / static_cast<double>(steps);
    const double h = out.dt / static_cast<double>(substeps);

    const auto e0 = config.infectivity_initial.exponential_form();
    const auto e1 = config.infectivity_new.exponential_form();
    if (e0 && e1) {
        using State = std::array<double, 4>; // S, J, I, R
        const double a0 = e0->coefficient, r0 = e0->rate, a = e1->coefficient, r = e1->rate;
        auto rhs = [&](const State& y, State& dy, double) {
            const double force = a0 * y[1] + a * y[2];
            const double inf   = kappa * force * y[0];
            dy[0]              = -inf;
            dy[1]              = -r0 * y[1];
            dy[2]              = inf - r * y[2];
            dy[3]              = r0 * y[1] + r * y[2];
        };
        boost::numeric::odeint::runge_kutta4<State> stepper;
        State y{ic.frac_S, ic.frac_I, 0.0, ic.frac_R};
        for (std::size_t k = 0; k <= steps; ++k) {
            const double t = static_cast<double>(k) * out.dt;
            out.times.push_back(t);
            out.S.push_back(y[0]);
            out.I.push_back(y[1] + y[2]);
            out.R.push_back(y[3]);
            out.F.push_back(a0 * y[1] + a * y[2]);
            for (std::size_t j = 0; j < substeps && k < steps; ++j) {
                stepper.do_step(rhs, y, t + static_cast<double>(j) * h, h);
            }
        }
        return out;
    }

    // Volterra stepping with infection flux q_m = S_m - S_{m+1} on the fine step.
    // Lag tables are cut at the support of the new law; older flux only feeds R.
    const auto& law0       = config.infectivity_initial;
    const auto& law        = config.infectivity_new;
    const std::size_t fine = steps * substeps;
    const double supp      = law.support_end();
    const std::size_t window =
        std::isfinite(supp) ? std::min(fine, static_cast<std::size_t>(std::ceil(supp / h)) + 1) : fine;
    std::vector<double> lam(window + 1), surv(window + 1), cdf(window + 1);
    for (std::size_t u = 1; u <= window; ++u) {
        const double x = static_cast<double>(u) * h;
        lam[u]         = law.mean(x);
        surv[u]        = law.survival(x);
        cdf[u]         = law.duration_cdf(x);
    }
    std::vector<double> q;
    q.reserve(fine);
    double S = ic.frac_S, cum = 0.0, older = 0.0; // older: flux with lag beyond the window
    for (std::size_t n = 0; n <= fine; ++n) {
        const double t     = static_cast<double>(n) * h;
        const std::size_t m0 = n > window ? n - window : 0;
        if (n > window) {
            older += q[n - window - 1];
        }
        double F = law0.mean(t) * ic.frac_I;
        for (std::size_t m = m0; m < n; ++m) {
            F += lam[n - m] * q[m];
        }
        if (n % substeps == 0) {
            double I = ic.frac_I * law0.survival(t);
            double R = ic.frac_R + ic.frac_I * law0.duration_cdf(t) + older;
            for (std::size_t m = m0; m < n; ++m) {
                I += surv[n - m] * q[m];
                R += cdf[n - m] * q[m];
            }
            out.times.push_back(t);
            out.S.push_back(S);
            out.I.push_back(I);
            out.R.push_back(R);
            out.F.push_back(F);
        }
        if (n == fine) {
            break;
        }
        cum += kappa * F * h;
        const double next = ic.frac_S * std::exp(-cum);
        q.push_back(S - next);
        S = next;
    }
    return out;
}

} // namespace vsir
