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
#include "vsir/infectivity.hpp"
#include "vsir/kernel.hpp"
#include "vsir/model_core.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace vsir
{

enum class EventKind : std::uint8_t
{
    Infection = 0,
    Recovery  = 1,
};

inline const char* to_string(EventKind k)
{
    return k == EventKind::Infection ? "infection" : "recovery";
}

struct Event {
    double time;
    std::size_t id;
    EventKind kind;
};

/// Per-individual infection record.
struct InfectionRecord {
    std::size_t id;
    double infection_time; // 0 for the initially infectious
    double eta;
    bool initially_infectious;
};

/// Events in processing order plus one record per ever-infected individual.
struct EventLog {
    std::vector<Event> events;
    std::vector<InfectionRecord> records;

    bool operator==(const EventLog& other) const
    {
        auto same_event = [](const Event& a, const Event& b) {
            return a.time == b.time && a.id == b.id && a.kind == b.kind;
        };
        auto same_record = [](const InfectionRecord& a, const InfectionRecord& b) {
            return a.id == b.id && a.infection_time == b.infection_time && a.eta == b.eta &&
                   a.initially_infectious == b.initially_infectious;
        };
        return std::equal(events.begin(), events.end(), other.events.begin(), other.events.end(), same_event) &&
               std::equal(records.begin(), records.end(), other.records.begin(), other.records.end(), same_record);
    }

    std::optional<double> first_infection_time() const
    {
        for (const auto& e : events) {
            if (e.kind == EventKind::Infection) {
                return e.time;
            }
        }
        return std::nullopt;
    }
};

/// State of every individual at one snapshot time.
struct Snapshot {
    double time = 0.0;
    std::vector<Compartment> compartments;
    std::vector<double> force; // lambda_j(t - tau_j), zero for never-infected
};

/// Snapshots of the four normalized empirical measures over a shared population.
class EpidemicTrajectory
{
public:
    EpidemicTrajectory() = default;
    explicit EpidemicTrajectory(std::shared_ptr<const Population> population)
        : m_population(std::move(population))
    {
    }

    const Population& population() const
    {
        return *m_population;
    }
    const std::vector<Snapshot>& snapshots() const
    {
        return m_snapshots;
    }
    void push(Snapshot s)
    {
        m_snapshots.push_back(std::move(s));
    }

    const Snapshot& at(double t) const
    {
        for (const auto& s : m_snapshots) {
            if (std::abs(s.time - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
                return s;
            }
        }
        throw LookupError("no snapshot stored at t = " + std::to_string(t));
    }

    /// (mu_t^{which,N}, phi) with 1/N normalization, summed in id order.
    template <class Fn>
    double pair(const Snapshot& s, Measure which, Fn&& phi) const
    {
        const auto& pop = *m_population;
        double sum      = 0.0;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            double w = 0.0;
            switch (which) {
            case Measure::S:
                w = s.compartments[i] == Compartment::Susceptible ? 1.0 : 0.0;
                break;
            case Measure::I:
                w = s.compartments[i] == Compartment::Infectious ? 1.0 : 0.0;
                break;
            case Measure::R:
                w = s.compartments[i] == Compartment::Recovered ? 1.0 : 0.0;
                break;
            case Measure::F:
                w = s.force[i];
                break;
            }
            if (w != 0.0) {
                sum += w * phi(pop.position(i));
            }
        }
        return sum / static_cast<double>(pop.size());
    }

    /// (mu^S + mu^I + mu^R, phi) accumulated in a single id-ordered pass.
    template <class Fn>
    double pair_union(const Snapshot& s, Fn&& phi) const
    {
        const auto& pop = *m_population;
        double sum      = 0.0;
        for (std::size_t i = 0; i < pop.size(); ++i) {
            const auto c = s.compartments[i];
            if (c == Compartment::Susceptible || c == Compartment::Infectious || c == Compartment::Recovered) {
                sum += phi(pop.position(i));
            }
        }
        return sum / static_cast<double>(pop.size());
    }

private:
    std::shared_ptr<const Population> m_population;
    std::vector<Snapshot> m_snapshots;
};

template <class Fn>
double pair_snapshot(const EpidemicTrajectory& traj, double t, Measure which, Fn&& phi)
{
    return traj.pair(traj.at(t), which, std::forward<Fn>(phi));
}

struct SimOptions {
    RateMode mode = RateMode::Raw;
    /// Floor c for the truncated rate; required in truncated mode.
    double truncation_floor = 0.0;
    unsigned threads        = 1;
    /// Evaluate the full rate at every candidate and assert it stays below the bound.
    bool check_dominance = false;
};

struct SimStats {
    std::uint64_t candidates = 0;
    std::uint64_t accepted   = 0;
    double max_rate_to_bound = 0.0; // filled when check_dominance is set
    double engine_seconds    = 0.0; // wall clock of the event loop, excluding the O(N^2) setup
};

/**
 * Finite-N system with static positions. Holds the precomputed
 * denominators d^N(X^j), the normalization weights 1/(N d_j^gamma) (or
 * 1/(N Phi(d_j)) in truncated mode), the static thinning bounds and the
 * set of currently infectious individuals.
 */
class SimState
{
public:
    SimState(const ExperimentConfig& config, std::shared_ptr<const Population> population, SimOptions options)
        : m_kernel(config.kernel)
        , m_population(std::move(population))
        , m_options(options)
        , m_lambda_star(config.lambda_star())
    {
        const auto& pop = *m_population;
        const std::size_t n = pop.size();
        if (m_options.mode == RateMode::Truncated && !(m_options.truncation_floor > 0.0)) {
            throw ConfigError("truncated mode needs a positive floor c");
        }
        m_denominators = empirical_denominators(m_kernel, pop, m_options.threads);
        m_weights.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double norm = m_options.mode == RateMode::Raw
                                    ? std::pow(m_denominators[j], config.gamma)
                                    : phi_trunc(m_denominators[j], m_options.truncation_floor, config.gamma);
            m_weights[j] = 1.0 / (static_cast<double>(n) * norm);
        }
        m_compartments.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            m_compartments[i] = pop.initial_compartment(i);
        }
        m_trajectories.resize(n);
        m_infection_time.assign(n, std::numeric_limits<double>::infinity());
        m_active_slot.assign(n, kNone);
        m_bounds.assign(n, 0.0);
        parallel_for(0, n, m_options.threads, [&](std::size_t i) {
            if (m_compartments[i] == Compartment::Susceptible) {
                m_bounds[i] = compute_bound(i);
            }
        });
    }

    const Population& population() const
    {
        return *m_population;
    }
    std::shared_ptr<const Population> population_ptr() const
    {
        return m_population;
    }
    const std::vector<double>& denominators() const
    {
        return m_denominators;
    }
    Compartment compartment(std::size_t i) const
    {
        return m_compartments[i];
    }
    double thinning_bound(std::size_t i) const
    {
        return m_bounds[i];
    }
    std::size_t active_count() const
    {
        return m_active.size();
    }
    double infection_time(std::size_t i) const
    {
        return m_infection_time[i];
    }
    const InfectivityTrajectory& trajectory(std::size_t i) const
    {
        return m_trajectories[i];
    }

    /// Marks i infectious from time tau on with the given infectivity.
    void infect(std::size_t i, double tau, InfectivityTrajectory trajectory)
    {
        m_compartments[i]   = Compartment::Infectious;
        m_infection_time[i] = tau;
        m_trajectories[i]   = std::move(trajectory);
        m_active_slot[i]    = m_active.size();
        m_active.push_back(i);
        const auto x = population().position(i);
        m_active_pos.insert(m_active_pos.end(), x.begin(), x.end());
    }

    void recover(std::size_t i)
    {
        m_compartments[i] = Compartment::Recovered;
        const std::size_t slot = m_active_slot[i];
        if (slot == kNone) {
            return;
        }
        const std::size_t last = m_active.size() - 1;
        const std::size_t dim  = population().dim();
        if (slot != last) {
            const std::size_t moved = m_active[last];
            m_active[slot]          = moved;
            m_active_slot[moved]    = slot;
            std::copy_n(m_active_pos.begin() + last * dim, dim, m_active_pos.begin() + slot * dim);
        }
        m_active.pop_back();
        m_active_pos.resize(last * dim);
        m_active_slot[i] = kNone;
    }

    /// Rate at x: (1/N) sum over infectious j of K(x, X^j) lambda_j(t - tau_j) / norm(d_j).
    double gamma_N(double t, ConstPoint x) const
    {
        return m_kernel.visit([&](const auto& k) {
            return accumulate(k, t, x, std::numeric_limits<double>::infinity());
        });
    }

    /// Whether the candidate mark u is under the rate curve, i.e. u <= gamma_N(t, x).
    /// Stops summing once the partial sum reaches u (all terms are nonnegative).
    bool accepts(std::size_t i, double t, double u) const
    {
        const auto x = population().position(i);
        return m_kernel.visit([&](const auto& k) {
            return accumulate(k, t, x, u) >= u;
        });
    }

    Snapshot snapshot(double t) const
    {
        Snapshot s;
        s.time         = t;
        s.compartments = m_compartments;
        s.force.assign(m_compartments.size(), 0.0);
        for (std::size_t j : m_active) {
            s.force[j] = m_trajectories[j](t - m_infection_time[j]);
        }
        return s;
    }

private:
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

    double compute_bound(std::size_t i) const
    {
        const auto& pop = population();
        const auto x    = pop.position(i);
        return m_kernel.visit([&](const auto& k) {
            double s = 0.0;
            for (std::size_t j = 0; j < pop.size(); ++j) {
                s += k(x, pop.position(j)) * m_weights[j];
            }
            return m_lambda_star * s;
        });
    }

    template <class K>
    double accumulate(const K& k, double t, ConstPoint x, double stop_at) const
    {
        const std::size_t dim = population().dim();
        double s              = 0.0;
        for (std::size_t a = 0; a < m_active.size(); ++a) {
            const std::size_t j = m_active[a];
            const double level  = m_trajectories[j](t - m_infection_time[j]);
            if (level == 0.0) {
                continue;
            }
            s += k(x, ConstPoint(m_active_pos.data() + a * dim, dim)) * level * m_weights[j];
            if (s >= stop_at) {
                break;
            }
        }
        return s;
    }

    Kernel m_kernel;
    std::shared_ptr<const Population> m_population;
    SimOptions m_options;
    double m_lambda_star;
    std::vector<double> m_denominators;
    std::vector<double> m_weights;
    std::vector<double> m_bounds;
    std::vector<Compartment> m_compartments;
    std::vector<InfectivityTrajectory> m_trajectories;
    std::vector<double> m_infection_time;
    std::vector<std::size_t> m_active;
    std::vector<double> m_active_pos;
    std::vector<std::size_t> m_active_slot;
};

/// Homogeneous Poisson stream of rate B in time with uniform marks in (0, B]:
/// the part of a unit-intensity Poisson measure on R_+^2 below the level B.
class CandidateStream
{
public:
    CandidateStream() = default;
    CandidateStream(std::uint64_t seed, double bound)
        : m_rng(seed)
        , m_bound(bound)
    {
    }

    double next_gap()
    {
        return m_rng.exponential(m_bound);
    }
    double mark()
    {
        return m_bound * (1.0 - m_rng.uniform());
    }
    double bound() const
    {
        return m_bound;
    }

private:
    RandomStream m_rng;
    double m_bound = 0.0;
};

struct SimResult {
    EventLog log;
    EpidemicTrajectory trajectory;
    SimStats stats;
    double min_denominator = 0.0;
};

namespace detail
{
enum class QueueKind : std::uint8_t
{
    Recovery  = 0,
    Candidate = 1,
};

struct QueueEntry {
    double time;
    std::size_t id;
    QueueKind kind;

    // min-heap on (time, id, kind)
    bool operator<(const QueueEntry& o) const
    {
        if (time != o.time) {
            return time > o.time;
        }
        if (id != o.id) {
            return id > o.id;
        }
        return kind > o.kind;
    }
};
} // namespace detail

/**
 * Exact simulation on [0, T] by per-susceptible thinning. Susceptible i owns
 * a candidate stream of rate B_i from its own substream; a candidate (t, u)
 * infects i iff u <= gamma_N(t, X^i). Events are processed in (time, id)
 * order; a snapshot at s sees every event with time <= s.
 */
inline SimResult simulate(const ExperimentConfig& config, std::shared_ptr<const Population> population,
                          SimOptions options)
{
    if (!(config.horizon > 0.0)) {
        throw ConfigError("horizon T must be positive");
    }
    using detail::QueueEntry;
    using detail::QueueKind;

    SimState state(config, population, options);
    const auto& pop   = *population;
    const std::size_t n = pop.size();
    const double horizon = config.horizon;

    SimResult result;
    result.trajectory      = EpidemicTrajectory(population);
    result.min_denominator = n ? *std::min_element(state.denominators().begin(), state.denominators().end()) : 0.0;

    std::priority_queue<QueueEntry> queue;
    std::vector<CandidateStream> streams(n);

    for (std::size_t i = 0; i < n; ++i) {
        if (pop.initial_compartment(i) == Compartment::Infectious) {
            RandomStream rng(pop.trajectory_seed(i));
            auto traj        = config.infectivity_initial.sample(rng);
            const double eta = traj.eta();
            state.infect(i, 0.0, std::move(traj));
            result.log.records.push_back({i, 0.0, eta, true});
            if (eta <= horizon) {
                queue.push({eta, i, QueueKind::Recovery});
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (pop.initial_compartment(i) != Compartment::Susceptible) {
            continue;
        }
        const double bound = state.thinning_bound(i);
        if (bound > 0.0) {
            streams[i]     = CandidateStream(pop.candidate_seed(i), bound);
            const double t = streams[i].next_gap();
            if (t <= horizon) {
                queue.push({t, i, QueueKind::Candidate});
            }
        }
    }

    const auto engine_start   = std::chrono::steady_clock::now();
    std::size_t next_snapshot = 0;
    const auto& snaps         = config.snapshot_times;
    auto emit_until = [&](double t_exclusive) {
        while (next_snapshot < snaps.size() && snaps[next_snapshot] < t_exclusive) {
            result.trajectory.push(state.snapshot(snaps[next_snapshot]));
            ++next_snapshot;
        }
    };

    while (!queue.empty()) {
        const QueueEntry e = queue.top();
        queue.pop();
        emit_until(e.time);
        const std::size_t i = e.id;
        if (e.kind == QueueKind::Recovery) {
            state.recover(i);
            result.log.events.push_back({e.time, i, EventKind::Recovery});
            continue;
        }
        auto& stream   = streams[i];
        const double u = stream.mark();
        ++result.stats.candidates;
        if (options.check_dominance) {
            const double rate = state.gamma_N(e.time, pop.position(i));
            const double ratio = rate / stream.bound();
            result.stats.max_rate_to_bound = std::max(result.stats.max_rate_to_bound, ratio);
            if (ratio > 1.0 + 1e-12) {
                throw InternalError("thinning bound dominated by the rate for individual " + std::to_string(i));
            }
        }
        if (state.accepts(i, e.time, u)) {
            ++result.stats.accepted;
            RandomStream rng(pop.trajectory_seed(i));
            auto traj        = config.infectivity_new.sample(rng);
            const double eta = traj.eta();
            state.infect(i, e.time, std::move(traj));
            result.log.events.push_back({e.time, i, EventKind::Infection});
            result.log.records.push_back({i, e.time, eta, false});
            if (e.time + eta <= horizon) {
                queue.push({e.time + eta, i, QueueKind::Recovery});
            }
        }
        else {
            const double t = e.time + stream.next_gap();
            if (t <= horizon) {
                queue.push({t, i, QueueKind::Candidate});
            }
        }
    }
    emit_until(std::numeric_limits<double>::infinity());
    result.stats.engine_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - engine_start).count();
    return result;
}

inline SimResult simulate(const ExperimentConfig& config, const Population& population, SimOptions options)
{
    return simulate(config, std::make_shared<const Population>(population), options);
}

} // namespace vsir
