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

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace vsir
{

/// Settings of a convergence study ([study] section).
struct StudySpec {
    std::vector<std::size_t> n_ladder{250, 500, 1000, 2000, 4000, 8000};
    std::size_t replicates = 20;
    std::vector<std::string> test_functions{"all"};
    std::vector<Measure> components{Measure::S, Measure::F, Measure::I, Measure::R};
};

/// Everything a config file holds: the experiment plus solver and study settings.
struct ConfigFile {
    ExperimentConfig experiment;
    std::size_t grid = 32; // nodes per axis of the mean-field grid
    double dt        = 1e-2;
    std::optional<StudySpec> study;
};

inline std::string format_number(double v)
{
    return fmt::format("{:.17g}", v);
}

namespace detail
{

inline double parse_double(const std::string& s, const std::string& where)
{
    const std::string t = boost::algorithm::trim_copy(s);
    double v            = 0.0;
    auto [ptr, ec]      = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        // from_chars rejects "inf"-style spellings we also reject, and a leading '+'
        throw ConfigError(where + ": expected a number, got '" + s + "'");
    }
    return v;
}

inline std::uint64_t parse_unsigned(const std::string& s, const std::string& where)
{
    const std::string t = boost::algorithm::trim_copy(s);
    std::uint64_t v     = 0;
    auto [ptr, ec]      = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size()) {
        throw ConfigError(where + ": expected a non-negative integer, got '" + s + "'");
    }
    return v;
}

inline bool parse_bool(const std::string& s, const std::string& where)
{
    const auto t = boost::algorithm::to_lower_copy(boost::algorithm::trim_copy(s));
    if (t == "true" || t == "1" || t == "yes") {
        return true;
    }
    if (t == "false" || t == "0" || t == "no") {
        return false;
    }
    throw ConfigError(where + ": expected true or false, got '" + s + "'");
}

inline std::vector<std::string> split(const std::string& s, const char* sep)
{
    std::vector<std::string> parts;
    boost::algorithm::split(parts, s, boost::algorithm::is_any_of(sep), boost::algorithm::token_compress_on);
    std::vector<std::string> out;
    for (auto& p : parts) {
        boost::algorithm::trim(p);
        if (!p.empty()) {
            out.push_back(p);
        }
    }
    return out;
}

inline std::vector<double> parse_list(const std::string& s, const std::string& where)
{
    std::vector<double> out;
    for (const auto& p : split(s, ",")) {
        out.push_back(parse_double(p, where));
    }
    return out;
}

inline std::string join(const std::vector<double>& v, const char* sep = ", ")
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? sep : "") + format_number(v[i]);
    }
    return s;
}

/// "start:stop:step" (both ends included) or a comma-separated list.
inline std::vector<double> parse_times(const std::string& s, const std::string& where)
{
    if (s.find(':') == std::string::npos) {
        return parse_list(s, where);
    }
    const auto parts = split(s, ":");
    if (parts.size() != 3) {
        throw ConfigError(where + ": range must read start:stop:step");
    }
    const double a = parse_double(parts[0], where), b = parse_double(parts[1], where),
                 h = parse_double(parts[2], where);
    if (!(h > 0.0) || b < a) {
        throw ConfigError(where + ": range needs step > 0 and stop >= start");
    }
    const double count = std::floor((b - a) / h + 1e-9);
    std::vector<double> out;
    for (double k = 0.0; k <= count; k += 1.0) {
        out.push_back(std::min(a + k * h, b));
    }
    return out;
}

/// Key-value pairs of one section; every key must be consumed.
class Section
{
public:
    Section(std::string name, std::map<std::string, std::string> values)
        : m_name(std::move(name))
        , m_values(std::move(values))
    {
    }

    std::string where(const std::string& key) const
    {
        return "[" + m_name + "] " + key;
    }

    std::optional<std::string> take(const std::string& key)
    {
        auto it = m_values.find(key);
        if (it == m_values.end()) {
            return std::nullopt;
        }
        auto v = it->second;
        m_values.erase(it);
        return v;
    }

    std::string require(const std::string& key)
    {
        auto v = take(key);
        if (!v) {
            throw ConfigError("missing key " + where(key));
        }
        return *v;
    }

    double number(const std::string& key, std::optional<double> fallback = std::nullopt)
    {
        auto v = take(key);
        if (!v) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError("missing key " + where(key));
        }
        return parse_double(*v, where(key));
    }

    std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt)
    {
        auto v = take(key);
        if (!v) {
            if (fallback) {
                return *fallback;
            }
            throw ConfigError("missing key " + where(key));
        }
        return parse_unsigned(*v, where(key));
    }

    std::vector<double> list(const std::string& key)
    {
        return parse_list(require(key), where(key));
    }

    void finish() const
    {
        if (!m_values.empty()) {
            std::string keys;
            for (const auto& [k, v] : m_values) {
                keys += (keys.empty() ? "" : ", ") + k;
            }
            throw ConfigError("unknown key(s) in [" + m_name + "]: " + keys);
        }
    }

private:
    std::string m_name;
    std::map<std::string, std::string> m_values;
};

inline Kernel parse_kernel(Section& s, bool& allow_discontinuous)
{
    const auto type     = s.require("type");
    allow_discontinuous = false;
    if (auto v = s.take("allow_discontinuous")) {
        allow_discontinuous = parse_bool(*v, s.where("allow_discontinuous"));
    }
    if (type == "constant") {
        return Kernel(ConstantKernel{s.number("k", 1.0)});
    }
    if (type == "top_hat") {
        return Kernel(TopHatKernel{s.number("radius"), s.number("height", 1.0)});
    }
    if (type == "gaussian_bump") {
        return Kernel(GaussianBumpKernel{s.number("sigma"), s.number("floor", 0.0)});
    }
    if (type == "exp_decay") {
        return Kernel(ExpDecayKernel{s.number("scale"), s.number("floor", 0.0)});
    }
    throw ConfigError(s.where("type") + ": unknown kernel '" + type + "'");
}

inline InfectivityModel parse_infectivity(Section& s)
{
    const auto type = s.require("type");
    if (type == "markov") {
        return InfectivityModel(MarkovInfectivity{s.number("a"), s.number("rho")});
    }
    if (type == "fixed_duration") {
        return InfectivityModel(FixedDurationInfectivity{s.number("a"), s.number("h")});
    }
    if (type == "hump") {
        HumpInfectivity m{s.number("a"), s.number("p"), 0.0, 0.0};
        if (auto h = s.take("h")) {
            m.h_min = m.h_max = parse_double(*h, s.where("h"));
        }
        else {
            m.h_min = s.number("h_min");
            m.h_max = s.number("h_max");
        }
        return InfectivityModel(m);
    }
    if (type == "tabulated") {
        TabulatedInfectivity m;
        m.pieces         = s.integer("pieces", 1);
        m.levels         = s.list("levels");
        m.level_probs    = s.list("level_probs");
        m.durations      = s.list("durations");
        m.duration_probs = s.list("duration_probs");
        return InfectivityModel(m);
    }
    throw ConfigError(s.where("type") + ": unknown infectivity law '" + type + "'");
}

inline Density parse_density(Section& s, const std::string& name, std::size_t dim)
{
    const auto type = s.take(name).value_or("uniform");
    if (type == "uniform") {
        return Density(UniformDensity{});
    }
    if (type == "gaussian_mixture") {
        const auto weights = s.list(name + ".weights");
        const auto sigmas  = s.list(name + ".sigmas");
        const auto centers = split(s.require(name + ".centers"), ",");
        if (weights.size() != sigmas.size() || weights.size() != centers.size()) {
            throw ConfigError("[initial_condition] " + name + ": weights, centers and sigmas differ in length");
        }
        GaussianMixtureDensity d;
        for (std::size_t c = 0; c < weights.size(); ++c) {
            GaussianMixtureDensity::Component comp;
            comp.weight = weights[c];
            comp.sigma  = sigmas[c];
            for (const auto& x : split(centers[c], " \t")) {
                comp.center.push_back(parse_double(x, s.where(name + ".centers")));
            }
            if (comp.center.size() != dim) {
                throw ConfigError(s.where(name + ".centers") + ": each center needs " + std::to_string(dim) +
                                  " coordinates");
            }
            d.components.push_back(std::move(comp));
        }
        return Density(d);
    }
    if (type == "piecewise_constant") {
        PiecewiseConstantDensity d;
        d.cells_per_axis = s.integer(name + ".cells_per_axis");
        d.values         = s.list(name + ".values");
        std::size_t cells = 1;
        for (std::size_t a = 0; a < dim; ++a) {
            cells *= d.cells_per_axis;
        }
        if (d.cells_per_axis == 0 || d.values.size() != cells) {
            throw ConfigError(s.where(name + ".values") + ": expected " + std::to_string(cells) + " values");
        }
        return Density(d);
    }
    throw ConfigError(s.where(name) + ": unknown density '" + type + "'");
}

inline std::string kernel_to_ini(const Kernel& kernel, bool allow_discontinuous)
{
    std::string out = kernel.visit([](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantKernel>) {
            return "type = constant\nk = " + format_number(k.k) + "\n";
        }
        else if constexpr (std::is_same_v<K, TopHatKernel>) {
            return "type = top_hat\nradius = " + format_number(k.radius) + "\nheight = " + format_number(k.height) +
                   "\n";
        }
        else if constexpr (std::is_same_v<K, GaussianBumpKernel>) {
            return "type = gaussian_bump\nsigma = " + format_number(k.sigma) + "\nfloor = " + format_number(k.floor) +
                   "\n";
        }
        else {
            return "type = exp_decay\nscale = " + format_number(k.scale) + "\nfloor = " + format_number(k.floor) +
                   "\n";
        }
    });
    if (allow_discontinuous) {
        out += "allow_discontinuous = true\n";
    }
    return out;
}

inline std::string infectivity_to_ini(const InfectivityModel& law)
{
    return std::visit(
        [](const auto& m) -> std::string {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, MarkovInfectivity>) {
                return "type = markov\na = " + format_number(m.a) + "\nrho = " + format_number(m.rho) + "\n";
            }
            else if constexpr (std::is_same_v<M, FixedDurationInfectivity>) {
                return "type = fixed_duration\na = " + format_number(m.a) + "\nh = " + format_number(m.h) + "\n";
            }
            else if constexpr (std::is_same_v<M, HumpInfectivity>) {
                return "type = hump\na = " + format_number(m.a) + "\np = " + format_number(m.p) +
                       "\nh_min = " + format_number(m.h_min) + "\nh_max = " + format_number(m.h_max) + "\n";
            }
            else {
                return "type = tabulated\npieces = " + std::to_string(m.pieces) + "\nlevels = " + join(m.levels) +
                       "\nlevel_probs = " + join(m.level_probs) + "\ndurations = " + join(m.durations) +
                       "\nduration_probs = " + join(m.duration_probs) + "\n";
            }
        },
        law.variant());
}

inline std::string density_to_ini(const Density& density, const std::string& name)
{
    return std::visit(
        [&](const auto& d) -> std::string {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, UniformDensity>) {
                return name + " = uniform\n";
            }
            else if constexpr (std::is_same_v<D, GaussianMixtureDensity>) {
                std::vector<double> w, s;
                std::string centers;
                for (const auto& c : d.components) {
                    w.push_back(c.weight);
                    s.push_back(c.sigma);
                    centers += (centers.empty() ? "" : ", ") + join(c.center, " ");
                }
                return name + " = gaussian_mixture\n" + name + ".weights = " + join(w) + "\n" + name +
                       ".centers = " + centers + "\n" + name + ".sigmas = " + join(s) + "\n";
            }
            else {
                return name + " = piecewise_constant\n" + name + ".cells_per_axis = " +
                       std::to_string(d.cells_per_axis) + "\n" + name + ".values = " + join(d.values) + "\n";
            }
        },
        density.variant());
}

inline Measure parse_measure(const std::string& s, const std::string& where)
{
    if (s == "S") {
        return Measure::S;
    }
    if (s == "I") {
        return Measure::I;
    }
    if (s == "R") {
        return Measure::R;
    }
    if (s == "F") {
        return Measure::F;
    }
    throw ConfigError(where + ": unknown component '" + s + "' (expected S, I, R or F)");
}

} // namespace detail

inline RateMode parse_mode(const std::string& s)
{
    if (s == "raw") {
        return RateMode::Raw;
    }
    if (s == "truncated") {
        return RateMode::Truncated;
    }
    throw ConfigError("mode must be raw or truncated (got '" + s + "')");
}

/**
 * Parses the INI text. Sections: [domain], [kernel], [infectivity.initial],
 * [infectivity.new], [initial_condition], [run] and the optional [study].
 * Unknown sections and keys are errors.
 */
inline ConfigFile parse_config(const std::string& text, const std::string& source = "<config>")
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    }
    catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }

    std::map<std::string, detail::Section> sections;
    for (const auto& [name, node] : tree) {
        if (node.empty()) {
            throw ConfigError("key '" + name + "' outside of any section");
        }
        std::map<std::string, std::string> values;
        for (const auto& [key, leaf] : node) {
            values.emplace(key, leaf.data());
        }
        sections.emplace(name, detail::Section(name, std::move(values)));
    }
    static const std::vector<std::string> known{"domain", "kernel", "infectivity.initial", "infectivity.new",
                                                "initial_condition", "run", "study"};
    for (const auto& [name, s] : sections) {
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ConfigError("unknown section [" + name + "]");
        }
    }
    auto section = [&](const std::string& name) -> detail::Section& {
        auto it = sections.find(name);
        if (it == sections.end()) {
            it = sections.emplace(name, detail::Section(name, {})).first;
        }
        return it->second;
    };
    auto required = [&](const std::string& name) -> detail::Section& {
        if (!sections.count(name)) {
            throw ConfigError("missing section [" + name + "]");
        }
        return sections.at(name);
    };

    ConfigFile cfg;
    auto& e = cfg.experiment;

    auto& dom      = section("domain");
    e.domain.dim   = dom.integer("dim", 2);
    if (e.domain.dim == 0) {
        throw ConfigError("[domain] dim must be at least 1");
    }
    dom.finish();

    auto& ker = required("kernel");
    e.kernel  = detail::parse_kernel(ker, e.allow_discontinuous_kernel);
    ker.finish();

    auto& inf0            = required("infectivity.initial");
    e.infectivity_initial = detail::parse_infectivity(inf0);
    inf0.finish();
    auto& inf1        = required("infectivity.new");
    e.infectivity_new = detail::parse_infectivity(inf1);
    inf1.finish();

    auto& ic           = required("initial_condition");
    e.initial.frac_S   = ic.number("frac_S");
    e.initial.frac_I   = ic.number("frac_I");
    e.initial.frac_R   = ic.number("frac_R", 0.0);
    e.initial.density_S = detail::parse_density(ic, "density_S", e.domain.dim);
    e.initial.density_I = detail::parse_density(ic, "density_I", e.domain.dim);
    e.initial.density_R = detail::parse_density(ic, "density_R", e.domain.dim);
    ic.finish();

    auto& run         = required("run");
    e.gamma           = run.number("gamma");
    e.horizon         = run.number("horizon");
    e.population_size = run.integer("population_size", 1000);
    e.master_seed     = run.integer("seed", 0);
    if (auto v = run.take("snapshot_times")) {
        e.snapshot_times = detail::parse_times(*v, run.where("snapshot_times"));
    }
    else {
        e.snapshot_times = {0.0, e.horizon};
    }
    if (auto v = run.take("mode")) {
        e.truncation = parse_mode(*v);
    }
    if (auto v = run.take("truncation_floor")) {
        e.truncation_floor = detail::parse_double(*v, run.where("truncation_floor"));
    }
    cfg.grid = run.integer("grid", 32);
    cfg.dt   = run.number("dt", 1e-2);
    if (cfg.grid == 0 || !(cfg.dt > 0.0)) {
        throw ConfigError("[run] grid and dt must be positive");
    }
    run.finish();

    if (sections.count("study")) {
        auto& st = sections.at("study");
        StudySpec spec;
        if (auto v = st.take("n_ladder")) {
            spec.n_ladder.clear();
            for (const auto& p : detail::split(*v, ",")) {
                spec.n_ladder.push_back(detail::parse_unsigned(p, st.where("n_ladder")));
            }
        }
        spec.replicates = st.integer("replicates", 20);
        if (auto v = st.take("test_functions")) {
            spec.test_functions = detail::split(*v, ",");
        }
        if (auto v = st.take("components")) {
            spec.components.clear();
            for (const auto& p : detail::split(*v, ",")) {
                spec.components.push_back(detail::parse_measure(p, st.where("components")));
            }
        }
        st.finish();
        for (std::size_t i = 1; i < spec.n_ladder.size(); ++i) {
            if (spec.n_ladder[i] <= spec.n_ladder[i - 1]) {
                throw ConfigError("[study] n_ladder must be strictly increasing");
            }
        }
        if (spec.n_ladder.empty() || spec.n_ladder.front() == 0) {
            throw ConfigError("[study] n_ladder entries must be positive");
        }
        if (spec.replicates < 2) {
            throw ConfigError("[study] replicates must be at least 2");
        }
        cfg.study = std::move(spec);
    }
    return cfg;
}

inline ConfigFile load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot read config file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

/// Canonical INI text; parse_config(to_ini(c)) reproduces c and the same text.
inline std::string to_ini(const ConfigFile& cfg)
{
    const auto& e = cfg.experiment;
    std::string out;
    out += "[domain]\ndim = " + std::to_string(e.domain.dim) + "\n\n";
    out += "[kernel]\n" + detail::kernel_to_ini(e.kernel, e.allow_discontinuous_kernel) + "\n";
    out += "[infectivity.initial]\n" + detail::infectivity_to_ini(e.infectivity_initial) + "\n";
    out += "[infectivity.new]\n" + detail::infectivity_to_ini(e.infectivity_new) + "\n";
    out += "[initial_condition]\nfrac_S = " + format_number(e.initial.frac_S) +
           "\nfrac_I = " + format_number(e.initial.frac_I) + "\nfrac_R = " + format_number(e.initial.frac_R) + "\n";
    out += detail::density_to_ini(e.initial.density_S, "density_S");
    out += detail::density_to_ini(e.initial.density_I, "density_I");
    out += detail::density_to_ini(e.initial.density_R, "density_R") + "\n";
    out += "[run]\ngamma = " + format_number(e.gamma) + "\nhorizon = " + format_number(e.horizon) +
           "\npopulation_size = " + std::to_string(e.population_size) + "\nseed = " + std::to_string(e.master_seed) +
           "\nsnapshot_times = " + detail::join(e.snapshot_times) + "\nmode = " + to_string(e.truncation) + "\n";
    if (e.truncation_floor) {
        out += "truncation_floor = " + format_number(*e.truncation_floor) + "\n";
    }
    out += "grid = " + std::to_string(cfg.grid) + "\ndt = " + format_number(cfg.dt) + "\n";
    if (cfg.study) {
        const auto& s = *cfg.study;
        std::string ladder, comps, phis;
        for (auto n : s.n_ladder) {
            ladder += (ladder.empty() ? "" : ", ") + std::to_string(n);
        }
        for (auto m : s.components) {
            comps += std::string(comps.empty() ? "" : ", ") + to_string(m);
        }
        for (const auto& p : s.test_functions) {
            phis += (phis.empty() ? "" : ", ") + p;
        }
        out += "\n[study]\nn_ladder = " + ladder + "\nreplicates = " + std::to_string(s.replicates) +
               "\ntest_functions = " + phis + "\ncomponents = " + comps + "\n";
    }
    return out;
}

} // namespace vsir
