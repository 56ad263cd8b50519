// SPDX-License-Identifier: Apache-2.0
//
// mtdsic: multi-tap-delay analog self-interference cancellation toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mtdsic/scenario.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>

namespace mtdsic {

using nlohmann::json;

namespace {

constexpr double ns = 1e-9;

// Typed access to one JSON object with field paths in every error.
class Obj
{
public:
    Obj(const json &j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError(path_, "expected an object");
    }

    void allow(std::initializer_list<const char *> keys) const
    {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (const auto &[k, v] : j_.items())
            if (!ok.count(k))
                throw ConfigError(path_ + "/" + k, "unknown field");
    }

    bool has(const char *key) const { return j_.contains(key) && !j_.at(key).is_null(); }
    std::string at(const char *key) const { return path_ + "/" + key; }
    const json &raw(const char *key) const { return j_.at(key); }

    double num(const char *key, double def) const
    {
        if (!has(key))
            return def;
        const auto &v = j_.at(key);
        if (!v.is_number())
            throw ConfigError(at(key), "expected a number");
        return v.get<double>();
    }
    double num(const char *key) const
    {
        if (!has(key))
            throw ConfigError(at(key), "required field missing");
        return num(key, 0.0);
    }
    std::uint64_t count(const char *key, std::uint64_t def) const
    {
        if (!has(key))
            return def;
        const auto &v = j_.at(key);
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
            throw ConfigError(at(key), "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }
    bool flag(const char *key, bool def) const
    {
        if (!has(key))
            return def;
        if (!j_.at(key).is_boolean())
            throw ConfigError(at(key), "expected true or false");
        return j_.at(key).get<bool>();
    }
    std::string str(const char *key, const std::string &def) const
    {
        if (!has(key))
            return def;
        if (!j_.at(key).is_string())
            throw ConfigError(at(key), "expected a string");
        return j_.at(key).get<std::string>();
    }
    std::vector<double> nums(const char *key) const
    {
        const auto &v = j_.at(key);
        if (!v.is_array())
            throw ConfigError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i)
        {
            if (!v[i].is_number())
                throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

private:
    const json &j_;
    std::string path_;
};

std::vector<double> linspace_ns(double start, double stop, std::uint64_t steps, const std::string &where)
{
    if (steps < 1 || !(stop >= start) || !(start > 0.0))
        throw ConfigError(where, "need 0 < start <= stop and steps >= 1");
    std::vector<double> out;
    for (std::uint64_t k = 0; k < steps; ++k)
        out.push_back((steps == 1 ? start : start + (stop - start) * static_cast<double>(k) / (steps - 1)) * ns);
    return out;
}

template <typename F>
void guarded(const std::string &where, F &&f)
{
    try
    {
        f();
    }
    catch (const ConfigError &)
    {
        throw;
    }
    catch (const std::exception &e)
    {
        throw ConfigError(where, e.what());
    }
}

} // namespace

ScenarioConfig parse_scenario(const json &doc)
{
    ScenarioConfig cfg;
    const Obj top(doc, "");
    top.allow({"radio", "pdp", "impairments", "channels", "budget", "tap_plans", "run", "outputs", "w0", "$schema"});
    cfg.w0 = top.num("w0", 1.0);
    if (!(cfg.w0 > 0.0))
        throw ConfigError("/w0", "must be positive");

    if (top.has("radio"))
    {
        const Obj r(doc.at("radio"), "/radio");
        r.allow({"bandwidth_mhz", "carrier_ghz", "tx_power_dbm", "tx_snr_db", "tx_irr_db", "nonlinear_power_dbm",
                 "rx_noise_floor_dbm", "circulator_atten_db", "direct_leakage_delay_ns"});
        auto &x = cfg.radio;
        x.bandwidth_hz = r.num("bandwidth_mhz", x.bandwidth_hz / 1e6) * 1e6;
        x.carrier_hz = r.num("carrier_ghz", x.carrier_hz / 1e9) * 1e9;
        x.tx_power_dbm = r.num("tx_power_dbm", x.tx_power_dbm);
        x.tx_snr_db = r.num("tx_snr_db", x.tx_snr_db);
        x.tx_irr_db = r.num("tx_irr_db", x.tx_irr_db);
        x.nonlinear_power_dbm = r.num("nonlinear_power_dbm", x.nonlinear_power_dbm);
        x.rx_noise_floor_dbm = r.num("rx_noise_floor_dbm", x.rx_noise_floor_dbm);
        x.circulator_atten_db = r.num("circulator_atten_db", x.circulator_atten_db);
        x.direct_leakage_delay_s = r.num("direct_leakage_delay_ns", x.direct_leakage_delay_s / ns) * ns;
    }
    guarded("/radio", [&] { cfg.radio.validate(); });

    if (top.has("pdp"))
    {
        const Obj p(doc.at("pdp"), "/pdp");
        p.allow({"intercept_db", "slope_db_per_decade", "domain_min_ns"});
        cfg.pdp.intercept_db = p.num("intercept_db", cfg.pdp.intercept_db);
        cfg.pdp.slope_db_per_decade = p.num("slope_db_per_decade", cfg.pdp.slope_db_per_decade);
        cfg.pdp.domain_min_s = p.num("domain_min_ns", cfg.pdp.domain_min_s / ns) * ns;
    }
    guarded("/pdp", [&] { cfg.pdp.validate(); });

    if (top.has("impairments"))
    {
        const Obj i(doc.at("impairments"), "/impairments");
        i.allow({"model"});
        const auto m = i.str("model", "table1");
        if (m != "table1" && m != "ideal")
            throw ConfigError("/impairments/model", "expected \"table1\" or \"ideal\"");
        cfg.ideal_impairments = m == "ideal";
    }

    if (!top.has("channels") || !doc.at("channels").is_array() || doc.at("channels").empty())
        throw ConfigError("/channels", "need a non-empty array");
    for (std::size_t k = 0; k < doc.at("channels").size(); ++k)
    {
        const std::string where = "/channels/" + std::to_string(k);
        const Obj c(doc.at("channels")[k], where);
        c.allow({"tdl", "tau_ds_ns"});
        ChannelSweep sw;
        guarded(where + "/tdl", [&] { sw.model = parse_tdl(c.str("tdl", "")); });
        if (!c.has("tau_ds_ns"))
            throw ConfigError(where + "/tau_ds_ns", "required field missing");
        const auto &t = c.raw("tau_ds_ns");
        if (t.is_array())
        {
            for (double v : c.nums("tau_ds_ns"))
            {
                if (!(v > 0.0))
                    throw ConfigError(where + "/tau_ds_ns", "delay spreads must be positive");
                sw.tau_ds_s.push_back(v * ns);
            }
            if (sw.tau_ds_s.empty())
                throw ConfigError(where + "/tau_ds_ns", "empty list");
        }
        else
        {
            const Obj r(t, where + "/tau_ds_ns");
            r.allow({"start", "stop", "steps"});
            sw.tau_ds_s = linspace_ns(r.num("start"), r.num("stop"), r.count("steps", 10), where + "/tau_ds_ns");
        }
        cfg.channels.push_back(std::move(sw));
    }

    if (top.has("budget"))
    {
        const Obj b(doc.at("budget"), "/budget");
        b.allow({"eta_db", "target_error_dbm", "m_assumed", "tau_min_ns", "tau_max_ns", "d1_ns", "minimize_taps"});
        const int m = static_cast<int>(b.count("m_assumed", 20));
        DesignBudget bud;
        if (b.has("eta_db") == b.has("target_error_dbm"))
            throw ConfigError("/budget", "give exactly one of eta_db or target_error_dbm");
        guarded("/budget", [&] {
            if (b.has("eta_db"))
            {
                bud.eta = db_to_lin(b.num("eta_db"));
                bud.m_assumed = m;
            }
            else
            {
                bud = DesignBudget::from_target(dbm_to_mw(b.num("target_error_dbm")), cfg.radio, m);
            }
        });
        bud.w0 = cfg.w0;
        bud.tau_min_s = b.num("tau_min_ns", bud.tau_min_s / ns) * ns;
        if (b.has("tau_max_ns"))
            bud.tau_max_s = b.num("tau_max_ns") * ns;
        bud.d1_anchor_s = b.num("d1_ns", bud.d1_anchor_s / ns) * ns;
        cfg.minimize_taps = b.flag("minimize_taps", false);
        guarded("/budget", [&] { bud.validate(); });
        cfg.budget = bud;
    }

    if (!top.has("tap_plans") || !doc.at("tap_plans").is_array() || doc.at("tap_plans").empty())
        throw ConfigError("/tap_plans", "need a non-empty array");
    std::set<std::string> names;
    for (std::size_t k = 0; k < doc.at("tap_plans").size(); ++k)
    {
        const std::string where = "/tap_plans/" + std::to_string(k);
        const Obj p(doc.at("tap_plans")[k], where);
        p.allow({"name", "delays_ns", "uniform", "auto"});
        TapPlanSpec s;
        s.name = p.str("name", "");
        if (s.name.empty() || !names.insert(s.name).second)
            throw ConfigError(where + "/name", "plan names must be non-empty and unique");
        const int kinds = int(p.has("delays_ns")) + int(p.has("uniform")) + int(p.has("auto"));
        if (kinds != 1)
            throw ConfigError(where, "give exactly one of delays_ns, uniform, auto");
        if (p.has("delays_ns"))
        {
            s.kind = PlanKind::Explicit;
            for (double v : p.nums("delays_ns"))
                s.delays_s.push_back(v * ns);
            guarded(where + "/delays_ns", [&] {
                TapBank t;
                t.delays_s = s.delays_s;
                t.validate();
            });
        }
        else if (p.has("uniform"))
        {
            const Obj u(p.raw("uniform"), where + "/uniform");
            u.allow({"n", "spacing_ns", "d_min_ns"});
            s.kind = PlanKind::Uniform;
            s.n = u.count("n", 0);
            s.spacing_s = u.num("spacing_ns") * ns;
            s.d_min_s = u.num("d_min_ns", 0.0) * ns;
            guarded(where + "/uniform", [&] { TapBank::uniform(s.n, s.spacing_s, s.d_min_s, cfg.w0).validate(); });
        }
        else
        {
            const auto mode = p.str("auto", "");
            if (mode != "init" && mode != "minimize")
                throw ConfigError(where + "/auto", "expected \"init\" or \"minimize\"");
            if (!cfg.budget)
                throw ConfigError(where + "/auto", "automatic plans need a budget");
            s.kind = PlanKind::Auto;
            s.minimize = mode == "minimize";
        }
        cfg.tap_plans.push_back(std::move(s));
    }

    if (top.has("run"))
    {
        const Obj r(doc.at("run"), "/run");
        r.allow({"realizations", "theory_realizations", "seed", "oversample", "symbols", "simulate", "psd_nfft",
                 "per_path"});
        auto &x = cfg.run;
        x.realizations = r.count("realizations", x.realizations);
        x.theory_realizations = r.count("theory_realizations", x.theory_realizations);
        x.seed = r.count("seed", x.seed);
        x.oversample = static_cast<int>(r.count("oversample", static_cast<std::uint64_t>(x.oversample)));
        x.symbols = r.count("symbols", x.symbols);
        x.simulate = r.flag("simulate", x.simulate);
        x.psd_nfft = r.count("psd_nfft", x.psd_nfft);
        x.per_path = r.flag("per_path", x.per_path);
        if (x.realizations < 1 || x.theory_realizations < 1)
            throw ConfigError("/run", "realization counts must be >= 1");
        if (x.oversample < 4)
            throw ConfigError("/run/oversample", "must be >= 4");
        if (x.symbols < 64)
            throw ConfigError("/run/symbols", "must be >= 64");
    }
    if (top.has("outputs"))
    {
        const Obj o(doc.at("outputs"), "/outputs");
        o.allow({"directory"});
        cfg.output_dir = o.str("directory", "out");
    }
    cfg.source = doc;
    cfg.source.erase("$schema");
    return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot open " + path.string());
    json doc;
    try
    {
        doc = json::parse(in);
    }
    catch (const json::parse_error &e)
    {
        throw ConfigError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

void apply_sweep_override(ScenarioConfig &cfg, const std::string &spec)
{
    const std::string key = "tau_ds=";
    if (spec.rfind(key, 0) != 0)
        throw ConfigError("--sweep", "expected tau_ds=<start:stop:steps>");
    double start = 0, stop = 0;
    unsigned long long steps = 0;
    char tail = 0;
    if (std::sscanf(spec.c_str() + key.size(), "%lf:%lf:%llu%c", &start, &stop, &steps, &tail) != 3)
        throw ConfigError("--sweep", "expected tau_ds=<start:stop:steps>");
    const auto taus = linspace_ns(start, stop, steps, "--sweep");
    for (auto &c : cfg.channels)
        c.tau_ds_s = taus;
    json range = {{"start", start}, {"stop", stop}, {"steps", steps}};
    for (auto &c : cfg.source["channels"])
        c["tau_ds_ns"] = range;
}

std::string config_hash(const ScenarioConfig &cfg)
{
    json resolved = cfg.source;
    resolved["run"]["seed"] = cfg.run.seed; // command-line overrides are part of the identity
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : resolved.dump())
    {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TapBank resolve_plan(const TapPlanSpec &spec, const ScenarioConfig &cfg)
{
    switch (spec.kind)
    {
    case PlanKind::Explicit:
    {
        TapBank t;
        t.delays_s = spec.delays_s;
        t.weight_bound = cfg.w0;
        return t;
    }
    case PlanKind::Uniform:
        return TapBank::uniform(spec.n, spec.spacing_s, spec.d_min_s, cfg.w0);
    case PlanKind::Auto:
    {
        const auto plan = spec.minimize ? algorithm1_minimize_taps(*cfg.budget, cfg.pdp, cfg.radio)
                                        : algorithm2_init(*cfg.budget, cfg.pdp, cfg.radio);
        if (plan.delays_s.empty())
            throw std::runtime_error("plan '" + spec.name + "': the budget needs no taps");
        return plan.bank(cfg.w0);
    }
    }
    throw std::logic_error("unreachable");
}

json plan_to_json(const DelayPlan &plan, const DesignBudget &budget)
{
    json j;
    std::vector<double> d;
    for (double v : plan.delays_s)
        d.push_back(v / ns);
    j["n"] = plan.delays_s.size();
    j["delays_ns"] = d;
    j["worst_case_error_db"] = plan.worst_case_error > 0 ? json(lin_to_db(plan.worst_case_error)) : json(nullptr);
    j["eta_db"] = lin_to_db(budget.eta);
    j["feasible"] = plan.feasible;
    j["tau_eta_ns"] = plan.tau_eta_s / ns;
    j["m_assumed"] = budget.m_assumed;
    json trace = json::array();
    for (const auto &s : plan.trace)
        trace.push_back({{"n", s.n},
                         {"tau_d_ns", s.tau_d_s / ns},
                         {"eps_bar", s.eps_bar},
                         {"delta_d_ns", s.delta_d_s / ns},
                         {"clamped", s.clamped},
                         {"new_delay_ns", s.new_delay_s / ns}});
    j["trace"] = trace;
    return j;
}

json report_to_json(const ErrorReport &rep, double tx_power_mw)
{
    std::vector<double> d;
    for (double v : rep.delays_s)
        d.push_back(v / ns);
    return {{"clusters", rep.clusters},
            {"beta_m", rep.beta_m},
            {"rho_eps_mw", rep.rho_eps},
            {"bound_lo_mw", rep.bound_lo},
            {"bound_hi_mw", rep.bound_hi},
            {"scr_lo_db", rep.scr_lo_db(tx_power_mw)},
            {"scr_hi_db", rep.scr_hi_db(tx_power_mw)},
            {"sic_ceiling_db", rep.sic_ceiling_db},
            {"delays_ns", d},
            {"powers", rep.powers},
            {"error_lb", rep.per_path_lb},
            {"error_ub", rep.per_path_ub}};
}

std::vector<std::vector<std::string>> report_rows(const ErrorReport &rep)
{
    std::vector<std::vector<std::string>> rows;
    for (std::size_t k = 0; k < rep.delays_s.size(); ++k)
    {
        const double a = rep.powers[k], lb = rep.per_path_lb[k], ub = rep.per_path_ub[k];
        rows.push_back({std::to_string(k), fmt(rep.delays_s[k] / ns), fmt(lin_to_db(a)), fmt(lin_to_db(lb)),
                        fmt(lin_to_db(ub)), fmt(lin_to_db(a * lb)), fmt(lin_to_db(a * ub))});
    }
    return rows;
}

void CsvWriter::row(const std::vector<std::string> &fields)
{
    for (std::size_t i = 0; i < fields.size(); ++i)
    {
        if (i)
            os_ << ',';
        const auto &f = fields[i];
        if (f.find_first_of(",\"\r\n") == std::string::npos)
        {
            os_ << f;
            continue;
        }
        os_ << '"';
        for (char c : f)
        {
            if (c == '"')
                os_ << '"';
            os_ << c;
        }
        os_ << '"';
    }
    os_ << "\r\n";
}

std::string fmt(double v)
{
    if (std::isnan(v))
        return "";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

} // namespace mtdsic
