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

// Batch front end: design, eval, validate, report.

#include "mtdsic/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

using namespace mtdsic;
using nlohmann::json;

namespace {

struct Common
{
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    std::string sweep;
};

void add_common(CLI::App *sub, Common &c, bool needs_config = true)
{
    auto *opt = sub->add_option("--config", c.config, "Scenario JSON file");
    if (needs_config)
        opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "Output directory (overrides outputs.directory)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&c](const std::uint64_t &s) { c.seed = s, c.seed_set = true; }, "Base seed (overrides run.seed)");
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--sweep", c.sweep, "Delay-spread override, tau_ds=<start:stop:steps> in ns");
}

ScenarioConfig load(const Common &c)
{
    auto cfg = load_scenario(c.config);
    if (!c.out.empty())
        cfg.output_dir = c.out;
    if (c.seed_set)
        cfg.run.seed = c.seed;
    if (!c.sweep.empty())
        apply_sweep_override(cfg, c.sweep);
    if (c.threads > 0)
        set_parallel_threads(c.threads);
    std::filesystem::create_directories(cfg.output_dir);
    return cfg;
}

void write_json(const std::filesystem::path &p, const json &j)
{
    std::ofstream os(p);
    if (!os)
        throw std::runtime_error("cannot write " + p.string());
    os << j.dump(2) << '\n';
}

std::string ns_str(double s) { return fmt(s * 1e9); }

int run_design(const Common &c)
{
    const auto cfg = load(c);
    if (!cfg.budget)
        throw ConfigError("/budget", "design needs a budget");
    const auto &b = *cfg.budget;
    const std::string hash = config_hash(cfg);

    const auto init = algorithm2_init(b, cfg.pdp, cfg.radio);
    json doc = {{"config_hash", hash}, {"initial", plan_to_json(init, b)}};
    const DelayPlan *final_plan = &init;
    DelayPlan minimized;
    if (cfg.minimize_taps && !init.delays_s.empty())
    {
        minimized = algorithm1_minimize_taps(b, cfg.pdp, cfg.radio);
        doc["minimized"] = plan_to_json(minimized, b);
        final_plan = &minimized;
    }
    write_json(cfg.output_dir / "plan.json", doc);

    std::printf("eta = %.2f dB, tau_eta = %s ns\n", lin_to_db(b.eta), ns_str(init.tau_eta_s).c_str());
    if (init.delays_s.empty())
    {
        std::printf("N = 0: no taps needed, every in-domain path is already below eta\n");
        return 0;
    }
    auto show = [&](const char *label, const DelayPlan &p) {
        std::printf("%s: N = %zu, delays [ns] =", label, p.delays_s.size());
        for (double d : p.delays_s)
            std::printf(" %.4f", d * 1e9);
        std::printf("\n  worst-case error %.2f dB vs eta %.2f dB (%s)\n", lin_to_db(p.worst_case_error),
                    lin_to_db(b.eta), p.feasible ? "feasible" : "INFEASIBLE");
    };
    show("initial", init);
    if (final_plan != &init)
        show("minimized", minimized);
    std::printf("plan written to %s\n", (cfg.output_dir / "plan.json").string().c_str());
    if (!final_plan->feasible)
    {
        std::fprintf(stderr, "error: the budget cannot be met by the constructed plan\n");
        return 2;
    }
    return 0;
}

struct NamedBank
{
    std::string name;
    TapBank bank;
};

int run_eval(const Common &c)
{
    const auto cfg = load(c);
    const std::string hash = config_hash(cfg);
    const TxImpairments imp =
        cfg.ideal_impairments ? ideal_impairments() : calibrated_impairments(cfg.radio, cfg.run.seed);

    std::vector<NamedBank> banks;
    json plans = json::object();
    for (const auto &spec : cfg.tap_plans)
    {
        banks.push_back({spec.name, resolve_plan(spec, cfg)});
        std::vector<double> d;
        for (double v : banks.back().bank.delays_s)
            d.push_back(v * 1e9);
        plans[spec.name] = d;
    }
    write_json(cfg.output_dir / "plans.json", {{"config_hash", hash}, {"plans_delays_ns", plans}});

    std::ofstream csv_file(cfg.output_dir / "eval.csv", std::ios::binary);
    CsvWriter csv(csv_file);
    csv.row({"channel", "tau_ds_ns", "B_MHz", "tap_plan_id", "scr_sim_db", "scr_theory_db", "bound_lo_db",
             "bound_hi_db", "realizations", "seed", "config_hash"});

    std::ofstream pp_file, psd_file;
    std::optional<CsvWriter> pp, psd;
    if (cfg.run.per_path)
    {
        pp_file.open(cfg.output_dir / "per_path.csv", std::ios::binary);
        pp.emplace(pp_file);
        pp->row({"channel", "tau_ds_ns", "tap_plan_id", "path", "delay_ns", "attenuation_db", "error_lb_db",
                 "error_ub_db", "product_lb_db", "product_ub_db", "config_hash"});
    }
    if (cfg.run.simulate && cfg.run.psd_nfft > 0)
    {
        psd_file.open(cfg.output_dir / "psd.csv", std::ios::binary);
        psd.emplace(psd_file);
        psd->row({"channel", "tau_ds_ns", "tap_plan_id", "stage", "freq_mhz", "psd_dbm_per_mhz", "config_hash"});
    }

    std::map<std::string, double> min_theory;
    auto bounds_json = nlohmann::json::array();
    const std::string bw = fmt(cfg.radio.bandwidth_hz / 1e6);
    for (std::size_t ci = 0; ci < cfg.channels.size(); ++ci)
    {
        const auto &ch = cfg.channels[ci];
        const std::string cname(to_string(ch.model));
        for (std::size_t ti = 0; ti < ch.tau_ds_s.size(); ++ti)
        {
            const double tds = ch.tau_ds_s[ti];
            // Common random numbers: every plan sees the same channels at a sweep point.
            const std::uint64_t point_seed = derive_seed(cfg.run.seed, (ci << 32) | ti);
            const auto profile = profile_from_tdl(ch.model, tds, cfg.pdp, cfg.radio);
            for (const auto &nb : banks)
            {
                try
                {
                    const double theory =
                        theory_scr_db(profile, nb.bank, cfg.radio, cfg.run.theory_realizations, point_seed);
                    const auto rep = stochastic_bounds(profile, nb.bank, cfg.radio);
                    const double rho_t = cfg.radio.tx_power_mw();
                    double sim = std::numeric_limits<double>::quiet_NaN();
                    if (cfg.run.simulate)
                    {
                        SimOptions so;
                        so.symbols = cfg.run.symbols;
                        so.oversample = cfg.run.oversample;
                        so.psd_nfft = cfg.run.psd_nfft;
                        const auto r = simulate_scr(profile, nb.bank, cfg.radio, imp, cfg.run.realizations,
                                                    point_seed, so);
                        sim = r.scr_db;
                        if (psd)
                            for (const auto &[stage, est] : r.psd_stages)
                                for (std::size_t k = 0; k < est.psd.size(); ++k)
                                    psd->row({cname, ns_str(tds), nb.name, stage, fmt(est.freq_hz[k] / 1e6),
                                              fmt(lin_to_db(est.psd[k] * 1e6)), hash});
                    }
                    csv.row({cname, ns_str(tds), bw, nb.name, fmt(sim), fmt(theory), fmt(rep.scr_lo_db(rho_t)),
                             fmt(rep.scr_hi_db(rho_t)), cfg.run.simulate ? std::to_string(cfg.run.realizations) : "0",
                             std::to_string(point_seed), hash});
                    csv_file.flush();
                    auto [it, fresh] = min_theory.try_emplace(nb.name, theory);
                    if (!fresh)
                        it->second = std::min(it->second, theory);

                    if (pp)
                    {
                        for (auto row : report_rows(rep))
                        {
                            row.insert(row.begin(), {cname, ns_str(tds), nb.name});
                            row.push_back(hash);
                            pp->row(row);
                        }
                        auto j = report_to_json(rep, rho_t);
                        j["channel"] = cname;
                        j["tau_ds_ns"] = tds * 1e9;
                        j["tap_plan_id"] = nb.name;
                        bounds_json.push_back(std::move(j));
                    }
                    std::printf("%s tau_ds=%6.2f ns  %-12s theory %.2f dB  sim %s dB  bounds [%.2f, %.2f] dB\n",
                                cname.c_str(), tds * 1e9, nb.name.c_str(), theory,
                                cfg.run.simulate ? fmt(std::round(sim * 100) / 100).c_str() : "-",
                                rep.scr_lo_db(rho_t), rep.scr_hi_db(rho_t));
                }
                catch (const std::exception &e)
                {
                    std::ostringstream msg;
                    msg << e.what() << " [channel " << cname << ", tau_ds " << tds * 1e9 << " ns, plan " << nb.name
                        << "]";
                    throw std::runtime_error(msg.str());
                }
            }
        }
    }

    json summary = {{"config_hash", hash}, {"min_theory_scr_db", min_theory}};
    if (pp)
        write_json(cfg.output_dir / "bounds.json", {{"config_hash", hash}, {"points", bounds_json}});
    write_json(cfg.output_dir / "eval_summary.json", summary);
    for (const auto &[name, v] : min_theory)
        std::printf("min theory SCR %-12s %.2f dB\n", name.c_str(), v);
    return 0;
}

// Small invariant suite on the scenario's radio: one line per check, nonzero exit on any failure.
int run_validate(const Common &c)
{
    const auto cfg = load(c);
    const std::string hash = config_hash(cfg);
    std::ofstream file(cfg.output_dir / "validate.csv", std::ios::binary);
    CsvWriter csv(file);
    csv.row({"check", "value", "limit", "status", "config_hash"});
    int failures = 0;
    auto report = [&](const std::string &name, double value, double limit, bool ok) {
        std::printf("%s %-40s value %.3e limit %.3e\n", ok ? "PASS" : "FAIL", name.c_str(), value, limit);
        csv.row({name, fmt(value), fmt(limit), ok ? "pass" : "fail", hash});
        failures += ok ? 0 : 1;
    };

    const auto &radio = cfg.radio;
    const double bw = radio.bandwidth_hz;

    double worst = 0.0;
    for (int k = 1; k <= 20; ++k)
    {
        const double dd = 0.1 * k / bw;
        TapBank t;
        t.delays_s = {1e-9, 1e-9 + dd};
        worst = std::max(worst, std::abs(two_tap_max_error(bw, dd) - per_path_error_lb(1e-9 + dd / 2, t, radio)));
    }
    report("two-tap closed form vs projection", worst, 1e-10, worst <= 1e-10);

    const TxImpairments imp = cfg.ideal_impairments ? ideal_impairments() : calibrated_impairments(radio, cfg.run.seed);
    const TapBank bank = resolve_plan(cfg.tap_plans.front(), cfg);
    const auto &chs = cfg.channels.front();
    const auto profile = profile_from_tdl(chs.model, chs.tau_ds_s.front(), cfg.pdp, radio);
    for (std::uint64_t k = 0; k < 2; ++k)
    {
        const auto ch = realize_channel(profile, derive_seed(cfg.run.seed, 100 + k));
        const auto t1 = validate_theorem1(radio, imp, bank, ch, derive_seed(cfg.run.seed, 200 + k), 16384);
        report("time-averaged MSE vs analytic (dB), instance " + std::to_string(k), t1.ratio_db(), 0.5,
               std::abs(t1.ratio_db()) <= 0.5);
    }

    double kkt = 0.0;
    for (std::uint64_t k = 0; k < 20; ++k)
    {
        const auto ch = realize_channel(profile, derive_seed(cfg.run.seed, 300 + k));
        const auto sol = solve_constrained(build_correlations(ch, bank, radio), bank.weight_bound);
        kkt = std::max(kkt, sol.kkt.worst());
    }
    report("KKT residual, 20 constrained solves", kkt, 1e-8, kkt <= 1e-8);

    const auto rep = stochastic_bounds(profile, bank, radio);
    const auto j = constrained_objectives(profile, bank, radio, 200, derive_seed(cfg.run.seed, 400));
    const double mean_rho = radio.tx_power_mw() * pairwise_sum<double>(j) / static_cast<double>(j.size());
    const bool in = mean_rho >= rep.bound_lo * (1 - 1e-9) && mean_rho <= rep.bound_hi * (1 + 1e-9);
    report("mean rho_eps inside [bound_lo, bound_hi] (dB over lo)", lin_to_db(mean_rho / rep.bound_lo),
           lin_to_db(rep.bound_hi / rep.bound_lo), in);

    std::printf("%s\n", failures ? "validation FAILED" : "validation passed");
    return failures ? 1 : 0;
}

std::vector<std::string> split_csv_line(const std::string &line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i)
    {
        const char ch = line[i];
        if (quoted)
        {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"')
                cur += '"', ++i;
            else if (ch == '"')
                quoted = false;
            else
                cur += ch;
        }
        else if (ch == '"')
            quoted = true;
        else if (ch == ',')
            out.push_back(std::move(cur)), cur.clear();
        else if (ch != '\r')
            cur += ch;
    }
    out.push_back(cur);
    return out;
}

// Long format for plotting: one row per (sweep point, metric).
int run_report(const std::vector<std::string> &inputs, const std::string &out_path)
{
    const std::vector<std::string> id_cols = {"config_hash", "channel", "tau_ds_ns", "B_MHz", "tap_plan_id"};
    const std::vector<std::string> metrics = {"scr_sim_db", "scr_theory_db", "bound_lo_db", "bound_hi_db"};
    std::ofstream os(out_path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot write " + out_path);
    CsvWriter csv(os);
    auto header = id_cols;
    header.insert(header.end(), {"metric", "value"});
    csv.row(header);

    std::size_t rows = 0;
    for (const auto &path : inputs)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot read " + path);
        std::string line;
        std::getline(in, line);
        const auto head = split_csv_line(line);
        auto col = [&](const std::string &name) {
            const auto it = std::find(head.begin(), head.end(), name);
            if (it == head.end())
                throw std::runtime_error(path + ": missing column " + name);
            return static_cast<std::size_t>(it - head.begin());
        };
        std::vector<std::size_t> ids, ms;
        for (const auto &n : id_cols)
            ids.push_back(col(n));
        for (const auto &n : metrics)
            ms.push_back(col(n));
        while (std::getline(in, line))
        {
            if (line.empty() || line == "\r")
                continue;
            const auto f = split_csv_line(line);
            for (std::size_t m = 0; m < ms.size(); ++m)
            {
                if (f.at(ms[m]).empty())
                    continue;
                std::vector<std::string> r;
                for (auto i : ids)
                    r.push_back(f.at(i));
                r.push_back(metrics[m]);
                r.push_back(f.at(ms[m]));
                csv.row(r);
                ++rows;
            }
        }
    }
    std::printf("%zu rows written to %s\n", rows, out_path.c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"mtdsic: multi-tap-delay analog SI cancellation design and evaluation"};
    app.require_subcommand(1);

    Common design_opts, eval_opts, validate_opts;
    auto *design = app.add_subcommand("design", "Construct tap delays for the scenario's error budget");
    add_common(design, design_opts);
    auto *eval = app.add_subcommand("eval", "Theory bounds, theory SCR and simulated SCR over the sweep");
    add_common(eval, eval_opts);
    auto *validate = app.add_subcommand("validate", "Invariant and time-average checks on the scenario");
    add_common(validate, validate_opts);

    std::vector<std::string> report_inputs;
    std::string report_out = "report.csv";
    auto *report = app.add_subcommand("report", "Merge eval CSVs into a long-format table");
    report->add_option("inputs", report_inputs, "eval.csv files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Output CSV path");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*design)
            return run_design(design_opts);
        if (*eval)
            return run_eval(eval_opts);
        if (*validate)
            return run_validate(validate_opts);
        if (*report)
            return run_report(report_inputs, report_out);
    }
    catch (const ConfigError &e)
    {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    }
    catch (const std::exception &e)
    {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
