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

#include "mtdsic/tap_optimizer.hpp"

#include <algorithm>
#include <random>

namespace mtdsic {

void DesignBudget::validate() const
{
    if (!(eta > 0.0))
        throw std::invalid_argument("budget.eta must be positive");
    if (m_assumed < 1)
        throw std::invalid_argument("budget.m_assumed must be >= 1");
    if (!(w0 > 0.0))
        throw std::invalid_argument("budget.w0 must be positive");
    if (!(tau_min_s > 0.0) || !(tau_max_s > tau_min_s))
        throw std::invalid_argument("budget: need 0 < tau_min_s < tau_max_s");
    if (!(d1_anchor_s >= 0.0))
        throw std::invalid_argument("budget.d1_anchor_s must be non-negative");
}

DesignBudget DesignBudget::from_target(double target_error_power_mw, const RadioConfig &cfg, int m_assumed)
{
    DesignBudget b;
    b.target_error_power = target_error_power_mw;
    b.m_assumed = m_assumed;
    b.eta = beta_m(m_assumed) * target_error_power_mw / ((m_assumed + 1.0) * cfg.tx_power_mw());
    return b;
}

TapBank DelayPlan::bank(double w0) const
{
    TapBank t;
    t.delays_s = delays_s;
    t.weight_bound = w0;
    return t;
}

double two_tap_max_error(double bandwidth_hz, double delta_d_s)
{
    const double x = bandwidth_hz * delta_d_s;
    if (!(x > 0.0) || x > 2.0 * (1.0 + 1e-12))
        throw std::domain_error("two-tap closed form needs 0 < B * delta_d <= 2");
    const double h = nsinc(0.5 * x);
    return 1.0 - 2.0 * h * h / (1.0 + nsinc(x));
}

double delta_for_error(double bandwidth_hz, double target)
{
    if (!(target > 0.0) || !(target < two_tap_max_error(bandwidth_hz, 2.0 / bandwidth_hz)))
        throw std::domain_error("target error outside the two-tap range");
    double lo = 0.0, hi = 2.0; // in units of 1/B; f(lo) <= target < f(hi)
    while (hi - lo > 1e-12)
    {
        const double mid = 0.5 * (lo + hi);
        (two_tap_max_error(bandwidth_hz, mid / bandwidth_hz) <= target ? lo : hi) = mid;
    }
    return lo / bandwidth_hz;
}

std::optional<double> tau_eta(const PdpModel &pdp, double eta, const DesignBudget &budget)
{
    if (!(eta > 0.0))
        throw std::invalid_argument("eta must be positive");
    if (pdp_attenuation(pdp, budget.tau_min_s) <= eta)
        return std::nullopt;
    return std::clamp(pdp_delay_for_attenuation(pdp, eta), budget.tau_min_s, budget.tau_max_s);
}

std::vector<double> delay_grid(double lo_s, double hi_s, const RadioConfig &cfg)
{
    if (!(hi_s >= lo_s))
        throw std::invalid_argument("delay_grid: empty interval");
    const double h = 0.02 / cfg.bandwidth_hz;
    const auto n = static_cast<std::size_t>(std::ceil((hi_s - lo_s) / h - 1e-9));
    std::vector<double> g(n + 1);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = lo_s + h * static_cast<double>(i);
    g[n] = hi_s;
    return g;
}

namespace {

TapBank bank_of(std::span<const double> d, double w0)
{
    TapBank t;
    t.delays_s.assign(d.begin(), d.end());
    t.weight_bound = w0;
    return t;
}

double weighted_error(double tau, const TapBank &taps, const PdpModel &pdp, int m, const RadioConfig &cfg)
{
    const double a2 = pdp_attenuation(pdp, tau);
    return a2 * per_path_error_ub(tau, taps, per_path_bound(taps.weight_bound, m, a2), cfg);
}

// Golden-section search for a maximum of f on [a, b].
template <typename F>
double golden_max(F &&f, double a, double b, double tol)
{
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - r * (b - a), x2 = a + r * (b - a);
    double f1 = f(x1), f2 = f(x2);
    double best = std::max(f1, f2);
    while (b - a > tol)
    {
        if (f1 < f2)
        {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
        else
        {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
        best = std::max({best, f1, f2});
    }
    return best;
}

double domain_end(const PdpModel &pdp, const DesignBudget &budget)
{
    const auto te = tau_eta(pdp, budget.eta, budget);
    return te ? *te : budget.tau_min_s;
}

} // namespace

std::optional<double> tau_d(std::span<const double> delays_s, const PdpModel &pdp, double eta,
                            const DesignBudget &budget, const RadioConfig &cfg)
{
    if (delays_s.empty())
        throw std::invalid_argument("tau_d needs at least one tap");
    const auto te = tau_eta(pdp, eta, budget);
    if (!te)
        return std::nullopt;
    const auto taps = bank_of(delays_s, budget.w0);
    const auto grid = delay_grid(budget.tau_min_s, *te, cfg);
    const auto vals = weighted_error_grid(grid, taps, pdp, budget.m_assumed, cfg);

    const auto it = std::find_if(vals.begin(), vals.end(), [&](double v) { return v >= eta; });
    if (it == vals.end())
        return std::nullopt;
    const auto i = static_cast<std::size_t>(it - vals.begin());
    if (i == 0)
        return grid[0];
    double lo = grid[i - 1], hi = grid[i]; // error below eta at lo, at or above at hi
    for (int k = 0; k < 40; ++k)
    {
        const double mid = 0.5 * (lo + hi);
        (weighted_error(mid, taps, pdp, budget.m_assumed, cfg) >= eta ? hi : lo) = mid;
    }
    return hi;
}

double worst_case_error(std::span<const double> delays_s, const PdpModel &pdp, const DesignBudget &budget,
                        const RadioConfig &cfg, Execution ex)
{
    if (delays_s.empty())
        return pdp_attenuation(pdp, budget.tau_min_s); // nothing is cancelled; a^2 peaks at tau_min
    const auto taps = bank_of(delays_s, budget.w0);
    const auto grid = delay_grid(budget.tau_min_s, domain_end(pdp, budget), cfg);
    const auto vals = weighted_error_grid(grid, taps, pdp, budget.m_assumed, cfg, ex);

    // Three largest local maxima of the grid, each polished by golden section inside its cell pair.
    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < vals.size(); ++i)
    {
        const bool left = i == 0 || vals[i] >= vals[i - 1];
        const bool right = i + 1 == vals.size() || vals[i] >= vals[i + 1];
        if (left && right)
            peaks.push_back(i);
    }
    std::sort(peaks.begin(), peaks.end(), [&](auto a, auto b) { return vals[a] > vals[b]; });
    if (peaks.size() > 3)
        peaks.resize(3);

    double worst = *std::max_element(vals.begin(), vals.end());
    const double tol = 1e-6 / cfg.bandwidth_hz;
    for (auto i : peaks)
    {
        const double a = grid[i == 0 ? 0 : i - 1];
        const double b = grid[std::min(i + 1, grid.size() - 1)];
        if (b - a <= tol)
            continue;
        worst = std::max(worst, golden_max(
                                    [&](double t) { return weighted_error(t, taps, pdp, budget.m_assumed, cfg); },
                                    a, b, tol));
    }
    return worst;
}

DelayPlan algorithm2_init(const DesignBudget &budget, const PdpModel &pdp, const RadioConfig &cfg)
{
    budget.validate();
    pdp.validate();
    DelayPlan plan;
    const auto te = tau_eta(pdp, budget.eta, budget);
    if (!te)
    {
        plan.worst_case_error = worst_case_error({}, pdp, budget, cfg);
        plan.feasible = true;
        return plan;
    }
    plan.tau_eta_s = *te;

    const double bw = cfg.bandwidth_hz;
    const double f_max = two_tap_max_error(bw, 2.0 / bw);
    std::vector<double> d{budget.d1_anchor_s};
    while (const auto td = tau_d(d, pdp, budget.eta, budget, cfg))
    {
        if (d.size() >= 1000)
            throw std::runtime_error("initial-delay construction exceeded 1000 taps");
        PlanStep step;
        step.tau_d_s = *td;
        // PDP is monotone, so the smallest allowance over [tau_d, tau_eta] sits at tau_d.
        step.eps_bar = budget.eta / pdp_attenuation(pdp, *td);
        if (step.eps_bar >= f_max)
        {
            step.delta_d_s = 2.0 / bw;
            step.clamped = true;
        }
        else
        {
            step.delta_d_s = delta_for_error(bw, step.eps_bar);
        }
        step.new_delay_s = d.back() + step.delta_d_s;
        d.push_back(step.new_delay_s);
        step.n = static_cast<int>(d.size());
        plan.trace.push_back(step);
    }
    plan.delays_s = std::move(d);
    plan.worst_case_error = worst_case_error(plan.delays_s, pdp, budget, cfg);
    plan.feasible = plan.worst_case_error <= budget.eta;
    return plan;
}

namespace {

struct Candidate
{
    std::vector<double> d;
    double f = std::numeric_limits<double>::infinity();

    bool better_than(const Candidate &o) const { return f < o.f || (f == o.f && d < o.d); }
};

// Coordinate descent on d_2..d_N: each coordinate is scanned on a coarse grid between its neighbours
// and the best cell is refined by golden section. Evaluations are serial; starts run in parallel.
Candidate descend(std::vector<double> d, const DesignBudget &budget, const PdpModel &pdp, const RadioConfig &cfg,
                  int sweeps)
{
    const double bw = cfg.bandwidth_hz;
    const double min_gap = 1e-3 / bw;
    const double far = domain_end(pdp, budget) + 2.0 / bw;
    auto eval = [&](const std::vector<double> &x) { return worst_case_error(x, pdp, budget, cfg, Execution::Serial); };

    Candidate cur{d, eval(d)};
    for (int s = 0; s < sweeps; ++s)
    {
        const double before = cur.f;
        for (std::size_t n = 1; n < cur.d.size(); ++n)
        {
            const double lo = cur.d[n - 1] + min_gap;
            const double hi = (n + 1 < cur.d.size() ? cur.d[n + 1] : std::max(far, cur.d[n] + min_gap)) - min_gap;
            if (!(hi > lo))
                continue;
            auto at = [&](double x) {
                auto trial = cur.d;
                trial[n] = x;
                return eval(trial);
            };
            constexpr int cells = 8;
            std::vector<double> xs(cells + 1), fs(cells + 1);
            std::size_t arg = 0;
            for (int k = 0; k <= cells; ++k)
            {
                xs[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / cells;
                fs[static_cast<std::size_t>(k)] = at(xs[static_cast<std::size_t>(k)]);
                if (fs[static_cast<std::size_t>(k)] < fs[arg])
                    arg = static_cast<std::size_t>(k);
            }
            double bx = xs[arg], bf = fs[arg];
            double a = xs[arg == 0 ? 0 : arg - 1], b = xs[std::min<std::size_t>(arg + 1, cells)];
            // Golden section for the minimum, i.e. the maximum of -f.
            const double r = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = b - r * (b - a), x2 = a + r * (b - a);
            double f1 = at(x1), f2 = at(x2);
            for (int it = 0; it < 14; ++it)
            {
                if (f1 < bf)
                    bx = x1, bf = f1;
                if (f2 < bf)
                    bx = x2, bf = f2;
                if (f1 > f2)
                {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + r * (b - a);
                    f2 = at(x2);
                }
                else
                {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - r * (b - a);
                    f1 = at(x1);
                }
            }
            if (bf < cur.f)
            {
                cur.d[n] = bx;
                cur.f = bf;
            }
        }
        if (!(cur.f < before * (1.0 - 1e-6)))
            break;
    }
    return cur;
}

} // namespace

RefineResult minimax_refine(std::span<const double> init_s, const DesignBudget &budget, const PdpModel &pdp,
                            const RadioConfig &cfg, const RefineOptions &opt)
{
    budget.validate();
    if (init_s.empty())
        throw std::invalid_argument("minimax_refine needs N >= 1");
    std::vector<double> init(init_s.begin(), init_s.end());
    bank_of(init, budget.w0).validate();
    init[0] = budget.d1_anchor_s;

    const Candidate base{init, worst_case_error(init, pdp, budget, cfg)};
    if (init.size() == 1 || opt.starts < 1)
        return {base.d, base.f};

    std::vector<Candidate> results(static_cast<std::size_t>(opt.starts));
    std::vector<std::vector<double>> starts(results.size(), init);
    for (std::size_t k = 1; k < starts.size(); ++k)
    {
        std::mt19937_64 gen(derive_seed(opt.seed, k));
        std::uniform_real_distribution<double> u(-opt.jitter, opt.jitter);
        auto &s = starts[k];
        for (std::size_t n = 1; n < s.size(); ++n)
            s[n] = s[n - 1] + (init[n] - init[n - 1]) * (1.0 + u(gen));
    }
    const auto ns = static_cast<long long>(starts.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long long k = 0; k < ns; ++k)
        results[static_cast<std::size_t>(k)] =
            descend(starts[static_cast<std::size_t>(k)], budget, pdp, cfg, opt.sweeps);

    Candidate best = base;
    for (const auto &c : results)
        if (c.better_than(best))
            best = c;
    return {best.d, best.f};
}

DelayPlan algorithm1_minimize_taps(const DesignBudget &budget, const PdpModel &pdp, const RadioConfig &cfg,
                                   const RefineOptions &opt)
{
    DelayPlan seed = algorithm2_init(budget, pdp, cfg);
    if (seed.delays_s.empty())
        return seed;

    auto refined = minimax_refine(seed.delays_s, budget, pdp, cfg, opt);
    DelayPlan best = seed;
    best.delays_s = refined.delays_s;
    best.worst_case_error = refined.worst_case_error;
    best.feasible = refined.worst_case_error <= budget.eta;
    if (!best.feasible)
        return best; // refinement never worsens, so the seed itself missed eta

    // Drop one tap at a time: start from the cheapest single removal and refine until infeasible.
    while (best.delays_s.size() > 1)
    {
        std::vector<double> start;
        double start_f = std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k < best.delays_s.size(); ++k)
        {
            auto trial = best.delays_s;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(k));
            const double f = worst_case_error(trial, pdp, budget, cfg);
            if (f < start_f)
                start_f = f, start = std::move(trial);
        }
        const auto r = minimax_refine(start, budget, pdp, cfg, opt);
        if (r.worst_case_error > budget.eta)
            break;
        best.delays_s = r.delays_s;
        best.worst_case_error = r.worst_case_error;
    }
    return best;
}

} // namespace mtdsic
