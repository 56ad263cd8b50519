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

#include "mtdsic/monte_carlo.hpp"

#include "fft.hpp"

#include <algorithm>

namespace mtdsic {

namespace {

cplx carrier_phase(double carrier_hz, double delay_s)
{
    const double cycles = carrier_hz * delay_s;
    return std::polar(1.0, -2.0 * pi * (cycles - std::floor(cycles)));
}

// exp(-j 2 pi f delay) on the FFT bins of a length-l block at rate fs.
void delay_spectrum(std::vector<cplx> &spec, const std::vector<cplx> &src, double delay_s, cplx gain, double fs)
{
    const std::size_t l = src.size();
    for (std::size_t k = 0; k < l; ++k)
    {
        const double f = static_cast<double>(detail::bin_index(k, l)) * fs / static_cast<double>(l);
        spec[k] += gain * src[k] * std::polar(1.0, -2.0 * pi * f * delay_s);
    }
}

std::vector<cplx> inverse(std::vector<cplx> spec)
{
    detail::fft_inplace(spec, true);
    const double inv = 1.0 / static_cast<double>(spec.size());
    for (auto &v : spec)
        v *= inv;
    return spec;
}

void check_guard(double delay_s, double duration_s, double guard_fraction)
{
    if (std::abs(delay_s) > guard_fraction * duration_s)
        throw std::invalid_argument("delay exceeds the guard region of the block");
}

double symbol_power_for(const RadioConfig &cfg, const TxImpairments &imp)
{
    double p = cfg.tx_power_mw() - imp.tx_noise_power;
    if (!imp.nl_coeffs.empty())
        p -= cfg.nonlinear_power_mw();
    if (!(p > 0.0))
        throw std::invalid_argument("impairments leave no power for the linear signal");
    return p;
}

// Propagated SI and tap signals for one transmitted block, all from a single forward FFT.
struct Propagated
{
    std::vector<cplx> si;
    std::vector<std::vector<cplx>> taps;
};

Propagated propagate(const BasebandWaveform &tx, const ChannelRealization &channel, const TapBank &taps,
                     const RadioConfig &cfg, double guard_fraction)
{
    const std::size_t l = tx.size();
    const double duration = static_cast<double>(l) / tx.sample_rate_hz;
    std::vector<cplx> s = tx.samples;
    detail::fft_inplace(s, false);

    Propagated out;
    std::vector<cplx> acc(l, cplx{});
    for (const auto &p : channel.paths)
    {
        check_guard(p.delay_s, duration, guard_fraction);
        delay_spectrum(acc, s, p.delay_s, p.gain, tx.sample_rate_hz);
    }
    out.si = inverse(std::move(acc));
    for (double d : taps.delays_s)
    {
        check_guard(d, duration, guard_fraction);
        std::vector<cplx> spec(l, cplx{});
        delay_spectrum(spec, s, d, carrier_phase(cfg.carrier_hz, d), tx.sample_rate_hz);
        out.taps.push_back(inverse(std::move(spec)));
    }
    return out;
}

struct Window
{
    std::size_t begin, end;
};

Window kept(std::size_t l, double guard_fraction)
{
    const auto g = static_cast<std::size_t>(std::floor(guard_fraction * static_cast<double>(l)));
    if (2 * g >= l)
        throw std::invalid_argument("guard fraction leaves no samples");
    return {g, l - g};
}

std::vector<cplx> residual(const Propagated &p, const CVec &w, Window win)
{
    std::vector<cplx> e(p.si.begin() + static_cast<std::ptrdiff_t>(win.begin),
                        p.si.begin() + static_cast<std::ptrdiff_t>(win.end));
    for (std::size_t n = 0; n < p.taps.size(); ++n)
    {
        const cplx wn = w(static_cast<Eigen::Index>(n));
        for (std::size_t t = 0; t < e.size(); ++t)
            e[t] -= wn * p.taps[n][win.begin + t];
    }
    return e;
}

double mean_power(std::span<const cplx> x)
{
    std::vector<double> p(x.size());
    std::transform(x.begin(), x.end(), p.begin(), [](cplx v) { return std::norm(v); });
    return pairwise_sum<double>(p) / static_cast<double>(x.size());
}

// Sample correlations over the kept window; same quadratic form as the white-process model.
CorrelationSet empirical_correlations(const Propagated &p, Window win)
{
    const auto n = static_cast<Eigen::Index>(p.taps.size());
    const auto len = static_cast<Eigen::Index>(win.end - win.begin);
    CMat x(len, n);
    for (Eigen::Index j = 0; j < n; ++j)
        x.col(j) = Eigen::Map<const CVec>(p.taps[static_cast<std::size_t>(j)].data() + win.begin, len);
    const Eigen::Map<const CVec> y(p.si.data() + win.begin, len);
    const double inv = 1.0 / static_cast<double>(len);

    CorrelationSet cs;
    cs.autocorr = (x.adjoint() * x) * inv;
    cs.autocorr = 0.5 * (cs.autocorr + cs.autocorr.adjoint().eval());
    cs.crosscorr = (x.adjoint() * y) * inv;
    cs.si_self_power = y.squaredNorm() * inv;
    return cs;
}

void accumulate_psd(std::map<std::string, PsdEstimate> &acc, const std::string &key, const PsdEstimate &p)
{
    auto [it, fresh] = acc.try_emplace(key, p);
    if (fresh)
        return;
    for (std::size_t k = 0; k < p.psd.size(); ++k)
        it->second.psd[k] += p.psd[k];
    it->second.segments += p.segments;
}

} // namespace

BasebandWaveform apply_fractional_delay(const BasebandWaveform &wave, double delay_s, cplx gain, double carrier_hz,
                                        double guard_fraction)
{
    if (wave.samples.empty() || !(wave.sample_rate_hz > 0.0))
        throw std::invalid_argument("apply_fractional_delay: empty waveform");
    check_guard(delay_s, static_cast<double>(wave.size()) / wave.sample_rate_hz, guard_fraction);
    std::vector<cplx> s = wave.samples;
    detail::fft_inplace(s, false);
    std::vector<cplx> spec(s.size(), cplx{});
    delay_spectrum(spec, s, delay_s, gain * carrier_phase(carrier_hz, delay_s), wave.sample_rate_hz);
    return {inverse(std::move(spec)), wave.sample_rate_hz, wave.origin_time_s};
}

TxImpairments calibrated_impairments(const RadioConfig &cfg, std::uint64_t seed)
{
    cfg.validate();
    auto imp = impairments_from_config(cfg);
    const auto cal = gen_linear_symbols(std::size_t{1} << 16, cfg.linear_power_mw(), derive_seed(seed, 0xCA1ULL));
    calibrate_nonlinearity(imp, cal, cfg.nonlinear_power_mw());
    return imp;
}

SimResult simulate_scr(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                       const TxImpairments &imp, std::size_t num_realizations, std::uint64_t seed,
                       const SimOptions &opt)
{
    if (num_realizations < 1)
        throw std::invalid_argument("simulate_scr needs at least one realization");
    taps.validate();
    imp.validate();
    const double sym_power = symbol_power_for(cfg, imp);
    const std::size_t r_count = num_realizations;

    struct PerRun
    {
        double residual = 0, theory = 0;
        CVec weights;
        std::map<std::string, PsdEstimate> psd;
    };
    std::vector<PerRun> runs(r_count);

    detail::for_each_index(r_count, opt.exec, [&](std::size_t r) {
        const auto channel = realize_channel(profile, derive_seed(seed, r));
        const std::uint64_t sig_seed = derive_seed(derive_seed(seed, r), 0x51617ULL);
        const auto symbols = gen_linear_symbols(opt.symbols, sym_power, sig_seed);
        const auto tx = synthesize_tx(symbols, imp, cfg, opt.oversample, sig_seed);
        const auto prop = propagate(tx, channel, taps, cfg, opt.guard_fraction);
        const Window win = kept(tx.size(), opt.guard_fraction);

        // Fit on the noiseless SI with the same solver as the theory.
        auto emp = empirical_correlations(prop, win);
        stabilize_correlations(emp, taps, cfg);
        const auto sol = solve_constrained(emp, taps.weight_bound);
        const auto e = residual(prop, sol.weights, win);

        auto &run = runs[r];
        run.residual = mean_power(e);
        run.weights = sol.weights;
        const auto corr = build_correlations(channel, taps, cfg);
        run.theory = solve_constrained(corr, taps.weight_bound).objective;

        if (opt.psd_nfft > 0)
        {
            auto segment = [&](std::span<const cplx> x) {
                return BasebandWaveform{{x.begin(), x.end()}, tx.sample_rate_hz, 0.0};
            };
            const std::span<const cplx> tx_span(tx.samples);
            const std::span<const cplx> si_span(prop.si);
            run.psd["tx"] = estimate_psd(segment(tx_span.subspan(win.begin, win.end - win.begin)), opt.psd_nfft);
            run.psd["si"] = estimate_psd(segment(si_span.subspan(win.begin, win.end - win.begin)), opt.psd_nfft);
            run.psd["after_asic"] = estimate_psd(segment(e), opt.psd_nfft);
        }
    });

    SimResult out;
    out.realizations = r_count;
    for (const auto &run : runs)
    {
        out.residual_per_realization.push_back(run.residual);
        out.theory_per_realization.push_back(run.theory);
        for (const auto &[k, p] : run.psd)
            accumulate_psd(out.psd_stages, k, p);
    }
    const double inv = 1.0 / static_cast<double>(r_count);
    for (auto &[k, p] : out.psd_stages)
        for (auto &v : p.psd)
            v *= inv;
    out.residual_power = pairwise_sum<double>(out.residual_per_realization) * inv;
    out.scr_db = lin_to_db(cfg.tx_power_mw() / out.residual_power);
    out.theory_scr_db = -lin_to_db(pairwise_sum<double>(out.theory_per_realization) * inv);
    out.fitted_weights = runs.back().weights;
    return out;
}

Theorem1Check validate_theorem1(const RadioConfig &cfg, const TxImpairments &imp, const TapBank &taps,
                                const ChannelRealization &channel, std::uint64_t seed, std::size_t symbols,
                                const CVec *weights)
{
    if (symbols < 10000)
        throw std::invalid_argument("validate_theorem1 needs at least 1e4 symbols");
    const auto corr = build_correlations(channel, taps, cfg);
    const CVec w = weights ? *weights : solve_constrained(corr, taps.weight_bound).weights;
    if (w.size() != static_cast<Eigen::Index>(taps.size()))
        throw std::invalid_argument("validate_theorem1: weight length mismatch");

    const auto sym = gen_linear_symbols(symbols, symbol_power_for(cfg, imp), seed);
    const auto tx = synthesize_tx(sym, imp, cfg, 4, derive_seed(seed, 0x7E0ULL));
    const auto prop = propagate(tx, channel, taps, cfg, 0.05);
    const auto e = residual(prop, w, kept(tx.size(), 0.05));

    Theorem1Check out;
    out.empirical_mse = mean_power(e);
    out.analytic_mse = rho_eps(corr, w, cfg.tx_power_mw());
    return out;
}

std::vector<PathContribution> per_path_decomposition(const ChannelProfile &profile, const TapBank &taps,
                                                     const RadioConfig &cfg)
{
    const auto rep = stochastic_bounds(profile, taps, cfg);
    std::vector<PathContribution> rows(rep.delays_s.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
        auto &r = rows[i];
        r.delay_s = rep.delays_s[i];
        r.power = rep.powers[i];
        r.error_lb = rep.per_path_lb[i];
        r.error_ub = rep.per_path_ub[i];
        r.product_lb = r.power * r.error_lb;
        r.product_ub = r.power * r.error_ub;
    }
    return rows;
}

double theory_scr_db(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                     std::size_t realizations, std::uint64_t seed, Execution ex)
{
    if (realizations < 1)
        throw std::invalid_argument("theory_scr_db needs at least one realization");
    const auto j = constrained_objectives(profile, taps, cfg, realizations, seed, ex);
    return -lin_to_db(pairwise_sum<double>(j) / static_cast<double>(j.size()));
}

} // namespace mtdsic
