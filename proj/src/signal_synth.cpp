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

#include "mtdsic/signal_synth.hpp"

#include "fft.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>

namespace mtdsic {

void TxImpairments::validate() const
{
    for (const auto &t : nl_coeffs)
        if (t.order < 3 || t.order % 2 == 0)
            throw std::invalid_argument("nonlinear order must be odd and >= 3");
    if (!(tx_noise_power >= 0.0))
        throw std::invalid_argument("tx noise power must be non-negative");
    if (std::norm(b0) == 0.0)
        throw std::invalid_argument("b0 must be nonzero");
}

double TxImpairments::irr_db() const
{
    return std::norm(b1) == 0.0 ? std::numeric_limits<double>::infinity() : lin_to_db(std::norm(b0) / std::norm(b1));
}

std::pair<cplx, cplx> iq_coefficients(double irr_db)
{
    const double irr = db_to_lin(irr_db);
    return {cplx(std::sqrt(irr / (1.0 + irr)), 0.0), cplx(std::sqrt(1.0 / (1.0 + irr)), 0.0)};
}

TxImpairments impairments_from_config(const RadioConfig &cfg)
{
    TxImpairments imp;
    std::tie(imp.b0, imp.b1) = iq_coefficients(cfg.tx_irr_db);
    imp.tx_noise_power = cfg.tx_noise_power_mw();
    return imp;
}

TxImpairments ideal_impairments() { return {}; }

namespace {

std::vector<cplx> iq_mix(std::span<const cplx> s, cplx b0, cplx b1)
{
    std::vector<cplx> out(s.size());
    for (std::size_t k = 0; k < s.size(); ++k)
        out[k] = b0 * s[k] + b1 * std::conj(s[k]);
    return out;
}

std::vector<cplx> polynomial(std::span<const cplx> s, const std::vector<NonlinearTerm> &terms)
{
    std::vector<cplx> out(s.size(), cplx{});
    for (std::size_t k = 0; k < s.size(); ++k)
    {
        const double mag2 = std::norm(s[k]);
        for (const auto &t : terms)
            out[k] += t.coeff * s[k] * std::pow(mag2, (t.order - 1) / 2);
    }
    return out;
}

double mean_norm(std::span<const cplx> x)
{
    std::vector<double> p(x.size());
    std::transform(x.begin(), x.end(), p.begin(), [](cplx v) { return std::norm(v); });
    return x.empty() ? 0.0 : pairwise_sum<double>(p) / static_cast<double>(x.size());
}

} // namespace

void calibrate_nonlinearity(TxImpairments &imp, std::span<const cplx> symbols, double target_power_mw)
{
    if (symbols.empty())
        throw std::invalid_argument("calibration needs symbols");
    imp.nl_coeffs.clear();
    if (target_power_mw <= 0.0)
        return;
    const auto s = iq_mix(symbols, imp.b0, imp.b1);
    std::vector<double> m6(s.size());
    std::transform(s.begin(), s.end(), m6.begin(), [](cplx v) { return std::pow(std::norm(v), 3); });
    const double e6 = pairwise_sum<double>(m6) / static_cast<double>(s.size());
    imp.nl_coeffs.push_back({3, cplx(0.0, std::sqrt(target_power_mw / e6))});
}

double BasebandWaveform::mean_power() const { return mean_norm(samples); }

std::vector<cplx> gen_linear_symbols(std::size_t num, double symbol_power, std::uint64_t seed)
{
    if (num == 0)
        throw std::invalid_argument("gen_linear_symbols: num must be positive");
    if (!(symbol_power > 0.0))
        throw std::invalid_argument("gen_linear_symbols: symbol power must be positive");
    std::mt19937_64 gen(derive_seed(seed, 0x5E1B01ULL));
    std::normal_distribution<double> nd(0.0, std::sqrt(symbol_power / 2.0));
    std::vector<cplx> out(num);
    for (auto &v : out)
    {
        const double re = nd(gen);
        const double im = nd(gen);
        v = {re, im};
    }
    return out;
}

std::vector<cplx> gen_qam_symbols(std::size_t num, int order, double symbol_power, std::uint64_t seed)
{
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(order))));
    if (num == 0 || order < 4 || side * side != order)
        throw std::invalid_argument("gen_qam_symbols: need num > 0 and a square order >= 4");
    const double scale = std::sqrt(symbol_power / (2.0 * (order - 1) / 3.0));
    std::mt19937_64 gen(derive_seed(seed, 0x9A3ULL));
    std::uniform_int_distribution<int> ud(0, side - 1);
    std::vector<cplx> out(num);
    for (auto &v : out)
    {
        const int i = ud(gen);
        const int q = ud(gen);
        v = scale * cplx(2.0 * i - (side - 1), 2.0 * q - (side - 1));
    }
    return out;
}

std::vector<cplx> sinc_interpolate(std::span<const cplx> symbols, int oversample)
{
    const std::size_t K = symbols.size();
    const std::size_t L = K * static_cast<std::size_t>(oversample);
    std::vector<cplx> X(symbols.begin(), symbols.end());
    detail::fft_inplace(X, false);

    std::vector<cplx> Y(L, cplx{});
    for (std::size_t k = 0; k < K; ++k)
    {
        const long long f = detail::bin_index(k, K);
        if (K % 2 == 0 && k == K / 2)
        {
            // Nyquist bin: split evenly so the result stays a real-coefficient interpolant.
            Y[K / 2] += 0.5 * X[k];
            Y[L - K / 2] += 0.5 * X[k];
            continue;
        }
        Y[f >= 0 ? static_cast<std::size_t>(f) : L - static_cast<std::size_t>(-f)] = X[k];
    }
    detail::fft_inplace(Y, true);
    const double inv = 1.0 / static_cast<double>(K);
    for (auto &v : Y)
        v *= inv;
    return Y;
}

namespace {

std::vector<cplx> bandlimited_noise(std::size_t K, int oversample, double power, std::uint64_t seed)
{
    const std::size_t L = K * static_cast<std::size_t>(oversample);
    std::vector<cplx> w(L, cplx{});
    if (power <= 0.0)
        return w;
    std::mt19937_64 gen(derive_seed(seed, 0x7A0153ULL));
    std::normal_distribution<double> nd(0.0, std::sqrt(power * oversample / 2.0));
    for (auto &v : w)
    {
        const double re = nd(gen);
        const double im = nd(gen);
        v = {re, im};
    }
    detail::fft_inplace(w, false);
    const long long half = static_cast<long long>(K / 2);
    const bool even = K % 2 == 0;
    for (std::size_t k = 0; k < L; ++k)
    {
        const long long f = std::llabs(detail::bin_index(k, L));
        if (f > half)
            w[k] = 0.0;
        else if (even && f == half)
            w[k] *= std::sqrt(0.5);
    }
    detail::fft_inplace(w, true);
    const double inv = 1.0 / static_cast<double>(L);
    for (auto &v : w)
        v *= inv;
    return w;
}

} // namespace

TxComponents synthesize_tx_components(std::span<const cplx> symbols, const TxImpairments &imp,
                                      const RadioConfig &cfg, int oversample, std::uint64_t seed)
{
    if (oversample < 4)
        throw std::invalid_argument("oversample must be >= 4");
    if (symbols.empty())
        throw std::invalid_argument("synthesize_tx: no symbols");
    imp.validate();

    const double fs = cfg.bandwidth_hz * oversample;
    const auto s_iq = iq_mix(symbols, imp.b0, imp.b1);
    const auto s_nl = polynomial(s_iq, imp.nl_coeffs);

    TxComponents out;
    out.linear = {sinc_interpolate(s_iq, oversample), fs, 0.0};
    out.nonlinear = {sinc_interpolate(s_nl, oversample), fs, 0.0};
    out.noise = {bandlimited_noise(symbols.size(), oversample, imp.tx_noise_power, seed), fs, 0.0};

    out.total = out.linear;
    for (std::size_t i = 0; i < out.total.size(); ++i)
        out.total.samples[i] += out.nonlinear.samples[i] + out.noise.samples[i];
    return out;
}

BasebandWaveform synthesize_tx(std::span<const cplx> symbols, const TxImpairments &imp, const RadioConfig &cfg,
                               int oversample, std::uint64_t seed)
{
    return synthesize_tx_components(symbols, imp, cfg, oversample, seed).total;
}

PsdEstimate estimate_psd(const BasebandWaveform &wave, std::size_t nfft)
{
    if (nfft < 2 || wave.size() < nfft)
        throw std::invalid_argument("estimate_psd: nfft larger than waveform");

    std::vector<double> win(nfft);
    double wsum2 = 0.0;
    for (std::size_t n = 0; n < nfft; ++n)
    {
        win[n] = 0.5 - 0.5 * std::cos(2.0 * pi * static_cast<double>(n) / static_cast<double>(nfft));
        wsum2 += win[n] * win[n];
    }

    const std::size_t hop = nfft / 2;
    std::vector<double> acc(nfft, 0.0);
    std::vector<cplx> seg(nfft);
    std::size_t count = 0;
    for (std::size_t start = 0; start + nfft <= wave.size(); start += hop, ++count)
    {
        for (std::size_t n = 0; n < nfft; ++n)
            seg[n] = wave.samples[start + n] * win[n];
        detail::fft_inplace(seg, false);
        for (std::size_t k = 0; k < nfft; ++k)
            acc[k] += std::norm(seg[k]);
    }

    PsdEstimate out;
    out.segments = count;
    out.freq_hz.resize(nfft);
    out.psd.resize(nfft);
    const double norm = 1.0 / (static_cast<double>(count) * wave.sample_rate_hz * wsum2);
    const std::size_t shift = nfft / 2; // bin k of the shifted output is signed index k - shift
    for (std::size_t k = 0; k < nfft; ++k)
    {
        const std::size_t src = (k + nfft - shift) % nfft;
        out.freq_hz[k] = static_cast<double>(detail::bin_index(src, nfft)) * wave.sample_rate_hz / static_cast<double>(nfft);
        out.psd[k] = acc[src] * norm;
    }
    return out;
}

void dump_waveform(const BasebandWaveform &wave, const std::filesystem::path &path)
{
    std::ofstream bin(path, std::ios::binary);
    if (!bin)
        throw std::runtime_error("cannot open " + path.string());
    static_assert(sizeof(cplx) == 2 * sizeof(double));
    bin.write(reinterpret_cast<const char *>(wave.samples.data()),
              static_cast<std::streamsize>(wave.samples.size() * sizeof(cplx)));

    nlohmann::json meta = {{"format", "float64 interleaved re,im"},
                           {"samples", wave.samples.size()},
                           {"sample_rate_hz", wave.sample_rate_hz},
                           {"origin_time_s", wave.origin_time_s}};
    std::ofstream js(path.string() + ".json");
    js << meta.dump(2) << '\n';
}

} // namespace mtdsic
