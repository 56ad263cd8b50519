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

#pragma once

#include "mtdsic/radio_model.hpp"

#include <filesystem>
#include <utility>

namespace mtdsic {

struct NonlinearTerm
{
    int order;   // odd, >= 3
    cplx coeff;  // c_p
};

/// Tx chain impairments: I/Q mix b0 s + b1 s*, memoryless odd-order polynomial, band-limited noise.
struct TxImpairments
{
    cplx b0{1.0, 0.0};
    cplx b1{0.0, 0.0};
    std::vector<NonlinearTerm> nl_coeffs;
    double tx_noise_power = 0.0; // mW

    void validate() const;
    double irr_db() const;
};

/// I/Q coefficients with |b0|^2 + |b1|^2 = 1, b1 real positive and |b0|^2/|b1|^2 = IRR.
std::pair<cplx, cplx> iq_coefficients(double irr_db);

/// Impairments from a radio config. The nonlinearity is left empty; see calibrate_nonlinearity.
TxImpairments impairments_from_config(const RadioConfig &cfg);

/// Identity impairments: no I/Q mix, no nonlinearity, no noise.
TxImpairments ideal_impairments();

/// Set a single third-order term so the nonlinear component has `target_power_mw` on `symbols`.
/// The coefficient is purely imaginary, which makes it orthogonal to the linear part.
void calibrate_nonlinearity(TxImpairments &imp, std::span<const cplx> symbols, double target_power_mw);

struct BasebandWaveform
{
    std::vector<cplx> samples;
    double sample_rate_hz = 0.0;
    double origin_time_s = 0.0;

    std::size_t size() const { return samples.size(); }
    double mean_power() const;
};

/// i.i.d. CN(0, symbol_power) symbols.
std::vector<cplx> gen_linear_symbols(std::size_t num, double symbol_power, std::uint64_t seed);

/// Uniform square QAM symbols (order 4, 16, 64, 256, ...) scaled to `symbol_power`.
std::vector<cplx> gen_qam_symbols(std::size_t num, int order, double symbol_power, std::uint64_t seed);

/// Per-component oversampled waveforms; `total` is their sum.
struct TxComponents
{
    BasebandWaveform linear;
    BasebandWaveform nonlinear;
    BasebandWaveform noise;
    BasebandWaveform total;
};

/// Cyclic block synthesis: I/Q mix, polynomial, periodic sinc interpolation and in-band noise.
TxComponents synthesize_tx_components(std::span<const cplx> symbols, const TxImpairments &imp,
                                      const RadioConfig &cfg, int oversample, std::uint64_t seed);

BasebandWaveform synthesize_tx(std::span<const cplx> symbols, const TxImpairments &imp, const RadioConfig &cfg,
                               int oversample, std::uint64_t seed);

/// Periodic band-limited interpolation of symbol-rate samples by zero-padding the spectrum.
std::vector<cplx> sinc_interpolate(std::span<const cplx> symbols, int oversample);

struct PsdEstimate
{
    std::vector<double> freq_hz; // ascending, centred on 0
    std::vector<double> psd;     // mW / Hz
    std::size_t segments = 0;
};

/// Welch estimate with a Hann window and 50% overlap.
PsdEstimate estimate_psd(const BasebandWaveform &wave, std::size_t nfft);

/// Write interleaved float64 (re, im) to `path` and a JSON sidecar `path` + ".json".
void dump_waveform(const BasebandWaveform &wave, const std::filesystem::path &path);

} // namespace mtdsic
