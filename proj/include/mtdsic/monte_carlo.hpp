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

#include "mtdsic/kernels.hpp"
#include "mtdsic/signal_synth.hpp"

#include <map>

namespace mtdsic {

/// Delay a periodic waveform by `delay_s` with a linear-phase spectrum multiply, scale by `gain` and
/// rotate by exp(-j 2 pi f_c delay) (pass carrier_hz = 0 for channel paths, whose gains carry the phase).
/// The delay must fit inside the guard fraction of the block.
BasebandWaveform apply_fractional_delay(const BasebandWaveform &wave, double delay_s, cplx gain, double carrier_hz,
                                        double guard_fraction = 0.05);

/// Impairments from the config with the third-order term calibrated to the configured nonlinear power.
TxImpairments calibrated_impairments(const RadioConfig &cfg, std::uint64_t seed);

struct SimOptions
{
    std::size_t symbols = 4096;
    int oversample = 16;
    double guard_fraction = 0.05; // discarded at each end before any power measurement
    std::size_t psd_nfft = 0;     // 0 disables the PSD stages
    Execution exec = Execution::Parallel;
};

struct SimResult
{
    double scr_db = 0;          // rho_t / mean residual power
    double residual_power = 0;  // mean over realizations, mW
    double theory_scr_db = 0;   // 1 / mean constrained J over the same channels
    std::size_t realizations = 0;
    std::vector<double> residual_per_realization; // mW
    std::vector<double> theory_per_realization;   // normalized J
    std::map<std::string, PsdEstimate> psd_stages; // "tx", "si", "after_asic", averaged over realizations
    CVec fitted_weights;        // last realization
};

/// Synthesize, propagate, fit the taps on the noiseless SI by constrained least squares and subtract.
/// Realization r draws its channel with derive_seed(seed, r), exactly as constrained_objectives does.
SimResult simulate_scr(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                       const TxImpairments &imp, std::size_t num_realizations, std::uint64_t seed,
                       const SimOptions &opt = {});

struct Theorem1Check
{
    double empirical_mse = 0; // mW, time average over the kept samples
    double analytic_mse = 0;  // rho_t * J
    double ratio_db() const { return lin_to_db(empirical_mse / analytic_mse); }
};

/// Apply the white-process optimal weights (or `weights` if given) to a synthesized impaired signal
/// and compare the time-averaged error with the analytic value.
Theorem1Check validate_theorem1(const RadioConfig &cfg, const TxImpairments &imp, const TapBank &taps,
                                const ChannelRealization &channel, std::uint64_t seed, std::size_t symbols = 32768,
                                const CVec *weights = nullptr);

struct PathContribution
{
    double delay_s = 0;
    double power = 0;      // a_m^2
    double error_lb = 0;   // interpolation error, unconstrained
    double error_ub = 0;   // with the per-path weight bound
    double product_lb = 0; // a_m^2 * error_lb
    double product_ub = 0;
};

/// One row per path (row 0 is the direct leakage). rho_t * sum(product_lb) is bound_lo and
/// rho_t / beta_M * sum(product_ub) is bound_hi.
std::vector<PathContribution> per_path_decomposition(const ChannelProfile &profile, const TapBank &taps,
                                                     const RadioConfig &cfg);

/// SCR in dB from the theory definition: -10 log10(mean constrained J).
double theory_scr_db(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                     std::size_t realizations, std::uint64_t seed, Execution ex = Execution::Parallel);

} // namespace mtdsic
