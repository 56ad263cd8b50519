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

#include "mtdsic/common.hpp"

#include <array>
#include <string_view>

namespace mtdsic {

/// Radio front-end configuration. Defaults are an 802.11ax 80 MHz IBFD radio.
struct RadioConfig
{
    double bandwidth_hz = 80e6;
    double carrier_hz = 5.6e9;
    double tx_power_dbm = 20.0;
    double tx_snr_db = 60.0;
    double tx_irr_db = 25.0;
    double nonlinear_power_dbm = -10.0;
    double rx_noise_floor_dbm = -90.0;
    double circulator_atten_db = -25.0; // |a0|^2 of the direct leakage, in dB
    double direct_leakage_delay_s = 0.4e-9;

    void validate() const;

    double tx_power_mw() const { return dbm_to_mw(tx_power_dbm); }
    double tx_noise_power_mw() const { return dbm_to_mw(tx_power_dbm - tx_snr_db); }
    double nonlinear_power_mw() const { return dbm_to_mw(nonlinear_power_dbm); }
    double linear_power_mw() const { return tx_power_mw() - nonlinear_power_mw() - tx_noise_power_mw(); }
    /// Direct leakage gain a0: linear amplitude, zero phase.
    cplx direct_leakage_gain() const { return {std::sqrt(db_to_lin(circulator_atten_db)), 0.0}; }
};

/// Log-linear power-delay profile: a^2(tau) [dB] = intercept + slope * log10(tau / 1 s).
struct PdpModel
{
    double intercept_db = -254.29;
    double slope_db_per_decade = -25.0;
    double domain_min_s = 0.1e-9;

    void validate() const;
};

/// Linear power gain a^2 at the given delay. Throws std::domain_error below the model domain.
double pdp_attenuation(const PdpModel &pdp, double delay_s);

/// Inverse of pdp_attenuation: the delay at which the attenuation equals `power_gain`.
double pdp_delay_for_attenuation(const PdpModel &pdp, double power_gain);

enum class TdlModel
{
    A,
    B,
    C
};

TdlModel parse_tdl(std::string_view name);
std::string_view to_string(TdlModel m);

/// Normalized cluster delays (multiples of the delay spread), 23 clusters per model.
std::span<const double> tdl_normalized_delays(TdlModel m);

struct DirectLeakage
{
    cplx gain;
    double delay_s;
};

struct ChannelProfile
{
    std::vector<double> normalized_delays;
    double delay_spread_s = 0.0;
    PdpModel pdp;
    DirectLeakage direct{};

    void validate() const;

    std::size_t clusters() const { return normalized_delays.size(); }
    /// Absolute cluster delays, same order as normalized_delays.
    std::vector<double> cluster_delays_s() const;
    /// Average cluster powers a_m^2, same order as normalized_delays.
    std::vector<double> cluster_powers() const;
};

ChannelProfile profile_from_tdl(TdlModel model, double delay_spread_s, const PdpModel &pdp,
                                const RadioConfig &cfg);

/// Profile from user-supplied normalized delays (custom channels in config files).
ChannelProfile profile_from_delays(std::vector<double> normalized_delays, double delay_spread_s,
                                   const PdpModel &pdp, const RadioConfig &cfg);

struct Path
{
    double delay_s;
    cplx gain;
};

/// Path 0 is the deterministic direct leakage; clusters follow sorted by delay.
struct ChannelRealization
{
    std::vector<Path> paths;
};

/// Draw independent CN(0, a_m^2) cluster gains. Deterministic in (profile, seed).
ChannelRealization realize_channel(const ChannelProfile &profile, std::uint64_t seed);

/// The realization with every cluster gain set to its rms value sqrt(a_m^2) (zero phase).
ChannelRealization mean_power_channel(const ChannelProfile &profile);

} // namespace mtdsic
