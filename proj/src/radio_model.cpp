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

#include "mtdsic/radio_model.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace mtdsic {

namespace {

// 3GPP TR 38.901 TDL-A/B/C normalized delays, in table order.
constexpr std::array<double, 23> tdl_a = {0.3819, 0.4025, 0.5868, 0.4610, 0.5375, 0.6708, 0.5750, 0.7618,
                                          1.5375, 1.8978, 2.2242, 2.1718, 2.4942, 2.5119, 3.0582, 4.0810,
                                          4.4579, 4.5695, 4.7966, 5.0066, 5.3043, 9.6586, 10.0000};
constexpr std::array<double, 23> tdl_b = {0.1072, 0.2155, 0.2095, 0.2870, 0.2986, 0.3752, 0.5055, 0.3681,
                                          0.3697, 0.5700, 0.5283, 1.1021, 1.2756, 1.5474, 1.7842, 2.0169,
                                          2.8294, 3.0219, 3.6187, 4.1067, 4.2790, 4.7834, 5.0000};
constexpr std::array<double, 23> tdl_c = {0.2099, 0.2219, 0.2329, 0.2176, 0.6366, 0.6448, 0.6560, 0.6584,
                                          0.7935, 0.8213, 0.9336, 1.2285, 1.3083, 2.1704, 2.7105, 4.2589,
                                          4.6003, 5.4902, 5.6077, 6.3065, 6.6374, 7.0427, 8.6523};

bool finite(double v) { return std::isfinite(v); }

} // namespace

void RadioConfig::validate() const
{
    if (!(bandwidth_hz > 0.0))
        throw std::invalid_argument("radio.bandwidth_hz must be positive");
    if (!(carrier_hz > bandwidth_hz / 2.0))
        throw std::invalid_argument("radio.carrier_hz must exceed bandwidth_hz / 2");
    if (!(tx_snr_db > 0.0))
        throw std::invalid_argument("radio.tx_snr_db must be positive");
    for (double v : {tx_power_dbm, tx_irr_db, nonlinear_power_dbm, rx_noise_floor_dbm, circulator_atten_db})
        if (!finite(v))
            throw std::invalid_argument("radio: dB/dBm fields must be finite");
    if (circulator_atten_db > 0.0)
        throw std::invalid_argument("radio.circulator_atten_db must be <= 0 (attenuation)");
    if (!(direct_leakage_delay_s >= 0.0))
        throw std::invalid_argument("radio.direct_leakage_delay_s must be non-negative");
    if (!(linear_power_mw() > 0.0))
        throw std::invalid_argument("radio: nonlinear + noise power exceed the Tx power");
}

void PdpModel::validate() const
{
    if (!(slope_db_per_decade < 0.0))
        throw std::invalid_argument("pdp.slope_db_per_decade must be negative");
    if (!(domain_min_s > 0.0) || !finite(intercept_db))
        throw std::invalid_argument("pdp: domain_min_s must be positive and intercept finite");
}

double pdp_attenuation(const PdpModel &pdp, double delay_s)
{
    if (!(delay_s >= pdp.domain_min_s))
        throw std::domain_error("delay outside PDP domain");
    return db_to_lin(pdp.intercept_db + pdp.slope_db_per_decade * std::log10(delay_s));
}

double pdp_delay_for_attenuation(const PdpModel &pdp, double power_gain)
{
    if (!(power_gain > 0.0))
        throw std::domain_error("attenuation must be positive");
    return std::pow(10.0, (lin_to_db(power_gain) - pdp.intercept_db) / pdp.slope_db_per_decade);
}

TdlModel parse_tdl(std::string_view name)
{
    if (name == "A" || name == "TDL-A" || name == "a")
        return TdlModel::A;
    if (name == "B" || name == "TDL-B" || name == "b")
        return TdlModel::B;
    if (name == "C" || name == "TDL-C" || name == "c")
        return TdlModel::C;
    throw std::invalid_argument("unknown TDL model '" + std::string(name) + "'");
}

std::string_view to_string(TdlModel m)
{
    switch (m)
    {
    case TdlModel::A:
        return "TDL-A";
    case TdlModel::B:
        return "TDL-B";
    case TdlModel::C:
        return "TDL-C";
    }
    return "?";
}

std::span<const double> tdl_normalized_delays(TdlModel m)
{
    switch (m)
    {
    case TdlModel::A:
        return tdl_a;
    case TdlModel::B:
        return tdl_b;
    case TdlModel::C:
        return tdl_c;
    }
    throw std::invalid_argument("unknown TDL model");
}

void ChannelProfile::validate() const
{
    pdp.validate();
    if (!(delay_spread_s > 0.0))
        throw std::invalid_argument("channel: delay spread must be positive");
    if (normalized_delays.empty())
        throw std::invalid_argument("channel: at least one cluster required");
    for (double nd : normalized_delays)
    {
        if (!(nd > 0.0))
            throw std::invalid_argument("channel: normalized delays must be strictly positive");
        if (nd * delay_spread_s < pdp.domain_min_s)
            throw std::domain_error("delay outside PDP domain");
    }
}

std::vector<double> ChannelProfile::cluster_delays_s() const
{
    std::vector<double> out(normalized_delays.size());
    std::transform(normalized_delays.begin(), normalized_delays.end(), out.begin(),
                   [this](double nd) { return nd * delay_spread_s; });
    return out;
}

std::vector<double> ChannelProfile::cluster_powers() const
{
    auto delays = cluster_delays_s();
    for (auto &d : delays)
        d = pdp_attenuation(pdp, d);
    return delays;
}

ChannelProfile profile_from_delays(std::vector<double> normalized_delays, double delay_spread_s,
                                   const PdpModel &pdp, const RadioConfig &cfg)
{
    ChannelProfile p;
    p.normalized_delays = std::move(normalized_delays);
    p.delay_spread_s = delay_spread_s;
    p.pdp = pdp;
    p.direct = {cfg.direct_leakage_gain(), cfg.direct_leakage_delay_s};
    p.validate();
    return p;
}

ChannelProfile profile_from_tdl(TdlModel model, double delay_spread_s, const PdpModel &pdp,
                                const RadioConfig &cfg)
{
    auto nd = tdl_normalized_delays(model);
    return profile_from_delays({nd.begin(), nd.end()}, delay_spread_s, pdp, cfg);
}

namespace {

ChannelRealization assemble(const ChannelProfile &profile, std::vector<cplx> gains)
{
    const auto delays = profile.cluster_delays_s();
    std::vector<std::size_t> order(delays.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return delays[a] < delays[b]; });

    ChannelRealization r;
    r.paths.reserve(delays.size() + 1);
    r.paths.push_back({profile.direct.delay_s, profile.direct.gain});
    for (auto i : order)
        r.paths.push_back({delays[i], gains[i]});
    return r;
}

} // namespace

ChannelRealization realize_channel(const ChannelProfile &profile, std::uint64_t seed)
{
    const auto powers = profile.cluster_powers();
    std::mt19937_64 gen(derive_seed(seed, 0xC4A77E1ULL));
    std::normal_distribution<double> nd(0.0, 1.0);

    std::vector<cplx> gains(powers.size());
    for (std::size_t m = 0; m < powers.size(); ++m)
    {
        const double s = std::sqrt(powers[m] / 2.0);
        const double re = nd(gen);
        const double im = nd(gen);
        gains[m] = {s * re, s * im};
    }
    return assemble(profile, std::move(gains));
}

ChannelRealization mean_power_channel(const ChannelProfile &profile)
{
    const auto powers = profile.cluster_powers();
    std::vector<cplx> gains(powers.size());
    for (std::size_t m = 0; m < powers.size(); ++m)
        gains[m] = {std::sqrt(powers[m]), 0.0};
    return assemble(profile, std::move(gains));
}

} // namespace mtdsic
