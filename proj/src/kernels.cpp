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

#include "mtdsic/kernels.hpp"

#include <omp.h>

namespace mtdsic {

std::vector<double> weighted_error_grid(std::span<const double> taus_s, const TapBank &taps, const PdpModel &pdp,
                                        int m_assumed, const RadioConfig &cfg, Execution ex)
{
    taps.validate();
    std::vector<double> out(taus_s.size());
    detail::for_each_index(taus_s.size(), ex, [&](std::size_t i) {
        const double a2 = pdp_attenuation(pdp, taus_s[i]);
        const double w_eps = per_path_bound(taps.weight_bound, m_assumed, a2);
        out[i] = a2 * per_path_error_ub(taus_s[i], taps, w_eps, cfg);
    });
    return out;
}

PerPathErrors per_path_errors(std::span<const double> delays_s, std::span<const double> powers, const TapBank &taps,
                              int m, const RadioConfig &cfg, Execution ex)
{
    if (delays_s.size() != powers.size())
        throw std::invalid_argument("per_path_errors: delays and powers differ in length");
    taps.validate();
    PerPathErrors out;
    out.lb = per_path_error_lb(delays_s, taps, cfg); // one QR for all paths
    out.ub.resize(delays_s.size());
    detail::for_each_index(delays_s.size(), ex, [&](std::size_t i) {
        out.ub[i] = per_path_error_ub(delays_s[i], taps, per_path_bound(taps.weight_bound, m, powers[i]), cfg);
    });
    return out;
}

std::vector<double> constrained_objectives(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                                           std::size_t realizations, std::uint64_t seed, Execution ex)
{
    taps.validate();
    std::vector<double> out(realizations);
    detail::for_each_index(realizations, ex, [&](std::size_t r) {
        const auto ch = realize_channel(profile, derive_seed(seed, r));
        const auto corr = build_correlations(ch, taps, cfg);
        out[r] = solve_constrained(corr, taps.weight_bound).objective;
    });
    return out;
}

int parallel_threads() { return omp_get_max_threads(); }

void set_parallel_threads(int n)
{
    if (n < 1)
        throw std::invalid_argument("thread count must be positive");
    omp_set_num_threads(n);
}

} // namespace mtdsic
