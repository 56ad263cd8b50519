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

#include "mtdsic/wiener_core.hpp"

#include <exception>
#include <mutex>

namespace mtdsic {

// Hot loops, each with a serial reference and an OpenMP version. Both write per-index slots and
// reduce with pairwise summation, so the two paths return bit-identical results.
enum class Execution
{
    Serial,
    Parallel
};

namespace detail {

// Runs body(i) for i in [0, n). Exceptions thrown inside the parallel region are captured and the
// one with the lowest index is rethrown, so both paths fail the same way.
template <typename F>
void for_each_index(std::size_t n, Execution ex, F &&body)
{
    if (ex == Execution::Serial)
    {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::exception_ptr err;
    std::size_t err_index = n;
    std::mutex mtx;
    const auto ni = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < ni; ++i)
    {
        try
        {
            body(static_cast<std::size_t>(i));
        }
        catch (...)
        {
            std::lock_guard lock(mtx);
            if (static_cast<std::size_t>(i) < err_index)
            {
                err_index = static_cast<std::size_t>(i);
                err = std::current_exception();
            }
        }
    }
    if (err)
        std::rethrow_exception(err);
}

} // namespace detail

/// a^2(tau) * eps_ub^2(tau) on a delay grid, with w_eps = w0 / ((M + 1) sqrt(a^2(tau))).
std::vector<double> weighted_error_grid(std::span<const double> taus_s, const TapBank &taps, const PdpModel &pdp,
                                        int m_assumed, const RadioConfig &cfg, Execution ex = Execution::Parallel);

struct PerPathErrors
{
    std::vector<double> lb;
    std::vector<double> ub;
};

/// Per-path lower and upper errors for the given paths (delay, a^2) and M clusters.
PerPathErrors per_path_errors(std::span<const double> delays_s, std::span<const double> powers, const TapBank &taps,
                              int m, const RadioConfig &cfg, Execution ex = Execution::Parallel);

/// Normalized constrained MMSE J for `realizations` independent channels; realization r uses
/// derive_seed(seed, r). Entries stay in realization order.
std::vector<double> constrained_objectives(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                                           std::size_t realizations, std::uint64_t seed,
                                           Execution ex = Execution::Parallel);

/// Threads OpenMP will use for Execution::Parallel.
int parallel_threads();
void set_parallel_threads(int n);

} // namespace mtdsic
