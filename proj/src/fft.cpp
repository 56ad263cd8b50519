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

#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace mtdsic::detail {

namespace {

struct PlanCache
{
    std::mutex mtx;
    std::map<std::pair<std::size_t, bool>, fftw_plan> plans;

    ~PlanCache()
    {
        for (auto &[key, p] : plans)
            fftw_destroy_plan(p);
    }
};

PlanCache &cache()
{
    static PlanCache c;
    return c;
}

fftw_plan get_plan(std::size_t n, bool inverse)
{
    auto &c = cache();
    std::lock_guard lock(c.mtx);
    auto it = c.plans.find({n, inverse});
    if (it != c.plans.end())
        return it->second;

    // Planning is not thread-safe in FFTW; it happens under the lock on scratch buffers.
    auto *buf = fftw_alloc_complex(n);
    auto p = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, inverse ? FFTW_BACKWARD : FFTW_FORWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (!p)
        throw std::runtime_error("fftw plan creation failed");
    c.plans.emplace(std::make_pair(n, inverse), p);
    return p;
}

} // namespace

void fft_inplace(std::vector<cplx> &x, bool inverse)
{
    if (x.empty())
        return;
    auto p = get_plan(x.size(), inverse);
    auto *data = reinterpret_cast<fftw_complex *>(x.data());
    fftw_execute_dft(p, data, data);
}

} // namespace mtdsic::detail
