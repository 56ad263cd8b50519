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

namespace mtdsic::detail {

// Unnormalized in-place DFT. Forward uses exp(-j 2 pi k n / N).
// Plans are cached per (size, direction) and shared between threads.
void fft_inplace(std::vector<cplx> &x, bool inverse);

// Signed frequency index of DFT bin k for length n.
inline long long bin_index(std::size_t k, std::size_t n)
{
    return k < (n + 1) / 2 ? static_cast<long long>(k) : static_cast<long long>(k) - static_cast<long long>(n);
}

} // namespace mtdsic::detail
