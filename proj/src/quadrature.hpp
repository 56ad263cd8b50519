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

struct GaussRule
{
    std::vector<double> nodes;   // on [-1, 1]
    std::vector<double> weights; // sum to 2
};

// Gauss-Legendre rule with q nodes (Newton on P_q). Cached, thread-safe.
const GaussRule &gauss_legendre(std::size_t q);

// Squared distance of each unit kernel nsinc(B(t - tau)) from the span of nsinc(B(t - d_n)),
// in the L2 norm where <k_a, k_b> = nsinc(B(a - b)).
std::vector<double> bandlimited_projection_residuals(std::span<const double> taps, std::span<const double> taus,
                                                     double bandwidth_hz);

} // namespace mtdsic::detail
