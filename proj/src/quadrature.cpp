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

#include "quadrature.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace mtdsic::detail {

namespace {

GaussRule compute_rule(std::size_t q)
{
    GaussRule g;
    g.nodes.resize(q);
    g.weights.resize(q);
    const double qd = static_cast<double>(q);
    for (std::size_t i = 0; i < (q + 1) / 2; ++i)
    {
        double x = std::cos(pi * (static_cast<double>(i) + 0.75) / (qd + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= q; ++k)
            {
                const double kd = static_cast<double>(k);
                const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
                p0 = p1;
                p1 = p2;
            }
            dp = qd * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        g.nodes[i] = -x;
        g.nodes[q - 1 - i] = x;
        g.weights[i] = g.weights[q - 1 - i] = w;
    }
    return g;
}

} // namespace

const GaussRule &gauss_legendre(std::size_t q)
{
    static std::mutex mtx;
    static std::map<std::size_t, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mtx);
    auto &slot = cache[q];
    if (!slot)
        slot = std::make_unique<GaussRule>(compute_rule(q));
    return *slot;
}

std::vector<double> bandlimited_projection_residuals(std::span<const double> taps, std::span<const double> taus,
                                                     double bandwidth_hz)
{
    // Kernel k_d has spectrum exp(-j 2 pi f d) / sqrt(B) on |f| < B/2. With u = f / B in [-1/2, 1/2],
    // <k_a, k_b> = int exp(-j 2 pi u B (a - b)) du = nsinc(B (a - b)); Gauss-Legendre on u.
    double lo = taps.front(), hi = taps.front();
    for (double v : taps)
        lo = std::min(lo, v), hi = std::max(hi, v);
    for (double v : taus)
        lo = std::min(lo, v), hi = std::max(hi, v);
    const double centre = 0.5 * (lo + hi);
    const double half_span = 0.5 * bandwidth_hz * (hi - lo); // max |B (x - centre)|

    // exp(j pi x s) on x in [-1, 1] with |s| <= half_span * 2 oscillates at most pi * half_span rad per unit;
    // a rule with q > pi * half_span + 24 is exact to round-off.
    const auto q = static_cast<std::size_t>(16 * std::ceil((pi * half_span + 24.0) / 16.0));
    const auto &rule = gauss_legendre(q);

    const auto nt = static_cast<Eigen::Index>(taps.size());
    const auto np = static_cast<Eigen::Index>(taus.size());
    const auto qi = static_cast<Eigen::Index>(q);
    auto column = [&](double d, CMat &m, Eigen::Index col) {
        const double x = bandwidth_hz * (d - centre);
        for (Eigen::Index k = 0; k < qi; ++k)
        {
            const double u = 0.5 * rule.nodes[static_cast<std::size_t>(k)];
            const double w = std::sqrt(0.5 * rule.weights[static_cast<std::size_t>(k)]);
            m(k, col) = w * std::polar(1.0, -2.0 * pi * u * x);
        }
    };

    CMat phi(qi, nt), rhs(qi, np);
    for (Eigen::Index i = 0; i < nt; ++i)
        column(taps[static_cast<std::size_t>(i)], phi, i);
    for (Eigen::Index i = 0; i < np; ++i)
        column(taus[static_cast<std::size_t>(i)], rhs, i);

    Eigen::HouseholderQR<CMat> qr(phi);
    const CMat proj = qr.householderQ().adjoint() * rhs;
    std::vector<double> out(static_cast<std::size_t>(np));
    for (Eigen::Index i = 0; i < np; ++i)
        out[static_cast<std::size_t>(i)] = std::clamp(proj.col(i).tail(qi - nt).squaredNorm(), 0.0, 1.0);
    return out;
}

} // namespace mtdsic::detail
