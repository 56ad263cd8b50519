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

#include <limits>
#include <optional>

namespace mtdsic {

/// Per-path error budget for tap placement.
struct DesignBudget
{
    double target_error_power = 0; // eps0^2 in mW; informational once eta is set
    double eta = 0;                // per-path budget on a^2(tau) eps_ub^2(tau), linear
    int m_assumed = 20;            // cluster count used in w_eps and beta_M
    double w0 = 1.0;
    double tau_min_s = 1e-9;
    double tau_max_s = std::numeric_limits<double>::infinity();
    double d1_anchor_s = 0.2e-9;

    void validate() const;

    /// eta = beta_M eps0^2 / ((M + 1) rho_t).
    static DesignBudget from_target(double target_error_power_mw, const RadioConfig &cfg, int m_assumed = 20);
};

/// One pass of the initial-delay construction.
struct PlanStep
{
    int n = 0;                 // taps after this step
    double tau_d_s = 0;        // first violating delay
    double eps_bar = 0;        // per-path error allowance at tau_d
    double delta_d_s = 0;      // spacing appended
    bool clamped = false;      // spacing capped at 2/B
    double new_delay_s = 0;
};

struct DelayPlan
{
    std::vector<double> delays_s;
    double worst_case_error = 0; // max over the domain of a^2 eps_ub^2
    bool feasible = true;        // worst_case_error <= eta
    double tau_eta_s = 0;        // 0 when no tap is needed
    std::vector<PlanStep> trace;

    TapBank bank(double w0) const;
};

/// Worst-case normalized two-tap error at the midpoint of a gap delta_d: 1 - 2 sinc^2(x/2) / (1 + sinc(x)),
/// x = B delta_d in (0, 2].
double two_tap_max_error(double bandwidth_hz, double delta_d_s);

/// Largest gap whose two-tap worst-case error is at most `target` (bisection to 1e-6 / B).
double delta_for_error(double bandwidth_hz, double target);

/// Smallest domain delay beyond which every attenuation is at most eta; none when a^2(tau_min) <= eta.
std::optional<double> tau_eta(const PdpModel &pdp, double eta, const DesignBudget &budget);

/// Delay grid over [lo, hi] at 0.02 / B, both ends included.
std::vector<double> delay_grid(double lo_s, double hi_s, const RadioConfig &cfg);

/// First delay in [tau_min, tau_eta] where a^2 eps_ub^2 >= eta for the given taps; none if the taps
/// meet the budget everywhere.
std::optional<double> tau_d(std::span<const double> delays_s, const PdpModel &pdp, double eta,
                            const DesignBudget &budget, const RadioConfig &cfg);

/// max over [tau_min, tau_eta] of a^2 eps_ub^2: grid plus golden-section refinement of the three largest
/// grid maxima.
double worst_case_error(std::span<const double> delays_s, const PdpModel &pdp, const DesignBudget &budget,
                        const RadioConfig &cfg, Execution ex = Execution::Parallel);

/// Greedy construction: anchor tap, then append the gap that just covers the first violation.
DelayPlan algorithm2_init(const DesignBudget &budget, const PdpModel &pdp, const RadioConfig &cfg);

struct RefineOptions
{
    int starts = 8;             // initial vector plus jittered copies
    int sweeps = 4;             // coordinate-descent passes per start
    double jitter = 0.15;       // relative perturbation of the interior gaps
    std::uint64_t seed = 2024;
};

struct RefineResult
{
    std::vector<double> delays_s;
    double worst_case_error = 0;
};

/// Local min-max placement of N taps with the first fixed at the anchor. Never worse than `init`.
RefineResult minimax_refine(std::span<const double> init_s, const DesignBudget &budget, const PdpModel &pdp,
                            const RadioConfig &cfg, const RefineOptions &opt = {});

/// Smallest tap count whose refined placement meets eta, seeded by algorithm2_init.
DelayPlan algorithm1_minimize_taps(const DesignBudget &budget, const PdpModel &pdp, const RadioConfig &cfg,
                                   const RefineOptions &opt = {});

} // namespace mtdsic
