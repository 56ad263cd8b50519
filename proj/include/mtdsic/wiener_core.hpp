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

#include "mtdsic/radio_model.hpp"

#include <optional>

namespace mtdsic {

/// Tap delays d (strictly increasing), modulus bound w0 and optional weights.
struct TapBank
{
    std::vector<double> delays_s;
    double weight_bound = 1.0;
    std::optional<CVec> weights;

    /// Rejects negative, non-increasing or duplicate delays and a non-positive bound.
    void validate() const;
    std::size_t size() const { return delays_s.size(); }

    /// N taps at d_min, d_min + spacing, ...
    static TapBank uniform(std::size_t n, double spacing_s, double d_min_s, double w0);
};

/// Quadratic model of the residual: J(w) = sigma - 2 Re(w^H c) + w^H A w, normalized to unit Tx power.
struct CorrelationSet
{
    CMat autocorr;           // A, Hermitian, unit diagonal, PSD
    CVec crosscorr;          // c, so that the unconstrained optimum solves A w = c
    double si_self_power = 0; // sigma
    bool regularized = false; // ridge added because the Gram matrix was numerically singular
};

CorrelationSet build_correlations(const ChannelRealization &channel, const TapBank &taps, const RadioConfig &cfg);

/// Adds a ridge of 1e-12 trace(A) / N when taps sit closer than 1e-4 / B or A fails a Cholesky test.
/// Returns whether it did. build_correlations applies it; empirical Gram matrices should too.
bool stabilize_correlations(CorrelationSet &corr, const TapBank &taps, const RadioConfig &cfg);

/// Normalized objective J(w). Multiply by the Tx power for rho_eps.
double objective(const CorrelationSet &corr, const CVec &w);

double rho_eps(const CorrelationSet &corr, const CVec &w, double tx_power);

CVec solve_unconstrained(const CorrelationSet &corr);

struct KktResiduals
{
    double stationarity = 0;  // ||(A + Lambda) w - c||, relative to max(1, ||c||)
    double feasibility = 0;   // max(0, max_n |w_n| - w0)
    double dual = 0;          // max(0, -min_n lambda_n)
    double complementarity = 0; // max_n |lambda_n (w0^2 - |w_n|^2)|

    double worst() const { return std::max({stationarity, feasibility, dual, complementarity}); }
};

/// Which stage produced the answer.
enum class SolverStage
{
    Unconstrained, // unconstrained optimum already feasible
    Gradient,      // accelerated projected gradient met the fixed-point tolerance
    ActiveSet,     // exact solve on the active set guessed by the gradient iterates
    Barrier        // log-barrier Newton finish for near-singular Gram matrices
};

struct ConstrainedSolution
{
    CVec weights;
    RVec multipliers;
    double objective = 0;
    int iterations = 0;
    SolverStage stage = SolverStage::Unconstrained;
    KktResiduals kkt;
};

struct SolverOptions
{
    double tol = 1e-10;
    int max_iterations = 20000;
    int polish_every = 100;
    int stall_window = 500; // gradient stage hands over when the residual stops halving in this many steps
};

/// Minimize J(w) subject to |w_n| <= w0. Accelerated projected gradient with adaptive restart,
/// periodically tried against an exact active-set solve. Taps packed far inside 1/B make the Gram
/// matrix numerically singular and first-order progress stalls at round-off; a log-barrier Newton
/// stage finishes those. Throws ConvergenceError when no stage meets the KKT tolerance.
ConstrainedSolution solve_constrained(const CorrelationSet &corr, double w0, const SolverOptions &opt = {});

/// Multipliers from the stationarity condition, zero where the bound is inactive.
RVec recover_multipliers(const CorrelationSet &corr, const CVec &w, double w0);

KktResiduals kkt_residuals(const CorrelationSet &corr, const CVec &w, const RVec &lambda, double w0);

/// Unconstrained single-path error 1 - r^T S^-1 r for a unit path at tau. Independent of f_c.
double per_path_error_lb(double tau_s, const TapBank &taps, const RadioConfig &cfg);

/// Same for many delays; one factorization of the tap subspace.
std::vector<double> per_path_error_lb(std::span<const double> taus_s, const TapBank &taps, const RadioConfig &cfg);

/// Single-path error with weights bounded by w_eps in modulus.
double per_path_error_ub(double tau_s, const TapBank &taps, double w_eps, const RadioConfig &cfg);

/// Optimal phase-free single-path weights (real) under the modulus bound w_eps.
RVec per_path_weights(double tau_s, const TapBank &taps, double w_eps, const RadioConfig &cfg);

/// Standard normal tail probability Q(x).
double normal_q(double x);

/// 1 - 2 Q((M + 1) / sqrt(M)).
double beta_m(int m);

/// Per-path bound w_eps = w0 / ((M + 1) sqrt(a^2)).
double per_path_bound(double w0, int m, double power_gain);

struct ErrorReport
{
    std::vector<double> delays_s;       // path 0 is the direct leakage
    std::vector<double> powers;         // a_m^2
    std::vector<double> per_path_lb;
    std::vector<double> per_path_ub;
    double rho_eps = 0;                 // deterministic MMSE on the mean-power channel, mW
    double bound_lo = 0;                // mW
    double bound_hi = 0;                // mW
    double beta_m = 0;
    double sic_ceiling_db = 0;
    int clusters = 0;                   // M

    double scr_lo_db(double tx_power_mw) const { return lin_to_db(tx_power_mw / bound_hi); }
    double scr_hi_db(double tx_power_mw) const { return lin_to_db(tx_power_mw / bound_lo); }
};

ErrorReport stochastic_bounds(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg);

/// Monte Carlo estimate of P{ || sum_m alpha_m w_m ||_inf <= w0 } with per-path bounded weights.
double empirical_winfnorm_probability(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                                      std::size_t trials, std::uint64_t seed);

} // namespace mtdsic
