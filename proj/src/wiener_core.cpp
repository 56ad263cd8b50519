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

#include "mtdsic/wiener_core.hpp"
#include "mtdsic/kernels.hpp"

#include "quadrature.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace mtdsic {

void TapBank::validate() const
{
    if (delays_s.empty())
        throw std::invalid_argument("tap bank must contain at least one tap");
    if (!(weight_bound > 0.0))
        throw std::invalid_argument("tap weight bound must be positive");
    for (std::size_t n = 0; n < delays_s.size(); ++n)
    {
        if (!(delays_s[n] >= 0.0) || !std::isfinite(delays_s[n]))
            throw std::invalid_argument("tap delays must be finite and non-negative");
        if (n > 0 && !(delays_s[n] > delays_s[n - 1]))
            throw std::invalid_argument(delays_s[n] == delays_s[n - 1] ? "duplicate tap delay"
                                                                        : "tap delays must be strictly increasing");
    }
    if (weights && static_cast<std::size_t>(weights->size()) != delays_s.size())
        throw std::invalid_argument("tap weights length differs from delays");
}

TapBank TapBank::uniform(std::size_t n, double spacing_s, double d_min_s, double w0)
{
    TapBank t;
    t.weight_bound = w0;
    for (std::size_t i = 0; i < n; ++i)
        t.delays_s.push_back(d_min_s + spacing_s * static_cast<double>(i));
    t.validate();
    return t;
}

namespace {

// Carrier phase 2 pi f_c d, reduced before scaling to keep precision at large f_c d.
cplx carrier_rotor(double carrier_hz, double delay_s)
{
    const double cycles = carrier_hz * delay_s;
    return std::polar(1.0, 2.0 * pi * (cycles - std::floor(cycles)));
}

RVec sinc_vector(double tau, std::span<const double> d, double bw)
{
    RVec r(static_cast<Eigen::Index>(d.size()));
    for (std::size_t n = 0; n < d.size(); ++n)
        r(static_cast<Eigen::Index>(n)) = nsinc(bw * (tau - d[n]));
    return r;
}

Eigen::MatrixXd sinc_gram(std::span<const double> d, double bw)
{
    const auto n = static_cast<Eigen::Index>(d.size());
    Eigen::MatrixXd s(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            s(i, j) = nsinc(bw * (d[static_cast<std::size_t>(i)] - d[static_cast<std::size_t>(j)]));
    return s;
}

bool needs_ridge(std::span<const double> d, double bw, const CMat &a)
{
    for (std::size_t n = 1; n < d.size(); ++n)
        if (bw * (d[n] - d[n - 1]) < 1e-4)
            return true;
    Eigen::LLT<CMat> llt(a);
    return llt.info() != Eigen::Success;
}

} // namespace

CorrelationSet build_correlations(const ChannelRealization &channel, const TapBank &taps, const RadioConfig &cfg)
{
    taps.validate();
    const auto n = static_cast<Eigen::Index>(taps.size());
    const double bw = cfg.bandwidth_hz;

    CVec rot(n);
    for (Eigen::Index i = 0; i < n; ++i)
        rot(i) = carrier_rotor(cfg.carrier_hz, taps.delays_s[static_cast<std::size_t>(i)]);

    CorrelationSet cs;
    cs.autocorr.resize(n, n);
    const Eigen::MatrixXd s = sinc_gram(taps.delays_s, bw);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            cs.autocorr(i, j) = rot(i) * s(i, j) * std::conj(rot(j));

    cs.crosscorr = CVec::Zero(n);
    for (const auto &p : channel.paths)
        for (Eigen::Index i = 0; i < n; ++i)
            cs.crosscorr(i) += p.gain * nsinc(bw * (p.delay_s - taps.delays_s[static_cast<std::size_t>(i)])) * rot(i);

    double sigma = 0.0;
    for (const auto &pi_ : channel.paths)
        for (const auto &pj : channel.paths)
            sigma += std::real(pi_.gain * std::conj(pj.gain)) * nsinc(bw * (pi_.delay_s - pj.delay_s));
    cs.si_self_power = std::max(sigma, 0.0);

    stabilize_correlations(cs, taps, cfg);
    return cs;
}

bool stabilize_correlations(CorrelationSet &corr, const TapBank &taps, const RadioConfig &cfg)
{
    if (!needs_ridge(taps.delays_s, cfg.bandwidth_hz, corr.autocorr))
        return false;
    const auto n = static_cast<double>(corr.autocorr.rows());
    corr.autocorr.diagonal().array() += 1e-12 * corr.autocorr.trace().real() / n;
    corr.regularized = true;
    return true;
}

double objective(const CorrelationSet &corr, const CVec &w)
{
    const double cross = std::real(w.dot(corr.crosscorr)); // Eigen's dot conjugates the first argument
    const double quad = std::real(w.dot(corr.autocorr * w));
    return corr.si_self_power - 2.0 * cross + quad;
}

double rho_eps(const CorrelationSet &corr, const CVec &w, double tx_power)
{
    if (w.size() != corr.crosscorr.size())
        throw std::invalid_argument("rho_eps: weight length mismatch");
    return tx_power * objective(corr, w);
}

CVec solve_unconstrained(const CorrelationSet &corr)
{
    Eigen::LDLT<CMat> ldlt(corr.autocorr);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("singular autocorrelation matrix");
    CVec w = ldlt.solve(corr.crosscorr);
    const double res = (corr.autocorr * w - corr.crosscorr).norm();
    if (!w.allFinite() || res > 1e-10 * std::max(1.0, corr.crosscorr.norm()) * std::max(1.0, w.norm()))
        throw std::runtime_error("singular autocorrelation matrix");
    return w;
}

RVec recover_multipliers(const CorrelationSet &corr, const CVec &w, double w0)
{
    const CVec g = corr.autocorr * w - corr.crosscorr;
    RVec lam = RVec::Zero(w.size());
    for (Eigen::Index n = 0; n < w.size(); ++n)
    {
        const double m2 = std::norm(w(n));
        if (m2 >= w0 * w0 * (1.0 - 1e-9))
            lam(n) = -std::real(std::conj(w(n)) * g(n)) / m2;
    }
    return lam;
}

KktResiduals kkt_residuals(const CorrelationSet &corr, const CVec &w, const RVec &lambda, double w0)
{
    KktResiduals k;
    CVec g = corr.autocorr * w - corr.crosscorr;
    for (Eigen::Index n = 0; n < w.size(); ++n)
    {
        g(n) += lambda(n) * w(n);
        k.feasibility = std::max(k.feasibility, std::abs(w(n)) - w0);
        k.dual = std::max(k.dual, -lambda(n));
        k.complementarity = std::max(k.complementarity, std::abs(lambda(n) * (w0 * w0 - std::norm(w(n)))));
    }
    k.stationarity = g.norm() / std::max(1.0, corr.crosscorr.norm());
    return k;
}

namespace {

void project(CVec &w, double w0)
{
    for (Eigen::Index n = 0; n < w.size(); ++n)
    {
        const double m = std::abs(w(n));
        if (m > w0)
            w(n) *= w0 / m;
    }
}

// Exact solve for a guessed active set: find lambda >= 0 on the active entries such that
// w(lambda) = (A + Lambda)^-1 c has |w_n| = w0 there. Newton on the secular form 1/w0 - 1/|w_n|,
// which is close to linear in lambda_n. Returns nothing when the guess is wrong.
std::optional<ConstrainedSolution> polish(const CorrelationSet &corr, const CVec &guess, double w0, double tol)
{
    const Eigen::Index n = guess.size();
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(guess(i)) >= w0 * (1.0 - 1e-3))
            active.push_back(i);
    if (active.empty())
        return std::nullopt;

    RVec lam = recover_multipliers(corr, guess, w0).cwiseMax(0.0);
    CVec w;

    for (int round = 0; round < 4; ++round)
    {
        const auto na = static_cast<Eigen::Index>(active.size());
        bool converged = false;
        for (int it = 0; it < 60 && na > 0; ++it)
        {
            CMat m = corr.autocorr;
            for (Eigen::Index i = 0; i < n; ++i)
                m(i, i) += lam(i);
            Eigen::LDLT<CMat> ldlt(m);
            if (ldlt.info() != Eigen::Success)
                return std::nullopt;
            w = ldlt.solve(corr.crosscorr);

            RVec h(na);
            for (Eigen::Index a = 0; a < na; ++a)
                h(a) = 1.0 / w0 - 1.0 / std::max(std::abs(w(active[static_cast<std::size_t>(a)])), 1e-300);
            if (h.cwiseAbs().maxCoeff() * w0 < 1e-15)
            {
                converged = true;
                break;
            }

            Eigen::MatrixXd jac(na, na);
            for (Eigen::Index b = 0; b < na; ++b)
            {
                const auto k = active[static_cast<std::size_t>(b)];
                CVec e = CVec::Zero(n);
                e(k) = 1.0;
                const CVec col = ldlt.solve(e); // column k of (A + Lambda)^-1
                for (Eigen::Index a = 0; a < na; ++a)
                {
                    const auto i = active[static_cast<std::size_t>(a)];
                    const double mag = std::abs(w(i));
                    jac(a, b) = -std::real(std::conj(w(i)) * col(i) * w(k)) / (mag * mag * mag);
                }
            }
            const RVec step = jac.fullPivLu().solve(-h);
            if (!step.allFinite())
                return std::nullopt;
            for (Eigen::Index a = 0; a < na; ++a)
            {
                auto &l = lam(active[static_cast<std::size_t>(a)]);
                l = std::max(0.0, l + step(a));
            }
        }
        if (!converged && na > 0)
            return std::nullopt;

        // Entries whose multiplier went to zero leave the active set; violated free entries join it.
        std::vector<Eigen::Index> next;
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const bool is_active = std::find(active.begin(), active.end(), i) != active.end();
            if (is_active && lam(i) <= 0.0)
            {
                changed = true;
                continue;
            }
            if (!is_active && std::abs(w(i)) > w0 * (1.0 + 1e-12))
                changed = true;
            if (is_active || std::abs(w(i)) > w0 * (1.0 + 1e-12))
                next.push_back(i);
        }
        active = std::move(next);
        if (!changed)
            break;
        if (active.empty())
            return std::nullopt;
    }

    for (auto i : active)
        w(i) *= w0 / std::abs(w(i));
    ConstrainedSolution sol;
    sol.weights = w;
    sol.multipliers = RVec::Zero(n);
    for (auto i : active)
        sol.multipliers(i) = lam(i);
    sol.kkt = kkt_residuals(corr, sol.weights, sol.multipliers, w0);
    if (sol.kkt.worst() > tol)
        return std::nullopt;
    sol.objective = objective(corr, sol.weights);
    sol.stage = SolverStage::ActiveSet;
    return sol;
}

} // namespace

namespace {

// Newton on the full KKT system with a fixed active set: (A + Lambda) w = c and |w_n| = w0 on the
// active entries. Minimum-norm steps keep it well defined when the free block of A is singular.
std::optional<ConstrainedSolution> kkt_refine(const CorrelationSet &corr, CVec w, RVec lam, double w0, double tol)
{
    const Eigen::Index n = w.size();
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(w(i)) >= w0 * (1.0 - 1e-6))
            active.push_back(i);
    const auto k = static_cast<Eigen::Index>(active.size());
    const CMat &a = corr.autocorr;

    for (int it = 0; it < 8; ++it)
    {
        CVec r = a * w - corr.crosscorr;
        for (Eigen::Index i = 0; i < n; ++i)
            r(i) += lam(i) * w(i);
        RVec f(2 * n + k);
        f << r.real(), r.imag(), RVec::Zero(k);
        for (Eigen::Index j = 0; j < k; ++j)
            f(2 * n + j) = 0.5 * (std::norm(w(active[static_cast<std::size_t>(j)])) - w0 * w0);
        if (f.cwiseAbs().maxCoeff() < 1e-17)
            break;

        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n + k, 2 * n + k);
        jac.topLeftCorner(n, n) = a.real();
        jac.block(0, n, n, n) = -a.imag();
        jac.block(n, 0, n, n) = a.imag();
        jac.block(n, n, n, n) = a.real();
        for (Eigen::Index i = 0; i < n; ++i)
        {
            jac(i, i) += lam(i);
            jac(n + i, n + i) += lam(i);
        }
        for (Eigen::Index j = 0; j < k; ++j)
        {
            const auto i = active[static_cast<std::size_t>(j)];
            jac(i, 2 * n + j) = w(i).real();
            jac(n + i, 2 * n + j) = w(i).imag();
            jac(2 * n + j, i) = w(i).real();
            jac(2 * n + j, n + i) = w(i).imag();
        }
        const RVec dz = jac.completeOrthogonalDecomposition().solve(-f);
        if (!dz.allFinite())
            return std::nullopt;
        for (Eigen::Index i = 0; i < n; ++i)
            w(i) += cplx(dz(i), dz(n + i));
        for (Eigen::Index j = 0; j < k; ++j)
            lam(active[static_cast<std::size_t>(j)]) += dz(2 * n + j);
    }

    for (auto i : active)
        w(i) *= w0 / std::abs(w(i));
    ConstrainedSolution sol;
    sol.weights = w;
    sol.multipliers = lam;
    sol.kkt = kkt_residuals(corr, w, lam, w0);
    sol.objective = objective(corr, w);
    sol.stage = SolverStage::Barrier;
    if (sol.kkt.worst() > tol)
        return std::nullopt;
    return sol;
}

// Minimize J(w) - mu sum log(w0^2 - |w_n|^2) for a decreasing mu, in real coordinates (Re w, Im w).
// Affine invariance of Newton makes it indifferent to the Gram conditioning that stalls gradients.
std::optional<ConstrainedSolution> barrier_newton(const CorrelationSet &corr, const CVec &start, double w0, double tol)
{
    const Eigen::Index n = start.size();
    const Eigen::Index m = 2 * n;
    const CMat &a = corr.autocorr;

    Eigen::MatrixXd ha(m, m);
    ha << a.real(), -a.imag(), a.imag(), a.real();
    ha *= 2.0;

    CVec w = start;
    for (Eigen::Index i = 0; i < n; ++i)
        if (std::abs(w(i)) > w0 * (1.0 - 1e-3))
            w(i) *= w0 * (1.0 - 1e-3) / std::abs(w(i));

    // Change of the barrier objective along a step, formed without the sigma - 2 Re(w^H c) cancellation
    // so that Armijo tests stay meaningful when J is many orders below sigma.
    auto barrier_change = [&](const CVec &x, const CVec &dx, double mu) {
        const CVec r = corr.crosscorr - a * x;
        double dj = -2.0 * std::real(dx.dot(r)) + std::real(dx.dot(a * dx));
        double dphi = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double s_old = w0 * w0 - std::norm(x(i));
            const double ds = -(2.0 * std::real(std::conj(x(i)) * dx(i)) + std::norm(dx(i)));
            if (!(s_old + ds > 0.0))
                return std::numeric_limits<double>::infinity();
            dphi -= std::log1p(ds / s_old);
        }
        return dj + mu * dphi;
    };

    const double scale = std::max(corr.si_self_power, 1e-300);
    double mu = std::max(objective(corr, w), 1e-6 * scale) / static_cast<double>(n);
    // Final duality gap n * mu at 1e-12 of the objective; smaller mu pushes the slack of active
    // entries below what w0^2 - |w_n|^2 resolves in double precision.
    const double mu_floor = 1e-20 * scale;
    int newton_steps = 0;

    for (;;)
    {
        for (int it = 0; it < 50; ++it, ++newton_steps)
        {
            const CVec g = a * w - corr.crosscorr;
            RVec grad(m);
            Eigen::MatrixXd h = ha;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const double re = w(i).real(), im = w(i).imag();
                const double s = w0 * w0 - re * re - im * im;
                grad(i) = 2.0 * g(i).real() + mu * 2.0 * re / s;
                grad(n + i) = 2.0 * g(i).imag() + mu * 2.0 * im / s;
                const double c0 = mu * 2.0 / s, c1 = mu * 4.0 / (s * s);
                h(i, i) += c0 + c1 * re * re;
                h(n + i, n + i) += c0 + c1 * im * im;
                h(i, n + i) += c1 * re * im;
                h(n + i, i) += c1 * re * im;
            }
            Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
            RVec dx = ldlt.solve(-grad);
            if (ldlt.info() != Eigen::Success || !dx.allFinite())
                return std::nullopt;
            const double decrement = -grad.dot(dx);
            // Stop at the round-off floor of the barrier value.
            if (decrement <= 1e-14 * (std::abs(objective(corr, w)) + mu * static_cast<double>(n)) || decrement < 0.0)
                break;

            CVec dw(n);
            for (Eigen::Index i = 0; i < n; ++i)
                dw(i) = cplx(dx(i), dx(n + i));
            double step = 1.0;
            for (; step > 1e-12; step *= 0.5)
                if (barrier_change(w, step * dw, mu) <= -0.25 * step * decrement)
                    break;
            if (step <= 1e-12)
                break; // round-off floor for this mu
            w += step * dw;
        }
        double min_slack = w0 * w0;
        for (Eigen::Index i = 0; i < n; ++i)
            min_slack = std::min(min_slack, w0 * w0 - std::norm(w(i)));
        const double mu_final = std::max(1e-12 * std::abs(objective(corr, w)) / static_cast<double>(n), mu_floor);
        if (mu <= mu_final || min_slack < 1e-10 * w0 * w0)
            break;
        mu = std::max(mu * 0.1, mu_final);
    }

    auto finish = [&](ConstrainedSolution &sol) {
        sol.kkt = kkt_residuals(corr, sol.weights, sol.multipliers, w0);
        sol.objective = objective(corr, sol.weights);
        sol.iterations = newton_steps;
        sol.stage = SolverStage::Barrier;
    };

    // Central-path point, multipliers mu / slack.
    ConstrainedSolution central;
    central.weights = w;
    central.multipliers.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        central.multipliers(i) = mu / (w0 * w0 - std::norm(w(i)));
    finish(central);

    // Entries pressed against the bound are snapped onto it; their multipliers then follow from
    // stationarity, which avoids dividing by slacks at the resolution limit of w0^2 - |w_n|^2.
    ConstrainedSolution snapped;
    snapped.weights = w;
    snapped.multipliers = RVec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
        if (w0 * w0 - std::norm(w(i)) <= 1e-6 * w0 * w0)
            snapped.weights(i) *= w0 / std::abs(w(i));
    snapped.multipliers = recover_multipliers(corr, snapped.weights, w0);
    finish(snapped);

    std::optional<ConstrainedSolution> best;
    for (auto *cand : {&snapped, &central})
        if (cand->kkt.worst() <= tol && (!best || cand->objective < best->objective))
            best = *cand;
    if (!best)
        if (auto p = kkt_refine(corr, snapped.weights, snapped.multipliers, w0, tol))
        {
            p->iterations = newton_steps;
            best = *p;
        }
    return best;
}

} // namespace

ConstrainedSolution solve_constrained(const CorrelationSet &corr, double w0, const SolverOptions &opt)
{
    if (!(w0 > 0.0))
        throw std::invalid_argument("weight bound must be positive");
    const Eigen::Index n = corr.crosscorr.size();
    if (corr.autocorr.rows() != n || corr.autocorr.cols() != n || n == 0)
        throw std::invalid_argument("correlation set dimensions are inconsistent");

    Eigen::LDLT<CMat> ldlt(corr.autocorr);
    CVec w_unc;
    if (ldlt.info() == Eigen::Success)
    {
        w_unc = ldlt.solve(corr.crosscorr);
        const bool accurate =
            (corr.autocorr * w_unc - corr.crosscorr).norm() <= 1e-12 * std::max(1.0, corr.crosscorr.norm());
        if (w_unc.allFinite() && accurate && w_unc.cwiseAbs().maxCoeff() <= w0)
        {
            ConstrainedSolution sol;
            sol.weights = w_unc;
            sol.multipliers = RVec::Zero(n);
            sol.kkt = kkt_residuals(corr, sol.weights, sol.multipliers, w0);
            sol.objective = objective(corr, sol.weights);
            return sol;
        }
    }

    const double lmax =
        Eigen::SelfAdjointEigenSolver<CMat>(corr.autocorr, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double step = 1.0 / std::max(lmax, 1e-300);
    const double scale = std::max(1.0, corr.crosscorr.norm());

    CVec w = CVec::Zero(n);
    double f = objective(corr, w);
    if (w_unc.size() == n && w_unc.allFinite())
    {
        CVec start = w_unc;
        project(start, w0);
        if (const double fs = objective(corr, start); fs < f)
        {
            w = start;
            f = fs;
        }
    }

    auto accept = [&](ConstrainedSolution &s, int it) -> bool {
        if (s.objective > f + 1e-14 * std::max(std::abs(f), 1e-300))
            return false;
        s.iterations += it;
        return true;
    };

    CVec y = w;
    double t = 1.0;
    double f_prev = f;
    double residual = std::numeric_limits<double>::infinity();
    double checkpoint = residual;
    int it = 0;
    bool converged = false;
    for (; it < opt.max_iterations; ++it)
    {
        CVec w_next = y - step * (corr.autocorr * y - corr.crosscorr);
        project(w_next, w0);
        const double f_next = objective(corr, w_next);

        if (f_next > f)
        {
            if (t == 1.0)
                break; // no descent even without momentum: round-off floor
            // Adaptive restart: momentum overshoots, fall back to a plain gradient step.
            y = w;
            t = 1.0;
            continue;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = w_next + ((t - 1.0) / t_next) * (w_next - w);
        w = w_next;
        t = t_next;
        f_prev = f;
        f = f_next;

        CVec fixed = w - step * (corr.autocorr * w - corr.crosscorr);
        project(fixed, w0);
        residual = (fixed - w).norm() / step / scale;
        if (residual <= opt.tol)
        {
            converged = true;
            break;
        }

        if (opt.polish_every > 0 && (it + 1) % opt.polish_every == 0)
            if (auto p = polish(corr, w, w0, opt.tol); p && accept(*p, it + 1))
                return *p;

        if (opt.stall_window > 0 && (it + 1) % opt.stall_window == 0)
        {
            if (residual > 0.5 * checkpoint)
                break;
            checkpoint = residual;
        }
    }

    ConstrainedSolution sol;
    sol.weights = w;
    sol.multipliers = recover_multipliers(corr, w, w0);
    sol.kkt = kkt_residuals(corr, w, sol.multipliers, w0);
    sol.objective = f;
    sol.iterations = it;
    sol.stage = SolverStage::Gradient;
    if (converged && sol.kkt.worst() <= std::max(opt.tol, 1e-8))
        return sol;

    if (auto p = polish(corr, w, w0, opt.tol); p && accept(*p, it))
        return *p;
    // Near-singular Gram matrices put the last digits of the stationarity residual out of reach; the
    // barrier finish is held to the same floor as the gradient stage.
    if (auto b = barrier_newton(corr, w, w0, std::max(opt.tol, 1e-8)); b && accept(*b, it))
        return *b;

    if (it >= opt.max_iterations && std::abs(f_prev - f) > 1e-12 * std::max(std::abs(f), 1e-300))
        throw ConvergenceError("constrained solver did not converge", w, sol.kkt.worst());
    if (sol.kkt.worst() > std::max(opt.tol, 1e-8))
        throw ConvergenceError("constrained solver stalled above the KKT tolerance", w, sol.kkt.worst());
    return sol;
}

double per_path_error_lb(double tau_s, const TapBank &taps, const RadioConfig &cfg)
{
    const double t[1] = {tau_s};
    return per_path_error_lb(std::span<const double>(t), taps, cfg)[0];
}

std::vector<double> per_path_error_lb(std::span<const double> taus_s, const TapBank &taps, const RadioConfig &cfg)
{
    taps.validate();
    // 1 - r^T S^-1 r is the squared distance from sinc(B(t - tau)) to the span of the tap kernels.
    // The Gram form loses everything when taps sit far inside 1/B, so the projection is done by QR
    // on a quadrature discretization of the band, where inner products reduce to nsinc exactly.
    return detail::bandlimited_projection_residuals(taps.delays_s, taus_s, cfg.bandwidth_hz);
}

namespace {

// min 1/2 v^T S v - r^T v subject to |v_n| <= u: primal active-set method on the box. The phase-free
// single-path problem is real, so the modulus bound is a box.
// Backward-stable sub-solves keep the stationarity residual at round-off even when S is nearly singular.
RVec box_qp(const Eigen::MatrixXd &s, const RVec &r, double u)
{
    const Eigen::Index n = r.size();
    enum State : int { Free = 0, Lower = -1, Upper = 1 };
    std::vector<int> state(static_cast<std::size_t>(n), Free);
    RVec v = RVec::Zero(n);

    auto subsolve = [&]() {
        std::vector<Eigen::Index> f, b;
        for (Eigen::Index i = 0; i < n; ++i)
            (state[static_cast<std::size_t>(i)] == Free ? f : b).push_back(i);
        RVec cand = v;
        for (auto i : b)
            cand(i) = state[static_cast<std::size_t>(i)] * u;
        if (f.empty())
            return cand;
        const auto nf = static_cast<Eigen::Index>(f.size());
        Eigen::MatrixXd sff(nf, nf);
        RVec rhs(nf);
        for (Eigen::Index a = 0; a < nf; ++a)
        {
            rhs(a) = r(f[static_cast<std::size_t>(a)]);
            for (auto i : b)
                rhs(a) -= s(f[static_cast<std::size_t>(a)], i) * cand(i);
            for (Eigen::Index c = 0; c < nf; ++c)
                sff(a, c) = s(f[static_cast<std::size_t>(a)], f[static_cast<std::size_t>(c)]);
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(sff);
        RVec x = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success || !x.allFinite())
        {
            sff.diagonal().array() += 1e-12 * sff.trace() / static_cast<double>(nf);
            x = sff.ldlt().solve(rhs);
        }
        for (Eigen::Index a = 0; a < nf; ++a)
            cand(f[static_cast<std::size_t>(a)]) = x(a);
        return cand;
    };

    // Multipliers below the round-off of S v - r carry no sign information; freeing on them cycles.
    const double grad_noise =
        64.0 * std::numeric_limits<double>::epsilon() * (r.cwiseAbs().sum() + u * s.cwiseAbs().rowwise().sum().maxCoeff());

    for (Eigen::Index it = 0; it < 20 * n + 50; ++it)
    {
        const RVec cand = subsolve();
        double alpha = 1.0;
        Eigen::Index block = -1;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            if (state[static_cast<std::size_t>(i)] != Free || std::abs(cand(i)) <= u)
                continue;
            const double bound = cand(i) > 0.0 ? u : -u;
            const double t = (bound - v(i)) / (cand(i) - v(i));
            if (t < alpha)
                alpha = std::max(t, 0.0), block = i;
        }
        if (block < 0)
        {
            v = cand;
            const RVec g = s * v - r;
            Eigen::Index worst = -1;
            double most_negative = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const int st = state[static_cast<std::size_t>(i)];
                const double mult = st == Upper ? -g(i) : st == Lower ? g(i) : 0.0;
                if (mult < most_negative)
                    most_negative = mult, worst = i;
            }
            if (worst < 0 || most_negative > -grad_noise)
                return v;
            state[static_cast<std::size_t>(worst)] = Free;
            continue;
        }
        v += alpha * (cand - v);
        state[static_cast<std::size_t>(block)] = cand(block) > 0.0 ? Upper : Lower;
        v(block) = state[static_cast<std::size_t>(block)] * u;
    }
    // Degenerate cycling at extreme packing: finish with cyclic coordinate descent from the current
    // feasible point, which decreases the objective monotonically and converges on a convex box QP.
    RVec g = s * v - r;
    for (int sweep = 0; sweep < 20000; ++sweep)
    {
        double moved = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
        {
            const double vi = std::clamp(v(i) - g(i) / s(i, i), -u, u);
            const double dv = vi - v(i);
            if (dv == 0.0)
                continue;
            g += dv * s.col(i);
            v(i) = vi;
            moved = std::max(moved, std::abs(dv));
        }
        if (moved <= 1e-14 * u)
            break;
    }
    return v;
}

} // namespace

RVec per_path_weights(double tau_s, const TapBank &taps, double w_eps, const RadioConfig &cfg)
{
    taps.validate();
    if (!(w_eps > 0.0))
        throw std::invalid_argument("per-path weight bound must be positive");
    const Eigen::MatrixXd s = sinc_gram(taps.delays_s, cfg.bandwidth_hz);
    const RVec r = sinc_vector(tau_s, taps.delays_s, cfg.bandwidth_hz);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    if (ldlt.info() == Eigen::Success)
    {
        const RVec v = ldlt.solve(r);
        const bool accurate = (s * v - r).norm() <= 1e-12 * std::max(1.0, r.norm());
        if (v.allFinite() && accurate && v.cwiseAbs().maxCoeff() <= w_eps)
            return v;
    }
    return box_qp(s, r, w_eps);
}

double per_path_error_ub(double tau_s, const TapBank &taps, double w_eps, const RadioConfig &cfg)
{
    const RVec v = per_path_weights(tau_s, taps, w_eps, cfg);
    const double lb = per_path_error_lb(tau_s, taps, cfg);
    if (v.cwiseAbs().maxCoeff() < w_eps)
        return lb; // unconstrained optimum is feasible
    const Eigen::MatrixXd s = sinc_gram(taps.delays_s, cfg.bandwidth_hz);
    const RVec r = sinc_vector(tau_s, taps.delays_s, cfg.bandwidth_hz);
    const double j = 1.0 - 2.0 * v.dot(r) + v.dot(s * v);
    return std::clamp(j, lb, 1.0);
}

double normal_q(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double beta_m(int m)
{
    if (m < 1)
        throw std::invalid_argument("beta_m requires M >= 1");
    return 1.0 - 2.0 * normal_q((m + 1.0) / std::sqrt(static_cast<double>(m)));
}

double per_path_bound(double w0, int m, double power_gain) { return w0 / ((m + 1.0) * std::sqrt(power_gain)); }

namespace {

struct PathList
{
    std::vector<double> delays;
    std::vector<double> powers;
};

PathList mean_paths(const ChannelProfile &profile)
{
    const auto ch = mean_power_channel(profile);
    PathList pl;
    for (const auto &p : ch.paths)
    {
        pl.delays.push_back(p.delay_s);
        pl.powers.push_back(std::norm(p.gain));
    }
    return pl;
}

} // namespace

ErrorReport stochastic_bounds(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg)
{
    taps.validate();
    const auto pl = mean_paths(profile);
    const int m = static_cast<int>(profile.clusters());

    ErrorReport rep;
    rep.clusters = m;
    rep.delays_s = pl.delays;
    rep.powers = pl.powers;
    rep.beta_m = beta_m(m);
    auto errs = per_path_errors(pl.delays, pl.powers, taps, m, cfg);
    rep.per_path_lb = std::move(errs.lb);
    rep.per_path_ub = std::move(errs.ub);

    std::vector<double> lo(pl.delays.size()), hi(pl.delays.size());
    for (std::size_t i = 0; i < pl.delays.size(); ++i)
    {
        lo[i] = pl.powers[i] * rep.per_path_lb[i];
        hi[i] = pl.powers[i] * rep.per_path_ub[i];
    }
    const double rho_t = cfg.tx_power_mw();
    const double sum_lo = pairwise_sum<double>(lo);
    rep.bound_lo = rho_t * sum_lo;
    rep.bound_hi = rho_t / rep.beta_m * pairwise_sum<double>(hi);
    rep.sic_ceiling_db = lin_to_db(rho_t / (cfg.tx_noise_power_mw() * sum_lo));

    const auto corr = build_correlations(mean_power_channel(profile), taps, cfg);
    rep.rho_eps = rho_eps(corr, solve_constrained(corr, taps.weight_bound).weights, rho_t);
    return rep;
}

double empirical_winfnorm_probability(const ChannelProfile &profile, const TapBank &taps, const RadioConfig &cfg,
                                      std::size_t trials, std::uint64_t seed)
{
    taps.validate();
    if (trials < 1000)
        throw std::invalid_argument("empirical_winfnorm_probability needs at least 1000 trials");
    const auto pl = mean_paths(profile);
    const int m = static_cast<int>(profile.clusters());
    const auto n = static_cast<Eigen::Index>(taps.size());

    // Per-path phase-free weights; the carrier rotation is common to all paths and drops out of |w_n|.
    Eigen::MatrixXd v(n, static_cast<Eigen::Index>(pl.delays.size()));
    for (std::size_t i = 0; i < pl.delays.size(); ++i)
        v.col(static_cast<Eigen::Index>(i)) =
            per_path_weights(pl.delays[i], taps, per_path_bound(taps.weight_bound, m, pl.powers[i]), cfg);

    std::size_t hits = 0;
    for (std::size_t t = 0; t < trials; ++t)
    {
        const auto ch = realize_channel(profile, derive_seed(seed, t));
        CVec alpha(static_cast<Eigen::Index>(ch.paths.size()));
        for (std::size_t i = 0; i < ch.paths.size(); ++i)
            alpha(static_cast<Eigen::Index>(i)) = ch.paths[i].gain;
        const CVec w = v.cast<cplx>() * alpha;
        if (w.cwiseAbs().maxCoeff() <= taps.weight_bound)
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(trials);
}

} // namespace mtdsic
