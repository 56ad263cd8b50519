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

#include "oracles.hpp"

#include "mtdsic/kernels.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace mtdsic;

namespace {

// Random channel with `paths` paths spread over [0.5, 1.5 + paths] / B and random taps.
struct Instance
{
    ChannelRealization channel;
    TapBank taps;
};

Instance random_instance(std::mt19937_64 &gen, std::size_t n_taps, std::size_t n_paths, const RadioConfig &cfg,
                         double min_gap_b = 0.3)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, std::sqrt(0.5));
    const double ts = 1.0 / cfg.bandwidth_hz;
    Instance in;
    double d = (0.2 + u(gen)) * ts;
    for (std::size_t n = 0; n < n_taps; ++n)
    {
        in.taps.delays_s.push_back(d);
        d += (min_gap_b + u(gen)) * ts;
    }
    for (std::size_t m = 0; m < n_paths; ++m)
        in.channel.paths.push_back({(0.1 + u(gen) * (n_taps + 0.5)) * ts, cplx(nd(gen), nd(gen)) * 0.3});
    std::sort(in.channel.paths.begin(), in.channel.paths.end(),
              [](const Path &a, const Path &b) { return a.delay_s < b.delay_s; });
    return in;
}

oracle::Quadratic to_oracle(const CorrelationSet &cs)
{
    oracle::Quadratic q;
    q.n = static_cast<std::size_t>(cs.crosscorr.size());
    q.sigma = cs.si_self_power;
    for (std::size_t i = 0; i < q.n; ++i)
    {
        q.c.emplace_back(cs.crosscorr(i).real(), cs.crosscorr(i).imag());
        for (std::size_t j = 0; j < q.n; ++j)
            q.a.emplace_back(cs.autocorr(i, j).real(), cs.autocorr(i, j).imag());
    }
    return q;
}

double max_modulus(const CVec &w) { return w.cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("normalized sinc")
{
    CHECK(nsinc(0.0) == 1.0);
    CHECK(nsinc(0.5) == doctest::Approx(2.0 / pi).epsilon(1e-15));
    CHECK(nsinc(1.5) == doctest::Approx(-0.2122).epsilon(1e-3));
    CHECK(1.0 / (1.0 + nsinc(1.5)) == doctest::Approx(1.27).epsilon(1e-3));
    for (int k = 1; k < 6; ++k)
        CHECK(std::fabs(nsinc(k)) < 1e-15);
    for (double x : {0.1, 0.77, 2.3, 11.9})
    {
        CHECK(nsinc(x) == nsinc(-x));
        CHECK(nsinc(x) == doctest::Approx(static_cast<double>(oracle::sinc(x))).epsilon(1e-14));
    }
}

TEST_CASE("tap bank validation")
{
    TapBank t{{1e-9, 2e-9}, 1.0, {}};
    CHECK_NOTHROW(t.validate());
    CHECK_THROWS_WITH(TapBank({{1e-9, 1e-9}, 1.0, {}}).validate(), "duplicate tap delay");
    CHECK_THROWS(TapBank({{2e-9, 1e-9}, 1.0, {}}).validate());
    CHECK_THROWS(TapBank({{-1e-9}, 1.0, {}}).validate());
    CHECK_THROWS(TapBank({{}, 1.0, {}}).validate());
    CHECK_THROWS(TapBank({{1e-9}, 0.0, {}}).validate());
    const auto u = TapBank::uniform(8, 1.5e-9, 0.5e-9, 1.0);
    CHECK(u.size() == 8);
    CHECK(u.delays_s.back() == doctest::Approx(0.5e-9 + 7 * 1.5e-9));
}

TEST_CASE("correlation structure")
{
    const RadioConfig cfg;
    const double ts = 1.0 / cfg.bandwidth_hz;

    SUBCASE("Nyquist-spaced taps give a diagonal Gram matrix")
    {
        ChannelRealization ch{{{0.3e-9, {0.1, 0.0}}}};
        const auto cs = build_correlations(ch, TapBank{{1e-9, 1e-9 + ts}, 1.0, {}}, cfg);
        CHECK(std::abs(cs.autocorr(0, 1)) < 1e-15);
        CHECK(std::abs(cs.autocorr(0, 0) - 1.0) < 1e-15);
        CHECK(std::abs(cs.autocorr(1, 1) - 1.0) < 1e-15);
        // Identity solve: weights equal the cross-correlations.
        const CVec w = solve_unconstrained(cs);
        CHECK((w - cs.crosscorr).norm() < 1e-14);
    }
    SUBCASE("single path on a single tap")
    {
        const double d = 2.7e-9;
        const cplx a(0.2, -0.05);
        ChannelRealization ch{{{d, a}}};
        const auto cs = build_correlations(ch, TapBank{{d}, 1.0, {}}, cfg);
        const cplx rot = std::polar(1.0, 2 * pi * cfg.carrier_hz * d);
        CHECK(std::abs(cs.autocorr(0, 0) - 1.0) < 1e-15);
        CHECK(std::abs(cs.crosscorr(0) - a * rot) < 1e-14);
        CHECK(cs.si_self_power == doctest::Approx(std::norm(a)));
    }
    SUBCASE("random instances are Hermitian and PSD with unit diagonal")
    {
        std::mt19937_64 gen(11);
        for (int trial = 0; trial < 20; ++trial)
        {
            const auto in = random_instance(gen, 3, 3, cfg, 0.05);
            const auto cs = build_correlations(in.channel, in.taps, cfg);
            CHECK((cs.autocorr - cs.autocorr.adjoint()).norm() < 1e-14);
            for (Eigen::Index i = 0; i < cs.autocorr.rows(); ++i)
                CHECK(std::abs(cs.autocorr(i, i) - 1.0) < 1e-14);
            Eigen::SelfAdjointEigenSolver<CMat> es(cs.autocorr);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);
            CHECK(cs.si_self_power >= 0);
        }
    }
    SUBCASE("near-coincident taps are regularized, not rejected")
    {
        ChannelRealization ch{{{1e-9, {0.1, 0.0}}}};
        const auto cs = build_correlations(ch, TapBank{{1e-9, 1e-9 + 1e-5 * ts}, 1.0, {}}, cfg);
        CHECK(cs.regularized);
        CHECK_NOTHROW(solve_unconstrained(cs));
    }
}

TEST_CASE("unconstrained solution")
{
    const RadioConfig cfg;
    const double ts = 1.0 / cfg.bandwidth_hz;

    SUBCASE("taps on every path delay reconstruct exactly")
    {
        const auto prof = profile_from_delays({0.3, 1.1, 2.6, 4.0}, 10e-9, PdpModel{}, cfg);
        const auto ch = realize_channel(prof, 9);
        TapBank taps;
        for (const auto &p : ch.paths)
            taps.delays_s.push_back(p.delay_s);
        std::sort(taps.delays_s.begin(), taps.delays_s.end());
        taps.delays_s.erase(std::unique(taps.delays_s.begin(), taps.delays_s.end()), taps.delays_s.end());
        REQUIRE(taps.delays_s.size() == ch.paths.size());
        {
            const auto cs = build_correlations(ch, taps, cfg);
            const CVec w = solve_unconstrained(cs);
            CHECK(rho_eps(cs, w, cfg.tx_power_mw()) < 1e-9 * cfg.tx_power_mw() * cs.si_self_power);
            for (std::size_t m = 0; m < ch.paths.size(); ++m)
            {
                const cplx rot = std::polar(1.0, 2 * pi * cfg.carrier_hz * ch.paths[m].delay_s);
                CHECK(std::abs(w(static_cast<Eigen::Index>(m)) - ch.paths[m].gain * rot) < 1e-6 * std::abs(ch.paths[m].gain) + 1e-12);
            }
        }
    }
    SUBCASE("mid-gap path on two Nyquist taps: both moduli 2/pi")
    {
        const double d1 = 1e-9, d2 = d1 + ts;
        ChannelRealization ch{{{0.5 * (d1 + d2), {1.0, 0.0}}}};
        const auto cs = build_correlations(ch, TapBank{{d1, d2}, 10.0, {}}, cfg);
        const CVec w = solve_unconstrained(cs);
        // 2x2 hand solve: S = I, r = (sinc(1/2), sinc(1/2)).
        const double want = static_cast<double>(oracle::sinc(0.5L));
        CHECK(std::abs(w(0)) == doctest::Approx(want).epsilon(1e-12));
        CHECK(std::abs(w(1)) == doctest::Approx(want).epsilon(1e-12));
        CHECK(objective(cs, w) == doctest::Approx(1 - 8 / (pi * pi)).epsilon(1e-12));
    }
    SUBCASE("rho_eps algebra")
    {
        std::mt19937_64 gen(5);
        for (int trial = 0; trial < 10; ++trial)
        {
            const auto in = random_instance(gen, 4, 5, cfg);
            const auto cs = build_correlations(in.channel, in.taps, cfg);
            const CVec w = solve_unconstrained(cs);
            const double rho = 7.0;
            const double direct = rho * (cs.si_self_power - std::real(cs.crosscorr.dot(cs.autocorr.ldlt().solve(cs.crosscorr))));
            CHECK(rho_eps(cs, w, rho) == doctest::Approx(direct).epsilon(1e-9));
            CHECK(rho_eps(cs, CVec::Zero(4), rho) == doctest::Approx(rho * cs.si_self_power));
            CHECK((cs.autocorr * w - cs.crosscorr).norm() < 1e-10 * std::max(1.0, cs.crosscorr.norm()));
        }
    }
}

TEST_CASE("constrained solution")
{
    const RadioConfig cfg;
    std::mt19937_64 gen(17);

    SUBCASE("inactive bound returns the unconstrained optimum with zero multipliers")
    {
        const auto in = random_instance(gen, 4, 4, cfg);
        const auto cs = build_correlations(in.channel, in.taps, cfg);
        const CVec wu = solve_unconstrained(cs);
        const auto sol = solve_constrained(cs, 1.5 * max_modulus(wu));
        CHECK((sol.weights - wu).norm() < 1e-12);
        CHECK(sol.multipliers.cwiseAbs().maxCoeff() == 0.0);
        CHECK(sol.stage == SolverStage::Unconstrained);
    }
    SUBCASE("vanishing bound drives the weights to zero")
    {
        const auto in = random_instance(gen, 4, 4, cfg);
        const auto cs = build_correlations(in.channel, in.taps, cfg);
        const auto sol = solve_constrained(cs, 1e-12);
        CHECK(max_modulus(sol.weights) <= 1e-12 * (1 + 1e-9));
        CHECK(sol.objective == doctest::Approx(cs.si_self_power).epsilon(1e-9));
        CHECK_THROWS(solve_constrained(cs, 0.0));
    }
    SUBCASE("binding bound matches the projected-gradient oracle and certifies KKT")
    {
        for (int trial = 0; trial < 10; ++trial)
        {
            const auto in = random_instance(gen, 4, 5, cfg);
            const auto cs = build_correlations(in.channel, in.taps, cfg);
            const CVec wu = solve_unconstrained(cs);
            const double w0 = 0.6 * max_modulus(wu);
            const auto sol = solve_constrained(cs, w0);
            const auto q = to_oracle(cs);
            const auto wref = oracle::projected_gradient(q, w0, 200000);
            const double f_ref = static_cast<double>(q.value(wref));
            CHECK(sol.objective == doctest::Approx(f_ref).epsilon(1e-8));
            CHECK(sol.objective >= objective(cs, wu) - 1e-15);
            CHECK(max_modulus(sol.weights) <= w0 * (1 + 1e-9));
            CHECK(sol.kkt.worst() < 1e-8);
            CHECK(sol.multipliers.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("carrier frequency does not change unconstrained errors")
{
    std::mt19937_64 gen(23);
    RadioConfig base;
    for (int trial = 0; trial < 5; ++trial)
    {
        const auto in = random_instance(gen, 5, 6, base);
        std::vector<double> lb, rho;
        for (double fc : {1e9, 5.6e9, 28e9})
        {
            RadioConfig cfg = base;
            cfg.carrier_hz = fc;
            const auto cs = build_correlations(in.channel, in.taps, cfg);
            rho.push_back(rho_eps(cs, solve_unconstrained(cs), cfg.tx_power_mw()));
            lb.push_back(per_path_error_lb(in.channel.paths[0].delay_s, in.taps, cfg));
        }
        CHECK(rho[1] == doctest::Approx(rho[0]).epsilon(1e-10));
        CHECK(rho[2] == doctest::Approx(rho[0]).epsilon(1e-10));
        CHECK(lb[1] == lb[0]);
        CHECK(lb[2] == lb[0]);
    }
}

TEST_CASE("adding a tap never increases the unconstrained error")
{
    const RadioConfig cfg;
    std::mt19937_64 gen(29);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto in = random_instance(gen, 5, 6, cfg);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n <= in.taps.size(); ++n)
        {
            TapBank sub{{in.taps.delays_s.begin(), in.taps.delays_s.begin() + static_cast<long>(n)}, 1.0, {}};
            const auto cs = build_correlations(in.channel, sub, cfg);
            const double j = objective(cs, solve_unconstrained(cs));
            CHECK(j <= prev + 1e-12);
            prev = j;
        }
    }
}

TEST_CASE("per-path errors")
{
    const RadioConfig cfg;
    const double ts = 1.0 / cfg.bandwidth_hz;
    const TapBank two{{1e-9, 1e-9 + ts}, 1.0, {}};

    CHECK(per_path_error_lb(1e-9, two, cfg) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::fabs(per_path_error_lb(1e-9 + ts, two, cfg)) < 1e-12);
    CHECK(per_path_error_lb(1e-9 + 0.5 * ts, two, cfg) == doctest::Approx(1 - 8 / (pi * pi)).epsilon(1e-10));
    CHECK(1 - 8 / (pi * pi) == doctest::Approx(0.1894).epsilon(1e-3));
    CHECK(per_path_error_lb(1e-9 + 400 * ts, two, cfg) > 0.999);

    SUBCASE("lb agrees with the long-double projection oracle")
    {
        std::mt19937_64 gen(31);
        for (int trial = 0; trial < 10; ++trial)
        {
            const auto in = random_instance(gen, 5, 1, cfg);
            std::vector<oracle::ld> d(in.taps.delays_s.begin(), in.taps.delays_s.end());
            for (double tau = 0.3e-9; tau < in.taps.delays_s.back() + 2 * ts; tau += 0.37 * ts)
                CHECK(per_path_error_lb(tau, in.taps, cfg) ==
                      doctest::Approx(static_cast<double>(oracle::projection_error(tau, d, cfg.bandwidth_hz))).epsilon(1e-9).scale(1e-12));
        }
    }
    SUBCASE("two taps under a loose bound: ub equals lb")
    {
        for (double x : {0.3, 0.9, 1.5, 2.0})
        {
            const TapBank t{{1e-9, 1e-9 + x * ts}, 1.0, {}};
            for (double f : {0.0, 0.25, 0.5, 0.8, 1.0})
            {
                const double tau = 1e-9 + f * x * ts;
                CHECK(per_path_error_ub(tau, t, 1.27, cfg) == doctest::Approx(per_path_error_lb(tau, t, cfg)).epsilon(1e-10).scale(1e-14));
            }
        }
    }
    SUBCASE("ub sits between lb and one")
    {
        std::mt19937_64 gen(37);
        for (int trial = 0; trial < 10; ++trial)
        {
            const auto in = random_instance(gen, 6, 1, cfg, 0.1);
            for (double w_eps : {0.05, 0.3, 1.0})
                for (double tau = 0.3e-9; tau < in.taps.delays_s.back() + ts; tau += 0.21 * ts)
                {
                    const double lb = per_path_error_lb(tau, in.taps, cfg);
                    const double ub = per_path_error_ub(tau, in.taps, w_eps, cfg);
                    CHECK(ub >= lb - 1e-12);
                    CHECK(ub <= 1.0 + 1e-12);
                    CHECK(lb >= -1e-12);
                }
        }
        CHECK(per_path_error_ub(1e-9 + 0.5 * ts, two, 1e-13, cfg) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK_THROWS(per_path_error_ub(1e-9, two, 0.0, cfg));
    }
}

TEST_CASE("beta_M against the normal-tail oracle")
{
    CHECK(beta_m(1) == doctest::Approx(static_cast<double>(1 - 2 * oracle::normal_tail(2.0L))).epsilon(1e-12));
    CHECK(beta_m(1) == doctest::Approx(0.9545).epsilon(1e-4));
    CHECK(beta_m(1) > 0.95);
    CHECK(beta_m(4) == doctest::Approx(static_cast<double>(1 - 2 * oracle::normal_tail(2.5L))).epsilon(1e-12));
    for (double x : {0.5, 1.0, 3.0, 6.0})
        CHECK(normal_q(x) == doctest::Approx(static_cast<double>(oracle::normal_tail(x))).epsilon(1e-11));
    double prev = 0;
    for (int m = 1; m <= 60; ++m)
    {
        CHECK(beta_m(m) > prev);
        CHECK(beta_m(m) < 1.0);
        prev = beta_m(m);
    }
    CHECK(beta_m(400) == doctest::Approx(1.0));
    CHECK_THROWS(beta_m(0));
    CHECK(per_path_bound(1.0, 20, 0.01) == doctest::Approx(1.0 / (21 * 0.1)));
}

TEST_CASE("stochastic bounds")
{
    const RadioConfig cfg;
    const PdpModel pdp;

    SUBCASE("taps on every cluster give a zero lower bound")
    {
        const auto prof = profile_from_delays({0.3, 1.1, 2.6}, 10e-9, pdp, cfg);
        TapBank taps;
        taps.delays_s.push_back(cfg.direct_leakage_delay_s);
        for (double d : prof.cluster_delays_s())
            taps.delays_s.push_back(d);
        const auto rep = stochastic_bounds(prof, taps, cfg);
        CHECK(rep.bound_lo < 1e-12 * cfg.tx_power_mw());
        CHECK(rep.bound_lo <= rep.bound_hi + 1e-24);
    }
    SUBCASE("report invariants on a TDL profile")
    {
        const auto prof = profile_from_tdl(TdlModel::A, 20e-9, pdp, cfg);
        const auto taps = TapBank::uniform(8, 1.5e-9, 0.5e-9, 1.0);
        const auto rep = stochastic_bounds(prof, taps, cfg);
        CHECK(rep.clusters == 23);
        CHECK(rep.delays_s.size() == 24);
        CHECK(rep.beta_m == beta_m(23));
        double lo = 0, hi = 0;
        for (std::size_t m = 0; m < rep.delays_s.size(); ++m)
        {
            CHECK(rep.per_path_lb[m] >= -1e-12);
            CHECK(rep.per_path_lb[m] <= rep.per_path_ub[m] + 1e-12);
            CHECK(rep.per_path_ub[m] <= 1 + 1e-12);
            lo += rep.powers[m] * rep.per_path_lb[m];
            hi += rep.powers[m] * rep.per_path_ub[m];
        }
        CHECK(rep.bound_lo == doctest::Approx(cfg.tx_power_mw() * lo));
        CHECK(rep.bound_hi == doctest::Approx(cfg.tx_power_mw() * hi / rep.beta_m));
        CHECK(rep.sic_ceiling_db == doctest::Approx(lin_to_db(cfg.tx_power_mw() / (cfg.tx_noise_power_mw() * lo))));
        CHECK(rep.scr_lo_db(cfg.tx_power_mw()) <= rep.scr_hi_db(cfg.tx_power_mw()));
    }
    SUBCASE("monte carlo mean of the constrained error is sandwiched")
    {
        const auto prof = profile_from_tdl(TdlModel::B, 30e-9, pdp, cfg);
        const auto taps = TapBank::uniform(8, 1.5e-9, 0.5e-9, 1.0);
        const auto rep = stochastic_bounds(prof, taps, cfg);
        const auto j = constrained_objectives(prof, taps, cfg, 500, 3);
        double mean = 0, sq = 0;
        for (double v : j)
        {
            mean += v;
            sq += v * v;
        }
        mean /= j.size();
        const double se = std::sqrt(std::max(sq / j.size() - mean * mean, 0.0) / j.size());
        const double rho = cfg.tx_power_mw();
        CHECK(rep.bound_lo <= rho * (mean + 3 * se));
        CHECK(rho * (mean - 3 * se) <= rep.bound_hi);
    }
}

TEST_CASE("infinity-norm probability of the composite per-path weights")
{
    const RadioConfig cfg;
    const PdpModel pdp;
    const std::size_t trials = 10000;
    const auto taps = TapBank::uniform(8, 1.5e-9, 0.5e-9, 1.0);
    for (auto model : {TdlModel::A, TdlModel::C})
    {
        const auto prof = profile_from_tdl(model, 40e-9, pdp, cfg);
        const double p = empirical_winfnorm_probability(prof, taps, cfg, trials, 8);
        const double b = beta_m(23);
        CHECK(p >= b - 3 * oracle::binomial_se(b, trials));
    }
    auto loose = taps;
    loose.weight_bound = 1e12;
    CHECK(empirical_winfnorm_probability(profile_from_tdl(TdlModel::B, 10e-9, pdp, cfg), loose, cfg, trials, 1) == 1.0);
    const auto single = profile_from_delays({1.0}, 5e-9, pdp, cfg);
    const double p1 = empirical_winfnorm_probability(single, taps, cfg, trials, 2);
    CHECK(p1 >= 0.95 - 3 * oracle::binomial_se(0.95, trials));
    CHECK_THROWS(empirical_winfnorm_probability(single, taps, cfg, 10, 2));
}
