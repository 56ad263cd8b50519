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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mtdsic {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

// Powers are carried internally in milliwatts.
inline double dbm_to_mw(double dbm) { return db_to_lin(dbm); }
inline double mw_to_dbm(double mw) { return lin_to_db(mw); }

/// Normalized sinc, sin(pi x) / (pi x).
inline double nsinc(double x)
{
    if (std::abs(x) < 1e-8)
        return 1.0 - (pi * x) * (pi * x) / 6.0;
    const double px = pi * x;
    return std::sin(px) / px;
}

/// Pairwise (cascade) summation; result does not depend on thread scheduling.
template <typename T>
T pairwise_sum(std::span<const T> v)
{
    if (v.size() <= 16)
    {
        T acc{};
        for (const auto &x : v)
            acc += x;
        return acc;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

/// Derive an independent 64-bit seed for a sub-stream (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Thrown when an iterative solver exhausts its budget. Carries the best iterate.
class ConvergenceError : public std::runtime_error
{
public:
    ConvergenceError(const std::string &what, CVec best, double residual)
        : std::runtime_error(what), best_iterate(std::move(best)), kkt_residual(residual) {}

    CVec best_iterate;
    double kkt_residual;
};

} // namespace mtdsic
