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

#include "mtdsic/monte_carlo.hpp"
#include "mtdsic/tap_optimizer.hpp"

#include <benchmark/benchmark.h>

using namespace mtdsic;

namespace {

const TapBank d0{{0.2e-9, 0.6099e-9, 2.6624e-9, 9.7061e-9, 22.2061e-9}, 1.0, {}};

Execution mode(const benchmark::State &st) { return st.range(0) ? Execution::Parallel : Execution::Serial; }

void label(benchmark::State &st) { st.SetLabel(st.range(0) ? "parallel" : "serial"); }

void BM_WeightedErrorGrid(benchmark::State &st)
{
    const RadioConfig cfg;
    const PdpModel pdp;
    const auto taus = delay_grid(1e-9, 60e-9, cfg);
    for (auto _ : st)
        benchmark::DoNotOptimize(weighted_error_grid(taus, d0, pdp, 20, cfg, mode(st)));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(taus.size()));
    label(st);
}
BENCHMARK(BM_WeightedErrorGrid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PerPathErrors(benchmark::State &st)
{
    const RadioConfig cfg;
    const PdpModel pdp;
    const auto prof = profile_from_tdl(TdlModel::C, 70e-9, pdp, cfg);
    const auto delays = prof.cluster_delays_s();
    const auto powers = prof.cluster_powers();
    for (auto _ : st)
        benchmark::DoNotOptimize(per_path_errors(delays, powers, d0, 23, cfg, mode(st)));
    label(st);
}
BENCHMARK(BM_PerPathErrors)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ConstrainedObjectives(benchmark::State &st)
{
    const RadioConfig cfg;
    const PdpModel pdp;
    const auto prof = profile_from_tdl(TdlModel::B, 40e-9, pdp, cfg);
    const auto taps = TapBank::uniform(8, 0.1e-9, 0.2e-9, 1.0);
    for (auto _ : st)
        benchmark::DoNotOptimize(constrained_objectives(prof, taps, cfg, 200, 1, mode(st)));
    st.SetItemsProcessed(st.iterations() * 200);
    label(st);
}
BENCHMARK(BM_ConstrainedObjectives)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SimulateScr(benchmark::State &st)
{
    const RadioConfig cfg;
    const PdpModel pdp;
    const auto prof = profile_from_tdl(TdlModel::A, 30e-9, pdp, cfg);
    const auto imp = calibrated_impairments(cfg, 1);
    SimOptions so;
    so.exec = mode(st);
    for (auto _ : st)
        benchmark::DoNotOptimize(simulate_scr(prof, d0, cfg, imp, 8, 3, so));
    label(st);
}
BENCHMARK(BM_SimulateScr)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
