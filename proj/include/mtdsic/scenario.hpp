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

#include "mtdsic/monte_carlo.hpp"
#include "mtdsic/tap_optimizer.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>

namespace mtdsic {

/// Raised for malformed scenario files; `field` is a JSON pointer to the offending entry.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(std::string field, const std::string &msg)
        : std::runtime_error(field + ": " + msg), field(std::move(field)) {}
    std::string field;
};

struct ChannelSweep
{
    TdlModel model = TdlModel::A;
    std::vector<double> tau_ds_s;
};

enum class PlanKind
{
    Explicit,
    Uniform,
    Auto
};

struct TapPlanSpec
{
    std::string name;
    PlanKind kind = PlanKind::Explicit;
    std::vector<double> delays_s;                       // explicit
    std::size_t n = 0;                                  // uniform
    double spacing_s = 0, d_min_s = 0;                  // uniform
    bool minimize = false;                              // auto: refine and drop taps after the initial pass
};

struct RunSettings
{
    std::size_t realizations = 50;        // waveform simulations per sweep point
    std::size_t theory_realizations = 200;
    std::uint64_t seed = 1;
    int oversample = 16;
    std::size_t symbols = 4096;
    bool simulate = true;
    std::size_t psd_nfft = 0;
    bool per_path = false;                // also write the per-path decomposition table
};

struct ScenarioConfig
{
    RadioConfig radio;
    PdpModel pdp;
    bool ideal_impairments = false;
    std::vector<ChannelSweep> channels;
    std::optional<DesignBudget> budget;
    bool minimize_taps = false; // design: run the tap-count minimization after the initial construction
    std::vector<TapPlanSpec> tap_plans;
    RunSettings run;
    std::filesystem::path output_dir = "out";
    double w0 = 1.0;

    nlohmann::json source; // resolved document (defaults filled in), the input to config_hash
};

/// Parse and validate. Unknown keys are rejected so typos cannot silently fall back to defaults.
ScenarioConfig parse_scenario(const nlohmann::json &doc);
ScenarioConfig load_scenario(const std::filesystem::path &path);

/// Replace every channel's delay-spread list with start:stop:steps (ns, inclusive, steps >= 1).
void apply_sweep_override(ScenarioConfig &cfg, const std::string &spec);

/// 16 hex digits of FNV-1a over the canonical dump of the resolved document.
std::string config_hash(const ScenarioConfig &cfg);

/// Resolve a plan to concrete taps. Auto plans run the designer on the budget.
TapBank resolve_plan(const TapPlanSpec &spec, const ScenarioConfig &cfg);

nlohmann::json plan_to_json(const DelayPlan &plan, const DesignBudget &budget);

/// Bound report with per-path arrays (delays in ns, errors linear) and the SCR-domain bounds.
nlohmann::json report_to_json(const ErrorReport &rep, double tx_power_mw);

/// One row per path: index, delay_ns, attenuation_db, error_lb_db, error_ub_db, product_lb_db, product_ub_db.
std::vector<std::vector<std::string>> report_rows(const ErrorReport &rep);

/// Minimal RFC 4180 writer: quotes fields containing separators, quotes or line breaks; CRLF rows.
class CsvWriter
{
public:
    explicit CsvWriter(std::ostream &os) : os_(os) {}
    void row(const std::vector<std::string> &fields);

private:
    std::ostream &os_;
};

/// Shortest round-trip decimal for a double ("" for NaN, which marks a skipped column).
std::string fmt(double v);

} // namespace mtdsic
