#pragma once

#include <iosfwd>

#include "json.hpp"

#include "cohortlte/bench.hpp"
#include "cohortlte/decay_fit.hpp"
#include "cohortlte/simulate.hpp"
#include "cohortlte/value_metrics.hpp"

namespace cohortlte {

using json = nlohmann::json;

void to_json(json& j, const DecayFit& fit);
void to_json(json& j, const MetricEstimate& m);
void to_json(json& j, const SimConfig& config);

/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const json& j, SimConfig& config);

/// {ste, lte, derlv, baselines, fits, curves, bootstrap, diagnostics}; `lte`
/// and `derlv` hold the multi-cohort estimates.
json report_to_json(const AnalysisReport& report);

/// Every curve of the report in the curve CSV layout.
void write_report_curves_csv(std::ostream& out, const AnalysisReport& report);

json truth_sidecar(const SimConfig& config, int horizon);

/// Accepts {"scenario": "table1" | "scenario2", ...}; parameters given as a
/// number are fixed, otherwise {"dist": "uniform" | "uniform_int" | "normal",
/// "low", "high" | "mean", "std"}. Unspecified fields take the scenario's
/// defaults.
BenchSpec bench_spec_from_json(const json& j);
json bench_spec_to_json(const BenchSpec& spec);
json bench_report_to_json(const BenchReport& report);
void write_bench_rows_csv(std::ostream& out, const BenchReport& report);
/// Mean multi-cohort arm-level curves over successful scenario2 sims.
void write_bench_curves_csv(std::ostream& out, const BenchReport& report);

}  // namespace cohortlte
