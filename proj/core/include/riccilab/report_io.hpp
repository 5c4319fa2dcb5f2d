#pragma once

#include <string>

#include "riccilab/entropy.hpp"
#include "riccilab/scenario.hpp"
#include "riccilab/verify.hpp"

namespace riccilab {

// CSV columns: T, W, W_err, N, N_err (header row, fixed order).
void write_entropy_csv(const EntropyCurve& curve, const std::string& path);

// JSON summary with the extrapolation state.
std::string entropy_summary_json(const EntropyCurve& curve);

// Run manifest: materialized config, config hash, version, timings,
// artifact list. Enough to re-execute the run exactly.
std::string run_manifest_json(const ScenarioConfig& cfg,
                              const std::vector<std::string>& artifacts, double wall_ms,
                              int exit_code);

std::string noncollapsing_report_json(const NoncollapsingReport& rep);

}  // namespace riccilab
