#include "riccilab/report_io.hpp"

#include <fstream>

#include "json.hpp"
#include "riccilab/errors.hpp"
#include "riccilab/version.hpp"

namespace riccilab {

using nlohmann::json;

void write_entropy_csv(const EntropyCurve& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << "T,W,W_err,N,N_err\n";
  out.precision(17);
  for (const EntropySample& s : curve.samples)
    out << s.T << ',' << s.W << ',' << s.W_err << ',' << s.N << ',' << s.N_err << '\n';
}

namespace {

json extrap_json(const ExtrapolationState& st) {
  return {{"estimate", st.estimate},
          {"converged", st.converged},
          {"diverging_minus_inf", st.diverging},
          {"last_diff", st.last_diff}};
}

}  // namespace

std::string entropy_summary_json(const EntropyCurve& curve) {
  json j;
  j["base_point"] = curve.base_point;
  j["base_time"] = curve.base_time;
  j["dim"] = curve.dim;
  j["samples"] = curve.samples.size();
  j["W_bar"] = extrap_json(curve.w_state);
  j["N_bar"] = extrap_json(curve.n_state);
  return j.dump(2);
}

std::string run_manifest_json(const ScenarioConfig& cfg,
                              const std::vector<std::string>& artifacts, double wall_ms,
                              int exit_code) {
  json j;
  j["version"] = version_string;
  j["config"] = json::parse(scenario_to_json(cfg));  // all defaults materialized
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(scenario_hash(cfg)));
  j["config_hash"] = hash;
  j["artifacts"] = artifacts;
  j["wall_ms"] = wall_ms;
  j["exit_code"] = exit_code;
  return j.dump(2);
}

std::string noncollapsing_report_json(const NoncollapsingReport& rep) {
  json j;
  j["scenario"] = rep.scenario;
  j["entropy_floor"] = rep.entropy_floor;
  j["min_admissible_ratio"] = rep.min_admissible_ratio;
  j["has_admissible"] = rep.has_admissible;
  j["entropy_bounded_evidence"] = rep.entropy_bounded_evidence;
  j["note"] =
      "kappa table is qualitative evidence; no noncollapsing constant is reproduced";
  j["rows"] = json::array();
  for (const NoncollapsingRow& r : rep.rows)
    j["rows"].push_back({{"point", r.point},
                         {"r", r.r},
                         {"N_at_scale", r.N_at_scale},
                         {"ratio", r.ratio},
                         {"admissible", r.admissible},
                         {"max_curvature", r.max_curvature}});
  return j.dump(2);
}

}  // namespace riccilab
