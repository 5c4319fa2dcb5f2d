#pragma once

#include <map>
#include <string>
#include <vector>

#include "riccilab/entropy.hpp"
#include "riccilab/scenario.hpp"

namespace riccilab {

enum class Verdict { pass, fail, indeterminate };
enum class CheckKind { identity, inequality, trend, diagnostic };

std::string to_string(Verdict v);
std::string to_string(CheckKind k);

// One catalog entry: a claim mapped to a computable residual or margin.
struct CheckDef {
  std::string id;
  std::string anchor;  // statement locator and one-line summary
  CheckKind kind = CheckKind::identity;
  double tolerance = 1e-6;
  std::vector<std::string> scenarios;  // default-suite bindings by scenario name
  std::string description;
};

struct CheckReport {
  std::string check_id;
  std::string scenario;
  Verdict verdict = Verdict::indeterminate;
  CheckKind kind = CheckKind::identity;
  double residual = 0.0;   // residual for identities, negated margin for inequalities
  double tolerance = 0.0;
  double budget = 0.0;     // numerical-error budget
  std::map<std::string, double> measured;
  std::string notes;
  std::vector<std::string> artifacts;
  double wall_ms = 0.0;
};

struct SuiteReport {
  std::vector<CheckReport> reports;
  bool pass = false;
  int fail_count = 0;
  int indeterminate_identity = 0;
  int indeterminate_diagnostic = 0;
  int indeterminate_other = 0;
  double wall_ms = 0.0;
};

const std::vector<CheckDef>& check_catalog();
const CheckDef& find_check(const std::string& id);  // ConfigError if unknown

// Deterministic for fixed config and discretization.
CheckReport run_check(const std::string& id, const ScenarioConfig& scenario);

// Runs every requested check on every bound scenario present in `scenarios`.
// ids = {"default"} (or empty) selects the whole catalog. Overall pass iff
// no failures, no indeterminate identity/inequality/trend results, and at
// most `diagnostic_allowance` indeterminate diagnostics.
SuiteReport run_suite(const std::vector<std::string>& ids,
                      const std::vector<ScenarioConfig>& scenarios, int threads = 1,
                      int diagnostic_allowance = 2);

std::string suite_report_json(const SuiteReport& suite);
std::string suite_report_table(const SuiteReport& suite);

// ---- noncollapsing / collapse evidence (kappa table) ----

struct NoncollapsingRow {
  Point point;
  double r = 0.0;
  double N_at_scale = 0.0;  // N_{(x,t)}(t - r^2)
  double ratio = 0.0;       // Vol(B_t(x,r)) / r^n
  bool admissible = false;
  double max_curvature = 0.0;
};

struct NoncollapsingReport {
  std::string scenario;
  std::vector<NoncollapsingRow> rows;
  double entropy_floor = 0.0;
  // min volume ratio among admissible rows whose entropy stays >= floor;
  // evidence only, never a reproduction of a noncollapsing constant
  double min_admissible_ratio = 0.0;
  bool has_admissible = false;
  bool entropy_bounded_evidence = false;  // asymptotic N trend bounded
};

NoncollapsingReport noncollapsing_report(const ScenarioConfig& scenario,
                                         const std::vector<Point>& points,
                                         const std::vector<double>& scales,
                                         double entropy_floor);

}  // namespace riccilab
