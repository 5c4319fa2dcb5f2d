#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "riccilab/entropy.hpp"
#include "riccilab/geometry.hpp"

namespace riccilab {

struct GridSpec {
  int nodes = 256;
  double truncation_radius = 100.0;
};

// Entropy sampling schedule: geometric T = -first * ratio^k unless explicit
// times are given. All times lie in (-infty, 0].
struct ScheduleSpec {
  double first = 1.0;
  double ratio = 2.0;
  int count = 8;
  std::vector<double> times;  // explicit override
  std::vector<double> materialize() const;
};

// Declarative description of one run. Parse <-> serialize round-trips are
// lossless with all defaults materialized.
struct ScenarioConfig {
  std::string name = "scenario";
  std::string flow_type = "euclidean";
  int dim = 2;
  std::vector<double> lattice;  // flat torus / cover basis, row-major
  int euclidean_dim = 0;        // product factor
  std::vector<DeckMap> deck;    // quotient deck group
  double t_sing = 1.0;

  std::vector<Point> base_points = {{0.0}};
  double base_time = 0.0;
  ScheduleSpec schedule;
  GridSpec grid;
  std::string method = "exact";  // exact | spectral | pde | both
  std::vector<std::string> checks = {"default"};
  std::map<std::string, double> tolerances;  // per-check overrides
  std::string output_dir = "out";
  std::uint64_t seed = 12345;
  int cigar_modes = 12;

  ModelFlow make_flow() const;
  CurveMethod primary_method() const;
  void validate() const;  // ConfigError on any inconsistency
};

std::string scenario_to_json(const ScenarioConfig& cfg);  // defaults materialized
ScenarioConfig scenario_from_json(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);

// Published JSON schema for the config format.
std::string scenario_schema_json();

// FNV-1a hash of the canonical (defaults-materialized) serialization.
std::uint64_t scenario_hash(const ScenarioConfig& cfg);

// The default model zoo: euclidean, torus, sphere, cigar, product, quotient.
std::vector<ScenarioConfig> default_zoo();

}  // namespace riccilab
