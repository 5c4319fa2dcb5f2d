#include "riccilab/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "riccilab/errors.hpp"

namespace riccilab {

using nlohmann::json;

std::vector<double> ScheduleSpec::materialize() const {
  if (!times.empty()) return times;
  return geometric_schedule(first, ratio, count);
}

ModelFlow ScenarioConfig::make_flow() const {
  if (flow_type == "euclidean") return ModelFlow::euclidean(dim);
  if (flow_type == "flat_torus") {
    if (lattice.empty()) return ModelFlow::cube_torus(dim, 1.0);
    return ModelFlow::flat_torus(dim, lattice);
  }
  if (flow_type == "flat_product") {
    FlatTorus t{dim, lattice};
    if (lattice.empty()) {
      t.basis.assign(static_cast<std::size_t>(dim) * dim, 0.0);
      for (int i = 0; i < dim; ++i) t.basis[static_cast<std::size_t>(i) * dim + i] = 1.0;
    }
    return ModelFlow::flat_product(t, euclidean_dim);
  }
  if (flow_type == "torus_quotient") {
    FlatTorus cover{dim, lattice};
    return ModelFlow::torus_quotient(cover, deck);
  }
  if (flow_type == "shrinking_sphere") return ModelFlow::shrinking_sphere(dim, t_sing);
  if (flow_type == "cigar") return ModelFlow::cigar();
  throw ConfigError("unknown flow_type: " + flow_type);
}

CurveMethod ScenarioConfig::primary_method() const {
  if (method == "exact") return CurveMethod::exact;
  if (method == "spectral") return CurveMethod::spectral;
  if (method == "pde")
    return flow_type == "cigar" ? CurveMethod::cigar_deep : CurveMethod::pde;
  if (method == "both") {
    if (flow_type == "shrinking_sphere") return CurveMethod::spectral;
    if (flow_type == "cigar") return CurveMethod::cigar_deep;
    return CurveMethod::exact;
  }
  throw ConfigError("unknown kernel method: " + method);
}

void ScenarioConfig::validate() const {
  make_flow();  // variant-level invariants
  if (method != "exact" && method != "spectral" && method != "pde" && method != "both")
    throw ConfigError("config: method must be exact|spectral|pde|both");
  if (grid.nodes < 16) throw ConfigError("config: grid.nodes too small");
  if (!(grid.truncation_radius > 0.0)) throw ConfigError("config: truncation_radius <= 0");
  for (double T : schedule.materialize()) {
    if (!(T <= 0.0)) throw ConfigError("config: schedule times must lie in (-infty, 0]");
    if (!(T < base_time)) throw ConfigError("config: schedule times must precede base_time");
  }
  if (base_points.empty()) throw ConfigError("config: need at least one base point");
  if (!(base_time <= 0.0)) throw ConfigError("config: base_time must lie in (-infty, 0]");
}

namespace {

json deck_to_json(const std::vector<DeckMap>& deck) {
  json arr = json::array();
  for (const DeckMap& m : deck) arr.push_back({{"linear", m.linear}, {"shift", m.shift}});
  return arr;
}

std::vector<DeckMap> deck_from_json(const json& arr) {
  std::vector<DeckMap> deck;
  for (const auto& e : arr) {
    DeckMap m;
    m.linear = e.at("linear").get<std::vector<double>>();
    m.shift = e.at("shift").get<std::vector<double>>();
    deck.push_back(std::move(m));
  }
  return deck;
}

json to_json_full(const ScenarioConfig& c) {
  json j;
  j["name"] = c.name;
  j["flow"] = {{"type", c.flow_type},
               {"dim", c.dim},
               {"lattice", c.lattice},
               {"euclidean_dim", c.euclidean_dim},
               {"deck", deck_to_json(c.deck)},
               {"t_sing", c.t_sing}};
  j["base_points"] = c.base_points;
  j["base_time"] = c.base_time;
  j["schedule"] = {{"first", c.schedule.first},
                   {"ratio", c.schedule.ratio},
                   {"count", c.schedule.count},
                   {"times", c.schedule.times}};
  j["grid"] = {{"nodes", c.grid.nodes}, {"truncation_radius", c.grid.truncation_radius}};
  j["method"] = c.method;
  j["checks"] = c.checks;
  j["tolerances"] = c.tolerances;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["cigar_modes"] = c.cigar_modes;
  return j;
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& cfg) { return to_json_full(cfg).dump(2); }

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ScenarioConfig c;
  try {
    c.name = j.value("name", c.name);
    if (j.contains("flow")) {
      const json& f = j["flow"];
      c.flow_type = f.value("type", c.flow_type);
      c.dim = f.value("dim", c.dim);
      c.lattice = f.value("lattice", c.lattice);
      c.euclidean_dim = f.value("euclidean_dim", c.euclidean_dim);
      if (f.contains("deck")) c.deck = deck_from_json(f["deck"]);
      c.t_sing = f.value("t_sing", c.t_sing);
    }
    if (j.contains("base_points")) c.base_points = j["base_points"].get<std::vector<Point>>();
    c.base_time = j.value("base_time", c.base_time);
    if (j.contains("schedule")) {
      const json& s = j["schedule"];
      c.schedule.first = s.value("first", c.schedule.first);
      c.schedule.ratio = s.value("ratio", c.schedule.ratio);
      c.schedule.count = s.value("count", c.schedule.count);
      c.schedule.times = s.value("times", c.schedule.times);
    }
    if (j.contains("grid")) {
      c.grid.nodes = j["grid"].value("nodes", c.grid.nodes);
      c.grid.truncation_radius =
          j["grid"].value("truncation_radius", c.grid.truncation_radius);
    }
    c.method = j.value("method", c.method);
    if (j.contains("checks")) c.checks = j["checks"].get<std::vector<std::string>>();
    if (j.contains("tolerances"))
      c.tolerances = j["tolerances"].get<std::map<std::string, double>>();
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.cigar_modes = j.value("cigar_modes", c.cigar_modes);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field error: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

std::uint64_t scenario_hash(const ScenarioConfig& cfg) {
  const std::string s = scenario_to_json(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string scenario_schema_json() {
  json schema = {
      {"$schema", "http://json-schema.org/draft-07/schema#"},
      {"title", "riccilab scenario configuration"},
      {"type", "object"},
      {"properties",
       {{"name", {{"type", "string"}}},
        {"flow",
         {{"type", "object"},
          {"properties",
           {{"type",
             {{"enum", {"euclidean", "flat_torus", "flat_product", "torus_quotient",
                        "shrinking_sphere", "cigar"}}}},
            {"dim", {{"type", "integer"}, {"minimum", 1}}},
            {"lattice",
             {{"type", "array"},
              {"items", {{"type", "number"}}},
              {"description", "row-major dim x dim lattice basis"}}},
            {"euclidean_dim", {{"type", "integer"}, {"minimum", 0}}},
            {"deck",
             {{"type", "array"},
              {"items",
               {{"type", "object"},
                {"properties",
                 {{"linear", {{"type", "array"}}}, {"shift", {{"type", "array"}}}}}}}}},
            {"t_sing", {{"type", "number"}, {"exclusiveMinimum", 0.0}}}}}}},
        {"base_points", {{"type", "array"}, {"items", {{"type", "array"}}}}},
        {"base_time", {{"type", "number"}, {"maximum", 0.0}}},
        {"schedule",
         {{"type", "object"},
          {"properties",
           {{"first", {{"type", "number"}, {"exclusiveMinimum", 0.0}}},
            {"ratio", {{"type", "number"}, {"exclusiveMinimum", 1.0}}},
            {"count", {{"type", "integer"}, {"minimum", 1}}},
            {"times",
             {{"type", "array"},
              {"items", {{"type", "number"}, {"maximum", 0.0}}},
              {"description", "explicit override of the geometric schedule"}}}}}}},
        {"grid",
         {{"type", "object"},
          {"properties",
           {{"nodes", {{"type", "integer"}, {"minimum", 16}}},
            {"truncation_radius", {{"type", "number"}, {"exclusiveMinimum", 0.0}}}}}}},
        {"method", {{"enum", {"exact", "spectral", "pde", "both"}}}},
        {"checks", {{"type", "array"}, {"items", {{"type", "string"}}}}},
        {"tolerances", {{"type", "object"}, {"additionalProperties", {{"type", "number"}}}}},
        {"output_dir", {{"type", "string"}}},
        {"seed", {{"type", "integer"}, {"minimum", 0}}},
        {"cigar_modes", {{"type", "integer"}, {"minimum", 1}}}}}};
  return schema.dump(2);
}

std::vector<ScenarioConfig> default_zoo() {
  std::vector<ScenarioConfig> zoo;

  ScenarioConfig euclid;
  euclid.name = "euclidean";
  euclid.flow_type = "euclidean";
  euclid.dim = 2;
  euclid.base_points = {{0.0, 0.0}};
  euclid.method = "exact";
  euclid.schedule.count = 8;
  zoo.push_back(euclid);

  ScenarioConfig torus;
  torus.name = "torus";
  torus.flow_type = "flat_torus";
  torus.dim = 1;
  torus.lattice = {1.0};
  torus.base_points = {{0.0}};
  torus.method = "both";
  torus.schedule.count = 14;
  zoo.push_back(torus);

  ScenarioConfig sphere;
  sphere.name = "sphere";
  sphere.flow_type = "shrinking_sphere";
  sphere.dim = 2;
  sphere.t_sing = 1.0;
  sphere.base_points = {{0.0}};
  sphere.method = "both";
  sphere.schedule.count = 8;
  sphere.grid.nodes = 512;
  zoo.push_back(sphere);

  ScenarioConfig cigar;
  cigar.name = "cigar";
  cigar.flow_type = "cigar";
  cigar.base_points = {{0.0}};
  cigar.method = "pde";
  cigar.schedule.count = 17;  // down to T = -2^16
  cigar.grid.nodes = 512;
  zoo.push_back(cigar);

  ScenarioConfig product;
  product.name = "product";
  product.flow_type = "flat_product";
  product.dim = 1;
  product.lattice = {1.0};
  product.euclidean_dim = 1;
  product.base_points = {{0.0, 0.0}};
  product.method = "exact";
  product.schedule.count = 14;
  zoo.push_back(product);

  ScenarioConfig quotient;
  quotient.name = "quotient";
  quotient.flow_type = "torus_quotient";
  quotient.dim = 1;
  quotient.lattice = {2.0};
  quotient.deck = {DeckMap{{1.0}, {0.0}}, DeckMap{{1.0}, {1.0}}};
  quotient.base_points = {{0.0}};
  quotient.method = "exact";
  quotient.schedule.count = 10;
  zoo.push_back(quotient);

  return zoo;
}

}  // namespace riccilab
