#include "rydchain/config.hpp"

#include <fstream>
#include <sstream>

#include "rydchain/errors.hpp"

namespace rydchain {

using json = nlohmann::ordered_json;

namespace {

// Keys whose value is free-form (checked during parsing instead).
bool is_open_key(const std::string& pointer) {
  return pointer == "/options/tau" || pointer == "/params/c3_tilde" || pointer == "/params/trap_omega_axes" ||
         pointer == "/options/epsilon/path" || pointer == "/provenance";
}

void check_keys(const json& doc, const json& schema, const std::string& pointer) {
  if (!doc.is_object()) return;
  for (const auto& [key, value] : doc.items()) {
    const std::string child = pointer + "/" + key;
    if (is_open_key(child)) continue;
    if (!schema.contains(key)) throw ConfigError(child + ": unknown key");
    if (schema[key].is_object()) {
      if (!value.is_object()) throw ConfigError(child + ": expected an object");
      check_keys(value, schema[key], child);
    }
  }
}

// Typed access with the JSON pointer in every error message.
class Node {
 public:
  Node(const json& value, std::string pointer) : value_(value), pointer_(std::move(pointer)) {}

  Node operator[](const std::string& key) const {
    if (!value_.is_object() || !value_.contains(key)) throw ConfigError(pointer_ + "/" + key + ": missing");
    return Node(value_[key], pointer_ + "/" + key);
  }

  bool is_null() const { return value_.is_null(); }
  const std::string& pointer() const { return pointer_; }
  const json& raw() const { return value_; }

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(pointer_ + ": " + what); }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    return value_.get<double>();
  }
  double positive() const {
    const double v = number();
    if (!(v > 0.0)) fail("must be positive");
    return v;
  }
  double non_negative() const {
    const double v = number();
    if (!(v >= 0.0)) fail("must be non-negative");
    return v;
  }
  std::uint64_t unsigned_integer() const {
    if (value_.is_number_unsigned()) return value_.get<std::uint64_t>();
    if (value_.is_number_integer() && value_.get<std::int64_t>() >= 0)
      return static_cast<std::uint64_t>(value_.get<std::int64_t>());
    fail("expected a non-negative integer");
  }
  std::size_t count(std::size_t minimum) const {
    const auto v = unsigned_integer();
    if (v < minimum) fail("must be at least " + std::to_string(minimum));
    return static_cast<std::size_t>(v);
  }
  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }
  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }
  std::vector<double> numbers(bool allow_scalar = false) const {
    if (allow_scalar && value_.is_number()) return {value_.get<double>()};
    if (!value_.is_array()) fail(allow_scalar ? "expected a number or an array of numbers" : "expected an array");
    std::vector<double> out;
    for (std::size_t k = 0; k < value_.size(); ++k) out.push_back(Node(value_[k], pointer_ + "/" + std::to_string(k)).number());
    return out;
  }
  std::vector<std::string> strings() const {
    if (!value_.is_array()) fail("expected an array of strings");
    std::vector<std::string> out;
    for (std::size_t k = 0; k < value_.size(); ++k) out.push_back(Node(value_[k], pointer_ + "/" + std::to_string(k)).string());
    return out;
  }

 private:
  const json& value_;
  std::string pointer_;
};

TauGrid parse_grid(const Node& node) {
  if (!node.raw().is_object()) node.fail("expected an object with start, stop and step");
  for (const auto& [key, value] : node.raw().items()) {
    if (key != "start" && key != "stop" && key != "step") throw ConfigError(node.pointer() + "/" + key + ": unknown key");
  }
  TauGrid grid;
  if (node.raw().contains("start")) grid.start = node["start"].non_negative();
  if (node.raw().contains("stop")) grid.stop = node["stop"].non_negative();
  if (node.raw().contains("step")) grid.step = node["step"].positive();
  if (grid.stop < grid.start) node.fail("stop must not be below start");
  return grid;
}

json grid_json(const TauGrid& g) { return json{{"start", g.start}, {"stop", g.stop}, {"step", g.step}}; }

EpsilonModel::Backend parse_backend(const Node& node) {
  const auto s = node.string();
  if (s == "table") return EpsilonModel::Backend::table;
  if (s == "polynomial") return EpsilonModel::Backend::polynomial;
  if (s == "recapture_mc") return EpsilonModel::Backend::recapture_mc;
  node.fail("expected table, polynomial or recapture_mc");
}

EpsilonModel::TableQuantity parse_quantity(const Node& node) {
  const auto s = node.string();
  if (s == "epsilon") return EpsilonModel::TableQuantity::epsilon;
  if (s == "p111") return EpsilonModel::TableQuantity::p111;
  node.fail("expected epsilon or p111");
}

json params_json(const PhysicalParams& p) {
  json j;
  j["c3"] = p.c3;
  j["c3_tilde"] = p.c3_tilde ? json(*p.c3_tilde) : json(nullptr);
  j["omega_opt"] = p.omega_opt;
  j["delta_opt"] = p.delta_opt;
  j["omega_mw"] = p.omega_mw;
  j["addressing_shift"] = p.addressing_shift;
  j["gamma_eff"] = p.gamma_eff;
  j["gamma_up"] = p.gamma_up;
  j["gamma_down"] = p.gamma_down;
  j["temperature"] = p.temperature;
  j["omega_perp"] = p.omega_perp;
  j["trap_omega_axes"] = p.trap_omega_axes ? json(*p.trap_omega_axes) : json(nullptr);
  j["mass"] = p.mass;
  return j;
}

PhysicalParams parse_params(const Node& n) {
  PhysicalParams p;
  p.c3 = n["c3"].number();
  if (!n["c3_tilde"].is_null()) p.c3_tilde = n["c3_tilde"].number();
  p.omega_opt = n["omega_opt"].numbers(true);
  p.delta_opt = n["delta_opt"].numbers(true);
  p.omega_mw = n["omega_mw"].number();
  p.addressing_shift = n["addressing_shift"].number();
  p.gamma_eff = n["gamma_eff"].numbers(true);
  p.gamma_up = n["gamma_up"].number();
  p.gamma_down = n["gamma_down"].number();
  p.temperature = n["temperature"].non_negative();
  p.omega_perp = n["omega_perp"].positive();
  if (!n["trap_omega_axes"].is_null()) {
    const auto axes = n["trap_omega_axes"].numbers();
    if (axes.size() != 3) n["trap_omega_axes"].fail("expected 3 values (x, y, z)");
    p.trap_omega_axes = std::array<double, 3>{axes[0], axes[1], axes[2]};
  }
  p.mass = n["mass"].positive();
  return p;
}

json epsilon_json(const EpsilonSpec& e) {
  json j;
  j["backend"] = to_string(e.backend);
  j["times"] = e.times;
  j["values"] = e.values;
  j["path"] = e.path ? json(e.path->string()) : json(nullptr);
  j["quantity"] = e.quantity == EpsilonModel::TableQuantity::p111 ? "p111" : "epsilon";
  j["coefficients"] = e.coefficients;
  j["t_min"] = e.t_min;
  j["t_max"] = e.t_max;
  j["trap_depth"] = e.trap_depth;
  j["calibration_temperature"] = e.calibration_temperature;
  j["calibration_time"] = e.calibration_time;
  j["calibration_target"] = e.calibration_target;
  j["floor"] = e.floor;
  j["n_mc"] = e.n_mc;
  j["seed"] = e.seed;
  return j;
}

EpsilonSpec parse_epsilon(const Node& n) {
  EpsilonSpec e;
  e.backend = parse_backend(n["backend"]);
  e.times = n["times"].numbers();
  e.values = n["values"].numbers();
  if (e.times.size() != e.values.size()) n["values"].fail("must have as many entries as times");
  if (!n["path"].is_null()) e.path = n["path"].string();
  e.quantity = parse_quantity(n["quantity"]);
  e.coefficients = n["coefficients"].numbers();
  e.t_min = n["t_min"].number();
  e.t_max = n["t_max"].number();
  e.trap_depth = n["trap_depth"].non_negative();
  e.calibration_temperature = n["calibration_temperature"].positive();
  e.calibration_time = n["calibration_time"].non_negative();
  e.calibration_target = n["calibration_target"].positive();
  e.floor = n["floor"].non_negative();
  e.n_mc = n["n_mc"].count(1);
  e.seed = n["seed"].unsigned_integer();
  return e;
}

}  // namespace

json default_config_json() {
  RunConfig defaults;
  defaults.options.epsilon.times = default_epsilon_times();
  defaults.options.epsilon.values = default_epsilon_values();
  return to_json(defaults);
}

json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void check_known_keys(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  check_keys(doc, default_config_json(), "");
}

void overlay(json& base, const json& patch) {
  if (!patch.is_object() || !base.is_object()) {
    base = patch;
    return;
  }
  for (const auto& [key, value] : patch.items()) {
    if (base.contains(key) && base[key].is_object() && value.is_object()) {
      overlay(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

void apply_assignment(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("empty key in '" + path + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      break;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

RunConfig parse_config(const json& doc) {
  check_known_keys(doc);
  json full = default_config_json();
  overlay(full, doc);
  const Node root(full, "");

  RunConfig c;
  c.scenario = root["scenario"].string();
  c.options.seed = root["seed"].unsigned_integer();
  c.options.workers = root["workers"].count(1);
  c.output_dir = root["output"]["dir"].string();
  c.formats = root["output"]["formats"].strings();
  for (std::size_t k = 0; k < c.formats.size(); ++k) {
    if (c.formats[k] != "csv" && c.formats[k] != "json")
      throw ConfigError("/output/formats/" + std::to_string(k) + ": expected csv or json");
  }
  c.options.params = parse_params(root["params"]);

  const Node o = root["options"];
  auto& s = c.options;
  s.ideal = o["ideal"].boolean();
  try {
    s.range_mode = range_mode_from_string(o["range_mode"].string());
  } catch (const ConfigError& e) {
    throw ConfigError("/options/range_mode: " + std::string(e.what()));
  }
  if (!o["tau"].is_null()) s.tau = parse_grid(o["tau"]);
  s.distance = o["distance"].positive();
  s.distances = o["distances"].numbers();
  for (std::size_t k = 0; k < s.distances.size(); ++k) {
    if (!(s.distances[k] > 0.0)) throw ConfigError("/options/distances/" + std::to_string(k) + ": must be positive");
  }
  s.n_atoms = o["n_atoms"].count(2);
  s.spacing = o["spacing"].positive();
  s.theta = o["theta"].number();
  s.n_realizations = o["n_realizations"].count(1);
  s.with_detection = o["with_detection"].boolean();
  s.distance_noise = o["distance_noise"].non_negative();
  s.noise_trials = o["noise_trials"].count(2);
  s.optical_pi = o["optical_pi"].non_negative();
  s.microwave_pi = o["microwave_pi"].non_negative();
  s.step_fraction = o["step_fraction"].positive();
  if (s.step_fraction > 1.0) o["step_fraction"].fail("must not exceed 1");
  s.low_temperature = o["low_temperature"].non_negative();
  s.envelope_window = o["envelope_window"].positive();
  s.ablation_time = o["ablation_time"].non_negative();
  s.low_temperature_time = o["low_temperature_time"].non_negative();
  s.long_chain_dt = o["long_chain_dt"].non_negative();
  s.calibration_degree = o["calibration_degree"].count(0);
  s.calibration_grid = parse_grid(o["calibration_grid"]);
  s.epsilon = parse_epsilon(o["epsilon"]);

  if (!c.scenario.empty()) {
    try {
      scenario_info(c.scenario);
    } catch (const ConfigError& e) {
      throw ConfigError("/scenario: " + std::string(e.what()));
    }
  }
  return c;
}

json to_json(const RunConfig& c, bool for_provenance) {
  json j;
  j["scenario"] = c.scenario;
  j["seed"] = c.options.seed;
  if (!for_provenance) j["workers"] = c.options.workers;
  json output;
  if (!for_provenance) output["dir"] = c.output_dir.string();
  output["formats"] = c.formats;
  j["output"] = output;
  j["params"] = params_json(c.options.params);

  const auto& s = c.options;
  json o;
  o["ideal"] = s.ideal;
  o["range_mode"] = to_string(s.range_mode);
  o["tau"] = s.tau ? grid_json(*s.tau) : json(nullptr);
  o["distance"] = s.distance;
  o["distances"] = s.distances;
  o["n_atoms"] = s.n_atoms;
  o["spacing"] = s.spacing;
  o["theta"] = s.theta;
  o["n_realizations"] = s.n_realizations;
  o["with_detection"] = s.with_detection;
  o["distance_noise"] = s.distance_noise;
  o["noise_trials"] = s.noise_trials;
  o["optical_pi"] = s.optical_pi;
  o["microwave_pi"] = s.microwave_pi;
  o["step_fraction"] = s.step_fraction;
  o["low_temperature"] = s.low_temperature;
  o["envelope_window"] = s.envelope_window;
  o["ablation_time"] = s.ablation_time;
  o["low_temperature_time"] = s.low_temperature_time;
  o["long_chain_dt"] = s.long_chain_dt;
  o["calibration_degree"] = s.calibration_degree;
  o["calibration_grid"] = grid_json(s.calibration_grid);
  o["epsilon"] = epsilon_json(s.epsilon);
  j["options"] = o;
  return j;
}

}  // namespace rydchain
