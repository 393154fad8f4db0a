// SPDX-License-Identifier: Apache-2.0

#include "elastree/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace elastree {

using nlohmann::json;

namespace {

// Converts a byte offset from a parse exception into line/column.
std::string line_anchor(const std::string& text, size_t byte) {
  size_t line = 1, col = 1;
  for (size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

// Strict key check: anything not in `allowed` is an error.
void check_keys(const json& j, const std::string& path,
                const std::set<std::string>& allowed) {
  require_object(j, path);
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) fail(path + "/" + key, "unknown key");
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<int> get_int_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of integers");
  std::vector<int> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(get_int(j[i], path + "/" + std::to_string(i)));
  return out;
}

std::vector<double> get_number_array(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i)
    out.push_back(get_number(j[i], path + "/" + std::to_string(i)));
  return out;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON at " + line_anchor(text, e.byte) + ": " + e.what());
  }
}

CloudPricing parse_pricing(const json& j, const std::string& path) {
  check_keys(j, path, {"quantum_seconds", "quantum_cost_usd", "net_speed_bytes_per_sec"});
  CloudPricing pricing;
  if (j.contains("quantum_seconds"))
    pricing.quantum = get_number(j["quantum_seconds"], path + "/quantum_seconds");
  if (j.contains("quantum_cost_usd"))
    pricing.quantum_cost = get_number(j["quantum_cost_usd"], path + "/quantum_cost_usd");
  if (j.contains("net_speed_bytes_per_sec"))
    pricing.net_speed =
        get_number(j["net_speed_bytes_per_sec"], path + "/net_speed_bytes_per_sec");
  return pricing;
}

SlaSpec parse_sla(const json& j, const std::string& path,
                  const std::map<std::string, SlaSpec>& presets) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    const auto it = presets.find(name);
    if (it == presets.end()) fail(path, "unknown SLA preset '" + name + "'");
    return it->second;
  }
  check_keys(j, path, {"alpha", "gamma"});
  SlaSpec sla;
  if (!j.contains("alpha") || !j.contains("gamma"))
    fail(path, "SLA needs both alpha and gamma");
  sla.alpha = get_number(j["alpha"], path + "/alpha");
  sla.gamma = get_number(j["gamma"], path + "/gamma");
  return sla;
}

TreePlanProfile parse_plan(const json& j, const std::string& path) {
  check_keys(j, path, {"op_count", "op_cpu_seconds", "op_out_bytes"});
  if (!j.contains("op_count") || !j.contains("op_cpu_seconds") || !j.contains("op_out_bytes"))
    fail(path, "plan needs op_count, op_cpu_seconds, and op_out_bytes");
  TreePlanProfile plan;
  plan.op_count = get_int_array(j["op_count"], path + "/op_count");
  plan.op_cpu = get_number_array(j["op_cpu_seconds"], path + "/op_cpu_seconds");
  plan.op_out_bytes = get_number_array(j["op_out_bytes"], path + "/op_out_bytes");
  return plan;
}

}  // namespace

const std::map<std::string, SlaSpec>& builtin_sla_presets() {
  static const std::map<std::string, SlaSpec> presets = {
      {"normal", {10.0, 80.0}},
      {"high", {20.0, 40.0}},
      {"critical", {100.0, 40.0}},
      {"best-effort", {20.0, 500.0}},
  };
  return presets;
}

const std::map<std::string, ContainerLayout>& builtin_static_layouts() {
  static const std::map<std::string, ContainerLayout> layouts = {
      {"small", ContainerLayout{{10, 4, 1}}},
      {"medium", ContainerLayout{{26, 8, 2}}},
      {"large", ContainerLayout{{42, 12, 3}}},
  };
  return layouts;
}

Scenario parse_scenario(const std::string& text) {
  const json root = parse_text(text);
  check_keys(root, "",
             {"seed", "mode", "epoch_seconds", "horizon_seconds", "pricing", "layout",
              "capacity", "placement", "forecast", "sla_presets", "classes", "workload",
              "static_layouts"});

  Scenario scenario;
  SimConfig& cfg = scenario.config;
  scenario.static_layouts = builtin_static_layouts();

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned() && !root["seed"].is_number_integer())
      fail("/seed", "expected an integer");
    cfg.seed = root["seed"].get<uint64_t>();
  }
  if (root.contains("epoch_seconds"))
    cfg.epoch = get_number(root["epoch_seconds"], "/epoch_seconds");
  if (!root.contains("horizon_seconds")) fail("", "horizon_seconds is required");
  cfg.horizon = get_number(root["horizon_seconds"], "/horizon_seconds");
  if (root.contains("pricing")) cfg.pricing = parse_pricing(root["pricing"], "/pricing");
  if (root.contains("capacity")) cfg.capacity = get_int(root["capacity"], "/capacity");

  if (root.contains("static_layouts")) {
    const json& extras = root["static_layouts"];
    require_object(extras, "/static_layouts");
    for (const auto& [name, value] : extras.items())
      scenario.static_layouts[name] =
          ContainerLayout{get_int_array(value, "/static_layouts/" + name)};
  }

  // SLA presets: builtins plus file-local additions/overrides.
  std::map<std::string, SlaSpec> presets = builtin_sla_presets();
  if (root.contains("sla_presets")) {
    const json& extras = root["sla_presets"];
    require_object(extras, "/sla_presets");
    for (const auto& [name, value] : extras.items())
      presets[name] = parse_sla(value, "/sla_presets/" + name, presets);
  }

  if (!root.contains("layout")) fail("", "layout is required");
  {
    const json& j = root["layout"];
    check_keys(j, "/layout", {"initial", "bounds_min", "bounds_max"});
    if (!j.contains("initial")) fail("/layout", "initial is required");
    if (j["initial"].is_string()) {
      const std::string name = get_string(j["initial"], "/layout/initial");
      const auto it = scenario.static_layouts.find(name);
      if (it == scenario.static_layouts.end())
        fail("/layout/initial", "unknown layout name '" + name + "'");
      cfg.initial_layout = it->second;
    } else {
      cfg.initial_layout = ContainerLayout{get_int_array(j["initial"], "/layout/initial")};
    }
    if (j.contains("bounds_min"))
      cfg.bounds.min = get_int_array(j["bounds_min"], "/layout/bounds_min");
    else
      cfg.bounds.min.assign(cfg.initial_layout.levels.size(), 1);
    if (j.contains("bounds_max"))
      cfg.bounds.max = get_int_array(j["bounds_max"], "/layout/bounds_max");
    else {
      // Default ceiling: generous headroom above the initial allocation.
      cfg.bounds.max.clear();
      for (int c : cfg.initial_layout.levels) cfg.bounds.max.push_back(std::max(c * 4, 8));
    }
  }

  if (root.contains("placement")) {
    const json& j = root["placement"];
    check_keys(j, "/placement", {"partitions", "replication", "arc", "data_size_bytes"});
    if (j.contains("partitions")) cfg.partitions = get_int(j["partitions"], "/placement/partitions");
    if (j.contains("replication"))
      cfg.replication = get_int(j["replication"], "/placement/replication");
    if (j.contains("arc")) cfg.arc = get_int(j["arc"], "/placement/arc");
    if (j.contains("data_size_bytes"))
      cfg.data_size = get_number(j["data_size_bytes"], "/placement/data_size_bytes");
  }

  if (root.contains("forecast")) {
    const json& j = root["forecast"];
    check_keys(j, "/forecast",
               {"historical_window_seconds", "max_optimizer_iterations", "enumeration_cap"});
    if (j.contains("historical_window_seconds"))
      cfg.w_h = get_number(j["historical_window_seconds"], "/forecast/historical_window_seconds");
    if (j.contains("max_optimizer_iterations"))
      cfg.max_opt_iters =
          get_int(j["max_optimizer_iterations"], "/forecast/max_optimizer_iterations");
    if (j.contains("enumeration_cap"))
      cfg.enum_cap = get_int(j["enumeration_cap"], "/forecast/enumeration_cap");
  }

  if (!root.contains("classes")) fail("", "classes is required");
  {
    const json& arr = root["classes"];
    if (!arr.is_array() || arr.empty()) fail("/classes", "expected a non-empty array");
    for (size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "/classes/" + std::to_string(i);
      const json& j = arr[i];
      check_keys(j, path, {"id", "sla", "plan"});
      if (!j.contains("id") || !j.contains("sla") || !j.contains("plan"))
        fail(path, "class needs id, sla, and plan");
      QueryClass cls;
      cls.id = get_string(j["id"], path + "/id");
      cls.sla = parse_sla(j["sla"], path + "/sla", presets);
      cls.plan = parse_plan(j["plan"], path + "/plan");
      scenario.class_ids.push_back(cls.id);
      cfg.classes.push_back(std::move(cls));
    }
  }

  const auto class_index = [&](const std::string& name, const std::string& path) {
    for (size_t i = 0; i < scenario.class_ids.size(); ++i)
      if (scenario.class_ids[i] == name) return static_cast<int>(i);
    fail(path, "unknown class '" + name + "'");
  };

  if (!root.contains("workload")) fail("", "workload is required");
  {
    const json& j = root["workload"];
    check_keys(j, "/workload", {"phases", "arrivals"});
    if (j.contains("phases")) {
      const json& arr = j["phases"];
      if (!arr.is_array()) fail("/workload/phases", "expected an array");
      for (size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "/workload/phases/" + std::to_string(i);
        check_keys(arr[i], path, {"duration_seconds", "class", "lambda_seconds"});
        Phase phase;
        if (!arr[i].contains("duration_seconds") || !arr[i].contains("class") ||
            !arr[i].contains("lambda_seconds"))
          fail(path, "phase needs duration_seconds, class, and lambda_seconds");
        phase.duration = get_number(arr[i]["duration_seconds"], path + "/duration_seconds");
        phase.lambda = get_number(arr[i]["lambda_seconds"], path + "/lambda_seconds");
        phase.class_index = class_index(get_string(arr[i]["class"], path + "/class"),
                                        path + "/class");
        cfg.phases.push_back(phase);
      }
    }
    if (j.contains("arrivals")) {
      const json& arr = j["arrivals"];
      if (!arr.is_array()) fail("/workload/arrivals", "expected an array");
      for (size_t i = 0; i < arr.size(); ++i) {
        const std::string path = "/workload/arrivals/" + std::to_string(i);
        check_keys(arr[i], path, {"time_seconds", "class"});
        if (!arr[i].contains("time_seconds") || !arr[i].contains("class"))
          fail(path, "arrival needs time_seconds and class");
        ArrivalSpec spec;
        spec.time = get_number(arr[i]["time_seconds"], path + "/time_seconds");
        spec.class_index =
            class_index(get_string(arr[i]["class"], path + "/class"), path + "/class");
        cfg.arrivals.push_back(spec);
      }
    }
  }

  if (root.contains("mode")) apply_mode_override(scenario, get_string(root["mode"], "/mode"));

  cfg.validate();
  return scenario;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

void apply_mode_override(Scenario& scenario, const std::string& mode) {
  if (mode == "elastic") {
    scenario.config.mode = SimMode::kElastic;
    return;
  }
  if (mode.rfind("static:", 0) == 0) {
    const std::string name = mode.substr(7);
    const auto it = scenario.static_layouts.find(name);
    if (it == scenario.static_layouts.end())
      throw ConfigError("/mode: unknown static layout '" + name + "'");
    scenario.config.mode = SimMode::kStatic;
    scenario.config.initial_layout = it->second;
    return;
  }
  throw ConfigError("/mode: expected 'elastic' or 'static:<name>', got '" + mode + "'");
}

OptimizeInput parse_optimize_input(const std::string& text) {
  const json root = parse_text(text);
  check_keys(root, "", {"stats", "config"});
  if (!root.contains("stats") || !root.contains("config"))
    fail("", "optimize input needs stats and config");

  OptimizeInput input;
  {
    const json& j = root["stats"];
    check_keys(j, "/stats",
               {"q_h", "cpu_h_seconds", "net_h_bytes", "conc", "l_h", "w_h_seconds"});
    for (const char* key : {"q_h", "cpu_h_seconds", "net_h_bytes", "conc", "l_h", "w_h_seconds"})
      if (!j.contains(key)) fail("/stats", std::string("missing ") + key);
    input.stats.q_h = get_number_array(j["q_h"], "/stats/q_h");
    for (double q : input.stats.q_h) input.stats.num_q += q;
    input.stats.cpu_h = get_number_array(j["cpu_h_seconds"], "/stats/cpu_h_seconds");
    input.stats.net_h = get_number_array(j["net_h_bytes"], "/stats/net_h_bytes");
    input.stats.conc = get_number(j["conc"], "/stats/conc");
    input.stats.l_h = ContainerLayout{get_int_array(j["l_h"], "/stats/l_h")};
    input.stats.w_h = get_number(j["w_h_seconds"], "/stats/w_h_seconds");
    if (input.stats.cpu_h.size() != input.stats.net_h.size() ||
        input.stats.cpu_h.size() != input.stats.l_h.levels.size())
      fail("/stats", "cpu_h_seconds, net_h_bytes, and l_h must have equal length");
    if (!(input.stats.w_h > 0.0)) fail("/stats/w_h_seconds", "must be > 0");
  }
  {
    const json& j = root["config"];
    check_keys(j, "/config",
               {"w_p_seconds", "pricing", "arc", "data_size_bytes", "slas", "bounds_min",
                "bounds_max", "enumeration_cap", "max_optimizer_iterations"});
    if (j.contains("w_p_seconds"))
      input.config.w_p = get_number(j["w_p_seconds"], "/config/w_p_seconds");
    if (j.contains("pricing"))
      input.config.pricing = parse_pricing(j["pricing"], "/config/pricing");
    if (j.contains("arc")) input.config.arc = get_int(j["arc"], "/config/arc");
    if (j.contains("data_size_bytes"))
      input.config.data_size = get_number(j["data_size_bytes"], "/config/data_size_bytes");
    if (!j.contains("slas")) fail("/config", "missing slas");
    {
      const json& arr = j["slas"];
      if (!arr.is_array() || arr.empty()) fail("/config/slas", "expected a non-empty array");
      for (size_t i = 0; i < arr.size(); ++i)
        input.config.slas.push_back(parse_sla(arr[i], "/config/slas/" + std::to_string(i),
                                              builtin_sla_presets()));
    }
    if (!j.contains("bounds_min") || !j.contains("bounds_max"))
      fail("/config", "missing bounds_min/bounds_max");
    input.config.bounds.min = get_int_array(j["bounds_min"], "/config/bounds_min");
    input.config.bounds.max = get_int_array(j["bounds_max"], "/config/bounds_max");
    if (j.contains("enumeration_cap"))
      input.config.enum_cap = get_int(j["enumeration_cap"], "/config/enumeration_cap");
    if (j.contains("max_optimizer_iterations"))
      input.config.max_opt_iters =
          get_int(j["max_optimizer_iterations"], "/config/max_optimizer_iterations");
  }

  if (input.config.slas.size() != input.stats.q_h.size())
    fail("/config/slas", "length must match /stats/q_h");
  input.config.bounds.validate();
  if (input.config.bounds.height() != input.stats.height())
    throw BoundsError("/config/bounds_min: height must match /stats/cpu_h_seconds");
  return input;
}

OptimizeInput load_optimize_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read stats file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_optimize_input(buffer.str());
}

}  // namespace elastree
