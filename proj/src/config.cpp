#include "fbic/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace fbic {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) parts.push_back(trim(item));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_plain_number(const std::string& text) {
  const std::string t = trim(text);
  double value = 0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc() || ptr != end) throw ConfigError("expected a number, got '" + text + "'");
  if (!std::isfinite(value)) throw ConfigError("expected a finite number, got '" + text + "'");
  return value;
}

// Accepts plain numbers and the forms "pi", "c*pi", "pi/d", "c*pi/d" (with an optional sign).
double parse_number(const std::string& text) {
  std::string t = trim(text);
  const auto at = t.find("pi");
  if (at == std::string::npos) return parse_plain_number(t);
  double coefficient = 1;
  std::string head = trim(t.substr(0, at));
  if (head == "-") {
    coefficient = -1;
  } else if (!head.empty() && head != "+") {
    if (head.back() != '*') throw ConfigError("cannot read '" + text + "' as a number");
    coefficient = parse_plain_number(head.substr(0, head.size() - 1));
  }
  std::string tail = trim(t.substr(at + 2));
  double divisor = 1;
  if (!tail.empty()) {
    if (tail.front() != '/') throw ConfigError("cannot read '" + text + "' as a number");
    divisor = parse_plain_number(tail.substr(1));
    if (divisor == 0) throw ConfigError("division by zero in '" + text + "'");
  }
  return coefficient * pi<double> / divisor;
}

int parse_int(const std::string& text) {
  const std::string t = trim(text);
  int value = 0;
  const auto* end = t.data() + t.size();
  const auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (t.empty() || ec != std::errc() || ptr != end) throw ConfigError("expected an integer, got '" + text + "'");
  return value;
}

bool parse_bool(const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw ConfigError("expected true or false, got '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) out.push_back(parse_int(item));
  return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_same_v<T, double>)
      out += format_number(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

template <typename Enum>
Enum parse_choice(const std::string& text, const std::vector<std::pair<const char*, Enum>>& choices) {
  const std::string t = trim(text);
  std::string names;
  for (const auto& [name, value] : choices) {
    if (t == name) return value;
    names += names.empty() ? name : std::string(", ") + name;
  }
  throw ConfigError("expected one of {" + names + "}, got '" + text + "'");
}

template <typename Enum>
std::string choice_name(Enum value, const std::vector<std::pair<const char*, Enum>>& choices) {
  for (const auto& [name, v] : choices)
    if (v == value) return name;
  return "?";
}

const std::vector<std::pair<const char*, ProfileKind>> profile_names = {
    {"defect", ProfileKind::defect},
    {"multimode", ProfileKind::multimode},
    {"uniform", ProfileKind::uniform},
    {"explicit", ProfileKind::explicit_arrays}};
const std::vector<std::pair<const char*, Boundary>> boundary_names = {{"open", Boundary::open},
                                                                      {"periodic", Boundary::periodic}};
const std::vector<std::pair<const char*, Frame>> frame_names = {{"rotating", Frame::rotating}, {"lab", Frame::lab}};
const std::vector<std::pair<const char*, InitialState>> initial_names = {
    {"dark_bic", InitialState::dark_bic}, {"packet", InitialState::packet}, {"site", InitialState::site}};
const std::vector<std::pair<const char*, DecayVariable>> decay_names = {{"gamma", DecayVariable::gamma},
                                                                        {"omega", DecayVariable::omega}};

struct Key {
  std::string section;
  std::string name;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

#define FBIC_NUMBER(sec, key, field)                                                   \
  Key { sec, key, [](ScenarioConfig& c, const std::string& v) { c.field = parse_number(v); }, \
        [](const ScenarioConfig& c) { return format_number(c.field); } }
#define FBIC_INT(sec, key, field)                                                   \
  Key { sec, key, [](ScenarioConfig& c, const std::string& v) { c.field = parse_int(v); }, \
        [](const ScenarioConfig& c) { return std::to_string(c.field); } }
#define FBIC_BOOL(sec, key, field)                                                   \
  Key { sec, key, [](ScenarioConfig& c, const std::string& v) { c.field = parse_bool(v); }, \
        [](const ScenarioConfig& c) { return std::string(c.field ? "true" : "false"); } }
#define FBIC_GRID(sec, key, field)                                                   \
  Key { sec, key, [](ScenarioConfig& c, const std::string& v) { c.field = parse_grid(v); }, \
        [](const ScenarioConfig& c) { return join(c.field); } }
#define FBIC_CHOICE(sec, key, field, names)                                                         \
  Key { sec, key, [](ScenarioConfig& c, const std::string& v) { c.field = parse_choice(v, names); }, \
        [](const ScenarioConfig& c) { return choice_name(c.field, names); } }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      FBIC_CHOICE("model", "profile", model.profile, profile_names),
      FBIC_INT("model", "n_sites", model.n_sites),
      FBIC_INT("model", "modes", model.modes),
      FBIC_NUMBER("model", "k", model.k),
      FBIC_NUMBER("model", "g", model.g),
      FBIC_NUMBER("model", "gamma", model.gamma),
      FBIC_NUMBER("model", "gamma_norm", model.gamma_norm),
      Key{"model", "f0",
          [](ScenarioConfig& c, const std::string& v) {
            c.model.gamma_norm = parse_number(v) * c.model.lattice_constant / c.model.omega;
          },
          nullptr},
      FBIC_NUMBER("model", "omega", model.omega),
      FBIC_NUMBER("model", "a", model.lattice_constant),
      FBIC_NUMBER("model", "u", model.u),
      Key{"model", "u_sites",
          [](ScenarioConfig& c, const std::string& v) { c.model.nonlinear_sites = parse_int_list(v); },
          [](const ScenarioConfig& c) { return join(c.model.nonlinear_sites); }},
      FBIC_CHOICE("model", "boundary", model.boundary, boundary_names),
      FBIC_GRID("model", "hopping", model.hopping),
      FBIC_GRID("model", "loss", model.loss),
      FBIC_GRID("model", "nonlinearity", model.nonlinearity),

      FBIC_INT("run", "steps_per_period", run.steps_per_period),
      FBIC_INT("run", "samples_per_period", run.samples_per_period),
      FBIC_CHOICE("run", "frame", run.frame, frame_names),
      FBIC_NUMBER("run", "growth_tolerance", run.growth_tolerance),
      FBIC_NUMBER("run", "ipr_threshold", run.ipr_threshold),
      FBIC_NUMBER("run", "dark_tol", run.dark_tol),
      FBIC_NUMBER("run", "pop_tol", run.pop_tol),
      FBIC_NUMBER("run", "band_margin", run.band_margin),
      FBIC_NUMBER("run", "band_margin_abs", run.band_margin_abs),
      FBIC_NUMBER("run", "periods", run.periods),
      FBIC_CHOICE("run", "initial", run.initial, initial_names),
      FBIC_INT("run", "initial_site", run.initial_site),
      FBIC_NUMBER("run", "packet_center", run.packet.center),
      FBIC_NUMBER("run", "packet_width", run.packet.width),
      FBIC_NUMBER("run", "packet_momentum", run.packet.momentum),
      FBIC_GRID("run", "gamma_norm_grid", run.gamma_norm_grid),
      FBIC_GRID("run", "gamma_grid", run.gamma_grid),
      FBIC_GRID("run", "omega_grid", run.omega_grid),
      FBIC_GRID("run", "u_grid", run.u_grid),
      Key{"run", "modes_grid", [](ScenarioConfig& c, const std::string& v) { c.run.modes_grid = parse_int_list(v); },
          [](const ScenarioConfig& c) { return join(c.run.modes_grid); }},
      FBIC_CHOICE("run", "decay_variable", run.decay_variable, decay_names),
      Key{"run", "probe_time",
          [](ScenarioConfig& c, const std::string& v) {
            if (trim(v) == "none")
              c.run.probe_time.reset();
            else
              c.run.probe_time = parse_number(v);
          },
          [](const ScenarioConfig& c) { return c.run.probe_time ? format_number(*c.run.probe_time) : "none"; }},
      FBIC_NUMBER("run", "probe_periods", run.probe_periods),
      FBIC_BOOL("run", "retune_to_beta_root", run.retune_to_beta_root),
      FBIC_INT("run", "truncation", run.truncation),
      FBIC_NUMBER("run", "check_tolerance", run.check_tolerance),

      FBIC_BOOL("output", "profiles", output.profiles),
      FBIC_BOOL("output", "trajectories", output.trajectories),
  };
  return table;
}

#undef FBIC_NUMBER
#undef FBIC_INT
#undef FBIC_BOOL
#undef FBIC_GRID
#undef FBIC_CHOICE

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& key : keys())
    if (key.section == section && key.name == name) return &key;
  return nullptr;
}

void assign(ScenarioConfig& config, const std::string& section, const std::string& name, const std::string& value,
            const std::string& where) {
  const Key* key = find_key(section, name);
  if (!key) throw ConfigError(where + ": unknown key '" + section + "." + name + "'");
  try {
    key->set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + section + "." + name + ": " + e.what());
  }
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return {};
  for (const char* fn : {"linspace", "geomspace"}) {
    const std::string name = fn;
    if (t.rfind(name + "(", 0) != 0) continue;
    if (t.back() != ')') throw ConfigError("unterminated " + name + "(...)");
    const auto args = split(t.substr(name.size() + 1, t.size() - name.size() - 2), ',');
    if (args.size() != 3) throw ConfigError(name + " takes (first, last, count)");
    const double first = parse_number(args[0]), last = parse_number(args[1]);
    const int count = parse_int(args[2]);
    if (count < 1) throw ConfigError(name + " count must be positive");
    if (name == "geomspace" && !(first > 0 && last > 0)) throw ConfigError("geomspace needs positive end points");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const double f = count == 1 ? 0.0 : double(i) / (count - 1);
      out[static_cast<std::size_t>(i)] =
          name == "linspace" ? first + (last - first) * f : first * std::pow(last / first, f);
    }
    out.back() = last;
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split(t, ',')) out.push_back(parse_number(item));
  return out;
}

AnalyzeOptions<double> ScenarioConfig::analyze_options(int jobs) const {
  AnalyzeOptions<double> o;
  o.monodromy.steps_per_period = run.steps_per_period;
  o.monodromy.jobs = jobs;
  o.band.relative_margin = run.band_margin;
  o.band.absolute_margin = run.band_margin_abs;
  o.classify.ipr_threshold = run.ipr_threshold;
  o.classify.dark_tol = run.dark_tol;
  o.classify.pop_tol = run.pop_tol;
  return o;
}

EvolveOptions<double> ScenarioConfig::evolve_options() const {
  EvolveOptions<double> o;
  o.steps_per_period = run.steps_per_period;
  o.samples_per_period = run.samples_per_period;
  o.frame = run.frame;
  o.growth_tolerance = run.growth_tolerance;
  return o;
}

RunOptions ScenarioConfig::run_options(int jobs) const {
  RunOptions o;
  o.analysis = analyze_options(jobs);
  o.evolve = evolve_options();
  o.jobs = jobs;
  return o;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  ScenarioConfig config;
  std::istringstream in(text);
  std::string line, section;
  std::set<std::string> seen;
  std::optional<std::pair<std::string, std::string>> f0;  // value, location
  for (int number = 1; std::getline(in, line); ++number) {
    const std::string where = source + ":" + std::to_string(number);
    std::string body = line;
    const auto comment = body.find_first_of("#;");
    if (comment != std::string::npos) body = body.substr(0, comment);
    body = trim(body);
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ConfigError(where + ": malformed section header '" + body + "'");
      section = trim(body.substr(1, body.size() - 2));
      if (section != "model" && section != "run" && section != "output")
        throw ConfigError(where + ": unknown section '" + section + "'");
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value', got '" + body + "'");
    if (section.empty()) throw ConfigError(where + ": key outside of any [section]");
    const std::string name = trim(body.substr(0, eq));
    const std::string qualified = section + "." + name;
    if (!seen.insert(qualified).second) throw ConfigError(where + ": duplicate key '" + qualified + "'");
    if (seen.count("model.f0") && seen.count("model.gamma_norm"))
      throw ConfigError(where + ": give either model.f0 or model.gamma_norm, not both");
    // f0 is converted with the final a and omega, so it is applied last.
    if (qualified == "model.f0")
      f0.emplace(body.substr(eq + 1), where);
    else
      assign(config, section, name, body.substr(eq + 1), where);
  }
  if (f0) assign(config, "model", "f0", f0->first, f0->second);
  return config;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path);
}

void apply_override(ScenarioConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const std::string where = "--set " + assignment;
  if (eq == std::string::npos) throw ConfigError(where + ": expected section.key=value");
  const std::string qualified = trim(assignment.substr(0, eq));
  const auto dot = qualified.find('.');
  if (dot == std::string::npos) throw ConfigError(where + ": key must be written as section.key");
  assign(config, qualified.substr(0, dot), qualified.substr(dot + 1), assignment.substr(eq + 1), where);
}

std::string to_ini(const ScenarioConfig& config) {
  std::string out;
  std::string section;
  for (const auto& key : keys()) {
    if (!key.get) continue;
    if (key.section != section) {
      if (!section.empty()) out += "\n";
      section = key.section;
      out += "[" + section + "]\n";
    }
    out += key.name + " = " + key.get(config) + "\n";
  }
  return out;
}

void validate_for(const ScenarioConfig& config, const std::string& command) {
  const auto& run = config.run;
  auto need = [](bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
  };
  auto need_grid = [&](const auto& grid, const std::string& name) { need(!grid.empty(), "run." + name + " is empty"); };
  need(run.steps_per_period >= 64, "run.steps_per_period must be at least 64");
  need(run.samples_per_period >= 1 && run.samples_per_period <= run.steps_per_period,
       "run.samples_per_period must lie in [1, steps_per_period]");
  need(run.truncation >= 10, "run.truncation must be at least 10");
  if (command == "ipr-map") need_grid(run.gamma_norm_grid, "gamma_norm_grid");
  if (command == "scatter") need_grid(run.gamma_grid, "gamma_grid");
  if (command == "decay") {
    if (run.decay_variable == DecayVariable::gamma)
      need_grid(run.gamma_grid, "gamma_grid");
    else
      need_grid(run.omega_grid, "omega_grid");
  }
  if (command == "nonlinear") need_grid(run.u_grid, "u_grid");
  if (command == "multimode") {
    need_grid(run.modes_grid, "modes_grid");
    for (int m : run.modes_grid) need(m >= 2, "run.modes_grid entries must be at least 2");
  }
  if (command == "hfe") {
    need_grid(run.gamma_norm_grid, "gamma_norm_grid");
    need_grid(run.omega_grid, "omega_grid");
  }
  if (command == "evolve" || command == "scatter" || command == "nonlinear" || command == "multimode")
    need(run.periods > 0, "run.periods must be positive");
  for (double v : run.omega_grid) need(v > 0, "run.omega_grid entries must be positive");
  for (double v : run.gamma_grid) need(v >= 0, "run.gamma_grid entries must be non-negative");
  // Building the model surfaces profile and lattice errors before any computation.
  try {
    if (command != "multimode") config.model.build();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

}  // namespace fbic
