#include "walk/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

#include "walk/csv.hpp"

namespace walk {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) {
    return "";
  }
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(path + ": cannot open file");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), path);
}

KeyValueFile KeyValueFile::parse_string(const std::string& text,
                                        const std::string& name) {
  KeyValueFile kv;
  kv.name_ = name;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ConfigError(name + ":" + std::to_string(lineno) +
                          ": empty section name");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(name + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(name + ":" + std::to_string(lineno) + ": empty key");
    }
    const std::string full = section + "." + key;
    kv.entries_[full].push_back({value, lineno});
    kv.order_.push_back(full);
  }
  return kv;
}

const KeyValueFile::Entry* KeyValueFile::find(const std::string& section,
                                              const std::string& key) const {
  auto it = entries_.find(section + "." + key);
  if (it == entries_.end() || it->second.empty()) {
    return nullptr;
  }
  return &it->second.back();
}

bool KeyValueFile::has(const std::string& section,
                       const std::string& key) const {
  return find(section, key) != nullptr;
}

double KeyValueFile::to_double(const Entry& e, const std::string& what) const {
  try {
    std::size_t pos = 0;
    const double v = std::stod(e.value, &pos);
    if (pos != e.value.size()) {
      throw std::invalid_argument("trailing characters");
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError(name_ + ":" + std::to_string(e.line) + ": " + what +
                      " is not a number: '" + e.value + "'");
  }
}

double KeyValueFile::get_double(const std::string& section,
                                const std::string& key, double def) const {
  const Entry* e = find(section, key);
  return e ? to_double(*e, section + "." + key) : def;
}

long KeyValueFile::get_long(const std::string& section, const std::string& key,
                            long def) const {
  const Entry* e = find(section, key);
  if (!e) {
    return def;
  }
  const double v = to_double(*e, section + "." + key);
  const long l = std::lround(v);
  if (static_cast<double>(l) != v) {
    throw ConfigError(name_ + ":" + std::to_string(e->line) + ": " + section +
                      "." + key + " must be an integer");
  }
  return l;
}

std::string KeyValueFile::get_string(const std::string& section,
                                     const std::string& key,
                                     const std::string& def) const {
  const Entry* e = find(section, key);
  return e ? e->value : def;
}

std::vector<std::string> KeyValueFile::get_all(const std::string& section,
                                               const std::string& key) const {
  std::vector<std::string> out;
  auto it = entries_.find(section + "." + key);
  if (it != entries_.end()) {
    for (const Entry& e : it->second) {
      out.push_back(e.value);
    }
  }
  return out;
}

void KeyValueFile::check_known_keys(
    const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const std::string& full : order_) {
    const auto dot = full.find('.');
    const std::string section = full.substr(0, dot);
    const std::string key = full.substr(dot + 1);
    auto it = allowed.find(section);
    if (it == allowed.end() ||
        std::find(it->second.begin(), it->second.end(), key) ==
            it->second.end()) {
      const auto& e = entries_.at(full).front();
      throw ConfigError(name_ + ":" + std::to_string(e.line) +
                        ": unknown key '" + full + "'");
    }
  }
}

namespace {

Side parse_side(const std::string& s, const std::string& what) {
  if (s == "left") {
    return Side::Left;
  }
  if (s == "right") {
    return Side::Right;
  }
  throw ConfigError(what + " must be 'left' or 'right'");
}

std::vector<double> parse_numbers(const std::string& s, std::size_t n,
                                  const std::string& what) {
  std::istringstream in(s);
  std::vector<double> out;
  double v;
  while (in >> v) {
    out.push_back(v);
  }
  if (!in.eof() || out.size() != n) {
    throw ConfigError(what + " needs exactly " + std::to_string(n) +
                      " numbers, got '" + s + "'");
  }
  return out;
}

GABounds::Range parse_range(const KeyValueFile& kv, const std::string& key,
                            GABounds::Range def) {
  if (!kv.has("bounds", key)) {
    return def;
  }
  const auto v = parse_numbers(kv.get_string("bounds", key, ""), 2,
                               "bounds." + key);
  return {v[0], v[1]};
}

}  // namespace

SimSetup AppConfig::setup() const {
  SimSetup s;
  s.model = model;
  s.engine = engine;
  s.engine.gait = gait;
  s.weights = weights;
  s.noise = noise;
  s.feet = feet;
  s.integrator_clamp = integrator_clamp;
  return s;
}

AppConfig load_config(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::parse_file(path);
  kv.check_known_keys({
      {"model", {"m_c", "m_to", "l", "z_c", "z_to", "phi", "g"}},
      {"gait",
       {"step_x", "step_y", "step_theta", "z_swing", "t_ss", "ti_to", "a_z",
        "a_to"}},
      {"engine",
       {"control_dt", "init_duration", "t_ds", "lateral_separation",
        "first_swing", "d_step_x", "d_step_y", "d_step_theta", "d_t_ss",
        "d_t_ds", "max_step_length", "max_step_width", "max_step_rotation"}},
      {"controller",
       {"q", "q_i", "r", "m_i", "integrator_clamp", "dare_tol",
        "dare_max_iter"}},
      {"noise",
       {"measure", "q_proc", "r_meas_pos", "r_meas_vel", "r_meas_theta",
        "r_meas_thetad"}},
      {"feet", {"length", "width", "fall_dwell"}},
      {"ga",
       {"population", "generations", "crossover_rate", "mutation_rate",
        "mutation_sigma_scale", "elitism", "tournament", "repeats", "seed",
        "threads", "eval_duration", "eval_sigma_pos", "eval_sigma_vel",
        "eval_sigma_theta", "eval_sigma_thetad"}},
      {"bounds",
       {"step_x", "step_y", "step_theta", "z_swing", "t_ss", "ti_to", "a_z",
        "a_to"}},
      {"paths", {"scenario"}},
  });

  AppConfig c;
  c.model.m_c = kv.get_double("model", "m_c", c.model.m_c);
  c.model.m_to = kv.get_double("model", "m_to", c.model.m_to);
  c.model.l = kv.get_double("model", "l", c.model.l);
  c.model.z_c = kv.get_double("model", "z_c", c.model.z_c);
  c.model.z_to = kv.get_double("model", "z_to", c.model.z_to);
  c.model.phi = kv.get_double("model", "phi", c.model.phi);
  c.model.g = kv.get_double("model", "g", c.model.g);

  c.gait.step_x = kv.get_double("gait", "step_x", c.gait.step_x);
  c.gait.step_y = kv.get_double("gait", "step_y", c.gait.step_y);
  c.gait.step_theta = kv.get_double("gait", "step_theta", c.gait.step_theta);
  c.gait.z_swing = kv.get_double("gait", "z_swing", c.gait.z_swing);
  c.gait.t_ss = kv.get_double("gait", "t_ss", c.gait.t_ss);
  c.gait.ti_to = kv.get_double("gait", "ti_to", c.gait.ti_to);
  c.gait.a_z = kv.get_double("gait", "a_z", c.gait.a_z);
  c.gait.a_to = kv.get_double("gait", "a_to", c.gait.a_to);

  c.engine.control_dt = kv.get_double("engine", "control_dt", 0.02);
  c.engine.init_duration = kv.get_double("engine", "init_duration", 1.0);
  c.engine.t_ds = kv.get_double("engine", "t_ds", 0.0);
  c.engine.lateral_separation =
      kv.get_double("engine", "lateral_separation", 0.10);
  c.engine.first_swing = parse_side(
      kv.get_string("engine", "first_swing", "left"), "engine.first_swing");
  c.engine.limits.d_step_x = kv.get_double("engine", "d_step_x", 0.02);
  c.engine.limits.d_step_y = kv.get_double("engine", "d_step_y", 0.02);
  c.engine.limits.d_step_theta = kv.get_double("engine", "d_step_theta", 0.2);
  c.engine.limits.d_t_ss = kv.get_double("engine", "d_t_ss", 0.1);
  c.engine.limits.d_t_ds = kv.get_double("engine", "d_t_ds", 0.1);
  c.engine.constraints.max_step_length =
      kv.get_double("engine", "max_step_length", 0.12);
  c.engine.constraints.max_step_width =
      kv.get_double("engine", "max_step_width", 0.05);
  c.engine.constraints.max_step_rotation =
      kv.get_double("engine", "max_step_rotation", 0.3);

  const int m_i = static_cast<int>(kv.get_long("controller", "m_i", 2));
  c.weights = CostWeights::defaults(m_i);
  if (kv.has("controller", "q")) {
    const auto q = parse_numbers(kv.get_string("controller", "q", ""), 4,
                                 "controller.q");
    for (int i = 0; i < 4; ++i) {
      c.weights.Q(i, i) = q[static_cast<std::size_t>(i)];
    }
  }
  if (kv.has("controller", "q_i")) {
    const auto qi = parse_numbers(kv.get_string("controller", "q_i", ""),
                                  static_cast<std::size_t>(m_i),
                                  "controller.q_i");
    for (int i = 0; i < m_i; ++i) {
      c.weights.Q(4 + i, 4 + i) = qi[static_cast<std::size_t>(i)];
    }
  }
  if (kv.has("controller", "r")) {
    const auto r = parse_numbers(kv.get_string("controller", "r", ""), 2,
                                 "controller.r");
    c.weights.R = Eigen::Vector2d(r[0], r[1]).asDiagonal();
  }
  c.integrator_clamp = kv.get_double("controller", "integrator_clamp", 10.0);
  c.weights.dare_tol = kv.get_double("controller", "dare_tol", 1e-10);
  c.weights.dare_max_iter =
      static_cast<int>(kv.get_long("controller", "dare_max_iter", 100000));

  const std::string measure = kv.get_string("noise", "measure", "full");
  const double q_proc = kv.get_double("noise", "q_proc", 1e-8);
  if (measure == "full") {
    c.noise = NoiseModel::full_state(
        q_proc, kv.get_double("noise", "r_meas_pos", 1e-4),
        kv.get_double("noise", "r_meas_vel", 1e-4),
        kv.get_double("noise", "r_meas_theta", 1e-4),
        kv.get_double("noise", "r_meas_thetad", 1e-4));
  } else if (measure == "positions") {
    c.noise = NoiseModel::positions(
        q_proc, kv.get_double("noise", "r_meas_pos", 1e-4),
        kv.get_double("noise", "r_meas_theta", 1e-4));
  } else {
    throw ConfigError("noise.measure must be 'full' or 'positions'");
  }

  c.feet.length = kv.get_double("feet", "length", 0.16);
  c.feet.width = kv.get_double("feet", "width", 0.09);
  c.feet.fall_dwell = static_cast<int>(kv.get_long("feet", "fall_dwell", 3));

  c.ga.population = static_cast<int>(kv.get_long("ga", "population", 20));
  c.ga.generations = static_cast<int>(kv.get_long("ga", "generations", 30));
  c.ga.crossover_rate = kv.get_double("ga", "crossover_rate", 0.9);
  c.ga.mutation_rate = kv.get_double("ga", "mutation_rate", 0.15);
  c.ga.mutation_sigma_scale =
      kv.get_double("ga", "mutation_sigma_scale", 0.1);
  c.ga.elitism = static_cast<int>(kv.get_long("ga", "elitism", 2));
  c.ga.tournament = static_cast<int>(kv.get_long("ga", "tournament", 3));
  c.ga.repeats = static_cast<int>(kv.get_long("ga", "repeats", 3));
  c.ga.seed = static_cast<std::uint64_t>(kv.get_long("ga", "seed", 1));
  c.ga.threads = static_cast<int>(kv.get_long("ga", "threads", 0));
  c.ga.eval_duration = kv.get_double("ga", "eval_duration", 10.0);
  c.ga.eval_sigma_pos = kv.get_double("ga", "eval_sigma_pos", 0.002);
  c.ga.eval_sigma_vel = kv.get_double("ga", "eval_sigma_vel", 0.002);
  c.ga.eval_sigma_theta = kv.get_double("ga", "eval_sigma_theta", 0.005);
  c.ga.eval_sigma_thetad = kv.get_double("ga", "eval_sigma_thetad", 0.005);

  c.bounds.step_x = parse_range(kv, "step_x", c.bounds.step_x);
  c.bounds.step_y = parse_range(kv, "step_y", c.bounds.step_y);
  c.bounds.step_theta = parse_range(kv, "step_theta", c.bounds.step_theta);
  c.bounds.z_swing = parse_range(kv, "z_swing", c.bounds.z_swing);
  c.bounds.t_ss = parse_range(kv, "t_ss", c.bounds.t_ss);
  c.bounds.ti_to = parse_range(kv, "ti_to", c.bounds.ti_to);
  c.bounds.a_z = parse_range(kv, "a_z", c.bounds.a_z);
  c.bounds.a_to = parse_range(kv, "a_to", c.bounds.a_to);

  c.scenario_path = kv.get_string("paths", "scenario", "");

  c.model.validate();
  c.model.A_z = c.gait.a_z;
  c.model.step_time = c.gait.t_ss + c.engine.t_ds;
  c.model.validate();
  c.engine.gait = c.gait;
  c.engine.validate();
  c.weights.validate();
  c.noise.validate();
  c.bounds.validate();
  c.ga.validate();
  return c;
}

Scenario load_scenario(const std::string& path) {
  const KeyValueFile kv = KeyValueFile::parse_file(path);
  kv.check_known_keys({
      {"",
       {"duration", "seed", "meas_sigma_pos", "meas_sigma_vel",
        "meas_sigma_theta", "meas_sigma_thetad", "proc_sigma", "margin",
        "command", "impulse", "stop"}},
  });
  Scenario s;
  s.duration = kv.get_double("", "duration", 10.0);
  s.seed = static_cast<std::uint64_t>(kv.get_long("", "seed", 0));
  s.meas_sigma_pos = kv.get_double("", "meas_sigma_pos", 0.0);
  s.meas_sigma_vel = kv.get_double("", "meas_sigma_vel", 0.0);
  s.meas_sigma_theta = kv.get_double("", "meas_sigma_theta", 0.0);
  s.meas_sigma_thetad = kv.get_double("", "meas_sigma_thetad", 0.0);
  s.proc_sigma = kv.get_double("", "proc_sigma", 0.0);
  s.polygon_margin = kv.get_double("", "margin", 0.0);
  for (const std::string& c : kv.get_all("", "command")) {
    // t L_sx L_sy L_stheta T_ss [T_ds]
    std::istringstream in(c);
    std::vector<double> v;
    double x;
    while (in >> x) {
      v.push_back(x);
    }
    if (v.size() != 5 && v.size() != 6) {
      throw ConfigError(path + ": command needs 't L_sx L_sy L_stheta T_ss [T_ds]'");
    }
    StepCommand cmd{v[1], v[2], v[3], v[4], v.size() == 6 ? v[5] : 0.0};
    s.commands.push_back({v[0], cmd});
  }
  for (const std::string& c : kv.get_all("", "impulse")) {
    const auto v = parse_numbers(c, 3, "impulse");
    s.impulses.push_back({v[0], v[1], v[2]});
  }
  if (kv.has("", "stop")) {
    s.stop_time = kv.get_double("", "stop", 0.0);
  }
  s.validate();
  return s;
}

void write_gait(std::ostream& os, const GaitParams& g) {
  os << "[gait]\n"
     << "step_x = " << csv_num(g.step_x) << "\n"
     << "step_y = " << csv_num(g.step_y) << "\n"
     << "step_theta = " << csv_num(g.step_theta) << "\n"
     << "z_swing = " << csv_num(g.z_swing) << "\n"
     << "t_ss = " << csv_num(g.t_ss) << "\n"
     << "ti_to = " << csv_num(g.ti_to) << "\n"
     << "a_z = " << csv_num(g.a_z) << "\n"
     << "a_to = " << csv_num(g.a_to) << "\n";
}

GaitParams read_gait(const KeyValueFile& kv) {
  GaitParams g;
  g.step_x = kv.get_double("gait", "step_x", g.step_x);
  g.step_y = kv.get_double("gait", "step_y", g.step_y);
  g.step_theta = kv.get_double("gait", "step_theta", g.step_theta);
  g.z_swing = kv.get_double("gait", "z_swing", g.z_swing);
  g.t_ss = kv.get_double("gait", "t_ss", g.t_ss);
  g.ti_to = kv.get_double("gait", "ti_to", g.ti_to);
  g.a_z = kv.get_double("gait", "a_z", g.a_z);
  g.a_to = kv.get_double("gait", "a_to", g.a_to);
  return g;
}

}  // namespace walk
