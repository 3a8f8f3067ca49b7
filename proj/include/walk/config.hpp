#pragma once

#include <map>
#include <string>
#include <vector>

#include "walk/optimizer.hpp"

namespace walk {

/// Flat `[section]` / `key = value` file with `#` comments. Repeated keys are
/// kept in order. Parse and type errors carry "path:line:" prefixes.
class KeyValueFile {
 public:
  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_string(const std::string& text,
                                   const std::string& name = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key,
                    double def) const;
  long get_long(const std::string& section, const std::string& key,
                long def) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& def) const;
  /// All values of a repeated key, in file order.
  std::vector<std::string> get_all(const std::string& section,
                                   const std::string& key) const;

  /// Throws ConfigError when the file contains a key outside `allowed`
  /// (section -> keys). Used to catch typos at load time.
  void check_known_keys(
      const std::map<std::string, std::vector<std::string>>& allowed) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::string name_;
  std::map<std::string, std::vector<Entry>> entries_;  // "section.key"
  std::vector<std::string> order_;                     // for key checking

  const Entry* find(const std::string& section, const std::string& key) const;
  double to_double(const Entry& e, const std::string& what) const;
};

/// Everything the CLI binds together.
struct AppConfig {
  ModelParams model;
  GaitParams gait;
  EngineConfig engine;
  CostWeights weights = CostWeights::defaults();
  NoiseModel noise = NoiseModel::positions();
  FootGeometry feet;
  GABounds bounds;
  GAConfig ga;
  double integrator_clamp = 10.0;
  std::string scenario_path;  ///< optional default scenario

  SimSetup setup() const;
};

AppConfig load_config(const std::string& path);
Scenario load_scenario(const std::string& path);

void write_gait(std::ostream& os, const GaitParams& g);
GaitParams read_gait(const KeyValueFile& kv);

}  // namespace walk
