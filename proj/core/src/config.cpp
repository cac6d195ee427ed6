#include "mixcycle/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixcycle/errors.hpp"

namespace mixcycle {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str(), file.string());
}

KeyValueConfig KeyValueConfig::parse_string(const std::string& text,
                                            const std::string& origin) {
  KeyValueConfig cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    if (!cfg.kv_.emplace(key, value).second) {
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": duplicate key '" + key + "'");
    }
  }
  return cfg;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not a number: '" +
                      it->second + "'");
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    std::size_t used = 0;
    const int v = std::stoi(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(origin_ + ": key '" + key + "' is not an integer: '" +
                      it->second + "'");
  }
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  const auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

void KeyValueConfig::require_known_keys(
    const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : kv_) {
    if (!allowed.count(key)) {
      throw ConfigError(origin_ + ": unknown key '" + key + "'");
    }
  }
}

GridMatchParams read_tracker_params(const std::filesystem::path& json_file) {
  std::ifstream in(json_file);
  if (!in) throw ConfigError("cannot open params: " + json_file.string());
  GridMatchParams p;
  try {
    nlohmann::json j = nlohmann::json::parse(in);
    p.sigma_m = j.at("sigma_m").get<double>();
    p.motion_weight = j.at("motion_weight").get<double>();
    p.temperature = j.at("temperature").get<double>();
    p.grid_extent_m = j.at("grid_extent_m").get<double>();
    p.grid_step_m = j.at("grid_step_m").get<double>();
    p.yaw_steps = j.at("yaw_steps").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("params " + json_file.string() + ": " + e.what());
  }
  return p;
}

void write_tracker_params(const std::filesystem::path& json_file,
                          const GridMatchParams& params) {
  nlohmann::json j;
  j["sigma_m"] = params.sigma_m;
  j["motion_weight"] = params.motion_weight;
  j["temperature"] = params.temperature;
  j["grid_extent_m"] = params.grid_extent_m;
  j["grid_step_m"] = params.grid_step_m;
  j["yaw_steps"] = params.yaw_steps;
  std::ofstream out(json_file, std::ios::binary);
  if (!out) throw DataError("cannot write params: " + json_file.string());
  out << j.dump(2) << "\n";
}

}  // namespace mixcycle
