#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "mixcycle/tracking.hpp"

namespace mixcycle {

// Flat `key = value` text config: one pair per line, '#' starts a comment,
// keys carry their units (e.g. grid_extent_m). Duplicate keys are rejected.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse_file(const std::filesystem::path& file);
  static KeyValueConfig parse_string(const std::string& text,
                                     const std::string& origin = "<string>");

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::string get_string(const std::string& key,
                         const std::string& fallback) const;

  // Rejects any key outside `allowed`, naming the offender.
  void require_known_keys(const std::set<std::string>& allowed) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
  std::string origin_;
};

GridMatchParams read_tracker_params(const std::filesystem::path& json_file);
void write_tracker_params(const std::filesystem::path& json_file,
                          const GridMatchParams& params);

}  // namespace mixcycle
