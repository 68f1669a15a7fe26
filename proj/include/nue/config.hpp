#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nue/dynamics.hpp"

namespace nue {

// Line-oriented `key = value` text with `[section]` headers and `#` comments.
class ConfigFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };
  using Section = std::map<std::string, Entry>;

  static ConfigFile parse(const std::string& text);
  static ConfigFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const { return sections_.count(section) != 0; }
  const Section* section(const std::string& name) const;
  std::vector<std::string> section_names() const;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_number(const std::string& section, const std::string& key, double fallback) const;
  double require_number(const std::string& section, const std::string& key) const;
  long long get_integer(const std::string& section, const std::string& key, long long fallback) const;
  std::uint64_t require_u64(const std::string& section, const std::string& key) const;
  int line_of(const std::string& section, const std::string& key) const;

 private:
  std::map<std::string, Section> sections_;
  std::vector<std::string> order_;
};

double parse_decimal(const std::string& text, const std::string& where);

// Builds a map from a [map] section naming a shipped `preset`, or from
// [branch.i] sections with expressions `f`, `df` and optional `d2f`, `inverse`.
MapSystem map_from_config(const ConfigFile& cfg);

}  // namespace nue
