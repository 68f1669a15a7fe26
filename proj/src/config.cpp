#include "nue/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "nue/errors.hpp"
#include "nue/expr.hpp"

namespace nue {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

double parse_decimal(const std::string& text, const std::string& where) {
  std::string t = trim(text);
  if (t.empty()) throw Error(ErrorKind::ConfigError, where + ": empty number");
  const char* begin = t.c_str();
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(begin, &end);
  if (end != begin + t.size() || errno == ERANGE || !std::isfinite(v))
    throw Error(ErrorKind::ConfigError, where + ": '" + t + "' is not a decimal number");
  return v;
}

ConfigFile ConfigFile::parse(const std::string& text) {
  ConfigFile cfg;
  std::istringstream in(text);
  std::string raw;
  std::string current;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::size_t hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw Error(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": unterminated section header");
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty())
        throw Error(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": empty section name");
      if (!cfg.sections_.count(current)) cfg.order_.push_back(current);
      cfg.sections_[current];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": empty key");
    if (!cfg.sections_.count(current)) cfg.order_.push_back(current);
    auto& sec = cfg.sections_[current];
    if (sec.count(key))
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    sec[key] = Entry{value, line_no};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const ConfigFile::Section* ConfigFile::section(const std::string& name) const {
  auto it = sections_.find(name);
  return it == sections_.end() ? nullptr : &it->second;
}

std::vector<std::string> ConfigFile::section_names() const { return order_; }

bool ConfigFile::has(const std::string& s, const std::string& k) const {
  const Section* sec = section(s);
  return sec && sec->count(k);
}

std::optional<std::string> ConfigFile::get(const std::string& s, const std::string& k) const {
  const Section* sec = section(s);
  if (!sec) return std::nullopt;
  auto it = sec->find(k);
  if (it == sec->end()) return std::nullopt;
  return it->second.value;
}

int ConfigFile::line_of(const std::string& s, const std::string& k) const {
  const Section* sec = section(s);
  if (!sec) return 0;
  auto it = sec->find(k);
  return it == sec->end() ? 0 : it->second.line;
}

std::string ConfigFile::get_string(const std::string& s, const std::string& k,
                                   const std::string& fallback) const {
  auto v = get(s, k);
  return v ? *v : fallback;
}

static std::string where(const ConfigFile& c, const std::string& s, const std::string& k) {
  return "line " + std::to_string(c.line_of(s, k)) + " [" + s + "] " + k;
}

double ConfigFile::get_number(const std::string& s, const std::string& k, double fallback) const {
  auto v = get(s, k);
  if (!v) return fallback;
  return parse_decimal(*v, where(*this, s, k));
}

double ConfigFile::require_number(const std::string& s, const std::string& k) const {
  auto v = get(s, k);
  if (!v) throw Error(ErrorKind::ConfigError, "missing required field [" + s + "] " + k);
  return parse_decimal(*v, where(*this, s, k));
}

long long ConfigFile::get_integer(const std::string& s, const std::string& k, long long fallback) const {
  auto v = get(s, k);
  if (!v) return fallback;
  std::string t = trim(*v);
  char* end = nullptr;
  errno = 0;
  long long r = std::strtoll(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw Error(ErrorKind::ConfigError, where(*this, s, k) + ": '" + t + "' is not an integer");
  return r;
}

std::uint64_t ConfigFile::require_u64(const std::string& s, const std::string& k) const {
  auto v = get(s, k);
  if (!v) throw Error(ErrorKind::ConfigError, "missing required field [" + s + "] " + k);
  std::string t = trim(*v);
  char* end = nullptr;
  errno = 0;
  unsigned long long r = std::strtoull(t.c_str(), &end, 0);
  if (t.empty() || t[0] == '-' || end != t.c_str() + t.size() || errno == ERANGE)
    throw Error(ErrorKind::ConfigError, where(*this, s, k) + ": '" + t + "' is not an unsigned 64-bit integer");
  return r;
}

MapSystem map_from_config(const ConfigFile& cfg) {
  if (!cfg.has_section("map")) throw Error(ErrorKind::ConfigError, "missing [map] section");
  if (auto preset = cfg.get("map", "preset")) return map_by_name(trim(*preset));

  static const std::vector<std::string> reserved{"name", "domain", "beta", "B", "preset"};
  std::map<std::string, double> constants;
  for (const auto& [key, entry] : *cfg.section("map")) {
    if (std::find(reserved.begin(), reserved.end(), key) != reserved.end()) continue;
    constants[key] = parse_decimal(entry.value, where(cfg, "map", key));
  }
  std::string domain = cfg.get_string("map", "domain", "interval");
  DomainKind kind;
  if (domain == "circle") kind = DomainKind::Circle;
  else if (domain == "interval") kind = DomainKind::Interval;
  else throw Error(ErrorKind::ConfigError, where(cfg, "map", "domain") + ": expected circle or interval");

  std::vector<Branch> branches;
  for (const std::string& name : cfg.section_names()) {
    if (name.rfind("branch.", 0) != 0) continue;
    auto need = [&](const std::string& key) {
      auto v = cfg.get(name, key);
      if (!v) throw Error(ErrorKind::ConfigError, "missing required field [" + name + "] " + key);
      return *v;
    };
    auto expr = [&](const std::string& key) {
      try {
        return Expr::parse(need(key), constants);
      } catch (const Error& e) {
        throw Error(ErrorKind::ConfigError, where(cfg, name, key) + ": " + e.what());
      }
    };
    Branch b;
    b.left = parse_decimal(need("left"), where(cfg, name, "left"));
    b.right = parse_decimal(need("right"), where(cfg, name, "right"));
    Expr f = expr("f"), df = expr("df");
    b.eval = [f](double x) { return f(x); };
    b.deriv = [df](double x) { return df(x); };
    if (cfg.has(name, "d2f")) {
      Expr d2 = expr("d2f");
      b.deriv2 = [d2](double x) { return d2(x); };
    }
    if (cfg.has(name, "inverse")) {
      Expr inv = expr("inverse");
      b.inverse = [inv](double y) { return inv(y); };
    }
    branches.push_back(std::move(b));
  }
  if (branches.empty()) throw Error(ErrorKind::ConfigError, "no [branch.i] sections in map definition");

  std::vector<double> critical;
  if (auto pts = cfg.get("critical", "points")) {
    std::stringstream ss(*pts);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!trim(tok).empty()) critical.push_back(parse_decimal(tok, where(cfg, "critical", "points")));
  }
  double beta = cfg.get_number("map", "beta", 0.0);
  double B = cfg.get_number("map", "B", 1.0);
  return MapSystem(cfg.get_string("map", "name", "custom"), kind, std::move(branches), std::move(critical),
                   beta, B);
}

}  // namespace nue
