#include "run_context.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nue/errors.hpp"
#include "nue/zooming.hpp"

namespace nue::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

std::string where(const ConfigFile& cfg, const std::string& s, const std::string& k) {
  return "line " + std::to_string(cfg.line_of(s, k)) + " [" + s + "] " + k;
}

std::vector<double> number_list(const ConfigFile& cfg, const std::string& s, const std::string& k,
                                const std::string& fallback) {
  std::vector<double> out;
  std::stringstream ss(cfg.get_string(s, k, fallback));
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!trim(tok).empty()) out.push_back(parse_decimal(tok, where(cfg, s, k)));
  return out;
}

std::size_t count(const ConfigFile& cfg, const std::string& s, const std::string& k, long long fallback) {
  long long v = cfg.get_integer(s, k, fallback);
  if (v < 0) throw Error(ErrorKind::ConfigError, where(cfg, s, k) + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(std::vector<std::string> header) {
  for (const auto& h : header) cell(h);
  end_row();
}

void CsvWriter::sep() {
  if (!fresh_) text_ += ',';
  fresh_ = false;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  text_ += format_double(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::size_t v) {
  sep();
  text_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  sep();
  if (v.find_first_of(",\"\r\n") == std::string::npos) {
    text_ += v;
    return *this;
  }
  text_ += '"';
  for (char c : v) {
    if (c == '"') text_ += '"';
    text_ += c;
  }
  text_ += '"';
  return *this;
}

void CsvWriter::end_row() {
  text_ += "\r\n";
  fresh_ = true;
}

std::uint64_t RunContext::seed() const { return cfg.require_u64("run", "seed"); }

void RunContext::write(const std::string& name, const std::string& text) {
  std::filesystem::create_directories(out_dir);
  std::ofstream f(std::filesystem::path(out_dir) / name, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot write '" + name + "' in output directory '" + out_dir + "'");
  f << text;
  outputs.push_back(name);
}

void RunContext::write_json(const std::string& name, const nlohmann::ordered_json& j) { write(name, j.dump(2) + "\n"); }

void RunContext::finish(double seconds) {
  manifest["wall_clock_seconds"] = seconds;
  outputs.push_back("manifest.json");
  manifest["outputs"] = outputs;
  std::filesystem::create_directories(out_dir);
  std::ofstream f(std::filesystem::path(out_dir) / "manifest.json", std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot write manifest.json in '" + out_dir + "'");
  f << manifest.dump(2) << "\n";
}

MapSystem load_map(RunContext& ctx) {
  ctx.stage = "dynamics";
  MapSystem map = map_from_config(ctx.cfg);
  ctx.manifest["map"] = map.name();
  return map;
}

ZoomingContraction parse_contraction(const std::string& text, const std::string& where) {
  std::istringstream in(text);
  std::string kind;
  in >> kind;
  std::string rest;
  std::getline(in, rest);
  if (kind == "polynomial") return ZoomingContraction::polynomial();
  if (kind == "power") return ZoomingContraction::power(parse_decimal(rest, where));
  if (kind == "exponential") return ZoomingContraction::exponential(parse_decimal(rest, where));
  throw Error(ErrorKind::ConfigError, where + ": expected 'power c', 'exponential lambda' or 'polynomial'");
}

TimeSource load_time_source(RunContext& ctx, const MapSystem& map, double radius) {
  ctx.stage = "zooming";
  const ConfigFile& cfg = ctx.cfg;
  TimeSource src;
  std::string kind = cfg.get_string("time", "source", "zooming");
  if (kind == "every") src.kind = TimeKind::Every;
  else if (kind == "zooming") src.kind = TimeKind::Zooming;
  else if (kind == "hyperbolic") src.kind = TimeKind::Hyperbolic;
  else throw Error(ErrorKind::ConfigError, where(cfg, "time", "source") + ": expected every, zooming or hyperbolic");

  HyperbolicParams& h = src.hyp;
  h.sigma = cfg.get_number("time", "sigma", h.sigma);
  h.epsilon = cfg.get_number("time", "epsilon", h.epsilon);
  h.b = cfg.get_number("time", "b", default_b(map.beta()));
  h.lambda = cfg.get_number("time", "lambda", h.lambda);
  h.theta = cfg.get_number("time", "theta", h.theta);

  // hyperbolic times contract pre-balls at least like sigma^{n/2}
  std::string fallback = src.kind == TimeKind::Hyperbolic ? "power " + format_double(std::sqrt(h.sigma)) : "power 0.5";
  src.alpha = parse_contraction(cfg.get_string("time", "contraction", fallback), where(cfg, "time", "contraction"));

  std::string delta = cfg.get_string("time", "delta", src.kind == TimeKind::Hyperbolic ? "auto" : "0.2");
  if (trim(delta) == "auto") {
    DeltaChoice dc = choose_delta(map, h, count(cfg, "time", "delta_points", 1000),
                                  count(cfg, "time", "delta_orbit", 60), cfg.get_integer("time", "delta_seed", 1));
    nlohmann::ordered_json table = nlohmann::ordered_json::array();
    for (auto [d, frac] : dc.success) table.push_back({{"delta", d}, {"certified_fraction", frac}});
    ctx.manifest["delta_search"] = table;
    if (!dc.found) throw Error(ErrorKind::HypothesisFail, "no delta candidate reaches 90% certified pre-balls");
    src.delta = dc.delta;
  } else {
    src.delta = parse_decimal(delta, where(cfg, "time", "delta"));
  }
  h.delta = src.delta;
  if (src.kind == TimeKind::Hyperbolic) h.validate(map.beta());

  std::string ell = cfg.get_string("time", "ell", "1");
  if (trim(ell) == "auto") src.ell = ell_for_contraction(src.alpha, radius);
  else src.ell = count(cfg, "time", "ell", 1);
  if (src.ell == 0) throw Error(ErrorKind::ConfigError, where(cfg, "time", "ell") + ": must be at least 1");

  ctx.manifest["time_source"] = {{"source", kind},
                                 {"contraction", src.alpha.describe()},
                                 {"delta", src.delta},
                                 {"ell", src.ell},
                                 {"sigma", h.sigma},
                                 {"epsilon", h.epsilon},
                                 {"b", h.b},
                                 {"lambda", h.lambda},
                                 {"theta", h.theta}};
  return src;
}

namespace {

NestedBall load_ball(RunContext& ctx, const MapSystem& map, const TimeSource& src) {
  ctx.stage = "nested";
  const ConfigFile& cfg = ctx.cfg;
  double p = cfg.require_number("ball", "center");
  double r = cfg.require_number("ball", "r");
  std::optional<std::size_t> n_max;
  if (cfg.has("ball", "n_max")) n_max = count(cfg, "ball", "n_max", 0);
  NestedBall b = build_nested_ball(map, p, r, src, n_max);
  ctx.manifest["ball"] = {{"center", b.center},
                          {"r", b.r},
                          {"core", {b.core.lo, b.core.hi}},
                          {"contains_half_ball", b.contains_half_ball()},
                          {"n_max", b.n_max},
                          {"tail_bound", b.tail_bound},
                          {"contraction_sum", b.contraction_sum}};
  return b;
}

}  // namespace

TowerBuild build_tower(RunContext& ctx, const MapSystem& map) {
  const ConfigFile& cfg = ctx.cfg;
  std::string kind = cfg.get_string("tower", "kind", "local");
  std::string base = cfg.get_string("tower", "base", cfg.has_section("ball") ? "ball" : "interval");
  double radius = 0.0;
  if (kind == "global") radius = cfg.require_number("tower", "partition_r");
  else if (base == "ball") radius = cfg.require_number("ball", "r");
  else radius = 0.5 * (cfg.require_number("tower", "hi") - cfg.require_number("tower", "lo"));
  TimeSource src = load_time_source(ctx, map, radius);

  TowerOptions opt;
  opt.seeds = count(cfg, "tower", "seeds", opt.seeds);
  opt.unresolved_target = cfg.get_number("tower", "unresolved", opt.unresolved_target);
  opt.max_gap_seeds = count(cfg, "tower", "max_gap_seeds", opt.max_gap_seeds);
  std::size_t R_max = count(cfg, "tower", "R_max", 60);
  ctx.manifest["caps"] = {{"R_max", R_max},
                          {"seeds", opt.seeds},
                          {"unresolved_target", opt.unresolved_target},
                          {"max_gap_seeds", opt.max_gap_seeds}};

  TowerBuild out;
  if (kind == "local") {
    if (base == "ball") {
      out.ball = load_ball(ctx, map, src);
      ctx.stage = "tower";
      out.tower = build_local_tower(map, *out.ball, src, R_max, opt);
    } else if (base == "interval") {
      Interval d{cfg.require_number("tower", "lo"), cfg.require_number("tower", "hi")};
      if (!(d.hi > d.lo)) throw Error(ErrorKind::ConfigError, where(cfg, "tower", "hi") + ": needs lo < hi");
      ctx.stage = "tower";
      out.tower = build_local_tower(map, d, src, R_max, opt);
    } else {
      throw Error(ErrorKind::ConfigError, where(cfg, "tower", "base") + ": expected ball or interval");
    }
  } else if (kind == "global") {
    ctx.stage = "nested";
    std::vector<double> seeds = number_list(cfg, "tower", "partition_seeds", "0");
    out.partition = build_invariant_partition(map, seeds, radius, src.ell, count(cfg, "tower", "partition_depth", 40));
    ctx.manifest["partition"] = {{"r", radius}, {"atoms", out.partition->atoms.size()}, {"seeds", seeds}};
    ctx.stage = "tower";
    out.tower = build_global_tower(map, *out.partition, src, R_max, opt);
  } else {
    throw Error(ErrorKind::ConfigError, where(cfg, "tower", "kind") + ": expected local or global");
  }
  const InducedMarkovMap& t = out.tower;
  ctx.manifest["tower"] = {{"kind", kind},
                           {"atoms", t.atoms.size()},
                           {"images", t.images.size()},
                           {"base_mass", t.base_mass},
                           {"unresolved_mass", t.unresolved_mass},
                           {"boundary_rejects", t.boundary_rejects},
                           {"straddle_rejects", t.straddle_rejects},
                           {"seeds_used", t.seeds}};
  return out;
}

std::string itinerary_text(const Itinerary& it) {
  std::string s;
  for (std::size_t i = 0; i < it.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(it[i]);
  }
  return s;
}

Itinerary parse_itinerary(const std::string& text, const std::string& where) {
  Itinerary it;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, '.')) {
    char* end = nullptr;
    long v = std::strtol(tok.c_str(), &end, 10);
    if (tok.empty() || *end != '\0' || v < 0) throw Error(ErrorKind::ConfigError, where + ": bad itinerary '" + text + "'");
    it.push_back(static_cast<int>(v));
  }
  return it;
}

std::string atoms_csv(const InducedMarkovMap& t) {
  CsvWriter w({"index", "left", "right", "R", "image", "base", "qa", "qb", "itinerary"});
  for (std::size_t i = 0; i < t.atoms.size(); ++i) {
    const TowerAtom& a = t.atoms[i];
    w.cell(i).cell(a.base + a.qa).cell(a.base + a.qb).cell(a.R).cell(a.image);
    w.cell(a.base).cell(a.qa).cell(a.qb).cell(itinerary_text(a.itinerary));
    w.end_row();
  }
  return w.text();
}

std::string images_csv(const InducedMarkovMap& t) {
  CsvWriter w({"image", "lo", "hi", "group"});
  for (std::size_t i = 0; i < t.images.size(); ++i) {
    w.cell(i).cell(t.images[i].lo).cell(t.images[i].hi);
    w.cell(i < t.image_group.size() ? t.image_group[i] : std::size_t{0});
    w.end_row();
  }
  return w.text();
}

nlohmann::ordered_json markov_json(const MarkovReport& rep) {
  nlohmann::ordered_json j;
  j["pass"] = rep.pass();
  j["distinct_images"] = rep.distinct_images;
  j["largest_1_cylinder"] = rep.d1;
  j["largest_2_cylinder"] = rep.d2;
  for (const auto& c : rep.conditions)
    j["conditions"].push_back({{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}, {"detail", c.detail}});
  return j;
}

}  // namespace nue::cli
