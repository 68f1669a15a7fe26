#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "nue/bernoulli.hpp"
#include "nue/errors.hpp"
#include "nue/measures.hpp"
#include "nue/parallel.hpp"
#include "nue/rng.hpp"
#include "nue/statistics.hpp"
#include "nue/zooming.hpp"

namespace nue::cli {

namespace {

using json = nlohmann::ordered_json;

std::size_t count(const ConfigFile& cfg, const std::string& s, const std::string& k, long long fallback) {
  long long v = cfg.get_integer(s, k, fallback);
  if (v < 0)
    throw Error(ErrorKind::ConfigError,
                "line " + std::to_string(cfg.line_of(s, k)) + " [" + s + "] " + k + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

std::vector<double> lebesgue_points(std::uint64_t seed, std::size_t n) {
  SplitMix64 rng(seed);
  std::vector<double> xs(n);
  for (double& x : xs) x = rng.open_uniform();
  return xs;
}

std::size_t first_flag(const TimeFlags& f) {
  for (std::size_t n = 1; n < f.flag.size(); ++n)
    if (f.flag[n]) return n;
  return 0;
}

int cmd_times(RunContext& ctx) {
  const ConfigFile& cfg = ctx.cfg;
  std::uint64_t seed = ctx.seed();
  MapSystem map = load_map(ctx);
  TimeSource src = load_time_source(ctx, map, cfg.get_number("times", "r", 0.1));
  std::size_t points = count(cfg, "times", "points", 1000);
  std::size_t N = count(cfg, "times", "length", 200);
  if (N == 0) throw Error(ErrorKind::ConfigError, "[times] length must be at least 1");
  bool zoom = src.kind == TimeKind::Zooming;
  std::vector<double> xs = lebesgue_points(seed, points);

  struct Row {
    std::size_t h_first = 0, h_count = 0, z_first = 0, z_count = 0, horizon = 0;
    bool truncated = false;
  };
  std::vector<Row> rows(points);
  ctx.stage = "zooming";
  parallel_for(points, [&](std::size_t i) {
    OrbitRecord orbit = iterate_until_critical(map, xs[i], N);
    Row& r = rows[i];
    r.truncated = orbit.truncated;
    TimeFlags h = detect_hyperbolic_times(orbit, src.hyp);
    r.horizon = h.horizon();
    r.h_first = first_flag(h);
    r.h_count = h.count.empty() ? 0 : h.count.back();
    if (zoom && !orbit.truncated) {
      TimeFlags z = detect_zooming_times(map, xs[i], src.alpha, src.delta, N);
      r.z_first = first_flag(z);
      r.z_count = z.count.back();
    }
  });

  CsvWriter pts({"index", "x", "horizon", "first_hyperbolic", "hyperbolic_count", "hyperbolic_frequency",
                 "first_zooming", "zooming_count", "truncated"});
  for (std::size_t i = 0; i < points; ++i) {
    const Row& r = rows[i];
    double freq = r.horizon ? static_cast<double>(r.h_count) / static_cast<double>(r.horizon) : 0.0;
    pts.cell(i).cell(xs[i]).cell(r.horizon).cell(r.h_first).cell(r.h_count).cell(freq);
    pts.cell(r.z_first).cell(r.z_count).cell(std::string(r.truncated ? "1" : "0"));
    pts.end_row();
  }
  // #{first time > n}; "no time within the orbit" counts as > every n
  CsvWriter tail({"n", "hyperbolic_tail", "zooming_tail"});
  for (std::size_t n = 0; n <= N; ++n) {
    std::size_t h = 0, z = 0;
    for (const Row& r : rows) {
      if (r.h_first == 0 || r.h_first > n) ++h;
      if (zoom && (r.z_first == 0 || r.z_first > n)) ++z;
    }
    tail.cell(n).cell(h).cell(z);
    tail.end_row();
  }
  ctx.write("points.csv", pts.text());
  ctx.write("tails.csv", tail.text());
  std::size_t none = std::count_if(rows.begin(), rows.end(), [](const Row& r) { return r.h_first == 0; });
  ctx.manifest["times"] = {{"points", points}, {"length", N}, {"seed", seed}, {"without_hyperbolic_time", none}};
  return 0;
}

int cmd_nested(RunContext& ctx) {
  const ConfigFile& cfg = ctx.cfg;
  MapSystem map = load_map(ctx);
  double p = cfg.require_number("ball", "center");
  double r = cfg.require_number("ball", "r");
  TimeSource src = load_time_source(ctx, map, r);
  std::size_t orders = count(cfg, "ball", "verify_orders", 15);
  // exact nestedness holds through the closure order, so close at least as deep as we verify
  std::size_t n_max = cfg.has("ball", "n_max") ? count(cfg, "ball", "n_max", 0)
                                               : std::max(default_order_cap(src, r), orders);
  ctx.stage = "nested";
  NestedBall b = build_nested_ball(map, p, r, src, n_max);
  NestedReport rep = verify_nested(map, Interval{b.core.lo, b.core.hi}, orders, src);

  json out;
  out["center"] = b.center;
  out["r"] = b.r;
  out["anchor"] = {b.anchor.lo, b.anchor.hi};
  out["core"] = {b.core.lo, b.core.hi};
  out["certificates"] = {{"contraction_sum", b.contraction_sum},
                         {"contraction_sum_below_r_over_4", b.contraction_sum < b.r / 4.0},
                         {"n_max", b.n_max},
                         {"tail_bound", b.tail_bound},
                         {"contains_half_ball", b.contains_half_ball()},
                         {"candidates", b.closure.candidates},
                         {"pruned", b.closure.pruned},
                         {"max_chain_length", b.closure.max_chain_length}};
  json chain = json::array();
  for (const PreImage& e : b.closure.elements) {
    Interval a = e.abs();
    json row = {{"lo", a.lo}, {"hi", a.hi}, {"order", e.order}, {"anchor", e.anchor}};
    row["parent"] = e.parent == npos ? json(nullptr) : json(e.parent);
    chain.push_back(row);
  }
  out["chain_log"] = chain;
  json linked = json::array();
  for (const PreImage& e : rep.linked) linked.push_back({{"lo", e.abs().lo}, {"hi", e.abs().hi}, {"order", e.order}});
  out["verification"] = {{"orders", orders}, {"checked", rep.checked}, {"nested", rep.nested}, {"linked", linked}};
  ctx.write_json("nested.json", out);

  ctx.manifest["nested"] = {{"core", {b.core.lo, b.core.hi}},
                            {"contains_half_ball", b.contains_half_ball()},
                            {"linked_preimages", rep.linked.size()}};
  if (!b.contains_half_ball()) throw VerificationFailure{"core does not contain the half ball"};
  if (!rep.nested) throw VerificationFailure{std::to_string(rep.linked.size()) + " linked pre-images up to order " +
                                             std::to_string(orders)};
  return 0;
}

void check_markov(RunContext& ctx, const InducedMarkovMap& t, double tol) {
  ctx.stage = "tower";
  MarkovReport rep = verify_markov(t, tol);
  ctx.manifest["markov"] = markov_json(rep);
  std::string failed;
  for (const auto& c : rep.conditions)
    if (!c.pass) failed += (failed.empty() ? "" : "; ") + c.name + " (" + c.detail + ")";
  if (!failed.empty()) throw VerificationFailure{"Markov condition failed: " + failed};
}

int cmd_tower(RunContext& ctx) {
  MapSystem map = load_map(ctx);
  TowerBuild b = build_tower(ctx, map);
  ctx.write("atoms.csv", atoms_csv(b.tower));
  ctx.write("images.csv", images_csv(b.tower));
  check_markov(ctx, b.tower, ctx.cfg.get_number("tower", "tol", 1e-9));
  return 0;
}

int cmd_tails(RunContext& ctx) {
  const ConfigFile& cfg = ctx.cfg;
  std::uint64_t seed = ctx.seed();
  MapSystem map = load_map(ctx);
  TowerBuild b = build_tower(ctx, map);
  const InducedMarkovMap& t = b.tower;
  std::vector<double> xs = lebesgue_points(seed, count(cfg, "tails", "samples", 10000));
  ctx.stage = "tower";
  TailStats ts = tail_statistics(t, xs, t.src.hyp);
  CsvWriter w({"n", "steps", "return_tail", "flag_tail", "hyperbolic_tail"});
  for (std::size_t n = 0; n < ts.counts.size(); ++n) {
    w.cell(n).cell(n * t.src.ell).cell(ts.counts[n]).cell(ts.zoom_tail[n]).cell(ts.h_tail[n]);
    w.end_row();
  }
  CsvWriter v({"x"});
  for (double x : ts.violating_points) {
    v.cell(x);
    v.end_row();
  }
  ctx.write("tails.csv", w.text());
  ctx.write("violations.csv", v.text());
  ctx.manifest["tails"] = {{"samples", ts.samples},
                           {"seed", seed},
                           {"n_max", ts.n_max},
                           {"no_return", ts.no_return},
                           {"violations", ts.violating_points.size()},
                           {"monotone", ts.monotone()}};
  if (!ts.violating_points.empty())
    throw VerificationFailure{std::to_string(ts.violating_points.size()) + " tail-inclusion violations"};
  return 0;
}

int cmd_density(RunContext& ctx) {
  const ConfigFile& cfg = ctx.cfg;
  std::size_t birkhoff = count(cfg, "density", "birkhoff", 0);
  std::uint64_t seed = birkhoff ? ctx.seed() : 0;
  MapSystem map = load_map(ctx);
  TowerBuild b = build_tower(ctx, map);
  ctx.stage = "measures";
  DensityOptions opt;
  opt.grid = count(cfg, "density", "grid", opt.grid);
  opt.tol = cfg.get_number("density", "tol", opt.tol);
  opt.max_iter = count(cfg, "density", "max_iter", opt.max_iter);
  TowerMeasure m = invariant_density(b.tower, {}, opt);
  std::size_t bins = count(cfg, "density", "bins", 4096);
  ProjectedMeasure pm = project(m, bins);

  CsvWriter d({"x", "density"});
  for (std::size_t i = 0; i < m.density.size(); ++i) {
    d.cell(m.domain.lo + m.cell() * static_cast<double>(i)).cell(m.density[i]);
    d.end_row();
  }
  CsvWriter p({"lo", "hi", "density"});
  for (std::size_t i = 0; i < bins; ++i) {
    p.cell(static_cast<double>(i) / pm.bins()).cell(static_cast<double>(i + 1) / pm.bins()).cell(pm.histogram[i]);
    p.end_row();
  }
  ctx.write("density.csv", d.text());
  ctx.write("projection.csv", p.text());
  json info = {{"iterations", m.iterations},
               {"residual", m.residual},
               {"defect", m.defect},
               {"mean_R", m.mean_R},
               {"sup_inf_ratio", m.sup_inf_ratio},
               {"distortion_bound", m.distortion_bound},
               {"projected_mass", pm.total_mass},
               {"moment1", pm.moment1},
               {"moment2", pm.moment2},
               {"invariance_residual", pm.invariance_residual}};
  if (birkhoff) {
    std::vector<double> h = birkhoff_histogram(map, cfg.get_number("density", "x0", 0.1234), birkhoff, bins, seed);
    CsvWriter bw({"lo", "hi", "density"});
    for (std::size_t i = 0; i < bins; ++i) {
      bw.cell(static_cast<double>(i) / pm.bins()).cell(static_cast<double>(i + 1) / pm.bins()).cell(h[i]);
      bw.end_row();
    }
    ctx.write("birkhoff.csv", bw.text());
    double l1 = histogram_l1(pm.histogram, h);
    info["birkhoff_iterates"] = birkhoff;
    info["birkhoff_l1"] = l1;
    ctx.manifest["density"] = info;
    if (cfg.has("density", "l1_tolerance") && !(l1 <= cfg.require_number("density", "l1_tolerance")))
      throw VerificationFailure{"L1 distance " + format_double(l1) + " to the Birkhoff histogram above tolerance"};
    return 0;
  }
  ctx.manifest["density"] = info;
  return 0;
}

json fit_json(const Fit& f) {
  return {{"kind", f.kind}, {"slope", f.slope}, {"intercept", f.intercept}, {"gamma", f.gamma},
          {"r2", f.r2},     {"points", f.points}};
}

int cmd_corr(RunContext& ctx) {
  const ConfigFile& cfg = ctx.cfg;
  std::uint64_t seed = ctx.seed();
  MapSystem map = load_map(ctx);
  std::string measure = cfg.get_string("corr", "measure", "bernoulli");
  std::size_t n_max = count(cfg, "corr", "n_max", 32);
  std::size_t mc = count(cfg, "corr", "mc", 100000);
  Observable phi = observable_by_name(cfg.get_string("corr", "phi", "bump"), &map);
  Observable psi = observable_by_name(cfg.get_string("corr", "psi", phi.name), &map);
  json out;
  std::optional<TowerBuild> b;
  std::optional<BernoulliMeasure> nu;
  OrbitSampler sampler;
  if (measure == "bernoulli") {
    b = build_tower(ctx, map);
    ctx.stage = "measures";
    double z = cfg.require_number("corr", "z");
    nu = bernoulli_tower_measure(b->tower, exponential_weights(b->tower, z));
    sampler = bernoulli_sampler(*nu);
    // nu{R > n} = z^{n/ell} (up to truncation at R_max)
    double rate = std::pow(z, 1.0 / static_cast<double>(b->tower.src.ell));
    TailFit tf = fit_tail(*nu, count(cfg, "corr", "tail_lo", 2),
                          count(cfg, "corr", "tail_hi", std::max<long long>(3, static_cast<long long>(b->tower.R_max) * 3 / 4)));
    out["tail"] = {{"configured_rate", rate}, {"fitted_rate", tf.rate}, {"r2", tf.r2}, {"n_lo", tf.n_lo},
                   {"n_hi", tf.n_hi}, {"relative_error", std::fabs(tf.rate / rate - 1.0)}};
    out["mean_R"] = nu->mean_R;
  } else if (measure == "lebesgue") {
    sampler = lebesgue_sampler(map, count(cfg, "corr", "burn_in", 0));
  } else {
    throw Error(ErrorKind::ConfigError, "[corr] measure: expected bernoulli or lebesgue");
  }
  ctx.stage = "measures";
  CorrelationSeries s = correlation(sampler, phi, psi, n_max, mc, seed);
  CsvWriter w({"n", "correlation", "stderr"});
  for (std::size_t n = 0; n <= n_max; ++n) {
    w.cell(n).cell(s.values[n]).cell(s.stderr_[n]);
    w.end_row();
  }
  out["phi"] = phi.name;
  out["psi"] = psi.name;
  out["mc"] = mc;
  out["seed"] = seed;
  for (const Fit& f : s.fits) out["fits"].push_back(fit_json(f));
  out["best"] = fit_json(s.best);
  ctx.write("correlations.csv", w.text());
  ctx.write_json("fit.json", out);
  ctx.manifest["corr"] = {{"measure", measure}, {"best", s.best.kind}, {"r2", s.best.r2}};
  return 0;
}

int cmd_repeller(RunContext& ctx) {
  const ConfigFile& cfg = ctx.cfg;
  MapSystem map = load_map(ctx);
  Interval region{cfg.get_number("repeller", "lo", 0.0), cfg.get_number("repeller", "hi", 1.0)};
  ctx.stage = "measures";
  PeriodicOrbit po = find_periodic_repeller(map, region, count(cfg, "repeller", "max_period", 2), {},
                                            count(cfg, "repeller", "min_period", 1));
  CsvWriter w({"index", "point", "branch"});
  for (std::size_t i = 0; i < po.points.size(); ++i) {
    w.cell(i).cell(po.points[i]).cell(static_cast<std::size_t>(po.itinerary.at(i)));
    w.end_row();
  }
  ctx.write("repeller.csv", w.text());
  ctx.manifest["repeller"] = {{"period", po.period}, {"multiplier", po.multiplier}};
  if (!(std::fabs(po.multiplier) > 1.0)) throw VerificationFailure{"periodic orbit is not repelling"};
  return 0;
}

// Minimal reader for the files written by CsvWriter (no embedded quotes).
std::vector<std::map<std::string, std::string>> read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::ConfigError, "cannot open '" + path + "'");
  auto split = [](std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(f, line)) throw Error(ErrorKind::ConfigError, "'" + path + "' is empty");
  std::vector<std::string> header = split(line);
  std::vector<std::map<std::string, std::string>> rows;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::vector<std::string> cells = split(line);
    if (cells.size() != header.size())
      throw Error(ErrorKind::ConfigError, path + " line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(header.size()) + " fields");
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = cells[i];
    row["#line"] = std::to_string(line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

const std::string& field(const std::map<std::string, std::string>& row, const std::string& key,
                         const std::string& path) {
  auto it = row.find(key);
  if (it == row.end()) throw Error(ErrorKind::ConfigError, path + ": missing column '" + key + "'");
  return it->second;
}

int cmd_verify(RunContext& ctx, const CommandOptions& opt) {
  const ConfigFile& cfg = ctx.cfg;
  MapSystem map = load_map(ctx);
  std::string atoms_path = !opt.atoms.empty() ? opt.atoms : cfg.get_string("verify", "atoms", "");
  if (atoms_path.empty()) throw Error(ErrorKind::ConfigError, "missing required field [verify] atoms");
  std::string images_path = cfg.get_string("verify", "images", "");
  if (images_path.empty()) {
    std::size_t slash = atoms_path.find_last_of('/');
    images_path = (slash == std::string::npos ? "" : atoms_path.substr(0, slash + 1)) + "images.csv";
  }
  ctx.manifest["verify"] = {{"atoms", atoms_path}, {"images", images_path}};

  InducedMarkovMap t;
  t.map = map;
  t.kind = cfg.get_string("tower", "kind", "local") == "global" ? TowerKind::Global : TowerKind::Local;
  for (const auto& row : read_csv(images_path)) {
    std::string where = images_path + " line " + row.at("#line");
    t.images.push_back({parse_decimal(field(row, "lo", images_path), where),
                        parse_decimal(field(row, "hi", images_path), where)});
    t.image_group.push_back(static_cast<std::size_t>(parse_decimal(field(row, "group", images_path), where)));
  }
  for (const auto& row : read_csv(atoms_path)) {
    std::string where = atoms_path + " line " + row.at("#line");
    auto num = [&](const std::string& k) { return parse_decimal(field(row, k, atoms_path), where + " " + k); };
    TowerAtom a;
    a.base = num("base");
    a.qa = num("qa");
    a.qb = num("qb");
    double left = num("left"), right = num("right");
    // the endpoint columns win when they disagree with base + offset
    double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(a.base));
    if (std::fabs(left - (a.base + a.qa)) > slack) a.qa = left - a.base;
    if (std::fabs(right - (a.base + a.qb)) > slack) a.qb = right - a.base;
    double R = num("R"), image = num("image");
    if (R < 1 || R != std::floor(R) || image < 0 || image >= static_cast<double>(t.images.size()))
      throw Error(ErrorKind::ConfigError, where + ": R or image out of range");
    a.R = static_cast<std::size_t>(R);
    a.image = static_cast<std::size_t>(image);
    a.itinerary = parse_itinerary(field(row, "itinerary", atoms_path), where);
    t.atoms.push_back(std::move(a));
  }
  std::sort(t.atoms.begin(), t.atoms.end(),
            [](const TowerAtom& x, const TowerAtom& y) { return x.base + x.qa < y.base + y.qa; });
  for (const auto& a : t.atoms) t.R_max = std::max(t.R_max, a.R);
  ctx.manifest["verify"]["atom_count"] = t.atoms.size();
  check_markov(ctx, t, cfg.get_number("verify", "tol", cfg.get_number("tower", "tol", 1e-9)));
  return 0;
}

}  // namespace

int run_command(RunContext& ctx, const CommandOptions& opt) {
  const std::string& c = ctx.subcommand;
  if (c == "times") return cmd_times(ctx);
  if (c == "nested") return cmd_nested(ctx);
  if (c == "tower") return cmd_tower(ctx);
  if (c == "tails") return cmd_tails(ctx);
  if (c == "density") return cmd_density(ctx);
  if (c == "corr") return cmd_corr(ctx);
  if (c == "repeller") return cmd_repeller(ctx);
  if (c == "verify") return cmd_verify(ctx, opt);
  throw Error(ErrorKind::ConfigError, "unknown subcommand '" + c + "'");
}

}  // namespace nue::cli
