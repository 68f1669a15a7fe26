#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nue/config.hpp"
#include "nue/nested.hpp"
#include "nue/tower.hpp"

namespace nue::cli {

// Exit status 1: a verification step failed (as opposed to a config error).
struct VerificationFailure {
  std::string what;
};

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& cell(double v);
  CsvWriter& cell(std::size_t v);
  CsvWriter& cell(const std::string& v);
  void end_row();
  const std::string& text() const { return text_; }

 private:
  void sep();
  std::string text_;
  bool fresh_ = true;
};

std::string format_double(double v);

struct RunContext {
  std::string subcommand;
  std::string config_path;
  ConfigFile cfg;
  std::string out_dir;
  std::string stage;  // module currently running, for diagnostics
  nlohmann::ordered_json manifest;
  std::vector<std::string> outputs;

  // 64-bit seed from [run] seed; ConfigError naming the field when absent
  std::uint64_t seed() const;
  void write(const std::string& name, const std::string& text);
  void write_json(const std::string& name, const nlohmann::ordered_json& j);
  void finish(double seconds);
};

MapSystem load_map(RunContext& ctx);
ZoomingContraction parse_contraction(const std::string& text, const std::string& where);

// [time] section; resolves auto delta and ell and records them.
TimeSource load_time_source(RunContext& ctx, const MapSystem& map, double radius);

struct TowerBuild {
  InducedMarkovMap tower;
  std::optional<NestedBall> ball;
  std::optional<GlobalPartition> partition;
};

// [tower] section: local over [tower] lo/hi or a nested ball from [ball];
// global over an invariant partition.
TowerBuild build_tower(RunContext& ctx, const MapSystem& map);

std::string itinerary_text(const Itinerary& it);
Itinerary parse_itinerary(const std::string& text, const std::string& where);

std::string atoms_csv(const InducedMarkovMap& t);
std::string images_csv(const InducedMarkovMap& t);
nlohmann::ordered_json markov_json(const MarkovReport& rep);

}  // namespace nue::cli
