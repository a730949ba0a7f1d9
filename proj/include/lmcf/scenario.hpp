// Scenario runner: JSON-configured models, flow/polygon/blowup/verify
// drivers, deterministic machine-readable artifacts and a checksummed run
// manifest. This is the layer the command-line tool calls into.
#ifndef LMCF_SCENARIO_HPP
#define LMCF_SCENARIO_HPP

#include "lmcf/ale_quotient.hpp"
#include "lmcf/flat_models.hpp"
#include "lmcf/flow_engine.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lmcf::cli {

inline constexpr const char* kVersion = "1.0.0";

struct AleModelConfig {
  ale::AleParams params;
  flow::SubtorusAction action;
};

struct ScenarioConfig {
  std::variant<flat::ShrinkerModel, flat::TranslatorModel, AleModelConfig> model;
  double c0 = 0.0;
  std::optional<double> horizon;  // empty: "auto"
  flow::IntegratorConfig integrator;
  std::vector<std::string> outputs;  // empty: command defaults
  std::uint64_t seed = 1;
  int seed_count = 12;
  int fiber_samples = 16;
  double debug_a_h_offset = 0.0;  // negative-control knob for verify

  bool is_ale() const { return std::holds_alternative<AleModelConfig>(model); }
};

// Parses and validates; violations throw ConfigError whose message names the
// offending field path (e.g. "model.alpha[1]").
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);

// Shortest round-trip decimal formatting used by every artifact writer.
std::string format_double(double v);

struct ManifestEntry {
  std::string name;
  std::string sha256;
  std::uint64_t bytes;
};

struct RunManifest {
  std::string command;
  std::string config_echo;
  std::string version;
  std::vector<ManifestEntry> files;
  std::map<std::string, double> timings_ms;

  std::string to_json() const;
};

std::string sha256_file(const std::string& path);

// Re-hash every file listed in a manifest; returns mismatched names.
std::vector<std::string> check_manifest(const std::string& manifest_path);

struct VerifyRow {
  std::string name;
  bool pass;
  double value;
  double threshold;
  std::string note;
};

struct VerifyReport {
  std::vector<VerifyRow> rows;
  bool all_pass() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

// Command drivers; each writes its artifacts under out_dir and returns the
// manifest (also written as manifest.json).
RunManifest run_flow(const ScenarioConfig& cfg, const std::string& out_dir);
RunManifest run_polygon(const ScenarioConfig& cfg, const std::string& out_dir);
RunManifest run_blowup(const ScenarioConfig& cfg, const std::string& out_dir);
RunManifest run_verify(const ScenarioConfig& cfg, const std::string& out_dir,
                       VerifyReport& report);

// Resolved time horizon: explicit value, or the automatic rule (just below
// the first singular/extinction time).
double resolve_horizon(const ScenarioConfig& cfg);

}  // namespace lmcf::cli

#endif
