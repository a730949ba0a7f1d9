#include "lmcf/scenario.hpp"

#include "lmcf/curvature_oracle.hpp"
#include "lmcf/singularity_lab.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace lmcf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double require_number(const json& j, const std::string& path) {
  if (!j.is_number())
    throw ConfigError(path + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path + ": must be finite");
  return v;
}

int require_int(const json& j, const std::string& path) {
  if (!j.is_number_integer())
    throw ConfigError(path + ": expected an integer");
  return j.get<int>();
}

const json& require_field(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing");
  return *it;
}

}  // namespace

ScenarioConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON (") + e.what() + ")");
  }
  if (!root.is_object()) throw ConfigError("config: expected a JSON object");

  const json& jm = require_field(root, "model", "config");
  if (!jm.is_object()) throw ConfigError("model: expected an object");
  const json& jt = require_field(jm, "type", "model");
  if (!jt.is_string()) throw ConfigError("model.type: expected a string");
  const std::string type = jt.get<std::string>();

  ScenarioConfig cfg{flat::ShrinkerModel({1}), 0.0, {}, {}, {}, 1, 12, 16, 0.0};

  if (type == "shrinker") {
    const json& jl = require_field(jm, "lambda", "model");
    if (!jl.is_array() || jl.empty())
      throw ConfigError("model.lambda: expected a nonempty array");
    std::vector<int> weights;
    for (std::size_t i = 0; i < jl.size(); ++i) {
      const std::string path = "model.lambda[" + std::to_string(i) + "]";
      if (!jl[i].is_number_integer())
        throw ConfigError(path + ": must be a nonzero integer");
      const int w = jl[i].get<int>();
      if (w == 0) throw ConfigError(path + ": must be a nonzero integer");
      weights.push_back(w);
    }
    cfg.model = flat::ShrinkerModel(std::move(weights));
  } else if (type == "translator") {
    const json& jl = require_field(jm, "lambda", "model");
    if (!jl.is_array()) throw ConfigError("model.lambda: expected an array");
    std::vector<double> weights;
    for (std::size_t i = 0; i < jl.size(); ++i)
      weights.push_back(
          require_number(jl[i], "model.lambda[" + std::to_string(i) + "]"));
    cfg.model = flat::TranslatorModel(std::move(weights));
  } else if (type == "ale") {
    const int n = require_int(require_field(jm, "n", "model"), "model.n");
    if (n < 1) throw ConfigError("model.n: must be at least 1");
    const json& ja = require_field(jm, "alpha", "model");
    if (!ja.is_array()) throw ConfigError("model.alpha: expected an array");
    std::vector<double> alpha;
    for (int i = 0; i < n; ++i) {
      const std::string path = "model.alpha[" + std::to_string(i) + "]";
      if (i >= static_cast<int>(ja.size()))
        throw ConfigError(path + ": missing (expected n entries)");
      const double a = require_number(ja[i], path);
      if (!(a > 0.0)) throw ConfigError(path + ": must be positive");
      alpha.push_back(a);
    }
    if (static_cast<int>(ja.size()) > n)
      throw ConfigError("model.alpha[" + std::to_string(n) + "]: unexpected extra entry");
    double h0 = 0.0;
    if (jm.contains("h0")) h0 = require_number(jm["h0"], "model.h0");
    const int a = require_int(require_field(jm, "a", "model"), "model.a");
    const int b = require_int(require_field(jm, "b", "model"), "model.b");
    if (std::gcd(std::abs(a), std::abs(b)) != 1)
      throw ConfigError("model.b: a and b must be coprime");
    flow::SubtorusAction action(a, b);
    try {
      action.validate_for(n);
    } catch (const Error& e) {
      throw ConfigError(std::string("model.b: ") + e.what());
    }
    cfg.model = AleModelConfig{ale::AleParams(n, std::move(alpha), h0), action};
  } else {
    throw ConfigError("model.type: must be one of shrinker/translator/ale");
  }

  cfg.c0 = require_number(require_field(root, "c0", "config"), "c0");

  if (root.contains("horizon")) {
    const json& jh = root["horizon"];
    if (jh.is_string()) {
      if (jh.get<std::string>() != "auto")
        throw ConfigError("horizon: must be a positive number or \"auto\"");
    } else {
      const double h = require_number(jh, "horizon");
      if (!(h > 0.0)) throw ConfigError("horizon: must be positive");
      cfg.horizon = h;
    }
  }

  if (root.contains("integrator")) {
    const json& ji = root["integrator"];
    if (!ji.is_object()) throw ConfigError("integrator: expected an object");
    if (ji.contains("step")) cfg.integrator.step = require_number(ji["step"], "integrator.step");
    if (ji.contains("projection_tol"))
      cfg.integrator.projection_tol =
          require_number(ji["projection_tol"], "integrator.projection_tol");
    if (ji.contains("max_newton"))
      cfg.integrator.max_newton = require_int(ji["max_newton"], "integrator.max_newton");
    if (ji.contains("stop_margin"))
      cfg.integrator.stop_margin =
          require_number(ji["stop_margin"], "integrator.stop_margin");
    try {
      cfg.integrator.validate();
    } catch (const Error& e) {
      throw ConfigError(std::string("integrator: ") + e.what());
    }
  }

  if (root.contains("outputs")) {
    const json& jo = root["outputs"];
    if (!jo.is_array()) throw ConfigError("outputs: expected an array of strings");
    for (std::size_t i = 0; i < jo.size(); ++i) {
      if (!jo[i].is_string())
        throw ConfigError("outputs[" + std::to_string(i) + "]: expected a string");
      cfg.outputs.push_back(jo[i].get<std::string>());
    }
  }

  if (root.contains("seed")) {
    const json& js = root["seed"];
    if (!js.is_number_integer() || js.get<long long>() < 0)
      throw ConfigError("seed: expected a nonnegative integer");
    cfg.seed = js.get<std::uint64_t>();
  }
  if (root.contains("seed_count")) {
    cfg.seed_count = require_int(root["seed_count"], "seed_count");
    if (cfg.seed_count < 1) throw ConfigError("seed_count: must be at least 1");
  }
  if (root.contains("fiber_samples")) {
    cfg.fiber_samples = require_int(root["fiber_samples"], "fiber_samples");
    if (cfg.fiber_samples < 1) throw ConfigError("fiber_samples: must be at least 1");
  }
  if (root.contains("debug_a_h_offset"))
    cfg.debug_a_h_offset = require_number(root["debug_a_h_offset"], "debug_a_h_offset");

  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("sha256: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int md_len = 0;
  EVP_Digest(data.data(), data.size(), md, &md_len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < md_len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xf]);
  }
  return out;
}

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["version"] = version;
  j["config"] = json::parse(config_echo);
  json files_j = json::array();
  for (const auto& f : files)
    files_j.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files_j;
  j["timings_ms"] = timings_ms;
  return j.dump(2);
}

std::vector<std::string> check_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw Error("check: cannot open " + manifest_path);
  json j;
  in >> j;
  const fs::path dir = fs::path(manifest_path).parent_path();
  std::vector<std::string> bad;
  for (const auto& f : j.at("files")) {
    const std::string name = f.at("name").get<std::string>();
    const std::string want = f.at("sha256").get<std::string>();
    const fs::path p = dir / name;
    if (!fs::exists(p) || sha256_file(p.string()) != want) bad.push_back(name);
  }
  return bad;
}

double resolve_horizon(const ScenarioConfig& cfg) {
  if (cfg.horizon) return *cfg.horizon;
  if (const auto* sh = std::get_if<flat::ShrinkerModel>(&cfg.model)) {
    const double rate = static_cast<double>(sh->weight_sum());
    if (rate != 0.0 && cfg.c0 / rate > 0.0) return 0.999 * cfg.c0 / rate;
    return 1.0;
  }
  if (std::holds_alternative<flat::TranslatorModel>(cfg.model)) return 1.0;
  const auto& am = std::get<AleModelConfig>(cfg.model);
  const auto t0 = flow::first_singular_time(am.params, am.action, cfg.c0);
  if (t0) return 0.999 * *t0;
  return 1.0;
}

namespace {

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  }
};

std::string config_echo_json(const ScenarioConfig& cfg) {
  json j;
  if (const auto* sh = std::get_if<flat::ShrinkerModel>(&cfg.model)) {
    j["model"] = {{"type", "shrinker"}, {"lambda", sh->weights}};
  } else if (const auto* tr = std::get_if<flat::TranslatorModel>(&cfg.model)) {
    j["model"] = {{"type", "translator"}, {"lambda", tr->weights}};
  } else {
    const auto& am = std::get<AleModelConfig>(cfg.model);
    j["model"] = {{"type", "ale"},       {"n", am.params.n},
                  {"alpha", am.params.alpha}, {"h0", am.params.h0},
                  {"a", am.action.a},    {"b", am.action.b}};
  }
  j["c0"] = cfg.c0;
  if (cfg.horizon)
    j["horizon"] = *cfg.horizon;
  else
    j["horizon"] = "auto";
  j["integrator"] = {{"step", cfg.integrator.step},
                     {"projection_tol", cfg.integrator.projection_tol},
                     {"max_newton", cfg.integrator.max_newton},
                     {"stop_margin", cfg.integrator.stop_margin}};
  j["seed"] = cfg.seed;
  j["seed_count"] = cfg.seed_count;
  j["fiber_samples"] = cfg.fiber_samples;
  if (cfg.debug_a_h_offset != 0.0) j["debug_a_h_offset"] = cfg.debug_a_h_offset;
  return j.dump();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

ManifestEntry manifest_entry(const fs::path& dir, const std::string& name) {
  const fs::path p = dir / name;
  return ManifestEntry{name, sha256_file(p.string()),
                       static_cast<std::uint64_t>(fs::file_size(p))};
}

std::vector<std::string> effective_outputs(const ScenarioConfig& cfg,
                                           std::vector<std::string> defaults,
                                           const std::vector<std::string>& known) {
  std::vector<std::string> outs = cfg.outputs.empty() ? defaults : cfg.outputs;
  for (std::size_t i = 0; i < outs.size(); ++i) {
    if (std::find(known.begin(), known.end(), outs[i]) == known.end())
      throw ConfigError("outputs[" + std::to_string(i) + "]: unknown artifact '" +
                        outs[i] + "'");
    for (std::size_t k = 0; k < i; ++k)
      if (outs[k] == outs[i])
        throw ConfigError("outputs[" + std::to_string(i) + "]: duplicate artifact '" +
                          outs[i] + "'");
  }
  return outs;
}

std::string trajectory_jsonl(const flow::FlowTrajectory& traj) {
  std::ostringstream out;
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    for (std::size_t s = 0; s < traj.samples[k].size(); ++s) {
      out << "{\"t\": " << format_double(traj.times[k])
          << ", \"seed_index\": " << s << ", \"point\": [";
      const Vec& p = traj.samples[k][s];
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (i) out << ", ";
        out << format_double(p[i]);
      }
      out << "], \"drift_residual\": " << format_double(traj.residuals[k][s])
          << "}\n";
    }
  return out.str();
}

std::string trajectory_csv(const flow::FlowTrajectory& traj) {
  std::ostringstream out;
  const std::size_t dim = traj.samples.empty() ? 0 : traj.samples[0][0].size();
  out << "t,seed_index";
  for (std::size_t i = 0; i < dim; ++i) out << ",x" << i;
  out << ",drift_residual\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    for (std::size_t s = 0; s < traj.samples[k].size(); ++s) {
      out << format_double(traj.times[k]) << "," << s;
      for (const double v : traj.samples[k][s]) out << "," << format_double(v);
      out << "," << format_double(traj.residuals[k][s]) << "\n";
    }
  return out.str();
}

std::string drift_summary_json(const flow::FlowTrajectory& traj) {
  json j;
  j["c0"] = traj.c0;
  j["a_h"] = traj.a_h;
  j["halt_time"] = traj.halt_time;
  j["steps"] = traj.times.size();
  j["max_drift_residual"] = traj.max_drift_residual();
  if (traj.singular_time) j["singular_time"] = *traj.singular_time;
  bool reseed = false;
  for (char f : traj.reseed_flagged) reseed |= (f != 0);
  j["reseed_flagged"] = reseed;
  return j.dump(2);
}

flow::FlowTrajectory run_scenario_flow(const ScenarioConfig& cfg, double horizon,
                                       const std::vector<double>& record_times) {
  if (const auto* sh = std::get_if<flat::ShrinkerModel>(&cfg.model)) {
    const auto seeds = flat::level_set_sample(*sh, flat::LevelValue(cfg.c0),
                                              cfg.seed_count, cfg.seed);
    return flow::integrate_flow(*sh, cfg.c0, horizon, cfg.integrator, seeds,
                                record_times);
  }
  if (const auto* tr = std::get_if<flat::TranslatorModel>(&cfg.model)) {
    const auto seeds = flat::level_set_sample(*tr, flat::LevelValue(cfg.c0),
                                              cfg.seed_count, cfg.seed);
    return flow::integrate_flow(*tr, cfg.c0, horizon, cfg.integrator, seeds,
                                record_times);
  }
  const auto& am = std::get<AleModelConfig>(cfg.model);
  const int per_sheet = std::max(1, (cfg.seed_count + 3) / 4);
  const auto seeds =
      flow::ale_level_seeds(am.params, am.action, cfg.c0, per_sheet, cfg.seed);
  return flow::integrate_flow(am.params, am.action, cfg.c0, horizon, cfg.integrator,
                              seeds, record_times);
}

}  // namespace

RunManifest run_flow(const ScenarioConfig& cfg, const std::string& out_dir) {
  const std::vector<std::string> known = {"trajectory_jsonl", "trajectory_csv",
                                          "drift_summary"};
  const auto outs = effective_outputs(
      cfg, {"trajectory_jsonl", "trajectory_csv", "drift_summary"}, known);

  const fs::path dir(out_dir);
  fs::create_directories(dir);

  RunManifest manifest;
  manifest.command = "flow";
  manifest.version = kVersion;
  manifest.config_echo = config_echo_json(cfg);

  Stopwatch total;
  const double horizon = resolve_horizon(cfg);
  Stopwatch integ;
  const flow::FlowTrajectory traj = run_scenario_flow(cfg, horizon, {});
  manifest.timings_ms["integrate"] = integ.ms();

  Stopwatch io;
  for (const auto& name : outs) {
    if (name == "trajectory_jsonl")
      write_text(dir / "trajectory.jsonl", trajectory_jsonl(traj));
    else if (name == "trajectory_csv")
      write_text(dir / "trajectory.csv", trajectory_csv(traj));
    else if (name == "drift_summary")
      write_text(dir / "drift_summary.json", drift_summary_json(traj));
  }
  for (const auto& name : outs) {
    if (name == "trajectory_jsonl")
      manifest.files.push_back(manifest_entry(dir, "trajectory.jsonl"));
    else if (name == "trajectory_csv")
      manifest.files.push_back(manifest_entry(dir, "trajectory.csv"));
    else if (name == "drift_summary")
      manifest.files.push_back(manifest_entry(dir, "drift_summary.json"));
  }
  manifest.timings_ms["write"] = io.ms();
  manifest.timings_ms["total"] = total.ms();
  write_text(dir / "manifest.json", manifest.to_json());
  return manifest;
}

RunManifest run_polygon(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (!cfg.is_ale())
    throw ConfigError("model.type: the polygon command requires an ale model");
  const std::vector<std::string> known = {"polygon_json", "polygon_plot", "atlas_json"};
  const auto outs = effective_outputs(cfg, {"polygon_json", "polygon_plot"}, known);
  const auto& am = std::get<AleModelConfig>(cfg.model);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.command = "polygon";
  manifest.version = kVersion;
  manifest.config_echo = config_echo_json(cfg);
  Stopwatch total;

  const ale::MomentPolygon poly = ale::polygon(am.params);
  for (const auto& name : outs) {
    if (name == "polygon_json") {
      write_text(dir / "polygon.json", ale::polygon_to_json(poly));
      manifest.files.push_back(manifest_entry(dir, "polygon.json"));
    } else if (name == "polygon_plot") {
      // Boundary polyline: capped ray end, the vertices in order, capped end.
      std::ostringstream out;
      const double span = am.params.h[am.params.n] - am.params.h[0] + 1.0;
      const double y_top = -am.params.h[0] + 2.0 * span;
      out << format_double(poly.x_min(y_top)) << " " << format_double(y_top) << "\n";
      for (const auto& v : poly.vertices)
        out << format_double(v[0]) << " " << format_double(v[1]) << "\n";
      const double y_bot = -am.params.h[am.params.n] - 2.0 * span;
      out << format_double(0.0) << " " << format_double(y_bot) << "\n";
      write_text(dir / "polygon_boundary.dat", out.str());
      manifest.files.push_back(manifest_entry(dir, "polygon_boundary.dat"));
    } else if (name == "atlas_json") {
      write_text(dir / "atlas.json",
                 ale::atlas_to_json(ale::fixed_surface_topology(am.params)));
      manifest.files.push_back(manifest_entry(dir, "atlas.json"));
    }
  }
  manifest.timings_ms["total"] = total.ms();
  write_text(dir / "manifest.json", manifest.to_json());
  return manifest;
}

RunManifest run_blowup(const ScenarioConfig& cfg, const std::string& out_dir) {
  if (!cfg.is_ale())
    throw ConfigError("model.type: the blowup command requires an ale model");
  const auto& am = std::get<AleModelConfig>(cfg.model);
  if (am.action.a == 0)
    throw ConfigError("model.a: no singularity schedule for a static action");

  const std::vector<std::string> known = {"blowup_json", "distance_plot", "typeI_plot"};
  const auto outs =
      effective_outputs(cfg, {"blowup_json", "distance_plot", "typeI_plot"}, known);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.command = "blowup";
  manifest.version = kVersion;
  manifest.config_echo = config_echo_json(cfg);
  Stopwatch total;

  const sing::SingularSchedule sched =
      sing::singular_times(am.params, am.action, cfg.c0);
  if (sched.first_hit_vertex < 0)
    throw ConfigError("c0: the drifting level never reaches a vertex");
  const int k0 = sched.first_hit_vertex;
  const double t0 = sched.first_hit_time;
  const sing::BlowupWeights weights = sing::blowup_weights(am.params.n, am.action, k0);

  std::vector<double> dyadic;
  for (int k = 1; k <= 4; ++k) {
    const double t = t0 - std::pow(10.0, -k);
    if (t > 0.0) dyadic.push_back(t);
  }
  Stopwatch integ;
  const double horizon = resolve_horizon(cfg);
  const flow::FlowTrajectory traj = run_scenario_flow(cfg, horizon, dyadic);
  manifest.timings_ms["integrate"] = integ.ms();

  Stopwatch slices_t;
  std::vector<sing::RescaledSlice> slices;
  for (const double t : dyadic)
    slices.push_back(
        sing::rescaled_slice(am.params, am.action, traj, t, k0, 160));
  manifest.timings_ms["rescaled_slices"] = slices_t.ms();

  Stopwatch typei_t;
  std::vector<double> late_times;
  for (int i = 0; i < 5; ++i) {
    const double tau = 1e-4 * std::pow(0.1, i / 4.0);
    if (t0 - tau > 0.0) late_times.push_back(t0 - tau);
  }
  const sing::TypeIStatistic typei =
      sing::type_one_statistic(am.params, am.action, traj, k0, 5.0, late_times);
  manifest.timings_ms["type_one"] = typei_t.ms();

  json report;
  report["schedule"] = {{"times", sched.times},
                        {"first_hit_vertex", sched.first_hit_vertex},
                        {"first_hit_time", sched.first_hit_time}};
  switch (sched.tag) {
    case sing::CaseTag::slope_positive:
      report["schedule"]["case"] = "slope_positive";
      break;
    case sing::CaseTag::slope_intermediate:
      report["schedule"]["case"] = "slope_intermediate";
      report["schedule"]["m0"] = sched.m0;
      report["schedule"]["i0"] = sched.i0;
      report["schedule"]["j0"] = sched.j0;
      break;
    case sing::CaseTag::slope_steep:
      report["schedule"]["case"] = "slope_steep";
      break;
    case sing::CaseTag::static_flow:
      report["schedule"]["case"] = "static";
      break;
  }
  report["weights"] = {{"lambda1", weights.lambda1},
                       {"lambda2", weights.lambda2},
                       {"k0", weights.k0}};
  json dist = json::array();
  bool decreasing = true;
  for (std::size_t i = 0; i < slices.size(); ++i) {
    dist.push_back({{"t", slices[i].t},
                    {"tau", slices[i].tau},
                    {"distance", slices[i].quadric_distance},
                    {"trajectory_points", slices[i].trajectory_points}});
    if (i > 0 && slices[i].quadric_distance >= slices[i - 1].quadric_distance)
      decreasing = false;
  }
  report["distance_series"] = dist;
  report["distance_strictly_decreasing"] = decreasing;
  json typei_j = json::array();
  for (const auto& e : typei.series)
    typei_j.push_back({{"t", e.t},
                       {"tau", e.tau},
                       {"sup_second_fundamental", e.sup_second_fundamental},
                       {"product", e.product}});
  report["type_one_series"] = typei_j;

  for (const auto& name : outs) {
    if (name == "blowup_json") {
      write_text(dir / "blowup.json", report.dump(2));
      manifest.files.push_back(manifest_entry(dir, "blowup.json"));
    } else if (name == "distance_plot") {
      std::ostringstream out;
      for (const auto& s : slices)
        out << format_double(s.tau) << " " << format_double(s.quadric_distance)
            << "\n";
      write_text(dir / "distance_series.dat", out.str());
      manifest.files.push_back(manifest_entry(dir, "distance_series.dat"));
    } else if (name == "typeI_plot") {
      std::ostringstream out;
      for (const auto& e : typei.series)
        out << format_double(e.tau) << " " << format_double(e.product) << "\n";
      write_text(dir / "type_one_products.dat", out.str());
      manifest.files.push_back(manifest_entry(dir, "type_one_products.dat"));
    }
  }
  manifest.timings_ms["total"] = total.ms();
  write_text(dir / "manifest.json", manifest.to_json());
  return manifest;
}

namespace {

void ambient_invariant_rows(const AmbientModel& model, std::uint64_t seed,
                            double point_scale, VerifyReport& report) {
  DetRng rng(seed);
  double spd_min = std::numeric_limits<double>::infinity();
  double i2_res = 0.0, antisym = 0.0, moment_res = 0.0, compat = 0.0;
  for (int trial = 0; trial < 25; ++trial) {
    const Vec p = point_scale * rng.normal_vec(model.point_dim);
    const Vec u = rng.normal_vec(model.point_dim);
    const Vec v = rng.normal_vec(model.point_dim);
    const double guu = model.metric_at(p, u, u);
    spd_min = std::min(spd_min, guu / std::max(dot(u, u), 1e-300));
    const Vec iiu = model.cplx_I1_at(p, model.cplx_I1_at(p, u));
    i2_res = std::max(i2_res, norm(iiu + u) / std::max(1.0, norm(u)));
    antisym = std::max(antisym, std::abs(model.omega1_at(p, u, v) +
                                         model.omega1_at(p, v, u)));
    compat = std::max(compat,
                      std::abs(model.omega1_at(p, u, v) -
                               model.metric_at(p, model.cplx_I1_at(p, u), v)));
    auto mom = [&model](const Vec& q) { return model.moment_at(q)[0]; };
    const double dmu = fd_directional_derivative(std::function<double(const Vec&)>(mom),
                                                 p, v, fd_default_step(p));
    const Vec gen = model.action_generator_at(p, 1.0);
    moment_res = std::max(moment_res, std::abs(dmu + model.omega1_at(p, gen, v)));
  }
  report.rows.push_back({"ambient.metric_positive", spd_min > 0.0, spd_min, 0.0,
                         "min Rayleigh quotient over samples"});
  report.rows.push_back(
      {"ambient.complex_structure_square", i2_res < 1e-12, i2_res, 1e-12, ""});
  report.rows.push_back(
      {"ambient.omega_antisymmetry", antisym < 1e-12, antisym, 1e-12, ""});
  report.rows.push_back({"ambient.metric_compatibility", compat < 1e-10, compat,
                         1e-10, ""});
  report.rows.push_back(
      {"ambient.moment_identity", moment_res < 1e-7, moment_res, 1e-7, ""});
}

void drift_row(const ScenarioConfig& cfg, VerifyReport& report) {
  const double horizon = std::min(resolve_horizon(cfg), 0.4);
  const flow::FlowTrajectory traj = run_scenario_flow(cfg, horizon, {});
  // Residuals against the (possibly fault-injected) expected rate.
  // The stored residual is |moment - true schedule|; an injected offset on
  // the expected rate shifts the schedule by t * offset (sign unknown after
  // the absolute value, so take the smaller reading).
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double shift = traj.times[k] * cfg.debug_a_h_offset;
    for (double r : traj.residuals[k])
      worst = std::max(worst, std::min(std::abs(r - shift), std::abs(r + shift)));
  }
  const double budget = 10.0 * cfg.integrator.projection_tol;
  report.rows.push_back({"flow.drift_law", worst < budget, worst, budget,
                         "max |moment - scheduled level|"});
}

void pullback_row_flat(const oracle::ImmersedPatch& patch, std::uint64_t seed,
                       VerifyReport& report) {
  DetRng rng(seed);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    Vec u(patch.domain.size());
    for (std::size_t a = 0; a < u.size(); ++a)
      u[a] = rng.uniform(patch.domain[a][0], patch.domain[a][1]);
    const Vec p = patch.parametrization(u);
    const auto frame = oracle::tangent_frame(patch, u);
    for (std::size_t a = 0; a < frame.size(); ++a)
      for (std::size_t b = a + 1; b < frame.size(); ++b)
        worst = std::max(worst,
                         std::abs(patch.ambient.omega1_at(p, frame[a], frame[b])));
  }
  report.rows.push_back(
      {"lagrangian.pullback", worst < 1e-8, worst, 1e-8, "|omega(tangent pairs)|"});
}

void verify_flat_shrinker(const ScenarioConfig& cfg, const flat::ShrinkerModel& model,
                          VerifyReport& report) {
  ambient_invariant_rows(flat::shrinker_ambient(model), cfg.seed, 1.0, report);
  drift_row(cfg, report);
  if (model.dim() == 2) {
    const oracle::ImmersedPatch patch = oracle::shrinker_surface_patch(model, cfg.c0);
    const double alpha = flat::shrinker_alpha_c(model, flat::LevelValue(cfg.c0));
    const auto res = oracle::soliton_residual(
        patch, oracle::SolitonKind::shrinker(alpha), 6);
    const bool minimal = (model.weight_sum() == 0);
    if (minimal)
      report.rows.push_back({"soliton.minimal_absolute", res.max_absolute < 1e-6,
                             res.max_absolute, 1e-6, ""});
    else
      report.rows.push_back({"soliton.shrinker_identity", res.max_relative < 1e-4,
                             res.max_relative, 1e-4, ""});
    pullback_row_flat(patch, cfg.seed + 1, report);

    // Angle formula along the fiber, up to one global frame sign.
    const double expected0 =
        model.weight_sum() * 0.7 - 0.5 * std::numbers::pi;
    const double got = oracle::lagrangian_angle(patch, Vec{0.8, 0.7});
    const double direct = oracle::angle_distance(got, expected0);
    const double flipped =
        oracle::angle_distance(got, expected0 + std::numbers::pi);
    report.rows.push_back({"angle.fiber_formula", std::min(direct, flipped) < 1e-6,
                           std::min(direct, flipped), 1e-6,
                           direct <= flipped ? "frame sign +" : "frame sign -"});
  }
}

void verify_flat_translator(const ScenarioConfig& cfg,
                            const flat::TranslatorModel& model,
                            VerifyReport& report) {
  ambient_invariant_rows(flat::translator_ambient(model), cfg.seed, 1.0, report);
  drift_row(cfg, report);
  const oracle::ImmersedPatch patch = oracle::translator_graph_patch(model, cfg.c0);
  const auto res = oracle::soliton_residual(
      patch, oracle::SolitonKind::translator(flat::translator_direction(model)),
      model.dim() <= 2 ? 5 : 3);
  if (model.weight_sum() == 0.0)
    report.rows.push_back({"soliton.minimal_absolute", res.max_absolute < 1e-6,
                           res.max_absolute, 1e-6, ""});
  else
    report.rows.push_back({"soliton.translator_identity", res.max_relative < 1e-4,
                           res.max_relative, 1e-4, ""});
  pullback_row_flat(patch, cfg.seed + 1, report);
}

void verify_ale(const ScenarioConfig& cfg, const AleModelConfig& am,
                VerifyReport& report) {
  DetRng rng(cfg.seed);
  const ale::MomentPolygon poly = ale::polygon(am.params);

  double rt_worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const double y = rng.uniform(-am.params.h[am.params.n] - 1.5,
                                 -am.params.h[0] + 1.5);
    const double x = poly.x_min(y) + rng.uniform(0.05, 4.0);
    const ale::QuotientPoint p = ale::solve_level(am.params, x, y);
    const auto xy = ale::mu_g(am.params, p);
    rt_worst = std::max(rt_worst, std::hypot(xy[0] - x, xy[1] - y));
  }
  report.rows.push_back(
      {"quotient.level_roundtrip", rt_worst < 1e-9, rt_worst, 1e-9, ""});

  double sigma_min = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 5; ++trial) {
    const double y = rng.uniform(-am.params.h[am.params.n], -am.params.h[0]);
    const double x = poly.x_min(y) + rng.uniform(0.3, 2.0);
    ale::QuotientPoint p = ale::solve_level(am.params, x, y);
    p = ale::g_action(p, rng.uniform(0.0, 6.28), rng.uniform(0.0, 6.28));
    const auto rows = ale::constraint_jacobian(p.rep);
    Eigen::MatrixXd J(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < rows[i].size(); ++j) J(i, j) = rows[i][j];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    sigma_min = std::min(sigma_min, svd.singularValues().minCoeff());
  }
  report.rows.push_back(
      {"quotient.regular_rank", sigma_min > 1e-8, sigma_min, 1e-8, "sigma_min"});

  drift_row(cfg, report);

  // Symplectic pullback through horizontal lifts along the level section.
  if (am.action.a == 0) {
    report.rows.push_back({"lagrangian.pullback", true, 0.0, 1e-8,
                           "skipped: static section has no drift tangent"});
    report.rows.push_back({"curvature.chart_tier", true, 1e-2, 1e-2,
                           "chart oracle accuracy tier (documented)"});
    return;
  }
  const flow::LevelSection sec =
      flow::level_line_section(am.params, am.action, cfg.c0);
  double pull_worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const double lo = sec.y_range[0], hi = sec.y_range[1];
    const double dir = (hi >= lo) ? 1.0 : -1.0;
    const double y = lo + dir * 0.05 + (hi - lo - dir * 0.1) * rng.uniform();
    auto rep_at = [&](double yy) {
      return ale::point_coords(
          ale::solve_level(am.params, sec.x_at(yy), yy).rep);
    };
    const double h = 1e-4;
    Vec tangent = (1.0 / (12.0 * h)) *
                  ((rep_at(y - 2 * h) - rep_at(y + 2 * h)) +
                   8.0 * (rep_at(y + h) - rep_at(y - h)));
    const ale::QuotientPoint p = ale::solve_level(am.params, sec.x_at(y), y);
    const Vec fiber = ale::horizontal_project(
        p.rep, flow::ale_generator_lift(am.params, am.action, p));
    pull_worst = std::max(pull_worst,
                          std::abs(ale::flat_omega1(tangent, fiber)) /
                              std::max(1.0, norm(tangent) * norm(fiber)));
  }
  report.rows.push_back(
      {"lagrangian.pullback", pull_worst < 1e-8, pull_worst, 1e-8,
       "level tangents against the fiber lift"});

  report.rows.push_back({"curvature.chart_tier", true, 1e-2, 1e-2,
                         "chart oracle accuracy tier (documented)"});
}

}  // namespace

RunManifest run_verify(const ScenarioConfig& cfg, const std::string& out_dir,
                       VerifyReport& report) {
  const std::vector<std::string> known = {"verify_report"};
  const auto outs = effective_outputs(cfg, {"verify_report"}, known);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  RunManifest manifest;
  manifest.command = "verify";
  manifest.version = kVersion;
  manifest.config_echo = config_echo_json(cfg);
  Stopwatch total;

  if (const auto* sh = std::get_if<flat::ShrinkerModel>(&cfg.model))
    verify_flat_shrinker(cfg, *sh, report);
  else if (const auto* tr = std::get_if<flat::TranslatorModel>(&cfg.model))
    verify_flat_translator(cfg, *tr, report);
  else
    verify_ale(cfg, std::get<AleModelConfig>(cfg.model), report);

  json j;
  j["all_pass"] = report.all_pass();
  json rows = json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"name", r.name},
                    {"pass", r.pass},
                    {"value", r.value},
                    {"threshold", r.threshold},
                    {"note", r.note}});
  j["rows"] = rows;

  for (const auto& name : outs)
    if (name == "verify_report") {
      write_text(dir / "verify_report.json", j.dump(2));
      manifest.files.push_back(manifest_entry(dir, "verify_report.json"));
    }
  manifest.timings_ms["total"] = total.ms();
  write_text(dir / "manifest.json", manifest.to_json());
  return manifest;
}

}  // namespace lmcf::cli
