// Command-line scenario runner: configure a model from JSON, run flows and
// analyses, emit machine-readable artifacts with a checksummed manifest.
//
// Exit codes: 0 ok, 2 configuration error, 3 runtime failure,
// 4 verification failure.

#include "lmcf/scenario.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  long long seed_override = -1;
  bool check = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Scenario configuration (JSON)")
      ->required();
  cmd->add_option("--out", args.out_dir, "Output directory");
  cmd->add_option("--seed", args.seed_override, "Override the configured seed");
  cmd->add_flag("--check", args.check,
                "Verify the checksums of a previously written manifest");
}

int with_config(const CommonArgs& args,
                const std::function<int(const lmcf::cli::ScenarioConfig&)>& body) {
  lmcf::cli::ScenarioConfig cfg{lmcf::flat::ShrinkerModel({1})};
  try {
    cfg = lmcf::cli::load_config(args.config_path);
    if (args.seed_override >= 0)
      cfg.seed = static_cast<std::uint64_t>(args.seed_override);
  } catch (const lmcf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    return body(cfg);
  } catch (const lmcf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    const std::filesystem::path diag =
        std::filesystem::path(args.out_dir) / "diagnostics.txt";
    std::error_code ec;
    std::filesystem::create_directories(args.out_dir, ec);
    std::ofstream out(diag);
    if (out) out << "error: " << e.what() << "\n";
    return 3;
  }
}

int run_check(const std::string& out_dir) {
  const auto mismatched = lmcf::cli::check_manifest(
      (std::filesystem::path(out_dir) / "manifest.json").string());
  if (mismatched.empty()) {
    std::cout << "manifest ok\n";
    return 0;
  }
  for (const auto& name : mismatched)
    std::cerr << "checksum mismatch: " << name << "\n";
  return 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lagrangian mean curvature flows from symmetry reduction"};
  app.require_subcommand(1);

  CommonArgs flow_args, polygon_args, blowup_args, verify_args;
  CLI::App* cmd_flow = app.add_subcommand("flow", "Integrate a level-set flow");
  add_common(cmd_flow, flow_args);
  CLI::App* cmd_polygon =
      app.add_subcommand("polygon", "Emit the moment polygon and gluing atlas");
  add_common(cmd_polygon, polygon_args);
  CLI::App* cmd_blowup =
      app.add_subcommand("blowup", "Singular schedule, rescaling and blow-up data");
  add_common(cmd_blowup, blowup_args);
  CLI::App* cmd_verify =
      app.add_subcommand("verify", "Run the invariant suites for a scenario");
  add_common(cmd_verify, verify_args);

  CLI11_PARSE(app, argc, argv);

  if (cmd_flow->parsed()) {
    if (flow_args.check) return run_check(flow_args.out_dir);
    return with_config(flow_args, [&](const lmcf::cli::ScenarioConfig& cfg) {
      lmcf::cli::run_flow(cfg, flow_args.out_dir);
      return 0;
    });
  }
  if (cmd_polygon->parsed()) {
    if (polygon_args.check) return run_check(polygon_args.out_dir);
    return with_config(polygon_args, [&](const lmcf::cli::ScenarioConfig& cfg) {
      lmcf::cli::run_polygon(cfg, polygon_args.out_dir);
      return 0;
    });
  }
  if (cmd_blowup->parsed()) {
    if (blowup_args.check) return run_check(blowup_args.out_dir);
    return with_config(blowup_args, [&](const lmcf::cli::ScenarioConfig& cfg) {
      lmcf::cli::run_blowup(cfg, blowup_args.out_dir);
      return 0;
    });
  }
  if (cmd_verify->parsed()) {
    if (verify_args.check) return run_check(verify_args.out_dir);
    return with_config(verify_args, [&](const lmcf::cli::ScenarioConfig& cfg) {
      lmcf::cli::VerifyReport report;
      lmcf::cli::run_verify(cfg, verify_args.out_dir, report);
      for (const auto& row : report.rows)
        std::cout << (row.pass ? "[pass] " : "[FAIL] ") << row.name
                  << "  value=" << row.value << " threshold=" << row.threshold
                  << (row.note.empty() ? "" : "  (" + row.note + ")") << "\n";
      if (!report.all_pass()) {
        std::cerr << "verification failed\n";
        return 4;
      }
      return 0;
    });
  }
  return 0;
}
