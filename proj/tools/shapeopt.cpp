#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "shapeopt/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"PDE-constrained shape optimization of multi-shapes in channel flow"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  int max_iters = -1;
  int seed = -1;

  auto* run_cmd = app.add_subcommand("run", "run the optimization described by a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--output-dir", output_dir, "override output.dir");
  run_cmd->add_option("--max-iters", max_iters, "override opt.max_inner");
  run_cmd->add_option("--seed", seed, "override opt.seed");

  auto* validate_cmd =
      app.add_subcommand("validate", "check config, geometry, mesh and one state solve");
  validate_cmd->add_option("config", config_path, "config file")->required();

  auto* mesh_cmd = app.add_subcommand("mesh", "generate and export the mesh only");
  mesh_cmd->add_option("config", config_path, "config file")->required();
  mesh_cmd->add_option("--output-dir", output_dir, "override output.dir");

  CLI11_PARSE(app, argc, argv);

  shapeopt::cli::RunConfig cfg;
  try {
    cfg = shapeopt::cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  if (max_iters > 0) cfg.optimizer.max_inner = max_iters;
  if (seed >= 0) cfg.optimizer.seed = static_cast<unsigned>(seed);

  if (run_cmd->parsed()) return shapeopt::cli::run(cfg);
  if (validate_cmd->parsed()) return shapeopt::cli::validate(cfg);
  return shapeopt::cli::export_mesh(cfg);
}
