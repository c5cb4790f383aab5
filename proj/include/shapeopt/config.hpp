#pragma once

#include <iosfwd>
#include <string>

#include "shapeopt/optimize.hpp"

namespace shapeopt::cli {

// Flat dotted-key configuration; every unset key takes the benchmark
// default. See README for the key list.
struct RunConfig {
  DomainSpec domain = DomainSpec::benchmark();
  flow::FluidParams fluid;
  flow::BoundaryConditions bcs;
  flow::NewtonOptions newton;
  opt::ArmijoParams armijo;
  opt::OptimizerConfig optimizer;
  opt::ALConfig al;
  opt::ElasticityParams elasticity;
  std::string output_dir = "out";
  int snapshot_interval = 50;
  int threads = 1;
};

RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

}  // namespace shapeopt::cli
