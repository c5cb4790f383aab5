#pragma once

#include "shapeopt/config.hpp"

namespace shapeopt::cli {

// Executes the optimization described by the config: streams history.csv,
// writes VTK field snapshots and boundary polylines at the snapshot interval
// (plus first and last iterations), and prints a summary. Returns the
// process exit status (0 on convergence).
int run(const RunConfig& cfg);

// Loads, builds, and validates everything, solves one state problem, and
// prints the objective and mesh statistics without writing files.
int validate(const RunConfig& cfg);

// Mesh-only export (MSH 2.2 + VTK) into the output directory.
int export_mesh(const RunConfig& cfg);

}  // namespace shapeopt::cli
