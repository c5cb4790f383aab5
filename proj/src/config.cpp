#include "shapeopt/config.hpp"

#include <algorithm>
#include <optional>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace shapeopt::cli {

namespace {

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  auto b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: value of '" + key + "' is not a number: " + v);
  }
  if (pos != v.size())
    throw std::runtime_error("config: value of '" + key + "' is not a number: " + v);
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  double x = to_double(key, v);
  int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw std::runtime_error("config: value of '" + key + "' is not an integer: " + v);
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::runtime_error("config: value of '" + key + "' is not a boolean: " + v);
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::runtime_error(message);
}

}  // namespace

RunConfig parse_config(std::istream& is) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not of the form key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (kv.count(key)) throw std::runtime_error("config: duplicate key '" + key + "'");
    kv[key] = value;
  }

  RunConfig cfg;
  cfg.al.bary_bounds = opt::ALConfig::benchmark_bounds();

  int shape_count = 2;
  if (auto it = kv.find("shapes.count"); it != kv.end()) {
    shape_count = to_int(it->first, it->second);
    require(shape_count >= 1, "shapes.count must be >= 1");
    kv.erase(it);
  }
  cfg.domain.shapes.resize(shape_count,
                           ShapeGen{{0.5, 0.5}, 0.1, 0, 32});
  cfg.al.bary_bounds.resize(shape_count, opt::BaryBounds{});

  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string value = it->second;
    kv.erase(it);
    return value;
  };

  if (auto v = take("domain.mesh_size")) {
    cfg.domain.mesh_size = to_double("domain.mesh_size", *v);
    require(cfg.domain.mesh_size > 0, "domain.mesh_size must be > 0");
  }
  if (auto v = take("domain.lo_x")) cfg.domain.lo.x = to_double("domain.lo_x", *v);
  if (auto v = take("domain.lo_y")) cfg.domain.lo.y = to_double("domain.lo_y", *v);
  if (auto v = take("domain.hi_x")) cfg.domain.hi.x = to_double("domain.hi_x", *v);
  if (auto v = take("domain.hi_y")) cfg.domain.hi.y = to_double("domain.hi_y", *v);
  require(cfg.domain.lo.x < cfg.domain.hi.x && cfg.domain.lo.y < cfg.domain.hi.y,
          "hold-all rectangle is empty");

  for (int i = 0; i < shape_count; ++i) {
    std::string p = "shape" + std::to_string(i + 1) + ".";
    ShapeGen& g = cfg.domain.shapes[i];
    if (auto v = take(p + "center_x")) g.center.x = to_double(p + "center_x", *v);
    if (auto v = take(p + "center_y")) g.center.y = to_double(p + "center_y", *v);
    if (auto v = take(p + "radius")) g.radius = to_double(p + "radius", *v);
    require(g.radius > 0, p + "radius must be > 0");
    if (auto v = take(p + "kinks")) g.kinks = to_int(p + "kinks", *v);
    require(g.kinks >= 0, p + "kinks must be >= 0");
    if (auto v = take(p + "subdivisions")) g.subdivisions = to_int(p + "subdivisions", *v);
    require(g.subdivisions >= 0, p + "subdivisions must be >= 0");
    require(g.kinks + g.subdivisions >= 3, p + ": need at least 3 boundary factors");

    opt::BaryBounds& b = cfg.al.bary_bounds[i];
    if (auto v = take(p + "bary_lo_x")) b.lo.x = to_double(p + "bary_lo_x", *v);
    if (auto v = take(p + "bary_lo_y")) b.lo.y = to_double(p + "bary_lo_y", *v);
    if (auto v = take(p + "bary_hi_x")) b.hi.x = to_double(p + "bary_hi_x", *v);
    if (auto v = take(p + "bary_hi_y")) b.hi.y = to_double(p + "bary_hi_y", *v);
    require(b.lo.x <= 0 && b.lo.y <= 0 && b.hi.x >= 0 && b.hi.y >= 0,
            p + ": barycenter bounds must bracket the initial position");
  }

  if (auto v = take("fluid.mu")) cfg.fluid.mu = to_double("fluid.mu", *v);
  require(cfg.fluid.mu > 0, "fluid.mu must be > 0");
  if (auto v = take("fluid.rho")) cfg.fluid.rho = to_double("fluid.rho", *v);
  require(cfg.fluid.rho >= 0, "fluid.rho must be >= 0");
  if (auto v = take("bc.inflow_a")) cfg.bcs.inflow_a = to_double("bc.inflow_a", *v);

  if (auto v = take("newton.tol")) cfg.newton.tol = to_double("newton.tol", *v);
  require(cfg.newton.tol > 0, "newton.tol must be > 0");
  if (auto v = take("newton.max_iters")) cfg.newton.max_iters = to_int("newton.max_iters", *v);
  require(cfg.newton.max_iters >= 1, "newton.max_iters must be >= 1");
  if (auto v = take("newton.rho_start_cap"))
    cfg.newton.rho_start_cap = to_double("newton.rho_start_cap", *v);
  if (auto v = take("newton.ramp")) cfg.newton.ramp = to_double("newton.ramp", *v);
  require(cfg.newton.ramp > 1, "newton.ramp must be > 1");
  if (auto v = take("newton.max_bisections"))
    cfg.newton.max_bisections = to_int("newton.max_bisections", *v);

  if (auto v = take("armijo.alpha0")) cfg.armijo.initial_step = to_double("armijo.alpha0", *v);
  require(cfg.armijo.initial_step > 0, "armijo.alpha0 must be > 0");
  if (auto v = take("armijo.sigma"))
    cfg.armijo.sufficient_decrease = to_double("armijo.sigma", *v);
  require(cfg.armijo.sufficient_decrease > 0 && cfg.armijo.sufficient_decrease < 1,
          "armijo.sigma must be in (0, 1)");
  if (auto v = take("armijo.shrink")) cfg.armijo.shrink = to_double("armijo.shrink", *v);
  require(cfg.armijo.shrink > 0 && cfg.armijo.shrink < 1, "armijo.shrink must be in (0, 1)");
  if (auto v = take("armijo.alpha_min")) cfg.armijo.min_step = to_double("armijo.alpha_min", *v);
  require(cfg.armijo.min_step > 0, "armijo.alpha_min must be > 0");

  if (auto v = take("opt.eps")) cfg.optimizer.eps = to_double("opt.eps", *v);
  require(cfg.optimizer.eps > 0, "opt.eps must be > 0");
  if (auto v = take("opt.max_inner")) cfg.optimizer.max_inner = to_int("opt.max_inner", *v);
  require(cfg.optimizer.max_inner >= 1, "opt.max_inner must be >= 1");
  if (auto v = take("opt.max_al")) cfg.optimizer.max_al = to_int("opt.max_al", *v);
  require(cfg.optimizer.max_al >= 1, "opt.max_al must be >= 1");
  if (auto v = take("opt.quality_threshold"))
    cfg.optimizer.quality_threshold = to_double("opt.quality_threshold", *v);
  require(cfg.optimizer.quality_threshold >= 0 && cfg.optimizer.quality_threshold < 1,
          "opt.quality_threshold must be in [0, 1)");
  if (auto v = take("opt.seed")) cfg.optimizer.seed = to_int("opt.seed", *v);
  if (auto v = take("opt.debug_checks"))
    cfg.optimizer.debug_checks = to_bool("opt.debug_checks", *v);

  if (auto v = take("al.c0")) cfg.al.c0 = to_double("al.c0", *v);
  require(cfg.al.c0 > 0, "al.c0 must be > 0");
  if (auto v = take("al.growth")) cfg.al.growth = to_double("al.growth", *v);
  require(cfg.al.growth >= 1, "al.growth must be >= 1");
  if (auto v = take("al.tau")) cfg.al.tau = to_double("al.tau", *v);
  require(cfg.al.tau > 0 && cfg.al.tau < 1, "al.tau must be in (0, 1)");
  if (auto v = take("al.feasibility_tol"))
    cfg.al.feasibility_tol = to_double("al.feasibility_tol", *v);
  require(cfg.al.feasibility_tol > 0, "al.feasibility_tol must be > 0");

  if (auto v = take("elasticity.mu")) cfg.elasticity.mu_e = to_double("elasticity.mu", *v);
  require(cfg.elasticity.mu_e > 0, "elasticity.mu must be > 0");
  if (auto v = take("elasticity.lambda"))
    cfg.elasticity.lambda_e = to_double("elasticity.lambda", *v);
  require(cfg.elasticity.lambda_e >= 0, "elasticity.lambda must be >= 0");

  if (auto v = take("output.dir")) cfg.output_dir = *v;
  if (auto v = take("output.snapshot_interval"))
    cfg.snapshot_interval = to_int("output.snapshot_interval", *v);
  require(cfg.snapshot_interval >= 1, "output.snapshot_interval must be >= 1");
  if (auto v = take("run.threads")) cfg.threads = to_int("run.threads", *v);
  require(cfg.threads >= 1, "run.threads must be >= 1");

  if (!kv.empty()) throw std::runtime_error("config: unknown key '" + kv.begin()->first + "'");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  return parse_config(is);
}

}  // namespace shapeopt::cli
