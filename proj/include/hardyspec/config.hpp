#pragma once

// JSON configuration: domain descriptions (CSG trees) and per-task run
// parameters.  Validation failures throw std::invalid_argument naming the
// offending field, which the CLI maps to exit status 2.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hardyspec/common.hpp"
#include "hardyspec/geometry.hpp"

namespace hardyspec {

namespace detail {

[[noreturn]] inline void cfg_fail(const std::string& msg) {
  throw std::invalid_argument("config: " + msg);
}

inline double cfg_number(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number()) cfg_fail("field \"" + field + "\" must be a number");
  return j.get<double>();
}

inline Point cfg_point(const nlohmann::json& j, int dim, const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    cfg_fail("field \"" + field + "\" must be an array of " + std::to_string(dim) +
             " numbers");
  Point p{0, 0, 0};
  for (int a = 0; a < dim; ++a) p[a] = cfg_number(j[a], field);
  return p;
}

inline AABox cfg_box(const nlohmann::json& j, int dim, const std::string& field) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    cfg_fail("field \"" + field + "\" must list " + std::to_string(dim) +
             " [lo, hi] pairs");
  AABox b;
  for (int a = 0; a < dim; ++a) {
    const auto& side = j[a];
    if (!side.is_array() || side.size() != 2)
      cfg_fail("field \"" + field + "\" entry " + std::to_string(a) +
               " must be a [lo, hi] pair");
    b.lo[a] = cfg_number(side[0], field);
    b.hi[a] = cfg_number(side[1], field);
    if (!(b.hi[a] > b.lo[a]))
      cfg_fail("field \"" + field + "\" entry " + std::to_string(a) +
               " must have lo < hi");
  }
  return b;
}

inline CsgNode cfg_tree(const nlohmann::json& j, int dim) {
  if (!j.is_object()) cfg_fail("tree nodes must be JSON objects");

  if (j.contains("box")) return CsgNode::make_box(cfg_box(j.at("box"), dim, "box"));

  if (j.contains("ball")) {
    const auto& b = j.at("ball");
    if (!b.is_object() || !b.contains("center") || !b.contains("radius"))
      cfg_fail("field \"ball\" must be {\"center\": [...], \"radius\": r}");
    BallPrim prim;
    prim.center = cfg_point(b.at("center"), dim, "ball.center");
    prim.radius = cfg_number(b.at("radius"), "ball.radius");
    if (!(prim.radius > 0)) cfg_fail("field \"ball.radius\" must be positive");
    return CsgNode::make_ball(prim);
  }

  if (j.contains("halfspace")) {
    const auto& h = j.at("halfspace");
    if (!h.is_object() || !h.contains("normal") || !h.contains("offset"))
      cfg_fail("field \"halfspace\" must be {\"normal\": [...], \"offset\": c}");
    HalfSpacePrim prim;
    prim.normal = cfg_point(h.at("normal"), dim, "halfspace.normal");
    prim.offset = cfg_number(h.at("offset"), "halfspace.offset");
    if (!(norm(prim.normal, dim) > 0)) cfg_fail("field \"halfspace.normal\" must be nonzero");
    return CsgNode::make_halfspace(prim);
  }

  if (j.contains("polygon")) {
    if (dim != 2) cfg_fail("field \"polygon\" requires dim = 2");
    const auto& p = j.at("polygon");
    if (!p.is_object() || !p.contains("vertices"))
      cfg_fail("field \"polygon\" must be {\"vertices\": [[x, y], ...]}");
    const auto& vs = p.at("vertices");
    if (!vs.is_array() || vs.size() < 3)
      cfg_fail("field \"polygon.vertices\" needs at least 3 vertices");
    PolygonPrim prim;
    for (const auto& v : vs) prim.vertices.push_back(cfg_point(v, 2, "polygon.vertices"));
    return CsgNode::make_polygon(std::move(prim));
  }

  if (j.contains("op")) {
    const std::string op = j.at("op").is_string() ? j.at("op").get<std::string>() : "";
    std::vector<CsgNode> kids;
    if (j.contains("args")) {
      const auto& args = j.at("args");
      if (!args.is_array() || args.empty())
        cfg_fail("field \"args\" must be a nonempty array of tree nodes");
      for (const auto& a : args) kids.push_back(cfg_tree(a, dim));
    } else {
      if (j.contains("a")) kids.push_back(cfg_tree(j.at("a"), dim));
      if (j.contains("b")) kids.push_back(cfg_tree(j.at("b"), dim));
    }
    if (op == "union" || op == "intersection") {
      if (kids.size() < 2) cfg_fail("op \"" + op + "\" needs fields \"a\" and \"b\" (or \"args\")");
      return CsgNode::make_op(op == "union" ? CsgNode::Kind::unite : CsgNode::Kind::intersect,
                              std::move(kids));
    }
    if (op == "difference") {
      if (kids.size() != 2) cfg_fail("op \"difference\" needs exactly fields \"a\" and \"b\"");
      return CsgNode::make_op(CsgNode::Kind::difference, std::move(kids));
    }
    if (op == "complement") {
      if (kids.size() != 1) cfg_fail("op \"complement\" needs exactly field \"a\"");
      return CsgNode::make_op(CsgNode::Kind::complement, std::move(kids));
    }
    cfg_fail("unknown op \"" + op +
             "\" (expected union, intersection, difference or complement)");
  }

  cfg_fail("tree node must contain one of \"box\", \"ball\", \"halfspace\", "
           "\"polygon\" or \"op\"");
}

/// Canonical id of a domain description: FNV hash of the sorted-key dump.
inline std::string domain_hash(const nlohmann::json& spec) {
  const uint64_t h = hash_str(spec.dump());
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace detail

/// Build a Domain from its JSON description:
///   {"dim": 2, "tree": {...}, "bbox": optional, "ray_step": optional,
///    "ray_mode": optional "exact" | "march"}.
inline Domain parse_domain(const nlohmann::json& spec) {
  if (!spec.is_object()) detail::cfg_fail("domain spec must be a JSON object");
  if (!spec.contains("dim")) detail::cfg_fail("missing required field \"dim\"");
  if (!spec.at("dim").is_number_integer()) detail::cfg_fail("field \"dim\" must be an integer");
  const int dim = spec.at("dim").get<int>();
  if (dim < 1 || dim > 3) detail::cfg_fail("field \"dim\" must be 1, 2 or 3");
  if (!spec.contains("tree")) detail::cfg_fail("missing required field \"tree\"");

  for (const auto& [key, value] : spec.items()) {
    (void)value;
    if (key != "dim" && key != "tree" && key != "bbox" && key != "ray_step" &&
        key != "ray_mode")
      detail::cfg_fail("unknown field \"" + key + "\" in domain spec");
  }

  CsgNode tree = detail::cfg_tree(spec.at("tree"), dim);
  std::optional<AABox> bbox;
  if (spec.contains("bbox")) bbox = detail::cfg_box(spec.at("bbox"), dim, "bbox");
  std::optional<double> ray_step;
  if (spec.contains("ray_step")) {
    ray_step = detail::cfg_number(spec.at("ray_step"), "ray_step");
    if (!(*ray_step > 0)) detail::cfg_fail("field \"ray_step\" must be positive");
  }

  Domain dom = make_domain(dim, std::move(tree), bbox, ray_step);
  if (spec.contains("ray_mode")) {
    const std::string mode =
        spec.at("ray_mode").is_string() ? spec.at("ray_mode").get<std::string>() : "";
    if (mode == "exact")
      dom.ray_mode = Domain::RayMode::exact;
    else if (mode == "march")
      dom.ray_mode = Domain::RayMode::march;
    else
      detail::cfg_fail("field \"ray_mode\" must be \"exact\" or \"march\"");
  }
  dom.hash = detail::domain_hash(spec);
  return dom;
}

/// Everything one invocation needs: the domain, the task, and its numeric
/// parameters.  Zero means "use the task default" (h, k, rule_n, samples, mu,
/// gamma, constant, chain_factor); lambda and theta are required by the tasks
/// that consume them.
struct RunConfig {
  nlohmann::json domain_spec;
  std::string task;
  std::string out_dir = ".";
  double h = 0;
  int k = 0;
  int rule_n = 0;
  double lambda = 0;
  double theta = 0;
  double gamma = 0;
  double mu = 0;
  double constant = 0;
  double chain_factor = 0;
  std::vector<double> rho;
  int64_t samples = 0;
  uint64_t seed = 1;

  Domain domain() const { return parse_domain(domain_spec); }
};

/// Accepts either a bare domain object (has "dim" and "tree") or a wrapper:
///   {"domain": {...}, "h": ..., "lambda": ..., "rho": [...], "seed": ...}.
/// Values already set in `cfg` (from CLI flags) take precedence over the file.
inline RunConfig parse_run_config(const nlohmann::json& j, RunConfig cfg = {}) {
  if (!j.is_object()) detail::cfg_fail("top-level config must be a JSON object");

  if (j.contains("dim") || !j.contains("domain")) {
    cfg.domain_spec = j;
    (void)parse_domain(cfg.domain_spec);  // validate eagerly
    return cfg;
  }

  static const std::vector<std::string> known = {
      "domain", "task",     "h",  "k",     "rule_n",  "lambda", "theta",
      "gamma",  "mu",       "constant",    "chain_factor",      "rho",
      "samples", "seed",    "out"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const auto& name : known) ok = ok || key == name;
    if (!ok) detail::cfg_fail("unknown field \"" + key + "\"");
  }

  cfg.domain_spec = j.at("domain");
  (void)parse_domain(cfg.domain_spec);

  const auto num = [&](const char* field, double& slot, bool positive) {
    if (!j.contains(field) || slot != 0) return;
    slot = detail::cfg_number(j.at(field), field);
    if (positive && !(slot > 0)) detail::cfg_fail("field \"" + std::string(field) +
                                                  "\" must be positive");
  };
  if (cfg.task.empty() && j.contains("task")) {
    if (!j.at("task").is_string()) detail::cfg_fail("field \"task\" must be a string");
    cfg.task = j.at("task").get<std::string>();
  }
  num("h", cfg.h, true);
  num("lambda", cfg.lambda, true);
  num("theta", cfg.theta, true);
  num("gamma", cfg.gamma, true);
  num("mu", cfg.mu, true);
  num("constant", cfg.constant, true);
  num("chain_factor", cfg.chain_factor, true);
  if (j.contains("k") && cfg.k == 0) {
    if (!j.at("k").is_number_integer() || j.at("k").get<int>() < 1)
      detail::cfg_fail("field \"k\" must be a positive integer");
    cfg.k = j.at("k").get<int>();
  }
  if (j.contains("rule_n") && cfg.rule_n == 0) {
    if (!j.at("rule_n").is_number_integer() || j.at("rule_n").get<int>() < 1)
      detail::cfg_fail("field \"rule_n\" must be a positive integer");
    cfg.rule_n = j.at("rule_n").get<int>();
  }
  if (j.contains("samples") && cfg.samples == 0) {
    if (!j.at("samples").is_number_integer() || j.at("samples").get<int64_t>() < 1)
      detail::cfg_fail("field \"samples\" must be a positive integer");
    cfg.samples = j.at("samples").get<int64_t>();
  }
  if (j.contains("seed") && cfg.seed == 1) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      detail::cfg_fail("field \"seed\" must be an unsigned integer");
    cfg.seed = j.at("seed").get<uint64_t>();
  }
  if (j.contains("rho") && cfg.rho.empty()) {
    if (!j.at("rho").is_array()) detail::cfg_fail("field \"rho\" must be an array of numbers");
    for (const auto& r : j.at("rho")) {
      const double v = detail::cfg_number(r, "rho");
      if (!(v > 0)) detail::cfg_fail("field \"rho\" entries must be positive");
      cfg.rho.push_back(v);
    }
  }
  if (j.contains("out") && cfg.out_dir == ".") {
    if (!j.at("out").is_string()) detail::cfg_fail("field \"out\" must be a string");
    cfg.out_dir = j.at("out").get<std::string>();
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path, RunConfig cfg = {}) {
  std::ifstream in(path);
  if (!in) detail::cfg_fail("cannot open \"" + path + "\"");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    detail::cfg_fail("\"" + path + "\" is not valid JSON: " + e.what());
  }
  return parse_run_config(j, std::move(cfg));
}

}  // namespace hardyspec
