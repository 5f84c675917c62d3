#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardyspec/common.hpp"
#include "hardyspec/geometry.hpp"

namespace hardyspec {

// ---------------------------------------------------------------------------
// Uniform Cartesian grid over a domain's bbox: x_{ijk} = origin + h*(i,j,k).
// Endpoint nodes land on the bbox faces; axes beyond `dim` collapse to one
// node. Linear index runs x fastest, then y, then z.

struct UniformGrid {
  int dim = 1;
  double h = 0.0;
  Point origin{0, 0, 0};
  std::array<int, 3> npts{1, 1, 1};

  int64_t total() const {
    return int64_t(npts[0]) * int64_t(npts[1]) * int64_t(npts[2]);
  }
  int64_t index(int i, int j, int k) const {
    return i + int64_t(npts[0]) * (j + int64_t(npts[1]) * k);
  }
  std::array<int, 3> unindex(int64_t idx) const {
    const int i = static_cast<int>(idx % npts[0]);
    idx /= npts[0];
    const int j = static_cast<int>(idx % npts[1]);
    const int k = static_cast<int>(idx / npts[1]);
    return {i, j, k};
  }
  Point point(int i, int j, int k) const {
    return {origin[0] + h * i, origin[1] + h * j, origin[2] + h * k};
  }
  Point point(int64_t idx) const {
    const auto ijk = unindex(idx);
    return point(ijk[0], ijk[1], ijk[2]);
  }
};

inline UniformGrid make_grid(const Domain& dom, double h) {
  if (!(h > 0)) throw std::invalid_argument("make_grid: h must be positive");
  UniformGrid g;
  g.dim = dom.dim;
  g.h = h;
  g.origin = dom.bbox.lo;
  for (int a = 0; a < dom.dim; ++a) {
    const double L = dom.bbox.hi[a] - dom.bbox.lo[a];
    g.npts[a] = static_cast<int>(std::floor(L / h + 1e-9)) + 1;
  }
  return g;
}

// ---------------------------------------------------------------------------

/// Default quadrature sizes tuned so the half-space identity delta(x) =
/// dist(x, boundary) holds to 1e-3 (and much better): 2 / 720 / 2048.
inline const SphereRule& default_rule(int dim) {
  static const SphereRule r1 = sphere_rule(1, 2);
  static const SphereRule r2 = sphere_rule(2, 720);
  static const SphereRule r3 = sphere_rule(3, 2048);
  switch (dim) {
    case 1: return r1;
    case 2: return r2;
    case 3: return r3;
  }
  throw std::invalid_argument("default_rule: dim must be 1, 2 or 3");
}

/// Mean-distance function
///   delta(x) = (d |S^{d-1}|^{-1} sum_i w_i d_{w_i}(x)^{-2})^{-1/2}.
/// Directions with d_w = +inf contribute nothing; if every direction escapes
/// (possible only when Omega contains a full line through x in all sampled
/// directions) the result is +inf and *unbounded is set.
inline double delta_at(const Domain& dom, const Point& x, const SphereRule& rule,
                       bool* unbounded = nullptr) {
  if (unbounded) *unbounded = false;
  if (!contains(dom, x)) throw std::invalid_argument("delta_at: x is not in the domain");
  const bool march = dom.ray_mode == Domain::RayMode::march;
  double sum = 0.0;
  const int n = rule.n();
  for (int i = 0; i < n; ++i) {
    const int p = rule.partner[i];
    if (p >= 0 && p < i) continue;  // handled with its partner
    const Point& w = rule.nodes[i];
    double d;
    if (p > i) {
      // antipodal pair: one cast per side covers both nodes
      Point neg{-w[0], -w[1], -w[2]};
      const double tp = march ? detail::exit_march(dom, x, w) : detail::exit_exact(dom, x, w);
      const double tm = march ? detail::exit_march(dom, x, neg) : detail::exit_exact(dom, x, neg);
      d = std::min(tp, tm);
      if (std::isfinite(d)) sum += (rule.weights[i] + rule.weights[p]) / (d * d);
    } else {
      Point neg{-w[0], -w[1], -w[2]};
      const double tp = march ? detail::exit_march(dom, x, w) : detail::exit_exact(dom, x, w);
      const double tm = march ? detail::exit_march(dom, x, neg) : detail::exit_exact(dom, x, neg);
      d = std::min(tp, tm);
      if (std::isfinite(d)) sum += rule.weights[i] / (d * d);
    }
  }
  if (sum == 0.0) {
    if (unbounded) *unbounded = true;
    return kInf;
  }
  return std::sqrt(rule.weight_sum() / (dom.dim * sum));
}

inline double delta_at(const Domain& dom, const Point& x) {
  return delta_at(dom, x, default_rule(dom.dim));
}

// ---------------------------------------------------------------------------

/// delta sampled on a uniform grid. `values` holds NaN at nodes outside
/// Omega; `interior` lists the linear indices of nodes inside, ascending.
struct DeltaField {
  Domain dom;
  UniformGrid grid;
  int rule_n = 0;
  double quad_error = 0.0;  // sup over sampled nodes of |delta_n - delta_{n/2}|, plus an fp floor
  std::vector<double> values;
  std::vector<int64_t> interior;

  double at(int64_t idx) const { return values[idx]; }
};

inline DeltaField delta_field(const Domain& dom, double h, const SphereRule& rule,
                              int64_t node_budget = 10'000'000) {
  if (!(h > 0)) throw std::invalid_argument("delta_field: h must be positive");
  const double side = dom.max_side();
  if (side > 0 && h > side / 2 + 1e-12)
    throw std::invalid_argument("delta_field: h must be at most half the largest bbox side");
  DeltaField f;
  f.dom = dom;
  f.grid = make_grid(dom, h);
  f.rule_n = rule.n();
  const int64_t total = f.grid.total();
  if (total > node_budget)
    throw std::runtime_error("delta_field: grid has " + std::to_string(total) +
                             " nodes, over the budget of " + std::to_string(node_budget));
  f.values.assign(total, kNaN);
  parallel_for(total, [&](int64_t idx) {
    const Point x = f.grid.point(idx);
    if (contains(dom, x)) f.values[idx] = delta_at(dom, x, rule);
  });
  for (int64_t idx = 0; idx < total; ++idx)
    if (!std::isnan(f.values[idx])) f.interior.push_back(idx);

  // quadrature-error estimate: re-evaluate a subsample with the n/2 rule
  double max_delta = 0.0;
  for (int64_t idx : f.interior)
    if (std::isfinite(f.values[idx])) max_delta = std::max(max_delta, f.values[idx]);
  double est = 0.0;
  if (!f.interior.empty()) {
    int half_n = rule.n() / 2;
    if (dom.dim == 2) half_n = std::max(half_n, 3);
    if (dom.dim == 3) half_n = std::max(half_n, 64);
    if (dom.dim > 1 && half_n < rule.n()) {
      const SphereRule half = sphere_rule(dom.dim, half_n);
      const int64_t stride = std::max<int64_t>(1, int64_t(f.interior.size()) / 2000);
      for (size_t s = 0; s < f.interior.size(); s += stride) {
        const int64_t idx = f.interior[s];
        const double coarse = delta_at(dom, f.grid.point(idx), half);
        if (std::isfinite(coarse) && std::isfinite(f.values[idx]))
          est = std::max(est, std::fabs(coarse - f.values[idx]));
      }
    }
  }
  f.quad_error = est + 1e-12 * max_delta;
  return f;
}

inline DeltaField delta_field(const Domain& dom, double h, int64_t node_budget = 10'000'000) {
  return delta_field(dom, h, default_rule(dom.dim), node_budget);
}

// ---------------------------------------------------------------------------

/// E = { grid nodes x in Omega : delta(x) >= (4 lambda)^{-1/2} }.
struct SuperlevelSet {
  double lambda = 0.0;
  double threshold = 0.0;
  std::vector<int64_t> indices;
};

inline SuperlevelSet superlevel_E(const DeltaField& field, double lambda) {
  if (!(lambda > 0)) throw std::invalid_argument("superlevel_E: lambda must be positive");
  SuperlevelSet s;
  s.lambda = lambda;
  s.threshold = std::isinf(lambda) ? 0.0 : 0.5 / std::sqrt(lambda);
  for (int64_t idx : field.interior)
    if (field.values[idx] >= s.threshold) s.indices.push_back(idx);
  return s;
}

// ---------------------------------------------------------------------------

/// One row per grid node: coordinates, delta to 6 significant digits ("nan"
/// outside), and an inside/outside flag.
inline void write_delta_csv(const DeltaField& field, std::ostream& os) {
  for (int a = 0; a < field.grid.dim; ++a) os << "x" << (a + 1) << ",";
  os << "delta,flag\n";
  const int64_t total = field.grid.total();
  char buf[64];
  for (int64_t idx = 0; idx < total; ++idx) {
    const Point x = field.grid.point(idx);
    for (int a = 0; a < field.grid.dim; ++a) {
      std::snprintf(buf, sizeof buf, "%.10g", x[a]);
      os << buf << ",";
    }
    const double v = field.values[idx];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    os << buf << "," << (std::isnan(v) ? "outside" : "inside") << "\n";
  }
}

inline void write_delta_csv(const DeltaField& field, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_delta_csv: cannot open " + path);
  write_delta_csv(field, os);
}

}  // namespace hardyspec
