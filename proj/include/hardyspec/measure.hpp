#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardyspec/common.hpp"
#include "hardyspec/delta.hpp"
#include "hardyspec/geometry.hpp"
#include "hardyspec/report.hpp"

namespace hardyspec {

// ---------------------------------------------------------------------------

/// |Omega ∩ B_rho(x)| / |B_rho(x)| with its uncertainty.
struct OverlapEstimate {
  double value = 0.0;
  double std_err = 0.0;
  int64_t samples = 0;
  std::string method;  // "monte-carlo" or "grid"
  Point argmax{0, 0, 0};  // set by sup_overlap_ratio
  double slack = 0.0;     // Lipschitz slack d*grid_h/rho, set by sup_overlap_ratio
};

/// MC volume of Omega (sampled over the bbox).
struct VolumeEstimate {
  double value = 0.0;
  double std_err = 0.0;
  int64_t samples = 0;
};

namespace detail {

constexpr int kMcBatches = 8;  // fixed partition count: results never depend on threading

inline Point sample_in_ball(std::mt19937_64& eng, int dim, double rho) {
  std::uniform_real_distribution<double> u(-rho, rho);
  for (;;) {
    Point y{0, 0, 0};
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      y[a] = u(eng);
      s += y[a] * y[a];
    }
    if (s < rho * rho) return y;
  }
}

}  // namespace detail

/// Monte Carlo estimate of the overlap ratio by uniform sampling in the ball.
/// x may lie outside Omega; the ratio is still well defined.
inline OverlapEstimate ball_overlap(const Domain& dom, const Point& x, double rho,
                                    int64_t samples, uint64_t seed) {
  if (!(rho > 0)) throw std::invalid_argument("ball_overlap: rho must be positive");
  if (samples < 1000) throw std::invalid_argument("ball_overlap: need at least 1000 samples");
  int64_t hits = 0;
  for (int b = 0; b < detail::kMcBatches; ++b) {
    std::mt19937_64 eng(derive_seed(seed, "overlap", b));
    const int64_t count = samples / detail::kMcBatches +
                          (b < samples % detail::kMcBatches ? 1 : 0);
    for (int64_t s = 0; s < count; ++s) {
      Point y = detail::sample_in_ball(eng, dom.dim, rho);
      for (int a = 0; a < dom.dim; ++a) y[a] += x[a];
      if (contains(dom, y)) ++hits;
    }
  }
  OverlapEstimate e;
  e.method = "monte-carlo";
  e.samples = samples;
  const double p = double(hits) / double(samples);
  e.value = p;
  e.std_err = std::sqrt(p * (1.0 - p) / double(samples));
  return e;
}

/// Deterministic midpoint-lattice variant: m^d cell midpoints over the
/// bounding cube of the ball. std_err is an error bound (half the fraction of
/// lattice cells whose corners disagree with their midpoint about membership
/// in Omega), and is exactly 0 when the lattice fully resolves the overlap.
inline OverlapEstimate ball_overlap_grid(const Domain& dom, const Point& x, double rho, int m) {
  if (!(rho > 0)) throw std::invalid_argument("ball_overlap_grid: rho must be positive");
  if (m < 2) throw std::invalid_argument("ball_overlap_grid: need at least 2 cells per axis");
  const double cell = 2.0 * rho / m;
  int64_t in_ball = 0, in_both = 0, ambiguous = 0;
  const int mj = dom.dim >= 2 ? m : 1;
  const int mk = dom.dim >= 3 ? m : 1;
  for (int k = 0; k < mk; ++k)
    for (int j = 0; j < mj; ++j)
      for (int i = 0; i < m; ++i) {
        Point y{x[0] - rho + (i + 0.5) * cell,
                dom.dim >= 2 ? x[1] - rho + (j + 0.5) * cell : x[1],
                dom.dim >= 3 ? x[2] - rho + (k + 0.5) * cell : x[2]};
        if (dist_sq(y, x, dom.dim) >= rho * rho) continue;
        ++in_ball;
        const bool mid_in = contains(dom, y);
        if (mid_in) ++in_both;
        // corner agreement decides whether this cell is fully resolved
        bool amb = false;
        const int corners = 1 << dom.dim;
        for (int c = 0; c < corners && !amb; ++c) {
          Point q = y;
          for (int a = 0; a < dom.dim; ++a) q[a] += ((c >> a) & 1 ? 0.5 : -0.5) * cell;
          if (contains(dom, q) != mid_in) amb = true;
        }
        if (amb) ++ambiguous;
      }
  OverlapEstimate e;
  e.method = "grid";
  e.samples = in_ball;
  if (in_ball > 0) {
    e.value = double(in_both) / double(in_ball);
    e.std_err = 0.5 * double(ambiguous) / double(in_ball);
  }
  return e;
}

// ---------------------------------------------------------------------------

/// Ball-overlap lower bound: |Omega ∩ B_rho(x)| >= (1 - rho^2/(d delta^2)) |B_rho|.
/// lhs = measured ratio, rhs = clamped bound; pass when lhs >= rhs - 3 stderr.
inline BoundReport lemma1_check(const Domain& dom, const Point& x, double rho, double delta_x,
                                int64_t samples, uint64_t seed) {
  const OverlapEstimate e = ball_overlap(dom, x, rho, samples, seed);
  BoundReport r;
  r.name = "lemma1";
  r.lhs = e.value;
  const double ratio2 = (rho * rho) / (dom.dim * delta_x * delta_x);
  r.rhs = std::max(0.0, 1.0 - ratio2);
  r.std_err = e.std_err;
  r.samples = e.samples;
  r.seed = seed;
  r.bound_value = r.rhs;
  r.reference_value = r.lhs;
  r.set_ratio();
  r.params = {{"rho", rho}, {"delta_x", delta_x}, {"dim", double(dom.dim)}};
  r.tolerances = {{"mc_sigma", 3.0}};
  r.pass = r.lhs >= r.rhs - 3.0 * e.std_err;
  return r;
}

// ---------------------------------------------------------------------------

/// sup over x in Omega of the overlap ratio, via a bbox grid scan (coarse MC
/// everywhere, full MC at the leaders, one local half-step refinement around
/// the winner). The d*grid_h/rho Lipschitz slack rides along in `slack`.
inline OverlapEstimate sup_overlap_ratio(const Domain& dom, double rho, double grid_h,
                                         int64_t samples, uint64_t seed) {
  if (!(rho > 0)) throw std::invalid_argument("sup_overlap_ratio: rho must be positive");
  if (!(grid_h > 0) || grid_h > rho / 2 + 1e-12)
    throw std::invalid_argument("sup_overlap_ratio: grid_h must satisfy 0 < grid_h <= rho/2");

  // Thin or periodic domains can alias with a coarse scan lattice (every node
  // in a gap); halve the spacing until the lattice actually sees the domain.
  UniformGrid grid = make_grid(dom, grid_h);
  std::vector<int64_t> inside;
  for (int refine = 0;; ++refine) {
    inside.clear();
    for (int64_t idx = 0; idx < grid.total(); ++idx)
      if (contains(dom, grid.point(idx))) inside.push_back(idx);
    if (!inside.empty()) break;
    if (refine >= 20)
      throw std::runtime_error("sup_overlap_ratio: no grid point falls inside the domain");
    grid_h /= 2;
    grid = make_grid(dom, grid_h);
  }

  const int64_t coarse = std::clamp<int64_t>(samples / 10, 2000, samples);
  std::vector<double> coarse_val(inside.size());
  parallel_for(int64_t(inside.size()), [&](int64_t s) {
    coarse_val[s] = ball_overlap(dom, grid.point(inside[s]), rho, coarse,
                                 derive_seed(seed, "sup-coarse", inside[s]))
                        .value;
  });

  // leaders by coarse value (ties broken by grid order for determinism)
  std::vector<size_t> order(inside.size());
  for (size_t s = 0; s < order.size(); ++s) order[s] = s;
  const size_t keep = std::min<size_t>(10, order.size());
  std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                    [&](size_t a, size_t b) {
                      if (coarse_val[a] != coarse_val[b]) return coarse_val[a] > coarse_val[b];
                      return inside[a] < inside[b];
                    });

  OverlapEstimate best;
  best.value = -1.0;
  for (size_t t = 0; t < keep; ++t) {
    const int64_t idx = inside[order[t]];
    OverlapEstimate e =
        ball_overlap(dom, grid.point(idx), rho, samples, derive_seed(seed, "sup-full", idx));
    if (e.value > best.value) {
      best = e;
      best.argmax = grid.point(idx);
    }
  }

  // one refinement level: half-step neighbors of the winner
  const Point center = best.argmax;
  const int reach = dom.dim >= 3 ? 27 : (dom.dim == 2 ? 9 : 3);
  for (int code = 0; code < reach; ++code) {
    int c = code;
    Point y = center;
    bool is_center = true;
    for (int a = 0; a < dom.dim; ++a) {
      const int o = c % 3 - 1;
      c /= 3;
      if (o != 0) is_center = false;
      y[a] += o * grid_h / 2;
    }
    if (is_center || !contains(dom, y)) continue;
    OverlapEstimate e =
        ball_overlap(dom, y, rho, samples, derive_seed(seed, "sup-refine", code));
    if (e.value > best.value) {
      best = e;
      best.argmax = y;
    }
  }

  best.slack = dom.dim * grid_h / rho;
  return best;
}

// ---------------------------------------------------------------------------

/// rho_theta scan result. `value` is the first grid rho whose sup-ratio is
/// <= theta (+inf with found = false when none qualifies); since monotonicity
/// of the sup ratio in rho is not established, any later grid rho violating
/// theta is reported in `later_violations`.
struct RhoTheta {
  double theta = 0.0;
  double value = kInf;
  bool found = false;
  std::vector<double> sweep_rho;
  std::vector<OverlapEstimate> sweep;
  std::vector<double> later_violations;
};

inline RhoTheta rho_theta(const Domain& dom, double theta, const std::vector<double>& rho_grid,
                          int64_t samples, uint64_t seed,
                          int64_t refine_samples = 1'000'000) {
  if (!(theta > 0.0) || !(theta < 1.0))
    throw std::invalid_argument("rho_theta: theta must lie strictly between 0 and 1");
  if (rho_grid.empty()) throw std::invalid_argument("rho_theta: rho_grid must be nonempty");
  for (size_t i = 0; i < rho_grid.size(); ++i) {
    if (!(rho_grid[i] > 0)) throw std::invalid_argument("rho_theta: rho values must be positive");
    if (i > 0 && rho_grid[i] < rho_grid[i - 1])
      throw std::invalid_argument("rho_theta: rho_grid must be sorted ascending");
  }
  RhoTheta out;
  out.theta = theta;
  out.sweep_rho = rho_grid;
  for (size_t i = 0; i < rho_grid.size(); ++i) {
    const double rho = rho_grid[i];
    OverlapEstimate e =
        sup_overlap_ratio(dom, rho, rho / 4, samples, derive_seed(seed, "rho-theta", i));
    // near the pass/fail margin, re-measure with the refinement budget
    if (std::fabs(e.value - theta) < 5 * e.std_err && refine_samples > samples)
      e = sup_overlap_ratio(dom, rho, rho / 4, refine_samples,
                            derive_seed(seed, "rho-theta-fine", i));
    out.sweep.push_back(e);
    if (e.value <= theta) {
      if (!out.found) {
        out.found = true;
        out.value = rho;
      }
    } else if (out.found) {
      out.later_violations.push_back(rho);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

inline VolumeEstimate volume_mc(const Domain& dom, int64_t samples, uint64_t seed) {
  if (samples < 1000) throw std::invalid_argument("volume_mc: need at least 1000 samples");
  double vbox = 1.0;
  for (int a = 0; a < dom.dim; ++a) vbox *= dom.bbox.hi[a] - dom.bbox.lo[a];
  VolumeEstimate v;
  v.samples = samples;
  if (vbox <= 0.0) return v;
  int64_t hits = 0;
  for (int b = 0; b < detail::kMcBatches; ++b) {
    std::mt19937_64 eng(derive_seed(seed, "volume", b));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int64_t count = samples / detail::kMcBatches +
                          (b < samples % detail::kMcBatches ? 1 : 0);
    for (int64_t s = 0; s < count; ++s) {
      Point y{0, 0, 0};
      for (int a = 0; a < dom.dim; ++a)
        y[a] = dom.bbox.lo[a] + (dom.bbox.hi[a] - dom.bbox.lo[a]) * u(eng);
      if (contains(dom, y)) ++hits;
    }
  }
  const double p = double(hits) / double(samples);
  v.value = p * vbox;
  v.std_err = std::sqrt(p * (1.0 - p) / double(samples)) * vbox;
  return v;
}

}  // namespace hardyspec
