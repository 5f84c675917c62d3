#pragma once

// Constructive ball extraction: a maximal disjoint family of radius-rho balls
// centred on the discrete superlevel set E = { delta >= (4 lambda)^{-1/2} },
// with rho = (theta d / (4 lambda))^{1/2}, plus an independent certificate
// checker and the lattice-restricted variant.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hardyspec/common.hpp"
#include "hardyspec/delta.hpp"
#include "hardyspec/geometry.hpp"
#include "hardyspec/measure.hpp"
#include "hardyspec/report.hpp"
#include "hardyspec/spectral.hpp"

namespace hardyspec {

/// Disjoint balls of radius c1 * lambda^{-1/2} whose Omega-overlap is
/// quantified per ball.  The discrete superlevel set behind the extraction is
/// kept so a packing can be re-certified without the original field.
struct BallPacking {
  int dim = 0;
  double radius = 0.0;  // rho = (theta d / (4 lambda))^{1/2}
  double lambda = 0.0;
  double theta = 0.0;
  double c1 = 0.0;  // rho = c1 * lambda^{-1/2}
  std::vector<Point> centers;
  std::vector<OverlapEstimate> overlaps;
  std::size_t M = 0;

  UniformGrid grid;                // grid the candidates lived on
  std::vector<int64_t> e_indices;  // linear indices of E on that grid

  // Balls whose measured overlap fell below (1 - theta) - 3 stderr at
  // extraction time.  Empty for a sound free-centre run; unused (the bound is
  // not asserted) for the lattice variant.
  std::vector<std::size_t> density_flags;

  bool lattice = false;
  double lattice_spacing = 0.0;
};

inline double packing_radius(int dim, double lambda, double theta) {
  return std::sqrt(theta * dim / (4.0 * lambda));
}

namespace detail {

struct PackCandidate {
  double delta = 0.0;
  Point p{0, 0, 0};
};

/// delta descending, lexicographic on coordinates for ties.
inline void sort_candidates(std::vector<PackCandidate>& cand) {
  std::sort(cand.begin(), cand.end(),
            [](const PackCandidate& a, const PackCandidate& b) {
              if (a.delta != b.delta) return a.delta > b.delta;
              return a.p < b.p;
            });
}

inline uint64_t cell_key(int64_t ix, int64_t iy, int64_t iz) {
  uint64_t h = static_cast<uint64_t>(ix) + 0x9E3779B97F4A7C15ULL;
  h = splitmix64(h) ^ (static_cast<uint64_t>(iy) + 0xC2B2AE3D27D4EB4FULL);
  h = splitmix64(h) ^ static_cast<uint64_t>(iz);
  return splitmix64(h);
}

/// Centers bucketed by cells of size 2 rho: any center closer than 2 rho to a
/// query point lies in one of the 3^d neighbouring cells.  Hash collisions
/// only add spurious distance checks, never false conflicts.
struct CenterIndex {
  int dim;
  double cell;
  const std::vector<Point>* centers;
  std::unordered_map<uint64_t, std::vector<uint32_t>> buckets;

  CenterIndex(int d, double rho, const std::vector<Point>* cs)
      : dim(d), cell(2 * rho), centers(cs) {}

  std::array<int64_t, 3> cell_of(const Point& p) const {
    std::array<int64_t, 3> c{0, 0, 0};
    for (int a = 0; a < dim; ++a)
      c[a] = static_cast<int64_t>(std::floor(p[a] / cell));
    return c;
  }

  void insert(uint32_t m) {
    const auto c = cell_of((*centers)[m]);
    buckets[cell_key(c[0], c[1], c[2])].push_back(m);
  }

  /// Nearest stored center to p (squared distance), optionally skipping one
  /// index and only looking within the 3^d cell neighbourhood (so the result
  /// is exact whenever it is <= (2 rho)^2, which is all callers need).
  std::pair<double, int64_t> nearest_sq(const Point& p, int64_t skip = -1) const {
    const auto c = cell_of(p);
    const int ylim = dim >= 2 ? 1 : 0, zlim = dim == 3 ? 1 : 0;
    double best = kInf;
    int64_t best_m = -1;
    for (int dz = -zlim; dz <= zlim; ++dz)
      for (int dy = -ylim; dy <= ylim; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto it = buckets.find(cell_key(c[0] + dx, c[1] + dy, c[2] + dz));
          if (it == buckets.end()) continue;
          for (uint32_t m : it->second) {
            if (static_cast<int64_t>(m) == skip) continue;
            const double d2 = dist_sq((*centers)[m], p, dim);
            if (d2 < best) {
              best = d2;
              best_m = m;
            }
          }
        }
    return {best, best_m};
  }
};

/// Sequential greedy pass: keep a candidate iff its ball is disjoint (center
/// distance >= 2 rho, with 1e-12 slack) from every ball kept so far.
inline std::vector<Point> greedy_disjoint(const std::vector<PackCandidate>& cand,
                                          int dim, double rho) {
  std::vector<Point> kept;
  CenterIndex index(dim, rho, &kept);
  const double minsep = 2 * rho - 1e-12;
  const double minsep2 = minsep * minsep;
  for (const auto& c : cand) {
    if (index.nearest_sq(c.p).first < minsep2) continue;
    kept.push_back(c.p);
    index.insert(static_cast<uint32_t>(kept.size() - 1));
  }
  return kept;
}

inline void check_extract_args(const char* who, const DeltaField& field,
                               double lambda, double theta, double rho) {
  if (!(lambda > 0))
    throw std::invalid_argument(std::string(who) + ": lambda must be positive");
  if (!(theta > 0) || !(theta <= 1))
    throw std::invalid_argument(std::string(who) + ": theta must lie in (0, 1]");
  if (field.grid.h > rho / 4 * (1 + 1e-12))
    throw std::invalid_argument(std::string(who) + ": resolution too coarse (h = " +
                                format_sig(field.grid.h, 6) + ", need h <= rho/4 = " +
                                format_sig(rho / 4, 6) + ")");
}

/// Measure each kept ball's overlap with Omega and flag any that land below
/// (1 - theta) - 3 stderr (impossible at true delta by the overlap lemma; MC
/// noise is tolerated at 3 sigma).
inline void measure_overlaps(BallPacking& pk, const Domain& dom,
                             int64_t samples, uint64_t seed, bool flag_low) {
  pk.overlaps.resize(pk.M);
  parallel_for(pk.M, [&](size_t m) {
    pk.overlaps[m] = ball_overlap(dom, pk.centers[m], pk.radius, samples,
                                  derive_seed(seed, "pack-overlap", m));
  });
  if (!flag_low) return;
  for (std::size_t m = 0; m < pk.M; ++m)
    if (pk.overlaps[m].value < (1 - pk.theta) - 3 * pk.overlaps[m].std_err)
      pk.density_flags.push_back(m);
}

}  // namespace detail

/// Greedy maximal disjoint family of radius-rho balls centred on E's grid
/// nodes, deepest (largest delta) first.  Every kept ball's overlap with Omega
/// is then measured by Monte Carlo.
inline BallPacking rozenblum_extract(const Domain& dom, const DeltaField& field,
                                     double lambda, double theta,
                                     int64_t overlap_samples = 20'000,
                                     uint64_t seed = 0xB0A11ULL) {
  const double rho = packing_radius(dom.dim, lambda, theta);
  detail::check_extract_args("rozenblum_extract", field, lambda, theta, rho);

  BallPacking pk;
  pk.dim = dom.dim;
  pk.radius = rho;
  pk.lambda = lambda;
  pk.theta = theta;
  pk.c1 = std::sqrt(theta * dom.dim) / 2.0;
  pk.grid = field.grid;

  const SuperlevelSet E = superlevel_E(field, lambda);
  pk.e_indices = E.indices;

  std::vector<detail::PackCandidate> cand(E.indices.size());
  parallel_for(E.indices.size(), [&](size_t i) {
    const int64_t idx = E.indices[i];
    cand[i] = {field.values[idx], field.grid.point(idx)};
  });
  detail::sort_candidates(cand);

  pk.centers = detail::greedy_disjoint(cand, dom.dim, rho);
  pk.M = pk.centers.size();
  detail::measure_overlaps(pk, dom, overlap_samples, seed, /*flag_low=*/true);
  return pk;
}

/// Variant with centers restricted to the lattice (c lambda^{-1/2}) Z^d.  The
/// spacing must satisfy c lambda^{-1/2} <= rho / sqrt(d) so every E node has a
/// lattice point within rho/2; admissible candidates are exactly those lattice
/// points.  c = 0 selects the largest admissible spacing, c = sqrt(theta)/2.
/// The (1 - theta) density bound is not asserted here (centres moved by up to
/// rho/2); the measured overlaps are reported instead.
inline BallPacking lattice_variant(const Domain& dom, const DeltaField& field,
                                   double lambda, double theta, double c = 0.0,
                                   int64_t overlap_samples = 20'000,
                                   uint64_t seed = 0xB0A11ULL) {
  const double rho = packing_radius(dom.dim, lambda, theta);
  detail::check_extract_args("lattice_variant", field, lambda, theta, rho);
  if (c == 0.0) c = std::sqrt(theta) / 2;
  if (!(c > 0)) throw std::invalid_argument("lattice_variant: c must be positive");
  const double spacing = c / std::sqrt(lambda);
  if (spacing > rho / std::sqrt(double(dom.dim)) * (1 + 1e-12))
    throw std::invalid_argument(
        "lattice_variant: spacing c lambda^{-1/2} = " + format_sig(spacing, 6) +
        " exceeds rho/sqrt(d) = " + format_sig(rho / std::sqrt(double(dom.dim)), 6));

  BallPacking pk;
  pk.dim = dom.dim;
  pk.radius = rho;
  pk.lambda = lambda;
  pk.theta = theta;
  pk.c1 = std::sqrt(theta * dom.dim) / 2.0;
  pk.grid = field.grid;
  pk.lattice = true;
  pk.lattice_spacing = spacing;

  const SuperlevelSet E = superlevel_E(field, lambda);
  pk.e_indices = E.indices;

  // Admissible centers: lattice points within rho/2 of some E node.  Each one
  // is keyed exactly (packed integer coordinates) and carries the largest
  // delta among the E nodes that recruited it, so the greedy order below
  // favours deep-interior balls like the free-centre pass.
  struct LatticePoint {
    std::array<int64_t, 3> k{0, 0, 0};
    double delta = 0.0;
  };
  constexpr int64_t kBias = int64_t(1) << 20;
  const auto pack_key = [&](const std::array<int64_t, 3>& k) {
    for (int a = 0; a < dom.dim; ++a)
      if (k[a] <= -kBias || k[a] >= kBias)
        throw std::runtime_error("lattice_variant: lattice index out of range");
    return (uint64_t(k[0] + kBias) << 42) | (uint64_t(k[1] + kBias) << 21) |
           uint64_t(k[2] + kBias);
  };
  const double reach = rho / 2 * (1 + 1e-12);
  std::unordered_map<uint64_t, LatticePoint> admissible;
  for (int64_t idx : E.indices) {
    const Point e = field.grid.point(idx);
    const double de = field.values[idx];
    std::array<int64_t, 3> klo{0, 0, 0}, khi{0, 0, 0};
    for (int a = 0; a < dom.dim; ++a) {
      klo[a] = static_cast<int64_t>(std::ceil((e[a] - reach) / spacing - 1e-12));
      khi[a] = static_cast<int64_t>(std::floor((e[a] + reach) / spacing + 1e-12));
    }
    std::array<int64_t, 3> k{0, 0, 0};
    for (k[2] = klo[2]; k[2] <= khi[2]; ++k[2])
      for (k[1] = klo[1]; k[1] <= khi[1]; ++k[1])
        for (k[0] = klo[0]; k[0] <= khi[0]; ++k[0]) {
          Point p{0, 0, 0};
          for (int a = 0; a < dom.dim; ++a) p[a] = spacing * k[a];
          if (dist(p, e, dom.dim) > reach) continue;
          auto [it, fresh] = admissible.try_emplace(pack_key(k), LatticePoint{k, de});
          if (!fresh && de > it->second.delta) it->second.delta = de;
        }
  }

  std::vector<detail::PackCandidate> cand;
  cand.reserve(admissible.size());
  for (const auto& [key, lp] : admissible) {
    (void)key;
    Point p{0, 0, 0};
    for (int a = 0; a < dom.dim; ++a) p[a] = spacing * lp.k[a];
    cand.push_back({lp.delta, p});
  }
  detail::sort_candidates(cand);

  pk.centers = detail::greedy_disjoint(cand, dom.dim, rho);
  pk.M = pk.centers.size();
  detail::measure_overlaps(pk, dom, overlap_samples, seed, /*flag_low=*/false);
  return pk;
}

/// Re-derives every packing invariant from scratch and evaluates the counting
/// chain lambda^{d/2} |E| <= d^{d/2} omega_d theta^{d/2} M (up to grid slack).
/// Violations are reported in the notes (naming the offending ball or pair)
/// rather than thrown, so a bad certificate is inspectable.  When a spectrum
/// is supplied, the implied constant c2 = M / N_<=(lambda) is recorded; it is
/// NaN (flagged) when the count is zero.
inline BoundReport verify_packing(const BallPacking& pk, const Domain& dom,
                                  const SpectralResult* res = nullptr) {
  if (pk.centers.size() != pk.M || pk.overlaps.size() != pk.M)
    throw std::invalid_argument("verify_packing: inconsistent ball counts");
  if (pk.dim != dom.dim)
    throw std::invalid_argument("verify_packing: packing/domain dimension mismatch");

  const int d = pk.dim;
  const double rho = pk.radius;
  const double minsep = 2 * rho - 1e-12;
  BoundReport rep;
  rep.name = "rozenblum";
  rep.params["lambda"] = pk.lambda;
  rep.params["theta"] = pk.theta;
  rep.params["rho"] = rho;
  rep.params["dim"] = d;
  rep.params["ball_count"] = static_cast<double>(pk.M);
  rep.params["e_points"] = static_cast<double>(pk.e_indices.size());
  rep.tolerances["pair_slack"] = 1e-12;
  rep.tolerances["mc_sigma"] = 3.0;
  bool ok = true;

  // Radius consistency: rho = c1 lambda^{-1/2} with c1 = (theta d / 4)^{1/2}.
  const double c1_expect = std::sqrt(pk.theta * d) / 2;
  if (!(std::fabs(pk.c1 - c1_expect) <= 1e-12 * c1_expect) ||
      !(std::fabs(rho - pk.c1 / std::sqrt(pk.lambda)) <= 1e-12 * rho)) {
    ok = false;
    rep.notes += "radius inconsistent with (theta d/(4 lambda))^{1/2}; ";
  }

  // Pairwise disjointness, parallel over balls via the cell index.
  detail::CenterIndex index(d, rho, &pk.centers);
  for (uint32_t m = 0; m < pk.M; ++m) index.insert(m);
  std::vector<double> nearest2(pk.M, kInf);
  parallel_for(pk.M, [&](size_t m) {
    nearest2[m] = index.nearest_sq(pk.centers[m], static_cast<int64_t>(m)).first;
  });
  double min_gap = kInf;
  for (std::size_t m = 0; m < pk.M; ++m) {
    const double dmn = std::sqrt(nearest2[m]);
    min_gap = std::min(min_gap, dmn - 2 * rho);
    if (dmn < minsep && ok) {
      ok = false;
      const auto hit = index.nearest_sq(pk.centers[m], static_cast<int64_t>(m));
      rep.notes += "balls " + std::to_string(m) + " and " + std::to_string(hit.second) +
                   " overlap (center distance " + format_sig(dmn, 6) + " < 2 rho); ";
    }
  }
  if (pk.M >= 2) rep.params["min_pair_gap"] = min_gap;

  // Density: every overlap >= (1 - theta) - 3 stderr.  The lattice variant
  // only reports the measured minimum (centres sit up to rho/2 off E).
  double min_overlap = pk.M ? kInf : kNaN;
  for (std::size_t m = 0; m < pk.M; ++m)
    min_overlap = std::min(min_overlap, pk.overlaps[m].value);
  if (pk.M) rep.params["min_overlap"] = min_overlap;
  if (!pk.lattice) {
    for (std::size_t m = 0; m < pk.M; ++m) {
      const auto& ov = pk.overlaps[m];
      if (ov.value < (1 - pk.theta) - 3 * ov.std_err) {
        ok = false;
        rep.notes += "ball " + std::to_string(m) + " density " + format_sig(ov.value, 6) +
                     " < (1 - theta) - 3 stderr; ";
        break;
      }
    }
  } else {
    if (pk.M) rep.params["effective_density"] = min_overlap;
    rep.notes += "lattice variant: density reported, not asserted; ";
  }

  // Lattice centres must be exact multiples of the spacing.
  if (pk.lattice) {
    if (!(pk.lattice_spacing > 0))
      throw std::invalid_argument("verify_packing: lattice packing without spacing");
    rep.params["lattice_spacing"] = pk.lattice_spacing;
    for (std::size_t m = 0; m < pk.M && ok; ++m)
      for (int a = 0; a < d; ++a) {
        const double q = pk.centers[m][a] / pk.lattice_spacing;
        if (std::fabs(q - std::round(q)) > 1e-12 * std::max(1.0, std::fabs(q))) {
          ok = false;
          rep.notes += "ball " + std::to_string(m) + " is off-lattice; ";
          break;
        }
      }
  }

  // Maximality and coverage over the candidate set.  Free centres: every E
  // node must conflict with some kept ball (kept nodes conflict with
  // themselves at distance 0), hence lie within 2 rho of a centre.  Lattice:
  // the same over the reconstructed admissible lattice points, and E nodes
  // are covered at 2.5 rho (rho/2 recruit shift + 2 rho maximality).
  std::vector<Point> probes;
  double cover_radius = 2 * rho;
  if (!pk.lattice) {
    probes.resize(pk.e_indices.size());
    for (std::size_t i = 0; i < pk.e_indices.size(); ++i)
      probes[i] = pk.grid.point(pk.e_indices[i]);
  } else {
    cover_radius = 2.5 * rho;
    const double s = pk.lattice_spacing, reach = rho / 2 * (1 + 1e-12);
    std::unordered_map<uint64_t, Point> adm;
    constexpr int64_t kBias = int64_t(1) << 20;
    for (int64_t idx : pk.e_indices) {
      const Point e = pk.grid.point(idx);
      std::array<int64_t, 3> klo{0, 0, 0}, khi{0, 0, 0};
      for (int a = 0; a < d; ++a) {
        klo[a] = static_cast<int64_t>(std::ceil((e[a] - reach) / s - 1e-12));
        khi[a] = static_cast<int64_t>(std::floor((e[a] + reach) / s + 1e-12));
      }
      std::array<int64_t, 3> k{0, 0, 0};
      for (k[2] = klo[2]; k[2] <= khi[2]; ++k[2])
        for (k[1] = klo[1]; k[1] <= khi[1]; ++k[1])
          for (k[0] = klo[0]; k[0] <= khi[0]; ++k[0]) {
            Point p{0, 0, 0};
            for (int a = 0; a < d; ++a) p[a] = s * k[a];
            if (dist(p, e, d) > reach) continue;
            const uint64_t key = (uint64_t(k[0] + kBias) << 42) |
                                 (uint64_t(k[1] + kBias) << 21) | uint64_t(k[2] + kBias);
            adm.emplace(key, p);
          }
    }
    probes.reserve(adm.size());
    for (const auto& [key, p] : adm) {
      (void)key;
      probes.push_back(p);
    }
  }
  std::vector<char> unmatched(probes.size(), 0);
  parallel_for(probes.size(), [&](size_t i) {
    if (index.nearest_sq(probes[i]).first >= minsep * minsep) unmatched[i] = 1;
  });
  for (std::size_t i = 0; i < probes.size(); ++i)
    if (unmatched[i]) {
      ok = false;
      rep.notes += "candidate at (" + format_sig(probes[i][0], 6) + ", " +
                   format_sig(probes[i][1], 6) +
                   ") is disjoint from every kept ball (maximality broken); ";
      break;
    }
  if (!pk.e_indices.empty()) {
    // Coverage at the stated radius, exact on the grid (maximality already
    // implies it for free centres; re-checked directly for both variants).
    std::vector<char> uncovered(pk.e_indices.size(), 0);
    const double cr2 = cover_radius * cover_radius * (1 + 1e-12);
    parallel_for(pk.e_indices.size(), [&](size_t i) {
      const Point p = pk.grid.point(pk.e_indices[i]);
      double best = index.nearest_sq(p).first;
      if (pk.lattice && best > cr2) {
        // 2.5 rho spans two cells of size 2 rho; widen the search once.
        best = kInf;
        for (std::size_t m = 0; m < pk.M; ++m)
          best = std::min(best, dist_sq(pk.centers[m], p, d));
      }
      if (best > cr2) uncovered[i] = 1;
    });
    for (std::size_t i = 0; i < pk.e_indices.size(); ++i)
      if (uncovered[i]) {
        ok = false;
        rep.notes += "E node " + std::to_string(i) + " not covered within " +
                     format_sig(cover_radius / rho, 3) + " rho; ";
        break;
      }
  }

  // Counting chain at this scale: lambda^{d/2} |E|_h <= C_cover * M with
  // C_cover = omega_d (cover_radius sqrt(lambda))^d theta^{d/2} ... expressed
  // in the proof's normalised form d^{d/2} omega_d theta^{d/2} M for the free
  // variant.  |E|_h is the grid measure; the slack accounts for a ball's grid
  // measure exceeding its volume by at most (1 + h sqrt(d)/(2 R))^d.
  const double h = pk.grid.h;
  const double e_measure = static_cast<double>(pk.e_indices.size()) * std::pow(h, d);
  const double lhs = std::pow(pk.lambda, d / 2.0) * e_measure;
  const double base_rhs =
      std::pow(double(d), d / 2.0) * unit_ball_volume(d) * std::pow(pk.theta, d / 2.0) *
      static_cast<double>(pk.M);
  const double rhs = base_rhs * std::pow(cover_radius / (2 * rho), d);
  const double slack = std::pow(1 + h * std::sqrt(double(d)) / (2 * cover_radius), d) - 1;
  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.params["grid_slack"] = slack;
  if (!(lhs <= rhs * (1 + slack) * (1 + 1e-12))) {
    ok = false;
    rep.notes += "counting chain violated: lambda^{d/2}|E| = " + format_sig(lhs, 6) +
                 " > " + format_sig(rhs * (1 + slack), 6) + "; ";
  }

  rep.bound_value = static_cast<double>(pk.M);
  if (res) {
    const int n_leq = count_leq(*res, pk.lambda);
    rep.params["count"] = n_leq;
    rep.reference_value = n_leq;
    if (n_leq > 0) {
      rep.ratio = static_cast<double>(pk.M) / n_leq;
    } else {
      rep.ratio = kNaN;
      rep.notes += "c2 undefined (N_<=(lambda) = 0); ";
    }
    rep.params["c2_implied"] = rep.ratio;
  } else {
    rep.notes += "no spectrum supplied; c2 not evaluated; ";
  }

  int64_t total_samples = 0;
  double max_err = 0.0;
  for (const auto& ov : pk.overlaps) {
    total_samples += ov.samples;
    max_err = std::max(max_err, ov.std_err);
  }
  rep.samples = total_samples;
  rep.std_err = max_err;
  rep.pass = ok;
  return rep;
}

/// Least-squares slope of log M against log lambda; the Weyl-scale growth
/// M ~ lambda^{d/2} shows up as a slope near d/2.
inline double growth_exponent(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2)
    throw std::invalid_argument("growth_exponent: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [lambda, count] : points) {
    if (!(lambda > 0) || !(count > 0))
      throw std::invalid_argument("growth_exponent: lambda and M must be positive");
    const double x = std::log(lambda), y = std::log(count);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  const double denom = n * sxx - sx * sx;
  if (!(std::fabs(denom) > 0))
    throw std::invalid_argument("growth_exponent: lambda values must differ");
  return (n * sxy - sx * sy) / denom;
}

/// One row per ball after a JSON summary line; c2 may be NaN (written null)
/// when no spectrum was available.
inline void write_packing_csv(const BallPacking& pk, std::ostream& os,
                              double c2_implied = kNaN) {
  nlohmann::json header;
  header["lambda"] = detail::jnum(pk.lambda);
  header["theta"] = detail::jnum(pk.theta);
  header["rho"] = detail::jnum(pk.radius);
  header["M"] = pk.M;
  header["c2_implied"] = detail::jnum(c2_implied);
  if (pk.lattice) header["lattice_spacing"] = detail::jnum(pk.lattice_spacing);
  os << "# " << header.dump() << "\n";
  os << "m";
  for (int a = 0; a < pk.dim; ++a) os << ",x" << (a + 1);
  os << ",overlap,stderr\n";
  char buf[64];
  for (std::size_t m = 0; m < pk.M; ++m) {
    os << m;
    for (int a = 0; a < pk.dim; ++a) {
      std::snprintf(buf, sizeof(buf), "%.10g", pk.centers[m][a]);
      os << "," << buf;
    }
    std::snprintf(buf, sizeof(buf), "%.6g", pk.overlaps[m].value);
    os << "," << buf;
    std::snprintf(buf, sizeof(buf), "%.6g", pk.overlaps[m].std_err);
    os << "," << buf << "\n";
  }
}

}  // namespace hardyspec
