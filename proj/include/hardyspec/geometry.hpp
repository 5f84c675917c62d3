#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hardyspec/common.hpp"

namespace hardyspec {

// ---------------------------------------------------------------------------
// CSG primitives. All primitives denote OPEN sets; their topological boundary
// is outside (open-set convention). `complement` removes the closure, so
// difference(A, B) = A minus the closed set B.

struct AABox {
  Point lo{0, 0, 0};
  Point hi{0, 0, 0};
};

struct BallPrim {
  Point center{0, 0, 0};
  double radius = 0.0;
};

struct HalfSpacePrim {
  Point normal{0, 0, 0};  // set is { x : normal . x > offset }
  double offset = 0.0;
};

struct PolygonPrim {
  std::vector<Point> vertices;  // convex, CCW, d = 2 only
};

struct CsgNode {
  enum class Kind { box, ball, halfspace, polygon, unite, intersect, complement, difference };
  Kind kind = Kind::box;
  AABox box;
  BallPrim ball;
  HalfSpacePrim half;
  PolygonPrim poly;
  std::vector<CsgNode> kids;

  static CsgNode make_box(const AABox& b) { CsgNode n; n.kind = Kind::box; n.box = b; return n; }
  static CsgNode make_ball(const BallPrim& b) { CsgNode n; n.kind = Kind::ball; n.ball = b; return n; }
  static CsgNode make_halfspace(const HalfSpacePrim& h) { CsgNode n; n.kind = Kind::halfspace; n.half = h; return n; }
  static CsgNode make_polygon(PolygonPrim p) { CsgNode n; n.kind = Kind::polygon; n.poly = std::move(p); return n; }
  static CsgNode make_op(Kind k, std::vector<CsgNode> kids) {
    CsgNode n; n.kind = k; n.kids = std::move(kids); return n;
  }

  bool is_primitive() const {
    return kind == Kind::box || kind == Kind::ball || kind == Kind::halfspace || kind == Kind::polygon;
  }
};

namespace detail {

inline bool node_contains_open(const CsgNode& n, const Point& x, int dim);
inline bool node_contains_closed(const CsgNode& n, const Point& x, int dim);

inline bool node_contains_open(const CsgNode& n, const Point& x, int dim) {
  using K = CsgNode::Kind;
  switch (n.kind) {
    case K::box:
      for (int a = 0; a < dim; ++a)
        if (!(x[a] > n.box.lo[a] && x[a] < n.box.hi[a])) return false;
      return true;
    case K::ball:
      return dist_sq(x, n.ball.center, dim) < n.ball.radius * n.ball.radius;
    case K::halfspace:
      return dot(n.half.normal, x, dim) > n.half.offset;
    case K::polygon: {
      // strict interior of a convex CCW polygon
      const auto& v = n.poly.vertices;
      const size_t m = v.size();
      for (size_t i = 0; i < m; ++i) {
        const Point& p = v[i];
        const Point& q = v[(i + 1) % m];
        const double cross = (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
        if (!(cross > 0.0)) return false;
      }
      return true;
    }
    case K::unite:
      for (const auto& k : n.kids)
        if (node_contains_open(k, x, dim)) return true;
      return false;
    case K::intersect:
      for (const auto& k : n.kids)
        if (!node_contains_open(k, x, dim)) return false;
      return true;
    case K::complement:
      return !node_contains_closed(n.kids[0], x, dim);
    case K::difference:
      return node_contains_open(n.kids[0], x, dim) && !node_contains_closed(n.kids[1], x, dim);
  }
  return false;
}

inline bool node_contains_closed(const CsgNode& n, const Point& x, int dim) {
  using K = CsgNode::Kind;
  switch (n.kind) {
    case K::box:
      for (int a = 0; a < dim; ++a)
        if (!(x[a] >= n.box.lo[a] && x[a] <= n.box.hi[a])) return false;
      return true;
    case K::ball:
      return dist_sq(x, n.ball.center, dim) <= n.ball.radius * n.ball.radius;
    case K::halfspace:
      return dot(n.half.normal, x, dim) >= n.half.offset;
    case K::polygon: {
      const auto& v = n.poly.vertices;
      const size_t m = v.size();
      for (size_t i = 0; i < m; ++i) {
        const Point& p = v[i];
        const Point& q = v[(i + 1) % m];
        const double cross = (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
        if (cross < 0.0) return false;
      }
      return true;
    }
    case K::unite:
      for (const auto& k : n.kids)
        if (node_contains_closed(k, x, dim)) return true;
      return false;
    case K::intersect:
      for (const auto& k : n.kids)
        if (!node_contains_closed(k, x, dim)) return false;
      return true;
    case K::complement:
      return !node_contains_open(n.kids[0], x, dim);
    case K::difference:
      return node_contains_closed(n.kids[0], x, dim) && !node_contains_open(n.kids[1], x, dim);
  }
  return false;
}

// --- Exact line intersections -----------------------------------------------
// Parameter intervals (a, b) along the line t -> x + t*w on which the node's
// open set is entered. Intervals are kept sorted and merged when their
// closures touch, so `complement` can take the closed complement directly.

struct RayIntervals {
  static constexpr int cap = 64;
  int n = 0;
  double a[cap];
  double b[cap];

  void clear() { n = 0; }
  void push(double lo, double hi) {
    if (!(hi > lo)) return;  // drop empty and degenerate
    if (n == cap) throw std::runtime_error("RayIntervals: CSG tree too complex for ray buffer");
    a[n] = lo;
    b[n] = hi;
    ++n;
  }
};

inline void sort_merge(RayIntervals& r) {
  if (r.n <= 1) return;
  int idx[RayIntervals::cap];
  for (int i = 0; i < r.n; ++i) idx[i] = i;
  std::sort(idx, idx + r.n, [&](int i, int j) { return r.a[i] < r.a[j]; });
  RayIntervals out;
  double ca = r.a[idx[0]], cb = r.b[idx[0]];
  for (int k = 1; k < r.n; ++k) {
    const double ia = r.a[idx[k]], ib = r.b[idx[k]];
    if (ia <= cb) {  // closures touch or overlap
      cb = std::max(cb, ib);
    } else {
      out.push(ca, cb);
      ca = ia;
      cb = ib;
    }
  }
  out.push(ca, cb);
  r = out;
}

inline void intersect_intervals(const RayIntervals& p, const RayIntervals& q, RayIntervals& out) {
  out.clear();
  int i = 0, j = 0;
  while (i < p.n && j < q.n) {
    const double lo = std::max(p.a[i], q.a[j]);
    const double hi = std::min(p.b[i], q.b[j]);
    if (hi > lo) out.push(lo, hi);
    if (p.b[i] < q.b[j]) ++i; else ++j;
  }
}

inline void complement_intervals(const RayIntervals& p, RayIntervals& out) {
  // closed complement of the closure of p (p is sorted+merged)
  out.clear();
  double cursor = -kInf;
  for (int i = 0; i < p.n; ++i) {
    if (p.a[i] > cursor) out.push(cursor, p.a[i]);
    cursor = std::max(cursor, p.b[i]);
  }
  if (cursor < kInf) out.push(cursor, kInf);
}

inline void ray_intervals(const CsgNode& n, const Point& x, const Point& w, int dim, RayIntervals& out) {
  using K = CsgNode::Kind;
  out.clear();
  switch (n.kind) {
    case K::box: {
      double lo = -kInf, hi = kInf;
      for (int a = 0; a < dim; ++a) {
        if (w[a] == 0.0) {
          if (!(x[a] > n.box.lo[a] && x[a] < n.box.hi[a])) return;  // misses slab
        } else {
          double t0 = (n.box.lo[a] - x[a]) / w[a];
          double t1 = (n.box.hi[a] - x[a]) / w[a];
          if (t0 > t1) std::swap(t0, t1);
          lo = std::max(lo, t0);
          hi = std::min(hi, t1);
          if (hi <= lo) return;
        }
      }
      out.push(lo, hi);
      return;
    }
    case K::ball: {
      // |x + t w - c|^2 < r^2 with |w| = 1
      Point d;
      for (int a = 0; a < dim; ++a) d[a] = x[a] - n.ball.center[a];
      const double ww = dot(w, w, dim);
      const double p = dot(d, w, dim);
      const double q = dot(d, d, dim) - n.ball.radius * n.ball.radius;
      const double disc = p * p - ww * q;
      if (disc <= 0.0) return;
      const double s = std::sqrt(disc);
      out.push((-p - s) / ww, (-p + s) / ww);
      return;
    }
    case K::halfspace: {
      const double nw = dot(n.half.normal, w, dim);
      const double nx = dot(n.half.normal, x, dim) - n.half.offset;
      if (nw == 0.0) {
        if (nx > 0.0) out.push(-kInf, kInf);
        return;
      }
      const double t = -nx / nw;
      if (nw > 0.0) out.push(t, kInf); else out.push(-kInf, t);
      return;
    }
    case K::polygon: {
      // convex CCW polygon = intersection of edge half-planes
      double lo = -kInf, hi = kInf;
      const auto& v = n.poly.vertices;
      const size_t m = v.size();
      for (size_t i = 0; i < m; ++i) {
        const Point& p = v[i];
        const Point& q = v[(i + 1) % m];
        const double ex = q[0] - p[0], ey = q[1] - p[1];
        // inside: ex*(y - py) - ey*(x - px) > 0
        const double fw = ex * w[1] - ey * w[0];
        const double fx = ex * (x[1] - p[1]) - ey * (x[0] - p[0]);
        if (fw == 0.0) {
          if (!(fx > 0.0)) return;
        } else {
          const double t = -fx / fw;
          if (fw > 0.0) lo = std::max(lo, t); else hi = std::min(hi, t);
          if (hi <= lo) return;
        }
      }
      out.push(lo, hi);
      return;
    }
    case K::unite: {
      RayIntervals acc, tmp;
      for (const auto& k : n.kids) {
        ray_intervals(k, x, w, dim, tmp);
        for (int i = 0; i < tmp.n; ++i) acc.push(tmp.a[i], tmp.b[i]);
      }
      sort_merge(acc);
      out = acc;
      return;
    }
    case K::intersect: {
      RayIntervals acc, tmp, res;
      ray_intervals(n.kids[0], x, w, dim, acc);
      for (size_t c = 1; c < n.kids.size() && acc.n > 0; ++c) {
        ray_intervals(n.kids[c], x, w, dim, tmp);
        intersect_intervals(acc, tmp, res);
        acc = res;
      }
      out = acc;
      return;
    }
    case K::complement: {
      RayIntervals inner;
      ray_intervals(n.kids[0], x, w, dim, inner);
      complement_intervals(inner, out);
      return;
    }
    case K::difference: {
      RayIntervals ia, ib, nb;
      ray_intervals(n.kids[0], x, w, dim, ia);
      ray_intervals(n.kids[1], x, w, dim, ib);
      complement_intervals(ib, nb);
      intersect_intervals(ia, nb, out);
      return;
    }
  }
}

inline AABox merge_boxes(const AABox& a, const AABox& b, int dim) {
  AABox r;
  for (int i = 0; i < dim; ++i) {
    r.lo[i] = std::min(a.lo[i], b.lo[i]);
    r.hi[i] = std::max(a.hi[i], b.hi[i]);
  }
  return r;
}

inline std::optional<AABox> node_bbox(const CsgNode& n, int dim) {
  using K = CsgNode::Kind;
  switch (n.kind) {
    case K::box: return n.box;
    case K::ball: {
      AABox r;
      for (int a = 0; a < dim; ++a) {
        r.lo[a] = n.ball.center[a] - n.ball.radius;
        r.hi[a] = n.ball.center[a] + n.ball.radius;
      }
      return r;
    }
    case K::halfspace: return std::nullopt;
    case K::polygon: {
      AABox r;
      r.lo = {kInf, kInf, 0};
      r.hi = {-kInf, -kInf, 0};
      for (const auto& v : n.poly.vertices) {
        for (int a = 0; a < 2; ++a) {
          r.lo[a] = std::min(r.lo[a], v[a]);
          r.hi[a] = std::max(r.hi[a], v[a]);
        }
      }
      return r;
    }
    case K::unite: {
      std::optional<AABox> acc;
      for (const auto& k : n.kids) {
        auto b = node_bbox(k, dim);
        if (!b) return std::nullopt;
        acc = acc ? merge_boxes(*acc, *b, dim) : *b;
      }
      return acc;
    }
    case K::intersect: {
      // any bounded factor bounds the intersection
      std::optional<AABox> acc;
      for (const auto& k : n.kids) {
        auto b = node_bbox(k, dim);
        if (!b) continue;
        if (!acc) { acc = *b; continue; }
        AABox r;
        for (int a = 0; a < dim; ++a) {
          r.lo[a] = std::max(acc->lo[a], b->lo[a]);
          r.hi[a] = std::min(acc->hi[a], b->hi[a]);
          if (r.hi[a] < r.lo[a]) r.hi[a] = r.lo[a];
        }
        acc = r;
      }
      return acc;
    }
    case K::complement: return std::nullopt;
    case K::difference: return node_bbox(n.kids[0], dim);
  }
  return std::nullopt;
}

inline bool node_maybe_unbounded(const CsgNode& n) {
  using K = CsgNode::Kind;
  switch (n.kind) {
    case K::box: case K::ball: case K::polygon: return false;
    case K::halfspace: case K::complement: return true;
    case K::unite: {
      for (const auto& k : n.kids)
        if (node_maybe_unbounded(k)) return true;
      return false;
    }
    case K::intersect: {
      for (const auto& k : n.kids)
        if (!node_maybe_unbounded(k)) return false;
      return true;
    }
    case K::difference: return node_maybe_unbounded(n.kids[0]);
  }
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------

/// An open set Omega in R^d, d in {1,2,3}, described by a CSG tree.
struct Domain {
  int dim = 1;
  CsgNode tree;
  AABox bbox;
  double ray_step = 0.0;  // marching step, default diam/1024
  bool maybe_unbounded = false;
  std::string hash;  // canonical id of the description, set by the loader

  enum class RayMode { exact, march };
  RayMode ray_mode = RayMode::exact;

  double diam() const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double L = bbox.hi[a] - bbox.lo[a];
      s += L * L;
    }
    return std::sqrt(s);
  }
  double max_side() const {
    double m = 0.0;
    for (int a = 0; a < dim; ++a) m = std::max(m, bbox.hi[a] - bbox.lo[a]);
    return m;
  }
};

inline Domain make_domain(int dim, CsgNode tree,
                          std::optional<AABox> bbox = std::nullopt,
                          std::optional<double> ray_step = std::nullopt) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("Domain: dim must be 1, 2 or 3");
  Domain d;
  d.dim = dim;
  d.tree = std::move(tree);
  if (bbox) {
    d.bbox = *bbox;
    for (int a = 0; a < dim; ++a)
      if (!(d.bbox.hi[a] > d.bbox.lo[a]))
        throw std::invalid_argument("Domain: bbox must have positive extent in every axis");
  } else {
    auto b = detail::node_bbox(d.tree, dim);
    if (!b) throw std::invalid_argument("Domain: unbounded tree requires an explicit bbox");
    d.bbox = *b;  // may collapse to zero extent for a provably empty tree
  }
  d.maybe_unbounded = detail::node_maybe_unbounded(d.tree);
  d.ray_step = ray_step ? *ray_step : (d.diam() > 0 ? d.diam() : 1.0) / 1024.0;
  if (!(d.ray_step > 0)) throw std::invalid_argument("Domain: ray_step must be positive");
  return d;
}

inline bool contains(const Domain& dom, const Point& x) {
  return detail::node_contains_open(dom.tree, x, dom.dim);
}

/// Checked variant: rejects coordinate vectors of the wrong length.
inline bool contains(const Domain& dom, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != dom.dim)
    throw std::invalid_argument("contains: point has " + std::to_string(x.size()) +
                                " coordinates, domain dim is " + std::to_string(dom.dim));
  Point p{0, 0, 0};
  for (int a = 0; a < dom.dim; ++a) p[a] = x[a];
  return contains(dom, p);
}

namespace detail {

inline double exit_exact(const Domain& dom, const Point& x, const Point& w) {
  RayIntervals iv;
  ray_intervals(dom.tree, x, w, dom.dim, iv);
  // locate the interval containing t = 0 (x is inside, so one should)
  for (int i = 0; i < iv.n; ++i)
    if (iv.a[i] <= 0.0 && 0.0 < iv.b[i]) return iv.b[i];
  // floating-point edge: fall back to the nearest positive endpoint
  double best = kInf;
  for (int i = 0; i < iv.n; ++i) {
    if (iv.a[i] > 0.0) best = std::min(best, iv.a[i]);
    if (iv.b[i] > 0.0) best = std::min(best, iv.b[i]);
  }
  return best;
}

inline double exit_march(const Domain& dom, const Point& x, const Point& w) {
  const double diam = dom.diam();
  const double step = dom.ray_step;
  // distance at which the ray leaves the bbox
  double t_bb = kInf;
  for (int a = 0; a < dom.dim; ++a) {
    if (w[a] > 0.0) t_bb = std::min(t_bb, (dom.bbox.hi[a] - x[a]) / w[a]);
    else if (w[a] < 0.0) t_bb = std::min(t_bb, (dom.bbox.lo[a] - x[a]) / w[a]);
  }
  if (!(t_bb > 0)) t_bb = 0.0;
  const double t_max = t_bb + 16.0 * diam;

  double t_in = 0.0;
  double t = step;
  bool found = false;
  while (t <= t_max) {
    Point p;
    for (int a = 0; a < dom.dim; ++a) p[a] = x[a] + t * w[a];
    if (!node_contains_open(dom.tree, p, dom.dim)) { found = true; break; }
    t_in = t;
    t += step;
  }
  if (!found) return kInf;
  // bisect membership on [t_in, t]
  double lo = t_in, hi = t;
  const double tol = 1e-10 * diam;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    Point p;
    for (int a = 0; a < dom.dim; ++a) p[a] = x[a] + mid * w[a];
    if (node_contains_open(dom.tree, p, dom.dim)) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// tau(x, w) = inf{ t > 0 : x + t w not in Omega }. Requires x in Omega.
/// Returns +inf when the forward ray never leaves the set.
inline double exit_distance_one_sided(const Domain& dom, const Point& x, const Point& w) {
  if (!contains(dom, x))
    throw std::invalid_argument("exit_distance_one_sided: x is not in the domain");
  if (dom.ray_mode == Domain::RayMode::march) return detail::exit_march(dom, x, w);
  return detail::exit_exact(dom, x, w);
}

/// d_w(x) = inf{ |t| : x + t w not in Omega } = min(tau(x, w), tau(x, -w)).
/// +inf iff the whole line through x in direction w stays inside.
inline double d_omega(const Domain& dom, const Point& x, const Point& w) {
  if (!contains(dom, x))
    throw std::invalid_argument("d_omega: x is not in the domain");
  Point neg;
  for (int a = 0; a < dom.dim; ++a) neg[a] = -w[a];
  for (int a = dom.dim; a < 3; ++a) neg[a] = 0.0;
  if (dom.ray_mode == Domain::RayMode::march)
    return std::min(detail::exit_march(dom, x, w), detail::exit_march(dom, x, neg));
  return std::min(detail::exit_exact(dom, x, w), detail::exit_exact(dom, x, neg));
}

// ---------------------------------------------------------------------------
// Quadrature on the unit sphere S^{d-1}.

/// Nodes and positive weights summing to |S^{d-1}|. partner[i] indexes the
/// node at -nodes[i], or -1 when the rule has no antipodal pairing (odd n,
/// d = 2). Paired rules let callers evaluate both ray directions per cast.
struct SphereRule {
  int dim = 1;
  std::vector<Point> nodes;
  std::vector<double> weights;
  std::vector<int> partner;

  int n() const { return static_cast<int>(nodes.size()); }
  double weight_sum() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
  }
  /// Quadrature of w -> (w_d)^2; exact value is |S^{d-1}| / d.
  double last_coord_sq_integral() const {
    double s = 0.0;
    for (int i = 0; i < n(); ++i) {
      const double z = nodes[i][dim - 1];
      s += weights[i] * z * z;
    }
    return s;
  }
};

/// d = 1: the two points +-1. d = 2: n equispaced angles. d = 3: n
/// Fibonacci-spiral points (n rounded up to even; the spiral covers one
/// hemisphere and is mirrored so every node has an antipode).
inline SphereRule sphere_rule(int dim, int n) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("sphere_rule: dim must be 1, 2 or 3");
  if (n < 2) throw std::invalid_argument("sphere_rule: n must be >= 2");
  SphereRule r;
  r.dim = dim;
  if (dim == 1) {
    r.nodes = {Point{1, 0, 0}, Point{-1, 0, 0}};
    r.weights = {1.0, 1.0};
    r.partner = {1, 0};
    return r;
  }
  if (dim == 2) {
    if (n < 3)
      throw std::invalid_argument("sphere_rule: d = 2 needs n >= 3 to integrate w_d^2 exactly");
    r.nodes.resize(n);
    r.weights.assign(n, 2.0 * kPi / n);
    r.partner.assign(n, -1);
    if (n % 2 == 0) {
      // build the second half by exact negation so partners match bitwise
      const int h = n / 2;
      for (int j = 0; j < h; ++j) {
        const double th = 2.0 * kPi * j / n;
        r.nodes[j] = {std::cos(th), std::sin(th), 0.0};
        r.nodes[h + j] = {-r.nodes[j][0], -r.nodes[j][1], 0.0};
        r.partner[j] = h + j;
        r.partner[h + j] = j;
      }
    } else {
      for (int j = 0; j < n; ++j) {
        const double th = 2.0 * kPi * j / n;
        r.nodes[j] = {std::cos(th), std::sin(th), 0.0};
      }
    }
    return r;
  }
  // dim == 3
  if (n < 64)
    throw std::invalid_argument("sphere_rule: d = 3 needs n >= 64 to pass the w_d^2 check");
  if (n % 2 != 0) ++n;
  const int m = n / 2;
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  r.nodes.resize(n);
  r.weights.assign(n, 4.0 * kPi / n);
  r.partner.resize(n);
  for (int i = 0; i < m; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / n;  // upper hemisphere, z > 0
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * kPi * std::fmod(i * golden, 1.0);
    r.nodes[i] = {rho * std::cos(phi), rho * std::sin(phi), z};
    r.nodes[m + i] = {-r.nodes[i][0], -r.nodes[i][1], -z};
    r.partner[i] = m + i;
    r.partner[m + i] = i;
  }
  return r;
}

}  // namespace hardyspec
