#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hardyspec {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPi = 3.14159265358979323846;

// Points live in R^3 with trailing coordinates zero for dim < 3.
using Point = std::array<double, 3>;

inline double dot(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Point& a, int dim) { return std::sqrt(dot(a, a, dim)); }

inline double dist(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double dist_sq(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// Surface measure of the unit sphere S^{d-1}: |S^0| = 2, |S^1| = 2pi, |S^2| = 4pi.
inline double sphere_surface(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
    default: throw std::invalid_argument("sphere_surface: dim must be 1, 2 or 3");
  }
}

/// Volume of the unit ball in R^d.
inline double unit_ball_volume(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return kPi;
    case 3: return 4.0 * kPi / 3.0;
    default: throw std::invalid_argument("unit_ball_volume: dim must be 1, 2 or 3");
  }
}

// ---------------------------------------------------------------------------
// Seeding: one 64-bit seed expands into independent per-task streams.

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child stream seed from (seed, tag, index). Pure.
inline uint64_t derive_seed(uint64_t seed, uint64_t tag, uint64_t index = 0) {
  uint64_t s = seed;
  (void)splitmix64(s);
  s ^= 0x5851f42d4c957f2dULL * (tag + 1);
  (void)splitmix64(s);
  s ^= 0x14057b7ef767814fULL * (index + 1);
  return splitmix64(s);
}

inline uint64_t hash_str(const std::string& s);

/// Named-stream convenience: the tag is the FNV hash of a label.
inline uint64_t derive_seed(uint64_t seed, const std::string& tag, uint64_t index = 0);

inline uint64_t hash_str(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t derive_seed(uint64_t seed, const std::string& tag, uint64_t index) {
  return derive_seed(seed, hash_str(tag), index);
}

// ---------------------------------------------------------------------------
// Parallelism. HS_THREADS caps the worker count; results are written to
// preassigned slots so the outcome never depends on scheduling.

inline int max_threads() {
  static const int n = [] {
    if (const char* env = std::getenv("HS_THREADS")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return static_cast<int>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
  }();
  return n;
}

template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
  const int workers = max_threads();
  if (workers <= 1 || n < 1024) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const size_t chunk = (n + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const size_t lo = static_cast<size_t>(w) * chunk;
    const size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Output formatting.

/// Round to `digits` significant decimal digits (used before JSON export).
inline double round_sig(double x, int digits) {
  if (!std::isfinite(x) || x == 0.0) return x;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return std::strtod(buf, nullptr);
}

inline std::string format_sig(double x, int digits) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

}  // namespace hardyspec
