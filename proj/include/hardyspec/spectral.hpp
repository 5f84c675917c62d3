#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "hardyspec/common.hpp"
#include "hardyspec/delta.hpp"
#include "hardyspec/geometry.hpp"
#include "hardyspec/measure.hpp"
#include "hardyspec/report.hpp"

namespace hardyspec {

// ---------------------------------------------------------------------------

/// (2d+1)-point Laplacian with Dirichlet handled by excluding every grid
/// node on or outside the boundary. Row r corresponds to grid node
/// interior[r]; couplings exist only between adjacent interior nodes.
struct GridOperator {
  UniformGrid grid;
  double h = 0.0;
  int dim = 1;
  std::vector<int64_t> interior;       // matrix row -> grid linear index
  std::vector<int32_t> row_of;         // grid linear index -> row or -1
  Eigen::SparseMatrix<double> matrix;  // symmetric positive definite

  int64_t n() const { return int64_t(interior.size()); }
};

inline GridOperator assemble(const Domain& dom, double h, int64_t node_budget = 10'000'000) {
  if (!(h > 0)) throw std::invalid_argument("assemble: h must be positive");
  GridOperator op;
  op.grid = make_grid(dom, h);
  op.h = h;
  op.dim = dom.dim;
  const int64_t total = op.grid.total();
  if (total > node_budget)
    throw std::runtime_error("assemble: grid has " + std::to_string(total) +
                             " nodes, over the budget of " + std::to_string(node_budget));
  op.row_of.assign(total, -1);
  for (int64_t idx = 0; idx < total; ++idx) {
    if (contains(dom, op.grid.point(idx))) {
      op.row_of[idx] = static_cast<int32_t>(op.interior.size());
      op.interior.push_back(idx);
    }
  }
  if (op.interior.empty()) throw std::runtime_error("assemble: no grid node lies inside the domain");

  const double diag = 2.0 * dom.dim / (h * h);
  const double off = -1.0 / (h * h);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(op.interior.size() * (2 * dom.dim + 1));
  const int64_t stride[3] = {1, op.grid.npts[0], int64_t(op.grid.npts[0]) * op.grid.npts[1]};
  for (int64_t r = 0; r < op.n(); ++r) {
    const int64_t idx = op.interior[r];
    const auto ijk = op.grid.unindex(idx);
    trips.emplace_back(r, r, diag);
    for (int a = 0; a < dom.dim; ++a) {
      for (int s : {-1, +1}) {
        const int q = ijk[a] + s;
        if (q < 0 || q >= op.grid.npts[a]) continue;
        const int32_t nb = op.row_of[idx + s * stride[a]];
        if (nb >= 0) trips.emplace_back(r, nb, off);
      }
    }
  }
  op.matrix.resize(op.n(), op.n());
  op.matrix.setFromTriplets(trips.begin(), trips.end());
  return op;
}

// ---------------------------------------------------------------------------

/// Ascending smallest eigenvalues with their grid eigenvectors. Residuals
/// ||A v - lambda v|| / lambda are checked to 1e-8 before returning.
struct SpectralResult {
  std::vector<double> eigenvalues;
  int k = 0;
  double h = 0.0;
  std::string domain_hash;
  UniformGrid grid;
  std::vector<int64_t> interior;
  Eigen::MatrixXd vectors;  // n x k, columns match eigenvalues
  std::vector<double> residuals;
};

namespace detail {

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  // first entry of largest magnitude decides the sign, for reproducibility
  int best = 0;
  double mag = 0.0;
  for (int i = 0; i < v.size(); ++i)
    if (std::fabs(v[i]) > mag + 1e-300) {
      mag = std::fabs(v[i]);
      best = i;
    }
  if (v[best] < 0) v = -v;
}

/// Shift-invert Lanczos at sigma = 0 with full reorthogonalization.
/// Returns false when fewer than k Ritz pairs meet the residual tolerance.
inline bool lanczos_smallest(const Eigen::SparseMatrix<double>& A, int k, int m,
                             Eigen::VectorXd& values, Eigen::MatrixXd& vecs,
                             std::vector<double>& resids, double tol) {
  const int64_t n = A.rows();
  m = static_cast<int>(std::min<int64_t>(m, n));
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(A);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("eigenvalues: Cholesky factorization failed (operator not SPD?)");

  Eigen::MatrixXd V(n, m);
  Eigen::VectorXd alpha(m), beta(m);
  std::mt19937_64 eng(derive_seed(0x9E3779B97F4A7C15ULL, "lanczos-start", uint64_t(n)));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd q(n);
  for (int64_t i = 0; i < n; ++i) q[i] = u(eng);
  q.normalize();
  V.col(0) = q;

  int steps = 0;
  for (int j = 0; j < m; ++j) {
    Eigen::VectorXd w = llt.solve(V.col(j));
    alpha[j] = V.col(j).dot(w);
    w -= alpha[j] * V.col(j);
    if (j > 0) w -= beta[j - 1] * V.col(j - 1);
    // two-pass full reorthogonalization
    for (int pass = 0; pass < 2; ++pass)
      w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
    steps = j + 1;
    if (j + 1 == m) break;
    beta[j] = w.norm();
    if (beta[j] < 1e-14) {
      // invariant subspace found; restart direction orthogonal to V
      for (int64_t i = 0; i < n; ++i) w[i] = u(eng);
      for (int pass = 0; pass < 2; ++pass)
        w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
      beta[j] = w.norm();
      if (beta[j] < 1e-14) break;  // space exhausted
    }
    V.col(j + 1) = w / beta[j];
  }

  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
  for (int j = 0; j < steps; ++j) {
    T(j, j) = alpha[j];
    if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  if (es.info() != Eigen::Success) return false;

  // largest theta of inv(A) <-> smallest lambda of A
  const int avail = std::min(k, steps);
  if (avail < k) return false;
  values.resize(k);
  vecs.resize(n, k);
  resids.assign(k, kInf);
  bool ok = true;
  for (int i = 0; i < k; ++i) {
    const int col = steps - 1 - i;  // eigenvalues of T ascending
    const double theta = es.eigenvalues()[col];
    if (!(theta > 0)) return false;
    values[i] = 1.0 / theta;
    Eigen::VectorXd v = V.leftCols(steps) * es.eigenvectors().col(col);
    v.normalize();
    fix_sign(v);
    vecs.col(i) = v;
    const double res = (A * v - values[i] * v).norm() / values[i];
    resids[i] = res;
    if (!(res <= tol)) ok = false;
  }
  // enforce ascending order (thetas are distinct-sorted, but be safe)
  for (int i = 1; i < k; ++i)
    if (values[i] < values[i - 1]) {
      ok = false;
    }
  return ok;
}

}  // namespace detail

inline SpectralResult eigenvalues(const GridOperator& op, int k) {
  if (k < 1 || int64_t(k) > op.n())
    throw std::invalid_argument("eigenvalues: k must lie in [1, matrix dimension]");
  SpectralResult res;
  res.k = k;
  res.h = op.h;
  res.grid = op.grid;
  res.interior = op.interior;
  const double tol = 1e-8;
  const int64_t n = op.n();

  if (n <= 2000) {
    Eigen::MatrixXd dense(op.matrix);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalues: dense solver failed");
    res.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + k);
    res.vectors = es.eigenvectors().leftCols(k);
    for (int i = 0; i < k; ++i) {
      detail::fix_sign(res.vectors.col(i));
      res.residuals.push_back(
          (op.matrix * res.vectors.col(i) - res.eigenvalues[i] * res.vectors.col(i)).norm() /
          res.eigenvalues[i]);
    }
    return res;
  }

  Eigen::VectorXd vals;
  Eigen::MatrixXd vecs;
  std::vector<double> resids;
  int m = std::max(2 * k + 20, 40);
  const int m_cap = static_cast<int>(std::min<int64_t>(n, std::max(250, 4 * k)));
  for (;;) {
    if (detail::lanczos_smallest(op.matrix, k, m, vals, vecs, resids, tol)) break;
    if (m >= m_cap) {
      std::string msg = "eigenvalues: Lanczos did not converge; relative residuals:";
      for (double r : resids) msg += " " + format_sig(r, 3);
      throw std::runtime_error(msg);
    }
    m = std::min(m_cap, m + (m + 1) / 2);
  }
  res.eigenvalues.assign(vals.data(), vals.data() + k);
  res.vectors = vecs;
  res.residuals = resids;
  return res;
}

inline double lambda_min(const Domain& dom, double h, int64_t node_budget = 10'000'000) {
  return eigenvalues(assemble(dom, h, node_budget), 1).eigenvalues[0];
}

// ---------------------------------------------------------------------------

/// Multiplicity of the computed spectrum in the closed interval [0, lambda].
inline int count_leq(const SpectralResult& res, double lambda) {
  if (res.eigenvalues.empty() || lambda > res.eigenvalues.back())
    throw std::runtime_error(
        "count_leq: lambda exceeds the computed spectrum; recompute with larger k");
  int c = 0;
  for (double ev : res.eigenvalues)
    if (ev <= lambda) ++c;
  return c;
}

/// Weyl term (2 pi)^{-d} omega_d |Omega| lambda^{d/2}.
inline double weyl_prediction(const Domain& dom, double lambda, double vol) {
  if (!(lambda >= 0)) throw std::invalid_argument("weyl_prediction: lambda must be >= 0");
  const int d = dom.dim;
  return std::pow(2 * kPi, -d) * unit_ball_volume(d) * vol * std::pow(lambda, 0.5 * d);
}

// ---------------------------------------------------------------------------

/// Principal-eigenvalue lower bound lambda_1 >= d/(4 rho^2) (1 - sup-ratio).
/// `lambda1` is the reference eigenvalue (computed once by the caller, since
/// sweeps share it). Pass allows discretization slack plus 3 propagated MC
/// standard errors.
inline BoundReport lieb_bound(const Domain& dom, double rho, double lambda1, int64_t samples,
                              uint64_t seed, double grid_h = 0.0, double tol_disc = 1e-2) {
  if (!(rho > 0)) throw std::invalid_argument("lieb_bound: rho must be positive");
  if (grid_h <= 0) grid_h = rho / 4;
  const OverlapEstimate sup = sup_overlap_ratio(dom, rho, grid_h, samples, seed);
  BoundReport r;
  r.name = "lieb";
  const double front = dom.dim / (4 * rho * rho);
  r.bound_value = front * (1.0 - sup.value);
  r.reference_value = lambda1;
  r.set_ratio();
  r.lhs = r.bound_value;
  r.rhs = lambda1;
  r.std_err = front * sup.std_err;
  r.samples = sup.samples;
  r.seed = seed;
  r.params = {{"rho", rho},
              {"sup_ratio", sup.value},
              {"sup_slack", sup.slack},
              {"grid_h", grid_h},
              {"dim", double(dom.dim)}};
  r.tolerances = {{"tol_disc", tol_disc}, {"mc_sigma", 3.0}};
  r.pass = r.bound_value <= lambda1 * (1.0 + tol_disc) + 3.0 * r.std_err;
  return r;
}

// ---------------------------------------------------------------------------

/// Existence of a witness x with lambda_j >= 1/(4 delta(x)^2), checked at
/// the best grid point (argmax of delta over nodes where the eigenvector is
/// numerically nonzero).
inline BoundReport remark2_witness_check(const Domain& dom, const DeltaField& field,
                                         const SpectralResult& res, int j, double tol = 1e-9) {
  if (j < 1 || j > res.k) throw std::invalid_argument("remark2_witness_check: j out of range");
  if (res.vectors.cols() < j)
    throw std::invalid_argument("remark2_witness_check: eigenvector not computed");
  if (field.grid.h != res.grid.h || field.grid.npts != res.grid.npts)
    throw std::invalid_argument("remark2_witness_check: field and spectrum use different grids");

  const auto& v = res.vectors.col(j - 1);
  const double vmax = v.cwiseAbs().maxCoeff();
  double best_delta = -1.0;
  Point best_x{0, 0, 0};
  for (int64_t r = 0; r < int64_t(res.interior.size()); ++r) {
    if (std::fabs(v[r]) <= 1e-12 * vmax) continue;
    const double dx = field.values[res.interior[r]];
    if (std::isnan(dx)) continue;
    if (dx > best_delta) {
      best_delta = dx;
      best_x = field.grid.point(res.interior[r]);
    }
  }
  BoundReport rep;
  rep.name = "remark2";
  const double lam = res.eigenvalues[j - 1];
  rep.lhs = lam;
  rep.rhs = std::isinf(best_delta) ? 0.0 : 1.0 / (4 * best_delta * best_delta);
  rep.bound_value = rep.rhs;
  rep.reference_value = lam;
  rep.set_ratio();
  const double margin = std::isinf(best_delta) ? kInf : lam * 4 * best_delta * best_delta - 1.0;
  rep.params = {{"j", double(j)},
                {"delta_witness", best_delta},
                {"margin", margin},
                {"x1", best_x[0]},
                {"x2", best_x[1]},
                {"x3", best_x[2]}};
  rep.tolerances = {{"tol", tol}};
  rep.pass = best_delta > 0 && margin >= -tol;
  if (best_delta < 0) rep.notes = "eigenvector numerically zero everywhere";
  return rep;
}

// ---------------------------------------------------------------------------

/// Discrete Hardy quotient: lhs = sum |grad_h u|^2 h^d over all grid edges
/// (u extended by zero off the interior), rhs = (1/4) sum delta^{-2} u^2 h^d.
/// For u supported on the operator's interior nodes, lhs equals u^T A u h^d.
inline BoundReport hardy_quadratic_check(const DeltaField& field, const std::vector<double>& u,
                                         double tol_h = 0.0) {
  const UniformGrid& g = field.grid;
  if (int64_t(u.size()) != g.total())
    throw std::invalid_argument("hardy_quadratic_check: u does not match the field grid");
  for (int64_t idx = 0; idx < g.total(); ++idx)
    if (std::isnan(field.values[idx]) && u[idx] != 0.0)
      throw std::invalid_argument("hardy_quadratic_check: u must vanish at non-interior nodes");

  const int d = g.dim;
  const double h = g.h;
  const double hd = std::pow(h, d);
  const int64_t stride[3] = {1, g.npts[0], int64_t(g.npts[0]) * g.npts[1]};

  double energy = 0.0;  // sum over directed edges of (u_next - u_here)^2
  for (int64_t idx = 0; idx < g.total(); ++idx) {
    const auto ijk = g.unindex(idx);
    const double ui = u[idx];
    for (int a = 0; a < d; ++a) {
      // forward edge, plus the virtual zero neighbor outside the grid start
      const double un = (ijk[a] + 1 < g.npts[a]) ? u[idx + stride[a]] : 0.0;
      energy += (un - ui) * (un - ui);
      if (ijk[a] == 0) energy += ui * ui;  // edge to the virtual node before 0
    }
  }
  const double lhs = energy / (h * h) * hd;

  // The weight floors delta at h/2: on non-grid-aligned boundaries a node can
  // sit at distance eps << h from the true boundary while a grid function is
  // constant over an h-cell, and the raw sum picks up a heavy-tailed u^2/eps^2
  // term that does not converge to the continuum integral (it is dominated by
  // the single closest node).  Flooring at the resolution scale makes the sum
  // a consistent estimator; on grid-aligned boundaries delta >= h at every
  // interior node, so the floor never engages there.
  double rhs = 0.0;
  for (int64_t idx : field.interior) {
    const double dx = std::max(field.values[idx], h / 2);
    if (std::isinf(dx)) continue;  // delta^{-2} = 0
    rhs += 0.25 * u[idx] * u[idx] / (dx * dx);
  }
  rhs *= hd;

  BoundReport r;
  r.name = "hardy";
  r.lhs = lhs;
  r.rhs = rhs;
  r.bound_value = rhs;
  r.reference_value = lhs;
  r.set_ratio();
  r.tolerances = {{"tol_h", tol_h}};
  if (lhs == 0.0 && rhs == 0.0) {
    r.ratio = kNaN;
    r.pass = true;
    r.notes = "vacuous (u = 0)";
    return r;
  }
  r.ratio = rhs != 0.0 ? lhs / rhs : kInf;
  r.pass = r.ratio >= 1.0 - tol_h;
  return r;
}

/// Two-grid form: the coarse ratio is judged against the self-calibrating
/// slack tol_h = 2 |ratio(h) - ratio(h/2)| + 1e-6.
inline BoundReport hardy_check_calibrated(const DeltaField& coarse, const std::vector<double>& u_c,
                                          const DeltaField& fine, const std::vector<double>& u_f) {
  BoundReport rc = hardy_quadratic_check(coarse, u_c);
  const BoundReport rf = hardy_quadratic_check(fine, u_f);
  const double tol_h = 2.0 * std::fabs(rc.ratio - rf.ratio) + 1e-6;
  rc.tolerances["tol_h"] = tol_h;
  rc.params["ratio_fine"] = rf.ratio;
  rc.pass = !(rc.ratio < 1.0 - tol_h);
  return rc;
}

// ---------------------------------------------------------------------------

/// Riesz mean sum_k (mu - lambda_k)_+^gamma over the computed spectrum;
/// gamma = 0 counts strictly-below eigenvalues.
inline double riesz_mean(const SpectralResult& res, double mu, double gamma) {
  if (!(gamma >= 0)) throw std::invalid_argument("riesz_mean: gamma must be >= 0");
  if (res.eigenvalues.empty() || mu > res.eigenvalues.back())
    throw std::runtime_error(
        "riesz_mean: mu exceeds the computed spectrum; recompute with larger k");
  double s = 0.0;
  for (double ev : res.eigenvalues) {
    const double gap = mu - ev;
    if (gap > 0) s += gamma == 0.0 ? 1.0 : std::pow(gap, gamma);
  }
  return s;
}

// ---------------------------------------------------------------------------

/// Grid quadrature of the counting-bound right-hand side
///   constant * integral of (lambda - 1/(4 delta^2))_+^{d/2}.
/// When a spectrum is supplied the implied constant N_<=(lambda)/integral is
/// attached, keeping runs with unknown L_d informative.
inline BoundReport floss_rhs(const DeltaField& field, double lambda, double constant = 1.0,
                             const SpectralResult* res = nullptr) {
  if (!(lambda > 0)) throw std::invalid_argument("floss_rhs: lambda must be positive");
  const int d = field.grid.dim;
  const double hd = std::pow(field.grid.h, d);
  double integral = 0.0;
  for (int64_t idx : field.interior) {
    const double dx = field.values[idx];
    const double pot = std::isinf(dx) ? 0.0 : 1.0 / (4 * dx * dx);
    const double gap = lambda - pot;
    if (gap > 0) integral += std::pow(gap, 0.5 * d);
  }
  integral *= hd;

  BoundReport r;
  r.name = "floss";
  r.rhs = constant * integral;
  r.bound_value = r.rhs;
  r.params = {{"lambda", lambda}, {"constant", constant}, {"integral", integral},
              {"dim", double(d)}};
  if (d < 3) r.notes = "d < 3: outside the theorem's stated range";
  if (res) {
    const int count = count_leq(*res, lambda);
    r.lhs = count;
    r.reference_value = count;
    r.set_ratio();
    r.params["count"] = count;
    r.params["implied_constant"] = integral > 0 ? count / integral : kNaN;
  }
  r.pass = std::isfinite(integral) && integral >= 0;
  return r;
}

/// d = 2 Riesz route: rhs = constant * integral of (mu - 1/(4 delta^2))_+^{gamma+1},
/// compared against the Riesz mean when a spectrum is given, plus the chained
/// counting bound N_<=(mu/chain_factor) <= lambda^{-gamma} rhs.
inline BoundReport riesz_bound_rhs_2d(const DeltaField& field, double mu, double gamma,
                                      double constant = 1.0, const SpectralResult* res = nullptr,
                                      double chain_factor = 2.0) {
  if (field.grid.dim != 2)
    throw std::invalid_argument("riesz_bound_rhs_2d: field dimension must be 2");
  if (!(gamma > 0)) throw std::invalid_argument("riesz_bound_rhs_2d: gamma must be positive");
  if (!(mu > 0)) throw std::invalid_argument("riesz_bound_rhs_2d: mu must be positive");
  const double hd = field.grid.h * field.grid.h;
  double integral = 0.0;
  for (int64_t idx : field.interior) {
    const double dx = field.values[idx];
    const double pot = std::isinf(dx) ? 0.0 : 1.0 / (4 * dx * dx);
    const double gap = mu - pot;
    if (gap > 0) integral += std::pow(gap, gamma + 1.0);
  }
  integral *= hd;

  BoundReport r;
  r.name = "riesz2d";
  r.rhs = constant * integral;
  r.bound_value = r.rhs;
  r.params = {{"mu", mu}, {"gamma", gamma}, {"constant", constant}, {"integral", integral},
              {"chain_factor", chain_factor}};
  if (res) {
    const double trace = riesz_mean(*res, mu, gamma);
    r.lhs = trace;
    r.reference_value = trace;
    r.set_ratio();
    r.params["riesz_mean"] = trace;
    r.params["implied_constant"] = integral > 0 ? trace / integral : kNaN;
    const double lambda = mu / chain_factor;
    r.params["chained_lambda"] = lambda;
    r.params["chained_count"] = count_leq(*res, lambda);
    r.params["chained_bound"] = std::pow(lambda, -gamma) * r.rhs;
  }
  r.pass = std::isfinite(integral) && integral >= 0;
  return r;
}

// ---------------------------------------------------------------------------

inline void write_spectrum_csv(const SpectralResult& res, std::ostream& os) {
  os << "index,eigenvalue\n";
  for (size_t i = 0; i < res.eigenvalues.size(); ++i)
    os << (i + 1) << "," << format_sig(res.eigenvalues[i], 12) << "\n";
}

inline void write_spectrum_csv(const SpectralResult& res, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_spectrum_csv: cannot open " + path);
  write_spectrum_csv(res, os);
}

}  // namespace hardyspec
