#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hardyspec/spectral.hpp"
#include "corpus.hpp"
#include "oracles.hpp"

using namespace hardyspec;

namespace {

std::vector<double> to_full_grid(const SpectralResult& res, int col) {
  std::vector<double> u(res.grid.total(), 0.0);
  for (int64_t r = 0; r < int64_t(res.interior.size()); ++r)
    u[res.interior[r]] = res.vectors(r, col);
  return u;
}

Domain scaled_square(double s) {
  AABox b; b.lo = {0, 0, 0}; b.hi = {s, s, 0};
  return make_domain(2, CsgNode::make_box(b));
}

}  // namespace

TEST_CASE("assemble: interval h = 0.25 gives the 3x3 tridiagonal [32, -16]") {
  auto op = assemble(corpus::interval(), 0.25);
  REQUIRE(op.n() == 3);
  Eigen::MatrixXd d(op.matrix);
  CHECK(d(0, 0) == 32.0);
  CHECK(d(1, 1) == 32.0);
  CHECK(d(2, 2) == 32.0);
  CHECK(d(0, 1) == -16.0);
  CHECK(d(1, 0) == -16.0);
  CHECK(d(1, 2) == -16.0);
  CHECK(d(0, 2) == 0.0);
}

TEST_CASE("assemble: square h = 0.5 is the single-node matrix [16]") {
  auto op = assemble(corpus::square(), 0.5);
  REQUIRE(op.n() == 1);
  CHECK(Eigen::MatrixXd(op.matrix)(0, 0) == 16.0);
}

TEST_CASE("assemble: L-shape h = 0.5 has five interior nodes") {
  auto op = assemble(corpus::lshape(), 0.5);
  CHECK(op.n() == 5);
}

TEST_CASE("assemble: row structure and symmetry on an irregular domain") {
  auto op = assemble(corpus::annulus(), 0.1);
  const double diag = 4.0 / (0.1 * 0.1);
  const double off = -1.0 / (0.1 * 0.1);
  Eigen::MatrixXd d(op.matrix);
  oracle::Rng rng(0xABCDu);
  for (int t = 0; t < 100; ++t) {
    const int i = rng.uniform_int(0, int(op.n()) - 1);
    const int j = rng.uniform_int(0, int(op.n()) - 1);
    CHECK(d(i, j) == d(j, i));
  }
  for (int64_t r = 0; r < op.n(); ++r) CHECK(d(r, r) == diag);
  for (int64_t r = 0; r < op.n(); ++r)
    for (int64_t c = 0; c < op.n(); ++c)
      if (r != c) CHECK((d(r, c) == 0.0 || d(r, c) == off));
}

TEST_CASE("assemble: failure modes") {
  AABox a; a.lo = {0, 0, 0}; a.hi = {1, 1, 0};
  AABox b; b.lo = {2, 2, 0}; b.hi = {3, 3, 0};
  auto empty = make_domain(2, CsgNode::make_op(CsgNode::Kind::intersect,
                                               {CsgNode::make_box(a), CsgNode::make_box(b)}));
  CHECK_THROWS_AS(assemble(empty, 0.25), std::runtime_error);
  CHECK_THROWS_AS(assemble(corpus::square(), -0.1), std::invalid_argument);
  CHECK_THROWS_AS(assemble(corpus::square(), 1e-4, 1000), std::runtime_error);
}

TEST_CASE("eigenvalues: interval h = 1/256 matches the closed-form FD value") {
  const double h = 1.0 / 256;
  auto res = eigenvalues(assemble(corpus::interval(), h), 1);
  const double fd = oracle::fd_interval_eig(1, h);
  CHECK(res.eigenvalues[0] == doctest::Approx(fd).epsilon(1e-10));
  CHECK(res.eigenvalues[0] <= kPi * kPi);
  CHECK(res.eigenvalues[0] >= kPi * kPi * (1 - 1e-4));
  CHECK(res.residuals[0] <= 1e-8);
}

TEST_CASE("eigenvalues: square h = 1/256 (iterative path) with degenerate pair") {
  const double h = 1.0 / 256;
  auto res = eigenvalues(assemble(corpus::square(), h), 3);
  CHECK(res.eigenvalues[0] ==
        doctest::Approx(oracle::fd_square_eig(1, 1, h)).epsilon(1e-7));
  CHECK(res.eigenvalues[0] == doctest::Approx(2 * kPi * kPi).epsilon(1e-3));
  CHECK(res.eigenvalues[1] ==
        doctest::Approx(oracle::fd_square_eig(1, 2, h)).epsilon(1e-7));
  CHECK(res.eigenvalues[2] ==
        doctest::Approx(oracle::fd_square_eig(2, 1, h)).epsilon(1e-7));
  CHECK(std::fabs(res.eigenvalues[1] - res.eigenvalues[2]) <= 1e-6 * res.eigenvalues[1]);
  for (double r : res.residuals) CHECK(r <= 1e-8);
  for (size_t i = 1; i < res.eigenvalues.size(); ++i)
    CHECK(res.eigenvalues[i] >= res.eigenvalues[i - 1]);
}

TEST_CASE("eigenvalues: dense path resolves the degenerate pair exactly") {
  auto res = eigenvalues(assemble(corpus::square(), 1.0 / 16), 3);
  CHECK(res.eigenvalues[1] == doctest::Approx(res.eigenvalues[2]).epsilon(1e-10));
  CHECK(res.eigenvalues[0] > 0.0);
}

TEST_CASE("eigenvalues: k validation") {
  auto op = assemble(corpus::interval(), 0.25);
  CHECK_THROWS_AS(eigenvalues(op, 0), std::invalid_argument);
  CHECK_THROWS_AS(eigenvalues(op, 4), std::invalid_argument);
  CHECK_NOTHROW(eigenvalues(op, 3));
}

TEST_CASE("eigenvalues: Richardson-style convergence of lambda_1 on the square") {
  const double l8 = lambda_min(corpus::square(), 1.0 / 8);
  const double l16 = lambda_min(corpus::square(), 1.0 / 16);
  const double l32 = lambda_min(corpus::square(), 1.0 / 32);
  CHECK(std::fabs(l32 - l16) < std::fabs(l16 - l8));
}

TEST_CASE("convergence order: ~2 on interval and square, ~1 on the disk") {
  // interval and square: second-order stencil, smooth eigenfunctions
  {
    const double e1 = std::fabs(lambda_min(corpus::interval(), 1.0 / 64) - kPi * kPi);
    const double e2 = std::fabs(lambda_min(corpus::interval(), 1.0 / 128) - kPi * kPi);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 1.8);
  }
  {
    const double exact = 2 * kPi * kPi;
    const double e1 = std::fabs(lambda_min(corpus::square(), 1.0 / 32) - exact);
    const double e2 = std::fabs(lambda_min(corpus::square(), 1.0 / 64) - exact);
    CHECK(std::log2(e1 / e2) >= 1.8);
  }
  {
    // Dirichlet-by-exclusion staircases the circle: first order expected
    const double j01 = 2.404825557695773;  // first zero of J_0
    const double exact = j01 * j01;
    const double e1 = std::fabs(lambda_min(corpus::disk(), 1.0 / 32) - exact);
    const double e2 = std::fabs(lambda_min(corpus::disk(), 1.0 / 64) - exact);
    const double order = std::log2(e1 / e2);
    MESSAGE("disk convergence order: ", order);
    CHECK(order >= 0.8);
  }
}

TEST_CASE("lambda_1 monotone under domain inclusion (Dirichlet bracketing)") {
  AABox inner; inner.lo = {0.2, 0.2, 0}; inner.hi = {0.8, 0.8, 0};
  auto small = make_domain(2, CsgNode::make_box(inner));
  const double l_small = lambda_min(small, 1.0 / 32);
  const double l_big = lambda_min(corpus::square(), 1.0 / 32);
  CHECK(l_small >= l_big * (1 - 1e-10));
}

TEST_CASE("count_leq: square multiplicity at 5 pi^2 and endpoint convention") {
  auto res = eigenvalues(assemble(corpus::square(), 1.0 / 128), 4);
  CHECK(oracle::square_count_leq(5 * kPi * kPi) == 3);
  CHECK(count_leq(res, 5 * kPi * kPi) == 3);
  CHECK(count_leq(res, res.eigenvalues[0] * 0.99) == 0);
  CHECK(count_leq(res, res.eigenvalues[0]) == 1);  // closed interval [0, lambda]
  CHECK_THROWS_AS(count_leq(res, res.eigenvalues.back() * 1.01), std::runtime_error);
}

TEST_CASE("weyl_prediction: plug-in arithmetic") {
  CHECK(weyl_prediction(corpus::square(), 5 * kPi * kPi, 1.0) ==
        doctest::Approx(5 * kPi / 4).epsilon(1e-12));
  CHECK(weyl_prediction(corpus::square(), 0.0, 1.0) == 0.0);
  CHECK(weyl_prediction(corpus::disk(), 100.0, kPi) == doctest::Approx(25.0).epsilon(1e-12));
  auto iv = corpus::interval();
  CHECK(weyl_prediction(iv, kPi * kPi, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lieb_bound: square, contained-ball clamp, interval") {
  const double l_sq = lambda_min(corpus::square(), 1.0 / 64);
  auto r = lieb_bound(corpus::square(), 1.0, l_sq, 100000, 21);
  CHECK(r.pass);
  CHECK(r.bound_value == doctest::Approx(0.5 * (1 - 1.0 / kPi)).epsilon(0.05));
  CHECK(r.bound_value <= l_sq);
  CHECK(r.params.at("rho") == 1.0);

  const double l_dk = lambda_min(corpus::disk(), 1.0 / 32);
  auto rv = lieb_bound(corpus::disk(), 0.5, l_dk, 20000, 21);
  CHECK(rv.params.at("sup_ratio") == 1.0);
  CHECK(rv.bound_value == 0.0);
  CHECK(rv.pass);

  const double l_iv = lambda_min(corpus::interval(), 1.0 / 128);
  auto ri = lieb_bound(corpus::interval(), 1.0, l_iv, 100000, 21);
  CHECK(ri.bound_value == doctest::Approx(0.125).epsilon(0.05));
  CHECK(ri.pass);

  CHECK_THROWS_AS(lieb_bound(corpus::square(), 0.0, 1.0, 10000, 1), std::invalid_argument);
}

TEST_CASE("remark2_witness_check: interval and square witnesses") {
  const double h = 1.0 / 64;
  auto iv = corpus::interval();
  auto res = eigenvalues(assemble(iv, h), 1);
  auto field = delta_field(iv, h, default_rule(1));
  auto rep = remark2_witness_check(iv, field, res, 1);
  CHECK(rep.pass);
  CHECK(rep.params.at("delta_witness") == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.params.at("margin") == doctest::Approx(kPi * kPi - 1).epsilon(0.01));

  auto sq = corpus::square();
  auto res2 = eigenvalues(assemble(sq, 1.0 / 32), 1);
  auto field2 = delta_field(sq, 1.0 / 32, sphere_rule(2, 180));
  auto rep2 = remark2_witness_check(sq, field2, res2, 1);
  CHECK(rep2.pass);
  const double dc = std::sqrt(kPi / (4 * kPi + 8));  // delta at the center
  CHECK(rep2.params.at("delta_witness") == doctest::Approx(dc).epsilon(1e-4));
  CHECK(rep2.params.at("margin") ==
        doctest::Approx(2 * kPi * kPi * 4 * dc * dc - 1).epsilon(0.02));
}

TEST_CASE("remark2_witness_check: margin is scale invariant") {
  auto small = corpus::square();
  auto big = scaled_square(2.0);
  auto rs = eigenvalues(assemble(small, 1.0 / 32), 1);
  auto rb = eigenvalues(assemble(big, 2.0 / 32), 1);
  auto fs = delta_field(small, 1.0 / 32, sphere_rule(2, 180));
  auto fb = delta_field(big, 2.0 / 32, sphere_rule(2, 180));
  const double m_small = remark2_witness_check(small, fs, rs, 1).params.at("margin");
  const double m_big = remark2_witness_check(big, fb, rb, 1).params.at("margin");
  CHECK(m_small == doctest::Approx(m_big).epsilon(1e-6));
}

TEST_CASE("remark2_witness_check: parameter validation") {
  auto iv = corpus::interval();
  auto res = eigenvalues(assemble(iv, 1.0 / 32), 1);
  auto field = delta_field(iv, 1.0 / 32, default_rule(1));
  auto mismatch = delta_field(iv, 1.0 / 16, default_rule(1));
  CHECK_THROWS_AS(remark2_witness_check(iv, field, res, 0), std::invalid_argument);
  CHECK_THROWS_AS(remark2_witness_check(iv, field, res, 2), std::invalid_argument);
  CHECK_THROWS_AS(remark2_witness_check(iv, mismatch, res, 1), std::invalid_argument);
}

TEST_CASE("hardy_quadratic_check: sin(pi x) on the interval at h = 1/512") {
  auto iv = corpus::interval();
  const double h = 1.0 / 512;
  auto field = delta_field(iv, h, default_rule(1));
  std::vector<double> u(field.grid.total(), 0.0);
  for (int64_t idx : field.interior) u[idx] = std::sin(kPi * field.grid.point(idx)[0]);
  auto rep = hardy_quadratic_check(field, u);

  CHECK(rep.lhs == doctest::Approx(kPi * kPi / 2).epsilon(1e-3));
  // reference: (1/4) integral of min(x,1-x)^{-2} sin^2(pi x)
  auto f = [](double x) {
    const double m = std::min(x, 1 - x);
    const double s = std::sin(kPi * x);
    return 0.25 * s * s / (m * m);
  };
  const double ref = oracle::adaptive_simpson(f, 1e-9, 1 - 1e-9, 1e-10);
  CHECK(rep.rhs == doctest::Approx(ref).epsilon(5e-3));
  CHECK(rep.ratio > 1.0);
  CHECK(rep.ratio == doctest::Approx((kPi * kPi / 2) / ref).epsilon(0.01));
  CHECK(rep.pass);
}

TEST_CASE("hardy_quadratic_check: discrete square eigenfunction via two grids") {
  auto sq = corpus::square();
  const double h = 1.0 / 64;
  auto res_c = eigenvalues(assemble(sq, h), 1);
  auto res_f = eigenvalues(assemble(sq, h / 2), 1);
  auto field_c = delta_field(sq, h, sphere_rule(2, 180));
  auto field_f = delta_field(sq, h / 2, sphere_rule(2, 180));
  auto rep = hardy_check_calibrated(field_c, to_full_grid(res_c, 0),
                                    field_f, to_full_grid(res_f, 0));
  CHECK(rep.pass);
  CHECK(rep.ratio >= 1.0 - rep.tolerances.at("tol_h"));
  CHECK(rep.ratio > 1.0);  // comfortably above in practice
}

TEST_CASE("hardy_quadratic_check: vacuous input and validation") {
  auto iv = corpus::interval();
  auto field = delta_field(iv, 1.0 / 16, default_rule(1));
  std::vector<double> zero(field.grid.total(), 0.0);
  auto rep = hardy_quadratic_check(field, zero);
  CHECK(rep.pass);
  CHECK(rep.notes.find("vacuous") != std::string::npos);
  CHECK(std::isnan(rep.ratio));

  std::vector<double> bad(field.grid.total(), 0.0);
  bad[0] = 1.0;  // nonzero at an outside node
  CHECK_THROWS_AS(hardy_quadratic_check(field, bad), std::invalid_argument);
  std::vector<double> short_u(3, 0.0);
  CHECK_THROWS_AS(hardy_quadratic_check(field, short_u), std::invalid_argument);
}

TEST_CASE("riesz_mean: square anchor, endpoint, and chained counting") {
  auto res = eigenvalues(assemble(corpus::square(), 1.0 / 128), 8);
  const double mu = 3 * kPi * kPi;
  CHECK(riesz_mean(res, mu, 1.0) == doctest::Approx(kPi * kPi).epsilon(2e-3));
  CHECK(riesz_mean(res, res.eigenvalues[0], 1.0) == 0.0);      // mu <= lambda_1
  CHECK(riesz_mean(res, res.eigenvalues[0], 0.0) == 0.0);      // strict positive part
  CHECK(riesz_mean(res, res.eigenvalues[0] * 1.0001, 0.0) == 1.0);
  CHECK_THROWS_AS(riesz_mean(res, 1e9, 1.0), std::runtime_error);
  CHECK_THROWS_AS(riesz_mean(res, mu, -1.0), std::invalid_argument);

  // termwise: lambda^{-g} Tr(-A - 2 lambda)_-^g >= N_<=(lambda), g = 1
  const double lam = 2 * kPi * kPi;
  const double chained = riesz_mean(res, 2 * lam, 1.0) / lam;
  CHECK(chained >= count_leq(res, lam));
}

TEST_CASE("floss_rhs: vanishing below the potential floor; cube two-grid value") {
  auto iv = corpus::interval();
  auto f1 = delta_field(iv, 1.0 / 32, default_rule(1));
  auto r0 = floss_rhs(f1, 0.5);  // 1/(4 max delta^2) = 1 > lambda
  CHECK(r0.rhs == 0.0);
  CHECK(r0.notes.find("outside") != std::string::npos);

  AABox cb; cb.lo = {0, 0, 0}; cb.hi = {1, 1, 1};
  auto cube = make_domain(3, CsgNode::make_box(cb));
  auto rule = sphere_rule(3, 512);
  auto fc = delta_field(cube, 1.0 / 24, rule);
  auto ff = delta_field(cube, 1.0 / 48, rule);
  const double ic = floss_rhs(fc, 50.0).params.at("integral");
  const double i_fine = floss_rhs(ff, 50.0).params.at("integral");
  CHECK(std::fabs(ic - i_fine) / i_fine < 0.01);
  // Frozen from the h = 1/48 run after the two grids above agreed to 0.24%.
  CHECK(i_fine == doctest::Approx(128.038).epsilon(0.005));
}

TEST_CASE("floss_rhs: scaling identity and implied constant") {
  auto sq = corpus::square();
  auto f1 = delta_field(sq, 1.0 / 64, sphere_rule(2, 180));
  auto big = scaled_square(2.0);
  auto f2 = delta_field(big, 2.0 / 64, sphere_rule(2, 180));
  const double i1 = floss_rhs(f1, 200.0).params.at("integral");
  const double i2 = floss_rhs(f2, 50.0).params.at("integral");  // lambda -> s^{-2} lambda
  CHECK(i1 == doctest::Approx(i2).epsilon(1e-10));

  auto res = eigenvalues(assemble(sq, 1.0 / 128), 14);
  auto rep = floss_rhs(f1, 200.0, 1.0, &res);
  CHECK(rep.params.at("count") == 13);
  CHECK(rep.params.at("implied_constant") > 0);
  CHECK(std::isfinite(rep.params.at("implied_constant")));
  CHECK(rep.pass);
}

TEST_CASE("riesz_bound_rhs_2d: square report with chained counting") {
  auto sq = corpus::square();
  auto field = delta_field(sq, 1.0 / 64, sphere_rule(2, 180));
  auto res = eigenvalues(assemble(sq, 1.0 / 128), 8);
  const double mu = 3 * kPi * kPi;
  auto rep = riesz_bound_rhs_2d(field, mu, 1.0, 1.0, &res);
  CHECK(rep.rhs > 0);
  CHECK(rep.params.at("riesz_mean") == doctest::Approx(kPi * kPi).epsilon(2e-3));
  CHECK(rep.params.at("implied_constant") > 0);
  CHECK(rep.params.at("chained_lambda") == doctest::Approx(mu / 2));
  CHECK(rep.params.at("chained_count") == 0);  // lambda_1 ~ 2 pi^2 > 1.5 pi^2
  CHECK(rep.pass);

  auto low = riesz_bound_rhs_2d(field, 0.5, 1.0);
  CHECK(low.rhs == 0.0);

  CHECK_THROWS_AS(riesz_bound_rhs_2d(field, mu, 0.0), std::invalid_argument);
  auto iv_field = delta_field(corpus::interval(), 1.0 / 16, default_rule(1));
  CHECK_THROWS_AS(riesz_bound_rhs_2d(iv_field, mu, 1.0), std::invalid_argument);
}

TEST_CASE("spectrum CSV: index,eigenvalue at 12 significant digits") {
  auto res = eigenvalues(assemble(corpus::interval(), 0.25), 3);
  std::ostringstream os;
  write_spectrum_csv(res, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "index,eigenvalue");
  std::getline(is, line);
  CHECK(line.substr(0, 10) == "1,9.372583");  // 64 sin^2(pi/8)
  std::getline(is, line);
  CHECK(line.substr(0, 4) == "2,32");  // 64 sin^2(pi/4) = 32
  std::getline(is, line);
  CHECK(line.substr(0, 10) == "3,54.62741");
}
