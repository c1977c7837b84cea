#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "ares/errors.hpp"
#include "ares/numerics.hpp"
#include "ares/rng.hpp"
#include "oracles.hpp"

using namespace ares;

namespace {

Matrix random_spd(std::size_t p, Rng& rng) {
  Matrix a(p, p);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = 0; c < p; ++c) a(r, c) = rng.normal();
  Matrix s(p, p);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t c = 0; c < p; ++c) {
      double acc = r == c ? 0.5 : 0.0;
      for (std::size_t k = 0; k < p; ++k) acc += a(r, k) * a(c, k);
      s(r, c) = acc / static_cast<double>(p);
    }
  return s;
}

}  // namespace

TEST_CASE("rng: same seed, same stream; child streams ignore parent draws") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  const Rng before = c.child("x");
  for (int i = 0; i < 10; ++i) c.next_u64();
  Rng after = c.child("x");
  Rng before_copy = before;
  CHECK(before_copy.next_u64() == after.next_u64());
  CHECK(Rng(42).child("x").next_u64() != Rng(42).child("y").next_u64());
  CHECK(Rng(42).child(0).next_u64() != Rng(42).child(1).next_u64());
}

TEST_CASE("rng: uniform and normal moments over 1e6 draws") {
  Rng rng(7);
  const int n = 1000000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.005));
  CHECK(std::abs(sn / n) < 0.005);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.005));
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.uniform_index(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
}

TEST_CASE("beta_sample: alpha=1 is uniform (KS < 0.02)") {
  Rng rng(1);
  std::vector<double> x(100000);
  for (double& v : x) v = beta_sample(1.0, rng);
  std::sort(x.begin(), x.end());
  double ks = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    ks = std::max(ks, std::abs((static_cast<double>(i) + 1) / n - x[i]));
    ks = std::max(ks, std::abs(x[i] - static_cast<double>(i) / n));
  }
  CHECK(ks < 0.02);
}

TEST_CASE("beta_sample: alpha=3 mean, alpha=2 support, bad alpha") {
  Rng rng(2);
  double s = 0;
  for (int i = 0; i < 100000; ++i) s += beta_sample(3.0, rng);
  CHECK(std::abs(s / 100000 - 0.5) < 0.01);
  for (int i = 0; i < 100000; ++i) {
    const double v = beta_sample(2.0, rng);
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
  CHECK_THROWS_AS(beta_sample(0.0, rng), InvalidParameter);
  CHECK_THROWS_AS(beta_sample(-1.0, rng), InvalidParameter);
  CHECK_THROWS_AS(beta_sample(std::nan(""), rng), InvalidParameter);
}

TEST_CASE("fit_gaussian: four-point square is exact") {
  const std::vector<Vector> pts = {{0, 0}, {2, 0}, {0, 2}, {2, 2}};
  const GaussianModel m = fit_gaussian(pts);
  CHECK(m.mu() == Vector{1.0, 1.0});
  CHECK(m.sigma() == Matrix::identity(2));
}

TEST_CASE("fit_gaussian: identical points give zero covariance and sqrt(ridge) factor") {
  const std::vector<Vector> pts(5, Vector{3.0, -1.0, 2.0});
  const GaussianModel m = fit_gaussian(pts);
  CHECK(m.mu() == Vector{3.0, -1.0, 2.0});
  CHECK(m.sigma() == Matrix(3, 3, 0.0));
  REQUIRE(m.ridge() > 0.0);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      CHECK(m.chol()(r, c) == doctest::Approx(r == c ? std::sqrt(m.ridge()) : 0.0));
}

TEST_CASE("fit_gaussian: order of points does not change the bits") {
  Rng rng(3);
  std::vector<Vector> pts;
  for (int i = 0; i < 200; ++i) pts.push_back({rng.normal(), rng.normal() * 3, rng.uniform()});
  const GaussianModel a = fit_gaussian(pts);
  std::reverse(pts.begin(), pts.end());
  const GaussianModel b = fit_gaussian(pts);
  CHECK(a.mu() == b.mu());
  CHECK(a.sigma() == b.sigma());
}

TEST_CASE("fit_gaussian: Monte-Carlo recovery of a known mean") {
  Rng rng(4);
  const Vector mu0 = {1.5, -2.0, 0.25};
  Matrix s0(3, 3);
  s0(0, 0) = 2.0; s0(1, 1) = 1.0; s0(2, 2) = 0.5;
  s0(0, 1) = s0(1, 0) = 0.6;
  s0(1, 2) = s0(2, 1) = -0.3;
  const GaussianModel truth = GaussianModel::from_moments(mu0, s0, 0.0);
  std::vector<Vector> pts;
  for (int i = 0; i < 10000; ++i) pts.push_back(truth.sample(rng));
  const GaussianModel fit = fit_gaussian(pts);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(fit.mu()[i] - mu0[i]) < 0.05);
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(fit.sigma()(r, c) - s0(r, c)) < 0.1);
}

TEST_CASE("fit_gaussian: input errors") {
  CHECK_THROWS_AS(fit_gaussian(std::vector<Vector>{{1.0}}), InvalidInput);
  CHECK_THROWS_AS(fit_gaussian(std::vector<Vector>{{1.0, 2.0}, {1.0}}), InvalidInput);
  CHECK_THROWS_AS(fit_gaussian(std::vector<Vector>{{1.0}, {std::nan("")}}), InvalidInput);
  CHECK_THROWS_AS(fit_gaussian(std::vector<Vector>{{1.0}, {2.0}}, -1.0), InvalidParameter);
}

TEST_CASE("gaussian_logpdf: identity covariance cases") {
  const GaussianModel m = GaussianModel::from_moments({0.5, -1.0}, Matrix::identity(2), 0.0);
  const double base = std::log(1.0 / (2.0 * std::numbers::pi));
  CHECK(gaussian_logpdf(m, Vector{0.5, -1.0}) == doctest::Approx(base).epsilon(1e-14));
  CHECK(gaussian_logpdf(m, Vector{1.5, -1.0}) == doctest::Approx(base - 0.5).epsilon(1e-14));
  CHECK_THROWS_AS(gaussian_logpdf(m, Vector{1.0}), InvalidInput);
}

TEST_CASE("gaussian_logpdf: matches dense-inverse evaluation up to p=16") {
  Rng rng(5);
  for (std::size_t p = 1; p <= 16; ++p) {
    for (int rep = 0; rep < 3; ++rep) {
      Vector mu(p);
      for (double& v : mu) v = rng.normal();
      const GaussianModel m = GaussianModel::from_moments(mu, random_spd(p, rng), 1e-9);
      Vector v(p);
      for (double& x : v) x = rng.normal() * 2;
      const double got = gaussian_logpdf(m, v);
      const double want = oracle::dense_logpdf(m, v);
      CHECK(std::abs(got - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("kld_gauss1d: closed-form cases and quadrature") {
  CHECK(kld_gauss1d({0, 1}, {0, 1}) == 0.0);
  CHECK(kld_gauss1d({0, 1}, {1, 1}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(kld_gauss1d({0, 1}, {0, std::numbers::e}) ==
        doctest::Approx(1.0 / (2.0 * std::numbers::e)).epsilon(1e-14));
  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    const Gauss1d p{rng.uniform(-5, 5), rng.uniform(0.1, 4)};
    const Gauss1d q{rng.uniform(-5, 5), rng.uniform(0.1, 4)};
    const double want = oracle::quad_kld(p, q);
    CHECK(std::abs(kld_gauss1d(p, q) - want) <= 1e-6 * std::max(want, 1e-12));
    CHECK(kld_gauss1d(p, q) >= 0.0);
  }
}

TEST_CASE("moment_match_mixture") {
  const Gauss1d same = moment_match_mixture({2.0, 0.25}, {2.0, 0.25});
  CHECK(same.mu == 2.0);
  CHECK(same.var == 0.25);
  const Gauss1d a = moment_match_mixture({0, 1}, {2, 1});
  CHECK(a.mu == 1.0);
  CHECK(a.var == 2.0);
  const Gauss1d b = moment_match_mixture({0, 1}, {0, 9});
  CHECK(b.mu == 0.0);
  CHECK(b.var == 5.0);
}

TEST_CASE("jsd_gauss1d: zero on equal, symmetric, matches quadrature") {
  CHECK(jsd_gauss1d({1.5, 2.0}, {1.5, 2.0}) == 0.0);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Gauss1d p{rng.uniform(-10, 10), rng.uniform(0.01, 9)};
    const Gauss1d q{rng.uniform(-10, 10), rng.uniform(0.01, 9)};
    CHECK(jsd_gauss1d(p, q) == jsd_gauss1d(q, p));
  }
  const Gauss1d p{0, 1}, q{10, 1};
  const double want = oracle::quad_jsd(p, q);
  CHECK(std::abs(jsd_gauss1d(p, q) - want) <= 1e-6 * want);
}

TEST_CASE("jsd_gauss1d_grad: value and partials against central differences") {
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    const Gauss1d p{rng.uniform(-3, 3), rng.uniform(0.2, 3)};
    const Gauss1d q{rng.uniform(-3, 3), rng.uniform(0.2, 3)};
    const JsdGradient g = jsd_gauss1d_grad(p, q);
    CHECK(g.value == doctest::Approx(jsd_gauss1d(p, q)).epsilon(1e-12));
    const double h = 1e-6;
    auto fd = [&](auto bump) {
      Gauss1d pp = p, qp = q, pm = p, qm = q;
      bump(pp, qp, h);
      bump(pm, qm, -h);
      return (jsd_gauss1d(pp, qp) - jsd_gauss1d(pm, qm)) / (2 * h);
    };
    CHECK(g.d_mu_p == doctest::Approx(fd([](Gauss1d& a, Gauss1d&, double d) { a.mu += d; })).epsilon(1e-5));
    CHECK(g.d_var_p == doctest::Approx(fd([](Gauss1d& a, Gauss1d&, double d) { a.var += d; })).epsilon(1e-5));
    CHECK(g.d_mu_q == doctest::Approx(fd([](Gauss1d&, Gauss1d& b, double d) { b.mu += d; })).epsilon(1e-5));
    CHECK(g.d_var_q == doctest::Approx(fd([](Gauss1d&, Gauss1d& b, double d) { b.var += d; })).epsilon(1e-5));
  }
}

TEST_CASE("floored clamps variance") {
  CHECK(floored(1.0, 0.0).var == kVarianceFloor);
  CHECK(floored(1.0, 2.0).var == 2.0);
}
