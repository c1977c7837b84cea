#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "ares/errors.hpp"
#include "ares/synthesis.hpp"

using namespace ares;

namespace {

std::vector<Vector> random_feats(std::uint64_t seed, std::size_t n, std::size_t p) {
  Rng rng(seed);
  std::vector<Vector> f(n, Vector(p));
  for (auto& v : f)
    for (auto& x : v) x = rng.normal() * (1.0 + rng.uniform());
  return f;
}

}  // namespace

TEST_CASE("mix_pair endpoints and midpoint") {
  const Vector fi = {0.0, 1.0, -2.0};
  const Vector fj = {2.0, 3.0, 4.0};
  CHECK(mix_pair(fi, fj, 1.0) == fi);
  CHECK(mix_pair(fi, fj, 0.0) == fj);
  CHECK(mix_pair(fi, fj, 0.5) == Vector{1.0, 2.0, 1.0});
}

TEST_CASE("expand_features: provenance, distinct pairs, bounding box") {
  const auto feats = random_feats(1, 50, 4);
  Rng rng(2);
  const ExpandedSet xs = expand_features(feats, 2.0, 500, rng);
  REQUIRE(xs.points.size() == 500);
  REQUIRE(xs.sources.size() == 500);
  Vector lo(4, 1e300), hi(4, -1e300);
  for (const auto& f : feats)
    for (std::size_t i = 0; i < 4; ++i) {
      lo[i] = std::min(lo[i], f[i]);
      hi[i] = std::max(hi[i], f[i]);
    }
  for (std::size_t n = 0; n < 500; ++n) {
    const MixRecord& r = xs.sources[n];
    CHECK(r.i != r.j);
    CHECK(r.lambda >= 0.0);
    CHECK(r.lambda <= 1.0);
    CHECK(xs.points[n] == mix_pair(feats[r.i], feats[r.j], r.lambda));
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(xs.points[n][i] >= lo[i]);
      CHECK(xs.points[n][i] <= hi[i]);
    }
  }
  Rng r2(3);
  CHECK_THROWS_AS(expand_features(std::vector<Vector>{{1.0}}, 2.0, 10, r2), InvalidInput);
  const ExpandedSet id = identity_expansion(feats);
  CHECK(id.points == feats);
}

TEST_CASE("estimate_outlier_region: hand case and degenerate cloud") {
  ExpandedSet sq = identity_expansion(std::vector<Vector>{{0, 0}, {2, 0}, {0, 2}, {2, 2}});
  const GaussianModel m = estimate_outlier_region(sq);
  CHECK(m.mu() == Vector{1.0, 1.0});
  CHECK(m.sigma() == Matrix::identity(2));
  const ExpandedSet same = identity_expansion(std::vector<Vector>(6, Vector{1.0, 2.0}));
  const GaussianModel d = estimate_outlier_region(same);
  CHECK(d.sigma() == Matrix(2, 2, 0.0));
  CHECK(d.ridge() > 0.0);
  CHECK(std::isfinite(gaussian_logpdf(d, Vector{1.0, 2.0})));
}

TEST_CASE("select_epsilon: direct order statistics") {
  const std::vector<double> dens = {0.4, 0.1, 0.3, 0.2};
  Rng rng(4);
  CHECK(select_epsilon(dens, 4, 3, rng).epsilon == 0.3);
  CHECK(select_epsilon(dens, 4, 1, rng).epsilon == 0.1);
  CHECK(select_epsilon(dens, 100, 4, rng).epsilon == 0.4);  // m clamps to the pool
  CHECK_THROWS_AS(select_epsilon(dens, 3, 4, rng), InvalidParameter);
  CHECK_THROWS_AS(select_epsilon(dens, 4, 0, rng), InvalidParameter);
  CHECK(order_statistic_index(std::vector<double>{5, 1, 1, 3}, 2) == 2);
}

TEST_CASE("select_epsilon: t=1 is the sampled minimum; sample has no repeats") {
  Rng rng(5);
  std::vector<double> ll(3000);
  for (auto& v : ll) v = rng.normal();
  for (int trial = 0; trial < 20; ++trial) {
    const EpsilonSelection s = select_epsilon(ll, 500, 1, rng);
    REQUIRE(s.sampled.size() == 500);
    CHECK(std::set<std::size_t>(s.sampled.begin(), s.sampled.end()).size() == 500);
    double mn = 1e300;
    for (auto i : s.sampled) mn = std::min(mn, ll[i]);
    CHECK(s.epsilon == mn);
  }
}

TEST_CASE("select_epsilon on a large pool: exactly t-1 sampled values below epsilon") {
  const auto feats = random_feats(6, 400, 3);
  Rng rng(7);
  const ExpandedSet xs = expand_features(feats, 2.0, 20000, rng);
  const GaussianModel model = estimate_outlier_region(xs);
  for (int trial = 0; trial < 5; ++trial) {
    const EpsilonSelection s = select_epsilon(xs, model, 10000, 128, rng);
    std::vector<double> vals;
    for (auto i : s.sampled) vals.push_back(gaussian_logpdf(model, xs.points[i]));
    std::sort(vals.begin(), vals.end());
    CHECK(s.epsilon == vals[127]);
    const auto below = std::count_if(vals.begin(), vals.end(), [&](double v) { return v < s.epsilon; });
    CHECK(below == 127);
  }
}

TEST_CASE("sample_virtual_outliers: bottom-B set, all strictly below epsilon") {
  const auto feats = random_feats(8, 300, 3);
  Rng rng(9);
  const ExpandedSet xs = expand_features(feats, 2.0, 3000, rng);
  const GaussianModel model = estimate_outlier_region(xs);
  const std::vector<double> ll = pool_loglik(xs, model);
  std::vector<std::size_t> order(ll.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return ll[a] < ll[b]; });

  const OutlierBatch one = sample_virtual_outliers(xs, model, ll[order[1]], 1);
  REQUIRE(one.indices.size() == 1);
  CHECK(one.indices[0] == order[0]);

  const std::size_t b = 64;
  const double eps = ll[order[b]];
  const OutlierBatch batch = sample_virtual_outliers(xs, ll, eps, b);
  REQUIRE(batch.points.size() == b);
  std::set<std::size_t> got(batch.indices.begin(), batch.indices.end());
  std::set<std::size_t> want(order.begin(), order.begin() + static_cast<long>(b));
  CHECK(got == want);
  double max_in = -1e300;
  for (std::size_t k = 0; k < b; ++k) {
    CHECK(batch.loglik[k] < eps);
    CHECK(batch.points[k] == xs.points[batch.indices[k]]);
    max_in = std::max(max_in, batch.loglik[k]);
  }
  double min_out = 1e300;
  for (std::size_t i = 0; i < ll.size(); ++i)
    if (!got.count(i)) min_out = std::min(min_out, ll[i]);
  CHECK(max_in < eps);
  CHECK(eps <= min_out);
}

TEST_CASE("sample_virtual_outliers: underflow names the deficit") {
  const auto feats = random_feats(10, 100, 2);
  const ExpandedSet xs = identity_expansion(feats);
  const GaussianModel model = estimate_outlier_region(xs);
  const std::vector<double> ll = pool_loglik(xs, model);
  std::vector<double> sorted = ll;
  std::sort(sorted.begin(), sorted.end());
  try {
    sample_virtual_outliers(xs, ll, sorted[10], 15);
    FAIL("expected SynthesisUnderflow");
  } catch (const SynthesisUnderflow& e) {
    CHECK(e.deficit() == 5);
    CHECK(std::string(e.what()).find('5') != std::string::npos);
  }
}

TEST_CASE("random_virtual_outliers and gaussian_candidates") {
  const auto feats = random_feats(11, 80, 2);
  const ExpandedSet xs = identity_expansion(feats);
  Rng rng(12);
  const OutlierBatch r = random_virtual_outliers(xs, 30, rng);
  CHECK(r.points.size() == 30);
  CHECK(std::set<std::size_t>(r.indices.begin(), r.indices.end()).size() == 30);
  const GaussianModel model = estimate_outlier_region(xs);
  const ExpandedSet g = gaussian_candidates(model, 200, rng);
  CHECK(g.points.size() == 200);
  CHECK(g.points[0].size() == 2);
}
