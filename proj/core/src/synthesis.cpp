#include "ares/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ares/errors.hpp"

namespace ares {

namespace {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < m; ++k) {
    std::swap(idx[k], idx[k + rng.uniform_index(n - k)]);
  }
  idx.resize(m);
  return idx;
}

}  // namespace

Vector mix_pair(std::span<const double> fi, std::span<const double> fj, double lambda) {
  if (fi.size() != fj.size()) throw InvalidInput("mix_pair: dimension mismatch");
  Vector out(fi.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = lambda * fi[k] + (1.0 - lambda) * fj[k];
  return out;
}

ExpandedSet expand_features(std::span<const Vector> feats, double alpha2, std::size_t n_mix,
                            Rng& rng) {
  const std::size_t n = feats.size();
  if (n < 2) throw InvalidInput("expand_features: need at least 2 feature vectors");
  ExpandedSet xs;
  xs.points.reserve(n_mix);
  xs.sources.reserve(n_mix);
  for (std::size_t s = 0; s < n_mix; ++s) {
    const std::size_t i = rng.uniform_index(n);
    std::size_t j = rng.uniform_index(n - 1);
    if (j >= i) ++j;
    const double lambda = beta_sample(alpha2, rng);
    xs.points.push_back(mix_pair(feats[i], feats[j], lambda));
    xs.sources.push_back({i, j, lambda});
  }
  return xs;
}

ExpandedSet identity_expansion(std::span<const Vector> feats) {
  ExpandedSet xs;
  xs.points.assign(feats.begin(), feats.end());
  xs.sources.reserve(feats.size());
  for (std::size_t i = 0; i < feats.size(); ++i) xs.sources.push_back({i, i, 1.0});
  return xs;
}

GaussianModel estimate_outlier_region(const ExpandedSet& xs, double ridge_scale) {
  return fit_gaussian(xs.points, ridge_scale);
}

std::vector<double> pool_loglik(const ExpandedSet& xs, const GaussianModel& model) {
  std::vector<double> ll(xs.points.size());
  for (std::size_t n = 0; n < ll.size(); ++n) ll[n] = gaussian_logpdf(model, xs.points[n]);
  return ll;
}

std::size_t order_statistic_index(std::span<const double> values, std::size_t t) {
  if (t < 1 || t > values.size()) {
    throw InvalidParameter("order statistic: rank " + std::to_string(t) + " outside [1, " +
                           std::to_string(values.size()) + "]");
  }
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto nth = idx.begin() + static_cast<std::ptrdiff_t>(t - 1);
  std::nth_element(idx.begin(), nth, idx.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b] || (values[a] == values[b] && a < b);
  });
  return *nth;
}

EpsilonSelection select_epsilon(std::span<const double> loglik, std::size_t m, std::size_t t,
                                Rng& rng) {
  const std::size_t effective_m = std::min(m, loglik.size());
  if (t < 1 || t > effective_m) {
    throw InvalidParameter("select_epsilon: t=" + std::to_string(t) + " must lie in [1, " +
                           std::to_string(effective_m) + "]");
  }
  EpsilonSelection sel;
  sel.sampled = sample_without_replacement(loglik.size(), effective_m, rng);
  std::vector<double> sampled_ll(effective_m);
  for (std::size_t k = 0; k < effective_m; ++k) sampled_ll[k] = loglik[sel.sampled[k]];
  sel.epsilon = sampled_ll[order_statistic_index(sampled_ll, t)];
  return sel;
}

EpsilonSelection select_epsilon(const ExpandedSet& xs, const GaussianModel& model,
                                std::size_t m, std::size_t t, Rng& rng) {
  return select_epsilon(pool_loglik(xs, model), m, t, rng);
}

OutlierBatch sample_virtual_outliers(const ExpandedSet& xs, std::span<const double> loglik,
                                     double epsilon, std::size_t count,
                                     std::span<const std::size_t> candidates) {
  if (loglik.size() != xs.points.size()) {
    throw InvalidInput("sample_virtual_outliers: log-density count does not match the pool");
  }
  std::vector<std::size_t> pool;
  if (candidates.empty()) {
    pool.resize(xs.points.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
  } else {
    pool.assign(candidates.begin(), candidates.end());
  }
  std::vector<std::size_t> below;
  for (std::size_t idx : pool) {
    if (loglik[idx] < epsilon) below.push_back(idx);
  }
  if (below.size() < count) {
    const std::size_t deficit = count - below.size();
    throw SynthesisUnderflow("virtual outlier synthesis: " + std::to_string(below.size()) +
                                 " candidates below epsilon, " + std::to_string(count) +
                                 " requested (deficit " + std::to_string(deficit) + ")",
                             deficit);
  }
  std::sort(below.begin(), below.end(), [&](std::size_t a, std::size_t b) {
    return loglik[a] < loglik[b] || (loglik[a] == loglik[b] && a < b);
  });
  below.resize(count);

  OutlierBatch batch;
  batch.epsilon = epsilon;
  batch.indices = std::move(below);
  for (std::size_t idx : batch.indices) {
    batch.points.push_back(xs.points[idx]);
    batch.loglik.push_back(loglik[idx]);
  }
  return batch;
}

OutlierBatch sample_virtual_outliers(const ExpandedSet& xs, const GaussianModel& model,
                                     double epsilon, std::size_t count) {
  return sample_virtual_outliers(xs, pool_loglik(xs, model), epsilon, count);
}

OutlierBatch random_virtual_outliers(const ExpandedSet& xs, std::size_t count, Rng& rng) {
  if (count > xs.points.size()) {
    throw SynthesisUnderflow("random virtual outliers: pool smaller than the request",
                             count - xs.points.size());
  }
  OutlierBatch batch;
  batch.epsilon = INFINITY;
  batch.indices = sample_without_replacement(xs.points.size(), count, rng);
  for (std::size_t idx : batch.indices) batch.points.push_back(xs.points[idx]);
  batch.loglik.assign(count, NAN);
  return batch;
}

ExpandedSet gaussian_candidates(const GaussianModel& model, std::size_t n, Rng& rng) {
  ExpandedSet xs;
  xs.points.reserve(n);
  for (std::size_t k = 0; k < n; ++k) xs.points.push_back(model.sample(rng));
  // No feature provenance: record self-references with lambda = 1.
  xs.sources.assign(n, MixRecord{});
  for (std::size_t k = 0; k < n; ++k) xs.sources[k] = {k, k, 1.0};
  return xs;
}

}  // namespace ares
