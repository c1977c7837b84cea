#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ares/numerics.hpp"
#include "ares/rng.hpp"

namespace ares {

/// Provenance of one expanded point: lambda·f_i + (1 − lambda)·f_j.
struct MixRecord {
  std::size_t i = 0;
  std::size_t j = 0;
  double lambda = 1.0;
};

/// Feature-space mixup pool. points[n] was built from sources[n].
struct ExpandedSet {
  std::vector<Vector> points;
  std::vector<MixRecord> sources;
};

Vector mix_pair(std::span<const double> fi, std::span<const double> fj, double lambda);

/// n_mix convex combinations of distinct feature pairs (i ≠ j uniform),
/// lambda ~ Beta(alpha2, alpha2).
ExpandedSet expand_features(std::span<const Vector> feats, double alpha2, std::size_t n_mix,
                            Rng& rng);

/// The pool used when expansion is disabled: every feature as-is.
ExpandedSet identity_expansion(std::span<const Vector> feats);

/// Class-agnostic Gaussian over every point of the pool.
GaussianModel estimate_outlier_region(const ExpandedSet& xs,
                                      double ridge_scale = kDefaultRidgeScale);

/// Log-density of every pool point under `model`.
std::vector<double> pool_loglik(const ExpandedSet& xs, const GaussianModel& model);

/// Position of the t-th smallest value (1-based), ordering by (value, index).
std::size_t order_statistic_index(std::span<const double> values, std::size_t t);

struct EpsilonSelection {
  double epsilon = 0.0;               // log-density threshold
  std::vector<std::size_t> sampled;   // pool indices drawn without replacement
};

/// Draws m pool points without replacement (m clamped to the pool size) and
/// returns the t-th smallest log-density among them.
EpsilonSelection select_epsilon(const ExpandedSet& xs, const GaussianModel& model,
                                std::size_t m, std::size_t t, Rng& rng);
/// Same, over precomputed log-densities.
EpsilonSelection select_epsilon(std::span<const double> loglik, std::size_t m, std::size_t t,
                                Rng& rng);

struct OutlierBatch {
  std::vector<Vector> points;
  std::vector<std::size_t> indices;  // into the pool
  std::vector<double> loglik;
  double epsilon = 0.0;
};

/// The `count` lowest-density members of the candidate pool (all of xs when
/// `candidates` is empty). Every one must lie strictly below epsilon, else
/// SynthesisUnderflow names the deficit.
OutlierBatch sample_virtual_outliers(const ExpandedSet& xs, std::span<const double> loglik,
                                     double epsilon, std::size_t count,
                                     std::span<const std::size_t> candidates = {});
OutlierBatch sample_virtual_outliers(const ExpandedSet& xs, const GaussianModel& model,
                                     double epsilon, std::size_t count);

/// Ablation without the estimation stage: `count` pool points chosen
/// uniformly without replacement.
OutlierBatch random_virtual_outliers(const ExpandedSet& xs, std::size_t count, Rng& rng);

/// Candidates drawn from the fitted Gaussian itself (VOS-style pool).
ExpandedSet gaussian_candidates(const GaussianModel& model, std::size_t n, Rng& rng);

}  // namespace ares
