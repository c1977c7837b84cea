#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ares/numerics.hpp"
#include "ares/rng.hpp"
#include "ares/synthdata.hpp"

namespace ares {

/// Escape stage settings. At least one fractal mix is applied to every
/// instance whatever p_mix says.
struct EscapeConfig {
  double alpha1 = 3.0;
  int max_iters = 4;   // in [1, 4]
  double p_mix = 0.5;  // per-step probability of a fractal mix over a transform

  void validate() const;
};

/// One concrete escape step with all of its random choices resolved.
struct EscapeStep {
  enum class Kind { mix, transform };
  Kind kind = Kind::mix;
  // mix
  std::size_t aux_index = 0;
  double lambda = 1.0;
  // transform
  TransformKind transform = TransformKind::rotate2d;
  std::size_t i = 0;
  std::size_t j = 1;
  double angle = 0.0;
};

using EscapePlan = std::vector<EscapeStep>;

/// Draws the step count uniformly from [1, max_iters], then mix-or-transform
/// per step; appends a forced mix when none was drawn.
EscapePlan draw_escape_plan(const EscapeConfig& cfg, std::size_t aux_size, std::size_t dim,
                            Rng& rng);

/// Runs the plan. Mix steps compute lambda·x + (1 − lambda)·aux.
Vector apply_escape_plan(std::span<const double> x, std::span<const AuxVector> aux,
                         const EscapePlan& plan, std::span<const double> center);

LabeledVector escape_instance(const LabeledVector& x, std::span<const AuxVector> aux,
                              const EscapeConfig& cfg, std::span<const double> center,
                              Rng& rng);

/// Surrogate set D*: element i comes from element i of `d` using the child
/// stream rng.child(i). Transforms act about the mean of the instance's own
/// class, so a rotation or flip keeps the point inside its class region.
std::vector<LabeledVector> escape_dataset(std::span<const LabeledVector> d,
                                          std::span<const AuxVector> aux,
                                          const EscapeConfig& cfg, Rng& rng);

Vector mean_point(std::span<const LabeledVector> d);
/// Mean of each label 0..max(y); a label with no points gets the overall mean.
std::vector<Vector> class_means(std::span<const LabeledVector> d);

}  // namespace ares
