#include "ares/escape.hpp"

#include <algorithm>
#include <numbers>

#include "ares/errors.hpp"

namespace ares {

void EscapeConfig::validate() const {
  if (!(alpha1 > 0.0)) throw InvalidParameter("escape: alpha1 must be > 0");
  if (max_iters < 1 || max_iters > 4) throw InvalidParameter("escape: max_iters must be in [1, 4]");
  if (!(p_mix >= 0.0 && p_mix <= 1.0)) throw InvalidParameter("escape: p_mix must be in [0, 1]");
}

namespace {

EscapeStep draw_mix(const EscapeConfig& cfg, std::size_t aux_size, Rng& rng) {
  EscapeStep step;
  step.kind = EscapeStep::Kind::mix;
  step.aux_index = rng.uniform_index(aux_size);
  step.lambda = beta_sample(cfg.alpha1, rng);
  return step;
}

}  // namespace

EscapePlan draw_escape_plan(const EscapeConfig& cfg, std::size_t aux_size, std::size_t dim,
                            Rng& rng) {
  if (aux_size == 0) throw InvalidInput("escape: auxiliary set is empty");
  if (dim < 2) throw InvalidInput("escape: need d >= 2 for transforms");
  const std::size_t steps = 1 + rng.uniform_index(static_cast<std::size_t>(cfg.max_iters));
  EscapePlan plan;
  bool mixed = false;
  for (std::size_t s = 0; s < steps; ++s) {
    if (rng.uniform() < cfg.p_mix) {
      plan.push_back(draw_mix(cfg, aux_size, rng));
      mixed = true;
      continue;
    }
    EscapeStep step;
    step.kind = EscapeStep::Kind::transform;
    step.transform = static_cast<TransformKind>(rng.uniform_index(3));
    step.i = rng.uniform_index(dim);
    step.j = rng.uniform_index(dim - 1);
    if (step.j >= step.i) ++step.j;
    step.angle = 2.0 * std::numbers::pi * rng.uniform();
    plan.push_back(step);
  }
  if (!mixed) plan.push_back(draw_mix(cfg, aux_size, rng));
  return plan;
}

Vector apply_escape_plan(std::span<const double> x, std::span<const AuxVector> aux,
                         const EscapePlan& plan, std::span<const double> center) {
  Vector cur(x.begin(), x.end());
  for (const auto& step : plan) {
    if (step.kind == EscapeStep::Kind::mix) {
      const Vector& frac = aux[step.aux_index].x;
      if (frac.size() != cur.size()) throw InvalidInput("escape: aux dimension mismatch");
      for (std::size_t k = 0; k < cur.size(); ++k) {
        cur[k] = step.lambda * cur[k] + (1.0 - step.lambda) * frac[k];
      }
      continue;
    }
    switch (step.transform) {
      case TransformKind::rotate2d:
        cur = rotate_pair(cur, center, step.i, step.j, step.angle);
        break;
      case TransformKind::flip:
        cur = flip_coordinate(cur, center, step.i);
        break;
      case TransformKind::permute:
        cur = swap_coordinates(cur, step.i, step.j);
        break;
    }
  }
  return cur;
}

LabeledVector escape_instance(const LabeledVector& x, std::span<const AuxVector> aux,
                              const EscapeConfig& cfg, std::span<const double> center,
                              Rng& rng) {
  const EscapePlan plan = draw_escape_plan(cfg, aux.size(), x.x.size(), rng);
  return {apply_escape_plan(x.x, aux, plan, center), x.y};
}

Vector mean_point(std::span<const LabeledVector> d) {
  if (d.empty()) throw InvalidInput("mean_point: empty dataset");
  Vector mean(d.front().x.size(), 0.0);
  for (const auto& p : d) {
    for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += p.x[k];
  }
  for (auto& m : mean) m /= static_cast<double>(d.size());
  return mean;
}

std::vector<Vector> class_means(std::span<const LabeledVector> d) {
  const Vector overall = mean_point(d);
  int max_label = 0;
  for (const auto& p : d) {
    if (p.y < 0) throw InvalidInput("class_means: negative label");
    max_label = std::max(max_label, p.y);
  }
  std::vector<Vector> sums(static_cast<std::size_t>(max_label) + 1, Vector(overall.size(), 0.0));
  std::vector<std::size_t> counts(sums.size(), 0);
  for (const auto& p : d) {
    auto& s = sums[static_cast<std::size_t>(p.y)];
    for (std::size_t k = 0; k < s.size(); ++k) s[k] += p.x[k];
    ++counts[static_cast<std::size_t>(p.y)];
  }
  for (std::size_t c = 0; c < sums.size(); ++c) {
    if (counts[c] == 0) {
      sums[c] = overall;
      continue;
    }
    for (auto& v : sums[c]) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

std::vector<LabeledVector> escape_dataset(std::span<const LabeledVector> d,
                                          std::span<const AuxVector> aux,
                                          const EscapeConfig& cfg, Rng& rng) {
  cfg.validate();
  if (aux.empty()) throw InvalidInput("escape: auxiliary set is empty");
  const std::vector<Vector> centers = class_means(d);
  std::vector<LabeledVector> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    Rng instance_rng = rng.child(static_cast<std::uint64_t>(i));
    const Vector& center = centers[static_cast<std::size_t>(d[i].y)];
    out.push_back(escape_instance(d[i], aux, cfg, center, instance_rng));
  }
  return out;
}

}  // namespace ares
