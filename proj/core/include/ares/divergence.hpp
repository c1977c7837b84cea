#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ares/numerics.hpp"

namespace ares {

inline constexpr double kReciprocalGuard = 1e-8;
inline constexpr double kDefaultNceTemperature = 0.1;

/// Gaussian summary of a batch of energy scores (population moments).
struct EnergyDist {
  Gauss1d dist;
  std::size_t count = 0;
};

/// Mean and population variance, the variance floored at `var_floor`.
EnergyDist fit_energy_distribution(std::span<const double> scores,
                                   double var_floor = kVarianceFloor);

/// Loss value with its gradient in every input score.
struct ScoreLoss {
  double value = 0.0;
  Vector d_id;
  Vector d_ood;
};

/// JSD between the Gaussians fitted to the two score lists.
double jsd_discrimination_loss(std::span<const double> id_scores,
                               std::span<const double> ood_scores,
                               double var_floor = kVarianceFloor);
ScoreLoss jsd_discrimination_loss_grad(std::span<const double> id_scores,
                                       std::span<const double> ood_scores,
                                       double var_floor = kVarianceFloor);

/// cls + beta / (dis + kReciprocalGuard). The discrimination term is
/// maximized by minimizing its reciprocal.
double total_loss(double cls, double dis, double beta);
/// ∂total/∂dis
double total_loss_d_dis(double dis, double beta);

struct LossBreakdown {
  double cls = 0.0;
  double dis = 0.0;
  double total = 0.0;
  double beta = 0.0;
};

/// Energy -> probability of being an inlier, sigmoid(weight·E + bias).
struct LogisticHead {
  double weight = 0.0;
  double bias = 0.0;

  double probability(double energy) const;
};

/// Binary cross-entropy, inliers labelled 1 and virtual outliers 0, averaged
/// over both sets.
double ce_logistic_loss(std::span<const double> id_scores, std::span<const double> ood_scores,
                        const LogisticHead& head);

struct HeadLoss {
  ScoreLoss scores;
  double d_weight = 0.0;
  double d_bias = 0.0;
};
HeadLoss ce_logistic_loss_grad(std::span<const double> id_scores,
                               std::span<const double> ood_scores, const LogisticHead& head);

/// Plain gradient descent on the head alone; scores are held fixed.
LogisticHead fit_logistic_head(std::span<const double> id_scores,
                               std::span<const double> ood_scores, int iterations = 2000,
                               double learning_rate = 0.5);

/// Contrastive loss on scalar scores. Scores are first mapped through the
/// head's affine part, s = weight·E + bias (pass {1, 0} for raw energies).
/// Each inlier is its own positive (similarity 0) against every outlier,
/// similarity −|s_i − s_j| / temperature:
///   mean_i log(1 + Σ_j exp(−|s_i − s_j| / temperature)).
double nce_loss(std::span<const double> id_scores, std::span<const double> ood_scores,
                const LogisticHead& head, double temperature = kDefaultNceTemperature);
ScoreLoss nce_loss_grad(std::span<const double> id_scores, std::span<const double> ood_scores,
                        const LogisticHead& head, double temperature = kDefaultNceTemperature);

struct HistogramRow {
  double left = 0.0;
  double right = 0.0;
  std::size_t count_id = 0;
  std::size_t count_ood = 0;
  std::size_t count_virtual = 0;
};

inline constexpr std::size_t kHistogramBins = 50;

/// Uniform bins over the joint range of all three score lists. The last
/// bin is closed on the right.
std::vector<HistogramRow> energy_histogram(std::span<const double> id_scores,
                                           std::span<const double> ood_scores,
                                           std::span<const double> virtual_scores,
                                           std::size_t bins = kHistogramBins);

void write_histogram_csv(const std::string& path, std::span<const HistogramRow> rows);

}  // namespace ares
