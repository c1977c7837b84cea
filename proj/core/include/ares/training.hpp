#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ares/divergence.hpp"
#include "ares/escape.hpp"
#include "ares/model.hpp"
#include "ares/synthdata.hpp"

namespace ares {

enum class LossKind { jsd, ce, nce };

/// Which synthesis stages run. Disabling one reproduces the matching
/// ablation: no escape => D* := D; no expansion => the pool is the raw
/// features of D*; no estimation => virtual outliers are a uniform draw from
/// the pool.
struct StageMask {
  bool escape = true;
  bool expansion = true;
  bool estimation = true;

  bool operator==(const StageMask&) const = default;
};

/// per_batch: each step samples m candidates and takes the B lowest.
/// fixed_pool: once per pool rebuild, epsilon is the t-th lowest of m
/// sampled candidates and each step draws B points from the qualifying set.
enum class EpsilonRule { per_batch, fixed_pool };

struct TrainConfig {
  int total_epochs = 500;
  int pretrain_epochs = 200;
  std::size_t batch_size = 128;
  double lr_start = 1e-1;
  double lr_end = 1e-6;
  double beta = 0.1;
  EscapeConfig escape;  // alpha1 = 3
  double alpha2 = 2.0;
  std::size_t m_candidates = 10000;
  std::size_t t_rank = 128;
  std::uint64_t seed = 0;
  LossKind loss_kind = LossKind::jsd;
  StageMask stage_mask;

  std::vector<std::size_t> hidden = {64, 64};
  std::size_t feature_dim = 16;

  std::size_t n_mix = 0;  // 0: one mixed point per pool source
  double ridge_scale = kDefaultRidgeScale;
  double nce_temperature = kDefaultNceTemperature;
  EpsilonRule epsilon_rule = EpsilonRule::per_batch;
  bool reescape_each_epoch = false;
  bool rebuild_per_step = false;
  bool per_batch_expansion = false;
  bool vos_style_gaussian_sampling = false;
  bool grad_through_fit = false;
  bool debug_gradcheck = false;
  double score_var_floor = kVarianceFloor;  // floor on fitted energy-score variances
  double grad_clip = 0.0;  // max global gradient L2 norm per step; 0 disables
  std::string checkpoint_dir;  // where the last good checkpoint goes on abort

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double cls_loss = 0.0;
  double dis_loss = 0.0;
  double total_loss = 0.0;
  double train_accuracy = 0.0;      // on D after the epoch
  double surrogate_accuracy = 0.0;  // running, over the epoch's D* batches
  // Wall-clock seconds; excluded from the deterministic log file.
  double time_escape = 0.0;
  double time_expansion = 0.0;
  double time_estimation = 0.0;
  double time_divergence = 0.0;
  double time_epoch = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

void write_train_log_csv(const std::string& path, const TrainLog& log);
TrainLog read_train_log_csv(const std::string& path);
void write_stage_times_csv(const std::string& path, const TrainLog& log);
/// `epoch=… cls=… dis=… lr=…`
std::string progress_line(const EpochRecord& rec);

double cosine_lr(std::size_t step, std::size_t total_steps, double lr_start, double lr_end);

/// θ ← θ − lr·∇θ, then zero the tape.
void sgd_step(MlpNetwork& net, GradientTape& tape, double lr);

/// Rescales the gradient to L2 norm `max_norm` when it is larger. Returns the
/// norm before clipping. max_norm <= 0 leaves the tape untouched.
double clip_gradient(GradientTape& tape, double max_norm);

/// Virtual outliers entering one step. `features` are fixed points in
/// feature space. When `source_i` is filled, each outlier is instead
/// recomputed as lambda·f(source_i) + (1 − lambda)·f(source_j) with the
/// current extractor, and gradients flow back through both inputs.
struct VirtualOutliers {
  std::vector<Vector> features;
  std::vector<Vector> source_i;
  std::vector<Vector> source_j;
  std::vector<double> lambda;

  bool differentiable() const noexcept { return !lambda.empty(); }
  std::size_t size() const noexcept { return differentiable() ? lambda.size() : features.size(); }
};

struct ObjectiveOptions {
  LossKind kind = LossKind::jsd;
  double beta = 0.1;
  double nce_temperature = kDefaultNceTemperature;
  double score_var_floor = kVarianceFloor;
};

struct StepResult {
  LossBreakdown loss;
  std::size_t correct = 0;
  Vector id_scores;
  Vector ood_scores;
};

/// Loss of one training step: mean cross-entropy over the batch, plus the
/// discrimination term when `virt` is given. With a tape, accumulates exact
/// gradients of `loss.total` in every parameter.
StepResult step_objective(const MlpNetwork& net, std::span<const LabeledVector> batch,
                          const VirtualOutliers* virt, const ObjectiveOptions& opt,
                          GradientTape* tape);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_param = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Central differences on `params` (all when empty) against the analytic
/// gradient of step_objective. Relative error is |a − n| / max(|a|, |n|, floor).
GradCheckResult gradient_check(const MlpNetwork& net, std::span<const LabeledVector> batch,
                               const VirtualOutliers* virt, const ObjectiveOptions& opt,
                               double h = 1e-5, std::span<const std::size_t> params = {},
                               double floor = 1e-6);

struct TrainResult {
  MlpNetwork net;
  TrainLog log;
  std::vector<LabeledVector> surrogate;  // D*
};

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Escape once up front, then per epoch: shuffle, classification-only steps
/// during pretraining, joint steps afterwards. `resume` continues from a
/// checkpoint's completed-epoch count.
TrainResult train(const TrainConfig& cfg, const DataBundle& data,
                  const std::optional<Checkpoint>& resume = std::nullopt,
                  const TrainHooks& hooks = {});

/// One batch of virtual outliers (feature space) from the current network,
/// built the way a joint training step builds them. D* is regenerated from
/// cfg.seed, so it matches the set training used.
std::vector<Vector> synthesize_outliers(const MlpNetwork& net, const TrainConfig& cfg,
                                        const DataBundle& data, std::size_t count);

/// Flat key/value description of every setting, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg);

const char* to_string(LossKind kind);
std::string stage_mask_name(const StageMask& mask);

/// Builds the randomly initialised network train() starts from.
MlpNetwork initial_network(const TrainConfig& cfg, std::size_t input_dim, std::size_t classes);

}  // namespace ares
