#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ares/numerics.hpp"
#include "ares/rng.hpp"

namespace ares {

/// input -> hidden... -> feature_dim (all ReLU) -> classes (affine).
struct MlpShape {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden = {64, 64};
  std::size_t feature_dim = 16;
  std::size_t classes = 2;

  bool operator==(const MlpShape&) const = default;
};

/// Named slice of the flat parameter vector. Matrices are row-major
/// [rows, cols] = [out, in]; vectors have cols == 1.
struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;
  std::size_t offset = 0;

  std::size_t size() const noexcept { return rows * cols; }
};

/// Feature extractor + linear classifier + positive energy weights, stored
/// in one flat parameter vector. Energy weights are exp of free parameters.
/// Two extra scalars hold the logistic head used by the cross-entropy
/// ablation loss.
class MlpNetwork {
 public:
  explicit MlpNetwork(MlpShape shape);

  /// He-scaled normal weights, zero biases, unit energy weights.
  static MlpNetwork he_init(MlpShape shape, Rng& rng);

  const MlpShape& shape() const noexcept { return shape_; }
  std::size_t ext_layer_count() const noexcept { return ext_.size(); }

  std::span<const double> ext_weight(std::size_t l) const { return view(ext_[l].weight); }
  std::span<const double> ext_bias(std::size_t l) const { return view(ext_[l].bias); }
  std::span<const double> cls_weight() const { return view(cls_weight_); }
  std::span<const double> cls_bias() const { return view(cls_bias_); }
  std::span<const double> energy_free() const { return view(energy_free_); }
  std::span<const double> head() const { return view(head_); }
  Vector energy_weights() const;

  // Mutable access bumps the version so cached traces go stale.
  std::span<double> mutable_ext_weight(std::size_t l) { return mutable_view(ext_[l].weight); }
  std::span<double> mutable_ext_bias(std::size_t l) { return mutable_view(ext_[l].bias); }
  std::span<double> mutable_cls_weight() { return mutable_view(cls_weight_); }
  std::span<double> mutable_cls_bias() { return mutable_view(cls_bias_); }
  std::span<double> mutable_energy_free() { return mutable_view(energy_free_); }
  std::span<double> mutable_head() { return mutable_view(head_); }

  std::span<const double> params() const noexcept { return params_; }
  std::span<double> mutable_params() {
    ++version_;
    return params_;
  }

  const std::vector<TensorInfo>& tensors() const noexcept { return tensors_; }
  const TensorInfo& ext_weight_info(std::size_t l) const { return tensors_[ext_[l].weight]; }
  const TensorInfo& ext_bias_info(std::size_t l) const { return tensors_[ext_[l].bias]; }
  const TensorInfo& cls_weight_info() const { return tensors_[cls_weight_]; }
  const TensorInfo& cls_bias_info() const { return tensors_[cls_bias_]; }
  const TensorInfo& energy_free_info() const { return tensors_[energy_free_]; }
  const TensorInfo& head_info() const { return tensors_[head_]; }

  std::uint64_t version() const noexcept { return version_; }

  bool operator==(const MlpNetwork& other) const {
    return shape_ == other.shape_ && params_ == other.params_;
  }

 private:
  struct Layer {
    std::size_t weight;
    std::size_t bias;
  };

  std::size_t add_tensor(std::string name, std::size_t rows, std::size_t cols);
  std::span<const double> view(std::size_t t) const {
    return std::span<const double>(params_).subspan(tensors_[t].offset, tensors_[t].size());
  }
  std::span<double> mutable_view(std::size_t t) {
    ++version_;
    return std::span<double>(params_).subspan(tensors_[t].offset, tensors_[t].size());
  }

  MlpShape shape_;
  std::vector<TensorInfo> tensors_;
  std::vector<Layer> ext_;
  std::size_t cls_weight_ = 0;
  std::size_t cls_bias_ = 0;
  std::size_t energy_free_ = 0;
  std::size_t head_ = 0;
  std::vector<double> params_;
  std::uint64_t version_ = 0;
};

/// Gradient accumulators shaped like a network's parameter vector.
class GradientTape {
 public:
  explicit GradientTape(const MlpNetwork& net) : grad_(net.params().size(), 0.0) {}

  void zero();
  std::span<double> grad() noexcept { return grad_; }
  std::span<const double> grad() const noexcept { return grad_; }
  std::span<double> slice(const TensorInfo& t) {
    return std::span<double>(grad_).subspan(t.offset, t.size());
  }

 private:
  std::vector<double> grad_;
};

/// Activations of every extractor layer for one input, tagged with the
/// network version that produced them.
struct FeatureTrace {
  std::vector<Vector> acts;  // acts[0] = input, acts.back() = features
  const MlpNetwork* owner = nullptr;
  std::uint64_t version = 0;

  const Vector& features() const { return acts.back(); }
};

Vector forward_features(const MlpNetwork& net, std::span<const double> x);
FeatureTrace trace_features(const MlpNetwork& net, std::span<const double> x);
Vector classify(const MlpNetwork& net, std::span<const double> feat);

/// −log Σ_k w_k·exp(z_k), shifted by max z for overflow safety.
double energy_score(const MlpNetwork& net, std::span<const double> logits);

struct EnergyGradient {
  double value = 0.0;
  Vector d_logits;  // ∂E/∂z_k = −π_k
  Vector d_free;    // ∂E/∂(log w_k) = −π_k
};
EnergyGradient energy_score_grad(const MlpNetwork& net, std::span<const double> logits);

Vector softmax(std::span<const double> logits);
double cross_entropy_loss(std::span<const double> logits, int y);
/// ∂CE/∂z = softmax(z) − onehot(y).
Vector cross_entropy_grad(std::span<const double> logits, int y);
/// Argmax with ties broken towards the lowest index.
std::size_t predict(std::span<const double> logits);

/// Adds ∂L/∂(energy free params) to the tape.
void accumulate_energy_grad(const MlpNetwork& net, std::span<const double> d_free,
                            double scale, GradientTape& tape);

/// Back-propagates ∂L/∂logits through the classifier, accumulating its
/// parameter gradients. Returns ∂L/∂feat.
Vector backward_classifier(const MlpNetwork& net, std::span<const double> feat,
                           std::span<const double> d_logits, GradientTape& tape);

/// Back-propagates ∂L/∂features through the extractor. Throws
/// ContractViolation if the trace is stale or from another network.
void backward_features(const MlpNetwork& net, const FeatureTrace& trace,
                       std::span<const double> d_feat, GradientTape& tape);

// Checkpoints are JSON: shape header plus one {name, shape, data} record per
// tensor. Doubles are printed in shortest round-trip form, so save/load is
// bit-exact.
struct Checkpoint {
  MlpNetwork net;
  int epoch = 0;  // epochs completed
  std::uint64_t seed = 0;
};

std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ares
