#include "ares/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ares/errors.hpp"

namespace ares {

MlpNetwork::MlpNetwork(MlpShape shape) : shape_(std::move(shape)) {
  if (shape_.input_dim == 0 || shape_.feature_dim == 0 || shape_.classes == 0) {
    throw InvalidParameter("mlp: dimensions must be positive");
  }
  std::vector<std::size_t> dims{shape_.input_dim};
  dims.insert(dims.end(), shape_.hidden.begin(), shape_.hidden.end());
  dims.push_back(shape_.feature_dim);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l + 1] == 0) throw InvalidParameter("mlp: hidden widths must be positive");
    const std::string prefix = "ext" + std::to_string(l);
    Layer layer{};
    layer.weight = add_tensor(prefix + ".weight", dims[l + 1], dims[l]);
    layer.bias = add_tensor(prefix + ".bias", dims[l + 1], 1);
    ext_.push_back(layer);
  }
  cls_weight_ = add_tensor("cls.weight", shape_.classes, shape_.feature_dim);
  cls_bias_ = add_tensor("cls.bias", shape_.classes, 1);
  energy_free_ = add_tensor("energy.log_w", shape_.classes, 1);
  head_ = add_tensor("head.affine", 2, 1);
}

std::size_t MlpNetwork::add_tensor(std::string name, std::size_t rows, std::size_t cols) {
  TensorInfo info{std::move(name), rows, cols, params_.size()};
  params_.resize(params_.size() + info.size(), 0.0);
  tensors_.push_back(std::move(info));
  return tensors_.size() - 1;
}

MlpNetwork MlpNetwork::he_init(MlpShape shape, Rng& rng) {
  MlpNetwork net(std::move(shape));
  auto fill = [&rng](std::span<double> w, std::size_t fan_in) {
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w) v = scale * rng.normal();
  };
  for (std::size_t l = 0; l < net.ext_layer_count(); ++l) {
    fill(net.mutable_ext_weight(l), net.ext_weight_info(l).cols);
  }
  fill(net.mutable_cls_weight(), net.cls_weight_info().cols);
  return net;
}

Vector MlpNetwork::energy_weights() const {
  Vector w(energy_free().begin(), energy_free().end());
  for (auto& v : w) v = std::exp(v);
  return w;
}

void GradientTape::zero() { std::fill(grad_.begin(), grad_.end(), 0.0); }

namespace {

// y = W·x + b for a row-major [out, in] weight.
Vector affine(std::span<const double> w, std::span<const double> b, std::span<const double> x) {
  const std::size_t out = b.size();
  const std::size_t in = x.size();
  Vector y(b.begin(), b.end());
  for (std::size_t r = 0; r < out; ++r) {
    const double* row = w.data() + r * in;
    double s = 0.0;
    for (std::size_t c = 0; c < in; ++c) s += row[c] * x[c];
    y[r] += s;
  }
  return y;
}

void check_tape(const MlpNetwork& net, const GradientTape& tape) {
  if (tape.grad().size() != net.params().size()) {
    throw ContractViolation("gradient tape shape does not match the network");
  }
}

double log_weighted_sum_exp(std::span<const double> logits, std::span<const double> log_w,
                            Vector* weights_out) {
  double m = -INFINITY;
  for (double z : logits) m = std::max(m, z);
  Vector terms(logits.size());
  double s = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    terms[k] = std::exp(log_w[k] + logits[k] - m);
    s += terms[k];
  }
  if (weights_out != nullptr) {
    for (auto& t : terms) t /= s;
    *weights_out = std::move(terms);
  }
  return m + std::log(s);
}

}  // namespace

FeatureTrace trace_features(const MlpNetwork& net, std::span<const double> x) {
  if (x.size() != net.shape().input_dim) {
    throw InvalidInput("forward_features: expected input dimension " +
                       std::to_string(net.shape().input_dim) + ", got " +
                       std::to_string(x.size()));
  }
  FeatureTrace trace;
  trace.owner = &net;
  trace.version = net.version();
  trace.acts.reserve(net.ext_layer_count() + 1);
  trace.acts.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < net.ext_layer_count(); ++l) {
    Vector y = affine(net.ext_weight(l), net.ext_bias(l), trace.acts.back());
    for (auto& v : y) v = std::max(v, 0.0);
    trace.acts.push_back(std::move(y));
  }
  return trace;
}

Vector forward_features(const MlpNetwork& net, std::span<const double> x) {
  return std::move(trace_features(net, x).acts.back());
}

Vector classify(const MlpNetwork& net, std::span<const double> feat) {
  if (feat.size() != net.shape().feature_dim) {
    throw InvalidInput("classify: expected feature dimension " +
                       std::to_string(net.shape().feature_dim) + ", got " +
                       std::to_string(feat.size()));
  }
  return affine(net.cls_weight(), net.cls_bias(), feat);
}

double energy_score(const MlpNetwork& net, std::span<const double> logits) {
  if (logits.size() != net.shape().classes) throw InvalidInput("energy_score: logit count mismatch");
  return -log_weighted_sum_exp(logits, net.energy_free(), nullptr);
}

EnergyGradient energy_score_grad(const MlpNetwork& net, std::span<const double> logits) {
  if (logits.size() != net.shape().classes) throw InvalidInput("energy_score: logit count mismatch");
  EnergyGradient g;
  Vector pi;
  g.value = -log_weighted_sum_exp(logits, net.energy_free(), &pi);
  for (auto& v : pi) v = -v;
  g.d_logits = pi;
  g.d_free = std::move(pi);
  return g;
}

Vector softmax(std::span<const double> logits) {
  const Vector zeros(logits.size(), 0.0);
  Vector p;
  log_weighted_sum_exp(logits, zeros, &p);
  return p;
}

double cross_entropy_loss(std::span<const double> logits, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= logits.size()) {
    throw InvalidInput("cross_entropy_loss: label " + std::to_string(y) + " out of range");
  }
  const Vector zeros(logits.size(), 0.0);
  return log_weighted_sum_exp(logits, zeros, nullptr) - logits[static_cast<std::size_t>(y)];
}

Vector cross_entropy_grad(std::span<const double> logits, int y) {
  if (y < 0 || static_cast<std::size_t>(y) >= logits.size()) {
    throw InvalidInput("cross_entropy_loss: label " + std::to_string(y) + " out of range");
  }
  Vector g = softmax(logits);
  g[static_cast<std::size_t>(y)] -= 1.0;
  return g;
}

std::size_t predict(std::span<const double> logits) {
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

void accumulate_energy_grad(const MlpNetwork& net, std::span<const double> d_free,
                            double scale, GradientTape& tape) {
  check_tape(net, tape);
  auto g = tape.slice(net.energy_free_info());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] += scale * d_free[k];
}

Vector backward_classifier(const MlpNetwork& net, std::span<const double> feat,
                           std::span<const double> d_logits, GradientTape& tape) {
  check_tape(net, tape);
  const std::size_t p = net.shape().feature_dim;
  const std::size_t k = net.shape().classes;
  if (feat.size() != p || d_logits.size() != k) {
    throw ContractViolation("backward_classifier: shape mismatch");
  }
  auto gw = tape.slice(net.cls_weight_info());
  auto gb = tape.slice(net.cls_bias_info());
  const auto w = net.cls_weight();
  Vector d_feat(p, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    const double g = d_logits[r];
    if (g == 0.0) continue;
    gb[r] += g;
    for (std::size_t c = 0; c < p; ++c) {
      gw[r * p + c] += g * feat[c];
      d_feat[c] += g * w[r * p + c];
    }
  }
  return d_feat;
}

void backward_features(const MlpNetwork& net, const FeatureTrace& trace,
                       std::span<const double> d_feat, GradientTape& tape) {
  check_tape(net, tape);
  if (trace.owner != &net || trace.version != net.version()) {
    throw ContractViolation("backward_features: trace is stale or belongs to another network");
  }
  if (d_feat.size() != net.shape().feature_dim) {
    throw ContractViolation("backward_features: gradient dimension mismatch");
  }
  Vector g(d_feat.begin(), d_feat.end());
  for (std::size_t l = net.ext_layer_count(); l-- > 0;) {
    const Vector& out = trace.acts[l + 1];
    const Vector& in = trace.acts[l];
    for (std::size_t r = 0; r < g.size(); ++r) {
      if (!(out[r] > 0.0)) g[r] = 0.0;
    }
    auto gw = tape.slice(net.ext_weight_info(l));
    auto gb = tape.slice(net.ext_bias_info(l));
    const auto w = net.ext_weight(l);
    const std::size_t cols = in.size();
    Vector d_in(cols, 0.0);
    for (std::size_t r = 0; r < g.size(); ++r) {
      const double gr = g[r];
      if (gr == 0.0) continue;
      gb[r] += gr;
      for (std::size_t c = 0; c < cols; ++c) {
        gw[r * cols + c] += gr * in[c];
        d_in[c] += gr * w[r * cols + c];
      }
    }
    g = std::move(d_in);
  }
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  const MlpNetwork& net = ckpt.net;
  nlohmann::ordered_json j;
  j["format"] = "ares-mlp";
  j["version"] = 1;
  j["epoch"] = ckpt.epoch;
  j["seed"] = ckpt.seed;
  j["shape"] = {{"input_dim", net.shape().input_dim},
                {"hidden", net.shape().hidden},
                {"feature_dim", net.shape().feature_dim},
                {"classes", net.shape().classes}};
  auto tensors = nlohmann::ordered_json::array();
  for (const auto& t : net.tensors()) {
    const auto data = net.params().subspan(t.offset, t.size());
    tensors.push_back({{"name", t.name},
                       {"shape", {t.rows, t.cols}},
                       {"data", std::vector<double>(data.begin(), data.end())}});
  }
  j["tensors"] = std::move(tensors);
  return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("checkpoint: ") + e.what());
  }
  if (j.value("format", "") != "ares-mlp") throw InvalidInput("checkpoint: not an ares-mlp file");
  try {
    MlpShape shape;
    const auto& s = j.at("shape");
    shape.input_dim = s.at("input_dim").get<std::size_t>();
    shape.hidden = s.at("hidden").get<std::vector<std::size_t>>();
    shape.feature_dim = s.at("feature_dim").get<std::size_t>();
    shape.classes = s.at("classes").get<std::size_t>();
    Checkpoint ckpt{MlpNetwork(shape), j.value("epoch", 0), j.value("seed", std::uint64_t{0})};
    const auto& tensors = j.at("tensors");
    if (tensors.size() != ckpt.net.tensors().size()) {
      throw InvalidInput("checkpoint: tensor count does not match the shape header");
    }
    auto params = ckpt.net.mutable_params();
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& info = ckpt.net.tensors()[i];
      const auto& rec = tensors[i];
      const auto dims = rec.at("shape").get<std::vector<std::size_t>>();
      if (rec.at("name").get<std::string>() != info.name || dims.size() != 2 ||
          dims[0] != info.rows || dims[1] != info.cols) {
        throw InvalidInput("checkpoint: tensor '" + info.name + "' does not match the shape header");
      }
      const auto data = rec.at("data").get<std::vector<double>>();
      if (data.size() != info.size()) {
        throw InvalidInput("checkpoint: tensor '" + info.name + "' has wrong element count");
      }
      std::copy(data.begin(), data.end(), params.begin() + static_cast<std::ptrdiff_t>(info.offset));
    }
    return ckpt;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << checkpoint_to_json(ckpt);
  if (!out) throw Error("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace ares
