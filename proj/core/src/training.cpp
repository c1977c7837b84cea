#include "ares/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ares/errors.hpp"
#include "ares/synthesis.hpp"

namespace ares {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (total_epochs < 1) throw InvalidParameter("train: total_epochs must be >= 1");
  if (pretrain_epochs < 0 || pretrain_epochs > total_epochs) {
    throw InvalidParameter("train: pretrain_epochs must lie in [0, total_epochs]");
  }
  if (batch_size < 2) throw InvalidParameter("train: batch size must be >= 2");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) {
    throw InvalidParameter("train: need lr_start >= lr_end > 0");
  }
  if (!(beta >= 0.0)) throw InvalidParameter("train: beta must be >= 0");
  escape.validate();
  if (!(alpha2 > 0.0)) throw InvalidParameter("train: alpha2 must be > 0");
  if (t_rank < 1 || t_rank > m_candidates) {
    throw InvalidParameter("train: need 1 <= t_rank <= m_candidates");
  }
  if (feature_dim == 0) throw InvalidParameter("train: feature_dim must be positive");
  if (!(nce_temperature > 0.0)) throw InvalidParameter("train: nce_temperature must be > 0");
  if (!(score_var_floor >= kVarianceFloor)) {
    throw InvalidParameter("train: score_var_floor must be >= 1e-12");
  }
  if (!(grad_clip >= 0.0)) throw InvalidParameter("train: grad_clip must be >= 0");
}

double cosine_lr(std::size_t step, std::size_t total_steps, double lr_start, double lr_end) {
  if (total_steps < 1 || step > total_steps) {
    throw InvalidParameter("cosine_lr: step " + std::to_string(step) + " outside [0, " +
                           std::to_string(total_steps) + "]");
  }
  const double phase = std::numbers::pi * static_cast<double>(step) /
                       static_cast<double>(total_steps);
  return lr_end + 0.5 * (lr_start - lr_end) * (1.0 + std::cos(phase));
}

void sgd_step(MlpNetwork& net, GradientTape& tape, double lr) {
  if (tape.grad().size() != net.params().size()) {
    throw ContractViolation("sgd_step: gradient tape shape does not match the network");
  }
  auto params = net.mutable_params();
  const auto grad = tape.grad();
  for (std::size_t k = 0; k < params.size(); ++k) params[k] -= lr * grad[k];
  tape.zero();
}

double clip_gradient(GradientTape& tape, double max_norm) {
  double sq = 0.0;
  for (double g : tape.grad()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : tape.grad()) g *= scale;
  }
  return norm;
}

StepResult step_objective(const MlpNetwork& net, std::span<const LabeledVector> batch,
                          const VirtualOutliers* virt, const ObjectiveOptions& opt,
                          GradientTape* tape) {
  const std::size_t b = batch.size();
  if (b == 0) throw InvalidInput("step_objective: empty batch");
  const double inv_b = 1.0 / static_cast<double>(b);

  StepResult res;
  std::vector<FeatureTrace> traces;
  std::vector<Vector> logits;
  traces.reserve(b);
  logits.reserve(b);
  double cls = 0.0;
  for (const auto& s : batch) {
    traces.push_back(trace_features(net, s.x));
    logits.push_back(classify(net, traces.back().features()));
    cls += cross_entropy_loss(logits.back(), s.y);
    if (predict(logits.back()) == static_cast<std::size_t>(s.y)) ++res.correct;
  }
  cls *= inv_b;
  res.loss.cls = cls;
  res.loss.beta = opt.beta;
  res.loss.total = cls;

  const bool joint = virt != nullptr && virt->size() > 0;
  std::vector<EnergyGradient> id_energy;
  std::vector<EnergyGradient> ood_energy;
  std::vector<Vector> v_feats;
  std::vector<FeatureTrace> src_i;
  std::vector<FeatureTrace> src_j;
  Vector d_id;
  Vector d_ood;
  double d_head_w = 0.0;
  double d_head_b = 0.0;

  if (joint) {
    id_energy.reserve(b);
    for (const auto& z : logits) {
      id_energy.push_back(energy_score_grad(net, z));
      res.id_scores.push_back(id_energy.back().value);
    }
    const std::size_t nv = virt->size();
    for (std::size_t j = 0; j < nv; ++j) {
      if (virt->differentiable()) {
        src_i.push_back(trace_features(net, virt->source_i[j]));
        src_j.push_back(trace_features(net, virt->source_j[j]));
        v_feats.push_back(mix_pair(src_i.back().features(), src_j.back().features(),
                                   virt->lambda[j]));
      } else {
        v_feats.push_back(virt->features[j]);
      }
      ood_energy.push_back(energy_score_grad(net, classify(net, v_feats.back())));
      res.ood_scores.push_back(ood_energy.back().value);
    }

    switch (opt.kind) {
      case LossKind::jsd: {
        const ScoreLoss sl = jsd_discrimination_loss_grad(res.id_scores, res.ood_scores, opt.score_var_floor);
        res.loss.dis = sl.value;
        res.loss.total = total_loss(cls, sl.value, opt.beta);
        const double scale = opt.beta == 0.0 ? 0.0 : total_loss_d_dis(sl.value, opt.beta);
        d_id = sl.d_id;
        d_ood = sl.d_ood;
        for (auto& g : d_id) g *= scale;
        for (auto& g : d_ood) g *= scale;
        break;
      }
      case LossKind::ce: {
        const auto h = net.head();
        const HeadLoss hl = ce_logistic_loss_grad(res.id_scores, res.ood_scores, {h[0], h[1]});
        res.loss.dis = hl.scores.value;
        res.loss.total = cls + opt.beta * hl.scores.value;
        d_id = hl.scores.d_id;
        d_ood = hl.scores.d_ood;
        for (auto& g : d_id) g *= opt.beta;
        for (auto& g : d_ood) g *= opt.beta;
        d_head_w = opt.beta * hl.d_weight;
        d_head_b = opt.beta * hl.d_bias;
        break;
      }
      case LossKind::nce: {
        const ScoreLoss sl =
            nce_loss_grad(res.id_scores, res.ood_scores, {1.0, 0.0}, opt.nce_temperature);
        res.loss.dis = sl.value;
        res.loss.total = cls + opt.beta * sl.value;
        d_id = sl.d_id;
        d_ood = sl.d_ood;
        for (auto& g : d_id) g *= opt.beta;
        for (auto& g : d_ood) g *= opt.beta;
        break;
      }
    }
  }

  if (tape == nullptr) return res;

  for (std::size_t i = 0; i < b; ++i) {
    Vector dz = cross_entropy_grad(logits[i], batch[i].y);
    for (auto& g : dz) g *= inv_b;
    if (joint) {
      for (std::size_t k = 0; k < dz.size(); ++k) dz[k] += d_id[i] * id_energy[i].d_logits[k];
      accumulate_energy_grad(net, id_energy[i].d_free, d_id[i], *tape);
    }
    const Vector d_feat = backward_classifier(net, traces[i].features(), dz, *tape);
    backward_features(net, traces[i], d_feat, *tape);
  }
  if (joint) {
    for (std::size_t j = 0; j < v_feats.size(); ++j) {
      Vector dz = ood_energy[j].d_logits;
      for (auto& g : dz) g *= d_ood[j];
      accumulate_energy_grad(net, ood_energy[j].d_free, d_ood[j], *tape);
      const Vector d_v = backward_classifier(net, v_feats[j], dz, *tape);
      if (virt->differentiable()) {
        const double lam = virt->lambda[j];
        Vector gi(d_v.size());
        Vector gj(d_v.size());
        for (std::size_t k = 0; k < d_v.size(); ++k) {
          gi[k] = lam * d_v[k];
          gj[k] = (1.0 - lam) * d_v[k];
        }
        backward_features(net, src_i[j], gi, *tape);
        backward_features(net, src_j[j], gj, *tape);
      }
    }
    auto gh = tape->slice(net.head_info());
    gh[0] += d_head_w;
    gh[1] += d_head_b;
  }
  return res;
}

GradCheckResult gradient_check(const MlpNetwork& net, std::span<const LabeledVector> batch,
                               const VirtualOutliers* virt, const ObjectiveOptions& opt,
                               double h, std::span<const std::size_t> params, double floor) {
  GradientTape tape(net);
  step_objective(net, batch, virt, opt, &tape);
  MlpNetwork probe = net;
  std::vector<std::size_t> all;
  if (params.empty()) {
    all.resize(net.params().size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    params = all;
  }
  GradCheckResult worst;
  worst.max_rel_error = -1.0;
  for (std::size_t k : params) {
    const double orig = net.params()[k];
    probe.mutable_params()[k] = orig + h;
    const double up = step_objective(probe, batch, virt, opt, nullptr).loss.total;
    probe.mutable_params()[k] = orig - h;
    const double down = step_objective(probe, batch, virt, opt, nullptr).loss.total;
    probe.mutable_params()[k] = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double analytic = tape.grad()[k];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), floor});
    if (rel > worst.max_rel_error) worst = {rel, k, analytic, numeric};
  }
  worst.max_rel_error = std::max(worst.max_rel_error, 0.0);
  return worst;
}

MlpNetwork initial_network(const TrainConfig& cfg, std::size_t input_dim, std::size_t classes) {
  Rng init_rng = Rng(cfg.seed).child("init");
  return MlpNetwork::he_init({input_dim, cfg.hidden, cfg.feature_dim, classes}, init_rng);
}

namespace {

// Candidate pool for one rebuild: expanded features of `sources`, the
// fitted Gaussian and every candidate's log-density.
struct Pool {
  ExpandedSet xs;
  std::vector<double> loglik;
  bool provenance = true;
  std::vector<std::size_t> qualifying;  // fixed_pool rule only
};

Pool build_pool(const MlpNetwork& net, std::span<const LabeledVector> sources,
                const TrainConfig& cfg, std::size_t n_mix, Rng& rng, double& t_expand,
                double& t_estimate) {
  auto t0 = Clock::now();
  std::vector<Vector> feats;
  feats.reserve(sources.size());
  for (const auto& s : sources) feats.push_back(forward_features(net, s.x));
  Pool pool;
  if (cfg.stage_mask.expansion) {
    Rng mix_rng = rng.child("mix");
    pool.xs = expand_features(feats, cfg.alpha2, n_mix, mix_rng);
  } else {
    pool.xs = identity_expansion(feats);
  }
  t_expand += seconds_since(t0);

  t0 = Clock::now();
  if (cfg.stage_mask.estimation) {
    const GaussianModel model = estimate_outlier_region(pool.xs, cfg.ridge_scale);
    if (cfg.vos_style_gaussian_sampling) {
      Rng vos_rng = rng.child("vos");
      pool.xs = gaussian_candidates(model, pool.xs.points.size(), vos_rng);
      pool.provenance = false;
    }
    pool.loglik = pool_loglik(pool.xs, model);
    if (cfg.epsilon_rule == EpsilonRule::fixed_pool) {
      Rng eps_rng = rng.child("epsilon");
      const std::size_t m = std::min(cfg.m_candidates, pool.loglik.size());
      const auto sel = select_epsilon(pool.loglik, m, std::min(cfg.t_rank, m), eps_rng);
      for (std::size_t k = 0; k < pool.loglik.size(); ++k) {
        if (pool.loglik[k] < sel.epsilon) pool.qualifying.push_back(k);
      }
      if (pool.qualifying.empty()) {
        throw SynthesisUnderflow("fixed pool: no candidate lies strictly below epsilon", 1);
      }
    }
  }
  t_estimate += seconds_since(t0);
  return pool;
}

OutlierBatch pick_outliers(const Pool& pool, const TrainConfig& cfg, std::size_t count,
                           Rng& rng) {
  if (!cfg.stage_mask.estimation) return random_virtual_outliers(pool.xs, count, rng);
  if (cfg.epsilon_rule == EpsilonRule::fixed_pool) {
    OutlierBatch batch;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t idx = pool.qualifying[rng.uniform_index(pool.qualifying.size())];
      batch.indices.push_back(idx);
      batch.points.push_back(pool.xs.points[idx]);
      batch.loglik.push_back(pool.loglik[idx]);
    }
    return batch;
  }
  const std::size_t m = std::min(cfg.m_candidates, pool.loglik.size());
  if (m < count) {
    throw SynthesisUnderflow("candidate sample of " + std::to_string(m) +
                                 " is smaller than the batch of " + std::to_string(count),
                             count - m);
  }
  if (m == count) {
    // Every sampled candidate is an outlier; no threshold separates them.
    const auto sel = select_epsilon(pool.loglik, m, count, rng);
    return sample_virtual_outliers(pool.xs, pool.loglik, INFINITY, count, sel.sampled);
  }
  // epsilon is the (B+1)-th lowest, so exactly the bottom B lie strictly below it.
  const auto sel = select_epsilon(pool.loglik, m, count + 1, rng);
  std::size_t below = 0;
  for (std::size_t idx : sel.sampled) below += pool.loglik[idx] < sel.epsilon ? 1 : 0;
  if (below >= count) {
    return sample_virtual_outliers(pool.xs, pool.loglik, sel.epsilon, count, sel.sampled);
  }
  // Ties at epsilon: admit the tied values and keep the lowest indices.
  OutlierBatch ob = sample_virtual_outliers(
      pool.xs, pool.loglik, std::nextafter(sel.epsilon, INFINITY), count, sel.sampled);
  ob.epsilon = sel.epsilon;
  return ob;
}

VirtualOutliers to_virtual(const Pool& pool, const OutlierBatch& batch,
                           std::span<const LabeledVector> sources, bool grad_through_fit) {
  VirtualOutliers v;
  if (grad_through_fit && pool.provenance) {
    for (std::size_t idx : batch.indices) {
      const MixRecord& rec = pool.xs.sources[idx];
      v.source_i.push_back(sources[rec.i].x);
      v.source_j.push_back(sources[rec.j].x);
      v.lambda.push_back(rec.lambda);
    }
  } else {
    v.features = batch.points;
  }
  return v;
}

std::string write_last_good(const TrainConfig& cfg, const MlpNetwork& net, int epoch) {
  if (cfg.checkpoint_dir.empty()) return {};
  std::filesystem::create_directories(cfg.checkpoint_dir);
  const std::string path = (std::filesystem::path(cfg.checkpoint_dir) / "last_good.json").string();
  save_checkpoint(path, {net, epoch, cfg.seed});
  return path;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const DataBundle& data,
                  const std::optional<Checkpoint>& resume, const TrainHooks& hooks) {
  cfg.validate();
  if (data.id_train.size() < 2) throw InvalidInput("train: need at least 2 training points");
  if (cfg.stage_mask.escape && data.aux.empty()) {
    throw InvalidInput("train: escape stage enabled but the auxiliary set is empty");
  }
  const std::size_t dim = data.id_train.front().x.size();
  const std::size_t classes = data.meta.classes;

  const Rng root(cfg.seed);
  MlpNetwork net = initial_network(cfg, dim, classes);
  int start_epoch = 0;
  if (resume) {
    if (resume->net.shape().input_dim != dim || resume->net.shape().classes != classes) {
      throw InvalidInput("train: checkpoint shape does not match the data");
    }
    net = resume->net;
    start_epoch = resume->epoch;
  }
  GradientTape tape(net);

  const std::size_t n = data.id_train.size();
  const std::size_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
  const std::size_t total_steps = batches * static_cast<std::size_t>(cfg.total_epochs);
  const ObjectiveOptions opt{cfg.loss_kind, cfg.beta, cfg.nce_temperature, cfg.score_var_floor};

  TrainResult result{net, {}, {}};
  std::vector<LabeledVector>& dstar = result.surrogate;
  auto escape_into = [&](int epoch, double& t_escape) {
    const auto t0 = Clock::now();
    if (cfg.stage_mask.escape) {
      Rng esc = root.child("escape");
      if (cfg.reescape_each_epoch) esc = esc.child(static_cast<std::uint64_t>(epoch));
      dstar = escape_dataset(data.id_train, data.aux, cfg.escape, esc);
    } else {
      dstar = data.id_train;
    }
    t_escape += seconds_since(t0);
  };

  double first_escape_time = 0.0;
  escape_into(0, first_escape_time);

  std::vector<std::size_t> order(n);
  std::vector<LabeledVector> batch;
  for (int epoch = start_epoch; epoch < cfg.total_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const auto epoch_t0 = Clock::now();
    if (epoch == start_epoch) rec.time_escape = first_escape_time;
    if (cfg.reescape_each_epoch && epoch != 0) escape_into(epoch, rec.time_escape);

    const MlpNetwork epoch_start_net = net;
    const auto epoch_u = static_cast<std::uint64_t>(epoch);
    Rng shuffle_rng = root.child("shuffle").child(epoch_u);
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[shuffle_rng.uniform_index(k)]);

    const bool joint = epoch >= cfg.pretrain_epochs && cfg.beta > 0.0;
    const Rng expansion_rng = root.child("expansion").child(epoch_u);
    const Rng virtual_rng = root.child("epsilon-sample").child(epoch_u);
    const std::size_t whole_pool_mix = cfg.n_mix == 0 ? dstar.size() : cfg.n_mix;

    std::optional<Pool> pool;
    if (joint && !cfg.per_batch_expansion && !cfg.rebuild_per_step) {
      Rng r = expansion_rng;
      pool = build_pool(net, dstar, cfg, whole_pool_mix, r, rec.time_expansion, rec.time_estimation);
    }

    double sum_cls = 0.0;
    double sum_dis = 0.0;
    double sum_total = 0.0;
    std::size_t correct = 0;
    rec.lr = cosine_lr(static_cast<std::size_t>(epoch) * batches, total_steps, cfg.lr_start,
                       cfg.lr_end);

    for (std::size_t bi = 0; bi < batches; ++bi) {
      const std::size_t lo = bi * cfg.batch_size;
      const std::size_t hi = std::min(n, lo + cfg.batch_size);
      batch.clear();
      for (std::size_t k = lo; k < hi; ++k) batch.push_back(dstar[order[k]]);
      const std::size_t step = static_cast<std::size_t>(epoch) * batches + bi;
      const double lr = cosine_lr(step, total_steps, cfg.lr_start, cfg.lr_end);

      std::optional<VirtualOutliers> virt;
      if (joint) {
        try {
          Rng step_rng = virtual_rng.child(static_cast<std::uint64_t>(bi));
          std::span<const LabeledVector> sources = dstar;
          if (cfg.per_batch_expansion) {
            Rng r = expansion_rng.child(static_cast<std::uint64_t>(bi));
            const std::size_t mix = cfg.n_mix == 0 ? 4 * batch.size() : cfg.n_mix;
            pool = build_pool(net, batch, cfg, mix, r, rec.time_expansion, rec.time_estimation);
            sources = batch;
          } else if (cfg.rebuild_per_step) {
            Rng r = expansion_rng.child(static_cast<std::uint64_t>(bi));
            pool = build_pool(net, dstar, cfg, whole_pool_mix, r, rec.time_expansion,
                              rec.time_estimation);
          }
          const auto t0 = Clock::now();
          const OutlierBatch ob = pick_outliers(*pool, cfg, batch.size(), step_rng);
          virt = to_virtual(*pool, ob, sources, cfg.grad_through_fit);
          rec.time_estimation += seconds_since(t0);
        } catch (const SynthesisUnderflow& e) {
          throw SynthesisUnderflow("epoch " + std::to_string(epoch) + " batch " +
                                       std::to_string(bi) + ": " + e.what(),
                                   e.deficit());
        }
      }

      const auto t0 = Clock::now();
      if (cfg.debug_gradcheck && step % 10 == 0) {
        const auto check = gradient_check(net, batch, virt ? &*virt : nullptr, opt);
        const double tol = joint ? 1e-3 : 1e-4;
        if (check.max_rel_error > tol) {
          throw ContractViolation("gradient check failed at step " + std::to_string(step) +
                                  ": relative error " + fmt17(check.max_rel_error) +
                                  " on parameter " + std::to_string(check.worst_param));
        }
      }
      const StepResult sr = step_objective(net, batch, virt ? &*virt : nullptr, opt, &tape);
      const double grad_norm = clip_gradient(tape, cfg.grad_clip);
      if (!std::isfinite(sr.loss.total) || !std::isfinite(grad_norm)) {
        const std::string path = write_last_good(cfg, epoch_start_net, epoch);
        const char* what = std::isfinite(sr.loss.total) ? "gradient" : "loss";
        throw DivergenceAbort(std::string("non-finite ") + what + " at epoch " +
                                  std::to_string(epoch) + " batch " + std::to_string(bi) +
                                  (path.empty() ? "" : "; last good checkpoint: " + path),
                              path);
      }
      sgd_step(net, tape, lr);
      if (joint) rec.time_divergence += seconds_since(t0);

      const double w = static_cast<double>(batch.size());
      sum_cls += sr.loss.cls * w;
      sum_dis += sr.loss.dis * w;
      sum_total += sr.loss.total * w;
      correct += sr.correct;
    }

    const double nd = static_cast<double>(n);
    rec.cls_loss = sum_cls / nd;
    rec.dis_loss = sum_dis / nd;
    rec.total_loss = sum_total / nd;
    rec.surrogate_accuracy = static_cast<double>(correct) / nd;
    std::size_t clean_correct = 0;
    for (const auto& p : data.id_train) {
      if (predict(classify(net, forward_features(net, p.x))) == static_cast<std::size_t>(p.y)) {
        ++clean_correct;
      }
    }
    rec.train_accuracy = static_cast<double>(clean_correct) / nd;
    rec.time_epoch = seconds_since(epoch_t0);
    result.log.epochs.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  result.net = std::move(net);
  return result;
}

std::vector<Vector> synthesize_outliers(const MlpNetwork& net, const TrainConfig& cfg,
                                        const DataBundle& data, std::size_t count) {
  cfg.validate();
  if (data.id_train.size() < 2) throw InvalidInput("synthesize_outliers: need at least 2 points");
  const Rng root(cfg.seed);
  std::vector<LabeledVector> dstar = data.id_train;
  if (cfg.stage_mask.escape) {
    if (data.aux.empty()) throw InvalidInput("synthesize_outliers: auxiliary set is empty");
    Rng esc = root.child("escape");
    dstar = escape_dataset(data.id_train, data.aux, cfg.escape, esc);
  }
  Rng r = root.child("report");
  double t_expand = 0.0;
  double t_estimate = 0.0;
  const Pool pool = build_pool(net, dstar, cfg, cfg.n_mix == 0 ? dstar.size() : cfg.n_mix, r,
                               t_expand, t_estimate);
  Rng pick = r.child("pick");
  return pick_outliers(pool, cfg, std::min(count, pool.xs.points.size() - 1), pick).points;
}

void write_train_log_csv(const std::string& path, const TrainLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "epoch,lr,cls_loss,dis_loss,total_loss,train_accuracy,surrogate_accuracy\n";
  for (const auto& r : log.epochs) {
    out << r.epoch << ',' << fmt17(r.lr) << ',' << fmt17(r.cls_loss) << ',' << fmt17(r.dis_loss)
        << ',' << fmt17(r.total_loss) << ',' << fmt17(r.train_accuracy) << ','
        << fmt17(r.surrogate_accuracy) << '\n';
  }
}

TrainLog read_train_log_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  TrainLog log;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    EpochRecord r;
    char comma = 0;
    std::istringstream ls(line);
    ls >> r.epoch >> comma >> r.lr >> comma >> r.cls_loss >> comma >> r.dis_loss >> comma >>
        r.total_loss >> comma >> r.train_accuracy >> comma >> r.surrogate_accuracy;
    if (!ls) throw InvalidInput(path + ": malformed train log row");
    log.epochs.push_back(r);
  }
  return log;
}

void write_stage_times_csv(const std::string& path, const TrainLog& log) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "epoch,escape_s,expansion_s,estimation_s,divergence_s,epoch_s\n";
  for (const auto& r : log.epochs) {
    out << r.epoch << ',' << fmt17(r.time_escape) << ',' << fmt17(r.time_expansion) << ','
        << fmt17(r.time_estimation) << ',' << fmt17(r.time_divergence) << ','
        << fmt17(r.time_epoch) << '\n';
  }
}

std::string progress_line(const EpochRecord& rec) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "epoch=%d cls=%.6g dis=%.6g lr=%.6g acc=%.4f", rec.epoch,
                rec.cls_loss, rec.dis_loss, rec.lr, rec.train_accuracy);
  return buf;
}

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::jsd: return "jsd";
    case LossKind::ce: return "ce";
    case LossKind::nce: return "nce";
  }
  return "?";
}

std::string stage_mask_name(const StageMask& mask) {
  std::string name;
  auto add = [&name](const char* part) {
    if (!name.empty()) name += '+';
    name += part;
  };
  if (!mask.escape) add("no-escape");
  if (!mask.expansion) add("no-expansion");
  if (!mask.estimation) add("no-estimation");
  return name.empty() ? "none" : name;
}

std::vector<std::pair<std::string, std::string>> config_entries(const TrainConfig& cfg) {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::string hidden;
  for (std::size_t w : cfg.hidden) hidden += (hidden.empty() ? "" : ":") + std::to_string(w);
  return {
      {"train.total_epochs", std::to_string(cfg.total_epochs)},
      {"train.pretrain_epochs", std::to_string(cfg.pretrain_epochs)},
      {"train.batch", std::to_string(cfg.batch_size)},
      {"train.lr_start", fmt17(cfg.lr_start)},
      {"train.lr_end", fmt17(cfg.lr_end)},
      {"train.beta", fmt17(cfg.beta)},
      {"escape.alpha1", fmt17(cfg.escape.alpha1)},
      {"escape.max_iters", std::to_string(cfg.escape.max_iters)},
      {"escape.p_mix", fmt17(cfg.escape.p_mix)},
      {"escape.reescape_each_epoch", b(cfg.reescape_each_epoch)},
      {"train.alpha2", fmt17(cfg.alpha2)},
      {"train.m_candidates", std::to_string(cfg.m_candidates)},
      {"train.t_rank", std::to_string(cfg.t_rank)},
      {"train.seed", std::to_string(cfg.seed)},
      {"train.loss", to_string(cfg.loss_kind)},
      {"train.stage_mask", stage_mask_name(cfg.stage_mask)},
      {"train.hidden", hidden},
      {"train.feature_dim", std::to_string(cfg.feature_dim)},
      {"train.n_mix", std::to_string(cfg.n_mix)},
      {"train.ridge_scale", fmt17(cfg.ridge_scale)},
      {"train.nce_temperature", fmt17(cfg.nce_temperature)},
      {"train.epsilon_rule", cfg.epsilon_rule == EpsilonRule::per_batch ? "per_batch" : "fixed_pool"},
      {"train.rebuild_per_step", b(cfg.rebuild_per_step)},
      {"train.per_batch_expansion", b(cfg.per_batch_expansion)},
      {"train.vos_style_gaussian_sampling", b(cfg.vos_style_gaussian_sampling)},
      {"train.grad_through_fit", b(cfg.grad_through_fit)},
      {"train.debug_gradcheck", b(cfg.debug_gradcheck)},
      {"train.score_var_floor", fmt17(cfg.score_var_floor)},
      {"train.grad_clip", fmt17(cfg.grad_clip)},
  };
}

}  // namespace ares
