#include "ares/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "ares/errors.hpp"

namespace ares {

namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double softplus(double a) { return a > 0.0 ? a + std::log1p(std::exp(-a)) : std::log1p(std::exp(a)); }
double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

void require_nonempty(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.empty() || b.empty()) throw InvalidInput(std::string(what) + ": empty score list");
}

// ∂var/∂s_i = 2(s_i − μ)/B unless the floor is active.
void moment_grad(std::span<const double> scores, double d_mu, double d_var, bool floored_var,
                 Vector& out) {
  const double b = static_cast<double>(scores.size());
  const double mu = mean_of(scores);
  out.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = d_mu / b + (floored_var ? 0.0 : d_var * 2.0 * (scores[i] - mu) / b);
  }
}

double raw_variance(std::span<const double> scores, double mu) {
  double s = 0.0;
  for (double x : scores) s += (x - mu) * (x - mu);
  return s / static_cast<double>(scores.size());
}

}  // namespace

EnergyDist fit_energy_distribution(std::span<const double> scores, double var_floor) {
  if (scores.empty()) throw InvalidInput("fit_energy_distribution: empty score list");
  if (!(var_floor >= kVarianceFloor)) {
    throw InvalidParameter("fit_energy_distribution: variance floor below " +
                           std::to_string(kVarianceFloor));
  }
  const double mu = mean_of(scores);
  return {{mu, std::max(raw_variance(scores, mu), var_floor)}, scores.size()};
}

double jsd_discrimination_loss(std::span<const double> id_scores,
                               std::span<const double> ood_scores, double var_floor) {
  require_nonempty(id_scores, ood_scores, "jsd_discrimination_loss");
  return jsd_gauss1d(fit_energy_distribution(id_scores, var_floor).dist,
                     fit_energy_distribution(ood_scores, var_floor).dist);
}

ScoreLoss jsd_discrimination_loss_grad(std::span<const double> id_scores,
                                       std::span<const double> ood_scores, double var_floor) {
  require_nonempty(id_scores, ood_scores, "jsd_discrimination_loss");
  const EnergyDist p = fit_energy_distribution(id_scores, var_floor);
  const EnergyDist q = fit_energy_distribution(ood_scores, var_floor);
  const JsdGradient g = jsd_gauss1d_grad(p.dist, q.dist);
  ScoreLoss out;
  out.value = g.value;
  moment_grad(id_scores, g.d_mu_p, g.d_var_p,
              raw_variance(id_scores, p.dist.mu) < var_floor, out.d_id);
  moment_grad(ood_scores, g.d_mu_q, g.d_var_q,
              raw_variance(ood_scores, q.dist.mu) < var_floor, out.d_ood);
  return out;
}

double total_loss(double cls, double dis, double beta) {
  if (beta == 0.0) return cls;
  return cls + beta / (dis + kReciprocalGuard);
}

double total_loss_d_dis(double dis, double beta) {
  const double denom = dis + kReciprocalGuard;
  return -beta / (denom * denom);
}

double LogisticHead::probability(double energy) const { return sigmoid(weight * energy + bias); }

HeadLoss ce_logistic_loss_grad(std::span<const double> id_scores,
                               std::span<const double> ood_scores, const LogisticHead& head) {
  require_nonempty(id_scores, ood_scores, "ce_logistic_loss");
  const double n = static_cast<double>(id_scores.size() + ood_scores.size());
  HeadLoss out;
  out.scores.d_id.resize(id_scores.size());
  out.scores.d_ood.resize(ood_scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < id_scores.size(); ++i) {
    const double a = head.weight * id_scores[i] + head.bias;
    total += softplus(-a);
    const double da = (sigmoid(a) - 1.0) / n;
    out.scores.d_id[i] = da * head.weight;
    out.d_weight += da * id_scores[i];
    out.d_bias += da;
  }
  for (std::size_t j = 0; j < ood_scores.size(); ++j) {
    const double a = head.weight * ood_scores[j] + head.bias;
    total += softplus(a);
    const double da = sigmoid(a) / n;
    out.scores.d_ood[j] = da * head.weight;
    out.d_weight += da * ood_scores[j];
    out.d_bias += da;
  }
  out.scores.value = total / n;
  return out;
}

double ce_logistic_loss(std::span<const double> id_scores, std::span<const double> ood_scores,
                        const LogisticHead& head) {
  return ce_logistic_loss_grad(id_scores, ood_scores, head).scores.value;
}

LogisticHead fit_logistic_head(std::span<const double> id_scores,
                               std::span<const double> ood_scores, int iterations,
                               double learning_rate) {
  LogisticHead head;
  for (int it = 0; it < iterations; ++it) {
    const HeadLoss g = ce_logistic_loss_grad(id_scores, ood_scores, head);
    head.weight -= learning_rate * g.d_weight;
    head.bias -= learning_rate * g.d_bias;
  }
  return head;
}

ScoreLoss nce_loss_grad(std::span<const double> id_scores, std::span<const double> ood_scores,
                        const LogisticHead& head, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidParameter("nce_loss: temperature must be finite and > 0");
  }
  require_nonempty(id_scores, ood_scores, "nce_loss");
  const double n_id = static_cast<double>(id_scores.size());
  ScoreLoss out;
  out.d_id.assign(id_scores.size(), 0.0);
  out.d_ood.assign(ood_scores.size(), 0.0);
  std::vector<double> terms(ood_scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < id_scores.size(); ++i) {
    const double si = head.weight * id_scores[i] + head.bias;
    double denom = 1.0;
    for (std::size_t j = 0; j < ood_scores.size(); ++j) {
      const double sj = head.weight * ood_scores[j] + head.bias;
      terms[j] = std::exp(-std::abs(si - sj) / temperature);
      denom += terms[j];
    }
    total += std::log(denom);
    for (std::size_t j = 0; j < ood_scores.size(); ++j) {
      const double sj = head.weight * ood_scores[j] + head.bias;
      const double sign = si > sj ? 1.0 : (si < sj ? -1.0 : 0.0);
      // ∂/∂s_i of −|s_i − s_j|/τ is −sign/τ.
      const double g = terms[j] / denom * sign / temperature / n_id;
      out.d_id[i] -= g * head.weight;
      out.d_ood[j] += g * head.weight;
    }
  }
  out.value = total / n_id;
  return out;
}

double nce_loss(std::span<const double> id_scores, std::span<const double> ood_scores,
                const LogisticHead& head, double temperature) {
  return nce_loss_grad(id_scores, ood_scores, head, temperature).value;
}

std::vector<HistogramRow> energy_histogram(std::span<const double> id_scores,
                                           std::span<const double> ood_scores,
                                           std::span<const double> virtual_scores,
                                           std::size_t bins) {
  if (bins == 0) throw InvalidParameter("energy_histogram: need at least one bin");
  double lo = INFINITY;
  double hi = -INFINITY;
  for (auto list : {id_scores, ood_scores, virtual_scores}) {
    for (double s : list) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  }
  if (!std::isfinite(lo)) throw InvalidInput("energy_histogram: no finite scores");
  if (hi == lo) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramRow> rows(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    rows[b].left = lo + width * static_cast<double>(b);
    rows[b].right = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  auto bin_of = [&](double s) {
    const auto b = static_cast<std::size_t>((s - lo) / width);
    return std::min(b, bins - 1);
  };
  for (double s : id_scores) ++rows[bin_of(s)].count_id;
  for (double s : ood_scores) ++rows[bin_of(s)].count_ood;
  for (double s : virtual_scores) ++rows[bin_of(s)].count_virtual;
  return rows;
}

void write_histogram_csv(const std::string& path, std::span<const HistogramRow> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << "bin_left,bin_right,count_id,count_ood,count_virtual\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,", r.left, r.right);
    out << buf << r.count_id << ',' << r.count_ood << ',' << r.count_virtual << '\n';
  }
}

}  // namespace ares
