#include "ares/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "ares/errors.hpp"

namespace ares {

namespace {

void require_scores(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.empty() || b.empty()) throw InvalidInput(std::string(what) + ": empty score list");
}

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Vector energy_scores(const MlpNetwork& net, std::span<const Vector> points) {
  Vector out;
  out.reserve(points.size());
  for (const auto& x : points) out.push_back(energy_score(net, classify(net, forward_features(net, x))));
  return out;
}

Vector energy_scores(const MlpNetwork& net, std::span<const LabeledVector> points) {
  Vector out;
  out.reserve(points.size());
  for (const auto& p : points) {
    out.push_back(energy_score(net, classify(net, forward_features(net, p.x))));
  }
  return out;
}

double choose_gamma(std::span<const double> id_scores) {
  if (id_scores.size() < kMinGammaScores) {
    throw InvalidInput("choose_gamma: need at least " + std::to_string(kMinGammaScores) +
                       " ID scores, got " + std::to_string(id_scores.size()));
  }
  Vector sorted(id_scores.begin(), id_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double gamma = sorted.front();
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && sorted[k] == sorted[k - 1]) continue;
    // n − k scores are ≥ sorted[k]; keep going while that is ≥ 95%.
    if (20 * (n - k) < 19 * n) break;
    gamma = sorted[k];
  }
  return gamma;
}

int discriminate(double score, double gamma) { return score >= gamma ? 1 : 0; }

double fpr95(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_scores(id_scores, ood_scores, "fpr95");
  const double gamma = choose_gamma(id_scores);
  std::size_t accepted = 0;
  for (double s : ood_scores) accepted += static_cast<std::size_t>(discriminate(s, gamma));
  return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
  require_scores(id_scores, ood_scores, "auroc");
  Vector ood(ood_scores.begin(), ood_scores.end());
  std::sort(ood.begin(), ood.end());
  // Twice the Mann-Whitney U, kept integral so the result is exact.
  std::uint64_t twice_u = 0;
  for (double s : id_scores) {
    const auto lo = std::lower_bound(ood.begin(), ood.end(), s);
    const auto hi = std::upper_bound(lo, ood.end(), s);
    twice_u += 2 * static_cast<std::uint64_t>(lo - ood.begin()) + static_cast<std::uint64_t>(hi - lo);
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(id_scores.size()) * static_cast<double>(ood.size()));
}

StageTimes summarize_times(const TrainLog& log) {
  StageTimes t;
  if (log.epochs.empty()) return t;
  for (const auto& r : log.epochs) {
    t.escape += r.time_escape;
    t.expansion += r.time_expansion;
    t.estimation += r.time_estimation;
    t.divergence += r.time_divergence;
    t.epoch += r.time_epoch;
  }
  const double n = static_cast<double>(log.epochs.size());
  t.expansion /= n;
  t.estimation /= n;
  t.divergence /= n;
  t.epoch /= n;
  return t;
}

RunReport evaluate(const MlpNetwork& net, const DataBundle& bundle) {
  if (bundle.ood_eval.empty()) throw InvalidInput("evaluate: bundle has no OOD set");
  if (bundle.id_test.empty()) throw InvalidInput("evaluate: bundle has no ID test set");
  RunReport report;
  report.data_seed = bundle.meta.seed;
  const Vector id = energy_scores(net, bundle.id_test);
  report.gamma = choose_gamma(id);

  std::size_t correct = 0;
  for (const auto& p : bundle.id_test) {
    if (predict(classify(net, forward_features(net, p.x))) == static_cast<std::size_t>(p.y)) {
      ++correct;
    }
  }
  report.id_test_accuracy = static_cast<double>(correct) / static_cast<double>(bundle.id_test.size());

  report.average.name = "average";
  for (const auto& set : bundle.ood_eval) {
    const Vector ood = energy_scores(net, set.points);
    SetMetrics m;
    m.name = set.name;
    m.fpr95 = fpr95(id, ood);
    m.auroc = auroc(id, ood);
    m.auroc_oriented = std::max(m.auroc, 1.0 - m.auroc);
    report.average.fpr95 += m.fpr95;
    report.average.auroc += m.auroc;
    report.average.auroc_oriented += m.auroc_oriented;
    report.sets.push_back(std::move(m));
  }
  const double k = static_cast<double>(report.sets.size());
  report.average.fpr95 /= k;
  report.average.auroc /= k;
  report.average.auroc_oriented /= k;
  return report;
}

namespace {

struct Variant {
  std::string name;
  TrainConfig cfg;
};

RunReport run_variant(const Variant& v, const DataBundle& bundle) {
  try {
    const TrainResult tr = train(v.cfg, bundle);
    RunReport r = evaluate(tr.net, bundle);
    r.variant = v.name;
    r.seed = v.cfg.seed;
    r.config = config_entries(v.cfg);
    r.times = summarize_times(tr.log);
    return r;
  } catch (const std::exception& e) {
    RunReport r;
    r.variant = v.name;
    r.seed = v.cfg.seed;
    r.data_seed = bundle.meta.seed;
    r.config = config_entries(v.cfg);
    r.error = e.what();
    for (const auto& set : bundle.ood_eval) r.sets.push_back({set.name, NAN, NAN, NAN});
    r.average = {"average", NAN, NAN, NAN};
    r.gamma = NAN;
    r.id_test_accuracy = NAN;
    return r;
  }
}

}  // namespace

std::vector<RunReport> run_ablation_suite(const TrainConfig& base, const DataBundle& bundle,
                                          const AblationSelection& selection,
                                          std::size_t threads) {
  // Unique training runs; rows refer to them by index.
  std::vector<Variant> runs{{"all", base}};
  std::vector<std::pair<std::string, std::size_t>> rows;
  auto add_run = [&runs](std::string name, TrainConfig cfg) {
    runs.push_back({std::move(name), std::move(cfg)});
    return runs.size() - 1;
  };

  if (selection.stages) {
    rows.emplace_back("stage/all", 0);
    TrainConfig c = base;
    c.stage_mask.escape = false;
    rows.emplace_back("stage/no-escape", add_run("stage/no-escape", c));
    c = base;
    c.stage_mask.expansion = false;
    rows.emplace_back("stage/no-expansion", add_run("stage/no-expansion", c));
    c = base;
    c.stage_mask.estimation = false;
    rows.emplace_back("stage/no-estimation", add_run("stage/no-estimation", c));
  }
  if (selection.losses) {
    const char* names[] = {"loss/jsd", "loss/ce", "loss/nce"};
    const LossKind kinds[] = {LossKind::jsd, LossKind::ce, LossKind::nce};
    for (int k = 0; k < 3; ++k) {
      if (kinds[k] == base.loss_kind) {
        rows.emplace_back(names[k], 0);
        continue;
      }
      TrainConfig c = base;
      c.loss_kind = kinds[k];
      rows.emplace_back(names[k], add_run(names[k], c));
    }
  }
  if (selection.epochs) {
    rows.emplace_back("epochs/" + std::to_string(base.total_epochs), 0);
    TrainConfig c = base;
    c.total_epochs = 2 * base.total_epochs;
    c.pretrain_epochs = 2 * base.pretrain_epochs;
    const std::string name = "epochs/" + std::to_string(c.total_epochs);
    rows.emplace_back(name, add_run(name, c));
  }

  std::vector<RunReport> results(runs.size());
  std::vector<bool> needed(runs.size(), false);
  for (const auto& row : rows) needed[row.second] = true;

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) return;
      if (needed[i]) results[i] = run_variant(runs[i], bundle);
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, runs.size()));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<RunReport> out;
  out.reserve(rows.size());
  for (const auto& [name, idx] : rows) {
    RunReport r = results[idx];
    r.variant = name;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

nlohmann::ordered_json report_json(const RunReport& r) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["variant"] = r.variant;
  j["seed"] = r.seed;
  j["data_seed"] = r.data_seed;
  j["gamma"] = num(r.gamma);
  j["id_test_accuracy"] = num(r.id_test_accuracy);
  auto sets = nlohmann::ordered_json::array();
  for (const auto& s : r.sets) {
    sets.push_back({{"name", s.name},
                    {"fpr95", num(s.fpr95)},
                    {"auroc", num(s.auroc)},
                    {"auroc_oriented", num(s.auroc_oriented)}});
  }
  j["sets"] = std::move(sets);
  j["average"] = {{"fpr95", num(r.average.fpr95)},
                  {"auroc", num(r.average.auroc)},
                  {"auroc_oriented", num(r.average.auroc_oriented)}};
  j["stage_seconds"] = {{"escape", r.times.escape},
                        {"expansion", r.times.expansion},
                        {"estimation", r.times.estimation},
                        {"divergence", r.times.divergence},
                        {"epoch", r.times.epoch}};
  auto cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.config) cfg[k] = v;
  j["config"] = std::move(cfg);
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string report_to_json(const RunReport& report) { return report_json(report).dump(1) + "\n"; }

std::string reports_to_json(std::span<const RunReport> reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(1) + "\n";
}

std::string reports_to_csv(std::span<const RunReport> reports) {
  std::string out = "variant";
  if (!reports.empty()) {
    for (const auto& s : reports.front().sets) out += "," + s.name + "_fpr95," + s.name + "_auroc";
  }
  out += ",avg_fpr95,avg_auroc,avg_auroc_oriented,gamma,id_accuracy,"
         "escape_s,expansion_s,estimation_s,divergence_s,epoch_s,error\n";
  for (const auto& r : reports) {
    out += csv_field(r.variant);
    for (const auto& s : r.sets) out += "," + fmt17(s.fpr95) + "," + fmt17(s.auroc);
    out += "," + fmt17(r.average.fpr95) + "," + fmt17(r.average.auroc) + "," +
           fmt17(r.average.auroc_oriented) + "," + fmt17(r.gamma) + "," +
           fmt17(r.id_test_accuracy);
    out += "," + fmt17(r.times.escape) + "," + fmt17(r.times.expansion) + "," +
           fmt17(r.times.estimation) + "," + fmt17(r.times.divergence) + "," +
           fmt17(r.times.epoch);
    out += "," + csv_field(r.error) + "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace ares
