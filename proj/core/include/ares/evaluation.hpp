#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ares/model.hpp"
#include "ares/synthdata.hpp"
#include "ares/training.hpp"

namespace ares {

/// Energy score of every point.
Vector energy_scores(const MlpNetwork& net, std::span<const Vector> points);
Vector energy_scores(const MlpNetwork& net, std::span<const LabeledVector> points);

inline constexpr std::size_t kMinGammaScores = 20;

/// Largest threshold γ, taken from the scores themselves, such that at least
/// 95% of ID scores satisfy E ≥ γ. When 95% is not hit exactly the result
/// keeps the smallest attainable rate above it.
double choose_gamma(std::span<const double> id_scores);

/// 1 (inlier) iff score ≥ gamma.
int discriminate(double score, double gamma);

/// Fraction of OOD scores accepted by the γ of choose_gamma(id_scores).
double fpr95(std::span<const double> id_scores, std::span<const double> ood_scores);

/// P(ID score > OOD score) with ties counted ½. O((n + m) log m).
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);

struct SetMetrics {
  std::string name;
  double fpr95 = 0.0;
  double auroc = 0.0;
  double auroc_oriented = 0.0;  // max(auroc, 1 − auroc), diagnostic only
};

/// Mean seconds per epoch for each stage; escape is the one-off total.
struct StageTimes {
  double escape = 0.0;
  double expansion = 0.0;
  double estimation = 0.0;
  double divergence = 0.0;
  double epoch = 0.0;
};

StageTimes summarize_times(const TrainLog& log);

struct RunReport {
  std::string variant = "all";
  std::vector<SetMetrics> sets;
  SetMetrics average;  // macro-average over sets
  double gamma = 0.0;
  double id_test_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  StageTimes times;
  std::string error;  // non-empty when the variant failed
};

/// Scores ID test and every OOD set, with per-set and averaged metrics.
RunReport evaluate(const MlpNetwork& net, const DataBundle& bundle);

struct AblationSelection {
  bool stages = true;
  bool losses = true;
  bool epochs = true;
};

/// Trains and evaluates every selected variant with the base seed. The full
/// configuration is trained once and its report reused in each group it
/// belongs to. Variants run on up to `threads` workers; output order and
/// contents do not depend on scheduling. A failing variant yields a report
/// with `error` set.
std::vector<RunReport> run_ablation_suite(const TrainConfig& base, const DataBundle& bundle,
                                          const AblationSelection& selection = {},
                                          std::size_t threads = 1);

std::string report_to_json(const RunReport& report);
std::string reports_to_json(std::span<const RunReport> reports);
/// One row per report: variant, <set>_fpr95, <set>_auroc ..., avg_fpr95,
/// avg_auroc, avg_auroc_oriented, gamma, id_accuracy, stage timings, error.
std::string reports_to_csv(std::span<const RunReport> reports);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace ares
