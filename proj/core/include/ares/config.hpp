#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ares/synthdata.hpp"
#include "ares/training.hpp"

namespace ares {

struct DataConfig {
  GeneratorSpec id_generator;  // name "blobs"
  std::size_t n_train = 1200;
  std::size_t n_test = 600;
  std::size_t classes = 3;
  std::size_t dim = 2;
  std::uint64_t seed = 0;
  std::vector<GeneratorSpec> ood_sets;  // ring, uniform, shifted-blobs
  std::size_t n_ood = 600;
  std::size_t aux_n = 0;  // 0: same as n_train
  std::size_t ifs_maps = 3;

  DataConfig();
};

struct EvalConfig {
  std::size_t hist_bins = 50;
};

enum class Preset { paper, desk };

struct RunConfig {
  Preset preset = Preset::paper;
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;
};

/// Full-scale hyperparameters (500 / 200 epochs) with desk-sized data.
RunConfig paper_preset();
/// paper_preset() with 100 total / 40 pretrain epochs, gradients through the
/// virtual outliers' construction and gradient-norm clipping at 1.
RunConfig desk_preset();
RunConfig make_preset(Preset preset);
Preset parse_preset(const std::string& name);
const char* to_string(Preset preset);

LossKind parse_loss_kind(const std::string& name);
/// "none", "no-escape", "no-expansion", "no-estimation", or a '+'-joined
/// combination of the three removals.
StageMask parse_stage_mask(const std::string& name);

/// INI text with sections [data] [escape] [train] [eval]. A top-level
/// `preset = desk|paper` picks the starting profile; otherwise `base` is
/// used. Unknown sections or keys raise ConfigError naming them.
RunConfig parse_config(const std::string& text, const RunConfig& base = paper_preset());
RunConfig load_config(const std::string& path, const RunConfig& base = paper_preset());

/// Every resolved setting as "section.key" = value, in a fixed order.
std::vector<std::pair<std::string, std::string>> resolved_entries(const RunConfig& cfg);
/// Text parse_config() reads back to the same configuration.
std::string config_to_ini(const RunConfig& cfg);
/// FNV-1a over the resolved entries.
std::uint64_t config_hash(const RunConfig& cfg);

/// Generates D, test set, F and the OOD sets from `cfg.seed`. Each piece has
/// its own child stream, so sizes of one do not shift the others.
DataBundle make_bundle(const DataConfig& cfg);

}  // namespace ares
