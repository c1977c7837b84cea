#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ares/config.hpp"
#include "ares/synthdata.hpp"

namespace ares::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string data_dir;
  std::optional<std::string> stage_mask;
  std::optional<std::string> loss;
};

/// Preset, then config file, then flag overrides. --seed sets both the data
/// and the training seed.
RunConfig resolve_config(const CommonOptions& opt);

/// Point CSVs of a bundle: id_train.csv, id_test.csv, aux.csv, ood_<name>.csv.
std::vector<std::string> save_bundle(const std::string& dir, const DataBundle& bundle);
/// Reads the files save_bundle writes, expecting one OOD file per configured
/// set. Missing files raise an error naming the file.
DataBundle load_bundle(const std::string& dir, const DataConfig& cfg);

struct Manifest {
  std::string command;
  std::string config_path;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<std::string> artifacts;
  std::vector<std::pair<std::string, std::string>> config;
  std::string created_utc;
};

std::string manifest_to_json(const Manifest& m);

std::vector<std::string> cmd_gen(const CommonOptions& opt, std::ostream& out);
std::vector<std::string> cmd_train(const CommonOptions& opt,
                                   const std::optional<std::string>& resume, std::ostream& out);
std::vector<std::string> cmd_eval(const CommonOptions& opt, const std::string& checkpoint,
                                  std::ostream& out);
std::vector<std::string> cmd_ablate(const CommonOptions& opt,
                                    const std::vector<std::string>& only, std::ostream& out);

/// Worker cap from ARES_THREADS, else the hardware count, at least 1.
std::size_t worker_threads();

/// Full command line entry point. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ares::cli
