#include "ares/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ares/errors.hpp"
#include "ares/evaluation.hpp"
#include "ares/model.hpp"
#include "ares/training.hpp"

#ifndef ARES_VERSION
#define ARES_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace ares::cli {

namespace {

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error("cannot create output directory '" + dir + "'" +
                (ec ? ": " + ec.message() : std::string()));
  }
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void print_artifacts(std::ostream& out, const std::vector<std::string>& files) {
  for (const auto& f : files) out << "wrote " << f << '\n';
}

PointFile read_required(const std::string& dir, const std::string& name) {
  const std::string path = join(dir, name);
  if (!fs::exists(path)) throw InvalidInput("missing data file '" + path + "'");
  return read_point_csv(path);
}

}  // namespace

RunConfig resolve_config(const CommonOptions& opt) {
  RunConfig base = opt.preset ? make_preset(parse_preset(*opt.preset)) : paper_preset();
  RunConfig cfg = base;
  if (!opt.config_path.empty()) {
    cfg = parse_config(read_text(opt.config_path), base);
    if (opt.preset && cfg.preset != base.preset) {
      throw ConfigError("preset '" + *opt.preset + "' conflicts with 'preset = " +
                        to_string(cfg.preset) + "' in " + opt.config_path);
    }
  }
  if (opt.seed) {
    cfg.data.seed = *opt.seed;
    cfg.train.seed = *opt.seed;
  }
  if (opt.stage_mask) cfg.train.stage_mask = parse_stage_mask(*opt.stage_mask);
  if (opt.loss) cfg.train.loss_kind = parse_loss_kind(*opt.loss);
  return cfg;
}

std::vector<std::string> save_bundle(const std::string& dir, const DataBundle& bundle) {
  ensure_dir(dir);
  const std::size_t d = bundle.meta.dim;
  const std::size_t k = bundle.meta.classes;
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& role,
                 std::vector<LabeledVector> rows) {
    const std::string path = join(dir, name);
    write_point_csv(path, {d, k, role, std::move(rows)});
    files.push_back(path);
  };
  put("id_train.csv", "id", bundle.id_train);
  put("id_test.csv", "id", bundle.id_test);
  put("aux.csv", "aux", unlabeled_rows(std::span<const AuxVector>(bundle.aux)));
  for (const auto& set : bundle.ood_eval) {
    put("ood_" + set.name + ".csv", "ood", unlabeled_rows(std::span<const Vector>(set.points)));
  }
  return files;
}

DataBundle load_bundle(const std::string& dir, const DataConfig& cfg) {
  if (dir.empty()) throw InvalidInput("no data directory given (use --data)");
  DataBundle b;
  const PointFile train = read_required(dir, "id_train.csv");
  const PointFile test = read_required(dir, "id_test.csv");
  const PointFile aux = read_required(dir, "aux.csv");
  auto check_dim = [&](const PointFile& f, const std::string& name) {
    if (f.dim != train.dim) {
      throw InvalidInput(join(dir, name) + ": dim=" + std::to_string(f.dim) +
                         " does not match id_train.csv dim=" + std::to_string(train.dim));
    }
  };
  check_dim(test, "id_test.csv");
  check_dim(aux, "aux.csv");
  b.id_train = train.rows;
  b.id_test = test.rows;
  for (const auto& row : aux.rows) b.aux.push_back({row.x});
  for (const auto& spec : cfg.ood_sets) {
    const std::string name = "ood_" + spec.name + ".csv";
    const PointFile f = read_required(dir, name);
    check_dim(f, name);
    OodSet set{spec.name, {}};
    for (const auto& row : f.rows) set.points.push_back(row.x);
    b.ood_eval.push_back(std::move(set));
  }
  b.meta = {cfg.id_generator.name, cfg.seed, train.dim, train.classes};
  return b;
}

std::string manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "ares";
  j["version"] = ARES_VERSION;
  j["command"] = m.command;
  j["config_path"] = m.config_path;
  j["config_hash"] = hex64(m.config_hash);
  j["seed"] = m.seed;
  j["out_dir"] = m.out_dir;
  j["artifacts"] = m.artifacts;
  auto cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m.config) cfg[k] = v;
  j["config"] = std::move(cfg);
  j["created_utc"] = m.created_utc;
  return j.dump(1) + "\n";
}

std::vector<std::string> cmd_gen(const CommonOptions& opt, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  const DataBundle bundle = make_bundle(cfg.data);
  const auto files = save_bundle(opt.out_dir, bundle);
  print_artifacts(out, files);
  return files;
}

std::vector<std::string> cmd_train(const CommonOptions& opt,
                                   const std::optional<std::string>& resume,
                                   std::ostream& out) {
  RunConfig cfg = resolve_config(opt);
  const DataBundle bundle = load_bundle(opt.data_dir, cfg.data);
  ensure_dir(opt.out_dir);
  cfg.train.checkpoint_dir = opt.out_dir;

  std::optional<Checkpoint> start;
  if (resume) start = load_checkpoint(*resume);

  const std::vector<std::string> files{
      join(opt.out_dir, "manifest.json"), join(opt.out_dir, "checkpoint.json"),
      join(opt.out_dir, "train_log.csv"), join(opt.out_dir, "stage_times.csv")};
  Manifest m;
  m.command = "train";
  m.config_path = opt.config_path;
  m.config_hash = config_hash(cfg);
  m.seed = cfg.train.seed;
  m.out_dir = opt.out_dir;
  m.artifacts = files;
  m.config = resolved_entries(cfg);
  if (resume) m.config.emplace_back("resume", *resume);
  m.created_utc = utc_now();
  write_text_file(files[0], manifest_to_json(m));

  TrainHooks hooks;
  hooks.on_epoch = [&out](const EpochRecord& r) { out << progress_line(r) << std::endl; };
  const TrainResult result = train(cfg.train, bundle, start, hooks);
  save_checkpoint(files[1], {result.net, cfg.train.total_epochs, cfg.train.seed});
  write_train_log_csv(files[2], result.log);
  write_stage_times_csv(files[3], result.log);
  print_artifacts(out, files);
  return files;
}

std::vector<std::string> cmd_eval(const CommonOptions& opt, const std::string& checkpoint,
                                  std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  const DataBundle bundle = load_bundle(opt.data_dir, cfg.data);
  if (!fs::exists(checkpoint)) throw InvalidInput("missing checkpoint '" + checkpoint + "'");
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const MlpShape& shape = ckpt.net.shape();
  if (shape.input_dim != bundle.meta.dim || shape.classes != bundle.meta.classes) {
    throw InvalidInput("checkpoint '" + checkpoint + "' expects dim=" +
                       std::to_string(shape.input_dim) + " classes=" +
                       std::to_string(shape.classes) + " but the data has dim=" +
                       std::to_string(bundle.meta.dim) + " classes=" +
                       std::to_string(bundle.meta.classes));
  }
  ensure_dir(opt.out_dir);

  RunReport report = evaluate(ckpt.net, bundle);
  report.variant = "all";
  if (!(cfg.train.stage_mask == StageMask{})) report.variant = stage_mask_name(cfg.train.stage_mask);
  report.seed = ckpt.seed;
  report.config = resolved_entries(cfg);

  const Vector id_scores = energy_scores(ckpt.net, bundle.id_test);
  Vector ood_scores;
  for (const auto& set : bundle.ood_eval) {
    const Vector s = energy_scores(ckpt.net, set.points);
    ood_scores.insert(ood_scores.end(), s.begin(), s.end());
  }
  Vector virtual_scores;
  for (const auto& v : synthesize_outliers(ckpt.net, cfg.train, bundle, cfg.train.batch_size)) {
    virtual_scores.push_back(energy_score(ckpt.net, classify(ckpt.net, v)));
  }

  const std::vector<std::string> files{join(opt.out_dir, "report.json"),
                                       join(opt.out_dir, "report.csv"),
                                       join(opt.out_dir, "energy_hist.csv")};
  write_text_file(files[0], report_to_json(report));
  write_text_file(files[1], reports_to_csv(std::span<const RunReport>(&report, 1)));
  write_histogram_csv(files[2],
                      energy_histogram(id_scores, ood_scores, virtual_scores, cfg.eval.hist_bins));
  for (const auto& s : report.sets) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s fpr95=%.4f auroc=%.4f", s.name.c_str(), s.fpr95, s.auroc);
    out << buf << '\n';
  }
  print_artifacts(out, files);
  return files;
}

std::vector<std::string> cmd_ablate(const CommonOptions& opt,
                                    const std::vector<std::string>& only, std::ostream& out) {
  const RunConfig cfg = resolve_config(opt);
  const DataBundle bundle = load_bundle(opt.data_dir, cfg.data);
  ensure_dir(opt.out_dir);
  AblationSelection sel;
  if (!only.empty()) {
    sel = {false, false, false};
    for (const auto& group : only) {
      if (group == "stages") {
        sel.stages = true;
      } else if (group == "losses") {
        sel.losses = true;
      } else if (group == "epochs") {
        sel.epochs = true;
      } else {
        throw ConfigError("--only: unknown group '" + group + "' (stages, losses, epochs)");
      }
    }
  }
  const auto reports = run_ablation_suite(cfg.train, bundle, sel, worker_threads());
  const std::vector<std::string> files{join(opt.out_dir, "ablation_report.csv"),
                                       join(opt.out_dir, "ablation_report.json")};
  write_text_file(files[0], reports_to_csv(reports));
  write_text_file(files[1], reports_to_json(reports));
  for (const auto& r : reports) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "%-20s avg_fpr95=%.4f avg_auroc=%.4f%s", r.variant.c_str(),
                  r.average.fpr95, r.average.auroc, r.error.empty() ? "" : " FAILED");
    out << buf << '\n';
  }
  print_artifacts(out, files);
  return files;
}

std::size_t worker_threads() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ARES_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = std::min<std::size_t>(n, v);
  }
  return n;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ares: outlier synthesis for OOD detection on synthetic point data"};
  app.set_version_flag("--version", std::string(ARES_VERSION));
  app.require_subcommand(1);
  app.footer("Environment:\n  ARES_THREADS  cap on worker threads used by 'ablate'");

  CommonOptions opt;
  std::string preset;
  std::uint64_t seed = 0;
  std::string stage_mask;
  std::string loss;
  std::string checkpoint;
  std::string resume;
  std::vector<std::string> only;

  auto add_common = [&](CLI::App* sub, bool needs_data) {
    sub->add_option("--config", opt.config_path, "INI config with [data] [escape] [train] [eval]")
        ->check(CLI::ExistingFile);
    sub->add_option("--preset", preset, "starting profile")
        ->check(CLI::IsMember({"paper", "desk"}));
    sub->add_option("--seed", seed, "seed for data generation and training");
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    if (needs_data) sub->add_option("--data", opt.data_dir, "directory written by 'gen'")->required();
  };
  auto add_variant = [&](CLI::App* sub) {
    sub->add_option("--stage-mask", stage_mask, "stage to remove")
        ->check(CLI::IsMember({"none", "no-escape", "no-expansion", "no-estimation"}));
    sub->add_option("--loss", loss, "discrimination loss")
        ->check(CLI::IsMember({"jsd", "ce", "nce"}));
  };

  CLI::App* gen = app.add_subcommand("gen", "generate ID, auxiliary and OOD point sets");
  add_common(gen, false);
  CLI::App* trn = app.add_subcommand("train", "train a detector on generated data");
  add_common(trn, true);
  add_variant(trn);
  trn->add_option("--resume", resume, "continue from a checkpoint")->check(CLI::ExistingFile);
  CLI::App* evl = app.add_subcommand("eval", "score a checkpoint on ID test and OOD sets");
  add_common(evl, true);
  add_variant(evl);
  evl->add_option("--checkpoint", checkpoint, "checkpoint written by 'train'")->required();
  CLI::App* abl = app.add_subcommand("ablate", "run the stage, loss and epoch ablations");
  add_common(abl, true);
  add_variant(abl);
  abl->add_option("--only", only, "restrict to groups: stages, losses, epochs")
      ->delimiter(',')
      ->check(CLI::IsMember({"stages", "losses", "epochs"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto set_if = [](CLI::App* sub, const char* name) {
    return sub->count(name) > 0;
  };
  CLI::App* active = app.get_subcommands().front();
  if (set_if(active, "--preset")) opt.preset = preset;
  if (set_if(active, "--seed")) opt.seed = seed;
  if (active != gen) {
    if (set_if(active, "--stage-mask")) opt.stage_mask = stage_mask;
    if (set_if(active, "--loss")) opt.loss = loss;
  }

  try {
    if (active == gen) {
      cmd_gen(opt, out);
    } else if (active == trn) {
      cmd_train(opt, resume.empty() ? std::nullopt : std::optional<std::string>(resume), out);
    } else if (active == evl) {
      cmd_eval(opt, checkpoint, out);
    } else {
      cmd_ablate(opt, only, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceAbort& e) {
    err << "error: " << e.what() << '\n';
    if (!e.checkpoint_path().empty()) err << "last good checkpoint: " << e.checkpoint_path() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace ares::cli
