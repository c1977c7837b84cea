#include "ares/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ares/errors.hpp"
#include "ares/rng.hpp"

namespace ares {

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw ConfigError("config key '" + key + "': expected " + want + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
    bad_value(key, v, "a non-negative integer");
  }
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

int to_int(const std::string& key, const std::string& v) {
  const std::uint64_t x = to_u64(key, v);
  if (x > 1000000000ULL) bad_value(key, v, "a smaller integer");
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

const std::vector<std::string>& known_generators() {
  static const std::vector<std::string> names{"blobs", "moons2d", "rings", "ring", "uniform",
                                              "shifted-blobs"};
  return names;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // [data]
    t["data.generator"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.data.id_generator.name = v;
    };
    t["data.n_train"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.n_train = to_size(k, v);
    };
    t["data.n_test"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.n_test = to_size(k, v);
    };
    t["data.classes"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.classes = to_size(k, v);
    };
    t["data.dim"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.dim = to_size(k, v);
    };
    t["data.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.seed = to_u64(k, v);
    };
    t["data.ood_sets"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.ood_sets.clear();
      for (const auto& name : split(v, ',')) c.data.ood_sets.push_back({name, {}});
      if (c.data.ood_sets.empty()) bad_value(k, v, "a comma-separated list of OOD generators");
    };
    t["data.n_ood"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.n_ood = to_size(k, v);
    };
    t["data.aux_n"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.aux_n = to_size(k, v);
    };
    t["data.ifs_maps"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.data.ifs_maps = to_size(k, v);
    };
    // [escape]
    t["escape.alpha1"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.escape.alpha1 = to_double(k, v);
    };
    t["escape.max_iters"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.escape.max_iters = to_int(k, v);
    };
    t["escape.p_mix"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.escape.p_mix = to_double(k, v);
    };
    t["escape.reescape_each_epoch"] = [](RunConfig& c, const std::string& k,
                                         const std::string& v) {
      c.train.reescape_each_epoch = to_bool(k, v);
    };
    // [train]
    t["train.total_epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.total_epochs = to_int(k, v);
    };
    t["train.pretrain_epochs"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.pretrain_epochs = to_int(k, v);
    };
    t["train.batch"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.batch_size = to_size(k, v);
    };
    t["train.lr_start"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.lr_start = to_double(k, v);
    };
    t["train.lr_end"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.lr_end = to_double(k, v);
    };
    t["train.beta"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.beta = to_double(k, v);
    };
    t["train.alpha2"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.alpha2 = to_double(k, v);
    };
    t["train.m_candidates"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.m_candidates = to_size(k, v);
    };
    t["train.t_rank"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.t_rank = to_size(k, v);
    };
    t["train.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.seed = to_u64(k, v);
    };
    t["train.loss"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      try {
        c.train.loss_kind = parse_loss_kind(v);
      } catch (const ConfigError&) {
        bad_value(k, v, "jsd, ce or nce");
      }
    };
    t["train.stage_mask"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      try {
        c.train.stage_mask = parse_stage_mask(v);
      } catch (const ConfigError&) {
        bad_value(k, v, "none, no-escape, no-expansion or no-estimation");
      }
    };
    t["train.hidden"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.hidden.clear();
      for (const auto& w : split(v, ':')) c.train.hidden.push_back(to_size(k, w));
    };
    t["train.feature_dim"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.feature_dim = to_size(k, v);
    };
    t["train.n_mix"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.n_mix = to_size(k, v);
    };
    t["train.ridge_scale"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.ridge_scale = to_double(k, v);
    };
    t["train.nce_temperature"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.nce_temperature = to_double(k, v);
    };
    t["train.epsilon_rule"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      if (v == "per_batch") {
        c.train.epsilon_rule = EpsilonRule::per_batch;
      } else if (v == "fixed_pool") {
        c.train.epsilon_rule = EpsilonRule::fixed_pool;
      } else {
        bad_value(k, v, "per_batch or fixed_pool");
      }
    };
    t["train.rebuild_per_step"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.rebuild_per_step = to_bool(k, v);
    };
    t["train.per_batch_expansion"] = [](RunConfig& c, const std::string& k,
                                        const std::string& v) {
      c.train.per_batch_expansion = to_bool(k, v);
    };
    t["train.vos_style_gaussian_sampling"] = [](RunConfig& c, const std::string& k,
                                                const std::string& v) {
      c.train.vos_style_gaussian_sampling = to_bool(k, v);
    };
    t["train.grad_through_fit"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.grad_through_fit = to_bool(k, v);
    };
    t["train.debug_gradcheck"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.debug_gradcheck = to_bool(k, v);
    };
    t["train.score_var_floor"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.score_var_floor = to_double(k, v);
    };
    t["train.grad_clip"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.train.grad_clip = to_double(k, v);
    };
    // [eval]
    t["eval.hist_bins"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.eval.hist_bins = to_size(k, v);
    };
    return t;
  }();
  return table;
}

// "<generator>.<param>" inside [data] sets a generator parameter.
bool set_generator_param(RunConfig& c, const std::string& key, const std::string& value) {
  const auto dot = key.find('.');
  if (dot == std::string::npos) return false;
  const std::string gen = key.substr(0, dot);
  const std::string param = key.substr(dot + 1);
  if (param.empty()) return false;
  bool known = false;
  for (const auto& g : known_generators()) known = known || g == gen;
  if (!known) return false;
  const double v = to_double("data." + key, value);
  if (c.data.id_generator.name == gen) c.data.id_generator.params[param] = v;
  bool used = c.data.id_generator.name == gen;
  for (auto& s : c.data.ood_sets) {
    if (s.name == gen) {
      s.params[param] = v;
      used = true;
    }
  }
  if (!used) {
    throw ConfigError("config key 'data." + key + "': generator '" + gen + "' is not in use");
  }
  return true;
}

}  // namespace

DataConfig::DataConfig() : ood_sets{{"ring", {}}, {"uniform", {}}, {"shifted-blobs", {}}} {}

RunConfig paper_preset() { return RunConfig{}; }

RunConfig desk_preset() {
  RunConfig c;
  c.preset = Preset::desk;
  c.train.total_epochs = 100;
  c.train.pretrain_epochs = 40;
  c.train.grad_through_fit = true;
  c.train.grad_clip = 1.0;
  return c;
}

RunConfig make_preset(Preset preset) {
  return preset == Preset::desk ? desk_preset() : paper_preset();
}

Preset parse_preset(const std::string& name) {
  if (name == "paper") return Preset::paper;
  if (name == "desk") return Preset::desk;
  throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
}

const char* to_string(Preset preset) { return preset == Preset::desk ? "desk" : "paper"; }

LossKind parse_loss_kind(const std::string& name) {
  if (name == "jsd") return LossKind::jsd;
  if (name == "ce") return LossKind::ce;
  if (name == "nce") return LossKind::nce;
  throw ConfigError("unknown loss '" + name + "' (expected jsd, ce or nce)");
}

StageMask parse_stage_mask(const std::string& name) {
  StageMask m;
  if (name == "none") return m;
  for (const auto& part : split(name, '+')) {
    if (part == "no-escape") {
      m.escape = false;
    } else if (part == "no-expansion") {
      m.expansion = false;
    } else if (part == "no-estimation") {
      m.estimation = false;
    } else {
      throw ConfigError("unknown stage mask '" + name + "'");
    }
  }
  if (m == StageMask{}) throw ConfigError("unknown stage mask '" + name + "'");
  return m;
}

RunConfig parse_config(const std::string& text, const RunConfig& base) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  RunConfig cfg = base;
  if (auto p = tree.get_child_optional("preset"); p && p->empty()) {
    cfg = make_preset(parse_preset(trim(p->data())));
  }
  // Generator names first, so parameter keys can find their generator.
  std::vector<std::pair<std::string, std::string>> deferred;
  for (const auto& [section, body] : tree) {
    if (section == "preset" && body.empty()) continue;
    if (section != "data" && section != "escape" && section != "train" && section != "eval") {
      throw ConfigError("config: unknown section or key '" + section + "'");
    }
    for (const auto& [key, node] : body) {
      const std::string full = section + "." + key;
      const std::string value = trim(node.data());
      const auto it = setters().find(full);
      if (it != setters().end()) {
        it->second(cfg, full, value);
      } else if (section == "data") {
        deferred.emplace_back(key, value);
      } else {
        throw ConfigError("config: unknown key '" + full + "'");
      }
    }
  }
  for (const auto& [key, value] : deferred) {
    if (!set_generator_param(cfg, key, value)) {
      throw ConfigError("config: unknown key 'data." + key + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), base);
}

std::vector<std::pair<std::string, std::string>> resolved_entries(const RunConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("preset", to_string(cfg.preset));
  const DataConfig& d = cfg.data;
  out.emplace_back("data.generator", d.id_generator.name);
  for (const auto& [k, v] : d.id_generator.params) {
    out.emplace_back("data." + d.id_generator.name + "." + k, fmt17(v));
  }
  out.emplace_back("data.n_train", std::to_string(d.n_train));
  out.emplace_back("data.n_test", std::to_string(d.n_test));
  out.emplace_back("data.classes", std::to_string(d.classes));
  out.emplace_back("data.dim", std::to_string(d.dim));
  out.emplace_back("data.seed", std::to_string(d.seed));
  std::string names;
  for (const auto& s : d.ood_sets) names += (names.empty() ? "" : ",") + s.name;
  out.emplace_back("data.ood_sets", names);
  for (const auto& s : d.ood_sets) {
    for (const auto& [k, v] : s.params) out.emplace_back("data." + s.name + "." + k, fmt17(v));
  }
  out.emplace_back("data.n_ood", std::to_string(d.n_ood));
  out.emplace_back("data.aux_n", std::to_string(d.aux_n));
  out.emplace_back("data.ifs_maps", std::to_string(d.ifs_maps));
  for (auto& e : config_entries(cfg.train)) out.push_back(std::move(e));
  out.emplace_back("eval.hist_bins", std::to_string(cfg.eval.hist_bins));
  return out;
}

std::string config_to_ini(const RunConfig& cfg) {
  std::string top;
  std::vector<std::pair<std::string, std::string>> sections;
  for (const auto& [key, value] : resolved_entries(cfg)) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      top += key + " = " + value + "\n";
      continue;
    }
    const std::string sec = key.substr(0, dot);
    auto it = std::find_if(sections.begin(), sections.end(),
                           [&](const auto& s) { return s.first == sec; });
    if (it == sections.end()) it = sections.insert(sections.end(), {sec, ""});
    it->second += key.substr(dot + 1) + " = " + value + "\n";
  }
  for (const auto& [sec, body] : sections) top += "\n[" + sec + "]\n" + body;
  return top;
}

std::uint64_t config_hash(const RunConfig& cfg) {
  std::string text;
  for (const auto& [k, v] : resolved_entries(cfg)) text += k + "=" + v + "\n";
  return fnv1a64(text);
}

DataBundle make_bundle(const DataConfig& cfg) {
  if (cfg.ood_sets.empty()) throw ConfigError("data: at least one OOD set is required");
  const Rng root(cfg.seed);
  DataBundle b;
  Rng r_train = root.child("id_train");
  Rng r_test = root.child("id_test");
  try {
    b.id_train = make_id_dataset(cfg.id_generator, cfg.n_train, cfg.classes, cfg.dim, r_train);
    b.id_test = make_id_dataset(cfg.id_generator, cfg.n_test, cfg.classes, cfg.dim, r_test);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("data.generator: ") + e.what());
  }
  const Box box = bounding_box(b.id_train);
  Rng r_aux = root.child("aux");
  b.aux = make_aux_dataset(cfg.aux_n == 0 ? cfg.n_train : cfg.aux_n, cfg.dim, r_aux,
                           cfg.ifs_maps, box);
  const OodContext ctx{cfg.id_generator, cfg.classes, cfg.dim, box};
  for (const auto& spec : cfg.ood_sets) {
    Rng r = root.child("ood/" + spec.name);
    try {
      b.ood_eval.push_back({spec.name, make_ood_eval(spec, cfg.n_ood, ctx, r)});
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("data.ood_sets: ") + e.what());
    }
  }
  b.meta = {cfg.id_generator.name, cfg.seed, cfg.dim, cfg.classes};
  return b;
}

}  // namespace ares
