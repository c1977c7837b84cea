#include <string>

#include "doctest.h"
#include "ares/config.hpp"
#include "ares/errors.hpp"

using namespace ares;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("presets") {
  const RunConfig full = paper_preset();
  CHECK(full.train.total_epochs == 500);
  CHECK(full.train.pretrain_epochs == 200);
  CHECK(full.train.batch_size == 128);
  CHECK(full.train.m_candidates == 10000);
  CHECK(full.train.t_rank == 128);
  CHECK(full.train.beta == 0.1);
  CHECK(full.train.lr_start == 1e-1);
  CHECK(full.train.lr_end == 1e-6);
  const RunConfig desk = desk_preset();
  CHECK(desk.train.total_epochs == 100);
  CHECK(desk.train.pretrain_epochs == 40);
  CHECK(desk.data.n_train == 1200);
  CHECK(parse_preset("desk") == Preset::desk);
  CHECK_THROWS_AS(parse_preset("huge"), ConfigError);
}

TEST_CASE("unknown keys and sections are named") {
  CHECK(error_of("[train]\nbogus = 1\n").find("train.bogus") != std::string::npos);
  CHECK(error_of("[nowhere]\nx = 1\n").find("nowhere") != std::string::npos);
  CHECK(error_of("[train]\nbatch = lots\n").find("train.batch") != std::string::npos);
  CHECK(error_of("[train]\nloss = hinge\n").find("hinge") != std::string::npos);
}

TEST_CASE("values, generator parameters and top-level preset") {
  const RunConfig c = parse_config(
      "preset = desk\n"
      "[data]\ngenerator = moons2d\nclasses = 2\nmoons2d.noise = 0.05\nood_sets = ring,uniform\n"
      "ring.inner = 3\n"
      "[escape]\nalpha1 = 2.5\nmax_iters = 3\n"
      "[train]\nbeta = 0.2\nhidden = 32:16\nloss = nce\nstage_mask = no-escape+no-expansion\n");
  CHECK(c.preset == Preset::desk);
  CHECK(c.train.total_epochs == 100);
  CHECK(c.data.id_generator.name == "moons2d");
  CHECK(c.data.id_generator.param("noise", 0) == 0.05);
  REQUIRE(c.data.ood_sets.size() == 2);
  CHECK(c.data.ood_sets[0].param("inner", 0) == 3.0);
  CHECK(c.train.escape.alpha1 == 2.5);
  CHECK(c.train.escape.max_iters == 3);
  CHECK(c.train.beta == 0.2);
  CHECK(c.train.hidden == std::vector<std::size_t>{32, 16});
  CHECK(c.train.loss_kind == LossKind::nce);
  CHECK(c.train.stage_mask == StageMask{false, false, true});
  CHECK(parse_stage_mask("none") == StageMask{});
  CHECK_THROWS_AS(parse_stage_mask("no-everything"), ConfigError);
}

TEST_CASE("ini serialization round-trips and hashes agree") {
  RunConfig c = desk_preset();
  c.train.beta = 0.123456789012345;
  c.train.stage_mask.estimation = false;
  c.data.seed = 99;
  const RunConfig back = parse_config(config_to_ini(c));
  CHECK(resolved_entries(back) == resolved_entries(c));
  CHECK(config_hash(back) == config_hash(c));
  RunConfig d = c;
  d.train.seed = 1;
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("make_bundle: deterministic, independent child streams") {
  DataConfig dc;
  dc.n_train = 200;
  dc.n_test = 100;
  dc.n_ood = 50;
  dc.seed = 5;
  const DataBundle a = make_bundle(dc);
  const DataBundle b = make_bundle(dc);
  CHECK(a.id_train == b.id_train);
  CHECK(a.aux == b.aux);
  REQUIRE(a.ood_eval.size() == 3);
  CHECK(a.ood_eval[0].name == "ring");
  CHECK(a.aux.size() == 200);
  DataConfig more = dc;
  more.n_ood = 80;
  const DataBundle c = make_bundle(more);
  CHECK(c.id_train == a.id_train);
  CHECK(c.id_test == a.id_test);
  CHECK(c.ood_eval[0].points.size() == 80);

  DataConfig bad = dc;
  bad.id_generator.name = "spiral";
  try {
    make_bundle(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("data.generator") != std::string::npos);
  }
}
