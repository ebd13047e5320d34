// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cscal/cli.hpp"
#include "cscal/config.hpp"
#include "cscal/data.hpp"
#include "cscal/errors.hpp"

using namespace cscal;
namespace fs = std::filesystem;

namespace {

nlohmann::json minimal_config() {
  return nlohmann::json{
      {"seed", 3},
      {"optimizer", {{"lr", 0.05}}},
      {"schedule", {{"epochs", 2}, {"batch_size", 8}}},
      {"data",
       {{"kind", "two_moons"}, {"n_per_domain", 40}, {"rotation_deg", 20.0}, {"noise_std", 0.1}}},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("resolve_config materializes the documented defaults") {
  const ResolvedConfig rc = resolve_config(minimal_config());
  CHECK(rc.config.beta == 0.1);
  CHECK(rc.config.gamma == 0.1);
  CHECK(rc.config.alpha0 == 1.0);
  CHECK(rc.config.momentum == 0.9);
  CHECK(rc.config.weight_decay == 1e-3);
  CHECK(rc.config.batch_size == 8);
  CHECK(rc.config.ramp == RampKind::sigmoid);
  CHECK(rc.config.g_hidden == std::vector<std::size_t>{64, 32});
  CHECK(rc.config.data.shift.seed == 3);  // falls back to the top-level seed

  CHECK(rc.resolved.at("losses").at("beta") == 0.1);
  CHECK(rc.resolved.at("optimizer").at("weight_decay") == 1e-3);
  CHECK(rc.hash.size() == 16);
}

TEST_CASE("overrides win and unknown keys are rejected") {
  const ResolvedConfig rc = resolve_config(minimal_config(), {"losses.beta=0.05"});
  CHECK(rc.config.beta == 0.05);

  CHECK_THROWS_WITH_AS(resolve_config(minimal_config(), {"losses.delta=1"}),
                       doctest::Contains("losses.delta"), ConfigError);

  nlohmann::json bad = minimal_config();
  bad["extra_section"] = 1;
  CHECK_THROWS_WITH_AS(resolve_config(bad), doctest::Contains("extra_section"), ConfigError);

  nlohmann::json bad2 = minimal_config();
  bad2["schedule"]["ramp"] = "warp";
  CHECK_THROWS_AS(resolve_config(bad2), ConfigError);

  // Resolution is order-independent across distinct keys.
  const ResolvedConfig a = resolve_config(minimal_config(), {"losses.beta=0.2", "losses.gamma=0.3"});
  const ResolvedConfig b = resolve_config(minimal_config(), {"losses.gamma=0.3", "losses.beta=0.2"});
  CHECK(a.hash == b.hash);
}

TEST_CASE("missing required keys are named") {
  nlohmann::json no_lr = minimal_config();
  no_lr["optimizer"].erase("lr");
  CHECK_THROWS_WITH_AS(resolve_config(no_lr), doctest::Contains("optimizer.lr"), ConfigError);

  nlohmann::json no_epochs = minimal_config();
  no_epochs["schedule"].erase("epochs");
  CHECK_THROWS_WITH_AS(resolve_config(no_epochs), doctest::Contains("schedule.epochs"), ConfigError);

  nlohmann::json no_data = minimal_config();
  no_data.erase("data");
  CHECK_THROWS_WITH_AS(resolve_config(no_data), doctest::Contains("data.kind"), ConfigError);

  nlohmann::json csv = minimal_config();
  csv["data"] = {{"kind", "csv"}};
  CHECK_THROWS_WITH_AS(resolve_config(csv), doctest::Contains("data.path"), ConfigError);
}

TEST_CASE("config hash tracks content") {
  const ResolvedConfig a = resolve_config(minimal_config());
  const ResolvedConfig b = resolve_config(minimal_config(), {"seed=4"});
  CHECK(a.hash != b.hash);
  const ResolvedConfig c = resolve_config(minimal_config());
  CHECK(a.hash == c.hash);

  // The snapshot reloads to the same resolved config and hash.
  const nlohmann::json snap = snapshot_json(a);
  const ResolvedConfig reloaded = resolve_config(snap);
  CHECK(reloaded.hash == a.hash);
}

TEST_CASE("cli train writes snapshot, metrics, and checkpoint") {
  TempDir dir("cscal_cli_train");
  const fs::path config_path = dir.path / "config.json";
  std::ofstream(config_path) << minimal_config().dump();

  CliInvocation inv;
  inv.command = CliInvocation::Command::train;
  inv.config_path = config_path;
  inv.output_dir = dir.path / "run1";
  std::ostringstream out, err;
  REQUIRE(run(inv, out, err) == kExitOk);
  CHECK(err.str().empty());
  CHECK(fs::exists(inv.output_dir / "config.resolved.json"));
  CHECK(fs::exists(inv.output_dir / "metrics.jsonl"));
  CHECK(fs::exists(inv.output_dir / "checkpoint.json"));

  // Re-running from the snapshot reproduces the metrics byte for byte.
  CliInvocation rerun;
  rerun.command = CliInvocation::Command::train;
  rerun.config_path = inv.output_dir / "config.resolved.json";
  rerun.output_dir = dir.path / "run2";
  std::ostringstream out2, err2;
  REQUIRE(run(rerun, out2, err2) == kExitOk);
  CHECK(slurp(inv.output_dir / "metrics.jsonl") == slurp(rerun.output_dir / "metrics.jsonl"));
  CHECK(slurp(inv.output_dir / "checkpoint.json") == slurp(rerun.output_dir / "checkpoint.json"));

  // evaluate on the produced checkpoint.
  CliInvocation eval;
  eval.command = CliInvocation::Command::evaluate;
  eval.config_path = config_path;
  eval.checkpoint_path = inv.output_dir / "checkpoint.json";
  std::ostringstream out3, err3;
  REQUIRE(run(eval, out3, err3) == kExitOk);
  CHECK(out3.str().find("\"target\"") != std::string::npos);

  // export-embeddings from the same checkpoint.
  CliInvocation exp;
  exp.command = CliInvocation::Command::export_embeddings;
  exp.config_path = config_path;
  exp.checkpoint_path = inv.output_dir / "checkpoint.json";
  exp.output_dir = dir.path / "emb";
  std::ostringstream out4, err4;
  REQUIRE(run(exp, out4, err4) == kExitOk);
  const std::string emb = slurp(exp.output_dir / "embeddings.csv");
  CHECK(emb.find("feature_0") != std::string::npos);
  CHECK(emb.find("target") != std::string::npos);
}

TEST_CASE("cli gradcheck reports per-op errors and exits 0") {
  CliInvocation inv;
  inv.command = CliInvocation::Command::gradcheck;
  std::ostringstream out, err;
  CHECK(run(inv, out, err) == kExitOk);
  CHECK(out.str().find("matmul") != std::string::npos);
  CHECK(out.str().find("cscal_objective") != std::string::npos);
  CHECK(out.str().find("FAIL") == std::string::npos);
}

TEST_CASE("cli ablate emits the five-variant table") {
  TempDir dir("cscal_cli_ablate");
  const fs::path config_path = dir.path / "config.json";
  nlohmann::json cfg = minimal_config();
  cfg["schedule"]["epochs"] = 1;
  cfg["schedule"]["steps_per_epoch"] = 2;
  std::ofstream(config_path) << cfg.dump();

  CliInvocation inv;
  inv.command = CliInvocation::Command::ablate;
  inv.config_path = config_path;
  inv.output_dir = dir.path / "out";
  std::ostringstream out, err;
  REQUIRE(run(inv, out, err) == kExitOk);
  const std::string csv = slurp(inv.output_dir / "ablation.csv");
  std::size_t lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 7);  // comment + header + 5 variants
}

TEST_CASE("cli gen-data round trips through load_csv") {
  TempDir dir("cscal_cli_gendata");
  const fs::path config_path = dir.path / "config.json";
  std::ofstream(config_path) << minimal_config().dump();

  CliInvocation inv;
  inv.command = CliInvocation::Command::gen_data;
  inv.config_path = config_path;
  inv.output_dir = dir.path / "out";
  std::ostringstream out, err;
  REQUIRE(run(inv, out, err) == kExitOk);

  CsvSchema schema;
  schema.standardize = false;
  const auto [source, target] = load_csv(inv.output_dir / "dataset.csv", schema);
  CHECK(source.size() == 40);
  CHECK(target.size() == 40);
}

TEST_CASE("cli exit codes partition by failure category") {
  TempDir dir("cscal_cli_errors");
  std::ostringstream out, err;

  // config error: unknown key.
  const fs::path bad_config = dir.path / "bad.json";
  nlohmann::json bad = minimal_config();
  bad["losses"] = {{"delta", 1}};
  std::ofstream(bad_config) << bad.dump();
  CliInvocation inv;
  inv.command = CliInvocation::Command::train;
  inv.config_path = bad_config;
  inv.output_dir = dir.path / "o1";
  CHECK(run(inv, out, err) == kExitConfig);
  CHECK(err.str().find("losses.delta") != std::string::npos);

  // data error: csv path that does not exist.
  const fs::path missing_csv_config = dir.path / "csv.json";
  nlohmann::json csv_cfg = minimal_config();
  csv_cfg["data"] = {{"kind", "csv"}, {"path", (dir.path / "none.csv").string()}};
  std::ofstream(missing_csv_config) << csv_cfg.dump();
  inv.config_path = missing_csv_config;
  inv.output_dir = dir.path / "o2";
  CHECK(run(inv, out, err) == kExitData);

  // numeric error: absurd learning rate diverges.
  const fs::path diverge_config = dir.path / "diverge.json";
  nlohmann::json dv = minimal_config();
  dv["optimizer"]["lr"] = 1e12;
  dv["schedule"]["epochs"] = 50;
  std::ofstream(diverge_config) << dv.dump();
  inv.config_path = diverge_config;
  inv.output_dir = dir.path / "o3";
  CHECK(run(inv, out, err) == kExitNumeric);
}
