// SPDX-License-Identifier: Apache-2.0
#include "cscal/cli.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

#include <json.hpp>

#include "cscal/config.hpp"
#include "cscal/errors.hpp"
#include "cscal/grad_suite.hpp"
#include "cscal/train.hpp"

namespace cscal {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  out << text;
}

void write_snapshot(const std::filesystem::path& dir, const ResolvedConfig& rc) {
  write_text(dir / "config.resolved.json", snapshot_json(rc).dump(2) + "\n");
}

std::filesystem::path ensure_output_dir(const CliInvocation& inv) {
  if (inv.output_dir.empty()) throw ConfigError("this subcommand requires --output-dir");
  std::filesystem::create_directories(inv.output_dir);
  return inv.output_dir;
}

ResolvedConfig load_config(const CliInvocation& inv) {
  if (inv.config_path.empty()) throw ConfigError("this subcommand requires --config");
  return resolve_config_file(inv.config_path, inv.overrides);
}

int run_train(const CliInvocation& inv, std::ostream& out) {
  const ResolvedConfig rc = load_config(inv);
  const auto dir = ensure_output_dir(inv);
  write_snapshot(dir, rc);

  const TrainResult result = train_run(rc.config);
  write_text(dir / "metrics.jsonl", metrics_to_jsonl(result.metrics, rc.config.seed, rc.hash));
  save_checkpoint(dir / "checkpoint.json", result.g, result.c, rc.config.seed, rc.hash);

  const MetricsRecord& last = result.metrics.back();
  out << "epochs=" << result.metrics.size() << " source_acc=" << last.source_acc
      << " target_acc=" << last.target_acc << " total_loss=" << last.total << '\n';
  return kExitOk;
}

int run_evaluate(const CliInvocation& inv, std::ostream& out) {
  const ResolvedConfig rc = load_config(inv);
  if (inv.checkpoint_path.empty()) throw ConfigError("evaluate requires --checkpoint");
  const Checkpoint ckpt = load_checkpoint(inv.checkpoint_path);
  auto [source, target] = make_datasets(rc.config.data);

  const EvalResult src = evaluate(ckpt.g, ckpt.c, source);
  const EvalResult tgt = evaluate(ckpt.g, ckpt.c, target);
  nlohmann::json j = {{"seed", rc.config.seed},
                      {"config_hash", rc.hash},
                      {"source", {{"accuracy", src.accuracy}, {"diag_stat", src.diag_stat},
                                  {"trace_s", src.trace_s}}},
                      {"target", {{"accuracy", tgt.accuracy}, {"diag_stat", tgt.diag_stat},
                                  {"trace_s", tgt.trace_s}, {"confusion", tgt.confusion}}}};
  if (!inv.output_dir.empty()) {
    const auto dir = ensure_output_dir(inv);
    write_snapshot(dir, rc);
    write_text(dir / "eval.json", j.dump(2) + "\n");
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int run_ablate(const CliInvocation& inv, std::ostream& out) {
  const ResolvedConfig rc = load_config(inv);
  const auto dir = ensure_output_dir(inv);
  write_snapshot(dir, rc);

  const std::vector<AblationRow> rows = ablate(rc.config);
  const std::string csv = ablation_to_csv(rows, rc.config.seed, rc.hash);
  write_text(dir / "ablation.csv", csv);
  out << csv;
  return kExitOk;
}

int run_gradcheck(const CliInvocation& inv, std::ostream& out) {
  const std::vector<OpGradReport> reports = run_gradient_suite(inv.gradcheck_seed);
  out << std::scientific << std::setprecision(3);
  for (const OpGradReport& r : reports) {
    out << (r.pass ? "ok   " : "FAIL ") << r.op << " max_rel_error=" << r.max_rel_error
        << " threshold=" << r.threshold << '\n';
  }
  return gradient_suite_passes(reports) ? kExitOk : kExitNumeric;
}

int run_gen_data(const CliInvocation& inv, std::ostream& out) {
  const ResolvedConfig rc = load_config(inv);
  const auto dir = ensure_output_dir(inv);
  write_snapshot(dir, rc);

  auto [source, target] = make_datasets(rc.config.data);
  const auto path = dir / "dataset.csv";
  save_csv(path, source, target, rc.config.seed, rc.hash);
  out << "wrote " << path.string() << " (" << source.size() << " source + " << target.size()
      << " target rows)\n";
  return kExitOk;
}

int run_export_embeddings(const CliInvocation& inv, std::ostream& out) {
  const ResolvedConfig rc = load_config(inv);
  if (inv.checkpoint_path.empty()) throw ConfigError("export-embeddings requires --checkpoint");
  const Checkpoint ckpt = load_checkpoint(inv.checkpoint_path);
  const auto dir = ensure_output_dir(inv);
  write_snapshot(dir, rc);

  auto [source, target] = make_datasets(rc.config.data);
  const auto path = dir / "embeddings.csv";
  export_embeddings(ckpt.g, ckpt.c, source, target, path, rc.config.seed, rc.hash);
  out << "wrote " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const CliInvocation& invocation, std::ostream& out, std::ostream& err) {
  try {
    switch (invocation.command) {
      case CliInvocation::Command::train:
        return run_train(invocation, out);
      case CliInvocation::Command::evaluate:
        return run_evaluate(invocation, out);
      case CliInvocation::Command::ablate:
        return run_ablate(invocation, out);
      case CliInvocation::Command::gradcheck:
        return run_gradcheck(invocation, out);
      case CliInvocation::Command::gen_data:
        return run_gen_data(invocation, out);
      case CliInvocation::Command::export_embeddings:
        return run_export_embeddings(invocation, out);
    }
    err << "error (config): unknown subcommand\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "error (config): " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    err << "error (data): " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    err << "error (numeric): " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitOther;
  }
}

}  // namespace cscal
