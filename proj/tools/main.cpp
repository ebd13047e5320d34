// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: parses argv into a CliInvocation and dispatches.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cscal/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Classifier-based adversarial domain adaptation toolkit"};
  app.require_subcommand(1);

  cscal::CliInvocation inv;
  std::string config, output_dir, checkpoint;

  auto add_common = [&](CLI::App* cmd, bool needs_config, bool needs_output) {
    auto* c = cmd->add_option("--config,-c", config, "JSON config file");
    if (needs_config) c->required();
    auto* o = cmd->add_option("--output-dir,-o", output_dir, "directory for outputs");
    if (needs_output) o->required();
    cmd->add_option("--set,-s", inv.overrides,
                    "config override as section.key=value (repeatable)");
  };

  auto* train = app.add_subcommand("train", "run the adversarial training loop");
  add_common(train, true, true);

  auto* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint on a dataset");
  add_common(evaluate, true, false);
  evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  auto* ablate = app.add_subcommand("ablate", "run the per-term ablation protocol");
  add_common(ablate, true, true);

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of every op");
  gradcheck->add_option("--seed", inv.gradcheck_seed, "rng seed for the test inputs");

  auto* gen_data = app.add_subcommand("gen-data", "generate a dataset CSV from the config");
  add_common(gen_data, true, true);

  auto* export_emb = app.add_subcommand("export-embeddings",
                                        "write (feature, domain, label, prediction) rows");
  add_common(export_emb, true, true);
  export_emb->add_option("--checkpoint", checkpoint, "checkpoint file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cscal::kExitOk : cscal::kExitConfig;
  }

  if (train->parsed()) inv.command = cscal::CliInvocation::Command::train;
  if (evaluate->parsed()) inv.command = cscal::CliInvocation::Command::evaluate;
  if (ablate->parsed()) inv.command = cscal::CliInvocation::Command::ablate;
  if (gradcheck->parsed()) inv.command = cscal::CliInvocation::Command::gradcheck;
  if (gen_data->parsed()) inv.command = cscal::CliInvocation::Command::gen_data;
  if (export_emb->parsed()) inv.command = cscal::CliInvocation::Command::export_embeddings;

  inv.config_path = config;
  inv.output_dir = output_dir;
  inv.checkpoint_path = checkpoint;

  return cscal::run(inv, std::cout, std::cerr);
}
