// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace cscal {

inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

struct CliInvocation {
  enum class Command { train, evaluate, ablate, gradcheck, gen_data, export_embeddings };
  Command command = Command::train;
  std::filesystem::path config_path;
  std::vector<std::string> overrides;  // "section.key=value"
  std::filesystem::path output_dir;
  std::filesystem::path checkpoint_path;  // evaluate / export-embeddings
  std::uint64_t gradcheck_seed = 0;
};

/// Executes one subcommand; never throws. Errors are written to `err` and
/// mapped onto the exit-code categories above. Outputs land in
/// invocation.output_dir together with a resolved-config snapshot.
int run(const CliInvocation& invocation, std::ostream& out, std::ostream& err);

}  // namespace cscal
