// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cscal/train.hpp"

namespace cscal {

/// A fully materialized experiment description: the validated TrainConfig,
/// the canonical JSON with every default filled in, and the content hash of
/// that JSON (FNV-1a over the dump, excluding any config_hash field).
struct ResolvedConfig {
  TrainConfig config;
  nlohmann::json resolved;
  std::string hash;
};

/// Applies dotted-key overrides ("losses.beta=0.05") on top of the raw
/// config, then validates strictly: unknown keys anywhere are rejected, and
/// optimizer.lr, schedule.epochs, and data.kind are required.
ResolvedConfig resolve_config(const nlohmann::json& raw,
                              const std::vector<std::string>& overrides = {});

ResolvedConfig resolve_config_file(const std::filesystem::path& path,
                                   const std::vector<std::string>& overrides = {});

std::string config_hash_hex(const nlohmann::json& resolved);

/// resolved config + its hash, ready to write as the run snapshot.
nlohmann::json snapshot_json(const ResolvedConfig& rc);

}  // namespace cscal
