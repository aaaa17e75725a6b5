#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "privrec/experiments.hpp"
#include "privrec/protocol.hpp"
#include "privrec/rating_matrix.hpp"

namespace privrec::config {

enum class DatasetKind { synthetic_clustered, synthetic_uniform, ratings_file };

enum class ParticipantSelection { all_other_users, first_n, explicit_rows };

/// Fully resolved run configuration. Parsing rejects unknown keys and
/// validates every invariant up front; `resolved` is the effective
/// configuration (defaults filled in) that reproduces the run when fed
/// back.
struct RunConfig {
  std::uint64_t seed = 1;

  DatasetKind dataset_kind = DatasetKind::synthetic_clustered;
  std::filesystem::path dataset_path;
  RatingsFileFormat file_format;
  UniformSyntheticSpec uniform;
  ClusteredSyntheticSpec clustered;
  std::optional<std::filesystem::path> item_meta_path;

  obf::ObfuscationPlan plan;
  int trust_z = 10;
  Index min_shared = 2;
  std::uint64_t lsh_seed = 0;
  int lsh_signature_length = 16;

  double obfuscate_trust_level = 1.0;

  protocol::SimulationConfig sim;
  ParticipantSelection participant_selection = ParticipantSelection::all_other_users;
  Index participant_count = 0;
  std::vector<Index> participant_rows;
  Index n_superpeers = 0;  // 0: use sim.group_size as configured
  bool allow_small_keys = false;
  bool audit_payloads = true;

  eval::KeyLengthSweepConfig fig3;
  eval::DataSizeSweepConfig fig4;
  eval::DimensionSweepConfig fig56;
  eval::ParticipationSweepConfig fig7;

  nlohmann::json resolved;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

RatingMatrix load_dataset(const RunConfig& cfg);
std::vector<ItemMeta> load_catalog(const RunConfig& cfg, Index n_items);

/// Participant rows for the simulate verb, resolved against the dataset.
std::vector<Index> resolve_participants(const RunConfig& cfg, const RatingMatrix& data);

}  // namespace privrec::config
