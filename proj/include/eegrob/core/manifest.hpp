#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegrob/core/trial.hpp"

namespace eegrob {

struct TrialRecord {
  std::string id;
  std::string subject;
  int label = 0;
  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

/// Fold index -> held-out subject ids.
using FoldMap = std::map<int, std::vector<std::string>>;

struct DatasetManifest {
  std::string name;
  double rate_hz = 0.0;
  Montage montage;
  std::vector<std::string> classes;
  std::vector<TrialRecord> trials;
  FoldMap folds;

  /// Checks every manifest invariant; throws ValidationError naming the
  /// invariant (and the fold indices or trial involved).
  void validate() const;

  /// Sorted, de-duplicated subject ids referenced by the trials.
  std::vector<std::string> subjects() const;
  std::optional<int> fold_of_subject(const std::string& subject) const;
  /// Fold of a trial; throws if the trial's subject is in no fold.
  int fold_of_trial(const TrialRecord& trial) const;
  std::optional<std::size_t> trial_index(const std::string& trial_id) const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

nlohmann::json manifest_to_json(const DatasetManifest& manifest);
/// Schema errors name the offending field (e.g. `trials[3].label`).
DatasetManifest manifest_from_json(const nlohmann::json& doc);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace eegrob
