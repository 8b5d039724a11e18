#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "eegrob/core/manifest.hpp"
#include "eegrob/core/trial.hpp"
#include "eegrob/dsp/filter_spec.hpp"

namespace eegrob {

// A dataset directory holds manifest.json and trials/<trial_id>.eegt, one
// channels x samples blob per trial in manifest order.

std::filesystem::path trial_blob_path(const std::filesystem::path& root, const std::string& trial_id);

/// Reads trial `index` and checks it against the manifest montage.
TrialTensor read_trial(const std::filesystem::path& root, const DatasetManifest& manifest, std::size_t index);

/// Writes the blob of one trial (float64, atomic).
void write_trial(const std::filesystem::path& root, const std::string& trial_id, const TrialTensor& trial);

/// Class-conditional sinusoids over a pink background on the 64-channel
/// 10-10 montage, with 50 Hz mains and per-channel offsets the preprocessing
/// chain has to remove.
struct SyntheticConfig {
  std::string name = "synthetic";
  int subjects = 10;
  int trials_per_subject = 12;
  int classes = 2;
  double raw_rate_hz = 250.0;
  double seconds = 2.0;
  int folds = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

nlohmann::json to_json(const SyntheticConfig& config);
SyntheticConfig synthetic_config_from_json(const nlohmann::json& doc);

struct SyntheticDataset {
  DatasetManifest manifest;         // rate is the raw rate
  std::vector<TrialTensor> trials;  // raw, manifest order
};

SyntheticDataset make_synthetic(const SyntheticConfig& config);

/// One raw trial, deterministic in (config, index).
TrialTensor synthetic_trial(const SyntheticConfig& config, std::size_t index, int label);

/// Manifest after preprocessing: same trials and folds at the filter rate.
DatasetManifest preprocessed_manifest(DatasetManifest raw, const dsp::FilterSpec& filter);

}  // namespace eegrob
