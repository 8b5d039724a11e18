#pragma once

// In-process entry points for an external inference loop. Everything here
// calls the same functions as the CLI, so results match the file path bit
// for bit on float64.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegrob/attribution/relevance.hpp"
#include "eegrob/core/manifest.hpp"
#include "eegrob/dsp/filter_spec.hpp"
#include "eegrob/eval/predictions.hpp"
#include "eegrob/pipeline/perturbation.hpp"

namespace eegrob::bridge {

/// Row-major channels x samples array.
struct Array2d {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::string> channel_names;
};

/// Immutable after construction; perturb() may be called from many threads.
class BridgeSession {
 public:
  /// `master_seed` fills the seed of specs that omit one; `task` is the
  /// fallback for region perturbations.
  BridgeSession(DatasetManifest manifest, std::uint64_t master_seed, dsp::FilterSpec filter,
                std::optional<std::string> task = std::nullopt);

  const DatasetManifest& manifest() const noexcept { return manifest_; }

  /// `data` holds manifest-montage channels x samples for trial `trial_id`;
  /// it is copied, never modified. Remove-mode dropout shrinks the rows.
  Array2d perturb(std::span<const double> data, std::size_t rows, std::size_t cols, const std::string& trial_id,
                  const nlohmann::json& spec) const;
  Array2d perturb(std::span<const double> data, std::size_t rows, std::size_t cols, const std::string& trial_id,
                  const PerturbationSpec& spec) const;

  PerturbationSpec parse_spec(const nlohmann::json& spec) const;

 private:
  DatasetManifest manifest_;
  std::uint64_t master_seed_;
  PerturbationContext context_;
};

/// Appends prediction lines in the eval ingestion format. Records are
/// checked against the manifest before anything is written; appends are
/// serialized and flushed line by line.
class PredictionEmitter {
 public:
  PredictionEmitter(const DatasetManifest& manifest, const std::filesystem::path& path);
  void emit(const PredictionRecord& record);

 private:
  const DatasetManifest& manifest_;
  std::mutex mutex_;
  std::ofstream out_;
};

/// Same for relevance index lines; the tensor is written next to the index.
class RelevanceEmitter {
 public:
  RelevanceEmitter(const DatasetManifest& manifest, const std::filesystem::path& index_path);
  /// Writes `relevance` to record.tensor_path (relative to the index) and
  /// appends the record.
  void emit(const RelevanceRecord& record, const Matrix& relevance);

 private:
  const DatasetManifest& manifest_;
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::ofstream out_;
};

}  // namespace eegrob::bridge
