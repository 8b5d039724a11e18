#include "eegrob/bridge/bridge_api.hpp"

#include <fmt/format.h>

#include "eegrob/core/error.hpp"
#include "eegrob/core/tensor_blob.hpp"

namespace eegrob::bridge {

BridgeSession::BridgeSession(DatasetManifest manifest, std::uint64_t master_seed, dsp::FilterSpec filter,
                             std::optional<std::string> task)
    : manifest_(std::move(manifest)), master_seed_(master_seed) {
  manifest_.validate();
  filter.validate();
  context_.filter = std::move(filter);
  context_.dataset = manifest_.name;
  context_.task = std::move(task);
}

PerturbationSpec BridgeSession::parse_spec(const nlohmann::json& spec) const {
  return perturbation_spec_from_json(spec, {}, master_seed_);
}

Array2d BridgeSession::perturb(std::span<const double> data, std::size_t rows, std::size_t cols,
                               const std::string& trial_id, const nlohmann::json& spec) const {
  return perturb(data, rows, cols, trial_id, parse_spec(spec));
}

Array2d BridgeSession::perturb(std::span<const double> data, std::size_t rows, std::size_t cols,
                               const std::string& trial_id, const PerturbationSpec& spec) const {
  const auto index = manifest_.trial_index(trial_id);
  if (!index) throw ValidationError("trial_id", "\"" + trial_id + "\" is not in the manifest");
  const auto& names = manifest_.montage.channel_names;
  if (rows != names.size()) {
    throw ValidationError("array", fmt::format("{} rows for a {}-channel montage", rows, names.size()));
  }
  if (data.size() != rows * cols || cols == 0) {
    throw ValidationError("array", fmt::format("{} values for shape {}x{}", data.size(), rows, cols));
  }
  const TrialTensor trial(Matrix(rows, cols, std::vector<double>(data.begin(), data.end())), manifest_.rate_hz, names);
  const auto out = apply_perturbation(trial, spec, *index, context_);
  return {std::vector<double>(out.data().values().begin(), out.data().values().end()), out.channels(), out.samples(),
          out.channel_names()};
}

PredictionEmitter::PredictionEmitter(const DatasetManifest& manifest, const std::filesystem::path& path)
    : manifest_(manifest), out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw Error("cannot open " + path.string() + " for appending");
}

void PredictionEmitter::emit(const PredictionRecord& record) {
  // Round-trip through JSON so the same field checks as ingestion apply.
  const auto line = to_json(record);
  const std::vector<PredictionRecord> one{prediction_from_json(line)};
  check_predictions(manifest_, one);
  std::lock_guard lock(mutex_);
  out_ << line.dump() << '\n';
  out_.flush();
  if (!out_) throw Error("prediction append failed");
}

RelevanceEmitter::RelevanceEmitter(const DatasetManifest& manifest, const std::filesystem::path& index_path)
    : manifest_(manifest), dir_(index_path.parent_path()), out_(index_path, std::ios::binary | std::ios::app) {
  if (!out_) throw Error("cannot open " + index_path.string() + " for appending");
}

void RelevanceEmitter::emit(const RelevanceRecord& record, const Matrix& relevance) {
  const auto line = to_json(record);
  relevance_record_from_json(line);
  const auto index = manifest_.trial_index(record.trial_id);
  if (!index) throw ValidationError("trial_id", "\"" + record.trial_id + "\" is not in the manifest");
  if (record.true_class != manifest_.trials[*index].label) {
    throw ValidationError("true", "does not match the manifest label of " + record.trial_id);
  }
  const auto n_classes = static_cast<int>(manifest_.classes.size());
  if (record.pred < 0 || record.pred >= n_classes) throw ValidationError("pred", "class index out of range");
  if (!relevance.all_finite()) throw ValidationError("relevance", "non-finite values");
  const std::filesystem::path tensor = record.tensor_path;
  std::lock_guard lock(mutex_);
  write_tensor_blob(Tensor::from_matrix(relevance, Dtype::float32), tensor.is_absolute() ? tensor : dir_ / tensor);
  out_ << line.dump() << '\n';
  out_.flush();
  if (!out_) throw Error("relevance append failed");
}

}  // namespace eegrob::bridge
