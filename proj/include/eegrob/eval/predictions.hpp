#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "eegrob/core/manifest.hpp"

namespace eegrob {

/// One prediction for one trial under one condition. JSON Lines keys:
/// trial_id, fold, condition, true, pred, confidence, and optionally probs
/// and model.
struct PredictionRecord {
  std::string trial_id;
  int fold = 0;
  std::string condition;
  int true_class = 0;
  int pred = 0;
  double confidence = 0.0;
  std::optional<std::vector<double>> probs;
  std::optional<std::string> model;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

nlohmann::json to_json(const PredictionRecord& record);
/// `where` prefixes field names in errors (e.g. "line 12").
PredictionRecord prediction_from_json(const nlohmann::json& doc, const std::string& where = {});

std::string to_jsonl(const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> parse_predictions_jsonl(std::string_view text);
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);
void write_predictions(const std::vector<PredictionRecord>& records, const std::filesystem::path& path);

/// Trial ids exist, folds agree with the manifest, classes are in range and
/// (trial, condition, model) pairs are unique.
void check_predictions(const DatasetManifest& manifest, const std::vector<PredictionRecord>& records);

}  // namespace eegrob
