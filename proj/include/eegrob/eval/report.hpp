#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "eegrob/core/manifest.hpp"
#include "eegrob/eval/metrics.hpp"
#include "eegrob/eval/predictions.hpp"

namespace eegrob {

/// Balanced accuracy of one model on one task under one condition.
struct ConditionCell {
  std::string task;
  std::string model;
  std::string condition;
  int n_classes = 0;
  std::map<int, double> fold_bacc;
  FoldStats stats;

  friend bool operator==(const ConditionCell&, const ConditionCell&) = default;
};

struct DegradationCell {
  std::string task;
  std::string model;
  std::string condition;
  double delta_pp = 0.0;
};

struct EvalCells {
  std::string clean_condition = "clean";
  std::vector<ConditionCell> cells;

  friend bool operator==(const EvalCells&, const EvalCells&) = default;
};

/// Groups records by (model, condition, fold), scores each fold and
/// aggregates. The task name is the manifest name; records without a model
/// field are attributed to `default_model`.
EvalCells evaluate(const DatasetManifest& manifest, const std::vector<PredictionRecord>& records,
                   const std::string& clean_condition = "clean", const std::string& default_model = "model");

/// Concatenates cell sets; duplicates and mixed class counts per task are
/// errors.
EvalCells merge_cells(const std::vector<EvalCells>& parts);

/// Delta against the clean cell of the same (task, model) for every
/// non-clean cell.
std::vector<DegradationCell> degradation_cells(const EvalCells& cells);

nlohmann::json to_json(const EvalCells& cells);
EvalCells eval_cells_from_json(const nlohmann::json& doc);

struct ReportOptions {
  std::set<std::string> exclude_from_average;
};

struct ReportTables {
  std::string clean_csv;
  std::string clean_md;
  std::string degradation_csv;
  std::string degradation_md;
};

/// Models ranked by average (descending, ties by name). Clean tables show
/// per-task mean +- fold std and an Average of mean +- spread across tasks;
/// degradation tables show percentage points per task and their mean.
ReportTables render_report(const EvalCells& cells, const ReportOptions& options = {});

/// Writes clean.{csv,md}, degradation.{csv,md} and cells.json into `dir`.
void emit_report(const EvalCells& cells, const std::filesystem::path& dir, const ReportOptions& options = {});

}  // namespace eegrob
